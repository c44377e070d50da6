pub mod decode;
pub mod diagnose;
pub mod eval;
pub mod lm_score;
pub mod make_toy;
pub mod mask_plan;

use std::path::Path;

use crate::error::{CliError, CliResult};

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))
}
