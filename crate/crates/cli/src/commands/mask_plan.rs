use clap::Args;
use ctc_ilme::MaskPlan;

use crate::error::CliResult;

#[derive(Args)]
pub struct MaskPlanArgs {
    /// Number of frames T.
    frames: usize,
    /// Number of equal partitions K.
    #[arg(required_unless_present = "segments")]
    partitions: Option<usize>,
    /// Interior boundaries instead of equal partitions, e.g. `3,7`.
    #[arg(long, value_delimiter = ',', conflicts_with = "partitions")]
    segments: Option<Vec<usize>>,
}

/// One `k<TAB>start<TAB>end` line per partition, `end` exclusive.
pub fn run(args: MaskPlanArgs) -> CliResult<()> {
    let plan = match (&args.segments, args.partitions) {
        (Some(b), _) => MaskPlan::segments(args.frames, b)?,
        (None, Some(k)) => MaskPlan::equal(args.frames, k)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    for (k, r) in plan.ranges().iter().enumerate() {
        println!("{k}\t{}\t{}", r.start, r.end);
    }
    Ok(())
}
