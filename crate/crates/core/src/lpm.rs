//! LPM binary format: `LPM1`, u32 LE frame count, u32 LE vocabulary size,
//! then frames·vocab IEEE-754 f32 LE values in row-major order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::LogPosteriorMatrix;

pub const MAGIC: &[u8; 4] = b"LPM1";
const HEADER_LEN: usize = 12;

pub fn encode(matrix: &LogPosteriorMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * matrix.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(matrix.frames() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.vocab_size() as u32).to_le_bytes());
    for v in matrix.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn parse_header(bytes: &[u8], context: &str) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(context, "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(
            context,
            format!("bad magic {:?}, expected \"LPM1\"", String::from_utf8_lossy(&bytes[..4])),
        ));
    }
    let frames = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let vocab = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    Ok((frames, vocab))
}

pub fn decode(bytes: &[u8], context: &str) -> Result<LogPosteriorMatrix> {
    let (frames, vocab) = parse_header(bytes, context)?;
    let expected = frames
        .checked_mul(vocab)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(context, "dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::format(
            context,
            format!(
                "truncated payload: {frames}x{vocab} needs {expected} bytes, found {}",
                payload.len()
            ),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            context,
            format!("{} trailing bytes after payload", payload.len() - expected),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    LogPosteriorMatrix::new(frames, vocab, data).map_err(|e| match e {
        Error::Usage(msg) => Error::format(context, msg),
        other => other,
    })
}

pub fn load_lpm(path: impl AsRef<Path>) -> Result<LogPosteriorMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

pub fn store_lpm(matrix: &LogPosteriorMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(matrix)).map_err(|e| Error::io(path, e))
}

/// Reads only the header, returning `(frames, vocab_size)`.
pub fn read_dimensions(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = f.read(&mut buf[filled..]).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    parse_header(&buf[..filled], &path.display().to_string())
}
