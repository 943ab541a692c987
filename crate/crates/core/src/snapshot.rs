//! Binary snapshot files.
//!
//! Layout (little-endian): magic `NLDF`, `u32` version, `u32` dimension,
//! `u64` points per axis, `f64` half-length, `f64` time, then
//! `points_per_axis^N` `f64` values in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const MAGIC: [u8; 4] = *b"NLDF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8;

pub fn encode(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dimension() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points_per_axis() as u64).to_le_bytes());
    out.extend_from_slice(&grid.half_length().to_le_bytes());
    out.extend_from_slice(&field.time().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptSnapshot(msg.into())
}

fn read_array<const W: usize>(bytes: &[u8], at: usize) -> [u8; W] {
    bytes[at..at + W].try_into().expect("bounds checked by caller")
}

/// Parses a snapshot from raw bytes. Never panics on malformed input.
pub fn decode(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        return Err(corrupt(format!("{} bytes is shorter than the {HEADER_LEN}-byte header", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(corrupt(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(read_array(bytes, 4));
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let dimension = u32::from_le_bytes(read_array(bytes, 8)) as usize;
    let points = u64::from_le_bytes(read_array(bytes, 12));
    let half_length = f64::from_le_bytes(read_array(bytes, 20));
    let time = f64::from_le_bytes(read_array(bytes, 28));
    let points = usize::try_from(points).map_err(|_| corrupt("points_per_axis overflows usize"))?;
    let grid = Grid::new(dimension, points, half_length).map_err(|e| corrupt(format!("bad grid header: {e}")))?;
    if !(time.is_finite() && time >= 0.0) {
        return Err(corrupt(format!("bad time stamp {time}")));
    }
    let expected = points
        .checked_pow(dimension as u32)
        .and_then(|count| count.checked_mul(8))
        .and_then(|body| body.checked_add(HEADER_LEN))
        .ok_or_else(|| corrupt("declared size overflows"))?;
    if bytes.len() != expected {
        return Err(corrupt(format!("length {} does not match declared {expected}", bytes.len())));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks_exact(8)")))
        .collect();
    Field::new(grid, values, time).map_err(|e| corrupt(e.to_string()))
}

/// Writes `data` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file_name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(data).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

pub fn save(field: &Field, path: &Path) -> Result<()> {
    write_atomic(path, &encode(field))
}

pub fn load(path: &Path) -> Result<Field> {
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    decode(&bytes)
}
