//! Binary field snapshots.
//!
//! Little-endian layout, 40-byte header followed by the samples:
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 4    | magic `DNF1`                    |
//! | 4      | 4    | format version (`u32`, = 1)     |
//! | 8      | 4    | `n_x` (`u32`)                   |
//! | 12     | 4    | `n_xi` (`u32`)                  |
//! | 16     | 8    | `L_x` (`f64`)                   |
//! | 24     | 8    | `L_xi` (`f64`)                  |
//! | 32     | 8    | time `t` (`f64`)                |
//! | 40     | 8·n_x·n_xi | values, `x` outer, `ξ` inner |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{build_grid, Field, GridSpec};

pub const MAGIC: &[u8; 4] = b"DNF1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n_x: u32,
    pub n_xi: u32,
    pub l_x: f64,
    pub l_xi: f64,
    pub time: f64,
}

impl SnapshotHeader {
    pub fn payload_len(&self) -> usize {
        8 * self.n_x as usize * self.n_xi as usize
    }
}

pub fn encode_snapshot(field: &Field, time: f64) -> Vec<u8> {
    let spec = field.grid().spec();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(spec.n_x as u32).to_le_bytes());
    buf.extend_from_slice(&(spec.n_xi as u32).to_le_bytes());
    buf.extend_from_slice(&spec.l_x.to_le_bytes());
    buf.extend_from_slice(&spec.l_xi.to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn write_snapshot(field: &Field, time: f64, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_snapshot(field, time))?;
    w.flush()?;
    Ok(())
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn le_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode_header(bytes: &[u8], path: &Path) -> Result<SnapshotHeader> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!(
            "size mismatch: {} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("bad magic bytes".into()));
    }
    let version = le_u32(bytes, 4);
    if version != VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    Ok(SnapshotHeader {
        n_x: le_u32(bytes, 8),
        n_xi: le_u32(bytes, 12),
        l_x: le_f64(bytes, 16),
        l_xi: le_f64(bytes, 24),
        time: le_f64(bytes, 32),
    })
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(Field, SnapshotHeader)> {
    let header = decode_header(bytes, path)?;
    let expected = HEADER_LEN + header.payload_len();
    if bytes.len() != expected {
        return Err(Error::Snapshot {
            path: path.to_path_buf(),
            reason: format!("size mismatch: expected {expected} bytes, found {}", bytes.len()),
        });
    }
    let grid: Arc<_> = build_grid(GridSpec::new(
        header.n_x as usize,
        header.n_xi as usize,
        header.l_x,
        header.l_xi,
    ))?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field::from_values(&grid, values)?, header))
}

pub fn read_snapshot(path: &Path) -> Result<(Field, SnapshotHeader)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes, path)
}
