//! Internal `.vol` raw format for phantom and intermediate artifacts.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "WVOL"
//! 4       4     u32 format version (1)
//! 8       12    u32 nx, ny, nz
//! 20      24    f64 sx, sy, sz (mm)
//! 44      1     dtype: 0 = f32, 1 = u8 mask
//! 45      3     reserved, zero
//! 48      ..    payload, x-fastest
//! ```

use std::fs;
use std::path::Path;

use super::{BinaryMask3D, Grid, Volume, Volume3D};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WVOL";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F32 = 0,
    Mask = 1,
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format { kind: "vol", reason: reason.into() }
}

fn header(grid: &Grid, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in grid.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for s in grid.spacing {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(&[dtype as u8, 0, 0, 0]);
    out
}

fn parse(bytes: &[u8]) -> Result<(Grid, Dtype, &[u8])> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err("shorter than header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err("bad magic"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let f64_at = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(format_err(format!("unsupported version {}", u32_at(4))));
    }
    let dims = [u32_at(8), u32_at(12), u32_at(16)].map(|d| d as usize);
    let spacing = [f64_at(20), f64_at(28), f64_at(36)];
    let grid = Grid::new(dims, spacing)?;
    let dtype = match bytes[44] {
        0 => Dtype::F32,
        1 => Dtype::Mask,
        other => return Err(format_err(format!("unknown dtype {other}"))),
    };
    let width = if dtype == Dtype::F32 { 4 } else { 1 };
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != grid.len() * width {
        return Err(format_err(format!(
            "payload is {} bytes, expected {}",
            payload.len(),
            grid.len() * width
        )));
    }
    Ok((grid, dtype, payload))
}

pub fn encode_volume(v: &Volume3D) -> Vec<u8> {
    let mut out = header(v.grid(), Dtype::F32);
    for x in v.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn encode_mask(m: &BinaryMask3D) -> Vec<u8> {
    let mut out = header(m.grid(), Dtype::Mask);
    out.extend(m.data().iter().map(|&b| b as u8));
    out
}

pub fn decode_volume(bytes: &[u8]) -> Result<Volume3D> {
    let (grid, dtype, payload) = parse(bytes)?;
    if dtype != Dtype::F32 {
        return Err(format_err("expected an f32 volume, found a mask"));
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Volume::from_vec(grid, data)
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask3D> {
    let (grid, dtype, payload) = parse(bytes)?;
    if dtype != Dtype::Mask {
        return Err(format_err("expected a mask, found an f32 volume"));
    }
    if payload.iter().any(|&b| b > 1) {
        return Err(format_err("mask payload has values other than 0/1"));
    }
    Volume::from_vec(grid, payload.iter().map(|&b| b == 1).collect())
}

pub fn write_volume(v: &Volume3D, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_volume(v))?)
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume3D> {
    decode_volume(&fs::read(path)?)
}

pub fn write_mask(m: &BinaryMask3D, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_mask(m))?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask3D> {
    decode_mask(&fs::read(path)?)
}
