//! Single-file NIfTI-1 (`.nii`) reader and writer.
//!
//! Only the subset needed for co-registered scalar volumes is handled:
//! uncompressed files, at most three non-trivial axes, and the `uint8`,
//! `int16` and `float32` datatypes. Orientation fields are ignored; voxel
//! spacing comes from `pixdim[1..=3]`.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{BinaryMask3D, Grid, Volume, Volume3D};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DEFAULT_VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("wrong magic {0:?}, expected single-file NIfTI-1 \"n+1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("compressed stream (gzip); decompress the file first")]
    Compressed,
    #[error("{0} non-trivial axes; only 3-D volumes are supported")]
    TooManyDimensions(usize),
    #[error("truncated payload: need {expected} bytes, file has {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("invalid voxel spacing {0:?}")]
    InvalidSpacing([f32; 3]),
    #[error("value {value} does not fit datatype {datatype:?}")]
    Overflow { value: f32, datatype: Datatype },
    #[error("mask voxel has value {0}; masks must be 0 or 1")]
    NotBinary(f32),
}

type Result<T> = std::result::Result<T, NiftiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    Uint8,
    Int16,
    Float32,
}

impl Datatype {
    pub fn code(self) -> i16 {
        match self {
            Datatype::Uint8 => 2,
            Datatype::Int16 => 4,
            Datatype::Float32 => 16,
        }
    }

    pub fn from_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(Datatype::Uint8),
            4 => Ok(Datatype::Int16),
            16 => Ok(Datatype::Float32),
            other => Err(NiftiError::UnsupportedDatatype(other)),
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            Datatype::Uint8 => 1,
            Datatype::Int16 => 2,
            Datatype::Float32 => 4,
        }
    }
}

/// The header fields this reader interprets.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeaderSubset {
    pub dims: [usize; 3],
    pub datatype: Datatype,
    pub pixdim: [f32; 3],
    pub vox_offset: usize,
    pub big_endian: bool,
    pub scl_slope: f32,
    pub scl_inter: f32,
}

struct Reader<'a> {
    bytes: &'a [u8],
    big_endian: bool,
}

impl Reader<'_> {
    fn i16(&self, at: usize) -> i16 {
        let b = [self.bytes[at], self.bytes[at + 1]];
        if self.big_endian { i16::from_be_bytes(b) } else { i16::from_le_bytes(b) }
    }

    fn i32(&self, at: usize) -> i32 {
        let b: [u8; 4] = self.bytes[at..at + 4].try_into().unwrap();
        if self.big_endian { i32::from_be_bytes(b) } else { i32::from_le_bytes(b) }
    }

    fn f32(&self, at: usize) -> f32 {
        let b: [u8; 4] = self.bytes[at..at + 4].try_into().unwrap();
        if self.big_endian { f32::from_be_bytes(b) } else { f32::from_le_bytes(b) }
    }
}

/// Parse and validate the 348-byte header at the start of `bytes`.
pub fn parse_header(bytes: &[u8]) -> Result<NiftiHeaderSubset> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        return Err(NiftiError::Compressed);
    }
    if bytes.len() < HEADER_SIZE {
        return Err(NiftiError::MalformedHeader(format!(
            "file is {} bytes, shorter than the {HEADER_SIZE}-byte header",
            bytes.len()
        )));
    }
    let raw = [bytes[0], bytes[1], bytes[2], bytes[3]];
    let big_endian = match (i32::from_le_bytes(raw), i32::from_be_bytes(raw)) {
        (348, _) => false,
        (_, 348) => true,
        (le, _) => return Err(NiftiError::MalformedHeader(format!("sizeof_hdr is {le}, expected 348"))),
    };
    let r = Reader { bytes, big_endian };
    debug_assert_eq!(r.i32(offsets::SIZEOF_HDR), 348);

    let magic: [u8; 4] = bytes[offsets::MAGIC..offsets::MAGIC + 4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(NiftiError::BadMagic(magic));
    }

    let ndim = r.i16(offsets::DIM);
    if !(1..=7).contains(&ndim) {
        return Err(NiftiError::MalformedHeader(format!("dim[0] = {ndim} outside 1..=7")));
    }
    let ndim = ndim as usize;
    let mut dims = [1usize; 3];
    let mut extra = 0;
    for axis in 1..=ndim {
        let d = r.i16(offsets::DIM + 2 * axis);
        if d < 1 {
            return Err(NiftiError::MalformedHeader(format!("dim[{axis}] = {d} is not positive")));
        }
        if axis <= 3 {
            dims[axis - 1] = d as usize;
        } else if d > 1 {
            extra += 1;
        }
    }
    if extra > 0 {
        return Err(NiftiError::TooManyDimensions(3 + extra));
    }

    let datatype = Datatype::from_code(r.i16(offsets::DATATYPE))?;
    let bitpix = r.i16(offsets::BITPIX);
    if bitpix as usize != datatype.bytes() * 8 {
        return Err(NiftiError::MalformedHeader(format!(
            "bitpix {bitpix} inconsistent with datatype {datatype:?}"
        )));
    }

    let pixdim = [1, 2, 3].map(|i| r.f32(offsets::PIXDIM + 4 * i));
    if pixdim.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(NiftiError::InvalidSpacing(pixdim));
    }

    let vox_offset = r.f32(offsets::VOX_OFFSET);
    if !vox_offset.is_finite() || vox_offset < HEADER_SIZE as f32 || vox_offset.fract() != 0.0 {
        return Err(NiftiError::MalformedHeader(format!("vox_offset {vox_offset} is invalid")));
    }

    Ok(NiftiHeaderSubset {
        dims,
        datatype,
        pixdim,
        vox_offset: vox_offset as usize,
        big_endian,
        scl_slope: r.f32(offsets::SCL_SLOPE),
        scl_inter: r.f32(offsets::SCL_INTER),
    })
}

/// Decode a complete in-memory `.nii` file.
pub fn decode(bytes: &[u8]) -> Result<Volume3D> {
    let h = parse_header(bytes)?;
    let count: usize = h.dims.iter().product();
    let expected = h.vox_offset + count * h.datatype.bytes();
    if bytes.len() < expected {
        return Err(NiftiError::Truncated { expected, actual: bytes.len() });
    }
    let payload = &bytes[h.vox_offset..expected];
    let r = Reader { bytes: payload, big_endian: h.big_endian };
    let mut data: Vec<f32> = match h.datatype {
        Datatype::Uint8 => payload.iter().map(|&b| b as f32).collect(),
        Datatype::Int16 => (0..count).map(|i| r.i16(2 * i) as f32).collect(),
        Datatype::Float32 => (0..count).map(|i| r.f32(4 * i)).collect(),
    };
    if h.scl_slope != 0.0 && h.scl_slope.is_finite() {
        for v in &mut data {
            *v = h.scl_slope * *v + h.scl_inter;
        }
    }
    let spacing = h.pixdim.map(f64::from);
    let grid = Grid::new(h.dims, spacing).map_err(|_| NiftiError::InvalidSpacing(h.pixdim))?;
    Ok(Volume::from_vec(grid, data).expect("payload length checked above"))
}

/// Encode a volume as a little-endian single-file NIfTI-1 image.
pub fn encode(v: &Volume3D, datatype: Datatype) -> Result<Vec<u8>> {
    let mut out = vec![0u8; DEFAULT_VOX_OFFSET];
    let put_i16 = |buf: &mut [u8], at: usize, x: i16| buf[at..at + 2].copy_from_slice(&x.to_le_bytes());
    let put_f32 = |buf: &mut [u8], at: usize, x: f32| buf[at..at + 4].copy_from_slice(&x.to_le_bytes());

    out[offsets::SIZEOF_HDR..4].copy_from_slice(&348i32.to_le_bytes());
    let dims = v.dims();
    if dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(NiftiError::MalformedHeader(format!("dims {dims:?} exceed the NIfTI-1 range")));
    }
    put_i16(&mut out, offsets::DIM, 3);
    for (axis, &d) in dims.iter().enumerate() {
        put_i16(&mut out, offsets::DIM + 2 * (axis + 1), d as i16);
    }
    for axis in 4..8 {
        put_i16(&mut out, offsets::DIM + 2 * axis, 1);
    }
    put_i16(&mut out, offsets::DATATYPE, datatype.code());
    put_i16(&mut out, offsets::BITPIX, (datatype.bytes() * 8) as i16);
    put_f32(&mut out, offsets::PIXDIM, 1.0);
    for (axis, &s) in v.spacing().iter().enumerate() {
        put_f32(&mut out, offsets::PIXDIM + 4 * (axis + 1), s as f32);
    }
    put_f32(&mut out, offsets::VOX_OFFSET, DEFAULT_VOX_OFFSET as f32);
    put_f32(&mut out, offsets::SCL_SLOPE, 0.0);
    // millimetres
    out[offsets::XYZT_UNITS] = 2;
    out[offsets::MAGIC..offsets::MAGIC + 4].copy_from_slice(MAGIC);

    out.reserve(v.data().len() * datatype.bytes());
    for &x in v.data() {
        match datatype {
            Datatype::Float32 => out.extend_from_slice(&x.to_le_bytes()),
            Datatype::Uint8 => out.push(integral_in_range(x, 0.0, 255.0, datatype)? as u8),
            Datatype::Int16 => {
                let i = integral_in_range(x, i16::MIN as f32, i16::MAX as f32, datatype)? as i16;
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
    }
    Ok(out)
}

fn integral_in_range(x: f32, lo: f32, hi: f32, datatype: Datatype) -> Result<f32> {
    if !x.is_finite() || x < lo || x > hi || x.fract() != 0.0 {
        return Err(NiftiError::Overflow { value: x, datatype });
    }
    Ok(x)
}

pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume3D> {
    decode(&fs::read(path)?)
}

pub fn write_nifti(v: &Volume3D, path: impl AsRef<Path>, datatype: Datatype) -> Result<()> {
    let bytes = encode(v, datatype)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Masks are always stored as `uint8` 0/1.
pub fn write_mask(m: &BinaryMask3D, path: impl AsRef<Path>) -> Result<()> {
    write_nifti(&m.map(|b| if b { 1.0 } else { 0.0 }), path, Datatype::Uint8)
}

/// Read a mask; every voxel must be exactly 0 or 1.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask3D> {
    let v = read_nifti(path)?;
    if let Some(&bad) = v.data().iter().find(|&&x| x != 0.0 && x != 1.0) {
        return Err(NiftiError::NotBinary(bad));
    }
    Ok(v.map(|x| x == 1.0))
}
