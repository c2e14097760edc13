//! Malformed NIfTI-1 files derived from one valid float32 image, each paired
//! with the error variant the reader must return.

use wmhseg::volume::nifti::{encode, Datatype, NiftiError};
use wmhseg::volume::{Grid, Volume, Volume3D};

pub type Expect = fn(&NiftiError) -> bool;

pub struct Malformed {
    pub name: &'static str,
    pub bytes: Vec<u8>,
    pub expect: Expect,
}

pub fn valid_volume() -> Volume3D {
    let grid = Grid::new([5, 4, 3], [1.0, 0.5, 3.0]).unwrap();
    Volume::from_vec(grid, (0..60).map(|i| i as f32 * 0.25 - 3.0).collect()).unwrap()
}

pub fn valid_file() -> Vec<u8> {
    encode(&valid_volume(), Datatype::Float32).unwrap()
}

fn with(edit: impl FnOnce(&mut Vec<u8>)) -> Vec<u8> {
    let mut b = valid_file();
    edit(&mut b);
    b
}

fn i16_at(at: usize, v: i16) -> impl FnOnce(&mut Vec<u8>) {
    move |b| b[at..at + 2].copy_from_slice(&v.to_le_bytes())
}

fn f32_at(at: usize, v: f32) -> impl FnOnce(&mut Vec<u8>) {
    move |b| b[at..at + 4].copy_from_slice(&v.to_le_bytes())
}

fn malformed(e: &NiftiError) -> bool {
    matches!(e, NiftiError::MalformedHeader(_))
}
fn bad_magic(e: &NiftiError) -> bool {
    matches!(e, NiftiError::BadMagic(_))
}
fn compressed(e: &NiftiError) -> bool {
    matches!(e, NiftiError::Compressed)
}
fn dims(e: &NiftiError) -> bool {
    matches!(e, NiftiError::TooManyDimensions(_))
}
fn datatype(e: &NiftiError) -> bool {
    matches!(e, NiftiError::UnsupportedDatatype(_))
}
fn spacing(e: &NiftiError) -> bool {
    matches!(e, NiftiError::InvalidSpacing(_))
}
fn truncated(e: &NiftiError) -> bool {
    matches!(e, NiftiError::Truncated { .. })
}

pub fn malformed_files() -> Vec<Malformed> {
    let case = |name, bytes, expect: Expect| Malformed { name, bytes, expect };
    let valid = valid_file();
    vec![
        case("empty file", Vec::new(), malformed),
        case("100-byte file", valid[..100].to_vec(), malformed),
        case("347-byte header", valid[..347].to_vec(), malformed),
        case("sizeof_hdr 0", with(|b| b[..4].copy_from_slice(&0i32.to_le_bytes())), malformed),
        case("sizeof_hdr 540 (NIfTI-2)", with(|b| b[..4].copy_from_slice(&540i32.to_le_bytes())), malformed),
        case("two-file magic ni1", with(|b| b[344..348].copy_from_slice(b"ni1\0")), bad_magic),
        case("zeroed magic", with(|b| b[344..348].fill(0)), bad_magic),
        case("gzip stream", with(|b| b[..2].copy_from_slice(&[0x1f, 0x8b])), compressed),
        case("dim[0] = 0", with(i16_at(40, 0)), malformed),
        case("dim[0] = 8", with(i16_at(40, 8)), malformed),
        case("dim[0] = -1", with(i16_at(40, -1)), malformed),
        case("dim[1] = 0", with(i16_at(42, 0)), malformed),
        case("dim[2] = -5", with(i16_at(44, -5)), malformed),
        case("4-D with two frames", with(|b| {
            i16_at(40, 4)(b);
            i16_at(48, 2)(b);
        }), dims),
        case("float64 datatype", with(i16_at(70, 64)), datatype),
        case("datatype 0", with(i16_at(70, 0)), datatype),
        case("bitpix 8 for float32", with(i16_at(72, 8)), malformed),
        case("pixdim[1] = 0", with(f32_at(80, 0.0)), spacing),
        case("pixdim[2] negative", with(f32_at(84, -0.5)), spacing),
        case("pixdim[3] NaN", with(f32_at(88, f32::NAN)), spacing),
        case("pixdim[1] infinite", with(f32_at(80, f32::INFINITY)), spacing),
        case("vox_offset 0", with(f32_at(108, 0.0)), malformed),
        case("vox_offset fractional", with(f32_at(108, 351.5)), malformed),
        case("vox_offset NaN", with(f32_at(108, f32::NAN)), malformed),
        case("payload one byte short", valid[..valid.len() - 1].to_vec(), truncated),
        case("vox_offset past the end", with(f32_at(108, 4096.0)), truncated),
        case("header only", valid[..352].to_vec(), truncated),
    ]
}
