use crate::error::{Error, Result};
use crate::volume::{check_same_grid, BinaryMask3D, Volume3D};

/// Min–max scale `v` using the extremes found under `mask`, then clamp
/// every voxel (inside or outside the mask) to `[0, 1]`.
pub fn normalize_to_mask(v: &Volume3D, mask: &BinaryMask3D) -> Result<Volume3D> {
    check_same_grid(v.grid(), mask.grid())?;
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for (&x, &m) in v.data().iter().zip(mask.data()) {
        if m {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > hi {
        return Err(Error::EmptyMask("normalization mask"));
    }
    if lo == hi {
        return Err(Error::DegenerateIntensityRange(lo as f64));
    }
    let (lo, range) = (lo as f64, (hi - lo) as f64);
    Ok(v.map(|x| (((x as f64) - lo) / range).clamp(0.0, 1.0) as f32))
}

/// Min–max scale over the whole volume.
pub fn normalize_min_max(v: &Volume3D) -> Result<Volume3D> {
    normalize_to_mask(v, &v.map(|_| true))
}
