//! Slice-wise batching between volumes and network tensors.
//!
//! An axial plane of an `nx × ny` volume becomes an `h = ny` by `w = nx`
//! channel plane, so both layouts are row-major in the same order.

use crate::arch::Network;
use crate::diff::{Array4, Shape4};
use crate::error::{Error, Result};
use crate::volume::{check_same_grid, BinaryMask3D, Volume, Volume3D};

/// Stack axial planes `zs` of every channel volume into an `[n, c, ny, nx]` batch.
pub fn slice_batch(channels: &[Volume3D], zs: &[usize]) -> Result<Array4> {
    let first = channels.first().ok_or_else(|| Error::InvalidArgument("no input channels".into()))?;
    for ch in &channels[1..] {
        check_same_grid(first.grid(), ch.grid())?;
    }
    let [nx, ny, _] = first.dims();
    let plane = nx * ny;
    let mut data = Vec::with_capacity(zs.len() * channels.len() * plane);
    for &z in zs {
        for ch in channels {
            data.extend(ch.data()[z * plane..(z + 1) * plane].iter().map(|&v| v as f64));
        }
    }
    Array4::from_vec(Shape4::new(zs.len(), channels.len(), ny, nx), data)
}

pub fn label_batch(label: &BinaryMask3D, zs: &[usize]) -> Result<Array4> {
    let [nx, ny, _] = label.dims();
    let plane = nx * ny;
    let mut data = Vec::with_capacity(zs.len() * plane);
    for &z in zs {
        data.extend(label.data()[z * plane..(z + 1) * plane].iter().map(|&b| if b { 1.0 } else { 0.0 }));
    }
    Array4::from_vec(Shape4::new(zs.len(), 1, ny, nx), data)
}

/// Per-voxel foreground probability, predicted one batch of axial slices at a time.
pub fn predict_volume(net: &Network, channels: &[Volume3D], batch_size: usize) -> Result<Volume3D> {
    let first = channels.first().ok_or_else(|| Error::InvalidArgument("no input channels".into()))?;
    let grid = *first.grid();
    let nz = grid.dims[2];
    let mut probs = Vec::with_capacity(grid.len());
    let zs: Vec<usize> = (0..nz).collect();
    for chunk in zs.chunks(batch_size.max(1)) {
        let out = net.forward(&slice_batch(channels, chunk)?)?;
        probs.extend(out.data().iter().map(|&p| p as f32));
    }
    Volume::from_vec(grid, probs)
}

pub fn threshold(probs: &Volume3D, threshold: f32) -> BinaryMask3D {
    probs.map(|p| p > threshold)
}
