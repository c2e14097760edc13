//! Volumetric scalar grids, binary masks and axial slicing.
//!
//! Voxels are stored x-fastest: the linear index of `(x, y, z)` is
//! `x + nx * (y + ny * z)`. An axial plane is the set of voxels sharing `z`.

pub mod nifti;
pub mod raw;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid geometry shared by every volume in a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Millimetres per voxel along x, y, z.
    pub spacing: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("grid dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be finite and positive, got {spacing:?}"
            )));
        }
        Ok(Self { dims, spacing })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Same dims; spacing is compared too since inputs are assumed co-registered.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }
}

/// A 3-D grid of values with voxel spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    grid: Grid,
    data: Vec<T>,
}

/// Scalar intensity volume (T1, FLAIR, probability maps).
pub type Volume3D = Volume<f32>;
/// Binary mask; `true` is foreground.
pub type BinaryMask3D = Volume<bool>;

impl<T: Copy> Volume<T> {
    pub fn from_vec(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                grid.dims
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn filled(grid: Grid, value: T) -> Self {
        Self { data: vec![value; grid.len()], grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.grid.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: T) {
        let i = self.grid.index(x, y, z);
        self.data[i] = value;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        Volume { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Planes of constant z, in increasing z.
    pub fn axial_slices(&self) -> Vec<Plane<T>> {
        let [nx, ny, _] = self.grid.dims;
        self.data
            .chunks_exact(nx * ny)
            .map(|chunk| Plane { nx, ny, data: chunk.to_vec() })
            .collect()
    }

    /// Inverse of [`Volume::axial_slices`].
    pub fn stack_slices(planes: &[Plane<T>], spacing: [f64; 3]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidArgument("stack_slices needs at least one plane".into()))?;
        let (nx, ny) = (first.nx, first.ny);
        if let Some(bad) = planes.iter().position(|p| p.nx != nx || p.ny != ny) {
            return Err(Error::Shape(format!(
                "plane {bad} is {}x{}, expected {nx}x{ny}",
                planes[bad].nx, planes[bad].ny
            )));
        }
        let grid = Grid::new([nx, ny, planes.len()], spacing)?;
        let mut data = Vec::with_capacity(grid.len());
        for p in planes {
            data.extend_from_slice(&p.data);
        }
        Ok(Self { grid, data })
    }
}

impl Volume<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Voxel-wise conjunction; grids must match.
    pub fn and(&self, other: &BinaryMask3D) -> Result<BinaryMask3D> {
        check_same_grid(&self.grid, &other.grid)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect();
        Ok(Volume { grid: self.grid, data })
    }

    pub fn is_subset_of(&self, other: &BinaryMask3D) -> bool {
        self.grid.dims == other.grid.dims && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

pub(crate) fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::Shape(format!("grid {:?} does not match {:?}", a.dims, b.dims)));
    }
    Ok(())
}

/// A 2-D plane, x-fastest (`nx` columns by `ny` rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn new(nx: usize, ny: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::Shape(format!("plane {nx}x{ny} cannot hold {} values", data.len())));
        }
        Ok(Self { nx, ny, data })
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[x + self.nx * y]
    }
}
