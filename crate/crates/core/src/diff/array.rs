use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// (batch, channels, height, width).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape4 {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape4 {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self { n, c, h, w }
    }

    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    /// Elements per batch item.
    pub fn sample(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }
}

impl fmt::Display for Shape4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.n, self.c, self.h, self.w)
    }
}

/// Dense rank-4 array, row-major within each channel plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Array4 {
    shape: Shape4,
    data: Vec<f64>,
}

impl Array4 {
    pub fn zeros(shape: Shape4) -> Self {
        assert!(shape.as_array().iter().all(|&d| d >= 1), "Array4 dims must be >= 1, got {shape}");
        Self { data: vec![0.0; shape.len()], shape }
    }

    pub fn filled(shape: Shape4, value: f64) -> Self {
        let mut a = Self::zeros(shape);
        a.data.fill(value);
        a
    }

    pub fn from_vec(shape: Shape4, data: Vec<f64>) -> Result<Self> {
        if shape.as_array().iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("Array4 dims must be >= 1, got {shape}")));
        }
        if data.len() != shape.len() {
            return Err(Error::Shape(format!("{} values cannot fill shape {shape}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn randn(shape: Shape4, std: f64, rng: &mut impl Rng) -> Self {
        let mut a = Self::zeros(shape);
        for v in &mut a.data {
            let z: f64 = StandardNormal.sample(rng);
            *v = std * z;
        }
        a
    }

    pub fn uniform(shape: Shape4, lo: f64, hi: f64, rng: &mut impl Rng) -> Self {
        let mut a = Self::zeros(shape);
        for v in &mut a.data {
            *v = rng.random_range(lo..hi);
        }
        a
    }

    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.shape.c + c) * self.shape.h + h) * self.shape.w + w
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.offset(n, c, h, w)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, h: usize, w: usize, value: f64) {
        let i = self.offset(n, c, h, w);
        self.data[i] = value;
    }

    /// Contiguous `h × w` plane of one channel of one sample.
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let p = self.shape.plane();
        let start = (n * self.shape.c + c) * p;
        &self.data[start..start + p]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let p = self.shape.plane();
        let start = (n * self.shape.c + c) * p;
        &mut self.data[start..start + p]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// `self += other`; shapes must match.
    pub fn add_assign(&mut self, other: &Array4) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Array4) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Array4 {
        Array4 { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn bit_identical(&self, other: &Array4) -> bool {
        self.shape == other.shape && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
