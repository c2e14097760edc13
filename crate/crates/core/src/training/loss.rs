//! Globally class-balanced binary cross-entropy.
//!
//! ```text
//! loss = −w₊ Σ_{j∈Y₊} log ŷ_j − w₋ Σ_{j∈Y₋} log(1 − ŷ_j)
//! ```
//!
//! With the default placement `w₊ = β` and `w₋ = 1 − β`, where β is the mean
//! background fraction of the training set (see [`compute_beta`]).

use serde::{Deserialize, Serialize};

use crate::diff::Array4;
use crate::error::{Error, Result};
use crate::volume::Plane;

pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightPlacement {
    /// β multiplies the foreground sum.
    #[default]
    Paper,
    /// β multiplies the background sum, so a small β weights the foreground lightly.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub beta: f64,
    /// Probabilities are clamped to `[epsilon, 1 − epsilon]` before the logs.
    pub epsilon: f64,
    pub placement: WeightPlacement,
}

impl LossConfig {
    pub fn new(beta: f64) -> Result<Self> {
        let cfg = Self { beta, epsilon: DEFAULT_EPSILON, placement: WeightPlacement::Paper };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!("beta {} outside [0, 1]", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 0.5)", self.epsilon)));
        }
        Ok(())
    }

    /// (foreground weight, background weight).
    pub fn class_weights(&self) -> (f64, f64) {
        match self.placement {
            WeightPlacement::Paper => (self.beta, 1.0 - self.beta),
            WeightPlacement::Swapped => (1.0 - self.beta, self.beta),
        }
    }

    /// Mean class weight of a pixel drawn from the training distribution
    /// (foreground fraction `1 − β`): `w₊(1 − β) + w₋β`.
    pub fn expected_pixel_weight(&self) -> f64 {
        let (wp, wn) = self.class_weights();
        wp * (1.0 - self.beta) + wn * self.beta
    }
}

/// Mean over slices of the background fraction.
pub fn compute_beta<'a>(labels: impl IntoIterator<Item = &'a Plane<bool>>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for plane in labels {
        let background = plane.data.iter().filter(|&&v| !v).count();
        sum += background as f64 / plane.data.len() as f64;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyDataset("compute_beta needs at least one slice"));
    }
    Ok(sum / count as f64)
}

/// Loss over all pixels of `probs` against 0/1 `labels`, and its gradient
/// with respect to the pre-sigmoid logits:
/// `−w₊(1 − ŷ)` on foreground pixels and `w₋ ŷ` on background pixels.
///
/// The clamp only affects the loss value; the gradient uses the unclamped ŷ.
pub fn weighted_bce(probs: &Array4, labels: &Array4, cfg: &LossConfig) -> Result<(f64, Array4)> {
    if probs.shape() != labels.shape() {
        return Err(Error::Shape(format!(
            "prediction {} and label {} differ",
            probs.shape(),
            labels.shape()
        )));
    }
    let (w_pos, w_neg) = cfg.class_weights();
    let (lo, hi) = (cfg.epsilon, 1.0 - cfg.epsilon);
    let mut grad = Array4::zeros(probs.shape());
    let mut pos = 0.0;
    let mut neg = 0.0;
    for ((g, &p), &y) in grad.data_mut().iter_mut().zip(probs.data()).zip(labels.data()) {
        let pc = p.clamp(lo, hi);
        if y > 0.5 {
            pos += pc.ln();
            *g = -w_pos * (1.0 - p);
        } else {
            neg += (1.0 - pc).ln();
            *g = w_neg * p;
        }
    }
    Ok((-w_pos * pos - w_neg * neg, grad))
}
