use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::augment;
use super::loss::{compute_beta, weighted_bce, LossConfig, WeightPlacement};
use super::sgd::Sgd;
use crate::arch::{Network, NetworkSpec};
use crate::diff::Array4;
use crate::error::{Error, Result};
use crate::inference::{label_batch, predict_volume, slice_batch, threshold};
use crate::metrics::dice;
use crate::volume::{BinaryMask3D, Volume3D};

/// One training subject: normalized input channels and its label.
#[derive(Debug, Clone)]
pub struct TrainingCase {
    pub id: String,
    pub channels: Vec<Volume3D>,
    pub label: BinaryMask3D,
    /// Validation predictions are zeroed outside this mask when present.
    pub confine: Option<BinaryMask3D>,
}

impl TrainingCase {
    pub fn slices(&self) -> usize {
        self.label.dims()[2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub augment: bool,
    pub batch_size: usize,
    /// Stop after this many SGD steps even if epochs remain.
    pub max_iterations: Option<usize>,
}

pub const DEFAULT_EPOCHS: usize = 4;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.15;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            augment: true,
            batch_size: 4,
            max_iterations: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("learning_rate must be > 0 and momentum in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Loss of each SGD step, divided by pixels × expected class weight.
    pub losses: Vec<f64>,
    /// Mean per-case Dice on the validation cases after each epoch.
    pub validation_dice: Vec<f64>,
    pub train_cases: Vec<String>,
    pub validation_cases: Vec<String>,
    pub beta: f64,
    pub iterations: usize,
    /// Wall time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl TrainHistory {
    pub fn final_validation_dice(&self) -> Option<f64> {
        self.validation_dice.last().copied()
    }

    pub fn write_loss_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "loss"])?;
        for (i, l) in self.losses.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{l:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Case-level split. Returns (train, validation) indices; the validation
/// set gets `round(fraction · n)` cases, at least one, leaving at least one
/// for training.
pub fn split_cases(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::EmptyDataset("need at least two cases to split train/validation"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut val = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

/// β over every axial label slice of `cases`.
pub fn dataset_beta(cases: &[&TrainingCase]) -> Result<f64> {
    let planes: Vec<_> = cases.iter().flat_map(|c| c.label.axial_slices()).collect();
    compute_beta(&planes)
}

/// Split, initialize and train a fresh network. When `beta` is `None` it is
/// computed over the training split.
pub fn train(
    spec: NetworkSpec,
    cases: &[TrainingCase],
    cfg: &TrainConfig,
    placement: WeightPlacement,
    beta: Option<f64>,
) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    if cases.is_empty() {
        return Err(Error::EmptyDataset("no training cases"));
    }
    let (train_idx, val_idx) = split_cases(cases.len(), cfg.validation_fraction, cfg.seed)?;
    let train_set: Vec<&TrainingCase> = train_idx.iter().map(|&i| &cases[i]).collect();
    let val_set: Vec<&TrainingCase> = val_idx.iter().map(|&i| &cases[i]).collect();
    let beta = match beta {
        Some(b) => b,
        None => dataset_beta(&train_set)?,
    };
    let loss = LossConfig { placement, ..LossConfig::new(beta)? };
    let mut net = Network::new(spec)?;
    net.init(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1)));
    let history = fit(&mut net, &train_set, &val_set, cfg, &loss)?;
    Ok((net, history))
}

/// Train `net` in place on `train_set`, scoring `val_set` after each epoch.
pub fn fit(
    net: &mut Network,
    train_set: &[&TrainingCase],
    val_set: &[&TrainingCase],
    cfg: &TrainConfig,
    loss_cfg: &LossConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    loss_cfg.validate()?;
    let started = Instant::now();
    let mut slices: Vec<(usize, usize)> = Vec::new();
    for (c, case) in train_set.iter().enumerate() {
        if case.channels.len() != net.spec.in_channels {
            return Err(Error::Shape(format!(
                "case {} has {} channels, network expects {}",
                case.id,
                case.channels.len(),
                net.spec.in_channels
            )));
        }
        slices.extend((0..case.slices()).map(|z| (c, z)));
    }
    if slices.is_empty() {
        return Err(Error::EmptyDataset("training split has no slices"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut opt = Sgd::new(cfg.learning_rate, cfg.momentum);
    let mut history = TrainHistory {
        losses: Vec::new(),
        validation_dice: Vec::new(),
        train_cases: train_set.iter().map(|c| c.id.clone()).collect(),
        validation_cases: val_set.iter().map(|c| c.id.clone()).collect(),
        beta: loss_cfg.beta,
        iterations: 0,
        seconds: 0.0,
    };
    let budget = cfg.max_iterations.unwrap_or(usize::MAX);
    // Normalizing by pixels × expected class weight keeps the loss scale (and
    // so the useful learning rate) independent of β.
    let pixel_weight = loss_cfg.expected_pixel_weight();
    if !(pixel_weight > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta {} gives zero expected class weight",
            loss_cfg.beta
        )));
    }

    'epochs: for epoch in 0..cfg.epochs {
        slices.shuffle(&mut rng);
        for batch in slices.chunks(cfg.batch_size) {
            if history.iterations >= budget {
                break 'epochs;
            }
            let (images, labels) = assemble(train_set, batch, cfg.augment, &mut rng)?;
            let scale = labels.shape().len() as f64 * pixel_weight;
            let acts = net.graph.forward(&net.params, &images)?;
            let (loss, mut grad) = weighted_bce(acts.get(net.probs), &labels, loss_cfg)?;
            let loss = loss / scale;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { iteration: history.iterations, loss });
            }
            for g in grad.data_mut() {
                *g /= scale;
            }
            net.graph.backward(&mut net.params, &acts, net.logits, grad);
            opt.step(&mut net.params);
            history.losses.push(loss);
            history.iterations += 1;
            debug!("iteration {} loss {loss:.6}", history.iterations);
        }
        let dice = validation_dice(net, val_set)?;
        info!(
            "epoch {}/{}: {} iterations, last loss {:.5}, validation dice {dice:.4}",
            epoch + 1,
            cfg.epochs,
            history.iterations,
            history.losses.last().copied().unwrap_or(f64::NAN)
        );
        history.validation_dice.push(dice);
    }
    if history.validation_dice.is_empty() {
        // iteration budget hit before the first epoch ended
        history.validation_dice.push(validation_dice(net, val_set)?);
    }
    history.seconds = started.elapsed().as_secs_f64();
    Ok(history)
}

fn assemble(
    cases: &[&TrainingCase],
    batch: &[(usize, usize)],
    do_augment: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(Array4, Array4)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut shapes = None;
    for &(c, z) in batch {
        let case = cases[c];
        let mut image = slice_batch(&case.channels, &[z])?;
        let mut label = label_batch(&case.label, &[z])?;
        if do_augment {
            let (i, l, _) = augment(&image, &label, rng);
            image = i;
            label = l;
        }
        let s = (image.shape(), label.shape());
        if *shapes.get_or_insert(s) != s {
            return Err(Error::Shape("slices in one batch differ in shape".into()));
        }
        images.extend_from_slice(image.data());
        labels.extend_from_slice(label.data());
    }
    let (is, ls) = shapes.expect("batch is non-empty");
    let n = batch.len();
    Ok((
        Array4::from_vec(crate::diff::Shape4::new(n, is.c, is.h, is.w), images)?,
        Array4::from_vec(crate::diff::Shape4::new(n, 1, ls.h, ls.w), labels)?,
    ))
}

/// Mean Dice over cases of the thresholded (and optionally confined) prediction.
pub fn validation_dice(net: &Network, cases: &[&TrainingCase]) -> Result<f64> {
    if cases.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for case in cases {
        let mut pred = threshold(&predict_volume(net, &case.channels, 8)?, 0.5);
        if let Some(m) = &case.confine {
            pred = pred.and(m)?;
        }
        total += dice(&pred, &case.label)?;
    }
    Ok(total / cases.len() as f64)
}
