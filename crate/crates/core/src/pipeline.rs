//! Two-stage inference: white-matter segmentation and refinement, then
//! lesion segmentation on WM-normalized T1/FLAIR confined to that mask.

use serde::{Deserialize, Serialize};

use crate::arch::Network;
use crate::error::{Error, Result};
use crate::inference::{predict_volume, threshold};
use crate::metrics::{dice, evaluate_case, lesion_counts, CaseMetrics};
use crate::morphology::{dilate, largest_component, Connectivity, LESION_CONNECTIVITY};
use crate::phantom::PhantomCase;
use crate::training::{normalize_min_max, normalize_to_mask, TrainingCase};
use crate::volume::{check_same_grid, BinaryMask3D, Volume3D};

/// One registered subject.
#[derive(Debug, Clone)]
pub struct CaseInput {
    pub id: String,
    pub t1: Volume3D,
    pub flair: Volume3D,
    pub wmh_truth: Option<BinaryMask3D>,
    pub wm_truth: Option<BinaryMask3D>,
}

impl CaseInput {
    pub fn validate(&self) -> Result<()> {
        if !self.t1.grid().same_as(self.flair.grid()) {
            return Err(Error::Shape(format!("case {}: T1 and FLAIR grids differ", self.id)));
        }
        for gt in self.wmh_truth.iter().chain(&self.wm_truth) {
            check_same_grid(self.t1.grid(), gt.grid())?;
        }
        Ok(())
    }
}

impl From<&PhantomCase> for CaseInput {
    fn from(c: &PhantomCase) -> Self {
        Self {
            id: c.id.clone(),
            t1: c.t1.clone(),
            flair: c.flair.clone(),
            wmh_truth: Some(c.wmh_truth.clone()),
            wm_truth: Some(c.wm_truth.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Probability threshold for both stages (`p > threshold` is foreground).
    pub threshold: f64,
    pub dilation_radius: usize,
    pub refine_connectivity: Connectivity,
    /// Zero lesion predictions outside the refined white-matter mask.
    pub confine: bool,
    /// Axial slices per forward pass.
    pub inference_batch: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { threshold: 0.5, dilation_radius: 2, refine_connectivity: Connectivity::Face6, confine: true, inference_batch: 8 }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        Ok(())
    }
}

/// The two trained stages.
#[derive(Debug, Clone)]
pub struct Models {
    pub wm: Network,
    pub wmh: Network,
}

/// Largest component, then dilation.
pub fn refine_white_matter(mask: &BinaryMask3D, cfg: &PipelineConfig) -> Result<BinaryMask3D> {
    let core = largest_component(mask, cfg.refine_connectivity)?;
    Ok(dilate(&core, cfg.dilation_radius, cfg.refine_connectivity))
}

/// Input of the white-matter network: T1 scaled to [0, 1] over the volume.
pub fn wm_input(t1: &Volume3D) -> Result<Vec<Volume3D>> {
    Ok(vec![normalize_min_max(t1)?])
}

/// Inputs of the lesion network: T1 and FLAIR each scaled over `wm_mask`.
pub fn wmh_input(t1: &Volume3D, flair: &Volume3D, wm_mask: &BinaryMask3D) -> Result<Vec<Volume3D>> {
    Ok(vec![normalize_to_mask(t1, wm_mask)?, normalize_to_mask(flair, wm_mask)?])
}

/// Thresholded white-matter prediction before refinement.
pub fn predict_white_matter(t1: &Volume3D, model: &Network, cfg: &PipelineConfig) -> Result<BinaryMask3D> {
    if model.spec.in_channels != 1 {
        return Err(Error::InvalidArgument(format!(
            "white-matter model must take 1 channel, takes {}",
            model.spec.in_channels
        )));
    }
    let probs = predict_volume(model, &wm_input(t1)?, cfg.inference_batch)?;
    Ok(threshold(&probs, cfg.threshold as f32))
}

pub fn segment_white_matter(t1: &Volume3D, model: &Network, cfg: &PipelineConfig) -> Result<BinaryMask3D> {
    cfg.validate()?;
    let raw = predict_white_matter(t1, model, cfg)?;
    if raw.is_blank() {
        return Err(Error::EmptyMask("white-matter prediction"));
    }
    refine_white_matter(&raw, cfg)
}

/// Lesion mask before and after confinement.
#[derive(Debug, Clone, PartialEq)]
pub struct WmhPrediction {
    pub unconfined: BinaryMask3D,
    /// Equal to `unconfined` when confinement is off.
    pub mask: BinaryMask3D,
}

pub fn segment_wmh(
    case: &CaseInput,
    wm_mask: &BinaryMask3D,
    model: &Network,
    cfg: &PipelineConfig,
) -> Result<WmhPrediction> {
    cfg.validate()?;
    case.validate()?;
    if model.spec.in_channels != 2 {
        return Err(Error::InvalidArgument(format!(
            "lesion model must take 2 channels, takes {}",
            model.spec.in_channels
        )));
    }
    if wm_mask.is_blank() {
        return Err(Error::EmptyMask("white-matter mask"));
    }
    let probs = predict_volume(model, &wmh_input(&case.t1, &case.flair, wm_mask)?, cfg.inference_batch)?;
    let unconfined = threshold(&probs, cfg.threshold as f32);
    let mask = if cfg.confine { unconfined.and(wm_mask)? } else { unconfined.clone() };
    Ok(WmhPrediction { unconfined, mask })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub wm_voxels: usize,
    pub wmh_voxels: usize,
    pub wmh_volume_mm3: f64,
    pub threshold: f64,
    pub confine: bool,
    pub dilation_radius: usize,
    /// Present when the case carries a lesion ground truth.
    pub metrics: Option<CaseMetrics>,
    /// Predicted lesions touching no true lesion, when a lesion truth is present.
    pub false_positive_components: Option<usize>,
    /// Dice of the refined white-matter mask, when a WM truth is present.
    pub wm_dice: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub wmh: BinaryMask3D,
    pub wm: BinaryMask3D,
    pub report: CaseReport,
}

pub fn lesion_volume_mm3(mask: &BinaryMask3D) -> f64 {
    mask.count() as f64 * mask.grid().voxel_volume()
}

pub fn run_pipeline(case: &CaseInput, models: &Models, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    case.validate()?;
    let wm = segment_white_matter(&case.t1, &models.wm, cfg)?;
    let wmh = segment_wmh(case, &wm, &models.wmh, cfg)?.mask;
    let metrics = case.wmh_truth.as_ref().map(|gt| evaluate_case(&wmh, gt)).transpose()?;
    let false_positive_components = case
        .wmh_truth
        .as_ref()
        .map(|gt| lesion_counts(&wmh, gt, LESION_CONNECTIVITY).map(|c| c.false_positive_components()))
        .transpose()?;
    let wm_dice = case.wm_truth.as_ref().map(|gt| dice(&wm, gt)).transpose()?;
    let report = CaseReport {
        id: case.id.clone(),
        wm_voxels: wm.count(),
        wmh_voxels: wmh.count(),
        wmh_volume_mm3: lesion_volume_mm3(&wmh),
        threshold: cfg.threshold,
        confine: cfg.confine,
        dilation_radius: cfg.dilation_radius,
        metrics,
        false_positive_components,
        wm_dice,
    };
    Ok(PipelineOutput { wmh, wm, report })
}

/// White-matter training pair: normalized T1 against the WM truth.
pub fn wm_training_case(case: &PhantomCase) -> Result<TrainingCase> {
    Ok(TrainingCase {
        id: case.id.clone(),
        channels: wm_input(&case.t1)?,
        label: case.wm_truth.clone(),
        confine: None,
    })
}

/// Lesion training pair; `wm_mask` drives normalization and validation
/// confinement (normally the stage-one output for this case).
pub fn wmh_training_case(case: &PhantomCase, wm_mask: &BinaryMask3D) -> Result<TrainingCase> {
    Ok(TrainingCase {
        id: case.id.clone(),
        channels: wmh_input(&case.t1, &case.flair, wm_mask)?,
        label: case.wmh_truth.clone(),
        confine: Some(wm_mask.clone()),
    })
}

/// Where the lesion stage gets its white-matter mask during training.
pub enum WmSource<'a> {
    /// Refined ground truth (no stage-one model needed).
    Truth,
    /// Output of a trained white-matter model, as at inference time.
    Model(&'a Network),
}

pub fn wmh_training_cases(cases: &[PhantomCase], source: WmSource<'_>, cfg: &PipelineConfig) -> Result<Vec<TrainingCase>> {
    cases
        .iter()
        .map(|c| {
            let wm = match source {
                WmSource::Truth => refine_white_matter(&c.wm_truth, cfg)?,
                WmSource::Model(net) => segment_white_matter(&c.t1, net, cfg)?,
            };
            wmh_training_case(c, &wm)
        })
        .collect()
}
