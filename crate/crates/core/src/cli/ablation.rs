//! Plain U-Net versus residual U-Net on the lesion task, trained on the
//! same cases with the same seeds and settings.

use serde::{Deserialize, Serialize};

use crate::arch::{build_resunet, BlockKind, Network, RESUNET_DEPTH};
use crate::checkpoint;
use crate::error::Result;
use crate::metrics::{evaluate_case, lesion_counts, summarize, CaseMetrics, TeamSummary};
use crate::morphology::LESION_CONNECTIVITY;
use crate::phantom::PhantomCase;
use crate::pipeline::{segment_wmh, wmh_training_cases, CaseInput, PipelineConfig, WmSource};
use crate::training::{train, TrainConfig, TrainHistory, WeightPlacement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub base_width: usize,
    pub depth: usize,
    pub placement: WeightPlacement,
    /// Computed from the training split when unset.
    pub beta: Option<f64>,
    #[serde(flatten)]
    pub train: TrainConfig,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            base_width: 4,
            depth: RESUNET_DEPTH,
            placement: WeightPlacement::Paper,
            beta: None,
            train: TrainConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: String,
    pub parameter_count: usize,
    pub checkpoint_sha256: String,
    pub history: TrainHistory,
    /// Metrics on the validation cases, lesions confined to the refined WM truth.
    pub validation: TeamSummary,
    pub validation_cases: Vec<(String, CaseMetrics)>,
    pub false_positive_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub plain: VariantReport,
    pub residual: VariantReport,
    /// Residual minus plain validation Dice.
    pub dice_gain: f64,
}

pub struct AblationOutcome {
    pub report: AblationReport,
    pub plain: Network,
    pub residual: Network,
}

fn run_variant(
    name: &str,
    block: BlockKind,
    cases: &[PhantomCase],
    cfg: &AblationConfig,
) -> Result<(VariantReport, Network)> {
    let training = wmh_training_cases(cases, WmSource::Truth, &cfg.pipeline)?;
    let spec = build_resunet(2, cfg.base_width, cfg.depth)?.with_block(block);
    let (net, history) = train(spec, &training, &cfg.train, cfg.placement, cfg.beta)?;
    let mut per_case = Vec::new();
    let mut false_positives = 0;
    for id in &history.validation_cases {
        let i = cases.iter().position(|c| &c.id == id).expect("validation ids come from cases");
        let wm = training[i].confine.as_ref().expect("lesion cases carry a WM mask");
        let pred = segment_wmh(&CaseInput::from(&cases[i]), wm, &net, &cfg.pipeline)?.mask;
        per_case.push((id.clone(), evaluate_case(&pred, &cases[i].wmh_truth)?));
        false_positives += lesion_counts(&pred, &cases[i].wmh_truth, LESION_CONNECTIVITY)?.false_positive_components();
    }
    let metrics: Vec<CaseMetrics> = per_case.iter().map(|(_, m)| *m).collect();
    let report = VariantReport {
        variant: name.to_string(),
        parameter_count: net.parameter_count(),
        checkpoint_sha256: checkpoint::fingerprint(&net)?,
        history,
        validation: summarize(name, &metrics)?,
        validation_cases: per_case,
        false_positive_components: false_positives,
    };
    Ok((report, net))
}

/// Train both variants and score them on the shared validation split.
pub fn run_ablation(cases: &[PhantomCase], cfg: &AblationConfig) -> Result<AblationOutcome> {
    let (plain_report, plain) = run_variant("plain_unet", BlockKind::Plain, cases, cfg)?;
    let (residual_report, residual) = run_variant("resunet", BlockKind::Residual, cases, cfg)?;
    let report = AblationReport {
        dice_gain: residual_report.validation.dice - plain_report.validation.dice,
        plain: plain_report,
        residual: residual_report,
    };
    Ok(AblationOutcome { report, plain, residual })
}
