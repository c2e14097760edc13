use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ablation::{run_ablation, AblationConfig};
use super::config::{echo, resolve};
use super::{
    AblationFlags, CliError, EvaluateFlags, GradcheckFlags, PhantomFlags, PredictFlags, RankFlags, RunReport,
    StageExt, TrainFlags, REPORT_SCHEMA_VERSION,
};
use crate::arch::{build_resunet, build_trimmed_unet, RESUNET_DEPTH, TRIMMED_UNET_DEPTH};
use crate::checkpoint;
use crate::error::Error;
use crate::metrics::{
    evaluate_case, lesion_counts, rank_teams, read_summaries_csv, summarize, write_cases_csv, CaseMetrics,
    CaseRecord,
};
use crate::morphology::LESION_CONNECTIVITY;
use crate::phantom::{generate_dataset, read_dataset, write_dataset, PhantomConfig};
use crate::pipeline::{
    run_pipeline, wm_training_case, wmh_training_cases, CaseInput, Models, PipelineConfig, WmSource,
};
use crate::selfcheck::{run_selfcheck, SelfCheckConfig};
use crate::training::{train, TrainConfig, WeightPlacement};
use crate::volume::nifti::{read_mask, read_nifti, write_mask};

fn need<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
}

fn invalid(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn report(command: &'static str, config: &impl Serialize, result: serde_json::Value, success: bool) -> RunReport {
    RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config: echo(config),
        result,
        success,
    }
}

fn json_of(v: &impl Serialize) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).stage("serialize-result")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomCommand {
    pub out: Option<PathBuf>,
    pub cases: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub phantom: PhantomConfig,
}

impl Default for PhantomCommand {
    fn default() -> Self {
        Self { out: None, cases: 10, seed: 0, phantom: PhantomConfig::default() }
    }
}

pub(super) fn phantom(file: Option<&Path>, flags: &PhantomFlags) -> Result<RunReport, CliError> {
    let cfg: PhantomCommand = resolve(file, flags)?;
    let out = need(&cfg.out, "out")?;
    cfg.phantom.validate().map_err(invalid)?;
    let cases = generate_dataset(&cfg.phantom, cfg.cases, cfg.seed).stage("generate")?;
    let manifest = write_dataset(out, &cfg.phantom, cfg.seed, &cases).stage("write-dataset")?;
    info!("wrote {} cases to {} (hash {})", cases.len(), out.display(), manifest.hash);
    Ok(report("phantom", &cfg, json_of(&manifest)?, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCommand {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub wm_model: Option<PathBuf>,
    pub loss_csv: Option<PathBuf>,
    pub base_width: usize,
    pub depth: Option<usize>,
    pub placement: WeightPlacement,
    pub beta: Option<f64>,
    #[serde(flatten)]
    pub train: TrainConfig,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for TrainCommand {
    fn default() -> Self {
        Self {
            data: None,
            out: None,
            wm_model: None,
            loss_csv: None,
            base_width: 4,
            depth: None,
            placement: WeightPlacement::Paper,
            beta: None,
            train: TrainConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(super) enum Stage {
    WhiteMatter,
    Lesion,
}

pub(super) fn train_stage(file: Option<&Path>, flags: &TrainFlags, stage: Stage) -> Result<RunReport, CliError> {
    let cfg: TrainCommand = resolve(file, flags)?;
    let data = need(&cfg.data, "data")?;
    let out = need(&cfg.out, "out")?;
    cfg.train.validate().map_err(invalid)?;
    cfg.pipeline.validate().map_err(invalid)?;
    let (_, cases) = read_dataset(data).stage("load-data")?;
    let (command, spec, training) = match stage {
        Stage::WhiteMatter => {
            if cfg.wm_model.is_some() {
                return Err(CliError::Usage("--wm-model only applies to train-wmh".into()));
            }
            let spec = build_trimmed_unet(1, cfg.base_width, cfg.depth.unwrap_or(TRIMMED_UNET_DEPTH)).map_err(invalid)?;
            let training = cases.iter().map(wm_training_case).collect::<Result<Vec<_>, _>>().stage("prepare-data")?;
            ("train-wm", spec, training)
        }
        Stage::Lesion => {
            let spec = build_resunet(2, cfg.base_width, cfg.depth.unwrap_or(RESUNET_DEPTH)).map_err(invalid)?;
            let wm_net = cfg.wm_model.as_ref().map(checkpoint::load).transpose().stage("load-wm-model")?;
            let source = wm_net.as_ref().map_or(WmSource::Truth, WmSource::Model);
            let training = wmh_training_cases(&cases, source, &cfg.pipeline).stage("prepare-data")?;
            ("train-wmh", spec, training)
        }
    };
    let (net, history) = train(spec, &training, &cfg.train, cfg.placement, cfg.beta).stage("train")?;
    checkpoint::save(&net, out).stage("save-checkpoint")?;
    if let Some(p) = &cfg.loss_csv {
        history.write_loss_csv(p).stage("write-loss-csv")?;
    }
    info!(
        "{command}: {} iterations in {:.1} s, validation dice {:.4}",
        history.iterations,
        history.seconds,
        history.final_validation_dice().unwrap_or(f64::NAN)
    );
    let result = json!({
        "checkpoint": out,
        "checkpoint_sha256": checkpoint::fingerprint(&net).stage("fingerprint")?,
        "network": net.spec,
        "parameter_count": net.parameter_count(),
        "final_validation_dice": history.final_validation_dice(),
        "final_loss": history.losses.last(),
        "history": history,
    });
    Ok(report(command, &cfg, result, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PredictCommand {
    pub wm_model: Option<PathBuf>,
    pub wmh_model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub t1: Option<PathBuf>,
    pub flair: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

pub const WM_MASK_FILE: &str = "wm_mask.nii";
pub const WMH_MASK_FILE: &str = "wmh_mask.nii";
pub const CASE_REPORT_FILE: &str = "report.json";

pub(super) fn predict(file: Option<&Path>, flags: &PredictFlags) -> Result<RunReport, CliError> {
    let cfg: PredictCommand = resolve(file, flags)?;
    let out = need(&cfg.out, "out")?;
    cfg.pipeline.validate().map_err(invalid)?;
    let models = Models {
        wm: checkpoint::load(need(&cfg.wm_model, "wm_model")?).stage("load-wm-model")?,
        wmh: checkpoint::load(need(&cfg.wmh_model, "wmh_model")?).stage("load-wmh-model")?,
    };
    let inputs: Vec<CaseInput> = match (&cfg.data, &cfg.t1, &cfg.flair) {
        (Some(dir), None, None) => read_dataset(dir).stage("load-data")?.1.iter().map(CaseInput::from).collect(),
        (None, Some(t1), Some(flair)) => vec![CaseInput {
            id: "case".into(),
            t1: read_nifti(t1).stage("load-t1")?,
            flair: read_nifti(flair).stage("load-flair")?,
            wmh_truth: None,
            wm_truth: None,
        }],
        _ => return Err(CliError::Usage("give either --data or both --t1 and --flair".into())),
    };
    let outputs: Vec<_> =
        inputs.par_iter().map(|c| run_pipeline(c, &models, &cfg.pipeline)).collect::<Result<_, _>>().stage("pipeline")?;
    for o in &outputs {
        let dir = out.join(&o.report.id);
        fs::create_dir_all(&dir).stage("write-output")?;
        write_mask(&o.wm, dir.join(WM_MASK_FILE)).stage("write-output")?;
        write_mask(&o.wmh, dir.join(WMH_MASK_FILE)).stage("write-output")?;
        let json = serde_json::to_string_pretty(&o.report).stage("write-output")?;
        fs::write(dir.join(CASE_REPORT_FILE), json + "\n").stage("write-output")?;
    }
    let metrics: Vec<CaseMetrics> = outputs.iter().filter_map(|o| o.report.metrics).collect();
    let summary = if metrics.is_empty() { None } else { Some(summarize("prediction", &metrics).stage("summarize")?) };
    let wm_dice: Vec<f64> = outputs.iter().filter_map(|o| o.report.wm_dice).collect();
    let mean_wm_dice = (!wm_dice.is_empty()).then(|| wm_dice.iter().sum::<f64>() / wm_dice.len() as f64);
    let fp: Option<usize> = outputs.iter().map(|o| o.report.false_positive_components).sum();
    if let Some(s) = &summary {
        info!("predicted {} cases: mean dice {:.4}, lesion f1 {:.4}", outputs.len(), s.dice, s.f1);
    }
    let cases: Vec<_> = outputs.iter().map(|o| &o.report).collect();
    let result = json!({
        "cases": cases,
        "summary": summary,
        "mean_wm_dice": mean_wm_dice,
        "false_positive_components": fp,
    });
    Ok(report("predict", &cfg, result, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateCommand {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub case_id: String,
    pub cases_csv: Option<PathBuf>,
}

impl Default for EvaluateCommand {
    fn default() -> Self {
        Self { pred: None, gt: None, case_id: "case".into(), cases_csv: None }
    }
}

pub(super) fn evaluate(file: Option<&Path>, flags: &EvaluateFlags) -> Result<RunReport, CliError> {
    let cfg: EvaluateCommand = resolve(file, flags)?;
    let pred = read_mask(need(&cfg.pred, "pred")?).stage("load-pred")?;
    let gt = read_mask(need(&cfg.gt, "gt")?).stage("load-gt")?;
    let metrics = evaluate_case(&pred, &gt).stage("evaluate")?;
    let counts = lesion_counts(&pred, &gt, LESION_CONNECTIVITY).stage("evaluate")?;
    let record = CaseRecord::new(cfg.case_id.clone(), &metrics);
    if let Some(p) = &cfg.cases_csv {
        write_cases_csv(p, std::slice::from_ref(&record)).stage("write-csv")?;
    }
    Ok(report("evaluate", &cfg, json!({ "case": record, "lesions": counts }), true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RankCommand {
    pub summaries: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
}

pub(super) fn rank(file: Option<&Path>, flags: &RankFlags) -> Result<RunReport, CliError> {
    let cfg: RankCommand = resolve(file, flags)?;
    let summaries = read_summaries_csv(need(&cfg.summaries, "summaries")?).stage("load-summaries")?;
    let table = rank_teams(&summaries).stage("rank")?;
    if let Some(p) = &cfg.out_csv {
        table.write_csv(p).stage("write-csv")?;
    }
    if let Some(p) = &cfg.out_json {
        fs::write(p, table.to_json().stage("write-json")? + "\n").stage("write-json")?;
    }
    let order: Vec<&str> = table.leaderboard().iter().map(|t| t.team.as_str()).collect();
    Ok(report("rank", &cfg, json!({ "table": table, "leaderboard": order }), true))
}

/// The gradient check's configuration is its own command config.
pub type GradcheckCommand = SelfCheckConfig;

pub(super) fn gradcheck(file: Option<&Path>, flags: &GradcheckFlags) -> Result<RunReport, CliError> {
    let cfg: GradcheckCommand = resolve(file, flags)?;
    let result = run_selfcheck(&cfg).stage("gradcheck")?;
    for c in &result.checks {
        info!("{:<32} max rel error {:.3e} {}", c.name, c.report.max_rel_error, if c.report.passed { "ok" } else { "FAIL" });
    }
    let passed = result.passed;
    Ok(report("gradcheck", &cfg, json_of(&result)?, passed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AblationCommand {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub ablation: AblationConfig,
}

pub(super) fn ablation(file: Option<&Path>, flags: &AblationFlags) -> Result<RunReport, CliError> {
    let cfg: AblationCommand = resolve(file, flags)?;
    let data = need(&cfg.data, "data")?;
    cfg.ablation.train.validate().map_err(invalid)?;
    cfg.ablation.pipeline.validate().map_err(invalid)?;
    let (_, cases) = read_dataset(data).stage("load-data")?;
    let outcome = run_ablation(&cases, &cfg.ablation).stage("ablation")?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).stage("save-checkpoint")?;
        checkpoint::save(&outcome.plain, dir.join("plain_unet.ckpt")).stage("save-checkpoint")?;
        checkpoint::save(&outcome.residual, dir.join("resunet.ckpt")).stage("save-checkpoint")?;
    }
    let r = &outcome.report;
    info!(
        "validation dice: plain {:.4}, residual {:.4} (gain {:+.4})",
        r.plain.validation.dice, r.residual.validation.dice, r.dice_gain
    );
    Ok(report("ablation", &cfg, json_of(r)?, true))
}
