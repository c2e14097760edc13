//! The five challenge metrics and the rank aggregation over teams.
//!
//! Conventions where the challenge definition is silent:
//! - both masks empty: Dice 1.0;
//! - H95 undefined when either mask is empty, AVD% undefined when the
//!   reference is empty (`None`, excluded from team averages);
//! - H95 uses distances between border voxel centres and the nearest-rank
//!   95th percentile (1-based rank ⌈0.95·n⌉);
//! - a lesion is a 26-connected component; it is detected if it shares at
//!   least one voxel with the other mask.

pub mod distance;
mod rank;

pub use rank::{rank_teams, summarize, read_summaries_csv, write_summaries_csv, RankTable, TeamRank, TeamSummary};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::morphology::{border_voxels, connected_components, Connectivity, LESION_CONNECTIVITY};
use crate::volume::{check_same_grid, BinaryMask3D, Grid};

/// 2|P∩G| / (|P| + |G|); 1.0 when both are empty.
pub fn dice(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<f64> {
    check_same_grid(pred.grid(), gt.grid())?;
    let (mut inter, mut p, mut g) = (0usize, 0usize, 0usize);
    for (&a, &b) in pred.data().iter().zip(gt.data()) {
        p += a as usize;
        g += b as usize;
        inter += (a && b) as usize;
    }
    if p + g == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (p + g) as f64)
}

/// 1-based nearest rank of the 95th percentile among `n` sorted values.
pub fn percentile95_rank(n: usize) -> usize {
    (95 * n).div_ceil(100).max(1)
}

/// Modified Hausdorff distance in mm; `None` if either mask is empty.
pub fn h95(pred: &BinaryMask3D, gt: &BinaryMask3D, spacing: [f64; 3]) -> Result<Option<f64>> {
    check_same_grid(pred.grid(), gt.grid())?;
    if pred.is_blank() || gt.is_blank() {
        return Ok(None);
    }
    let grid = Grid::new(pred.dims(), spacing)?;
    let bp = border_voxels(pred);
    let bg = border_voxels(gt);
    Ok(Some(directed_h95(&grid, &bp, &bg).max(directed_h95(&grid, &bg, &bp))))
}

fn directed_h95(grid: &Grid, from: &[[usize; 3]], to: &[[usize; 3]]) -> f64 {
    let mut sites = vec![false; grid.len()];
    for &[x, y, z] in to {
        sites[grid.index(x, y, z)] = true;
    }
    let dt = distance::squared_distance_transform(grid, &sites);
    let mut d: Vec<f64> = from.iter().map(|&[x, y, z]| dt[grid.index(x, y, z)].sqrt()).collect();
    d.sort_by(f64::total_cmp);
    d[percentile95_rank(d.len()) - 1]
}

/// 100·| |P| − |G| | / |G|; `None` if the reference is empty.
pub fn avd_percent(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<Option<f64>> {
    check_same_grid(pred.grid(), gt.grid())?;
    let g = gt.count();
    if g == 0 {
        return Ok(None);
    }
    let p = pred.count();
    Ok(Some(100.0 * p.abs_diff(g) as f64 / g as f64))
}

/// Component-level detection counts between a prediction and a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LesionCounts {
    pub gt_components: usize,
    pub gt_detected: usize,
    pub pred_components: usize,
    /// Predicted components touching the reference (true positives).
    pub pred_matched: usize,
}

impl LesionCounts {
    pub fn false_positive_components(&self) -> usize {
        self.pred_components - self.pred_matched
    }

    /// Detected reference lesions over reference lesions; 1.0 with no reference lesions.
    pub fn recall(&self) -> f64 {
        if self.gt_components == 0 {
            1.0
        } else {
            self.gt_detected as f64 / self.gt_components as f64
        }
    }

    /// Matched predicted lesions over predicted lesions; with no predicted
    /// lesions, 1.0 if there is nothing to find and 0.0 otherwise.
    pub fn precision(&self) -> f64 {
        if self.pred_components == 0 {
            if self.gt_components == 0 { 1.0 } else { 0.0 }
        } else {
            self.pred_matched as f64 / self.pred_components as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }
}

pub fn lesion_counts(pred: &BinaryMask3D, gt: &BinaryMask3D, connectivity: Connectivity) -> Result<LesionCounts> {
    check_same_grid(pred.grid(), gt.grid())?;
    let lp = connected_components(pred, connectivity);
    let lg = connected_components(gt, connectivity);
    let mut pred_hit = vec![false; lp.count + 1];
    let mut gt_hit = vec![false; lg.count + 1];
    for (&a, &b) in lp.labels.data().iter().zip(lg.labels.data()) {
        if a != 0 && b != 0 {
            pred_hit[a as usize] = true;
            gt_hit[b as usize] = true;
        }
    }
    Ok(LesionCounts {
        gt_components: lg.count,
        gt_detected: gt_hit.iter().filter(|&&h| h).count(),
        pred_components: lp.count,
        pred_matched: pred_hit.iter().filter(|&&h| h).count(),
    })
}

pub fn lesion_recall(pred: &BinaryMask3D, gt: &BinaryMask3D, connectivity: Connectivity) -> Result<f64> {
    Ok(lesion_counts(pred, gt, connectivity)?.recall())
}

pub fn lesion_f1(pred: &BinaryMask3D, gt: &BinaryMask3D, connectivity: Connectivity) -> Result<f64> {
    Ok(lesion_counts(pred, gt, connectivity)?.f1())
}

/// The five per-case metrics. `None` marks a metric undefined for this case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub dice: f64,
    pub h95: Option<f64>,
    pub avd: Option<f64>,
    pub recall: f64,
    pub f1: f64,
}

/// All five metrics with the grid's own spacing and 26-connected lesions.
pub fn evaluate_case(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<CaseMetrics> {
    let counts = lesion_counts(pred, gt, LESION_CONNECTIVITY)?;
    Ok(CaseMetrics {
        dice: dice(pred, gt)?,
        h95: h95(pred, gt, gt.spacing())?,
        avd: avd_percent(pred, gt)?,
        recall: counts.recall(),
        f1: counts.f1(),
    })
}

/// Per-case CSV row; column names are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub dice: f64,
    pub h95_mm: Option<f64>,
    pub avd_percent: Option<f64>,
    pub lesion_recall: f64,
    pub lesion_f1: f64,
    pub h95_defined: bool,
    pub avd_defined: bool,
}

impl CaseRecord {
    pub fn new(case_id: impl Into<String>, m: &CaseMetrics) -> Self {
        Self {
            case_id: case_id.into(),
            dice: m.dice,
            h95_mm: m.h95,
            avd_percent: m.avd,
            lesion_recall: m.recall,
            lesion_f1: m.f1,
            h95_defined: m.h95.is_some(),
            avd_defined: m.avd.is_some(),
        }
    }

    pub fn metrics(&self) -> CaseMetrics {
        CaseMetrics { dice: self.dice, h95: self.h95_mm, avd: self.avd_percent, recall: self.lesion_recall, f1: self.lesion_f1 }
    }
}

pub fn write_cases_csv(path: impl AsRef<std::path::Path>, records: &[CaseRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cases_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<CaseRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}
