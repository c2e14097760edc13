use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CaseMetrics;
use crate::error::{Error, Result};

/// One team's metrics averaged over all evaluated cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSummary {
    pub team: String,
    pub dice: f64,
    pub h95: f64,
    pub avd: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default)]
    pub cases: usize,
    /// Cases excluded from the H95 average because it was undefined.
    #[serde(default)]
    pub h95_undefined: usize,
    #[serde(default)]
    pub avd_undefined: usize,
}

impl TeamSummary {
    pub fn new(team: impl Into<String>, dice: f64, h95: f64, avd: f64, recall: f64, f1: f64) -> Self {
        Self { team: team.into(), dice, h95, avd, recall, f1, cases: 0, h95_undefined: 0, avd_undefined: 0 }
    }

    fn values(&self) -> [f64; 5] {
        [self.dice, self.h95, self.avd, self.recall, self.f1]
    }
}

/// Average in case order; undefined H95/AVD values are skipped and counted.
pub fn summarize(team: impl Into<String>, cases: &[CaseMetrics]) -> Result<TeamSummary> {
    if cases.is_empty() {
        return Err(Error::EmptyDataset("no cases to summarize"));
    }
    let n = cases.len() as f64;
    let mean_defined = |vals: Vec<Option<f64>>| -> (f64, usize) {
        let defined: Vec<f64> = vals.iter().flatten().copied().collect();
        let missing = vals.len() - defined.len();
        let mean = if defined.is_empty() { f64::NAN } else { defined.iter().sum::<f64>() / defined.len() as f64 };
        (mean, missing)
    };
    let (h95, h95_undefined) = mean_defined(cases.iter().map(|c| c.h95).collect());
    let (avd, avd_undefined) = mean_defined(cases.iter().map(|c| c.avd).collect());
    Ok(TeamSummary {
        team: team.into(),
        dice: cases.iter().map(|c| c.dice).sum::<f64>() / n,
        h95,
        avd,
        recall: cases.iter().map(|c| c.recall).sum::<f64>() / n,
        f1: cases.iter().map(|c| c.f1).sum::<f64>() / n,
        cases: cases.len(),
        h95_undefined,
        avd_undefined,
    })
}

/// Per-metric ranks in [0, 1] (0 = best) and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRank {
    pub team: String,
    pub dice: f64,
    pub h95: f64,
    pub avd: f64,
    pub recall: f64,
    pub f1: f64,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// In input order.
    pub teams: Vec<TeamRank>,
}

impl RankTable {
    pub fn get(&self, team: &str) -> Option<&TeamRank> {
        self.teams.iter().find(|t| t.team == team)
    }

    /// Teams sorted by overall rank, best first; ties keep input order.
    pub fn leaderboard(&self) -> Vec<&TeamRank> {
        let mut v: Vec<&TeamRank> = self.teams.iter().collect();
        v.sort_by(|a, b| a.overall.total_cmp(&b.overall));
        v
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for t in &self.teams {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

// dice, h95, avd, recall, f1
const HIGHER_IS_BETTER: [bool; 5] = [true, false, false, true, true];

pub fn rank_teams(summaries: &[TeamSummary]) -> Result<RankTable> {
    if summaries.len() < 2 {
        return Err(Error::InvalidArgument(format!("ranking needs at least 2 teams, got {}", summaries.len())));
    }
    for s in summaries {
        if s.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("team {} has a non-finite metric", s.team)));
        }
    }
    let mut ranks = vec![[0.0f64; 5]; summaries.len()];
    for m in 0..5 {
        let vals: Vec<f64> = summaries.iter().map(|s| s.values()[m]).collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == min {
            continue;
        }
        for (r, &v) in ranks.iter_mut().zip(&vals) {
            let t = (v - min) / (max - min);
            r[m] = if HIGHER_IS_BETTER[m] { 1.0 - t } else { t };
        }
    }
    let teams = summaries
        .iter()
        .zip(ranks)
        .map(|(s, r)| TeamRank {
            team: s.team.clone(),
            dice: r[0],
            h95: r[1],
            avd: r[2],
            recall: r[3],
            f1: r[4],
            overall: r.iter().sum::<f64>() / 5.0,
        })
        .collect();
    Ok(RankTable { teams })
}

pub fn read_summaries_csv(path: impl AsRef<Path>) -> Result<Vec<TeamSummary>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_summaries_csv(path: impl AsRef<Path>, summaries: &[TeamSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
