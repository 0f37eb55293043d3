use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, Report};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Gamma,
    WalkLen,
    Budget,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::WalkLen => "walk_len",
            SweepAxis::Budget => "budget",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepAxis::Gamma),
            "walk_len" | "walk-len" | "l" => Ok(SweepAxis::WalkLen),
            "budget" => Ok(SweepAxis::Budget),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected gamma, walk-len or budget)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub detector: String,
    pub auc: f64,
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<Report>,
}

impl SweepResult {
    /// `axis<TAB>detector<TAB>auc<TAB>wallclock_ms`, one row per axis value
    /// and detector.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("axis\tdetector\tauc\twallclock_ms\n");
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{}\t{:.3}", r.value, r.detector, r.auc, r.wallclock_ms).expect("String write");
        }
        out
    }
}

fn axis_values(cfg: &ExperimentConfig, axis: SweepAxis) -> Vec<f64> {
    match axis {
        SweepAxis::Gamma => cfg.sweep.gamma.clone(),
        SweepAxis::WalkLen => cfg.sweep.walk_len.iter().map(|&l| l as f64).collect(),
        SweepAxis::Budget => cfg.sweep.budget.clone(),
    }
}

/// The experiment configuration for one sweep point.
pub fn point_config(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Gamma => c.detectors.detecta.iter_mut().for_each(|p| p.gamma = value),
        SweepAxis::WalkLen => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!("walk length {value} is not a non-negative integer")));
            }
            c.detectors.detecta.iter_mut().for_each(|p| p.walk_len = value as usize);
        }
        SweepAxis::Budget => {
            if value <= 0.0 {
                return Err(Error::Config(format!("budget {value}: zero-budget runs have no victims")));
            }
            c.attack.budget = None;
            c.attack.budget_frac = Some(value);
        }
    }
    Ok(c)
}

/// Runs one experiment per axis value with the shared seed. Each point's
/// artifacts go to `out/<axis>/<value>/` and the table to
/// `out/sweep_<axis>.tsv`.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, out: Option<&Path>) -> Result<SweepResult> {
    let values = axis_values(cfg, axis);
    if values.is_empty() {
        return Err(Error::Config(format!("sweep axis {axis} has no values")));
    }
    let points: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| point_config(cfg, axis, v))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (&value, point) in values.iter().zip(&points) {
        let dir = out.map(|o| o.join(axis.as_str()).join(value.to_string()));
        let outcome = run_experiment(point, dir.as_deref())?;
        for d in &outcome.report.detectors {
            rows.push(SweepRow {
                value,
                detector: d.name.clone(),
                auc: d.auc,
                wallclock_ms: outcome.timings.detectors_ms.get(&d.name).copied().unwrap_or(0.0),
            });
        }
        reports.push(outcome.report);
    }
    let result = SweepResult { axis, rows, reports };
    if let Some(o) = out {
        fs::create_dir_all(o).map_err(|e| Error::io(o, e))?;
        let p = o.join(format!("sweep_{axis}.tsv"));
        fs::write(&p, result.to_tsv()).map_err(|e| Error::io(&p, e))?;
    }
    Ok(result)
}
