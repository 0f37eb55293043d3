use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{AttackKind, TargetBudget};
use crate::baselines::BaselineKind;
use crate::detect::{DetectParams, Variant};
use crate::graph::SbmConfig;
use crate::surrogate::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSourceKind {
    Sbm,
    Dir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub source: GraphSourceKind,
    /// Graph directory, read when `source = "dir"`.
    pub path: Option<PathBuf>,
    pub sbm: SbmConfig,
    /// Restrict to the largest connected component before training.
    pub lcc: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            source: GraphSourceKind::Sbm,
            path: None,
            sbm: SbmConfig::default(),
            lcc: true,
        }
    }
}

/// Attack settings. For targeted kinds `budget` is a per-target flip count
/// and `budget_frac` a fraction of each target's degree; for global kinds
/// they are a total flip count and a fraction of the edge count. With
/// neither set, targeted attacks use the target's degree and global attacks
/// 5% of the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub budget: Option<usize>,
    pub budget_frac: Option<f64>,
    pub targets: usize,
    /// Retrain the surrogate on the poisoned graph (poisoning). When false
    /// the clean weights are reused (evasion).
    pub retrain: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            kind: AttackKind::FgaDirect,
            budget: None,
            budget_frac: None,
            targets: 20,
            retrain: true,
        }
    }
}

pub const DEFAULT_GLOBAL_FRACTION: f64 = 0.05;

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget.is_some() && self.budget_frac.is_some() {
            return Err(Error::Config("set at most one of budget and budget_frac".into()));
        }
        if let Some(f) = self.budget_frac {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("budget_frac = {f} must be non-negative")));
            }
        }
        if self.kind.is_targeted() && self.targets == 0 {
            return Err(Error::Config("a targeted attack needs at least one target".into()));
        }
        Ok(())
    }

    pub fn target_budget(&self) -> TargetBudget {
        match (self.budget, self.budget_frac) {
            (Some(b), _) => TargetBudget::Fixed(b),
            (None, Some(f)) => TargetBudget::DegreeFraction(f),
            (None, None) => TargetBudget::Degree,
        }
    }

    pub fn global_budget(&self, num_edges: usize) -> usize {
        match (self.budget, self.budget_frac) {
            (Some(b), _) => b,
            (None, f) => (f.unwrap_or(DEFAULT_GLOBAL_FRACTION) * num_edges as f64).round() as usize,
        }
    }

    /// True when the rule is guaranteed to produce no flips.
    pub fn is_zero_budget(&self) -> bool {
        self.budget == Some(0) || self.budget_frac == Some(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopulationMode {
    /// Every node.
    All,
    /// Targets plus a degree-decile-matched sample of other nodes.
    Matched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Population for targeted attacks; global attacks always use all nodes.
    pub population: PopulationMode,
    /// Non-targets sampled per target in `matched` mode.
    pub matched_ratio: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            population: PopulationMode::Matched,
            matched_ratio: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorsConfig {
    pub detecta: Vec<DetectParams>,
    pub baselines: Vec<BaselineKind>,
    /// Include a uniform-random scorer as a sanity control.
    pub control: bool,
}

impl Default for DetectorsConfig {
    fn default() -> Self {
        Self {
            detecta: vec![
                DetectParams::default(),
                DetectParams {
                    variant: Variant::Sim,
                    ..DetectParams::default()
                },
            ],
            baselines: BaselineKind::ALL.to_vec(),
            control: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma: Vec<f64>,
    pub walk_len: Vec<usize>,
    /// Values of `budget_frac`.
    pub budget: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: vec![20.0, 40.0, 60.0, 80.0, 100.0],
            walk_len: vec![0, 1, 2, 3, 4],
            budget: vec![0.25, 0.5, 0.75, 1.0],
        }
    }
}

/// The whole experiment, read from TOML. The experiment `seed` drives every
/// random stage (graph, attack, walks, control); seeds nested inside the
/// sub-configs are overwritten with it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub attack: AttackConfig,
    pub detectors: DetectorsConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    /// Copy with the experiment seed pushed into every sub-config.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.seed = seed;
        cfg.graph.sbm.seed = seed;
        cfg.train.seed = seed;
        for p in &mut cfg.detectors.detecta {
            p.seed = seed;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph.source == GraphSourceKind::Dir && self.graph.path.is_none() {
            return Err(Error::Config("graph.source = \"dir\" needs graph.path".into()));
        }
        if self.graph.source == GraphSourceKind::Sbm {
            self.graph.sbm.validate()?;
        }
        self.train.validate()?;
        self.attack.validate()?;
        let d = &self.detectors;
        if d.detecta.is_empty() && d.baselines.is_empty() && !d.control {
            return Err(Error::Config("at least one detector is required".into()));
        }
        for p in &d.detecta {
            p.validate()?;
        }
        if self.eval.matched_ratio == 0 {
            return Err(Error::Config("eval.matched_ratio must be at least 1".into()));
        }
        Ok(())
    }
}
