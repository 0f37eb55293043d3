//! Victim detection by neighborhood variance.
//!
//! For every candidate node `v`, each neighbor's label-preference vector is
//! refreshed with a few label-biased random walks, and `v` is scored by how
//! spread out those refreshed vectors are along their first principal
//! direction. Attacked nodes tend to have neighborhoods that disagree.

mod candidates;
mod eigen;
mod io;
mod score;
mod walk;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::graph::{normalize_adjacency, Graph};
use crate::seed;
use crate::surrogate::SurrogateModel;
use crate::{Error, Result};

pub use candidates::{candidate_scores, select_candidates};
pub use eigen::{power_iteration, EigenPair, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use io::{read_scores, write_scores, ScoreFile};
pub use score::{score_feat, score_sim, NeighborhoodMatrix, Score, SCORE_TOL};
pub use walk::{walk_weights, WalkContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Top eigenvalue of the neighbor covariance.
    Feat,
    /// Top eigenvalue of the neighbor RBF kernel.
    Sim,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Feat => "feat",
            Variant::Sim => "sim",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feat" => Ok(Variant::Feat),
            "sim" => Ok(Variant::Sim),
            other => Err(Error::Config(format!("unknown variant {other:?} (expected feat or sim)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectParams {
    /// Percentage of nodes kept as candidates, in `(0, 100]`.
    pub gamma: f64,
    pub walk_len: usize,
    /// Walks per neighbor.
    pub walks: usize,
    /// Fading factor applied per step, in `(0, 1)`.
    pub eta: f64,
    /// RBF kernel parameter for the `sim` variant.
    pub kappa: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Rank low scores first. Scores themselves are unchanged.
    pub ascending: bool,
    /// Divide the `sim` score by the neighbor count.
    pub degree_normalize: bool,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            gamma: 100.0,
            walk_len: 3,
            walks: 10,
            eta: 0.8,
            kappa: 0.01,
            variant: Variant::Feat,
            seed: 0,
            ascending: false,
            degree_normalize: false,
        }
    }
}

impl DetectParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.gamma > 0.0 && self.gamma <= 100.0) {
            return bad(format!("gamma = {} must lie in (0, 100]", self.gamma));
        }
        if self.walks == 0 {
            return bad("walks must be at least 1".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta = {} must lie in (0, 1)", self.eta));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa = {} must be positive", self.kappa));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    /// `s(v)` per node; `None` for nodes filtered out before scoring.
    pub scores: Vec<Option<f64>>,
    /// Scored nodes, highest score first (lowest first when `ascending`),
    /// ties broken by the smaller id.
    pub ranking: Vec<usize>,
    pub params: DetectParams,
    pub candidates: Vec<usize>,
    /// Nodes whose eigenvalue estimate hit the iteration limit.
    pub unconverged: Vec<usize>,
}

impl DetectionResult {
    /// Scores oriented so that larger means more suspicious under the
    /// configured ranking direction; unscored nodes map to `-∞`.
    pub fn oriented_scores(&self) -> Vec<f64> {
        let sign = if self.params.ascending { -1.0 } else { 1.0 };
        self.scores
            .iter()
            .map(|s| s.map_or(f64::NEG_INFINITY, |x| sign * x))
            .collect()
    }
}

/// Updated neighbor vectors for `v`, one independent walk stream per
/// neighbor.
pub fn neighborhood_matrix(ctx: &WalkContext<'_>, v: usize, params: &DetectParams) -> NeighborhoodMatrix {
    let neighbors = ctx.graph().neighbors(v).to_vec();
    let mut rows = Array2::zeros((neighbors.len(), ctx.soft().ncols()));
    for (mut row, &u) in rows.rows_mut().into_iter().zip(&neighbors) {
        let mut rng = seed::neighbor_rng(params.seed, v, u);
        row.assign(&ctx.biased_walk_update(u, params.walk_len, params.walks, params.eta, &mut rng));
    }
    NeighborhoodMatrix {
        center: v,
        neighbors,
        rows,
    }
}

fn score_node(ctx: &WalkContext<'_>, v: usize, params: &DetectParams) -> Score {
    let r = neighborhood_matrix(ctx, v, params);
    match params.variant {
        Variant::Feat => score_feat(r.rows.view()),
        Variant::Sim => {
            let mut s = score_sim(r.rows.view(), params.kappa);
            if params.degree_normalize && r.neighbors.len() >= 2 {
                s.value /= r.neighbors.len() as f64;
            }
            s
        }
    }
}

struct Prepared<'a> {
    ctx: WalkContext<'a>,
    candidates: Vec<usize>,
}

fn prepare<'a>(g: &'a Graph, m: &SurrogateModel, params: &DetectParams) -> Result<Prepared<'a>> {
    params.validate()?;
    if m.weights().nrows() != g.num_features() {
        return Err(Error::dim(
            format!("{} feature rows", g.num_features()),
            m.weights().nrows(),
        ));
    }
    let adj = normalize_adjacency(g);
    let z = g.features().dot(m.weights());
    let ctx = WalkContext::new(g, &adj, z.view())?;
    let candidates = if params.gamma >= 100.0 {
        (0..g.num_nodes()).collect()
    } else {
        let p = adj.propagate(adj.propagate(z.view())?.view())?;
        select_candidates(&candidate_scores(z.view(), p.view()), params.gamma)
    };
    Ok(Prepared { ctx, candidates })
}

fn assemble(n: usize, params: &DetectParams, candidates: Vec<usize>, scored: Vec<Score>) -> DetectionResult {
    let mut scores = vec![None; n];
    let mut unconverged = Vec::new();
    for (&v, s) in candidates.iter().zip(&scored) {
        scores[v] = Some(s.value);
        if !s.converged {
            unconverged.push(v);
        }
    }
    let mut ranking = candidates.clone();
    let key = |v: usize| scores[v].expect("candidates are scored");
    if params.ascending {
        ranking.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    } else {
        ranking.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    }
    DetectionResult {
        scores,
        ranking,
        params: params.clone(),
        candidates,
        unconverged,
    }
}

/// Scores every candidate of `g` using the surrogate `m` (trained on `g`).
/// Runs candidates in parallel when the `parallel` feature is on; the result
/// is identical to [`detect_sequential`].
pub fn detect(g: &Graph, m: &SurrogateModel, params: &DetectParams) -> Result<DetectionResult> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let prep = prepare(g, m, params)?;
        let scored: Vec<Score> = prep
            .candidates
            .par_iter()
            .map(|&v| score_node(&prep.ctx, v, params))
            .collect();
        Ok(assemble(g.num_nodes(), params, prep.candidates, scored))
    }
    #[cfg(not(feature = "parallel"))]
    detect_sequential(g, m, params)
}

pub fn detect_sequential(g: &Graph, m: &SurrogateModel, params: &DetectParams) -> Result<DetectionResult> {
    let prep = prepare(g, m, params)?;
    let scored: Vec<Score> = prep
        .candidates
        .iter()
        .map(|&v| score_node(&prep.ctx, v, params))
        .collect();
    Ok(assemble(g.num_nodes(), params, prep.candidates, scored))
}

/// Candidate scores for a model and graph, as used by the filtering step.
pub fn model_candidate_scores(g: &Graph, m: &SurrogateModel) -> Result<Vec<f64>> {
    let adj = normalize_adjacency(g);
    let z: Array2<f64> = g.features().dot(m.weights());
    let p = adj.propagate(adj.propagate(z.view())?.view())?;
    Ok(candidate_scores(z.view(), p.view()))
}
