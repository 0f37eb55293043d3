//! Neighborhood-consistency baselines. Each returns one suspicion score per
//! node, higher meaning more suspicious, and scores isolated nodes 0.

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Jaccard,
    #[serde(alias = "prox")]
    ProxKl,
    Jsd,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Jaccard, BaselineKind::ProxKl, BaselineKind::Jsd];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Jaccard => "jaccard",
            BaselineKind::ProxKl => "prox_kl",
            BaselineKind::Jsd => "jsd",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jaccard" => Ok(BaselineKind::Jaccard),
            "prox" | "prox_kl" | "prox-kl" => Ok(BaselineKind::ProxKl),
            "jsd" => Ok(BaselineKind::Jsd),
            other => Err(Error::Config(format!(
                "unknown baseline {other:?} (expected jaccard, prox or jsd)"
            ))),
        }
    }
}

fn mean_over_neighbors(g: &Graph, mut f: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
    (0..g.num_nodes())
        .map(|v| {
            let nb = g.neighbors(v);
            if nb.is_empty() {
                0.0
            } else {
                nb.iter().map(|&u| f(v, u)).sum::<f64>() / nb.len() as f64
            }
        })
        .collect()
}

/// Jaccard similarity of the supports `{i : x_i > 0}`. Two empty supports
/// count as identical.
pub fn jaccard(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (p, q) = (x > 0.0, y > 0.0);
        inter += usize::from(p && q);
        union += usize::from(p || q);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// `KL(p ‖ q)` in nats, with both arguments floored at `1e-12` inside the
/// logarithm. Clamped at zero against rounding.
pub fn kl(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    p.iter()
        .zip(q.iter())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.max(EPS).ln() - qi.max(EPS).ln()))
        .sum::<f64>()
        .max(0.0)
}

/// Jensen–Shannon divergence in nats; lies in `[0, ln 2]`.
pub fn jsd(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    let m = (&p + &q) * 0.5;
    (0.5 * kl(p, m.view()) + 0.5 * kl(q, m.view())).min(std::f64::consts::LN_2)
}

/// `1 −` mean Jaccard similarity between the binarized features of `v` and
/// each neighbor.
pub fn baseline_jaccard(g: &Graph) -> Vec<f64> {
    let x = g.features();
    mean_over_neighbors(g, |v, u| 1.0 - jaccard(x.row(v), x.row(u)))
}

fn check_probs(g: &Graph, probs: ArrayView2<'_, f64>) -> Result<()> {
    if probs.nrows() != g.num_nodes() {
        return Err(Error::dim(format!("{} probability rows", g.num_nodes()), probs.nrows()));
    }
    Ok(())
}

/// Mean `KL(probs[v] ‖ probs[u])` over the neighbors `u` of `v`.
pub fn baseline_prox_kl(g: &Graph, probs: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    check_probs(g, probs)?;
    Ok(mean_over_neighbors(g, |v, u| kl(probs.row(v), probs.row(u))))
}

/// Mean `JSD(probs[v], probs[u])` over the neighbors `u` of `v`.
pub fn baseline_jsd(g: &Graph, probs: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    check_probs(g, probs)?;
    Ok(mean_over_neighbors(g, |v, u| jsd(probs.row(v), probs.row(u))))
}

/// Dispatch by kind; `probs` is only read by the probability-based kinds.
pub fn baseline_scores(kind: BaselineKind, g: &Graph, probs: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    match kind {
        BaselineKind::Jaccard => Ok(baseline_jaccard(g)),
        BaselineKind::ProxKl => baseline_prox_kl(g, probs),
        BaselineKind::Jsd => baseline_jsd(g, probs),
    }
}
