//! Label-biased random walks that refresh a neighbor's label-preference
//! vector with information from its own neighborhood.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::graph::{Graph, NormalizedAdjacency};
use crate::surrogate::{argmax_rows, softmax_rows};
use crate::{Error, Result};

fn finish(raw: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let clamped: Vec<(usize, f64)> = raw.into_iter().map(|(w, e)| (w, e.max(0.0))).collect();
    let total: f64 = clamped.iter().map(|&(_, e)| e).sum();
    if total > 0.0 && total.is_finite() {
        clamped.into_iter().map(|(w, e)| (w, e / total)).collect()
    } else {
        let uniform = 1.0 / clamped.len() as f64;
        clamped.into_iter().map(|(w, _)| (w, uniform)).collect()
    }
}

fn raw_weights(
    adj: &NormalizedAdjacency,
    z: ArrayView2<'_, f64>,
    az: impl Fn(usize) -> f64,
    u: usize,
    c: usize,
) -> Vec<(usize, f64)> {
    let self_weight = adj.diag(u);
    adj.row(u)
        .filter(|&(w, _)| w != u)
        .map(|(w, a)| (w, self_weight * a * z[[w, c]] + a * az(w)))
        .collect()
}

/// Transition distribution out of `u` when the walk is scoring class `c`:
/// `e(u,w) = Â[u][u]·Â[u][w]·Z[w][c] + Â[u][w]·(ÂZ)[w][c]` over the
/// neighbors `w`, clamped at zero and L1-normalized. Falls back to uniform
/// when nothing survives the clamp, and is empty for an isolated `u`.
pub fn walk_weights(
    adj: &NormalizedAdjacency,
    z: ArrayView2<'_, f64>,
    u: usize,
    c: usize,
) -> Vec<(usize, f64)> {
    let az = |w: usize| adj.row(w).map(|(x, a)| a * z[[x, c]]).sum::<f64>();
    let raw = raw_weights(adj, z, az, u, c);
    if raw.is_empty() {
        return raw;
    }
    finish(raw)
}

/// Everything a walk needs, precomputed once per graph: `Z_s = softmax(Z)`,
/// each node's predicted class, and per-class cumulative transition tables
/// aligned with the CSR neighbor lists.
pub struct WalkContext<'a> {
    graph: &'a Graph,
    offsets: Vec<usize>,
    soft: Array2<f64>,
    predicted: Vec<usize>,
    cumulative: Vec<Vec<f64>>,
}

impl<'a> WalkContext<'a> {
    pub fn new(graph: &'a Graph, adj: &NormalizedAdjacency, z: ArrayView2<'_, f64>) -> Result<Self> {
        let n = graph.num_nodes();
        if z.nrows() != n || adj.num_nodes() != n {
            return Err(Error::dim(format!("{n} rows"), format!("{} rows", z.nrows())));
        }
        let az = adj.propagate(z)?;
        let predicted = argmax_rows(adj.propagate(az.view())?.view());
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for v in 0..n {
            offsets.push(offsets[v] + graph.degree(v));
        }
        let cumulative = (0..z.ncols())
            .map(|c| {
                let mut table = Vec::with_capacity(offsets[n]);
                for u in 0..n {
                    let raw = raw_weights(adj, z, |w| az[[w, c]], u, c);
                    if raw.is_empty() {
                        continue;
                    }
                    let mut acc = 0.0;
                    let start = table.len();
                    for (_, p) in finish(raw) {
                        acc += p;
                        table.push(acc);
                    }
                    *table.last_mut().expect("non-empty row") = 1.0;
                    debug_assert_eq!(table.len() - start, graph.degree(u));
                }
                table
            })
            .collect();
        Ok(Self {
            graph,
            offsets,
            soft: softmax_rows(z),
            predicted,
            cumulative,
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    /// `Z_s = softmax(Z)` row-wise.
    pub fn soft(&self) -> &Array2<f64> {
        &self.soft
    }

    /// `argmax f′(Â, X)` per node.
    pub fn predicted(&self) -> &[usize] {
        &self.predicted
    }

    fn step(&self, x: usize, c: usize, rng: &mut impl Rng) -> Option<usize> {
        let neighbors = self.graph.neighbors(x);
        if neighbors.is_empty() {
            return None;
        }
        let table = &self.cumulative[c][self.offsets[x]..self.offsets[x + 1]];
        let r: f64 = rng.random();
        let i = table.partition_point(|&p| p <= r).min(neighbors.len() - 1);
        Some(neighbors[i])
    }

    /// Mean over `walks` walks of `Z_s[u] + Σ_{i=1..len} ηⁱ Z_s[v_i]`, where
    /// every step is scored against `u`'s predicted class. A walk that reaches
    /// a node with no neighbors stops there.
    pub fn biased_walk_update(
        &self,
        u: usize,
        walk_len: usize,
        walks: usize,
        eta: f64,
        rng: &mut impl Rng,
    ) -> Array1<f64> {
        let c = self.predicted[u];
        let mut tail = Array1::zeros(self.soft.ncols());
        if walk_len > 0 {
            for _ in 0..walks {
                let mut x = u;
                let mut fade = 1.0;
                for _ in 0..walk_len {
                    let Some(next) = self.step(x, c, rng) else { break };
                    x = next;
                    fade *= eta;
                    tail.scaled_add(fade, &self.soft.row(x));
                }
            }
            tail /= walks as f64;
        }
        &self.soft.row(u) + &tail
    }
}
