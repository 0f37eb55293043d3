use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Graph, Split};
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Stochastic block model with Gaussian class-conditional features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmConfig {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    /// Class `c` has feature mean `mu * e_c`.
    pub mu: f64,
    pub feature_dim: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            block_sizes: vec![100, 100],
            p_in: 0.1,
            p_out: 0.01,
            mu: 1.0,
            feature_dim: 8,
            sigma: 0.5,
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return bad(format!("block sizes must be positive: {:?}", self.block_sizes));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.mu >= 0.0) {
            return bad(format!("mu = {} must be non-negative", self.mu));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be positive", self.sigma));
        }
        if self.feature_dim < self.block_sizes.len() {
            return bad(format!(
                "feature_dim = {} is smaller than the {} classes",
                self.feature_dim,
                self.block_sizes.len()
            ));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

pub fn generate_sbm(cfg: &SbmConfig) -> Result<Graph> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed, stream::GRAPH);
    let n = cfg.num_nodes();
    let block: Vec<usize> = cfg
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &size)| std::iter::repeat_n(c, size))
        .collect();

    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block[u] == block[v] { cfg.p_in } else { cfg.p_out };
            if rng.random_bool(p) {
                edges.insert((u, v));
            }
        }
    }

    let noise = Normal::new(0.0, cfg.sigma).expect("sigma validated");
    let mut features = Array2::from_shape_fn((n, cfg.feature_dim), |_| noise.sample(&mut rng));
    for (v, &c) in block.iter().enumerate() {
        features[[v, c]] += cfg.mu;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (n as f64 * 0.1).round() as usize;
    let n_val = (n as f64 * 0.1).round() as usize;
    let sorted = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids
    };
    let split = Split {
        train: sorted(&order[..n_train]),
        val: sorted(&order[n_train..n_train + n_val]),
        test: sorted(&order[n_train + n_val..]),
    };
    let labels = block.into_iter().map(Some).collect();
    Ok(Graph::from_edge_set(
        n,
        &edges,
        features,
        labels,
        cfg.block_sizes.len(),
        split,
    ))
}
