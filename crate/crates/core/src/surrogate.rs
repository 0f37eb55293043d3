//! The linear surrogate `softmax(Â²XW)`, trained by full-batch gradient
//! descent on the labeled training nodes.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NormalizedAdjacency};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 200,
            weight_decay: 5e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay {} must be non-negative",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub best_val_accuracy: Option<f64>,
    /// Validation accuracy after every epoch; empty when no validation node is
    /// labeled.
    pub val_accuracy: Vec<f64>,
    pub lr: f64,
    pub weight_decay: f64,
}

/// Trained weights `W` (r×C) with cached logits `Z = XW` and propagated
/// logits `P = Â²Z` for the adjacency it was built against.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    weights: Array2<f64>,
    logits: Array2<f64>,
    propagated: Array2<f64>,
    seed: u64,
    meta: TrainMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "W")]
    w: Vec<f64>,
    r: usize,
    #[serde(rename = "C")]
    c: usize,
    seed: u64,
    train_meta: TrainMeta,
}

impl SurrogateModel {
    pub fn from_weights(
        weights: Array2<f64>,
        g: &Graph,
        adj: &NormalizedAdjacency,
        seed: u64,
        meta: TrainMeta,
    ) -> Result<Self> {
        if weights.nrows() != g.num_features() {
            return Err(Error::dim(
                format!("{} weight rows", g.num_features()),
                weights.nrows(),
            ));
        }
        if adj.num_nodes() != g.num_nodes() {
            return Err(Error::dim(
                format!("{} nodes", g.num_nodes()),
                adj.num_nodes(),
            ));
        }
        let logits = g.features().dot(&weights);
        let propagated = adj.propagate(adj.propagate(logits.view())?.view())?;
        Ok(Self {
            weights,
            logits,
            propagated,
            seed,
            meta,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// `Z = XW`.
    pub fn logits(&self) -> &Array2<f64> {
        &self.logits
    }

    /// `Â²Z` for the training adjacency.
    pub fn propagated(&self) -> &Array2<f64> {
        &self.propagated
    }

    pub fn num_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> &TrainMeta {
        &self.meta
    }

    /// Same weights, caches rebuilt for another graph over the same features.
    pub fn rebind(&self, g: &Graph, adj: &NormalizedAdjacency) -> Result<Self> {
        Self::from_weights(self.weights.clone(), g, adj, self.seed, self.meta.clone())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            w: self.weights.iter().copied().collect(),
            r: self.weights.nrows(),
            c: self.weights.ncols(),
            seed: self.seed,
            train_meta: self.meta.clone(),
        };
        fs::write(path, serde_json::to_string_pretty(&file)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, g: &Graph, adj: &NormalizedAdjacency) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        let weights = Array2::from_shape_vec((file.r, file.c), file.w)
            .map_err(|e| Error::dim(format!("{}x{} weights", file.r, file.c), e))?;
        Self::from_weights(weights, g, adj, file.seed, file.train_meta)
    }
}

pub fn softmax_row(row: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let exp = row.mapv(|x| (x - max).exp());
    let sum = exp.sum();
    exp / sum
}

pub fn softmax_rows(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    for mut row in out.rows_mut() {
        let s = softmax_row(row.view());
        row.assign(&s);
    }
    out
}

/// Row-wise argmax; the smallest column wins ties.
pub fn argmax_rows(m: ArrayView2<'_, f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bx), (i, &x)| {
                    if x > bx {
                        (i, x)
                    } else {
                        (bi, bx)
                    }
                })
                .0
        })
        .collect()
}

/// Mean cross-entropy over `train` plus `weight_decay/2 · ‖W‖²`, and its
/// gradient with respect to `W`. `inputs` is the propagated feature matrix
/// `Â²X`.
pub fn objective(
    inputs: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    train: &[usize],
    weights: ArrayView2<'_, f64>,
    weight_decay: f64,
) -> (f64, Array2<f64>) {
    let mut grad = weights.to_owned() * weight_decay;
    let mut loss = 0.5 * weight_decay * weights.iter().map(|w| w * w).sum::<f64>();
    let scale = 1.0 / train.len() as f64;
    for &v in train {
        let y = labels[v].expect("train nodes are labeled");
        let x = inputs.row(v);
        let z = x.dot(&weights);
        let max = z.fold(f64::NEG_INFINITY, |m, &a| m.max(a));
        let lse = max + z.iter().map(|a| (a - max).exp()).sum::<f64>().ln();
        loss += scale * (lse - z[y]);
        let mut delta = z.mapv(|a| (a - lse).exp());
        delta[y] -= 1.0;
        for (mut g_row, &xi) in grad.rows_mut().into_iter().zip(x.iter()) {
            g_row.scaled_add(scale * xi, &delta);
        }
    }
    (loss, grad)
}

fn split_metrics(
    inputs: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    nodes: &[usize],
    weights: ArrayView2<'_, f64>,
) -> (f64, f64) {
    let mut correct = 0usize;
    let mut loss = 0.0;
    for &v in nodes {
        let y = labels[v].expect("caller filters labeled nodes");
        let z = inputs.row(v).dot(&weights);
        let pred = argmax_rows(z.view().insert_axis(Axis(0)))[0];
        correct += usize::from(pred == y);
        let p = softmax_row(z.view());
        loss -= p[y].max(1e-300).ln();
    }
    let n = nodes.len() as f64;
    (correct as f64 / n, loss / n)
}

pub fn train_surrogate(
    g: &Graph,
    adj: &NormalizedAdjacency,
    cfg: &TrainConfig,
) -> Result<SurrogateModel> {
    cfg.validate()?;
    let labels = g.labels();
    let train = &g.split().train;
    if train.is_empty() {
        return Err(Error::Training("no labeled training nodes".into()));
    }
    let val: Vec<usize> = g
        .split()
        .val
        .iter()
        .copied()
        .filter(|&v| labels[v].is_some())
        .collect();
    let inputs = adj.propagate(adj.propagate(g.features().view())?.view())?;

    // Zero start: the first step moves each column toward its class mean.
    let mut weights = Array2::zeros((g.num_features(), g.num_classes()));
    let mut best = weights.clone();
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut best_epoch = 0;
    let mut val_accuracy = Vec::new();
    let mut last_loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        let (loss, grad) = objective(inputs.view(), labels, train, weights.view(), cfg.weight_decay);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss became non-finite at epoch {epoch}; learning rate {} diverges",
                cfg.lr
            )));
        }
        last_loss = loss;
        weights.scaled_add(-cfg.lr, &grad);
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Training(format!(
                "weights became non-finite at epoch {epoch}; learning rate {} diverges",
                cfg.lr
            )));
        }
        if val.is_empty() {
            best.assign(&weights);
            best_epoch = epoch;
            continue;
        }
        let (acc, val_loss) = split_metrics(inputs.view(), labels, &val, weights.view());
        val_accuracy.push(acc);
        let key = (acc, -val_loss);
        if key > best_key {
            best_key = key;
            best.assign(&weights);
            best_epoch = epoch;
        }
    }
    let meta = TrainMeta {
        epochs_run: cfg.epochs,
        best_epoch,
        final_train_loss: last_loss,
        best_val_accuracy: (!val.is_empty()).then_some(best_key.0),
        val_accuracy,
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
    };
    SurrogateModel::from_weights(best, g, adj, cfg.seed, meta)
}

/// `softmax(Â²Z)` row-wise, for any adjacency over the model's nodes.
pub fn predict(m: &SurrogateModel, adj: &NormalizedAdjacency) -> Result<Array2<f64>> {
    let p = adj.propagate(adj.propagate(m.logits.view())?.view())?;
    Ok(softmax_rows(p.view()))
}

pub fn predicted_labels(m: &SurrogateModel, adj: &NormalizedAdjacency) -> Result<Vec<usize>> {
    Ok(argmax_rows(predict(m, adj)?.view()))
}

pub fn accuracy(pred: &[usize], truth: &[Option<usize>], nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::Evaluation("accuracy over an empty node set".into()));
    }
    let mut correct = 0usize;
    for &v in nodes {
        let y = truth[v]
            .ok_or_else(|| Error::Evaluation(format!("node {v} has no label")))?;
        correct += usize::from(pred[v] == y);
    }
    Ok(correct as f64 / nodes.len() as f64)
}
