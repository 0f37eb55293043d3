use ndarray::{Array2, ArrayView2};

use super::Graph;
use crate::{Error, Result};

/// Sparse symmetric `Â = D̃^{-1/2}(A+I)D̃^{-1/2}`, row-major CSR including the
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Nonzero entries `(w, Â[u][w])` of row `u`, sorted by column; the
    /// diagonal is always present.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, u: usize, w: usize) -> f64 {
        let range = self.offsets[u]..self.offsets[u + 1];
        match self.cols[range.clone()].binary_search(&w) {
            Ok(i) => self.vals[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self, u: usize) -> f64 {
        self.get(u, u)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut out = Array2::zeros((n, n));
        for u in 0..n {
            for (w, a) in self.row(u) {
                out[[u, w]] = a;
            }
        }
        out
    }

    /// `ÂM`.
    pub fn propagate(&self, m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let n = self.num_nodes();
        if m.nrows() != n {
            return Err(Error::dim(format!("{n} rows"), format!("{} rows", m.nrows())));
        }
        let mut out = Array2::zeros((n, m.ncols()));
        for u in 0..n {
            let mut row = out.row_mut(u);
            for (w, a) in self.row(u) {
                row.scaled_add(a, &m.row(w));
            }
        }
        Ok(out)
    }
}

pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let degree: Vec<f64> = (0..n).map(|v| (g.degree(v) + 1) as f64).collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(2 * g.num_edges() + n);
    let mut vals = Vec::with_capacity(cols.capacity());
    offsets.push(0);
    for u in 0..n {
        let neighbors = g.neighbors(u);
        let split = neighbors.partition_point(|&w| w < u);
        let ordered = neighbors[..split]
            .iter()
            .chain(std::iter::once(&u))
            .chain(&neighbors[split..]);
        for &w in ordered {
            cols.push(w);
            vals.push(1.0 / (degree[u] * degree[w]).sqrt());
        }
        offsets.push(cols.len());
    }
    NormalizedAdjacency {
        offsets,
        cols,
        vals,
    }
}

pub fn propagate(adj: &NormalizedAdjacency, m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    adj.propagate(m)
}
