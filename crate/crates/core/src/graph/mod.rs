//! Undirected attributed graphs stored as CSR, plus the normalized adjacency
//! `Â = D̃^{-1/2}(A+I)D̃^{-1/2}` that every model and detector propagates over.

mod io;
mod norm;
mod sbm;

use std::collections::{BTreeSet, VecDeque};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{load_graph, save_graph};
pub use norm::{normalize_adjacency, propagate, NormalizedAdjacency};
pub use sbm::{generate_sbm, SbmConfig};

/// Disjoint node-id sets used for training, model selection and reporting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// An undirected, unweighted attributed graph.
///
/// Both directions of every edge are materialized in the CSR arrays and each
/// neighbor list is sorted. Self-loops are never stored; the `+I` term lives in
/// [`NormalizedAdjacency`] only.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    num_classes: usize,
    split: Split,
}

impl Graph {
    /// Builds and validates a graph. `edges` may list each undirected edge in
    /// either orientation but only once.
    pub fn new(
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} nodes",
                labels.len(),
                n
            )));
        }
        if let Some((v, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(v, l)| l.filter(|&c| c >= num_classes).map(|c| (v, c)))
        {
            return Err(Error::InvalidGraph(format!(
                "node {v} has label {c} but there are {num_classes} classes"
            )));
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        validate_split(&split, &labels)?;
        Ok(Self::from_edge_set(n, &seen, features, labels, num_classes, split))
    }

    /// Assumes `edges` holds valid `(u, v)` pairs with `u < v < n`.
    pub(crate) fn from_edge_set(
        n: usize,
        edges: &BTreeSet<(usize, usize)>,
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        split: Split,
    ) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in edges {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Self {
            offsets,
            neighbors,
            features,
            labels,
            num_classes,
            split,
        }
    }

    /// Same nodes, features, labels and split over a different edge set.
    pub(crate) fn with_edges(&self, edges: &BTreeSet<(usize, usize)>) -> Self {
        Self::from_edge_set(
            self.num_nodes(),
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
            self.split.clone(),
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Every undirected edge once, as `(u, v)` with `u < v`, in lexicographic
    /// order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges().collect()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn split(&self) -> &Split {
        &self.split
    }
}

fn validate_split(split: &Split, labels: &[Option<usize>]) -> Result<()> {
    let n = labels.len();
    let mut owner = vec![None; n];
    for (name, ids) in [
        ("train", &split.train),
        ("val", &split.val),
        ("test", &split.test),
    ] {
        for &v in ids {
            if v >= n {
                return Err(Error::InvalidGraph(format!(
                    "{name} split references node {v} but there are {n} nodes"
                )));
            }
            if let Some(other) = owner[v].replace(name) {
                return Err(Error::InvalidGraph(format!(
                    "node {v} appears in both {other} and {name} splits"
                )));
            }
        }
    }
    if let Some(&v) = split.train.iter().find(|&&v| labels[v].is_none()) {
        return Err(Error::InvalidGraph(format!(
            "train node {v} has no label"
        )));
    }
    Ok(())
}

/// Connected components in order of their smallest node id.
pub fn connected_components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.num_nodes();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Induced subgraph on the largest connected component, re-indexed in input
/// order. Among equally large components the one holding the smallest node id
/// wins.
pub fn largest_connected_component(g: &Graph) -> Result<Graph> {
    if g.num_nodes() == 0 {
        return Err(Error::InvalidGraph("graph has no nodes".into()));
    }
    let components = connected_components(g);
    // max_by_key returns the last maximum; iterate in reverse to keep the first.
    let keep = components
        .iter()
        .rev()
        .max_by_key(|c| c.len())
        .expect("non-empty graph has a component");
    Ok(induced_subgraph(g, keep))
}

/// Subgraph on `nodes` (sorted ascending), renumbered `0..nodes.len()`.
pub fn induced_subgraph(g: &Graph, nodes: &[usize]) -> Graph {
    let mut new_id = vec![usize::MAX; g.num_nodes()];
    for (i, &v) in nodes.iter().enumerate() {
        new_id[v] = i;
    }
    let edges: BTreeSet<_> = g
        .edges()
        .filter(|&(u, v)| new_id[u] != usize::MAX && new_id[v] != usize::MAX)
        .map(|(u, v)| (new_id[u], new_id[v]))
        .collect();
    let features = g.features.select(Axis(0), nodes);
    let labels = nodes.iter().map(|&v| g.labels[v]).collect();
    let remap = |ids: &[usize]| -> Vec<usize> {
        ids.iter()
            .filter(|&&v| new_id[v] != usize::MAX)
            .map(|&v| new_id[v])
            .collect()
    };
    let split = Split {
        train: remap(&g.split.train),
        val: remap(&g.split.val),
        test: remap(&g.split.test),
    };
    Graph::from_edge_set(nodes.len(), &edges, features, labels, g.num_classes, split)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Graph with `n` nodes, 1-d features equal to the node id, all labels 0.
    pub fn plain(n: usize, edges: &[(usize, usize)]) -> Graph {
        let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        Graph::new(edges, features, vec![Some(0); n], 1, Split::default()).unwrap()
    }
}
