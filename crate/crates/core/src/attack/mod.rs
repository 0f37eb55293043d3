//! Edge-flip poisoning attacks and the bookkeeping that tells evaluation
//! which nodes are victims.

mod fga;
mod random;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result};

pub use fga::{attack_fga, attack_loss_gradient, select_targets, FgaMode, TargetBudget};
pub use random::{attack_dice, attack_random, dice_labels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipOp {
    Add,
    Del,
}

/// One edge toggle, normalized so that `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flip {
    pub op: FlipOp,
    pub u: usize,
    pub v: usize,
}

impl Flip {
    pub fn new(op: FlipOp, a: usize, b: usize) -> Self {
        Self {
            op,
            u: a.min(b),
            v: a.max(b),
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "fga")]
    FgaDirect,
    #[serde(rename = "fga-indirect")]
    FgaIndirect,
    #[serde(rename = "dice")]
    Dice,
    #[serde(rename = "random")]
    Random,
}

impl AttackKind {
    pub fn is_targeted(self) -> bool {
        matches!(self, AttackKind::FgaDirect | AttackKind::FgaIndirect)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::FgaDirect => "fga",
            AttackKind::FgaIndirect => "fga-indirect",
            AttackKind::Dice => "dice",
            AttackKind::Random => "random",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fga" => Ok(AttackKind::FgaDirect),
            "fga-indirect" => Ok(AttackKind::FgaIndirect),
            "dice" => Ok(AttackKind::Dice),
            "random" => Ok(AttackKind::Random),
            other => Err(Error::Config(format!("unknown attack kind {other:?}"))),
        }
    }
}

/// An ordered list of flips plus what produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: AttackKind,
    pub seed: u64,
    /// Total flips the attack was allowed; `flips.len()` is what it used.
    pub budget: usize,
    pub targets: Vec<usize>,
    pub victims: Vec<usize>,
    pub flips: Vec<Flip>,
}

impl Perturbation {
    pub fn budget_used(&self) -> usize {
        self.flips.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A poisoned graph with the perturbation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PoisonedGraph {
    pub graph: Graph,
    pub perturbation: Perturbation,
}

impl PoisonedGraph {
    pub fn victims(&self) -> &[usize] {
        &self.perturbation.victims
    }
}

/// Sorted distinct endpoints of `flips`.
pub fn flip_endpoints(flips: &[Flip]) -> Vec<usize> {
    flips
        .iter()
        .flat_map(|f| [f.u, f.v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Applies `flips` in order. Every `add` must name a non-edge and every `del`
/// an edge of the graph as it stands at that point.
pub fn apply_flips(g: &Graph, flips: &[Flip]) -> Result<Graph> {
    let n = g.num_nodes();
    let mut edges = g.edge_set();
    for (index, flip) in flips.iter().enumerate() {
        let fail = |message: String| Err(Error::InvalidFlip { index, message });
        let (u, v) = (flip.u.min(flip.v), flip.u.max(flip.v));
        if u == v {
            return fail(format!("self-loop on node {u}"));
        }
        if v >= n {
            return fail(format!("node {v} out of range for {n} nodes"));
        }
        match flip.op {
            FlipOp::Add if !edges.insert((u, v)) => {
                return fail(format!("add ({u}, {v}) but the edge exists"))
            }
            FlipOp::Del if !edges.remove(&(u, v)) => {
                return fail(format!("del ({u}, {v}) but there is no such edge"))
            }
            _ => {}
        }
    }
    Ok(g.with_edges(&edges))
}

/// Edge set tracked alongside flips while an attack runs.
#[derive(Debug, Clone)]
pub(crate) struct FlipLog {
    edges: BTreeSet<(usize, usize)>,
    flips: Vec<Flip>,
    touched: BTreeSet<(usize, usize)>,
}

impl FlipLog {
    pub fn new(g: &Graph) -> Self {
        Self {
            edges: g.edge_set(),
            flips: Vec::new(),
            touched: BTreeSet::new(),
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn was_flipped(&self, u: usize, v: usize) -> bool {
        self.touched.contains(&(u.min(v), u.max(v)))
    }

    /// Toggles the pair and records the flip.
    pub fn toggle(&mut self, u: usize, v: usize) -> Flip {
        let pair = (u.min(v), u.max(v));
        let op = if self.edges.remove(&pair) {
            FlipOp::Del
        } else {
            self.edges.insert(pair);
            FlipOp::Add
        };
        self.touched.insert(pair);
        let flip = Flip::new(op, pair.0, pair.1);
        self.flips.push(flip);
        flip
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn into_flips(self) -> Vec<Flip> {
        self.flips
    }
}
