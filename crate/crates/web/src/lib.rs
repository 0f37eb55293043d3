//! Browser demo. [`Session`] holds a small SBM graph and its surrogate, and
//! exposes the three interactive steps (attack, detect, ROC) as JSON so the
//! page in `www/` only has to draw. [`Demo`] is the `wasm-bindgen` wrapper.

use neighvar::baselines::{baseline_scores, BaselineKind};
use neighvar::graph::{generate_sbm, largest_connected_component, normalize_adjacency};
use neighvar::harness::{auc, matched_population, poison, ExperimentConfig};
use neighvar::surrogate::{predict, predicted_labels, train_surrogate};
use neighvar::{AttackKind, DetectParams, Error, FlipOp, Graph, PoisonedGraph, Result, SurrogateModel, Variant};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    pub x: f64,
    pub y: f64,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphView {
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackView {
    pub kind: AttackKind,
    pub targets: Vec<usize>,
    pub victims: Vec<usize>,
    pub added: Vec<(usize, usize)>,
    pub removed: Vec<(usize, usize)>,
    pub misclassified: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectView {
    pub detector: String,
    /// Oriented scores, `None` for nodes outside the candidate set.
    pub scores: Vec<Option<f64>>,
    pub auc: f64,
    pub population: usize,
    /// The highest-scoring nodes of the population, most suspicious first.
    pub top: Vec<usize>,
}

/// ROC curve through every distinct score threshold, from (0,0) to (1,1).
/// Tied scores form a single diagonal step, so the trapezoidal area equals
/// the Mann–Whitney AUC.
pub fn roc_curve(scores: &[f64], victims: &[usize], population: &[usize]) -> Vec<(f64, f64)> {
    let mut ranked: Vec<(f64, bool)> = population.iter().map(|&v| (scores[v], victims.contains(&v))).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pos = ranked.iter().filter(|r| r.1).count().max(1) as f64;
    let neg = ranked.iter().filter(|r| !r.1).count().max(1) as f64;
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut points = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < ranked.len() {
        let s = ranked[i].0;
        while i < ranked.len() && ranked[i].0.total_cmp(&s).is_eq() {
            if ranked[i].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / neg, tp / pos));
    }
    points
}

/// Golden-angle disc per class, discs spaced on a circle. Fixed by node
/// order alone.
fn layout(g: &Graph) -> Vec<Node> {
    let classes = g.num_classes().max(1);
    let mut seen = vec![0usize; classes + 1];
    let sizes = {
        let mut s = vec![0usize; classes + 1];
        for l in g.labels() {
            s[l.unwrap_or(classes)] += 1;
        }
        s
    };
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    g.labels()
        .iter()
        .map(|&label| {
            let c = label.unwrap_or(classes);
            let i = seen[c];
            seen[c] += 1;
            let angle = std::f64::consts::TAU * c as f64 / classes as f64;
            let (cx, cy) = if c == classes { (0.0, 0.0) } else { (0.5 * angle.cos(), 0.5 * angle.sin()) };
            let r = 0.4 * ((i as f64 + 0.5) / sizes[c].max(1) as f64).sqrt();
            let t = i as f64 * golden;
            Node {
                x: cx + r * t.cos(),
                y: cy + r * t.sin(),
                label,
            }
        })
        .collect()
}

struct Attacked {
    poisoned: PoisonedGraph,
    model: SurrogateModel,
    population: Vec<usize>,
}

pub struct Session {
    cfg: ExperimentConfig,
    graph: Graph,
    model: SurrogateModel,
    attacked: Option<Attacked>,
    last: Option<Vec<f64>>,
}

impl Session {
    /// Two-block SBM with `block_size` nodes per block, restricted to its
    /// largest component, with a trained surrogate.
    pub fn new(seed: u64, block_size: usize) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.graph.sbm.block_sizes = vec![block_size; 2];
        cfg.attack.targets = 10;
        let cfg = cfg.with_seed(seed);
        cfg.validate()?;
        let graph = largest_connected_component(&generate_sbm(&cfg.graph.sbm)?)?;
        let model = train_surrogate(&graph, &normalize_adjacency(&graph), &cfg.train)?;
        Ok(Self {
            cfg,
            graph,
            model,
            attacked: None,
            last: None,
        })
    }

    /// The current graph: poisoned once an attack has run.
    pub fn current(&self) -> &Graph {
        self.attacked.as_ref().map_or(&self.graph, |a| &a.poisoned.graph)
    }

    pub fn view(&self) -> GraphView {
        let g = self.current();
        GraphView {
            nodes: layout(g),
            edges: g.edges().collect(),
        }
    }

    /// Poisons the clean graph and retrains the surrogate on the result.
    /// `budget_frac` is per target degree for FGA and per edge count for
    /// the global attacks.
    pub fn attack(&mut self, kind: &str, targets: usize, budget_frac: f64) -> Result<AttackView> {
        let mut cfg = self.cfg.clone();
        cfg.attack.kind = kind.parse()?;
        cfg.attack.targets = targets;
        cfg.attack.budget_frac = Some(budget_frac);
        cfg.attack.validate()?;
        if cfg.attack.is_zero_budget() {
            return Err(Error::Config("budget must be positive".into()));
        }
        let poisoned = poison(&self.graph, &self.model, &cfg)?;
        if poisoned.victims().is_empty() {
            return Err(Error::Evaluation("the attack produced no victims".into()));
        }
        let gp = &poisoned.graph;
        let adj = normalize_adjacency(gp);
        let model = train_surrogate(gp, &adj, &cfg.train)?;
        let pred = predicted_labels(&model, &adj)?;
        let t = &poisoned.perturbation.targets;
        let misclassified = t.iter().copied().filter(|&v| gp.labels()[v].is_some_and(|y| y != pred[v])).collect();
        let population = if cfg.attack.kind.is_targeted() {
            matched_population(gp, poisoned.victims(), cfg.eval.matched_ratio, cfg.seed)
        } else {
            (0..gp.num_nodes()).collect()
        };
        let (mut added, mut removed) = (Vec::new(), Vec::new());
        for f in &poisoned.perturbation.flips {
            match f.op {
                FlipOp::Add => added.push(f.pair()),
                FlipOp::Del => removed.push(f.pair()),
            }
        }
        let view = AttackView {
            kind: cfg.attack.kind,
            targets: t.clone(),
            victims: poisoned.victims().to_vec(),
            added,
            removed,
            misclassified,
        };
        self.attacked = Some(Attacked {
            poisoned,
            model,
            population,
        });
        self.last = None;
        Ok(view)
    }

    /// Scores the poisoned graph with `detector` (`feat`, `sim`, `jaccard`,
    /// `prox` or `jsd`). Walk length and γ apply to the detecta variants.
    pub fn detect(&mut self, detector: &str, walk_len: usize, gamma: f64) -> Result<DetectView> {
        let a = self
            .attacked
            .as_ref()
            .ok_or_else(|| Error::Config("run an attack first".into()))?;
        let gp = &a.poisoned.graph;
        let (name, scores) = match detector.parse::<Variant>() {
            Ok(variant) => {
                let p = DetectParams {
                    variant,
                    walk_len,
                    gamma,
                    seed: self.cfg.seed,
                    ..DetectParams::default()
                };
                p.validate()?;
                (format!("detecta_{variant}"), neighvar::detect(gp, &a.model, &p)?.oriented_scores())
            }
            Err(_) => {
                let kind: BaselineKind = detector.parse()?;
                let probs = predict(&a.model, &normalize_adjacency(gp))?;
                (kind.to_string(), baseline_scores(kind, gp, probs.view())?)
            }
        };
        let value = auc(&scores, a.poisoned.victims(), &a.population)?;
        let mut top = a.population.clone();
        top.sort_by(|&u, &v| scores[v].total_cmp(&scores[u]).then(u.cmp(&v)));
        top.truncate(a.poisoned.victims().len());
        let view = DetectView {
            detector: name,
            scores: scores.iter().map(|&s| s.is_finite().then_some(s)).collect(),
            auc: value,
            population: a.population.len(),
            top,
        };
        self.last = Some(scores);
        Ok(view)
    }

    /// ROC points of the most recent detection.
    pub fn roc(&self) -> Result<Vec<(f64, f64)>> {
        let (Some(a), Some(scores)) = (&self.attacked, &self.last) else {
            return Err(Error::Config("run a detector first".into()));
        };
        Ok(roc_curve(scores, a.poisoned.victims(), &a.population))
    }
}

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(value: &impl Serialize) -> std::result::Result<String, JsValue> {
    serde_json::to_string(value).map_err(js_err)
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, block_size: u32) -> std::result::Result<Demo, JsValue> {
        Ok(Demo {
            session: Session::new(seed.into(), block_size as usize).map_err(js_err)?,
        })
    }

    pub fn graph(&self) -> std::result::Result<String, JsValue> {
        to_json(&self.session.view())
    }

    pub fn attack(&mut self, kind: &str, targets: u32, budget_frac: f64) -> std::result::Result<String, JsValue> {
        to_json(&self.session.attack(kind, targets as usize, budget_frac).map_err(js_err)?)
    }

    pub fn detect(&mut self, detector: &str, walk_len: u32, gamma: f64) -> std::result::Result<String, JsValue> {
        to_json(&self.session.detect(detector, walk_len as usize, gamma).map_err(js_err)?)
    }

    pub fn roc(&self) -> std::result::Result<String, JsValue> {
        to_json(&self.session.roc().map_err(js_err)?)
    }
}
