//! Greedy gradient attack on the linear surrogate.
//!
//! For target `t` with original label `y` the attack loss is
//! `-log softmax(Â²Z)[t][y]` with `Z = XW` held fixed. Its gradient with
//! respect to a symmetric adjacency entry is computed in closed form,
//! including the degree terms of the normalization.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{AttackKind, FlipLog, Perturbation, PoisonedGraph};
use crate::graph::{normalize_adjacency, Graph, NormalizedAdjacency};
use crate::seed::{self, stream};
use crate::surrogate::{argmax_rows, softmax_row, SurrogateModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgaMode {
    Direct,
    /// Flips incident to any target are forbidden.
    Indirect,
}

/// Flips allotted to each target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetBudget {
    Fixed(usize),
    /// The target's degree in the clean graph.
    Degree,
    /// `ceil(fraction · degree)`.
    DegreeFraction(f64),
}

impl TargetBudget {
    pub fn flips_for(&self, degree: usize) -> usize {
        match *self {
            TargetBudget::Fixed(b) => b,
            TargetBudget::Degree => degree,
            TargetBudget::DegreeFraction(f) => (f * degree as f64).ceil().max(0.0) as usize,
        }
    }
}

fn spmv(adj: &NormalizedAdjacency, x: &Array1<f64>) -> Array1<f64> {
    Array1::from_shape_fn(adj.num_nodes(), |u| adj.row(u).map(|(w, a)| a * x[w]).sum())
}

/// Attack loss for `target` and its dense symmetric gradient: entry `(u, v)`
/// is `∂L/∂A_uv` where `A_uv` and `A_vu` move together. The diagonal is zero.
pub fn attack_loss_gradient(
    g: &Graph,
    logits: &Array2<f64>,
    target: usize,
    label: usize,
) -> (f64, Array2<f64>) {
    let n = g.num_nodes();
    let adj = normalize_adjacency(g);
    let degree: Vec<f64> = (0..n).map(|i| (g.degree(i) + 1) as f64).collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();

    let hop = adj
        .propagate(logits.view())
        .expect("logits have one row per node");
    let mut row_t = Array1::zeros(logits.ncols());
    let mut s_t = Array1::zeros(n);
    for (k, s) in adj.row(target) {
        row_t.scaled_add(s, &hop.row(k));
        s_t[k] = s;
    }
    let p = softmax_row(row_t.view());
    let loss = -p[label].max(f64::MIN_POSITIVE).ln();
    let mut dp = p;
    dp[label] -= 1.0;

    // ∂L/∂Â = e_t aᵀ + s_t bᵀ
    let a = hop.dot(&dp);
    let b = logits.dot(&dp);
    let sa_t: f64 = adj.row(target).map(|(w, s)| s * a[w]).sum();
    let sb = spmv(&adj, &b);
    let ss_t = spmv(&adj, &s_t);
    let dd: Vec<f64> = (0..n)
        .map(|i| {
            let own = if i == target { sa_t } else { 0.0 };
            -(own + s_t[i] * sb[i] + a[i] * s_t[i] + b[i] * ss_t[i]) / (2.0 * degree[i])
        })
        .collect();

    let ds = |i: usize, k: usize| -> f64 {
        let own = if i == target { a[k] } else { 0.0 };
        own + s_t[i] * b[k]
    };
    let mut grad = Array2::zeros((n, n));
    for u in 0..n {
        for v in u + 1..n {
            let x = (ds(u, v) + ds(v, u)) * inv_sqrt[u] * inv_sqrt[v] + dd[u] + dd[v];
            grad[[u, v]] = x;
            grad[[v, u]] = x;
        }
    }
    (loss, grad)
}

/// Picks `count` targets at random among correctly predicted test nodes of
/// degree at least 2, topping up from the other non-isolated test nodes and
/// then from the whole graph when that pool is too small. Returned sorted.
pub fn select_targets(g: &Graph, predicted: &[usize], count: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed, stream::TARGETS);
    let test = &g.split().test;
    let every: Vec<usize> = (0..g.num_nodes()).collect();
    let tiers: [(&[usize], Box<dyn Fn(usize) -> bool>); 3] = [
        (test, Box::new(|v| g.labels()[v] == Some(predicted[v]) && g.degree(v) >= 2)),
        (test, Box::new(|v| g.degree(v) >= 1)),
        (&every, Box::new(|_| true)),
    ];
    let mut chosen: Vec<usize> = Vec::new();
    for (source, keep) in tiers {
        if chosen.len() >= count {
            break;
        }
        let mut pool: Vec<usize> = source
            .iter()
            .copied()
            .filter(|&v| keep(v) && !chosen.contains(&v))
            .collect();
        pool.shuffle(&mut rng);
        chosen.extend(pool.into_iter().take(count - chosen.len()));
    }
    chosen.sort_unstable();
    chosen
}

/// Greedy gradient attack. Targets are attacked one after another on the
/// evolving graph; each gets `budget.flips_for(clean degree)` flips, fewer if
/// no flip improves its loss.
pub fn attack_fga(
    g: &Graph,
    m: &SurrogateModel,
    targets: &[usize],
    budget: TargetBudget,
    mode: FgaMode,
    seed: u64,
) -> Result<PoisonedGraph> {
    if targets.is_empty() {
        return Err(Error::Config("targeted attack needs at least one target".into()));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= g.num_nodes()) {
        return Err(Error::Config(format!("target {t} out of range")));
    }
    if m.logits().nrows() != g.num_nodes() {
        return Err(Error::dim(format!("{} logit rows", g.num_nodes()), m.logits().nrows()));
    }
    let original = argmax_rows(m.propagated().view());
    let protected: BTreeSet<usize> = targets.iter().copied().collect();
    let mut log = FlipLog::new(g);
    let mut current = g.clone();
    let mut total_budget = 0;
    for &t in targets {
        let allowed = budget.flips_for(g.degree(t));
        total_budget += allowed;
        for _ in 0..allowed {
            let (_, grad) = attack_loss_gradient(&current, m.logits(), t, original[t]);
            let n = current.num_nodes();
            let mut best: Option<(f64, usize, usize)> = None;
            for u in 0..n {
                for v in u + 1..n {
                    if mode == FgaMode::Indirect && (protected.contains(&u) || protected.contains(&v)) {
                        continue;
                    }
                    if log.was_flipped(u, v) {
                        continue;
                    }
                    let sign = if current.has_edge(u, v) { -1.0 } else { 1.0 };
                    let impact = sign * grad[[u, v]];
                    if impact > 0.0 && best.is_none_or(|(b, _, _)| impact > b) {
                        best = Some((impact, u, v));
                    }
                }
            }
            let Some((_, u, v)) = best else { break };
            log.toggle(u, v);
            current = g.with_edges(log.edges());
        }
    }
    let kind = match mode {
        FgaMode::Direct => AttackKind::FgaDirect,
        FgaMode::Indirect => AttackKind::FgaIndirect,
    };
    let mut sorted_targets = targets.to_vec();
    sorted_targets.sort_unstable();
    sorted_targets.dedup();
    Ok(PoisonedGraph {
        graph: current,
        perturbation: Perturbation {
            kind,
            seed,
            budget: total_budget,
            victims: sorted_targets.clone(),
            targets: sorted_targets,
            flips: log.into_flips(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::apply_flips;
    use crate::graph::{generate_sbm, SbmConfig, Split};
    use crate::surrogate::{predicted_labels, train_surrogate, TrainConfig, TrainMeta};
    use ndarray::array;

    /// Attack loss recomputed densely from a (possibly fractional) adjacency.
    fn dense_loss(a: &Array2<f64>, z: &Array2<f64>, t: usize, y: usize) -> f64 {
        let n = a.nrows();
        let tilde = a + &Array2::<f64>::eye(n);
        let d: Vec<f64> = tilde.rows().into_iter().map(|r| r.sum()).collect();
        let s = Array2::from_shape_fn((n, n), |(i, j)| tilde[[i, j]] / (d[i] * d[j]).sqrt());
        let p = s.dot(&s).dot(z);
        -softmax_row(p.row(t))[y].ln()
    }

    fn dense_adjacency(g: &Graph) -> Array2<f64> {
        let n = g.num_nodes();
        let mut a = Array2::zeros((n, n));
        for (u, v) in g.edges() {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
        a
    }

    fn fixture() -> (Graph, Array2<f64>) {
        let features = array![
            [1.0, 0.1],
            [0.9, -0.2],
            [0.7, 0.3],
            [-0.1, 1.0],
            [0.2, 0.8],
            [-0.3, 1.2]
        ];
        let labels = vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)];
        let split = Split {
            train: vec![0, 3],
            val: vec![1, 4],
            test: vec![2, 5],
        };
        let g = Graph::new(&[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)], features, labels, 2, split)
            .unwrap();
        let w = array![[1.5, -0.7], [-0.4, 1.3]];
        let z = g.features().dot(&w);
        (g, z)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (g, z) = fixture();
        let a = dense_adjacency(&g);
        for (t, y) in [(2, 0), (0, 0), (4, 1)] {
            let (loss, grad) = attack_loss_gradient(&g, &z, t, y);
            assert!((loss - dense_loss(&a, &z, t, y)).abs() < 1e-12);
            let h = 1e-6;
            for u in 0..6 {
                for v in u + 1..6 {
                    let mut plus = a.clone();
                    plus[[u, v]] += h;
                    plus[[v, u]] += h;
                    let mut minus = a.clone();
                    minus[[u, v]] -= h;
                    minus[[v, u]] -= h;
                    let fd = (dense_loss(&plus, &z, t, y) - dense_loss(&minus, &z, t, y)) / (2.0 * h);
                    let an = grad[[u, v]];
                    assert!(
                        (fd - an).abs() <= 1e-6 * fd.abs().max(1e-3),
                        "t={t} ({u},{v}): fd {fd} analytic {an}"
                    );
                    assert_eq!(grad[[u, v]], grad[[v, u]]);
                }
            }
        }
    }

    fn fixture_model() -> (Graph, SurrogateModel) {
        let (g, _) = fixture();
        let adj = normalize_adjacency(&g);
        let w = array![[1.5, -0.7], [-0.4, 1.3]];
        let m = SurrogateModel::from_weights(w, &g, &adj, 0, TrainMeta::default()).unwrap();
        (g, m)
    }

    #[test]
    fn zero_budget_leaves_graph_unchanged() {
        let (g, m) = fixture_model();
        let p = attack_fga(&g, &m, &[2], TargetBudget::Fixed(0), FgaMode::Direct, 0).unwrap();
        assert_eq!(p.graph, g);
        assert!(p.perturbation.flips.is_empty());
        assert_eq!(p.victims(), &[2]);
    }

    #[test]
    fn greedy_pick_is_near_the_exact_best_single_flip() {
        let (g, m) = fixture_model();
        let original = argmax_rows(m.propagated().view());
        for t in 0..6 {
            let y = original[t];
            let base = dense_loss(&dense_adjacency(&g), m.logits(), t, y);
            let Ok(p) = attack_fga(&g, &m, &[t], TargetBudget::Fixed(1), FgaMode::Direct, 0) else {
                panic!()
            };
            let Some(chosen) = p.perturbation.flips.first() else { continue };
            let mut gains: Vec<((usize, usize), f64)> = Vec::new();
            for u in 0..6 {
                for v in u + 1..6 {
                    let mut a = dense_adjacency(&g);
                    let x = 1.0 - a[[u, v]];
                    a[[u, v]] = x;
                    a[[v, u]] = x;
                    gains.push(((u, v), dense_loss(&a, m.logits(), t, y) - base));
                }
            }
            gains.sort_by(|a, b| b.1.total_cmp(&a.1));
            let rank = gains.iter().position(|(pair, _)| *pair == chosen.pair()).unwrap();
            assert!(rank < 3, "target {t}: chosen {:?} ranked {rank} in {gains:?}", chosen.pair());
        }
    }

    #[test]
    fn indirect_mode_never_touches_targets() {
        let (g, m) = fixture_model();
        let p = attack_fga(&g, &m, &[2, 4], TargetBudget::Fixed(3), FgaMode::Indirect, 0).unwrap();
        assert!(!p.perturbation.flips.is_empty());
        for f in &p.perturbation.flips {
            assert!(![f.u, f.v].contains(&2) && ![f.u, f.v].contains(&4));
        }
        assert_eq!(apply_flips(&g, &p.perturbation.flips).unwrap(), p.graph);
        assert_eq!(p.perturbation.kind, AttackKind::FgaIndirect);
    }

    #[test]
    fn degree_budget_misclassifies_sbm_targets() {
        let g = generate_sbm(&SbmConfig::default()).unwrap();
        let adj = normalize_adjacency(&g);
        let m = train_surrogate(&g, &adj, &TrainConfig::default()).unwrap();
        let clean_pred = predicted_labels(&m, &adj).unwrap();
        let targets = select_targets(&g, &clean_pred, 20, 0);
        assert_eq!(targets.len(), 20);
        let clean_wrong = targets.iter().filter(|&&t| g.labels()[t] != Some(clean_pred[t])).count();

        let p = attack_fga(&g, &m, &targets, TargetBudget::Degree, FgaMode::Direct, 0).unwrap();
        let budget: usize = targets.iter().map(|&t| g.degree(t)).sum();
        assert_eq!(p.perturbation.budget, budget);
        assert!(p.perturbation.budget_used() <= budget);
        assert_eq!(apply_flips(&g, &p.perturbation.flips).unwrap(), p.graph);

        let adj_p = normalize_adjacency(&p.graph);
        let retrained = train_surrogate(&p.graph, &adj_p, &TrainConfig::default()).unwrap();
        let pred = predicted_labels(&retrained, &adj_p).unwrap();
        let wrong = targets.iter().filter(|&&t| g.labels()[t] != Some(pred[t])).count();
        assert!(wrong > clean_wrong, "{wrong} vs {clean_wrong}");
    }

    #[test]
    fn budget_rules() {
        assert_eq!(TargetBudget::Fixed(3).flips_for(10), 3);
        assert_eq!(TargetBudget::Degree.flips_for(7), 7);
        assert_eq!(TargetBudget::DegreeFraction(0.5).flips_for(7), 4);
        assert_eq!(TargetBudget::DegreeFraction(0.0).flips_for(7), 0);
    }
}
