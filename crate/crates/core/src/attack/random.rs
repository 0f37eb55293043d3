//! Label-aware random rewiring (DICE) and unstructured random flips.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{flip_endpoints, AttackKind, FlipLog, Perturbation, PoisonedGraph};
use crate::graph::Graph;
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Ground-truth labels where known, `fallback` (typically surrogate
/// predictions) elsewhere.
pub fn dice_labels(g: &Graph, fallback: &[usize]) -> Vec<usize> {
    g.labels()
        .iter()
        .zip(fallback)
        .map(|(l, &p)| l.unwrap_or(p))
        .collect()
}

/// Uniform absent pair accepted by `accept`, excluding pairs already flipped.
/// Rejection sampling first, then exhaustive enumeration so an empty pool is
/// detected exactly.
fn sample_absent(
    rng: &mut ChaCha8Rng,
    n: usize,
    log: &FlipLog,
    accept: impl Fn(usize, usize) -> bool,
) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let ok = |u: usize, v: usize| u != v && !log.has_edge(u, v) && !log.was_flipped(u, v) && accept(u, v);
    for _ in 0..64 {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if ok(u, v) {
            return Some((u.min(v), u.max(v)));
        }
    }
    let pool: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| ok(u, v))
        .collect();
    (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
}

fn take_random<T>(rng: &mut ChaCha8Rng, pool: &mut Vec<T>) -> Option<T> {
    (!pool.is_empty()).then(|| {
        let i = rng.random_range(0..pool.len());
        pool.swap_remove(i)
    })
}

fn global_result(g: &Graph, log: FlipLog, kind: AttackKind, budget: usize, seed: u64) -> PoisonedGraph {
    let graph = g.with_edges(log.edges());
    let flips = log.into_flips();
    PoisonedGraph {
        graph,
        perturbation: Perturbation {
            kind,
            seed,
            budget,
            targets: Vec::new(),
            victims: flip_endpoints(&flips),
            flips,
        },
    }
}

/// Each step deletes a random same-label edge or inserts a random
/// different-label non-edge with equal probability, using the other action
/// when one pool is empty. Stops early when both are empty.
pub fn attack_dice(g: &Graph, labels: &[usize], budget: usize, seed: u64) -> Result<PoisonedGraph> {
    if labels.len() != g.num_nodes() {
        return Err(Error::dim(format!("{} labels", g.num_nodes()), labels.len()));
    }
    let mut rng = seed::rng(seed, stream::ATTACK);
    let mut log = FlipLog::new(g);
    let mut internal: Vec<(usize, usize)> = g.edges().filter(|&(u, v)| labels[u] == labels[v]).collect();
    let n = g.num_nodes();
    for _ in 0..budget {
        let delete_first = rng.random_bool(0.5);
        let mut pair = None;
        for delete in [delete_first, !delete_first] {
            pair = if delete {
                take_random(&mut rng, &mut internal)
            } else {
                sample_absent(&mut rng, n, &log, |u, v| labels[u] != labels[v])
            };
            if pair.is_some() {
                break;
            }
        }
        let Some((u, v)) = pair else { break };
        log.toggle(u, v);
    }
    Ok(global_result(g, log, AttackKind::Dice, budget, seed))
}

/// Uniformly random flips: add or delete with equal probability, falling back
/// to the other action when its pool is empty. No pair is flipped twice.
pub fn attack_random(g: &Graph, budget: usize, seed: u64) -> Result<PoisonedGraph> {
    let mut rng = seed::rng(seed, stream::ATTACK);
    let mut log = FlipLog::new(g);
    let mut existing: Vec<(usize, usize)> = g.edges().collect();
    let n = g.num_nodes();
    for _ in 0..budget {
        let delete_first = rng.random_bool(0.5);
        let mut pair = None;
        for delete in [delete_first, !delete_first] {
            pair = if delete {
                take_random(&mut rng, &mut existing)
            } else {
                sample_absent(&mut rng, n, &log, |_, _| true)
            };
            if pair.is_some() {
                break;
            }
        }
        let Some((u, v)) = pair else { break };
        log.toggle(u, v);
    }
    Ok(global_result(g, log, AttackKind::Random, budget, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{apply_flips, FlipOp};
    use crate::graph::fixtures::plain;
    use crate::graph::{generate_sbm, normalize_adjacency, SbmConfig};
    use crate::surrogate::{accuracy, predicted_labels, train_surrogate, TrainConfig};
    use proptest::prelude::*;

    fn sbm(seed: u64) -> Graph {
        generate_sbm(&SbmConfig { seed, ..SbmConfig::default() }).unwrap()
    }

    fn truth(g: &Graph) -> Vec<usize> {
        g.labels().iter().map(|l| l.unwrap()).collect()
    }

    #[test]
    fn zero_budget_is_identity() {
        let g = sbm(0);
        let labels = truth(&g);
        let p = attack_dice(&g, &labels, 0, 1).unwrap();
        assert_eq!(p.graph, g);
        assert!(p.victims().is_empty());
        let p = attack_random(&g, 0, 1).unwrap();
        assert_eq!(p.graph, g);
    }

    #[test]
    fn dice_deletes_inside_and_connects_across() {
        let g = sbm(2);
        let labels = truth(&g);
        let p = attack_dice(&g, &labels, 60, 7).unwrap();
        assert_eq!(p.perturbation.budget_used(), 60);
        let (mut adds, mut dels) = (0, 0);
        for f in &p.perturbation.flips {
            match f.op {
                FlipOp::Del => {
                    dels += 1;
                    assert_eq!(labels[f.u], labels[f.v]);
                }
                FlipOp::Add => {
                    adds += 1;
                    assert_ne!(labels[f.u], labels[f.v]);
                }
            }
        }
        assert!(adds > 10 && dels > 10, "{adds} adds, {dels} dels");
    }

    #[test]
    fn dice_falls_back_and_stops_when_pools_empty() {
        // One label, one edge: no cross-label pairs, a single internal edge.
        let g = plain(3, &[(0, 1)]);
        let p = attack_dice(&g, &[0, 0, 0], 5, 0).unwrap();
        assert_eq!(p.perturbation.budget_used(), 1);
        assert_eq!(p.perturbation.flips[0].op, FlipOp::Del);
        assert_eq!(p.perturbation.budget, 5);
    }

    #[test]
    fn random_uses_full_budget_and_stops_when_saturated() {
        let g = sbm(3);
        let p = attack_random(&g, 25, 4).unwrap();
        assert_eq!(p.perturbation.budget_used(), 25);
        assert_eq!(apply_flips(&g, &p.perturbation.flips).unwrap(), p.graph);

        let tiny = plain(3, &[(0, 1)]);
        let p = attack_random(&tiny, 10, 0).unwrap();
        assert_eq!(p.perturbation.budget_used(), 3);
    }

    #[test]
    fn dice_hurts_accuracy() {
        let g = sbm(0);
        let labels = truth(&g);
        let cfg = TrainConfig::default();
        let adj = normalize_adjacency(&g);
        let clean = train_surrogate(&g, &adj, &cfg).unwrap();
        let clean_acc = accuracy(&predicted_labels(&clean, &adj).unwrap(), g.labels(), &g.split().test).unwrap();
        let budget = (0.05 * g.num_edges() as f64).round() as usize;
        let p = attack_dice(&g, &labels, budget, 0).unwrap();
        let adj_p = normalize_adjacency(&p.graph);
        let poisoned = train_surrogate(&p.graph, &adj_p, &cfg).unwrap();
        let acc = accuracy(&predicted_labels(&poisoned, &adj_p).unwrap(), g.labels(), &g.split().test).unwrap();
        assert!(acc < clean_acc, "{acc} vs clean {clean_acc}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn global_attacks_keep_victim_and_replay_invariants(seed in any::<u64>(), budget in 0usize..40) {
            let g = sbm(seed % 7);
            let labels = truth(&g);
            for p in [attack_dice(&g, &labels, budget, seed).unwrap(), attack_random(&g, budget, seed).unwrap()] {
                prop_assert_eq!(&apply_flips(&g, &p.perturbation.flips).unwrap(), &p.graph);
                prop_assert_eq!(p.victims(), &flip_endpoints(&p.perturbation.flips)[..]);
                prop_assert!(p.perturbation.flips.len() <= budget);
                prop_assert!(p.perturbation.flips.iter().all(|f| f.u < f.v));
            }
            prop_assert_eq!(attack_dice(&g, &labels, budget, seed).unwrap(), attack_dice(&g, &labels, budget, seed).unwrap());
        }
    }
}
