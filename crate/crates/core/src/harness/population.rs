use std::collections::BTreeSet;

use rand::seq::index::sample;

use crate::graph::Graph;
use crate::seed::{self, stream};

/// Degree decile (0..=9) of every node, by rank of `(degree, id)`.
pub fn degree_deciles(g: &Graph) -> Vec<usize> {
    let n = g.num_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (g.degree(v), v));
    let mut decile = vec![0; n];
    for (rank, v) in order.into_iter().enumerate() {
        decile[v] = rank * 10 / n.max(1);
    }
    decile
}

/// `targets` plus `ratio` non-targets per target, each drawn from the
/// target's degree decile (widening to neighboring deciles when one runs
/// dry). Sorted by id.
pub fn matched_population(g: &Graph, targets: &[usize], ratio: usize, seed: u64) -> Vec<usize> {
    let decile = degree_deciles(g);
    let target_set: BTreeSet<usize> = targets.iter().copied().collect();
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); 10];
    for v in (0..g.num_nodes()).filter(|v| !target_set.contains(v)) {
        pools[decile[v]].push(v);
    }
    let mut rng = seed::rng(seed, stream::POPULATION);
    let mut chosen = target_set.clone();
    for &t in &target_set {
        let mut need = ratio;
        let home = decile[t] as isize;
        for dist in 0..10isize {
            let bins: &[isize] = if dist == 0 { &[home] } else { &[home - dist, home + dist] };
            for &bin in bins.iter().filter(|b| (0..10).contains(*b)) {
                let pool = &mut pools[bin as usize];
                let take = need.min(pool.len());
                let mut picked: Vec<usize> = sample(&mut rng, pool.len(), take).into_vec();
                picked.sort_unstable_by(|a, b| b.cmp(a));
                for i in picked {
                    chosen.insert(pool.swap_remove(i));
                }
                need -= take;
            }
            if need == 0 {
                break;
            }
        }
    }
    chosen.into_iter().collect()
}
