use std::collections::BTreeSet;

use crate::{Error, Result};

/// Probability that a uniformly drawn victim outscores a uniformly drawn
/// non-victim of `population`, counting ties as one half.
///
/// `scores` is indexed by node id. Negatives are sorted once and each
/// positive is placed by binary search, so the count is exact.
pub fn auc(scores: &[f64], victims: &[usize], population: &[usize]) -> Result<f64> {
    let victim_set: BTreeSet<usize> = victims.iter().copied().collect();
    let pop_set: BTreeSet<usize> = population.iter().copied().collect();
    if let Some(&v) = victim_set.iter().find(|v| !pop_set.contains(v)) {
        return Err(Error::Evaluation(format!("victim {v} is outside the population")));
    }
    if let Some(&v) = pop_set.iter().find(|&&v| v >= scores.len()) {
        return Err(Error::Evaluation(format!("node {v} has no score")));
    }
    if pop_set.iter().any(|&v| scores[v].is_nan()) {
        return Err(Error::Evaluation("NaN score in population".into()));
    }
    let mut negatives: Vec<f64> = pop_set
        .iter()
        .filter(|v| !victim_set.contains(v))
        .map(|&v| scores[v])
        .collect();
    if victim_set.is_empty() {
        return Err(Error::Evaluation("no victims in population".into()));
    }
    if negatives.is_empty() {
        return Err(Error::Evaluation("population has no non-victims".into()));
    }
    negatives.sort_by(f64::total_cmp);
    let mut twice_wins: u128 = 0;
    for &v in &victim_set {
        let s = scores[v];
        let below = negatives.partition_point(|&x| x < s);
        let not_above = negatives.partition_point(|&x| x <= s);
        twice_wins += 2 * below as u128 + (not_above - below) as u128;
    }
    let pairs = victim_set.len() as u128 * negatives.len() as u128;
    Ok(twice_wins as f64 / (2 * pairs) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(scores: &[f64], victims: &[usize], population: &[usize]) -> f64 {
        let neg: Vec<usize> = population.iter().copied().filter(|v| !victims.contains(v)).collect();
        let mut total = 0.0;
        for &p in victims {
            for &q in &neg {
                total += if scores[p] > scores[q] {
                    1.0
                } else if scores[p] == scores[q] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (victims.len() * neg.len()) as f64
    }

    #[test]
    fn perfect_separation_and_all_ties() {
        let s = [0.9, 0.8, 0.1, 0.2];
        assert_eq!(auc(&s, &[0, 1], &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 5], &[1, 4], &[0, 1, 2, 3, 4]).unwrap(), 0.5);
    }

    #[test]
    fn hand_counted_pairs() {
        // a=0.9, b=0.4 victims; c=0.5, d=0.1.
        let s = [0.9, 0.4, 0.5, 0.1];
        assert_eq!(auc(&s, &[0, 1], &[0, 1, 2, 3]).unwrap(), 0.75);
    }

    #[test]
    fn infinite_scores_tie_with_each_other() {
        let s = [f64::NEG_INFINITY, f64::NEG_INFINITY, 1.0];
        assert_eq!(auc(&s, &[0], &[0, 1, 2]).unwrap(), 0.25);
    }

    #[test]
    fn empty_sides_are_errors() {
        let s = [0.1, 0.2];
        assert!(auc(&s, &[], &[0, 1]).is_err());
        assert!(auc(&s, &[0, 1], &[0, 1]).is_err());
        assert!(auc(&s, &[0], &[1]).is_err());
        assert!(auc(&[f64::NAN, 0.1], &[0], &[0, 1]).is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, Vec<usize>)> {
        (2usize..200).prop_flat_map(|n| {
            (
                proptest::collection::vec(prop_oneof![(0u8..5).prop_map(f64::from), -1.0f64..1.0], n),
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_filter_map("needs both classes", |(scores, vic, extra)| {
                    let victims: Vec<usize> = (0..scores.len()).filter(|&i| vic[i]).collect();
                    let population: Vec<usize> = (0..scores.len()).filter(|&i| vic[i] || extra[i]).collect();
                    (!victims.is_empty() && population.len() > victims.len())
                        .then_some((scores, victims, population))
                })
        })
    }

    proptest! {
        #[test]
        fn matches_all_pairs_oracle((scores, victims, population) in arb_case()) {
            let got = auc(&scores, &victims, &population).unwrap();
            prop_assert_eq!(got, brute_force(&scores, &victims, &population));
        }

        #[test]
        fn negation_complements_without_ties(n in 3usize..120, seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
            scores.shuffle(&mut rng);
            let victims: Vec<usize> = (0..n / 3).collect();
            let population: Vec<usize> = (0..n).collect();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let sum = auc(&scores, &victims, &population).unwrap() + auc(&neg, &victims, &population).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-15);
        }
    }
}
