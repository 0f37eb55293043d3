use ndarray::ArrayView2;

use crate::surrogate::softmax_row;

/// `d(v) = max_c [softmax(Â²Z)[v][c] − softmax(Z)[v][c]]`: the largest drop in
/// any class probability when all of `v`'s edges are removed. Cutting those
/// edges makes row `v` of the two-hop propagation the identity, so the
/// isolated prediction is simply `softmax(Z[v])`.
pub fn candidate_scores(logits: ArrayView2<'_, f64>, propagated: ArrayView2<'_, f64>) -> Vec<f64> {
    logits
        .rows()
        .into_iter()
        .zip(propagated.rows())
        .map(|(z, p)| {
            let isolated = softmax_row(z);
            let full = softmax_row(p);
            full.iter()
                .zip(isolated.iter())
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// The `ceil(γ/100 · n)` highest-scoring nodes, in ascending id order. Ties at
/// the cutoff go to the smaller id.
pub fn select_candidates(scores: &[f64], gamma: f64) -> Vec<usize> {
    let n = scores.len();
    let keep = ((gamma / 100.0) * n as f64).ceil().clamp(0.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}
