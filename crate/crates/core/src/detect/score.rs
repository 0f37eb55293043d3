use ndarray::{Array2, ArrayView2, Axis};

use super::eigen::{power_iteration, DEFAULT_MAX_ITER};

/// Rayleigh-quotient tolerance for scoring, tighter than the power-iteration
/// default so scores are accurate to about 1e-10 relative.
pub const SCORE_TOL: f64 = 1e-13;

/// Updated label-preference vectors of every neighbor of `center`, one row
/// per neighbor in `neighbors` order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodMatrix {
    pub center: usize,
    pub neighbors: Vec<usize>,
    pub rows: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub converged: bool,
}

impl Score {
    fn exact(value: f64) -> Self {
        Self { value, converged: true }
    }
}

/// Rows in a canonical order, so scores do not depend on how the neighbors
/// were listed.
fn canonical_rows(rows: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut order: Vec<usize> = (0..rows.nrows()).collect();
    order.sort_by(|&a, &b| {
        rows.row(a)
            .iter()
            .zip(rows.row(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.select(Axis(0), &order)
}

/// Largest eigenvalue of the sample covariance of the rows (divisor `k − 1`);
/// zero for fewer than two rows.
pub fn score_feat(rows: ArrayView2<'_, f64>) -> Score {
    let k = rows.nrows();
    if k < 2 {
        return Score::exact(0.0);
    }
    let rows = canonical_rows(rows);
    let mean = rows.mean_axis(Axis(0)).expect("k >= 2");
    let centered = &rows - &mean;
    let cov = centered.t().dot(&centered) / (k - 1) as f64;
    let r = power_iteration(cov.view(), SCORE_TOL, DEFAULT_MAX_ITER);
    Score {
        value: r.value.max(0.0),
        converged: r.converged,
    }
}

/// Dominant eigenvalue of the RBF kernel matrix
/// `W[i][j] = exp(−κ‖r_i − r_j‖²)`; zero for fewer than two rows.
pub fn score_sim(rows: ArrayView2<'_, f64>, kappa: f64) -> Score {
    let k = rows.nrows();
    if k < 2 {
        return Score::exact(0.0);
    }
    let rows = canonical_rows(rows);
    let mut kernel = Array2::from_elem((k, k), 1.0);
    for i in 0..k {
        for j in i + 1..k {
            let d2: f64 = rows
                .row(i)
                .iter()
                .zip(rows.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let w = (-kappa * d2).exp();
            kernel[[i, j]] = w;
            kernel[[j, i]] = w;
        }
    }
    let r = power_iteration(kernel.view(), SCORE_TOL, DEFAULT_MAX_ITER);
    Score {
        value: r.value.abs(),
        converged: r.converged,
    }
}
