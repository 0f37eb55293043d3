use ndarray::{Array1, ArrayView2};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Restarts allowed when the iterate stalls in a direction that is not an
/// eigenvector.
const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Array1<f64>,
    pub iterations: usize,
    /// `false` when `max_iter` ran out or restarts were exhausted; `value` is
    /// then the last Rayleigh quotient.
    pub converged: bool,
}

fn normalize(x: &mut Array1<f64>) -> f64 {
    let norm = x.dot(x).sqrt();
    if norm > 0.0 {
        *x /= norm;
    }
    norm
}

/// Deterministic nudge away from the current iterate, different on every
/// restart.
fn perturb(x: &mut Array1<f64>, restart: usize) {
    let k = x.len() as f64;
    for (i, xi) in x.iter_mut().enumerate() {
        let t = ((i + 1) as f64 * 0.618_033_988_749_895 * (restart + 1) as f64).fract();
        *xi += (t - 0.5) / k.sqrt();
    }
    normalize(x);
}

/// Dominant eigenpair (largest `|λ|`) of a symmetric matrix.
///
/// Starts from the normalized all-ones vector and stops once successive
/// Rayleigh quotients differ by less than `tol`. A zero product or a converged
/// quotient with a large residual triggers a deterministic restart.
pub fn power_iteration(m: ArrayView2<'_, f64>, tol: f64, max_iter: usize) -> EigenPair {
    let k = m.nrows();
    assert_eq!(k, m.ncols(), "power iteration needs a square matrix");
    if k == 0 {
        return EigenPair {
            value: 0.0,
            vector: Array1::zeros(0),
            iterations: 0,
            converged: true,
        };
    }
    let scale = m.iter().map(|a| a * a).sum::<f64>().sqrt();
    if scale == 0.0 {
        return EigenPair {
            value: 0.0,
            vector: Array1::from_elem(k, 1.0 / (k as f64).sqrt()),
            iterations: 0,
            converged: true,
        };
    }

    let mut x = Array1::from_elem(k, 1.0 / (k as f64).sqrt());
    let mut value = f64::NAN;
    let mut restarts = 0;
    for iter in 1..=max_iter {
        let mut y = m.dot(&x);
        let rayleigh = x.dot(&y);
        let stalled = if y.dot(&y).sqrt() <= 1e-14 * scale {
            true
        } else if (rayleigh - value).abs() < tol {
            let residual = &y - &(&x * rayleigh);
            if residual.dot(&residual).sqrt() <= 1e-4 * scale {
                return EigenPair {
                    value: rayleigh,
                    vector: x,
                    iterations: iter,
                    converged: true,
                };
            }
            true
        } else {
            false
        };
        value = rayleigh;
        if stalled {
            if restarts == MAX_RESTARTS {
                return EigenPair {
                    value,
                    vector: x,
                    iterations: iter,
                    converged: false,
                };
            }
            perturb(&mut x, restarts);
            restarts += 1;
            value = f64::NAN;
            continue;
        }
        normalize(&mut y);
        x = y;
    }
    EigenPair {
        value,
        vector: x,
        iterations: max_iter,
        converged: false,
    }
}
