//! Dense convex quadratic program with box constraints,
//!
//! ```text
//! minimize ½ xᵀ H x + cᵀ x   subject to   lo ≤ x ≤ hi,
//! ```
//!
//! solved by a primal active-set method. Each iteration solves the Newton
//! system on the free variables with a Cholesky factorization, takes the
//! longest feasible step along it, and either pins the blocking variable or,
//! at a stationary point of the current face, releases the bound with the
//! most negative multiplier.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pin {
    Free,
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
pub struct BoxQpSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Ridge added to `H` to obtain a factorization, 0 if none was needed.
    pub ridge: f64,
    /// Number of variables pinned at a bound.
    pub active: usize,
}

const BASE_RIDGE: f64 = 1e-8;

/// Factor `h + ridge·s·I` with an escalating ridge until Cholesky succeeds,
/// where `s` is the largest diagonal entry.
pub(crate) fn cholesky_with_ridge(
    h: &DMatrix<f64>,
) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    if let Some(c) = h.clone().cholesky() {
        return Ok((c, 0.0));
    }
    let scale = h.diagonal().iter().fold(0.0f64, |m, &d| m.max(d.abs())).max(1.0);
    let mut ridge = BASE_RIDGE * scale;
    for _ in 0..12 {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(c) = m.cholesky() {
            return Ok((c, ridge));
        }
        ridge *= 10.0;
    }
    Err(Error::Numerical(format!(
        "curvature matrix of size {} not positive definite even with ridge {ridge:.3e}",
        h.nrows()
    )))
}

/// Solve the box QP starting from the (clamped) point `x0`. `tol` scales
/// both the stationarity test and the multiplier sign test.
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    lo: f64,
    hi: f64,
    x0: &DVector<f64>,
    tol: f64,
) -> Result<BoxQpSolution> {
    let n = c.len();
    if h.nrows() != n || h.ncols() != n || x0.len() != n {
        return Err(Error::Usage("box QP dimension mismatch".into()));
    }
    let mut x = x0.map(|v| v.clamp(lo, hi));
    let grad = |x: &DVector<f64>| h * x + c;

    // Warm start: pin variables sitting on a bound whose gradient pushes outward.
    let g0 = grad(&x);
    let mut pin: Vec<Pin> = (0..n)
        .map(|i| {
            if x[i] <= lo && g0[i] > 0.0 {
                Pin::Lower
            } else if x[i] >= hi && g0[i] < 0.0 {
                Pin::Upper
            } else {
                Pin::Free
            }
        })
        .collect();

    let scale = 1.0 + h.diagonal().iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let mut max_ridge = 0.0f64;
    let max_iter = 20 * n + 200;

    for iter in 1..=max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| pin[i] == Pin::Free).collect();
        let g = grad(&x);

        let mut step = DVector::zeros(n);
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -g[i]));
            let (chol, ridge) = cholesky_with_ridge(&hff)?;
            max_ridge = max_ridge.max(ridge);
            let p = chol.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                step[i] = p[a];
            }
        }

        let step_norm = step.amax();
        if step_norm <= tol * (1.0 + x.amax()) {
            // Stationary on the current face: check multiplier signs.
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                let violation = match pin[i] {
                    Pin::Lower => -g[i],
                    Pin::Upper => g[i],
                    Pin::Free => continue,
                };
                if violation > tol * scale && worst.is_none_or(|(_, v)| violation > v) {
                    worst = Some((i, violation));
                }
            }
            match worst {
                None => {
                    let active = pin.iter().filter(|&&p| p != Pin::Free).count();
                    return Ok(BoxQpSolution {
                        x,
                        iterations: iter,
                        ridge: max_ridge,
                        active,
                    });
                }
                Some((i, _)) => {
                    pin[i] = Pin::Free;
                    continue;
                }
            }
        }

        // Ratio test along the step.
        let mut alpha = 1.0;
        let mut blocking: Option<(usize, Pin)> = None;
        for &i in &free {
            let s = step[i];
            let (limit, side) = if s < 0.0 {
                ((lo - x[i]) / s, Pin::Lower)
            } else if s > 0.0 {
                ((hi - x[i]) / s, Pin::Upper)
            } else {
                continue;
            };
            if limit < alpha {
                alpha = limit.max(0.0);
                blocking = Some((i, side));
            }
        }
        x += alpha * &step;
        if let Some((i, side)) = blocking {
            x[i] = if side == Pin::Lower { lo } else { hi };
            pin[i] = side;
        }
        for i in 0..n {
            x[i] = x[i].clamp(lo, hi);
        }
    }
    Err(Error::Numerical(format!(
        "box QP did not converge within {max_iter} active-set iterations"
    )))
}
