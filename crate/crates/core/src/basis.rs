//! Linear B-spline (hat function) basis on equidistant knots `0, 1/(L-1), ..., 1`.
//!
//! Each basis function peaks at 1 on its knot; the two boundary functions are
//! half-hats. At most two functions are nonzero at any coordinate, so the
//! sparse form [`HatWeights`] is what the estimators use internally.

use crate::error::{Error, Result};

/// The two possibly nonzero basis values at a coordinate: `w[0]` belongs to
/// basis function `index`, `w[1]` to `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatWeights {
    pub index: usize,
    pub w: [f64; 2],
}

impl HatWeights {
    /// Sparse hat weights. `u = 1` puts full weight on the last function.
    #[inline]
    pub fn at(l: usize, u: f64) -> Self {
        debug_assert!(l >= 2 && (0.0..=1.0).contains(&u));
        let s = u * (l - 1) as f64;
        let index = (s.floor() as usize).min(l - 2);
        let frac = s - index as f64;
        HatWeights {
            index,
            w: [1.0 - frac, frac],
        }
    }
}

pub(crate) fn check_args(l: usize, u: f64) -> Result<()> {
    if l < 2 {
        return Err(Error::Domain(format!("basis size must be at least 2, got {l}")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("coordinate {u} outside [0, 1]")));
    }
    Ok(())
}

/// Dense vector of the `L` hat-function values at `u`.
pub fn spline_basis(l: usize, u: f64) -> Result<Vec<f64>> {
    check_args(l, u)?;
    let h = HatWeights::at(l, u);
    let mut out = vec![0.0; l];
    out[h.index] = h.w[0];
    out[h.index + 1] += h.w[1];
    Ok(out)
}

/// Row-major Kronecker product `B(u) ⊗ B(v)` of length `L²`.
pub fn tensor_basis(l: usize, u: f64, v: f64) -> Result<Vec<f64>> {
    let bu = spline_basis(l, u)?;
    let bv = spline_basis(l, v)?;
    let mut out = Vec::with_capacity(l * l);
    for a in &bu {
        for b in &bv {
            out.push(a * b);
        }
    }
    Ok(out)
}

/// Number of free parameters of a symmetric `L×L` coefficient matrix.
#[inline]
pub fn folded_len(l: usize) -> usize {
    l * (l + 1) / 2
}

/// Index of `(k, l)` in the folded (upper-triangular, row-major) layout.
#[inline]
pub fn folded_index(size: usize, k: usize, l: usize) -> usize {
    let (a, b) = if k <= l { (k, l) } else { (l, k) };
    a * size - a * (a + 1) / 2 + b
}

/// Expand folded parameters into the full row-major `L²` vector.
pub fn unfold(size: usize, folded: &[f64]) -> Vec<f64> {
    debug_assert_eq!(folded.len(), folded_len(size));
    let mut full = vec![0.0; size * size];
    for k in 0..size {
        for l in 0..size {
            full[k * size + l] = folded[folded_index(size, k, l)];
        }
    }
    full
}

/// Average `θ_kl` and `θ_lk` into folded parameters.
pub fn fold(size: usize, full: &[f64]) -> Vec<f64> {
    debug_assert_eq!(full.len(), size * size);
    let mut out = vec![0.0; folded_len(size)];
    for k in 0..size {
        for l in k..size {
            out[folded_index(size, k, l)] = 0.5 * (full[k * size + l] + full[l * size + k]);
        }
    }
    out
}

/// Trapezoidal integration weights of the hat functions over `[0, 1]`.
pub fn integral_weights(l: usize) -> Vec<f64> {
    let h = 1.0 / (l - 1) as f64;
    (0..l)
        .map(|k| if k == 0 || k == l - 1 { 0.5 * h } else { h })
        .collect()
}
