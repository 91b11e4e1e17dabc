use serde::{Deserialize, Serialize};

use crate::basis::{self, HatWeights};
use crate::error::{Error, Result};

/// A symmetric edge-probability surface on `[0, 1]²`.
pub trait Graphon: Sync {
    /// Evaluate without range checks. Callers guarantee `u, v ∈ [0, 1]`.
    fn eval_unchecked(&self, u: f64, v: f64) -> f64;

    /// `∬ w(u, v) du dv`.
    fn mean(&self) -> f64;

    /// Pointwise convex combination `(1 - gamma) w + gamma * mean(w)`.
    fn shrink_toward_mean(&self, gamma: f64) -> Result<Self>
    where
        Self: Sized;
}

fn check_coord(u: f64, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("coordinates ({u}, {v}) outside [0, 1]²")));
    }
    Ok(())
}

/// Checked evaluation of any graphon.
pub fn graphon_eval<G: Graphon + ?Sized>(g: &G, u: f64, v: f64) -> Result<f64> {
    check_coord(u, v)?;
    Ok(g.eval_unchecked(u, v))
}

pub fn graphon_mean<G: Graphon + ?Sized>(g: &G) -> f64 {
    g.mean()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("mixing parameter {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// Bilinear interpolation of a symmetric row-major `size×size` coefficient
/// table on knots `k/(size-1)`. Arguments are ordered so that the result is
/// bitwise symmetric.
#[inline]
fn bilinear(size: usize, coef: &[f64], u: f64, v: f64) -> f64 {
    let (u, v) = if u <= v { (u, v) } else { (v, u) };
    let hu = HatWeights::at(size, u);
    let hv = HatWeights::at(size, v);
    let r0 = hu.index * size + hv.index;
    let r1 = r0 + size;
    let val = hu.w[0] * (hv.w[0] * coef[r0] + hv.w[1] * coef[r0 + 1])
        + hu.w[1] * (hv.w[0] * coef[r1] + hv.w[1] * coef[r1 + 1]);
    val.clamp(0.0, 1.0)
}

fn trapezoid_mean(size: usize, coef: &[f64]) -> f64 {
    let w = basis::integral_weights(size);
    let mut total = 0.0;
    for k in 0..size {
        for l in 0..size {
            total += w[k] * w[l] * coef[k * size + l];
        }
    }
    total
}

fn validate_symmetric_unit(size: usize, values: &[f64], what: &str) -> Result<()> {
    if values.len() != size * size {
        return Err(Error::Usage(format!(
            "{what}: expected {} values, got {}",
            size * size,
            values.len()
        )));
    }
    for k in 0..size {
        for l in 0..size {
            let x = values[k * size + l];
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("{what}: value {x} at ({k}, {l}) outside [0, 1]")));
            }
            if x != values[l * size + k] {
                return Err(Error::Domain(format!("{what}: not symmetric at ({k}, {l})")));
            }
        }
    }
    Ok(())
}

/// Tensor-product linear B-spline graphon `w(u, v) = [B(u) ⊗ B(v)] θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineGraphon {
    size: usize,
    theta: Vec<f64>,
}

impl SplineGraphon {
    /// From the full row-major `L²` coefficient vector.
    pub fn new(size: usize, theta: Vec<f64>) -> Result<Self> {
        if size < 2 {
            return Err(Error::Domain(format!("basis size must be at least 2, got {size}")));
        }
        validate_symmetric_unit(size, &theta, "spline coefficients")?;
        Ok(SplineGraphon { size, theta })
    }

    pub fn from_folded(size: usize, folded: &[f64]) -> Result<Self> {
        if folded.len() != basis::folded_len(size) {
            return Err(Error::Usage("folded coefficient length mismatch".into()));
        }
        SplineGraphon::new(size, basis::unfold(size, folded))
    }

    pub fn constant(size: usize, c: f64) -> Result<Self> {
        SplineGraphon::new(size, vec![c; size * size])
    }

    /// Basis size `L` per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn folded(&self) -> Vec<f64> {
        basis::fold(self.size, &self.theta)
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..self.size).map(|k| k as f64 / (self.size - 1) as f64).collect()
    }
}

impl Graphon for SplineGraphon {
    #[inline]
    fn eval_unchecked(&self, u: f64, v: f64) -> f64 {
        bilinear(self.size, &self.theta, u, v)
    }

    fn mean(&self) -> f64 {
        trapezoid_mean(self.size, &self.theta)
    }

    fn shrink_toward_mean(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mean = self.mean();
        let theta = self
            .theta
            .iter()
            .map(|&t| ((1.0 - gamma) * t + gamma * mean).clamp(0.0, 1.0))
            .collect();
        Ok(SplineGraphon { size: self.size, theta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// `values[i][j]` on the cell `[i/m, (i+1)/m) × [j/m, (j+1)/m)`.
    PiecewiseConstant,
    /// `values[i][j]` at the grid node `(i/(m-1), j/(m-1))`, bilinear in between.
    Bilinear,
}

/// Graphon given by a symmetric grid of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGraphon {
    m: usize,
    values: Vec<f64>,
    mode: Interpolation,
}

impl GridGraphon {
    pub fn new(m: usize, values: Vec<f64>, mode: Interpolation) -> Result<Self> {
        let min_m = match mode {
            Interpolation::PiecewiseConstant => 1,
            Interpolation::Bilinear => 2,
        };
        if m < min_m {
            return Err(Error::Domain(format!("grid resolution {m} too small for {mode:?}")));
        }
        validate_symmetric_unit(m, &values, "grid graphon")?;
        Ok(GridGraphon { m, values, mode })
    }

    pub fn constant(c: f64) -> Result<Self> {
        GridGraphon::new(1, vec![c], Interpolation::PiecewiseConstant)
    }

    /// Block pattern sampled on an `m`-node grid and bilinearly interpolated,
    /// giving linear ramps between communities. Node `i` belongs to block
    /// `floor(i * G / (m - 1))` (clamped to `G - 1`).
    pub fn smooth_blocks(pattern: &[Vec<f64>], m: usize) -> Result<Self> {
        let groups = pattern.len();
        if groups == 0 || pattern.iter().any(|r| r.len() != groups) {
            return Err(Error::Usage("block pattern must be a nonempty square matrix".into()));
        }
        if m < 2 {
            return Err(Error::Domain("grid resolution must be at least 2".into()));
        }
        let group = |i: usize| ((i * groups) / (m - 1)).min(groups - 1);
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                values.push(pattern[group(i)][group(j)]);
            }
        }
        GridGraphon::new(m, values, Interpolation::Bilinear)
    }

    /// Three-community graphon with smooth transitions used for simulation
    /// studies: within-block 0.4 / 0.5 / 0.6, between-block 0.25 / 0.1 / 0.2.
    pub fn reference_blocks() -> Self {
        let pattern = vec![
            vec![0.4, 0.25, 0.1],
            vec![0.25, 0.5, 0.2],
            vec![0.1, 0.2, 0.6],
        ];
        GridGraphon::smooth_blocks(&pattern, 13).expect("valid reference pattern")
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }
}

impl Graphon for GridGraphon {
    #[inline]
    fn eval_unchecked(&self, u: f64, v: f64) -> f64 {
        match self.mode {
            Interpolation::PiecewiseConstant => {
                let cell = |x: f64| ((x * self.m as f64) as usize).min(self.m - 1);
                self.values[cell(u) * self.m + cell(v)]
            }
            Interpolation::Bilinear => bilinear(self.m, &self.values, u, v),
        }
    }

    fn mean(&self) -> f64 {
        match self.mode {
            Interpolation::PiecewiseConstant => {
                self.values.iter().sum::<f64>() / self.values.len() as f64
            }
            Interpolation::Bilinear => trapezoid_mean(self.m, &self.values),
        }
    }

    fn shrink_toward_mean(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mean = self.mean();
        let values = self
            .values
            .iter()
            .map(|&x| ((1.0 - gamma) * x + gamma * mean).clamp(0.0, 1.0))
            .collect();
        Ok(GridGraphon {
            m: self.m,
            values,
            mode: self.mode,
        })
    }
}

/// Either graphon representation, for configuration and reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnyGraphon {
    Spline(SplineGraphon),
    Grid(GridGraphon),
}

impl Graphon for AnyGraphon {
    fn eval_unchecked(&self, u: f64, v: f64) -> f64 {
        match self {
            AnyGraphon::Spline(g) => g.eval_unchecked(u, v),
            AnyGraphon::Grid(g) => g.eval_unchecked(u, v),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            AnyGraphon::Spline(g) => g.mean(),
            AnyGraphon::Grid(g) => g.mean(),
        }
    }

    fn shrink_toward_mean(&self, gamma: f64) -> Result<Self> {
        Ok(match self {
            AnyGraphon::Spline(g) => AnyGraphon::Spline(g.shrink_toward_mean(gamma)?),
            AnyGraphon::Grid(g) => AnyGraphon::Grid(g.shrink_toward_mean(gamma)?),
        })
    }
}

/// Evaluate `g` on a regular `res×res` grid including both endpoints.
pub fn sample_surface<G: Graphon + ?Sized>(g: &G, res: usize) -> Vec<(f64, f64, f64)> {
    let step = 1.0 / (res - 1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for i in 0..res {
        let u = (i as f64 * step).min(1.0);
        for j in 0..res {
            let v = (j as f64 * step).min(1.0);
            out.push((u, v, g.eval_unchecked(u, v)));
        }
    }
    out
}
