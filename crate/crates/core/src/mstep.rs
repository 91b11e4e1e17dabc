//! Penalized, box-constrained maximum likelihood for the tensor-product
//! linear B-spline graphon given node positions.
//!
//! The likelihood sums over ordered node pairs `i ≠ j` of every network. The
//! coefficient matrix is kept symmetric by optimizing over its
//! `L(L+1)/2` upper-triangular entries ("folded" parameters); each Fisher
//! scoring step is then a box-constrained QP solved in [`crate::qp`].
//!
//! The full-vector functions ([`log_likelihood`], [`score`], [`fisher_info`],
//! [`penalty_matrix`]) work on all `L²` coefficients and are used for checks
//! and reporting; fitting goes through [`Design`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{self, HatWeights};
use crate::error::{Error, Result};
use crate::estep::PROB_EPS;
use crate::graph::Graph;
use crate::graphon::SplineGraphon;
use crate::positions::NodePositions;
use crate::qp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MStepConfig {
    /// Basis size per axis; `None` picks [`default_basis_size`].
    pub basis_size: Option<usize>,
    /// Candidate penalties, ascending. Empty means [`default_lambda_grid`].
    pub lambda_grid: Vec<f64>,
    pub max_scoring_iters: usize,
    /// Stop when the relative penalized log-likelihood gain drops below this.
    pub scoring_tol: f64,
    /// Feasibility and KKT tolerance of the QP sub-problems.
    pub qp_tol: f64,
}

impl Default for MStepConfig {
    fn default() -> Self {
        MStepConfig {
            basis_size: None,
            lambda_grid: Vec::new(),
            max_scoring_iters: 50,
            scoring_tol: 1e-9,
            qp_tol: 1e-9,
        }
    }
}

impl MStepConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.basis_size {
            if l < 2 {
                return Err(Error::Config(format!("basis size must be at least 2, got {l}")));
            }
        }
        if self.lambda_grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("penalties must be finite and nonnegative".into()));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("lambda grid must be sorted ascending".into()));
        }
        if !(self.scoring_tol > 0.0 && self.qp_tol > 0.0) || self.max_scoring_iters == 0 {
            return Err(Error::Config("tolerances and iteration limits must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_basis_size(&self, sizes: &[usize]) -> usize {
        self.basis_size.unwrap_or_else(|| default_basis_size(sizes))
    }

    pub fn resolved_lambda_grid(&self) -> Vec<f64> {
        if self.lambda_grid.is_empty() {
            default_lambda_grid()
        } else {
            self.lambda_grid.clone()
        }
    }
}

/// `clamp(floor(sqrt(min N)), 8, 25)`.
pub fn default_basis_size(sizes: &[usize]) -> usize {
    let n = sizes.iter().copied().min().unwrap_or(2);
    ((n as f64).sqrt().floor() as usize).clamp(8, 25)
}

/// 25 log-spaced values from 1e-2 to 1e6.
pub fn default_lambda_grid() -> Vec<f64> {
    log_spaced(1e-2, 1e6, 25)
}

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}

#[inline]
fn clip(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn check_inputs(graphs: &[&Graph], positions: &[&NodePositions]) -> Result<()> {
    if graphs.is_empty() || graphs.len() != positions.len() {
        return Err(Error::Usage(format!(
            "{} graphs but {} position vectors",
            graphs.len(),
            positions.len()
        )));
    }
    for (g, (graph, pos)) in graphs.iter().zip(positions).enumerate() {
        if graph.n() != pos.len() {
            return Err(Error::Usage(format!(
                "network {g}: {} nodes but {} positions",
                graph.n(),
                pos.len()
            )));
        }
    }
    Ok(())
}

fn check_theta(size: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != size * size {
        return Err(Error::Usage(format!(
            "coefficient vector has length {}, expected {}",
            theta.len(),
            size * size
        )));
    }
    Ok(())
}

/// Row `B_ij = B(u_i) ⊗ B(u_j)` as up to four `(index, value)` entries.
#[inline]
fn tensor_row(size: usize, u: f64, v: f64) -> [(usize, f64); 4] {
    let a = HatWeights::at(size, u);
    let b = HatWeights::at(size, v);
    [
        (a.index * size + b.index, a.w[0] * b.w[0]),
        (a.index * size + b.index + 1, a.w[0] * b.w[1]),
        ((a.index + 1) * size + b.index, a.w[1] * b.w[0]),
        ((a.index + 1) * size + b.index + 1, a.w[1] * b.w[1]),
    ]
}

/// Visit every ordered pair `(i, j)`, `i ≠ j`, of every network.
fn for_each_ordered_pair(
    graphs: &[&Graph],
    positions: &[&NodePositions],
    mut f: impl FnMut(u8, f64, f64),
) {
    for (graph, pos) in graphs.iter().zip(positions) {
        let u = pos.as_slice();
        for i in 0..graph.n() {
            for j in 0..graph.n() {
                if i != j {
                    f(graph.y(i, j), u[i], u[j]);
                }
            }
        }
    }
}

/// `ℓ(θ) = Σ_g Σ_{i≠j} [y log(B_ij θ) + (1 - y) log(1 - B_ij θ)]`, full `L²` θ.
pub fn log_likelihood(
    size: usize,
    theta: &[f64],
    graphs: &[&Graph],
    positions: &[&NodePositions],
) -> Result<f64> {
    check_inputs(graphs, positions)?;
    check_theta(size, theta)?;
    let mut total = 0.0;
    for_each_ordered_pair(graphs, positions, |y, u, v| {
        let w = clip(tensor_row(size, u, v).iter().map(|&(k, b)| b * theta[k]).sum());
        total += if y == 1 { w.ln() } else { (1.0 - w).ln() };
    });
    Ok(total)
}

/// `s(θ) = Σ B_ijᵀ (y / w - (1 - y) / (1 - w))`.
pub fn score(
    size: usize,
    theta: &[f64],
    graphs: &[&Graph],
    positions: &[&NodePositions],
) -> Result<Vec<f64>> {
    check_inputs(graphs, positions)?;
    check_theta(size, theta)?;
    let mut s = vec![0.0; size * size];
    for_each_ordered_pair(graphs, positions, |y, u, v| {
        let row = tensor_row(size, u, v);
        let w = clip(row.iter().map(|&(k, b)| b * theta[k]).sum());
        let r = if y == 1 { 1.0 / w } else { -1.0 / (1.0 - w) };
        for &(k, b) in &row {
            s[k] += b * r;
        }
    });
    Ok(s)
}

/// `F(θ) = Σ B_ijᵀ B_ij / (w (1 - w))`.
pub fn fisher_info(
    size: usize,
    theta: &[f64],
    graphs: &[&Graph],
    positions: &[&NodePositions],
) -> Result<DMatrix<f64>> {
    check_inputs(graphs, positions)?;
    check_theta(size, theta)?;
    let d = size * size;
    let mut f = DMatrix::zeros(d, d);
    for_each_ordered_pair(graphs, positions, |_, u, v| {
        let row = tensor_row(size, u, v);
        let w = clip(row.iter().map(|&(k, b)| b * theta[k]).sum());
        let inv = 1.0 / (w * (1.0 - w));
        for &(a, ba) in &row {
            for &(b, bb) in &row {
                f[(a, b)] += ba * bb * inv;
            }
        }
    });
    Ok(f)
}

/// First-difference matrix `J_L` of shape `(L-1) × L`.
fn first_difference(size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size - 1, size, |r, c| {
        if c == r {
            1.0
        } else if c == r + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// `P = (J_L ⊗ I_L)ᵀ(J_L ⊗ I_L) + (I_L ⊗ J_L)ᵀ(I_L ⊗ J_L)`.
pub fn penalty_matrix(size: usize) -> Result<DMatrix<f64>> {
    if size < 2 {
        return Err(Error::Domain(format!("basis size must be at least 2, got {size}")));
    }
    let j = first_difference(size);
    let id = DMatrix::<f64>::identity(size, size);
    let row_diff = j.kronecker(&id);
    let col_diff = id.kronecker(&j);
    Ok(row_diff.transpose() * &row_diff + col_diff.transpose() * &col_diff)
}

/// `UᵀPU` where `U` expands folded parameters to the full vector.
pub fn folded_penalty(size: usize) -> Result<DMatrix<f64>> {
    let p = penalty_matrix(size)?;
    let fl = basis::folded_len(size);
    let map: Vec<usize> = (0..size * size)
        .map(|r| basis::folded_index(size, r / size, r % size))
        .collect();
    let mut out = DMatrix::zeros(fl, fl);
    for r in 0..size * size {
        for c in 0..size * size {
            let v = p[(r, c)];
            if v != 0.0 {
                out[(map[r], map[c])] += v;
            }
        }
    }
    Ok(out)
}

/// Penalized log-likelihood, score and Fisher information.
#[derive(Debug, Clone)]
pub struct Penalized {
    pub loglik: f64,
    pub score: DVector<f64>,
    pub fisher: DMatrix<f64>,
}

/// `ℓ_p = ℓ - ½λθᵀPθ`, `s_p = s - λPθ`, `F_p = F + λP` on the full vector.
pub fn penalized_quantities(
    size: usize,
    theta: &[f64],
    lambda: f64,
    graphs: &[&Graph],
    positions: &[&NodePositions],
) -> Result<Penalized> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("penalty must be nonnegative, got {lambda}")));
    }
    let p = penalty_matrix(size)?;
    let th = DVector::from_column_slice(theta);
    let pth = &p * &th;
    let ll = log_likelihood(size, theta, graphs, positions)?;
    let s = DVector::from_vec(score(size, theta, graphs, positions)?);
    let f = fisher_info(size, theta, graphs, positions)?;
    Ok(Penalized {
        loglik: ll - 0.5 * lambda * th.dot(&pth),
        score: s - lambda * pth,
        fisher: f + lambda * p,
    })
}

/// Folded design over unordered dyads of one or more networks. Each dyad
/// stands for both of its ordered pairs, which share the same folded row.
#[derive(Debug, Clone)]
pub struct Design {
    size: usize,
    rows: Vec<[(u32, f64); 4]>,
    lens: Vec<u8>,
    y: Vec<u8>,
    /// `Σ_g N_g (N_g - 1)`.
    ordered_pairs: usize,
    edges: usize,
}

const PAIR_WEIGHT: f64 = 2.0;

impl Design {
    pub fn new(size: usize, graphs: &[&Graph], positions: &[&NodePositions]) -> Result<Self> {
        check_inputs(graphs, positions)?;
        if size < 2 {
            return Err(Error::Domain(format!("basis size must be at least 2, got {size}")));
        }
        let dyads: usize = graphs.iter().map(|g| g.dyad_count()).sum();
        let mut design = Design {
            size,
            rows: Vec::with_capacity(dyads),
            lens: Vec::with_capacity(dyads),
            y: Vec::with_capacity(dyads),
            ordered_pairs: 2 * dyads,
            edges: graphs.iter().map(|g| g.edge_count()).sum(),
        };
        for (graph, pos) in graphs.iter().zip(positions) {
            let u = pos.as_slice();
            for i in 0..graph.n() {
                for j in (i + 1)..graph.n() {
                    let mut row = [(0u32, 0.0f64); 4];
                    let mut len = 0usize;
                    for (k, b) in tensor_row(size, u[i], u[j]) {
                        if b == 0.0 {
                            continue;
                        }
                        let f = basis::folded_index(size, k / size, k % size) as u32;
                        match row[..len].iter_mut().find(|(idx, _)| *idx == f) {
                            Some(e) => e.1 += b,
                            None => {
                                row[len] = (f, b);
                                len += 1;
                            }
                        }
                    }
                    design.rows.push(row);
                    design.lens.push(len as u8);
                    design.y.push(graph.y(i, j));
                }
            }
        }
        Ok(design)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_params(&self) -> usize {
        basis::folded_len(self.size)
    }

    pub fn ordered_pairs(&self) -> usize {
        self.ordered_pairs
    }

    /// Unordered dyads, i.e. independent Bernoulli observations.
    pub fn dyads(&self) -> usize {
        self.ordered_pairs / 2
    }

    /// Pooled edge density.
    pub fn density(&self) -> f64 {
        2.0 * self.edges as f64 / self.ordered_pairs as f64
    }

    #[inline]
    fn row(&self, d: usize) -> &[(u32, f64)] {
        &self.rows[d][..self.lens[d] as usize]
    }

    #[inline]
    fn prob(&self, d: usize, phi: &[f64]) -> f64 {
        clip(self.row(d).iter().map(|&(k, b)| b * phi[k as usize]).sum())
    }

    /// Unpenalized log-likelihood at folded parameters.
    pub fn loglik(&self, phi: &[f64]) -> f64 {
        let mut total = 0.0;
        for d in 0..self.y.len() {
            let w = self.prob(d, phi);
            total += if self.y[d] == 1 { w.ln() } else { (1.0 - w).ln() };
        }
        PAIR_WEIGHT * total
    }

    /// Log-likelihood, folded score and folded Fisher information.
    pub fn derivatives(&self, phi: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.n_params();
        let mut ll = 0.0;
        let mut s = vec![0.0; p];
        let mut f = vec![0.0; p * p];
        for d in 0..self.y.len() {
            let row = self.row(d);
            let w = self.prob(d, phi);
            let (l, r) = if self.y[d] == 1 {
                (w.ln(), 1.0 / w)
            } else {
                ((1.0 - w).ln(), -1.0 / (1.0 - w))
            };
            ll += l;
            let inv = 1.0 / (w * (1.0 - w));
            for &(a, ba) in row {
                s[a as usize] += ba * r;
                let base = a as usize * p;
                for &(b, bb) in row {
                    f[base + b as usize] += ba * bb * inv;
                }
            }
        }
        let s = DVector::from_vec(s) * PAIR_WEIGHT;
        let f = DMatrix::from_vec(p, p, f) * PAIR_WEIGHT;
        (PAIR_WEIGHT * ll, s, f)
    }

    pub fn fisher(&self, phi: &[f64]) -> DMatrix<f64> {
        self.derivatives(phi).2
    }
}

/// Result of one penalized fit.
#[derive(Debug, Clone)]
pub struct ScoringResult {
    pub phi: Vec<f64>,
    pub penalized_loglik: f64,
    pub iterations: usize,
    /// Largest ridge the QP sub-problems needed.
    pub ridge: f64,
}

fn penalized_value(design: &Design, pen: &DMatrix<f64>, lambda: f64, phi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(phi);
    design.loglik(phi) - 0.5 * lambda * v.dot(&(pen * &v))
}

/// Constrained Fisher scoring on folded parameters: each step maximizes
/// `s_pᵀΔ - ½ΔᵀF_pΔ` subject to `0 ≤ φ + Δ ≤ 1`, with step halving when the
/// penalized log-likelihood would drop.
pub fn constrained_fisher_scoring(
    design: &Design,
    lambda: f64,
    config: &MStepConfig,
    phi_init: &[f64],
) -> Result<ScoringResult> {
    let p = design.n_params();
    if phi_init.len() != p {
        return Err(Error::Usage(format!(
            "initial parameters have length {}, expected {p}",
            phi_init.len()
        )));
    }
    if phi_init
        .iter()
        .any(|&x| !(x >= -config.qp_tol && x <= 1.0 + config.qp_tol))
    {
        return Err(Error::Usage("initial parameters violate the [0, 1] box".into()));
    }
    let pen = folded_penalty(design.size())?;
    let mut phi: Vec<f64> = phi_init.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let mut current = penalized_value(design, &pen, lambda, &phi);
    let mut max_ridge = 0.0f64;
    let mut iterations = 0;

    for it in 1..=config.max_scoring_iters {
        iterations = it;
        let (_, s, f) = design.derivatives(&phi);
        let x = DVector::from_column_slice(&phi);
        let s_p = s - lambda * (&pen * &x);
        let f_p = f + lambda * &pen;
        // max s_pᵀΔ - ½ΔᵀF_pΔ with z = φ + Δ  ⇔  min ½zᵀF_p z - (F_p φ + s_p)ᵀz
        let c = -(&f_p * &x + &s_p);
        let sol = qp::solve_box_qp(&f_p, &c, 0.0, 1.0, &x, config.qp_tol)
            .map_err(|e| e.context(format!("scoring iteration {it}, lambda {lambda:.3e}")))?;
        max_ridge = max_ridge.max(sol.ridge);
        let delta = sol.x - &x;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let cand: Vec<f64> = phi
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| (a + t * d).clamp(0.0, 1.0))
                .collect();
            let val = penalized_value(design, &pen, lambda, &cand);
            if val >= current {
                accepted = Some((cand, val));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, val)) = accepted else {
            break;
        };
        let gain = (val - current) / current.abs().max(1.0);
        phi = cand;
        current = val;
        if gain < config.scoring_tol {
            break;
        }
    }
    Ok(ScoringResult {
        phi,
        penalized_loglik: current,
        iterations,
        ridge: max_ridge,
    })
}

/// Effective degrees of freedom `tr(F_p⁻¹ F)` on folded parameters. The flag
/// reports whether a ridge had to be added to `F_p`.
pub fn effective_df(design: &Design, phi: &[f64], lambda: f64) -> Result<(f64, bool)> {
    let pen = folded_penalty(design.size())?;
    let f = design.fisher(phi);
    let f_p = &f + lambda * pen;
    let (chol, ridge) = qp::cholesky_with_ridge(&f_p)?;
    let sol = chol.solve(&f);
    Ok((sol.trace(), ridge > 0.0))
}

/// `-2ℓ + 2df + 2df(df + 1) / (n - df - 1)`.
pub fn aicc(loglik: f64, df: f64, n_dyads: usize) -> Result<f64> {
    let n = n_dyads as f64;
    if n <= df + 1.0 {
        return Err(Error::Config(format!(
            "AICc undefined: {n_dyads} dyads for {df:.2} degrees of freedom"
        )));
    }
    Ok(-2.0 * loglik + 2.0 * df + 2.0 * df * (df + 1.0) / (n - df - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda: f64,
    pub loglik: f64,
    pub df: f64,
    pub aicc: f64,
}

/// Selected penalized fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub graphon: SplineGraphon,
    pub lambda: f64,
    /// Unpenalized ordered-pair log-likelihood at the estimate.
    pub loglik: f64,
    pub df: f64,
    pub aicc: f64,
    /// Whether `F_p` needed a ridge when computing `df`.
    pub ridge_flagged: bool,
    /// Criterion values for every penalty on the grid.
    pub path: Vec<LambdaFit>,
}

/// Fit every penalty on the grid (warm-starting each from the previous
/// estimate) and keep the AICc minimizer; ties go to the smaller penalty.
///
/// The criterion counts every dyad once: it is evaluated on half the
/// ordered-pair log-likelihood with `Σ N(N-1)/2` observations.
pub fn select_lambda(
    graphs: &[&Graph],
    positions: &[&NodePositions],
    config: &MStepConfig,
    phi_init: Option<&[f64]>,
) -> Result<FitResult> {
    config.validate()?;
    let sizes: Vec<usize> = graphs.iter().map(|g| g.n()).collect();
    let size = config.resolved_basis_size(&sizes);
    let design = Design::new(size, graphs, positions)?;
    select_lambda_on(&design, config, phi_init)
}

/// [`select_lambda`] on a prebuilt design.
pub fn select_lambda_on(
    design: &Design,
    config: &MStepConfig,
    phi_init: Option<&[f64]>,
) -> Result<FitResult> {
    let grid = config.resolved_lambda_grid();
    if grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let size = design.size();
    let mut phi = match phi_init {
        Some(p) => p.to_vec(),
        None => vec![design.density(); design.n_params()],
    };
    let mut best: Option<(usize, Vec<f64>, LambdaFit, bool)> = None;
    let mut path = Vec::with_capacity(grid.len());
    for (k, &lambda) in grid.iter().enumerate() {
        let fit = constrained_fisher_scoring(design, lambda, config, &phi)?;
        phi = fit.phi;
        let loglik = design.loglik(&phi);
        let (df, flagged) = effective_df(design, &phi, lambda)?;
        let crit = aicc(loglik / PAIR_WEIGHT, df, design.dyads())?;
        let entry = LambdaFit {
            lambda,
            loglik,
            df,
            aicc: crit,
        };
        path.push(entry.clone());
        if best.as_ref().is_none_or(|(_, _, b, _)| crit < b.aicc) {
            best = Some((k, phi.clone(), entry, flagged));
        }
    }
    let (_, phi, entry, flagged) = best.expect("nonempty grid");
    Ok(FitResult {
        graphon: SplineGraphon::from_folded(size, &phi)?,
        lambda: entry.lambda,
        loglik: entry.loglik,
        df: entry.df,
        aicc: entry.aicc,
        ridge_flagged: flagged,
        path,
    })
}
