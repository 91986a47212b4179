//! φ-estimators on i.i.d. experiments over finite models: φ-means, bias,
//! MSE and variance forms, inverse Fisher forms and the Cramér–Rao gap.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher::{fisher_matrix, spectrum, FisherMatrix};
use crate::models::{IidProduct, ParamModel};
use crate::tol;

/// Central-difference step for the Jacobian of the φ-mean.
pub const PHI_FD_STEP: f64 = 1e-4;
/// Largest outcome space enumerated exactly.
pub const MAX_EXACT_OUTCOMES: usize = 1 << 20;

/// Coordinate map φ: R^n → R^d on estimator values.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiMap {
    Identity,
    /// Selected coordinates, in order.
    Coords(Vec<usize>),
}

impl PhiMap {
    /// `identity` or `coord:i,j,…`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(PhiMap::Identity);
        }
        let list = s
            .strip_prefix("coord:")
            .ok_or_else(|| Error::usage(format!("unknown φ map `{s}`")))?;
        let idx = list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::usage(format!("bad coordinate index in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhiMap::Coords(idx))
    }

    pub fn value_dim(&self, n: usize) -> usize {
        match self {
            PhiMap::Identity => n,
            PhiMap::Coords(c) => c.len(),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if let PhiMap::Coords(c) = self {
            if c.is_empty() || c.iter().any(|i| *i >= n) {
                return Err(Error::usage(format!(
                    "φ coordinates {c:?} out of range for dimension {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PhiMap::Identity => x.to_vec(),
            PhiMap::Coords(c) => c.iter().map(|i| x[*i]).collect(),
        }
    }
}

/// σ̂: atom counts of an i.i.d. sample ↦ a parameter-space vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    /// Parameter matching the empirical frequencies.
    Mean,
    /// λ · mean + c, componentwise.
    Shrinkage {
        lambda: f64,
        c: f64,
    },
    Constant(Vec<f64>),
    /// 1 / mean componentwise, +∞ where the mean vanishes.
    PluginInverse,
}

impl Estimator {
    /// `mean`, `shrinkage:λ,c`, `constant:θ₀` (comma-separated) or `plugin-inverse`.
    pub fn parse(s: &str) -> Result<Self> {
        let nums = |t: &str| {
            t.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::usage(format!("bad number `{v}` in estimator `{s}`")))
                })
                .collect::<Result<Vec<_>>>()
        };
        match s {
            "mean" => Ok(Estimator::Mean),
            "plugin-inverse" => Ok(Estimator::PluginInverse),
            _ => {
                if let Some(rest) = s.strip_prefix("shrinkage:") {
                    match nums(rest)?.as_slice() {
                        [lambda, c] => Ok(Estimator::Shrinkage {
                            lambda: *lambda,
                            c: *c,
                        }),
                        _ => Err(Error::usage("shrinkage takes exactly two numbers λ,c")),
                    }
                } else if let Some(rest) = s.strip_prefix("constant:") {
                    Ok(Estimator::Constant(nums(rest)?))
                } else {
                    Err(Error::usage(format!("unknown estimator `{s}`")))
                }
            }
        }
    }

    fn apply(&self, model: &dyn ParamModel, counts: &[usize]) -> Result<Vec<f64>> {
        let mean = || {
            let total: usize = counts.iter().sum();
            let freq: Vec<f64> = counts.iter().map(|c| *c as f64 / total as f64).collect();
            model.params_from_frequencies(&freq).ok_or_else(|| {
                Error::usage(format!("model `{}` has no frequency estimator", model.id()))
            })
        };
        Ok(match self {
            Estimator::Mean => mean()?,
            Estimator::Shrinkage { lambda, c } => mean()?.iter().map(|m| lambda * m + c).collect(),
            Estimator::Constant(t) => t.clone(),
            Estimator::PluginInverse => mean()?
                .iter()
                .map(|m| if *m == 0.0 { f64::INFINITY } else { 1.0 / m })
                .collect(),
        })
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Mean => write!(f, "mean"),
            Estimator::Shrinkage { lambda, c } => write!(f, "shrinkage:{lambda},{c}"),
            Estimator::Constant(t) => {
                let s: Vec<String> = t.iter().map(f64::to_string).collect();
                write!(f, "constant:{}", s.join(","))
            }
            Estimator::PluginInverse => write!(f, "plugin-inverse"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Sampling {
    Exact,
    MonteCarlo { draws: usize, seed: u64 },
}

/// n i.i.d. draws from a finite model.
#[derive(Debug, Clone)]
pub struct Experiment {
    model: Arc<dyn ParamModel>,
    n: usize,
    sampling: Sampling,
}

impl Experiment {
    pub fn new(model: Arc<dyn ParamModel>, n: usize, sampling: Sampling) -> Result<Self> {
        if !model.space().is_finite() {
            return Err(Error::usage(
                "estimation experiments need a finite-backend model",
            ));
        }
        if n == 0 {
            return Err(Error::usage("sample size must be positive"));
        }
        if let Sampling::MonteCarlo { draws, .. } = sampling {
            if draws < 2 {
                return Err(Error::usage("Monte Carlo needs at least 2 draws"));
            }
        }
        Ok(Experiment { model, n, sampling })
    }

    /// Exact enumeration when the outcome space has at most 2^20 points,
    /// Monte Carlo otherwise.
    pub fn auto(model: Arc<dyn ParamModel>, n: usize, draws: usize, seed: u64) -> Result<Self> {
        let m = model.space().len();
        let fits = (0..n)
            .try_fold(1usize, |acc, _| {
                acc.checked_mul(m).filter(|a| *a <= MAX_EXACT_OUTCOMES)
            })
            .is_some();
        let sampling = if fits {
            Sampling::Exact
        } else {
            Sampling::MonteCarlo { draws, seed }
        };
        Self::new(model, n, sampling)
    }

    pub fn model(&self) -> &Arc<dyn ParamModel> {
        &self.model
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    /// (weight, counts, score) per outcome; the score Σ_s ∂ log p(x_s) is
    /// only filled for Monte Carlo draws.
    fn outcomes(&self, theta: &[f64]) -> Result<Vec<Outcome>> {
        self.model.domain().check(theta)?;
        let p = self.model.density_unchecked(theta);
        match self.sampling {
            Sampling::Exact => {
                let mut out = Vec::new();
                let mut counts = vec![0usize; p.len()];
                enumerate_counts(&p, self.n, 0, &mut counts, &mut out);
                Ok(out)
            }
            Sampling::MonteCarlo { draws, seed } => {
                let jac = self.model.jacobian_unchecked(theta);
                let mut cum = Vec::with_capacity(p.len());
                let mut acc = 0.0;
                for pi in &p {
                    acc += pi;
                    cum.push(acc);
                }
                if (acc - 1.0).abs() > tol::MASS_TOL || p.iter().any(|v| *v < 0.0) {
                    return Err(Error::Sampling(format!(
                        "atom probabilities do not form a distribution (mass {acc})"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w = 1.0 / draws as f64;
                (0..draws)
                    .map(|_| {
                        let mut counts = vec![0usize; p.len()];
                        let mut score = vec![0.0; jac.len()];
                        for _ in 0..self.n {
                            let u: f64 = rng.gen::<f64>() * acc;
                            let j = cum.partition_point(|c| *c <= u).min(p.len() - 1);
                            if p[j] <= 0.0 {
                                return Err(Error::Sampling(
                                    "drew an atom of zero probability".into(),
                                ));
                            }
                            counts[j] += 1;
                            for (s, row) in score.iter_mut().zip(&jac) {
                                *s += row[j] / p[j];
                            }
                        }
                        Ok(Outcome {
                            weight: w,
                            counts,
                            score,
                        })
                    })
                    .collect()
            }
        }
    }

    fn values(
        &self,
        theta: &[f64],
        phi: &PhiMap,
        est: &Estimator,
    ) -> Result<(Vec<Outcome>, Vec<Vec<f64>>)> {
        phi.check(self.model.dim())?;
        let outs = self.outcomes(theta)?;
        let ys = outs
            .iter()
            .map(|o| Ok(phi.eval(&est.apply(self.model.as_ref(), &o.counts)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((outs, ys))
    }

    /// Fisher matrix of the n-fold product model at θ (enumerated when it fits, n·G otherwise).
    pub fn fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        match IidProduct::new(self.model.clone(), self.n) {
            Ok(prod) => Ok(fisher_matrix(&prod, theta)?.to_dmatrix()),
            Err(_) => Ok(fisher_matrix(self.model.as_ref(), theta)?.to_dmatrix() * self.n as f64),
        }
    }
}

struct Outcome {
    weight: f64,
    counts: Vec<usize>,
    score: Vec<f64>,
}

fn enumerate_counts(
    p: &[f64],
    left: usize,
    i: usize,
    counts: &mut Vec<usize>,
    out: &mut Vec<Outcome>,
) {
    if i + 1 == p.len() {
        counts[i] = left;
        let n: usize = counts.iter().sum();
        let mut logw = ln_factorial(n);
        let mut zero = false;
        for (c, pj) in counts.iter().zip(p) {
            if *c > 0 {
                if *pj <= 0.0 {
                    zero = true;
                    break;
                }
                logw += *c as f64 * pj.ln() - ln_factorial(*c);
            }
        }
        if !zero {
            out.push(Outcome {
                weight: logw.exp(),
                counts: counts.clone(),
                score: Vec::new(),
            });
        }
        return;
    }
    for c in 0..=left {
        counts[i] = c;
        enumerate_counts(p, left - c, i + 1, counts, out);
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A symmetric d×d form in the coordinate dual basis.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticForm {
    pub matrix: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl QuadraticForm {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let eigenvalues = if sym.iter().all(|v| v.is_finite()) {
            spectrum(&sym)
        } else {
            vec![f64::NAN; sym.nrows()]
        };
        QuadraticForm {
            matrix: sym
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            eigenvalues,
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let d = self.matrix.len();
        DMatrix::from_fn(d, d, |i, j| self.matrix[i][j])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiMean {
    pub mean: Vec<f64>,
    /// Monte Carlo standard errors; `None` for exact enumeration.
    pub std_error: Option<Vec<f64>>,
}

/// Σ w y / Σ w, accumulated as offsets from the first value so that a
/// constant estimator reproduces its value exactly.
fn weighted_mean(outs: &[Outcome], ys: &[Vec<f64>]) -> Vec<f64> {
    let Some(y0) = ys.first() else {
        return Vec::new();
    };
    let total: f64 = outs.iter().map(|o| o.weight).sum();
    (0..y0.len())
        .map(|i| {
            if !y0[i].is_finite() {
                return outs
                    .iter()
                    .zip(ys)
                    .map(|(o, y)| o.weight * y[i])
                    .sum::<f64>()
                    / total;
            }
            y0[i]
                + outs
                    .iter()
                    .zip(ys)
                    .map(|(o, y)| o.weight * (y[i] - y0[i]))
                    .sum::<f64>()
                    / total
        })
        .collect()
}

fn weighted_second(outs: &[Outcome], ys: &[Vec<f64>], centre: &[f64]) -> DMatrix<f64> {
    let d = centre.len();
    let mut s = DMatrix::<f64>::zeros(d, d);
    for (o, y) in outs.iter().zip(ys) {
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] += o.weight * (y[i] - centre[i]) * (y[j] - centre[j]);
            }
        }
    }
    s
}

/// E_θ[φ ∘ σ̂].
pub fn phi_mean(exp: &Experiment, theta: &[f64], phi: &PhiMap, est: &Estimator) -> Result<PhiMean> {
    let (outs, ys) = exp.values(theta, phi, est)?;
    let mean = weighted_mean(&outs, &ys);
    let std_error = match exp.sampling {
        Sampling::Exact => None,
        Sampling::MonteCarlo { draws, .. } => {
            let var = weighted_second(&outs, &ys, &mean);
            Some(
                (0..mean.len())
                    .map(|i| (var[(i, i)] / (draws as f64 - 1.0)).sqrt())
                    .collect(),
            )
        }
    };
    Ok(PhiMean { mean, std_error })
}

/// φ-mean minus φ(θ).
pub fn bias(exp: &Experiment, theta: &[f64], phi: &PhiMap, est: &Estimator) -> Result<Vec<f64>> {
    let m = phi_mean(exp, theta, phi, est)?.mean;
    Ok(m.iter().zip(phi.eval(theta)).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Moments {
    pub phi_mean: Vec<f64>,
    pub bias: Vec<f64>,
    pub mse: QuadraticForm,
    pub variance: QuadraticForm,
    /// max |MSE − V − b⊗b|.
    pub decomposition_residual: f64,
}

/// MSE(l, k) = E[(φ^l σ̂ − φ^l(θ))(φ^k σ̂ − φ^k(θ))] and the variance form.
pub fn moments(exp: &Experiment, theta: &[f64], phi: &PhiMap, est: &Estimator) -> Result<Moments> {
    let (outs, ys) = exp.values(theta, phi, est)?;
    let mean = weighted_mean(&outs, &ys);
    let target = phi.eval(theta);
    let mse = weighted_second(&outs, &ys, &target);
    let var = weighted_second(&outs, &ys, &mean);
    let b: Vec<f64> = mean.iter().zip(&target).map(|(a, t)| a - t).collect();
    let d = b.len();
    let mut residual = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            residual = residual.max((mse[(i, j)] - var[(i, j)] - b[i] * b[j]).abs());
        }
    }
    Ok(Moments {
        phi_mean: mean,
        bias: b,
        mse: QuadraticForm::from_dmatrix(&mse),
        variance: QuadraticForm::from_dmatrix(&var),
        decomposition_residual: residual,
    })
}

pub fn mse_form(
    exp: &Experiment,
    theta: &[f64],
    phi: &PhiMap,
    est: &Estimator,
) -> Result<QuadraticForm> {
    Ok(moments(exp, theta, phi, est)?.mse)
}

pub fn variance_form(
    exp: &Experiment,
    theta: &[f64],
    phi: &PhiMap,
    est: &Estimator,
) -> Result<QuadraticForm> {
    Ok(moments(exp, theta, phi, est)?.variance)
}

/// d×n Jacobian of θ ↦ E_θ[φ ∘ σ̂]: central differences for exact
/// enumeration (one-sided at the domain boundary), the score-function
/// estimator Cov(φ σ̂, score) for Monte Carlo.
pub fn phi_mean_jacobian(
    exp: &Experiment,
    theta: &[f64],
    phi: &PhiMap,
    est: &Estimator,
) -> Result<DMatrix<f64>> {
    let n = exp.model.dim();
    let d = phi.value_dim(n);
    let mut jac = DMatrix::<f64>::zeros(d, n);
    match exp.sampling {
        Sampling::Exact => {
            let dom = exp.model.domain();
            let centre = phi_mean(exp, theta, phi, est)?.mean;
            for i in 0..n {
                let mut tp = theta.to_vec();
                let mut tm = theta.to_vec();
                tp[i] += PHI_FD_STEP;
                tm[i] -= PHI_FD_STEP;
                let (up, dn) = (dom.contains(&tp), dom.contains(&tm));
                let (fp, fm, h) = match (up, dn) {
                    (true, true) => (
                        phi_mean(exp, &tp, phi, est)?.mean,
                        phi_mean(exp, &tm, phi, est)?.mean,
                        2.0 * PHI_FD_STEP,
                    ),
                    (true, false) => (
                        phi_mean(exp, &tp, phi, est)?.mean,
                        centre.clone(),
                        PHI_FD_STEP,
                    ),
                    (false, true) => (
                        centre.clone(),
                        phi_mean(exp, &tm, phi, est)?.mean,
                        PHI_FD_STEP,
                    ),
                    (false, false) => {
                        return Err(Error::domain(
                            "parameter domain too narrow for the difference step",
                        ))
                    }
                };
                for l in 0..d {
                    jac[(l, i)] = (fp[l] - fm[l]) / h;
                }
            }
        }
        Sampling::MonteCarlo { .. } => {
            let (outs, ys) = exp.values(theta, phi, est)?;
            let mean = weighted_mean(&outs, &ys);
            for (o, y) in outs.iter().zip(&ys) {
                for l in 0..d {
                    for i in 0..n {
                        jac[(l, i)] += o.weight * (y[l] - mean[l]) * o.score[i];
                    }
                }
            }
        }
    }
    Ok(jac)
}

/// J G⁺ Jᵀ with G⁺ the pseudo-inverse on the numerical range of G. Rows of
/// J with a relative component beyond `RANGE_TOL` in ker G are rejected.
pub fn inverse_fisher_form_from_jacobian(
    jac: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<QuadraticForm> {
    if jac.ncols() != g.nrows() || g.nrows() != g.ncols() {
        return Err(Error::usage("Jacobian and Fisher matrix shapes disagree"));
    }
    let eig = SymmetricEigen::new(g.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let cut = tol::eigen_tol(lmax);
    let n = g.nrows();
    let mut pinv = DMatrix::<f64>::zeros(n, n);
    let mut null = DMatrix::<f64>::zeros(n, n);
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        if *lam > cut {
            pinv += v * v.transpose() / *lam;
        } else {
            null += v * v.transpose();
        }
    }
    let mut residual = 0.0f64;
    for r in 0..jac.nrows() {
        let row = jac.row(r).transpose();
        let norm = row.norm();
        if norm == 0.0 {
            continue;
        }
        residual = residual.max((&null * &row).norm() / norm);
    }
    if residual > tol::RANGE_TOL {
        return Err(Error::OutsideRange { residual });
    }
    Ok(QuadraticForm::from_dmatrix(&(jac * pinv * jac.transpose())))
}

/// dφ_σ̂ᵀ G⁺ dφ_σ̂ with G the Fisher matrix of the n-sample experiment.
pub fn inverse_fisher_form(
    exp: &Experiment,
    theta: &[f64],
    phi: &PhiMap,
    est: &Estimator,
) -> Result<QuadraticForm> {
    let jac = phi_mean_jacobian(exp, theta, phi, est)?;
    inverse_fisher_form_from_jacobian(&jac, &exp.fisher(theta)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct CramerRao {
    pub theta: Vec<f64>,
    pub estimator: String,
    pub sample_size: usize,
    pub sampling: Sampling,
    pub variance: QuadraticForm,
    pub inverse_fisher: QuadraticForm,
    pub gap: QuadraticForm,
    pub min_eigenvalue: f64,
    /// cr_tol for exact enumeration, 3 batch standard errors for Monte Carlo.
    pub tolerance: f64,
    pub decomposition_residual: f64,
    pub holds: bool,
}

/// V − (g^φ_σ̂)^{-1} and whether it is positive semi-definite within tolerance.
pub fn cramer_rao_gap(
    exp: &Experiment,
    theta: &[f64],
    phi: &PhiMap,
    est: &Estimator,
) -> Result<CramerRao> {
    let mo = moments(exp, theta, phi, est)?;
    let v = mo.variance.to_dmatrix();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "estimator {est} is not square-integrable at θ = {theta:?}"
        )));
    }
    let inv = inverse_fisher_form(exp, theta, phi, est)?;
    let gap = QuadraticForm::from_dmatrix(&(&v - inv.to_dmatrix()));
    let tolerance = match exp.sampling {
        Sampling::Exact => tol::CR_TOL,
        Sampling::MonteCarlo { draws, seed } => {
            const BATCHES: usize = 20;
            let per = draws / BATCHES;
            if per < 2 {
                return Err(Error::usage(
                    "Monte Carlo Cramér–Rao needs at least 40 draws",
                ));
            }
            let mins = (0..BATCHES)
                .map(|b| {
                    let sub = Experiment::new(
                        exp.model.clone(),
                        exp.n,
                        Sampling::MonteCarlo {
                            draws: per,
                            seed: seed.wrapping_add(1 + b as u64),
                        },
                    )?;
                    let vb = variance_form(&sub, theta, phi, est)?.to_dmatrix();
                    let ib = inverse_fisher_form(&sub, theta, phi, est)?.to_dmatrix();
                    Ok(QuadraticForm::from_dmatrix(&(vb - ib)).min_eigenvalue())
                })
                .collect::<Result<Vec<f64>>>()?;
            let m = mins.iter().sum::<f64>() / BATCHES as f64;
            let sd = (mins.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (BATCHES as f64 - 1.0))
                .sqrt();
            (3.0 * sd / (BATCHES as f64).sqrt()).max(tol::CR_TOL)
        }
    };
    let min_eigenvalue = gap.min_eigenvalue();
    Ok(CramerRao {
        theta: theta.to_vec(),
        estimator: est.to_string(),
        sample_size: exp.n,
        sampling: exp.sampling,
        variance: mo.variance,
        inverse_fisher: inv,
        gap,
        min_eigenvalue,
        tolerance,
        decomposition_residual: mo.decomposition_residual,
        holds: min_eigenvalue >= -tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityPoint {
    pub theta: Vec<f64>,
    /// ‖φ^l ∘ σ̂‖_{L²(ξ_θ)} per coordinate.
    pub l2_norms: Vec<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub points: Vec<RegularityPoint>,
    pub growth_factor: f64,
    pub passed: bool,
}

/// L² norms of φ ∘ σ̂ over a θ grid. A point is flagged when a norm is
/// infinite or exceeds `growth_factor` times the median over the grid.
pub fn regularity_probe(
    exp: &Experiment,
    thetas: &[Vec<f64>],
    phi: &PhiMap,
    est: &Estimator,
) -> Result<RegularityReport> {
    const GROWTH: f64 = 10.0;
    let mut points = Vec::with_capacity(thetas.len());
    for th in thetas {
        let (outs, ys) = exp.values(th, phi, est)?;
        let d = ys.first().map_or(0, Vec::len);
        let l2_norms = (0..d)
            .map(|l| {
                outs.iter()
                    .zip(&ys)
                    .map(|(o, y)| {
                        if o.weight == 0.0 {
                            0.0
                        } else {
                            o.weight * y[l] * y[l]
                        }
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        points.push(RegularityPoint {
            theta: th.clone(),
            l2_norms,
            flagged: false,
        });
    }
    let d = points.first().map_or(0, |p| p.l2_norms.len());
    for l in 0..d {
        let mut finite: Vec<f64> = points
            .iter()
            .map(|p| p.l2_norms[l])
            .filter(|v| v.is_finite())
            .collect();
        finite.sort_by(f64::total_cmp);
        let median = finite.get(finite.len() / 2).copied().unwrap_or(0.0);
        for p in &mut points {
            let v = p.l2_norms[l];
            if !v.is_finite() || (median > 0.0 && v > GROWTH * median) {
                p.flagged = true;
            }
        }
    }
    let passed = points.iter().all(|p| !p.flagged);
    Ok(RegularityReport {
        points,
        growth_factor: GROWTH,
        passed,
    })
}

/// Fisher matrix of the n-sample experiment, as a report.
pub fn experiment_fisher(exp: &Experiment, theta: &[f64]) -> Result<FisherMatrix> {
    match IidProduct::new(exp.model.clone(), exp.n) {
        Ok(prod) => fisher_matrix(&prod, theta),
        Err(_) => {
            let mut g = fisher_matrix(exp.model.as_ref(), theta)?;
            let n = exp.n as f64;
            g.matrix.iter_mut().flatten().for_each(|v| *v *= n);
            g.eigenvalues.iter_mut().for_each(|v| *v *= n);
            Ok(g)
        }
    }
}
