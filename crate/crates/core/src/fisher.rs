//! The Fisher metric g(v, w) = ∫ log v · log w dξ, Fisher information
//! matrices, degeneracy detection and 2-integrability probing.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{integrate, TangentVector};
use crate::models::{directional, CurveInModel, ParamModel};
use crate::tol;

/// Fisher information matrix at a parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct FisherMatrix {
    pub theta: Vec<f64>,
    /// Row-major n×n matrix.
    pub matrix: Vec<Vec<f64>>,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// Nodes where the density fell to `DOMINANCE_TOL` while its derivative did not.
    pub capped_nodes: usize,
    /// Contribution of capped nodes to the trace of G.
    pub capped_contribution: f64,
}

impl FisherMatrix {
    fn from_matrix(
        theta: &[f64],
        g: DMatrix<f64>,
        capped_nodes: usize,
        capped_contribution: f64,
    ) -> Self {
        let eigenvalues = spectrum(&g);
        let rank = rank_of(&eigenvalues);
        FisherMatrix {
            theta: theta.to_vec(),
            matrix: g.row_iter().map(|r| r.iter().copied().collect()).collect(),
            eigenvalues,
            rank,
            capped_nodes,
            capped_contribution,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }

    /// vᵀ G v.
    pub fn quad(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, vi) in v.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                s += vi * self.matrix[i][j] * vj;
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// det G, or 0 when the matrix is rank deficient.
    pub fn det(&self) -> f64 {
        if self.rank < self.dim() {
            0.0
        } else {
            self.eigenvalues.iter().product()
        }
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn spectrum(g: &DMatrix<f64>) -> Vec<f64> {
    if g.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(g.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn rank_of(eigenvalues: &[f64]) -> usize {
    let lmax = eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let t = tol::eigen_tol(lmax);
    eigenvalues.iter().filter(|v| **v > t).count()
}

/// g(v, w) = ∫ log v · log w dξ.
pub fn fisher_inner(v: &TangentVector, w: &TangentVector) -> Result<f64> {
    if !v.base().same_space(w.base()) || v.base().density() != w.base().density() {
        return Err(Error::usage(
            "tangent vectors are attached to different base measures",
        ));
    }
    let prod: Vec<f64> = v
        .log_rep()
        .iter()
        .zip(w.log_rep())
        .map(|(a, b)| a * b)
        .collect();
    integrate(&prod, v.base())
}

/// Largest |∂p| / p treated as a genuine (if extreme) log-derivative at
/// densities below `DOMINANCE_TOL`, e.g. far Gaussian tails.
const MAX_LOG_DERIVATIVE: f64 = 1e6;

pub(crate) enum Denominator {
    Exact(f64),
    Capped,
    Skip,
}

/// How a node with density `p` and largest derivative magnitude `dmax`
/// enters ∫ (∂p)² / p. Where the density vanishes (or is negligible
/// relative to its derivative) the density is floored at `DOMINANCE_TOL`
/// and the node is reported as capped.
pub(crate) fn fisher_denominator(p: f64, dmax: f64) -> Denominator {
    if p > tol::DOMINANCE_TOL || (p > 0.0 && dmax <= MAX_LOG_DERIVATIVE * p) {
        Denominator::Exact(p)
    } else if dmax > tol::DOMINANCE_TOL {
        Denominator::Capped
    } else {
        Denominator::Skip
    }
}

/// Accumulated ∫ ∂_i p ∂_j p / p with the support-boundary cap.
pub(crate) struct Assembled {
    pub g: DMatrix<f64>,
    pub capped_nodes: usize,
    pub capped_contribution: f64,
}

pub(crate) fn assemble(weights: &[f64], p: &[f64], jac: &[Vec<f64>]) -> Result<Assembled> {
    let n = jac.len();
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut capped_nodes = 0;
    let mut capped_contribution = 0.0;
    let mut d = vec![0.0; n];
    for (k, (w, pk)) in weights.iter().zip(p).enumerate() {
        for (di, row) in d.iter_mut().zip(jac) {
            *di = row[k];
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax == 0.0 {
            continue;
        }
        let denom = match fisher_denominator(*pk, dmax) {
            Denominator::Exact(p) => p,
            Denominator::Capped => {
                capped_nodes += 1;
                capped_contribution +=
                    w * d.iter().map(|x| x * x).sum::<f64>() / tol::DOMINANCE_TOL;
                tol::DOMINANCE_TOL
            }
            Denominator::Skip => continue,
        };
        let r = denom.sqrt();
        for x in d.iter_mut() {
            *x /= r;
        }
        for i in 0..n {
            for j in 0..=i {
                g[(i, j)] += w * d[i] * d[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Integration("Fisher integrand is not finite".into()));
    }
    Ok(Assembled {
        g,
        capped_nodes,
        capped_contribution,
    })
}

/// G_ij(θ) = ∫ ∂_i p ∂_j p / p.
pub fn fisher_matrix(model: &dyn ParamModel, theta: &[f64]) -> Result<FisherMatrix> {
    let p = model.density(theta)?;
    let jac = model.jacobian_unchecked(theta);
    let a = assemble(model.space().weights(), &p, &jac)?;
    Ok(FisherMatrix::from_matrix(
        theta,
        a.g,
        a.capped_nodes,
        a.capped_contribution,
    ))
}

/// Fisher matrix of an explicitly given density and Jacobian on `model`'s space.
pub fn fisher_matrix_from(
    weights: &[f64],
    theta: &[f64],
    p: &[f64],
    jac: &[Vec<f64>],
) -> Result<FisherMatrix> {
    let a = assemble(weights, p, jac)?;
    Ok(FisherMatrix::from_matrix(
        theta,
        a.g,
        a.capped_nodes,
        a.capped_contribution,
    ))
}

/// Number of eigenvalues above `eigen_tol`.
pub fn degeneracy_rank(g: &FisherMatrix) -> usize {
    g.rank
}

/// |v|_g at θ, i.e. √(vᵀ G(θ) v), computed from the directional derivative.
pub fn speed(model: &dyn ParamModel, theta: &[f64], v: &[f64]) -> Result<f64> {
    let p = model.density_unchecked(theta);
    let jac = model.jacobian_unchecked(theta);
    let d = directional(&jac, v);
    let a = assemble(model.space().weights(), &p, &[d])?;
    Ok(a.g[(0, 0)].max(0.0).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbePoint {
    pub t: f64,
    pub theta: Vec<f64>,
    /// |ċ(t)|_g.
    pub speed: f64,
    /// ‖ċ(t)‖_TV.
    pub velocity_tv: f64,
    pub capped_contribution: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Discontinuity {
    pub t: f64,
    pub value: f64,
    pub left_limit: f64,
    pub right_limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub points: Vec<ProbePoint>,
    pub discontinuities: Vec<Discontinuity>,
    pub jump_tol: f64,
}

impl ProbeReport {
    pub fn continuous(&self) -> bool {
        self.discontinuities.is_empty()
    }
}

/// Speeds along `curve` at the (sorted) probe grid, with discontinuity flags.
///
/// At each interior grid point the one-sided limits are extrapolated
/// linearly from the two neighbours on either side. A point is flagged when
/// the limits disagree with each other, or the value disagrees with both,
/// by more than `jump_tol` relative to the local magnitude. Runs of adjacent
/// flags are merged into one discontinuity located at the point deviating
/// most from its limits.
pub fn two_integrability_probe(
    model: &dyn ParamModel,
    curve: &CurveInModel,
    t_grid: &[f64],
    jump_tol: f64,
) -> Result<ProbeReport> {
    curve.check_in(model)?;
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let weights = model.space().weights();
    let mut points = Vec::with_capacity(ts.len());
    for &t in &ts {
        let theta = curve.point(t);
        model.domain().check(&theta)?;
        let v = curve.velocity(t);
        let p = model.density_unchecked(&theta);
        let dir = directional(&model.jacobian_unchecked(&theta), &v);
        let velocity_tv = dir.iter().zip(weights).map(|(d, w)| d.abs() * w).sum();
        let a = assemble(weights, &p, &[dir])?;
        points.push(ProbePoint {
            t,
            theta,
            speed: a.g[(0, 0)].max(0.0).sqrt(),
            velocity_tv,
            capped_contribution: a.capped_contribution,
            flagged: false,
        });
    }
    let discontinuities = flag_jumps(&mut points, jump_tol);
    Ok(ProbeReport {
        points,
        discontinuities,
        jump_tol,
    })
}

fn flag_jumps(points: &mut [ProbePoint], jump_tol: f64) -> Vec<Discontinuity> {
    let n = points.len();
    let extrap = |a: &ProbePoint, b: &ProbePoint, t: f64| {
        b.speed + (b.speed - a.speed) * (t - b.t) / (b.t - a.t)
    };
    let floor = 1e-8
        * points
            .iter()
            .fold(0.0f64, |m, p| m.max(p.speed))
            .max(1e-300);
    let mut limits = vec![None; n];
    for i in 2..n.saturating_sub(2) {
        let t = points[i].t;
        let left = extrap(&points[i - 2], &points[i - 1], t);
        let right = extrap(&points[i + 2], &points[i + 1], t);
        let s = points[i].speed;
        let scale = s.abs().max(left.abs()).max(right.abs()).max(floor);
        let off = (s - left).abs().min((s - right).abs());
        if (left - right).abs() > jump_tol * scale || off > jump_tol * scale {
            points[i].flagged = true;
            limits[i] = Some((left, right, off));
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if !points[i].flagged {
            i += 1;
            continue;
        }
        let mut best = i;
        let mut j = i;
        while j < n && points[j].flagged {
            if limits[j].unwrap().2 > limits[best].unwrap().2 {
                best = j;
            }
            j += 1;
        }
        let (left, right, _) = limits[best].unwrap();
        out.push(Discontinuity {
            t: points[best].t,
            value: points[best].speed,
            left_limit: left,
            right_limit: right,
        });
        i = j;
    }
    out
}
