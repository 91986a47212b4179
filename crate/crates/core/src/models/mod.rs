//! Parameterized statistical models: densities on a sample space together
//! with their parameter Jacobians.

mod baseline;
mod curve;
mod curves;
mod mixture;
mod product;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

pub use baseline::{Bernoulli, BernoulliPair, Categorical, GaussLoc, GaussLoc2, GaussLocScale};
pub use curve::CurveInModel;
pub use curves::{
    weak_f, FriedrichCurve, WeakCurve, FRIEDRICH_BUMP_MASS, FRIEDRICH_SPEED_SQ, WEAK_CURVE_A,
};
pub use mixture::{singular_reparam, GaussianMixture, SingularCurve};
pub use product::IidProduct;

use crate::error::{Error, Result};
use crate::measure::{Measure, SampleSpace, TangentVector};
use crate::tol;

/// Step of the default central-difference Jacobian.
pub const FD_STEP: f64 = 1e-5;

/// Parameter domain: a box, optionally open, optionally intersected with a
/// simplex {θ_i ≥ ε, Σθ_i ≤ 1 − ε}.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    open: bool,
    simplex_margin: Option<f64>,
}

impl ParamDomain {
    pub fn closed_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        ParamDomain {
            lo,
            hi,
            open: false,
            simplex_margin: None,
        }
    }

    pub fn open_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        ParamDomain {
            open: true,
            ..Self::closed_box(lo, hi)
        }
    }

    pub fn simplex(dim: usize, margin: f64) -> Self {
        ParamDomain {
            lo: vec![margin; dim],
            hi: vec![1.0 - margin; dim],
            open: false,
            simplex_margin: Some(margin),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dim() || theta.iter().any(|t| !t.is_finite()) {
            return false;
        }
        let in_box = theta
            .iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .all(|((t, lo), hi)| {
                if self.open {
                    t > lo && t < hi
                } else {
                    t >= lo && t <= hi
                }
            });
        in_box
            && self
                .simplex_margin
                .is_none_or(|eps| theta.iter().sum::<f64>() <= 1.0 - eps)
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "parameter {theta:?} lies outside the model domain"
            )))
        }
    }

    /// Nearest point of the domain (open boxes are shrunk by 1e-12).
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        let pad = if self.open { 1e-12 } else { 0.0 };
        let mut out: Vec<f64> = theta
            .iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .map(|((t, lo), hi)| t.clamp(lo + pad * (hi - lo), hi - pad * (hi - lo)))
            .collect();
        if let Some(eps) = self.simplex_margin {
            let budget = 1.0 - eps - eps * out.len() as f64;
            let shifted: Vec<f64> = theta.iter().map(|t| t - eps).collect();
            if out.iter().map(|t| t - eps).sum::<f64>() > budget {
                let y = project_to_simplex(&shifted, budget);
                out = y.into_iter().map(|v| v + eps).collect();
            }
        }
        out
    }

    /// Uniform draw from the domain shrunk towards its interior by the
    /// fraction `shrink` of each side (simplex domains: flat Dirichlet
    /// squeezed into the margin).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, shrink: f64) -> Vec<f64> {
        if let Some(eps) = self.simplex_margin {
            let m = self.dim() + 1;
            let margin = eps.max(shrink / m as f64);
            let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = e.iter().sum();
            let scale = 1.0 - margin * m as f64;
            return e[..m - 1]
                .iter()
                .map(|v| margin + scale * v / total)
                .collect();
        }
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| {
                let w = hi - lo;
                lo + w * (shrink + (1.0 - 2.0 * shrink) * rng.gen::<f64>())
            })
            .collect()
    }
}

/// Euclidean projection onto {y ≥ 0, Σy = r}.
fn project_to_simplex(v: &[f64], r: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cum += uj;
        let cand = (cum - r) / (j + 1) as f64;
        if uj - cand > 0.0 {
            shift = cand;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}

/// A parameterized statistical model p: Θ ⊂ R^n → densities on a sample space.
pub trait ParamModel: fmt::Debug + Send + Sync {
    fn id(&self) -> String;

    fn domain(&self) -> &ParamDomain;

    fn space(&self) -> &Arc<SampleSpace>;

    /// Densities at every node, without a domain check.
    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64>;

    /// ∂p/∂θ_i at every node, one row per parameter, without a domain check.
    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        fd_jacobian(self, theta, FD_STEP)
    }

    /// Whether `jacobian_unchecked` is a closed form rather than finite differences.
    fn analytic_jacobian(&self) -> bool {
        false
    }

    /// True for curves that may leave the cone of nonnegative measures.
    fn signed(&self) -> bool {
        false
    }

    /// Parameter with the given atom frequencies, for finite models that
    /// admit a moment/frequency estimator.
    fn params_from_frequencies(&self, _freq: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn dim(&self) -> usize {
        self.domain().dim()
    }

    fn density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.domain().check(theta)?;
        Ok(self.density_unchecked(theta))
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.domain().check(theta)?;
        Ok(self.jacobian_unchecked(theta))
    }

    fn measure(&self, theta: &[f64]) -> Result<Measure> {
        let d = self.density(theta)?;
        if self.signed() {
            Measure::signed(self.space().clone(), d)
        } else {
            Measure::nonnegative(self.space().clone(), d)
        }
    }
}

/// Central-difference Jacobian of `model` at `theta` with step `h`.
pub fn fd_jacobian<M: ParamModel + ?Sized>(model: &M, theta: &[f64], h: f64) -> Vec<Vec<f64>> {
    (0..theta.len())
        .map(|i| {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let p = model.density_unchecked(&tp);
            let m = model.density_unchecked(&tm);
            p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect()
}

/// Tangent vector of the model at θ in parameter direction `v`.
///
/// The log-representation is ∂_v p / p wherever p > 0, including far tails
/// where both are tiny; nodes with p = 0 and a non-negligible derivative
/// are reported as a domination failure.
pub fn tangent_at(model: &dyn ParamModel, theta: &[f64], v: &[f64]) -> Result<TangentVector> {
    if v.len() != model.dim() {
        return Err(Error::usage(format!(
            "direction has {} entries, model dimension is {}",
            v.len(),
            model.dim()
        )));
    }
    let base = model.measure(theta)?;
    let jac = model.jacobian_unchecked(theta);
    let dir = directional(&jac, v);
    let mut bad = Vec::new();
    let log_rep = dir
        .iter()
        .zip(base.density())
        .enumerate()
        .map(|(k, (d, p))| {
            if *p > 0.0 {
                d / p
            } else {
                if d.abs() > tol::DOMINANCE_TOL {
                    bad.push(k);
                }
                0.0
            }
        })
        .collect();
    if !bad.is_empty() {
        return Err(Error::NotDominated { nodes: bad });
    }
    TangentVector::new(base, log_rep)
}

/// Σ_i v_i · jac_i.
pub fn directional(jac: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n = jac.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (row, vi) in jac.iter().zip(v) {
        if *vi == 0.0 {
            continue;
        }
        for (o, r) in out.iter_mut().zip(row) {
            *o += vi * r;
        }
    }
    out
}

/// Model zoo lookup by identifier.
///
/// Known ids: `mixture`, `singular-curve`, `weak-curve`, `friedrich`,
/// `bernoulli`, `categorical:<m>`, `gauss-loc-scale`, `gauss-loc`,
/// `gauss-loc2`, `bernoulli-pair`, and `iid:<n>:<base id>` for n-fold
/// products of finite models.
pub fn from_id(id: &str) -> Result<Arc<dyn ParamModel>> {
    let model: Arc<dyn ParamModel> = match id {
        "mixture" => Arc::new(GaussianMixture::new()),
        "singular-curve" => Arc::new(SingularCurve::new()),
        "weak-curve" => Arc::new(WeakCurve::new()),
        "friedrich" => Arc::new(FriedrichCurve::new()),
        "bernoulli" => Arc::new(Bernoulli::new()),
        "gauss-loc-scale" => Arc::new(GaussLocScale::new()),
        "gauss-loc" => Arc::new(GaussLoc::new()),
        "gauss-loc2" => Arc::new(GaussLoc2::new()),
        "bernoulli-pair" => Arc::new(BernoulliPair::new()),
        _ => {
            if let Some(m) = id.strip_prefix("categorical:") {
                let m: usize = m
                    .parse()
                    .map_err(|_| Error::usage(format!("bad category count in `{id}`")))?;
                Arc::new(Categorical::new(m)?)
            } else if let Some(rest) = id.strip_prefix("iid:") {
                let (n, base) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::usage(format!("expected iid:<n>:<model>, got `{id}`")))?;
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::usage(format!("bad sample size in `{id}`")))?;
                Arc::new(IidProduct::new(from_id(base)?, n)?)
            } else {
                return Err(Error::usage(format!("unknown model id `{id}`")));
            }
        }
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ZOO: [&str; 11] = [
        "mixture",
        "weak-curve",
        "friedrich",
        "bernoulli",
        "categorical:3",
        "categorical:5",
        "gauss-loc-scale",
        "gauss-loc",
        "gauss-loc2",
        "bernoulli-pair",
        "iid:4:categorical:3",
    ];

    #[test]
    fn every_probability_model_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in ZOO {
            let model = from_id(id).unwrap();
            for _ in 0..12 {
                let theta = model.domain().sample(&mut rng, 0.0);
                let mu = model.measure(&theta).unwrap();
                assert!(
                    mu.is_probability(),
                    "{id} at {theta:?}: mass {}",
                    mu.total_mass()
                );
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for id in ZOO.iter().chain(&["singular-curve"]) {
            let model = from_id(id).unwrap();
            assert!(model.analytic_jacobian(), "{id}");
            for _ in 0..6 {
                let mut theta = model.domain().sample(&mut rng, 0.05);
                if matches!(*id, "weak-curve" | "friedrich") {
                    // Both curves have features of width ~|t| that a fixed step cannot resolve near 0.
                    theta[0] = theta[0].signum() * (0.3 + 0.6 * theta[0].abs());
                }
                let exact = model.jacobian_unchecked(&theta);
                let fd = fd_jacobian(model.as_ref(), &theta, FD_STEP);
                for (row_e, row_f) in exact.iter().zip(&fd) {
                    let scale = row_e.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
                    for (e, f) in row_e.iter().zip(row_f) {
                        assert!(
                            (e - f).abs() <= 1e-6 * scale,
                            "{id} at {theta:?}: {e} vs {f}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tangents_have_zero_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for id in ZOO {
            let model = from_id(id).unwrap();
            let theta = model.domain().sample(&mut rng, 0.1);
            let v: Vec<f64> = (0..model.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = tangent_at(model.as_ref(), &theta, &v).unwrap();
            let mass = crate::measure::integrate(t.log_rep(), t.base()).unwrap();
            assert!(mass.abs() < tol::QUAD_TOL, "{id}: {mass}");
        }
    }

    #[test]
    fn bernoulli_tangent_log_rep() {
        let model = from_id("bernoulli").unwrap();
        let t = tangent_at(model.as_ref(), &[0.5], &[1.0]).unwrap();
        assert_eq!(t.log_rep(), &[-2.0, 2.0]);
    }

    #[test]
    fn mixture_tangent_at_origin_vanishes() {
        let model = from_id("mixture").unwrap();
        for v in [[1.0, 0.0], [0.0, 1.0], [0.3, -2.0]] {
            let t = tangent_at(model.as_ref(), &[0.0, 0.0], &v).unwrap();
            assert!(t.log_rep().iter().all(|l| *l == 0.0));
        }
    }

    #[test]
    fn unknown_ids_are_rejected() {
        assert!(matches!(from_id("poisson"), Err(Error::Usage(_))));
        assert!(matches!(from_id("categorical:x"), Err(Error::Usage(_))));
        assert!(from_id("categorical:1").is_err());
    }

    #[test]
    fn domain_projection_and_sampling() {
        let d = ParamDomain::simplex(2, 1e-6);
        let p = d.project(&[0.9, 0.9]);
        assert!(d.contains(&p), "{p:?}");
        assert!((p[0] - p[1]).abs() < 1e-12);
        let b = ParamDomain::closed_box(vec![0.0, -6.0], vec![1.0, 6.0]);
        assert_eq!(b.project(&[-0.5, 7.0]), vec![0.0, 6.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(d.contains(&d.sample(&mut rng, 0.0)));
            assert!(b.contains(&b.sample(&mut rng, 0.2)));
        }
        let open = ParamDomain::open_box(vec![-1.0], vec![1.0]);
        assert!(!open.contains(&[1.0]));
        assert!(open.contains(&open.project(&[3.0])));
    }
}
