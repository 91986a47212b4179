//! Markov kernels from a sample space to a finite one, their pushforwards of
//! measures and tangent vectors, and the monotonicity of the Fisher metric.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::fisher_inner;
use crate::measure::{Measure, SampleSpace, TangentVector};
use crate::models::{directional, tangent_at, ParamDomain, ParamModel};
use crate::tol;

/// A row-stochastic matrix: row i is the law T̄(x_i) on the target atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    source: Arc<SampleSpace>,
    target: Arc<SampleSpace>,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelDoc {
    rows: Vec<Vec<f64>>,
}

impl MarkovKernel {
    /// Validates shape, nonnegativity and unit row sums within `MASS_TOL`.
    pub fn new(source: Arc<SampleSpace>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != source.len() {
            return Err(Error::usage(format!(
                "kernel has {} rows, source has {} nodes",
                rows.len(),
                source.len()
            )));
        }
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::usage("kernel rows must be nonempty"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::usage(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::domain(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol::MASS_TOL {
                return Err(Error::domain(format!("row {i} sums to {s}")));
            }
        }
        Ok(MarkovKernel {
            source,
            target: Arc::new(SampleSpace::finite(k)?),
            rows,
        })
    }

    pub fn identity(source: Arc<SampleSpace>) -> Result<Self> {
        let n = source.len();
        Self::from_assignment(source, &(0..n).collect::<Vec<_>>(), n)
    }

    /// Deterministic kernel sending node i to atom `assign[i]` of a `k`-atom target.
    pub fn from_assignment(source: Arc<SampleSpace>, assign: &[usize], k: usize) -> Result<Self> {
        if let Some(a) = assign.iter().find(|a| **a >= k) {
            return Err(Error::usage(format!(
                "assignment target {a} out of range for {k} atoms"
            )));
        }
        let rows = assign
            .iter()
            .map(|a| {
                let mut r = vec![0.0; k];
                r[*a] = 1.0;
                r
            })
            .collect();
        Self::new(source, rows)
    }

    /// Bijection i ↦ perm[i] of a finite space onto itself.
    pub fn permutation(source: Arc<SampleSpace>, perm: &[usize]) -> Result<Self> {
        let n = source.len();
        let mut seen = vec![false; n];
        for p in perm {
            if *p >= n || std::mem::replace(&mut seen[*p], true) {
                return Err(Error::usage("not a permutation of the source atoms"));
            }
        }
        Self::from_assignment(source, perm, n)
    }

    /// Everything to a single atom.
    pub fn collapse(source: Arc<SampleSpace>) -> Result<Self> {
        let n = source.len();
        Self::from_assignment(source, &vec![0; n], 1)
    }

    /// Interval binning of a 1-D grid: node x goes to the number of `edges` ≤ x.
    pub fn interval_binning(source: Arc<SampleSpace>, edges: &[f64]) -> Result<Self> {
        if source.dim() != 1 {
            return Err(Error::usage(
                "interval binning needs a one-dimensional sample space",
            ));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::usage("bin edges must be strictly increasing"));
        }
        let assign: Vec<usize> = source
            .coords()
            .iter()
            .map(|x| edges.partition_point(|e| e <= x))
            .collect();
        Self::from_assignment(source, &assign, edges.len() + 1)
    }

    /// Rows drawn independently from the flat distribution on the (k−1)-simplex.
    pub fn random<R: Rng + ?Sized>(
        source: Arc<SampleSpace>,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let rows = (0..source.len()).map(|_| flat_simplex(rng, k)).collect();
        Self::new(source, rows)
    }

    pub fn random_permutation<R: Rng + ?Sized>(
        source: Arc<SampleSpace>,
        rng: &mut R,
    ) -> Result<Self> {
        let mut perm: Vec<usize> = (0..source.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        Self::permutation(source, &perm)
    }

    pub fn from_json(text: &str, source: Arc<SampleSpace>) -> Result<Self> {
        let doc: KernelDoc = serde_json::from_str(text)?;
        Self::new(source, doc.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&KernelDoc {
            rows: self.rows.clone(),
        })?)
    }

    pub fn source(&self) -> &Arc<SampleSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<SampleSpace> {
        &self.target
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// S ∘ T: first `self`, then `next`.
    pub fn then(&self, next: &MarkovKernel) -> Result<MarkovKernel> {
        if next.source.len() != self.target.len() {
            return Err(Error::usage("kernel shapes do not compose"));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut out = vec![0.0; next.target.len()];
                for (rj, srow) in r.iter().zip(&next.rows) {
                    for (o, s) in out.iter_mut().zip(srow) {
                        *o += rj * s;
                    }
                }
                out
            })
            .collect();
        Ok(MarkovKernel {
            source: self.source.clone(),
            target: next.target.clone(),
            rows,
        })
    }

    /// Target densities Σ_i rows[i][j] · f_i · w_i for source densities f.
    pub fn push_density(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.target.len()];
        for ((row, fi), w) in self.rows.iter().zip(f).zip(self.source.weights()) {
            let m = fi * w;
            if m == 0.0 {
                continue;
            }
            for (o, r) in out.iter_mut().zip(row) {
                *o += r * m;
            }
        }
        out
    }

    fn require_source(&self, mu: &Measure) -> Result<()> {
        if **mu.space() != *self.source {
            return Err(Error::usage(
                "measure does not live on the kernel's source space",
            ));
        }
        Ok(())
    }
}

fn flat_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// T_*μ.
pub fn pushforward_measure(t: &MarkovKernel, mu: &Measure) -> Result<Measure> {
    t.require_source(mu)?;
    let d = t.push_density(mu.density());
    if mu.is_signed() {
        Measure::signed(t.target.clone(), d)
    } else {
        Measure::nonnegative(t.target.clone(), d)
    }
}

/// T_*v at T_*ξ: log_rep = d(T_*(log v · ξ)) / d(T_*ξ).
pub fn pushforward_tangent(t: &MarkovKernel, v: &TangentVector) -> Result<TangentVector> {
    let base = pushforward_measure(t, v.base())?;
    let pushed = t.push_density(v.as_measure().density());
    let log_rep = pushed
        .iter()
        .zip(base.density())
        .map(|(n, b)| if *b > 0.0 { n / b } else { 0.0 })
        .collect();
    TangentVector::new(base, log_rep)
}

/// g(v, v) − g(T_*v, T_*v) for the model tangent at θ in direction `v`.
pub fn monotonicity_gap(
    t: &MarkovKernel,
    model: &dyn ParamModel,
    theta: &[f64],
    v: &[f64],
) -> Result<f64> {
    let tv = tangent_at(model, theta, v)?;
    let pushed = pushforward_tangent(t, &tv)?;
    Ok(fisher_inner(&tv, &tv)? - fisher_inner(&pushed, &pushed)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SufficiencyReport {
    pub max_abs_gap: f64,
    pub suff_tol: f64,
    pub samples: usize,
    /// Fisher-metric equality held on every sample; not a proof of sufficiency.
    pub sufficient_consistent: bool,
}

/// Largest |monotonicity gap| over paired (θ, v) samples.
pub fn sufficiency_check(
    t: &MarkovKernel,
    model: &dyn ParamModel,
    thetas: &[Vec<f64>],
    vs: &[Vec<f64>],
) -> Result<SufficiencyReport> {
    if thetas.len() != vs.len() {
        return Err(Error::usage("need one direction per parameter sample"));
    }
    let mut max_abs_gap = 0.0f64;
    for (th, v) in thetas.iter().zip(vs) {
        max_abs_gap = max_abs_gap.max(monotonicity_gap(t, model, th, v)?.abs());
    }
    Ok(SufficiencyReport {
        max_abs_gap,
        suff_tol: tol::SUFF_TOL,
        samples: thetas.len(),
        sufficient_consistent: max_abs_gap <= tol::SUFF_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSample {
    pub draw: usize,
    pub target_atoms: usize,
    pub theta: Vec<f64>,
    pub direction: Vec<f64>,
    pub metric_before: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DpiSweep {
    pub model: String,
    pub seed: u64,
    pub draws: Vec<GapSample>,
    pub min_gap: f64,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub mono_tol: f64,
    pub violations: usize,
}

/// Random (kernel, θ, v) draws on a finite model. Draw i uses its own
/// ChaCha8 stream of the master seed; kernels map onto 1..=m atoms.
pub fn dpi_sweep(model: &dyn ParamModel, draws: usize, seed: u64) -> Result<DpiSweep> {
    if !model.space().is_finite() {
        return Err(Error::usage("the sweep needs a finite-backend model"));
    }
    let m = model.space().len();
    let mut out = Vec::with_capacity(draws);
    for i in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let k = rng.gen_range(1..=m);
        let kernel = MarkovKernel::random(model.space().clone(), k, &mut rng)?;
        let theta = model.domain().sample(&mut rng, 0.05);
        let direction: Vec<f64> = (0..model.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tv = tangent_at(model, &theta, &direction)?;
        let metric_before = fisher_inner(&tv, &tv)?;
        let gap = monotonicity_gap(&kernel, model, &theta, &direction)?;
        out.push(GapSample {
            draw: i,
            target_atoms: k,
            theta,
            direction,
            metric_before,
            gap,
        });
    }
    let gaps = out.iter().map(|g| g.gap);
    let min_gap = gaps.clone().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.clone().fold(f64::NEG_INFINITY, f64::max);
    let mean_gap = gaps.clone().sum::<f64>() / draws.max(1) as f64;
    let violations = gaps.filter(|g| *g < -tol::MONO_TOL).count();
    Ok(DpiSweep {
        model: model.id(),
        seed,
        draws: out,
        min_gap,
        max_gap,
        mean_gap,
        mono_tol: tol::MONO_TOL,
        violations,
    })
}

/// The image family θ ↦ T_*p(θ) on the kernel's target.
#[derive(Debug, Clone)]
pub struct PushforwardModel {
    base: Arc<dyn ParamModel>,
    kernel: MarkovKernel,
}

impl PushforwardModel {
    pub fn new(base: Arc<dyn ParamModel>, kernel: MarkovKernel) -> Result<Self> {
        if **base.space() != *kernel.source {
            return Err(Error::usage(
                "kernel source differs from the model's sample space",
            ));
        }
        Ok(PushforwardModel { base, kernel })
    }

    pub fn kernel(&self) -> &MarkovKernel {
        &self.kernel
    }
}

impl ParamModel for PushforwardModel {
    fn id(&self) -> String {
        format!("pushforward({})", self.base.id())
    }

    fn domain(&self) -> &ParamDomain {
        self.base.domain()
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.kernel.target
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        self.kernel
            .push_density(&self.base.density_unchecked(theta))
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        self.base
            .jacobian_unchecked(theta)
            .iter()
            .map(|row| self.kernel.push_density(row))
            .collect()
    }

    fn analytic_jacobian(&self) -> bool {
        self.base.analytic_jacobian()
    }

    fn signed(&self) -> bool {
        self.base.signed()
    }
}

/// Pushed-forward directional derivative T_*(∂_v p) at θ.
pub fn pushed_direction(
    t: &MarkovKernel,
    model: &dyn ParamModel,
    theta: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    Ok(t.push_density(&directional(&model.jacobian(theta)?, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::fisher_matrix;
    use crate::models::{from_id, Bernoulli, BernoulliPair, Categorical};
    use crate::quadrature::QuadRule;
    use proptest::prelude::*;
    use rand::Rng;

    fn finite(m: usize) -> Arc<SampleSpace> {
        Arc::new(SampleSpace::finite(m).unwrap())
    }

    #[test]
    fn binning_four_uniform_atoms() {
        let s = finite(4);
        let t = MarkovKernel::from_assignment(s.clone(), &[0, 0, 1, 1], 2).unwrap();
        let mu = Measure::probability(s, vec![0.25; 4]).unwrap();
        assert_eq!(pushforward_measure(&t, &mu).unwrap().density(), &[0.5, 0.5]);
    }

    #[test]
    fn identity_leaves_measures_and_tangents_alone() {
        let m = Categorical::new(4).unwrap();
        let t = MarkovKernel::identity(m.space().clone()).unwrap();
        let th = [0.1, 0.2, 0.3];
        let mu = m.measure(&th).unwrap();
        assert_eq!(pushforward_measure(&t, &mu).unwrap(), mu);
        let v = tangent_at(&m, &th, &[1.0, -0.5, 0.2]).unwrap();
        let pv = pushforward_tangent(&t, &v).unwrap();
        for (a, b) in pv.log_rep().iter().zip(v.log_rep()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(
            monotonicity_gap(&t, &m, &th, &[1.0, -0.5, 0.2])
                .unwrap()
                .abs()
                < 1e-10
        );
    }

    #[test]
    fn collapse_kills_the_tangent() {
        let m = Bernoulli::new();
        let t = MarkovKernel::collapse(m.space().clone()).unwrap();
        let v = tangent_at(&m, &[0.3], &[1.0]).unwrap();
        let pv = pushforward_tangent(&t, &v).unwrap();
        assert!(pv.log_rep()[0].abs() < 1e-15);
        let r = sufficiency_check(&t, &m, &[vec![0.3]], &[vec![1.0]]).unwrap();
        assert!(!r.sufficient_consistent);
        let r = sufficiency_check(&t, &m, &[vec![0.3]], &[vec![0.0]]).unwrap();
        assert!(r.sufficient_consistent);
    }

    #[test]
    fn permutations_preserve_the_metric() {
        let m = Categorical::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let t = MarkovKernel::random_permutation(m.space().clone(), &mut rng).unwrap();
            let th = m.domain().sample(&mut rng, 0.05);
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(monotonicity_gap(&t, &m, &th, &v).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn random_kernels_contract_the_metric() {
        let m = from_id("categorical:4").unwrap();
        let s = dpi_sweep(m.as_ref(), 200, 5).unwrap();
        assert_eq!(s.violations, 0, "min gap {}", s.min_gap);
        assert!(s.max_gap > 0.0);
        let again = dpi_sweep(m.as_ref(), 200, 5).unwrap();
        assert_eq!(s.min_gap, again.min_gap);
    }

    #[test]
    fn merging_discordant_pair_outcomes_loses_information() {
        // Atoms 01 and 10 merged: the direction (1, −1) moves mass between them.
        let m = BernoulliPair::new();
        let t = MarkovKernel::from_assignment(m.space().clone(), &[0, 1, 1, 2], 3).unwrap();
        let r = sufficiency_check(&t, &m, &[vec![0.3, 0.6]], &[vec![1.0, -1.0]]).unwrap();
        assert!(r.max_abs_gap > 10.0 * tol::SUFF_TOL, "{r:?}");
        assert!(!r.sufficient_consistent);
        // At θ1 = θ2 the merged atoms move in proportion along (1, 1).
        let g = monotonicity_gap(&t, &m, &[0.4, 0.4], &[1.0, 1.0]).unwrap();
        assert!(g.abs() < 1e-12, "{g}");
    }

    #[test]
    fn pushforward_model_metric_matches_pushed_tangents() {
        let base = from_id("categorical:4").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = MarkovKernel::random(base.space().clone(), 3, &mut rng).unwrap();
        let pm = PushforwardModel::new(base.clone(), t.clone()).unwrap();
        let th = [0.2, 0.3, 0.1];
        let g = fisher_matrix(&pm, &th).unwrap();
        let v = [0.4, -1.0, 0.3];
        let pv = pushforward_tangent(&t, &tangent_at(base.as_ref(), &th, &v).unwrap()).unwrap();
        let want = fisher_inner(&pv, &pv).unwrap();
        assert!((g.quad(&v) - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn grid_binning_of_a_gaussian() {
        let m = from_id("gauss-loc").unwrap();
        let t = MarkovKernel::interval_binning(m.space().clone(), &[-1.0, 0.0, 1.0]).unwrap();
        let mu = pushforward_measure(&t, &m.measure(&[0.0]).unwrap()).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < tol::MASS_TOL);
        // Φ(−1) and Φ(0) − Φ(−1) for the standard normal.
        assert!((mu.density()[0] - 0.158_655_253_931_457_05).abs() < 1e-9);
        assert!((mu.density()[1] - 0.341_344_746_068_542_9).abs() < 1e-9);
        let gap = monotonicity_gap(&t, m.as_ref(), &[0.3], &[1.0]).unwrap();
        assert!(gap > 0.0);
    }

    #[test]
    fn kernel_json_and_validation() {
        let s = finite(2);
        let t =
            MarkovKernel::from_json(r#"{"rows": [[0.5, 0.5], [0.0, 1.0]]}"#, s.clone()).unwrap();
        assert_eq!(
            MarkovKernel::from_json(&t.to_json().unwrap(), s.clone()).unwrap(),
            t
        );
        assert!(
            MarkovKernel::from_json(r#"{"rows": [[0.5, 0.6], [0.0, 1.0]]}"#, s.clone()).is_err()
        );
        assert!(MarkovKernel::from_json(r#"{"rows": [[1.0]]}"#, s.clone()).is_err());
        assert!(
            MarkovKernel::from_json(r#"{"rows": [[1.0], [1.0]], "extra": 1}"#, s.clone()).is_err()
        );
        let g = Arc::new(SampleSpace::grid1d(0.0, 1.0, 8, QuadRule::Trapezoid).unwrap());
        let mu = Measure::probability(g, vec![1.0; 8]).unwrap();
        assert!(pushforward_measure(&t, &mu).is_err());
    }

    fn kernel_strategy(n: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, k), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|x| x / s).collect()
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn linear_contractive_and_composable(
            rows in kernel_strategy(5, 3),
            rows2 in kernel_strategy(3, 2),
            a in prop::collection::vec(-1.0f64..1.0, 5),
            b in prop::collection::vec(0.0f64..1.0, 5),
            (x, y) in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let s = finite(5);
            let t = MarkovKernel::new(s.clone(), rows).unwrap();
            let u = MarkovKernel::new(t.target().clone(), rows2).unwrap();
            let mu = Measure::signed(s.clone(), a).unwrap();
            let nu = Measure::signed(s.clone(), b).unwrap();
            let lhs = pushforward_measure(&t, &mu.combine(x, &nu, y).unwrap()).unwrap();
            let rhs = pushforward_measure(&t, &mu).unwrap().combine(x, &pushforward_measure(&t, &nu).unwrap(), y).unwrap();
            for (p, q) in lhs.density().iter().zip(rhs.density()) {
                prop_assert!((p - q).abs() <= 1e-14 * (1.0 + p.abs()));
            }
            prop_assert!(lhs.tv_norm() <= mu.combine(x, &nu, y).unwrap().tv_norm() + tol::MASS_TOL);
            let two = pushforward_measure(&u, &pushforward_measure(&t, &mu).unwrap()).unwrap();
            let once = pushforward_measure(&t.then(&u).unwrap(), &mu).unwrap();
            for (p, q) in two.density().iter().zip(once.density()) {
                prop_assert!((p - q).abs() <= 1e-14 * (1.0 + p.abs()));
            }
        }
    }
}
