//! The acceptance suite: eleven numerical checks of the library's
//! structural guarantees, each reported as pass/fail with its measurements.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::distance::{fisher_distance, metric_axiom_check, tv_bound_check, DistanceOptions};
use crate::error::{Error, Result};
use crate::estimation::{cramer_rao_gap, Estimator, Experiment, PhiMap, Sampling};
use crate::fisher::{fisher_matrix, two_integrability_probe};
use crate::hausdorff::{
    hausdorff_dimension_estimate, hausdorff_monotonicity_check, jeffrey_density,
    jeffrey_vs_hausdorff_check, JeffreyCheckOptions, MetricCloud, Region, Schedule,
};
use crate::markov::{dpi_sweep, monotonicity_gap, MarkovKernel};
use crate::models::{from_id, CurveInModel, FriedrichCurve, ParamModel};
use crate::tol;
use crate::weak::{weak_demo, DEFAULT_EXCHANGE_TS, DEFAULT_TV_TS};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub module: &'static str,
    pub passed: bool,
    pub detail: String,
    pub metrics: Value,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

type Check = fn(u64) -> Result<(bool, String, Value)>;

/// (id, name, module, check).
pub const CRITERIA: [(usize, &str, &str, Check); 11] = [
    (1, "fisher oracle agreement", "fisher", fisher_oracles),
    (2, "singularity reproduction", "fisher", singularity),
    (3, "tv lower bound", "distance", tv_lower_bound),
    (4, "extended-metric axioms", "distance", metric_axioms),
    (5, "sphere-geodesic oracle", "distance", sphere_oracle),
    (6, "data-processing inequality", "markov", data_processing),
    (
        7,
        "hausdorff-jeffrey consistency",
        "hausdorff",
        hausdorff_jeffrey,
    ),
    (
        8,
        "hausdorff monotonicity",
        "hausdorff",
        hausdorff_monotonicity,
    ),
    (9, "cramer-rao", "estimation", cramer_rao),
    (10, "2-integrability failure", "fisher", two_integrability),
    (11, "weak-vs-strong demo", "weak", weak_vs_strong),
];

/// Whether criterion (`id`, `module`) is selected by `only`: a module name
/// or a criterion number.
pub fn selected(only: Option<&str>, id: usize, module: &str) -> bool {
    match only {
        None => true,
        Some(s) => s
            .split(',')
            .map(str::trim)
            .any(|t| t == module || t.parse::<usize>() == Ok(id)),
    }
}

/// Runs one criterion; an error counts as a failure with the error as detail.
pub fn run_criterion(id: usize, seed: u64) -> Result<CriterionResult> {
    let (id, name, module, check) = *CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::usage(format!("no criterion {id}")))?;
    let start = Instant::now();
    let (passed, detail, metrics) = match check(seed.wrapping_add(id as u64)) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), Value::Null),
    };
    Ok(CriterionResult {
        id,
        name,
        module,
        passed,
        detail,
        metrics,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn verify_all(seed: u64, only: Option<&str>) -> Result<VerifyReport> {
    let mut criteria = Vec::new();
    for (id, _, module, _) in CRITERIA {
        if selected(only, id, module) {
            criteria.push(run_criterion(id, seed)?);
        }
    }
    if criteria.is_empty() {
        return Err(Error::usage(format!(
            "`{}` selects no criterion",
            only.unwrap_or("")
        )));
    }
    Ok(VerifyReport { seed, criteria })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn fisher_oracles(_seed: u64) -> Result<(bool, String, Value)> {
    let mut worst = 0.0f64;
    let bern = from_id("bernoulli")?;
    for k in 1..=9 {
        let p = k as f64 / 10.0;
        worst = worst.max(rel(
            fisher_matrix(bern.as_ref(), &[p])?.matrix[0][0],
            1.0 / (p * (1.0 - p)),
        ));
    }
    let loc = from_id("gauss-loc")?;
    for th in [-2.0, -0.5, 0.0, 1.3, 2.5] {
        worst = worst.max(rel(fisher_matrix(loc.as_ref(), &[th])?.matrix[0][0], 1.0));
    }
    let cat = from_id("categorical:3")?;
    for th in [[0.2, 0.3], [0.6, 0.1], [1.0 / 3.0, 1.0 / 3.0], [0.05, 0.9]] {
        let g = fisher_matrix(cat.as_ref(), &th)?;
        let pm = 1.0 - th[0] - th[1];
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 / th[i] } else { 0.0 } + 1.0 / pm;
                worst = worst.max(rel(g.matrix[i][j], want));
            }
        }
    }
    Ok((
        worst <= 1e-6,
        format!("max relative error {worst:.3e} (limit 1e-6)"),
        json!({ "max_rel_err": worst }),
    ))
}

fn singularity(_seed: u64) -> Result<(bool, String, Value)> {
    let mix = from_id("mixture")?;
    let frob = fisher_matrix(mix.as_ref(), &[0.0, 0.0])?.frobenius();
    let mut worst = 0.0f64;
    for i in 0..=10 {
        let a = i as f64 / 10.0;
        worst = worst.max(jeffrey_density(mix.as_ref(), &[a, 0.0])?);
        let b = -6.0 + 1.2 * i as f64;
        worst = worst.max(jeffrey_density(mix.as_ref(), &[0.0, b])?);
    }
    let ok = frob <= 10.0 * tol::QUAD_TOL && worst <= 1e-6;
    Ok((
        ok,
        format!("|G(0,0)|_F = {frob:.3e} (limit {:.0e}); max Jeffrey density on W0 = {worst:.3e} (limit 1e-6)", 10.0 * tol::QUAD_TOL),
        json!({ "frobenius_at_origin": frob, "max_jeffrey_on_singular_lines": worst }),
    ))
}

fn tv_models() -> Vec<&'static str> {
    vec![
        "bernoulli",
        "categorical:3",
        "bernoulli-pair",
        "gauss-loc",
        "gauss-loc2",
        "mixture",
        "gauss-loc-scale",
    ]
}

fn tv_lower_bound(seed: u64) -> Result<(bool, String, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<Arc<dyn ParamModel>> = tv_models()
        .into_iter()
        .map(from_id)
        .collect::<Result<_>>()?;
    let opts = DistanceOptions::default();
    let mut failures = 0;
    let mut min_slack = f64::INFINITY;
    for i in 0..100 {
        let m = &models[i % models.len()];
        let a = m.domain().sample(&mut rng, 0.02);
        let b = m.domain().sample(&mut rng, 0.02);
        let r = tv_bound_check(m.as_ref(), &a, &b, &opts)?;
        min_slack = min_slack.min(r.distance_estimate - r.tv);
        if !r.holds {
            failures += 1;
        }
    }
    Ok((
        failures == 0,
        format!("{failures} failures over 100 pairs; min(distance − tv) = {min_slack:.4}"),
        json!({ "failures": failures, "min_slack": min_slack }),
    ))
}

fn axiom_models() -> Vec<&'static str> {
    vec![
        "bernoulli",
        "categorical:3",
        "bernoulli-pair",
        "gauss-loc",
        "mixture",
    ]
}

fn metric_axioms(seed: u64) -> Result<(bool, String, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = DistanceOptions::default();
    let mut per_model = Vec::new();
    let mut ok = true;
    for id in axiom_models() {
        let m = from_id(id)?;
        let mut failed = 0;
        let (mut sym, mut tri) = (0.0f64, f64::NEG_INFINITY);
        for _ in 0..50 {
            let pts: Vec<Vec<f64>> = (0..3).map(|_| m.domain().sample(&mut rng, 0.02)).collect();
            let r = metric_axiom_check(m.as_ref(), &pts, &opts)?;
            sym = sym.max(r.max_symmetry_gap / r.axiom_tol.max(f64::MIN_POSITIVE));
            tri = tri.max(r.max_triangle_excess / r.axiom_tol.max(f64::MIN_POSITIVE));
            if !r.passed() {
                failed += 1;
            }
        }
        ok &= failed == 0;
        per_model.push(json!({ "model": id, "failed_triples": failed, "max_symmetry_over_tol": sym, "max_triangle_over_tol": tri }));
    }
    let detail = per_model
        .iter()
        .map(|v| {
            format!(
                "{} {}/50 failed",
                v["model"].as_str().unwrap_or(""),
                v["failed_triples"]
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok((ok, detail, Value::Array(per_model)))
}

fn sphere_oracle(seed: u64) -> Result<(bool, String, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = from_id("categorical:3")?;
    let opts = DistanceOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = m.domain().sample(&mut rng, 0.05);
        let q = m.domain().sample(&mut rng, 0.05);
        let d = fisher_distance(m.as_ref(), &p, &q, &opts)?.length;
        let bc = (p[0] * q[0]).sqrt()
            + (p[1] * q[1]).sqrt()
            + ((1.0 - p[0] - p[1]) * (1.0 - q[0] - q[1])).sqrt();
        let want = 2.0 * bc.min(1.0).acos();
        worst = worst.max(rel(d, want));
    }
    Ok((
        worst <= 0.01,
        format!("max relative error {worst:.3e} over 20 pairs (limit 1e-2)"),
        json!({ "max_rel_err": worst }),
    ))
}

fn data_processing(seed: u64) -> Result<(bool, String, Value)> {
    let m = from_id("categorical:4")?;
    let sweep = dpi_sweep(m.as_ref(), 1000, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut perm_worst = 0.0f64;
    for _ in 0..100 {
        let t = MarkovKernel::random_permutation(m.space().clone(), &mut rng)?;
        let th = m.domain().sample(&mut rng, 0.05);
        let v: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        perm_worst = perm_worst.max(monotonicity_gap(&t, m.as_ref(), &th, &v)?.abs());
    }
    let ok = sweep.min_gap >= -tol::MONO_TOL && perm_worst <= 1e-10;
    Ok((
        ok,
        format!("min gap {:.3e} over 1000 draws (limit −1e-9); max |gap| {perm_worst:.3e} over 100 permutations (limit 1e-10)", sweep.min_gap),
        json!({ "min_gap": sweep.min_gap, "mean_gap": sweep.mean_gap, "violations": sweep.violations, "max_permutation_gap": perm_worst }),
    ))
}

fn hausdorff_jeffrey(_seed: u64) -> Result<(bool, String, Value)> {
    let opts = JeffreyCheckOptions::for_dim(1);
    let bern = from_id("bernoulli")?;
    let b =
        jeffrey_vs_hausdorff_check(bern.as_ref(), &Region::new(vec![0.25], vec![0.75])?, &opts)?;
    let loc = from_id("gauss-loc")?;
    let g = jeffrey_vs_hausdorff_check(loc.as_ref(), &Region::new(vec![-1.0], vec![1.0])?, &opts)?;
    let chain = MetricCloud::chain(bern.as_ref(), 0.25, 0.75, opts.points_per_axis)?;
    let d1 = hausdorff_dimension_estimate(&chain, &Schedule::default())?.dimension;
    let loc2 = from_id("gauss-loc2")?;
    let plane = MetricCloud::lattice(
        loc2.as_ref(),
        &Region::new(vec![-2.0, -2.0], vec![2.0, 2.0])?,
        257,
    )?;
    let d2 = hausdorff_dimension_estimate(&plane, &Schedule::default())?.dimension;
    let ok = b.rel_err <= 0.05
        && g.rel_err <= 0.05
        && (d1 - 1.0).abs() <= 0.15
        && (d2 - 2.0).abs() <= 0.2;
    Ok((
        ok,
        format!(
            "rel err bernoulli {:.3e}, gauss-loc {:.3e} (limit 5e-2); dimension 1-D {d1:.3} (1 ± 0.15), 2-D {d2:.3} (2 ± 0.2)",
            b.rel_err, g.rel_err
        ),
        json!({
            "bernoulli": { "jeffrey": b.jeffrey, "hausdorff": b.hausdorff, "rel_err": b.rel_err },
            "gauss_loc": { "jeffrey": g.jeffrey, "hausdorff": g.hausdorff, "rel_err": g.rel_err },
            "dimension_1d": d1,
            "dimension_2d": d2,
        }),
    ))
}

fn hausdorff_monotonicity(seed: u64) -> Result<(bool, String, Value)> {
    let base = from_id("categorical:3")?;
    let region = Region::new(vec![0.1, 0.1], vec![0.8, 0.8])?;
    let schedule = Schedule {
        levels: 3,
        delta0: None,
    };
    let per_axis = 81;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let k = rng.gen_range(2..=3);
        let t = MarkovKernel::random(base.space().clone(), k, &mut rng)?;
        let r = hausdorff_monotonicity_check(&t, base.clone(), &region, per_axis, 2.0, &schedule)?;
        worst_ratio = worst_ratio.max(r.after / r.before);
        if !r.holds {
            failures += 1;
        }
    }
    let mut perm_dev = 0.0f64;
    for perm in [[1, 2, 0], [2, 0, 1], [0, 2, 1]] {
        let t = MarkovKernel::permutation(base.space().clone(), &perm)?;
        let r = hausdorff_monotonicity_check(&t, base.clone(), &region, per_axis, 2.0, &schedule)?;
        perm_dev = perm_dev.max(rel(r.after, r.before));
    }
    let ok = failures == 0 && perm_dev <= 1e-6;
    Ok((
        ok,
        format!("{failures}/20 lossy kernels exceed before + 10% (max after/before {worst_ratio:.3}); permutation deviation {perm_dev:.3e}"),
        json!({ "failures": failures, "max_after_over_before": worst_ratio, "permutation_rel_dev": perm_dev }),
    ))
}

fn cramer_rao(_seed: u64) -> Result<(bool, String, Value)> {
    let estimators = ["mean", "shrinkage:0.9,0.05", "constant:0.3"];
    let cases: [(&str, Vec<Vec<f64>>); 2] = [
        ("bernoulli", vec![vec![0.1], vec![0.5], vec![0.77]]),
        ("categorical:3", vec![vec![0.2, 0.5], vec![0.6, 0.3]]),
    ];
    let mut min_eig = f64::INFINITY;
    let mut eff = 0.0f64;
    let mut resid = 0.0f64;
    let mut runs = 0;
    for (id, thetas) in &cases {
        let model = from_id(id)?;
        for n in [1, 5, 10] {
            let exp = Experiment::new(model.clone(), n, Sampling::Exact)?;
            for th in thetas {
                for e in estimators {
                    let est = if e == "constant:0.3" && model.dim() == 2 {
                        Estimator::parse("constant:0.3,0.3")?
                    } else {
                        Estimator::parse(e)?
                    };
                    let r = cramer_rao_gap(&exp, th, &PhiMap::Identity, &est)?;
                    runs += 1;
                    min_eig = min_eig.min(r.min_eigenvalue);
                    resid = resid.max(r.decomposition_residual);
                    if est == Estimator::Mean {
                        eff = eff.max(r.gap.to_dmatrix().amax());
                    }
                }
            }
        }
    }
    let ok = min_eig >= -tol::CR_TOL && eff <= 1e-8 && resid <= 1e-9;
    Ok((
        ok,
        format!("{runs} configurations: min gap eigenvalue {min_eig:.3e} (≥ −1e-7); efficiency |gap| {eff:.3e} (≤ 1e-8); decomposition residual {resid:.3e} (≤ 1e-9)"),
        json!({ "configurations": runs, "min_gap_eigenvalue": min_eig, "max_efficiency_gap": eff, "max_decomposition_residual": resid }),
    ))
}

fn two_integrability(_seed: u64) -> Result<(bool, String, Value)> {
    let m = FriedrichCurve::new();
    let c = CurveInModel::with_knots(vec![vec![-0.5], vec![0.5]], vec![-0.5, 0.5])?;
    let mut grid = vec![0.0];
    for k in 0..12 {
        let t = 1e-3 * 1.7f64.powi(k);
        grid.push(t);
        grid.push(-t);
    }
    let r = two_integrability_probe(&m, &c, &grid, tol::JUMP_TOL)?;
    let at_zero = r.discontinuities.len() == 1 && r.discontinuities[0].t == 0.0;
    let limit = r
        .discontinuities
        .first()
        .map_or(0.0, |d| d.left_limit.min(d.right_limit));
    let tv = r
        .points
        .iter()
        .filter(|p| p.t.abs() == 1e-3)
        .map(|p| p.velocity_tv)
        .fold(0.0, f64::max);
    let ok = at_zero && limit >= 0.1 && tv <= 0.05;
    let ts: Vec<f64> = r.discontinuities.iter().map(|d| d.t).collect();
    Ok((
        ok,
        format!("discontinuities at {ts:?}; limit speed {limit:.4} (≥ 0.1); ‖ṗ‖_TV at ±1e-3 = {tv:.3e} (≤ 0.05)"),
        json!({ "discontinuities": ts, "limit_speed": limit, "velocity_tv_at_1e-3": tv }),
    ))
}

fn weak_vs_strong(_seed: u64) -> Result<(bool, String, Value)> {
    let d = weak_demo(&DEFAULT_EXCHANGE_TS, &DEFAULT_TV_TS)?;
    let cos = d
        .exchange
        .iter()
        .filter(|r| r.test_function == "cos")
        .map(|r| r.abs_diff)
        .fold(0.0, f64::max);
    let min_tv = d.tv.iter().map(|r| r.tv).fold(f64::INFINITY, f64::min);
    let ok = cos <= 1e-4 && min_tv >= 0.5;
    Ok((
        ok,
        format!(
            "max exchange error (cos) {cos:.3e} (≤ 1e-4); min ‖μ'_t − μ'_0‖_TV {min_tv:.4} (≥ 0.5)"
        ),
        json!({ "max_exchange_error_cos": cos, "min_tv": min_tv, "exchange": d.exchange, "tv": d.tv }),
    ))
}
