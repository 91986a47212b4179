use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sigeo_core::distance::{
    curve_profile, fisher_distance, metric_axiom_check, tv_bound_check, DistanceOptions,
};
use sigeo_core::estimation::{cramer_rao_gap, Estimator, Experiment, PhiMap, Sampling};
use sigeo_core::fisher::fisher_matrix;
use sigeo_core::hausdorff::{
    hausdorff_dimension_estimate, hausdorff_measure_estimate, jeffrey_density, jeffrey_measure,
    jeffrey_vs_hausdorff_check, JeffreyCheckOptions, MetricCloud, Region, Schedule,
};
use sigeo_core::markov::{self, monotonicity_gap, sufficiency_check, MarkovKernel};
use sigeo_core::models::{from_id, tangent_at, ParamModel};
use sigeo_core::{tol, verify, weak, CurveInModel};

use crate::output::{indexed, Summary, Table};
use crate::{Common, HasCommon};

pub type Outcome = (Summary, Common);

macro_rules! has_common {
    ($($t:ty),*) => {$(
        impl HasCommon for $t {
            fn common(&self) -> &Common {
                &self.common
            }
        }
    )*};
}

has_common!(
    FisherArgs,
    DistanceArgs,
    TvArgs,
    AxiomArgs,
    PushforwardArgs,
    DpiArgs,
    SufficiencyArgs,
    HausdorffArgs,
    JeffreyArgs,
    CramerRaoArgs,
    WeakArgs,
    VerifyArgs
);

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| anyhow!("missing --{name} (flag or config key)"))
}

fn floats(name: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("--{name}: `{}` is not a number", t.trim()))
        })
        .collect()
}

fn indices(name: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("--{name}: `{}` is not an index", t.trim()))
        })
        .collect()
}

/// `a,b;c,d;…`
fn points(name: &str, s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|r| floats(name, r))
        .collect()
}

/// `lo:hi,lo:hi,…`
fn region(s: &str) -> Result<Region> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("--region: `{part}` is not lo:hi"))?;
        lo.push(
            a.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("--region: `{a}` is not a number"))?,
        );
        hi.push(
            b.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("--region: `{b}` is not a number"))?,
        );
    }
    Ok(Region::new(lo, hi)?)
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => bail!("--{name} must be positive, got {x}"),
        _ => Ok(()),
    }
}

fn model(id: &Option<String>) -> Result<Arc<dyn ParamModel>> {
    Ok(from_id(&required(id, "model")?)?)
}

fn summary<T: Serialize>(
    command: &'static str,
    args: &T,
    seed: Option<u64>,
    passed: Option<bool>,
    result: Value,
) -> Result<Summary> {
    Ok(Summary {
        command,
        seed,
        config: serde_json::to_value(args)?,
        passed,
        result,
    })
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct FisherArgs {
    /// Model id, e.g. bernoulli, categorical:3, mixture.
    #[arg(long)]
    model: Option<String>,
    /// Parameter, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn fisher_matrix_cmd(a: FisherArgs) -> Result<Outcome> {
    let m = model(&a.model)?;
    let theta = floats("theta", &required(&a.theta, "theta")?)?;
    let g = fisher_matrix(m.as_ref(), &theta)?;
    let jd = jeffrey_density(m.as_ref(), &theta)?;
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["i", "j", "g"]);
        for (i, row) in g.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t.row([i.to_string(), j.to_string(), v.to_string()]);
            }
        }
        t.write(path)?;
    }
    let mut result = serde_json::to_value(&g)?;
    result["jeffrey_density"] = json!(jd);
    Ok((summary("fisher-matrix", &a, None, None, result)?, a.common))
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct PathOpts {
    /// Interior nodes of the piecewise-linear path.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative improvement stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Gauss-Legendre points per segment.
    #[arg(long)]
    quad_points: Option<usize>,
    /// Points per axis of the coarse starting lattice (0 disables).
    #[arg(long)]
    lattice_init: Option<usize>,
}

impl PathOpts {
    fn options(&self) -> Result<DistanceOptions> {
        positive("tol", self.tol)?;
        let d = DistanceOptions::default();
        Ok(DistanceOptions {
            interior_nodes: self.nodes.unwrap_or(d.interior_nodes),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            quad_points: self.quad_points.unwrap_or(d.quad_points),
            lattice_init: self.lattice_init.unwrap_or(d.lattice_init),
        })
    }
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct DistanceArgs {
    #[arg(long)]
    model: Option<String>,
    /// Start parameter, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    /// End parameter, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    /// Write t, θ(t) and speed along the optimized path.
    #[arg(long, value_name = "FILE")]
    emit_curve: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    path: PathOpts,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn distance(a: DistanceArgs) -> Result<Outcome> {
    let m = model(&a.model)?;
    let from = floats("from", &required(&a.from, "from")?)?;
    let to = floats("to", &required(&a.to, "to")?)?;
    let r = fisher_distance(m.as_ref(), &from, &to, &a.path.options()?)?;
    if let Some(path) = &a.common.emit {
        let mut header = vec!["node".to_string()];
        header.extend(indexed("theta", m.dim()));
        let mut t = Table::new(header);
        for (i, node) in r.nodes.iter().enumerate() {
            t.row(std::iter::once(i.to_string()).chain(node.iter().map(f64::to_string)));
        }
        t.write(path)?;
    }
    if let Some(path) = &a.emit_curve {
        let curve = CurveInModel::new(r.nodes.clone())?;
        let mut header = vec!["t".to_string()];
        header.extend(indexed("theta", m.dim()));
        header.push("speed".into());
        let mut t = Table::new(header);
        for (s, theta, speed) in curve_profile(m.as_ref(), &curve, 201)? {
            t.row(
                std::iter::once(s)
                    .chain(theta)
                    .chain(std::iter::once(speed)),
            );
        }
        t.write(path)?;
    }
    Ok((
        summary("distance", &a, None, None, serde_json::to_value(&r)?)?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct TvArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    path: PathOpts,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn tv_check(a: TvArgs) -> Result<Outcome> {
    let m = model(&a.model)?;
    let from = floats("from", &required(&a.from, "from")?)?;
    let to = floats("to", &required(&a.to, "to")?)?;
    let r = tv_bound_check(m.as_ref(), &from, &to, &a.path.options()?)?;
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["distance_estimate", "tv", "holds"]);
        t.row([
            r.distance_estimate.to_string(),
            r.tv.to_string(),
            r.holds.to_string(),
        ]);
        t.write(path)?;
    }
    Ok((
        summary(
            "tv-check",
            &a,
            None,
            Some(r.holds),
            serde_json::to_value(&r)?,
        )?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct AxiomArgs {
    #[arg(long)]
    model: Option<String>,
    /// Explicit points `a,b;c,d;…` (at least three), checked as one set.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    /// Number of random triples drawn from the domain when no points are given.
    #[arg(long)]
    triples: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    path: PathOpts,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn metric_axioms(a: AxiomArgs) -> Result<Outcome> {
    let m = model(&a.model)?;
    let opts = a.path.options()?;
    let seed = a.common.seed()?;
    let sets: Vec<Vec<Vec<f64>>> = match &a.points {
        Some(p) => vec![points("points", p)?],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..a.triples.unwrap_or(10))
                .map(|_| (0..3).map(|_| m.domain().sample(&mut rng, 0.02)).collect())
                .collect()
        }
    };
    let reports = sets
        .iter()
        .map(|s| metric_axiom_check(m.as_ref(), s, &opts))
        .collect::<sigeo_core::Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed());
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["set", "i", "j", "distance"]);
        for (s, r) in reports.iter().enumerate() {
            for (i, row) in r.distances.iter().enumerate() {
                for (j, d) in row.iter().enumerate() {
                    t.row([s.to_string(), i.to_string(), j.to_string(), d.to_string()]);
                }
            }
        }
        t.write(path)?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let result = json!({ "sets": reports.len(), "failed": failed, "reports": reports });
    Ok((
        summary("metric-axioms", &a, Some(seed), Some(passed), result)?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case")]
pub struct KernelOpts {
    /// Kernel file: {"rows": [[…], …]}, one row per source atom.
    #[arg(long, value_name = "FILE")]
    kernel: Option<PathBuf>,
    /// Deterministic kernel: target atom of each source atom, comma-separated.
    #[arg(long)]
    assign: Option<String>,
    /// Permutation of the source atoms, comma-separated.
    #[arg(long)]
    permutation: Option<String>,
    /// Interval bin edges for grid sample spaces, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    edges: Option<String>,
}

impl KernelOpts {
    fn build(&self, m: &dyn ParamModel) -> Result<MarkovKernel> {
        let src = m.space().clone();
        let given = [
            self.kernel.is_some(),
            self.assign.is_some(),
            self.permutation.is_some(),
            self.edges.is_some(),
        ];
        if given.iter().filter(|g| **g).count() != 1 {
            bail!("give exactly one of --kernel, --assign, --permutation, --edges");
        }
        Ok(if let Some(p) = &self.kernel {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read kernel {}", p.display()))?;
            MarkovKernel::from_json(&text, src)?
        } else if let Some(s) = &self.assign {
            let assign = indices("assign", s)?;
            let k = assign.iter().max().map_or(0, |x| x + 1);
            MarkovKernel::from_assignment(src, &assign, k)?
        } else if let Some(s) = &self.permutation {
            MarkovKernel::permutation(src, &indices("permutation", s)?)?
        } else {
            MarkovKernel::interval_binning(
                src,
                &floats("edges", self.edges.as_deref().unwrap_or_default())?,
            )?
        })
    }
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct PushforwardArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Tangent direction in parameter coordinates; adds the monotonicity gap.
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    /// Tolerance for a negative monotonicity gap.
    #[arg(long)]
    mono_tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn pushforward(a: PushforwardArgs) -> Result<Outcome> {
    positive("mono-tol", a.mono_tol)?;
    let m = model(&a.model)?;
    let theta = floats("theta", &required(&a.theta, "theta")?)?;
    let t = a.kernel.build(m.as_ref())?;
    let mu = m.measure(&theta)?;
    let pushed = markov::pushforward_measure(&t, &mu)?;
    let mut result = json!({
        "target_atoms": t.target().len(),
        "source_masses": mu.masses(),
        "pushed_masses": pushed.masses(),
        "pushed_total_mass": pushed.total_mass(),
    });
    let mut passed = None;
    if let Some(d) = &a.direction {
        let v = floats("direction", d)?;
        let tv = tangent_at(m.as_ref(), &theta, &v)?;
        let before = sigeo_core::fisher::fisher_inner(&tv, &tv)?;
        let gap = monotonicity_gap(&t, m.as_ref(), &theta, &v)?;
        let mono_tol = a.mono_tol.unwrap_or(tol::MONO_TOL);
        result["metric_before"] = json!(before);
        result["metric_after"] = json!(before - gap);
        result["gap"] = json!(gap);
        result["mono_tol"] = json!(mono_tol);
        passed = Some(gap >= -mono_tol);
    }
    if let Some(path) = &a.common.emit {
        let mut tab = Table::new(["atom", "mass"]);
        for (i, x) in pushed.masses().iter().enumerate() {
            tab.row([i.to_string(), x.to_string()]);
        }
        tab.write(path)?;
    }
    Ok((summary("pushforward", &a, None, passed, result)?, a.common))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct DpiArgs {
    /// Finite model id (default categorical:4).
    #[arg(long)]
    model: Option<String>,
    /// Number of random (kernel, θ, direction) draws (default 1000).
    #[arg(long)]
    draws: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn dpi_sweep(a: DpiArgs) -> Result<Outcome> {
    let id = a.model.clone().unwrap_or_else(|| "categorical:4".into());
    let m = from_id(&id)?;
    let seed = a.common.seed()?;
    let s = markov::dpi_sweep(m.as_ref(), a.draws.unwrap_or(1000), seed)?;
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["draw", "target_atoms", "metric_before", "gap"]);
        for g in &s.draws {
            t.row([
                g.draw.to_string(),
                g.target_atoms.to_string(),
                g.metric_before.to_string(),
                g.gap.to_string(),
            ]);
        }
        t.write(path)?;
    }
    let result = json!({
        "model": s.model,
        "draws": s.draws.len(),
        "min_gap": s.min_gap,
        "max_gap": s.max_gap,
        "mean_gap": s.mean_gap,
        "mono_tol": s.mono_tol,
        "violations": s.violations,
    });
    Ok((
        summary("dpi-sweep", &a, Some(seed), Some(s.violations == 0), result)?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct SufficiencyArgs {
    #[arg(long)]
    model: Option<String>,
    /// Parameter samples `a,b;c,d;…` (default: 5 random draws).
    #[arg(long, allow_hyphen_values = true)]
    thetas: Option<String>,
    /// One direction per sample (default: every coordinate direction at every sample).
    #[arg(long, allow_hyphen_values = true)]
    directions: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn sufficiency(a: SufficiencyArgs) -> Result<Outcome> {
    let m = model(&a.model)?;
    let seed = a.common.seed()?;
    let t = a.kernel.build(m.as_ref())?;
    let base = match &a.thetas {
        Some(s) => points("thetas", s)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| m.domain().sample(&mut rng, 0.05)).collect()
        }
    };
    let (thetas, vs) = match &a.directions {
        Some(s) => (base, points("directions", s)?),
        None => {
            let n = m.dim();
            let mut th = Vec::new();
            let mut vs = Vec::new();
            for p in &base {
                for i in 0..n {
                    th.push(p.clone());
                    vs.push((0..n).map(|j| f64::from(u8::from(i == j))).collect());
                }
            }
            (th, vs)
        }
    };
    let r = sufficiency_check(&t, m.as_ref(), &thetas, &vs)?;
    if let Some(path) = &a.common.emit {
        let mut tab = Table::new(["sample", "gap"]);
        for (i, (th, v)) in thetas.iter().zip(&vs).enumerate() {
            tab.row([
                i.to_string(),
                monotonicity_gap(&t, m.as_ref(), th, v)?.to_string(),
            ]);
        }
        tab.write(path)?;
    }
    Ok((
        summary(
            "sufficiency",
            &a,
            Some(seed),
            None,
            serde_json::to_value(&r)?,
        )?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct HausdorffArgs {
    #[arg(long)]
    model: Option<String>,
    /// Parameter box `lo:hi,lo:hi,…`.
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    /// Hausdorff exponent (default: model dimension).
    #[arg(long)]
    k: Option<f64>,
    /// Number of halving scales.
    #[arg(long)]
    schedule: Option<usize>,
    /// Largest scale (default: quarter of the cloud diameter).
    #[arg(long)]
    delta0: Option<f64>,
    /// Lattice points per axis of the parameter cloud.
    #[arg(long)]
    per_axis: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn hausdorff(a: HausdorffArgs) -> Result<Outcome> {
    positive("delta0", a.delta0)?;
    let m = model(&a.model)?;
    let reg = region(&required(&a.region, "region")?)?;
    let per_axis = a
        .per_axis
        .unwrap_or(JeffreyCheckOptions::for_dim(m.dim()).points_per_axis);
    let schedule = Schedule {
        levels: a.schedule.unwrap_or(Schedule::default().levels),
        delta0: a.delta0,
    };
    let k = a.k.unwrap_or(m.dim() as f64);
    let cloud = MetricCloud::lattice(m.as_ref(), &reg, per_axis)?;
    let cover = hausdorff_measure_estimate(&cloud, k, &schedule)?;
    let dimension = match hausdorff_dimension_estimate(&cloud, &schedule) {
        Ok(d) => serde_json::to_value(d)?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    if let Some(path) = &a.common.emit {
        let mut t = Table::new([
            "delta",
            "count",
            "envelope",
            "premeasure",
            "ball_premeasure",
        ]);
        for i in 0..cover.deltas.len() {
            t.row([
                cover.deltas[i].to_string(),
                cover.counts[i].to_string(),
                cover.envelope[i].to_string(),
                cover.premeasure[i].to_string(),
                cover.ball_premeasure[i].to_string(),
            ]);
        }
        t.write(path)?;
    }
    let result = json!({ "cloud_points": cloud.len(), "cover": cover, "dimension": dimension });
    Ok((summary("hausdorff", &a, None, None, result)?, a.common))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct JeffreyArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    /// Gauss-Legendre panels per axis.
    #[arg(long)]
    resolution: Option<usize>,
    /// Also estimate the Hausdorff measure and compare.
    #[arg(long)]
    check_hausdorff: bool,
    #[arg(long)]
    per_axis: Option<usize>,
    #[arg(long)]
    schedule: Option<usize>,
    /// Allowed relative error of the comparison.
    #[arg(long)]
    rel_tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn jeffrey(a: JeffreyArgs) -> Result<Outcome> {
    positive("rel-tol", a.rel_tol)?;
    let m = model(&a.model)?;
    let reg = region(&required(&a.region, "region")?)?;
    let mut opts = JeffreyCheckOptions::for_dim(m.dim());
    if let Some(r) = a.resolution {
        opts.resolution = r;
    }
    if let Some(p) = a.per_axis {
        opts.points_per_axis = p;
    }
    if let Some(l) = a.schedule {
        opts.schedule.levels = l;
    }
    let value = jeffrey_measure(m.as_ref(), &reg, opts.resolution)?;
    let mut result = json!({ "jeffrey": value });
    let mut passed = None;
    if a.check_hausdorff {
        let c = jeffrey_vs_hausdorff_check(m.as_ref(), &reg, &opts)?;
        let rel_tol = a.rel_tol.unwrap_or(0.05);
        passed = Some(c.rel_err <= rel_tol);
        if let Some(path) = &a.common.emit {
            let mut t = Table::new(["delta", "count", "premeasure"]);
            for i in 0..c.cover.deltas.len() {
                t.row([
                    c.cover.deltas[i].to_string(),
                    c.cover.counts[i].to_string(),
                    c.cover.premeasure[i].to_string(),
                ]);
            }
            t.write(path)?;
        }
        result["check"] = serde_json::to_value(&c)?;
        result["rel_tol"] = json!(rel_tol);
    } else if let Some(path) = &a.common.emit {
        let mut t = Table::new(["jeffrey"]);
        t.row([value]);
        t.write(path)?;
    }
    Ok((summary("jeffrey", &a, None, passed, result)?, a.common))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct CramerRaoArgs {
    /// Finite model id.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// mean, shrinkage:λ,c, constant:θ₀, plugin-inverse (default mean).
    #[arg(long)]
    estimator: Option<String>,
    /// identity or coord:i,j (default identity).
    #[arg(long)]
    phi: Option<String>,
    /// Sample size (default 1).
    #[arg(long)]
    n: Option<usize>,
    /// Monte Carlo draws; exact enumeration when absent.
    #[arg(long)]
    draws: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn cramer_rao(a: CramerRaoArgs) -> Result<Outcome> {
    let m = model(&a.model)?;
    let theta = floats("theta", &required(&a.theta, "theta")?)?;
    let est = Estimator::parse(a.estimator.as_deref().unwrap_or("mean"))?;
    let phi = PhiMap::parse(a.phi.as_deref().unwrap_or("identity"))?;
    let seed = a.common.seed()?;
    let sampling = match a.draws {
        Some(draws) => Sampling::MonteCarlo { draws, seed },
        None => Sampling::Exact,
    };
    let exp = Experiment::new(m, a.n.unwrap_or(1), sampling)?;
    let r = cramer_rao_gap(&exp, &theta, &phi, &est)?;
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["i", "j", "gap"]);
        for (i, row) in r.gap.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t.row([i.to_string(), j.to_string(), v.to_string()]);
            }
        }
        t.write(path)?;
    }
    let seed = a.draws.map(|_| seed);
    Ok((
        summary(
            "cramer-rao",
            &a,
            seed,
            Some(r.holds),
            serde_json::to_value(&r)?,
        )?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct WeakArgs {
    /// Times for the exchange identity, comma-separated, nonzero.
    #[arg(long, allow_hyphen_values = true)]
    ts: Option<String>,
    /// Times for ‖μ'_t − μ'_0‖_TV, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    tv_ts: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn weak_demo(a: WeakArgs) -> Result<Outcome> {
    let ts =
        a.ts.as_deref()
            .map(|s| floats("ts", s))
            .transpose()?
            .unwrap_or_else(|| weak::DEFAULT_EXCHANGE_TS.to_vec());
    if ts.contains(&0.0) {
        bail!("--ts must be nonzero");
    }
    let tv_ts = a
        .tv_ts
        .as_deref()
        .map(|s| floats("tv-ts", s))
        .transpose()?
        .unwrap_or_else(|| weak::DEFAULT_TV_TS.to_vec());
    let d = weak::weak_demo(&ts, &tv_ts)?;
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["t", "test_function", "derivative", "integral", "abs_diff"]);
        for r in &d.exchange {
            t.row([
                r.t.to_string(),
                r.test_function.to_string(),
                r.derivative.to_string(),
                r.integral.to_string(),
                r.abs_diff.to_string(),
            ]);
        }
        t.write(path)?;
    }
    Ok((
        summary(
            "weak-demo",
            &a,
            None,
            Some(d.passed()),
            serde_json::to_value(&d)?,
        )?,
        a.common,
    ))
}

#[derive(Args, Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct VerifyArgs {
    /// Module names or criterion numbers, comma-separated.
    #[arg(long)]
    only: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

pub fn verify_all(a: VerifyArgs) -> Result<Outcome> {
    let seed = a.common.seed()?;
    let r = verify::verify_all(seed, a.only.as_deref())?;
    for c in &r.criteria {
        eprintln!(
            "criterion {:>2} {:<30} {} {}",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    if let Some(path) = &a.common.emit {
        let mut t = Table::new(["id", "name", "module", "passed", "seconds"]);
        for c in &r.criteria {
            t.row([
                c.id.to_string(),
                c.name.replace(' ', "-"),
                c.module.to_string(),
                c.passed.to_string(),
                format!("{:.3}", c.seconds),
            ]);
        }
        t.write(path)?;
    }
    let passed = r.all_passed();
    let mut result = serde_json::to_value(&r)?;
    // Wall-clock durations would break byte-identical summaries.
    if a.common.no_timestamp {
        if let Some(cs) = result["criteria"].as_array_mut() {
            for c in cs {
                if let Some(o) = c.as_object_mut() {
                    o.remove("seconds");
                }
            }
        }
    }
    Ok((
        summary("verify-all", &a, Some(seed), Some(passed), result)?,
        a.common,
    ))
}
