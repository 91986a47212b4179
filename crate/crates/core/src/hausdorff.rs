//! Covering-based Hausdorff measure and dimension estimates in the Fisher
//! distance, and the Jeffrey volume density √det G.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::distance::{fisher_distance, segment_length, DistanceOptions};
use crate::error::{Error, Result};
use crate::fisher::fisher_matrix;
use crate::markov::{MarkovKernel, PushforwardModel};
use crate::models::ParamModel;
use crate::quadrature::gauss_legendre;

/// Volume of the unit ball in dimension k, π^{k/2} / Γ(1 + k/2).
pub fn alpha_k(k: f64) -> Result<f64> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::domain(format!(
            "dimension must be a finite k >= 0, got {k}"
        )));
    }
    Ok(PI.powf(0.5 * k) / gamma(1.0 + 0.5 * k))
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::usage(
                "region bounds must be nonempty and of equal length",
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::usage("region needs finite bounds with lo <= hi"));
        }
        Ok(Region { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a == b)
    }

    /// `per_axis` evenly spaced points per axis, lexicographic order.
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let per_axis = per_axis.max(1);
        let coord = |axis: usize, i: usize| {
            if per_axis == 1 {
                0.5 * (self.lo[axis] + self.hi[axis])
            } else {
                self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (per_axis - 1) as f64
            }
        };
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut idx = vec![0; n];
                for slot in idx.iter_mut().rev() {
                    *slot = k % per_axis;
                    k /= per_axis;
                }
                idx.iter().enumerate().map(|(a, i)| coord(a, *i)).collect()
            })
            .collect()
    }

    fn check_dim(&self, model: &dyn ParamModel) -> Result<()> {
        if self.dim() != model.dim() {
            return Err(Error::usage(format!(
                "region has dimension {}, model has {}",
                self.dim(),
                model.dim()
            )));
        }
        Ok(())
    }

    /// Every corner of the box lies in the (convex) model domain.
    fn check_in(&self, model: &dyn ParamModel) -> Result<()> {
        self.check_dim(model)?;
        let n = self.dim();
        for mask in 0..1usize << n {
            let corner: Vec<f64> = (0..n)
                .map(|a| {
                    if mask >> a & 1 == 1 {
                        self.hi[a]
                    } else {
                        self.lo[a]
                    }
                })
                .collect();
            model.domain().check(&corner)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum CloudMetric {
    /// Points on a curve, distance = |arc_i − arc_j|.
    Chain {
        arc: Vec<f64>,
    },
    /// Shortest-path distance on a weighted neighbour graph (CSR).
    Graph {
        offsets: Vec<usize>,
        targets: Vec<usize>,
        lengths: Vec<f64>,
    },
    Dense {
        dist: Vec<Vec<f64>>,
    },
}

/// A finite metric space of parameter points; point order (lexicographic
/// in the parameters) fixes the greedy cover.
#[derive(Debug, Clone)]
pub struct MetricCloud {
    points: Vec<Vec<f64>>,
    metric: CloudMetric,
}

impl MetricCloud {
    /// Points along a 1-D parameter interval; distances are Fisher arc lengths.
    pub fn chain(model: &dyn ParamModel, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if model.dim() != 1 {
            return Err(Error::usage("a chain cloud needs a one-parameter model"));
        }
        let region = Region::new(vec![lo], vec![hi])?;
        region.check_in(model)?;
        let pts = region.lattice(points.max(1));
        let mut arc = vec![0.0];
        for w in pts.windows(2) {
            let last = *arc.last().unwrap();
            arc.push(last + segment_length(model, &w[0], &w[1], 4)?);
        }
        Ok(MetricCloud {
            points: pts,
            metric: CloudMetric::Chain { arc },
        })
    }

    /// Lattice points of `region` inside the model domain, joined to their
    /// lattice neighbours (including diagonals); edge length is the
    /// trapezoid Fisher length of the segment. One-parameter models give a chain.
    pub fn lattice(model: &dyn ParamModel, region: &Region, per_axis: usize) -> Result<Self> {
        region.check_dim(model)?;
        if model.dim() == 1 {
            return Self::chain(model, region.lo[0], region.hi[0], per_axis);
        }
        let n = model.dim();
        let per_axis = per_axis.max(2);
        let all = region.lattice(per_axis);
        let mut index = vec![usize::MAX; all.len()];
        let mut points = Vec::new();
        let mut metrics = Vec::new();
        for (k, p) in all.iter().enumerate() {
            if model.domain().contains(p) {
                index[k] = points.len();
                metrics.push(fisher_matrix(model, p)?);
                points.push(p.clone());
            }
        }
        let offsets_nd: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
            .map(|mut c| {
                let mut o = vec![0i64; n];
                for slot in o.iter_mut().rev() {
                    *slot = (c % 3) as i64 - 1;
                    c /= 3;
                }
                o
            })
            .filter(|o| o.iter().any(|v| *v != 0))
            .collect();
        if points.is_empty() {
            return Err(Error::domain(
                "no lattice point of the region lies in the model domain",
            ));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); points.len()];
        for (k, &i) in index.iter().enumerate() {
            if i == usize::MAX {
                continue;
            }
            let mut digits = vec![0i64; n];
            let mut kk = k;
            for slot in digits.iter_mut().rev() {
                *slot = (kk % per_axis) as i64;
                kk /= per_axis;
            }
            for o in &offsets_nd {
                let nb: Vec<i64> = digits.iter().zip(o).map(|(d, o)| d + o).collect();
                if nb.iter().any(|d| *d < 0 || *d >= per_axis as i64) {
                    continue;
                }
                let kn = nb
                    .iter()
                    .fold(0usize, |acc, d| acc * per_axis + *d as usize);
                let j = index[kn];
                if j == usize::MAX || j <= i {
                    continue;
                }
                let delta: Vec<f64> = points[j]
                    .iter()
                    .zip(&points[i])
                    .map(|(a, b)| a - b)
                    .collect();
                let len = 0.5
                    * (metrics[i].quad(&delta).max(0.0).sqrt()
                        + metrics[j].quad(&delta).max(0.0).sqrt());
                adj[i].push((j, len));
                adj[j].push((i, len));
            }
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut lengths = Vec::new();
        for list in adj {
            for (j, l) in list {
                targets.push(j);
                lengths.push(l);
            }
            offsets.push(targets.len());
        }
        Ok(MetricCloud {
            points,
            metric: CloudMetric::Graph {
                offsets,
                targets,
                lengths,
            },
        })
    }

    /// Pairwise `fisher_distance` estimates, one optimization per unordered
    /// pair; points are sorted lexicographically.
    pub fn pairwise(
        model: &dyn ParamModel,
        points: &[Vec<f64>],
        opts: &DistanceOptions,
    ) -> Result<Self> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let m = pts.len();
        let mut dist = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let d = fisher_distance(model, &pts[i], &pts[j], opts)?.length;
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        Ok(MetricCloud {
            points: pts,
            metric: CloudMetric::Dense { dist },
        })
    }

    /// A cloud from an explicit symmetric distance matrix.
    pub fn from_matrix(points: Vec<Vec<f64>>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        if m == 0 || dist.len() != m || dist.iter().any(|r| r.len() != m) {
            return Err(Error::usage(
                "distance matrix must be M×M for M >= 1 points",
            ));
        }
        for i in 0..m {
            if dist[i][i] != 0.0 {
                return Err(Error::usage("distance matrix needs a zero diagonal"));
            }
            for j in 0..m {
                if dist[i][j] != dist[j][i] || !(dist[i][j] >= 0.0) {
                    return Err(Error::usage(
                        "distance matrix must be symmetric and nonnegative",
                    ));
                }
            }
        }
        Ok(MetricCloud {
            points,
            metric: CloudMetric::Dense { dist },
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Largest nearest-neighbour distance.
    pub fn mesh(&self) -> f64 {
        match &self.metric {
            CloudMetric::Chain { arc } => arc.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
            CloudMetric::Graph {
                offsets, lengths, ..
            } => (0..self.len())
                .map(|i| {
                    lengths[offsets[i]..offsets[i + 1]]
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min)
                })
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max),
            CloudMetric::Dense { dist } => dist
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, d)| *d)
                        .fold(f64::INFINITY, f64::min)
                })
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max),
        }
    }

    /// Diameter (double sweep lower bound on graphs).
    pub fn diameter(&self) -> f64 {
        match &self.metric {
            CloudMetric::Chain { arc } => arc.last().unwrap() - arc[0],
            CloudMetric::Graph { .. } => {
                let mut ws = Workspace::new(self.len());
                let far = |ws: &mut Workspace, s: usize| {
                    self.ball(s, f64::INFINITY, ws);
                    ws.found
                        .iter()
                        .copied()
                        .fold((s, 0.0), |b, (j, d)| if d > b.1 { (j, d) } else { b })
                };
                let (u, _) = far(&mut ws, 0);
                far(&mut ws, u).1
            }
            CloudMetric::Dense { dist } => dist.iter().flatten().copied().fold(0.0, f64::max),
        }
    }

    /// Fills `ws.found` with (j, d(c, j)) for all j with d(c, j) ≤ r.
    fn ball(&self, c: usize, r: f64, ws: &mut Workspace) {
        ws.found.clear();
        match &self.metric {
            CloudMetric::Chain { arc } => {
                let lo = arc.partition_point(|a| *a < arc[c] - r);
                let hi = arc.partition_point(|a| *a <= arc[c] + r);
                ws.found
                    .extend((lo..hi).map(|j| (j, (arc[j] - arc[c]).abs())));
            }
            CloudMetric::Dense { dist } => {
                ws.found.extend(
                    dist[c]
                        .iter()
                        .enumerate()
                        .filter(|(_, d)| **d <= r)
                        .map(|(j, d)| (j, *d)),
                );
            }
            CloudMetric::Graph {
                offsets,
                targets,
                lengths,
            } => {
                for j in ws.touched.drain(..) {
                    ws.dist[j] = f64::INFINITY;
                }
                ws.dist[c] = 0.0;
                ws.touched.push(c);
                ws.heap.push(HeapItem(0.0, c));
                while let Some(HeapItem(d, u)) = ws.heap.pop() {
                    if d > ws.dist[u] {
                        continue;
                    }
                    ws.found.push((u, d));
                    for e in offsets[u]..offsets[u + 1] {
                        let v = targets[e];
                        let nd = d + lengths[e];
                        if nd <= r && nd < ws.dist[v] {
                            if ws.dist[v].is_infinite() {
                                ws.touched.push(v);
                            }
                            ws.dist[v] = nd;
                            ws.heap.push(HeapItem(nd, v));
                        }
                    }
                }
            }
        }
    }
}

struct Workspace {
    dist: Vec<f64>,
    touched: Vec<usize>,
    heap: BinaryHeap<HeapItem>,
    found: Vec<(usize, f64)>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        Workspace {
            dist: vec![f64::INFINITY; m],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            found: Vec::new(),
        }
    }
}

/// Min-heap entry on distance.
#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Greedy cover at scale δ: (number of sets, their diameters).
fn greedy_cover(cloud: &MetricCloud, delta: f64) -> (usize, Vec<f64>) {
    let m = cloud.len();
    let mut covered = vec![false; m];
    let mut ws = Workspace::new(m);
    let mut diameters = Vec::new();
    let mut members = Vec::new();
    for c in 0..m {
        if covered[c] {
            continue;
        }
        cloud.ball(c, 0.5 * delta, &mut ws);
        members.clear();
        members.extend(ws.found.iter().filter(|(j, _)| !covered[*j]).copied());
        for (j, _) in &members {
            covered[*j] = true;
        }
        diameters.push(set_diameter(cloud, &members, delta, &mut ws));
    }
    (diameters.len(), diameters)
}

/// Diameter of a greedy set whose members carry their distance to the centre.
fn set_diameter(
    cloud: &MetricCloud,
    members: &[(usize, f64)],
    delta: f64,
    ws: &mut Workspace,
) -> f64 {
    match &cloud.metric {
        CloudMetric::Chain { arc } => {
            let (lo, hi) = members
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (j, _)| {
                    (lo.min(arc[*j]), hi.max(arc[*j]))
                });
            hi - lo
        }
        CloudMetric::Dense { dist } => {
            let mut d = 0.0f64;
            for (a, _) in members {
                for (b, _) in members {
                    d = d.max(dist[*a][*b]);
                }
            }
            d
        }
        CloudMetric::Graph { .. } => {
            if members.len() < 2 {
                return 0.0;
            }
            let (u, _) = members
                .iter()
                .copied()
                .fold(members[0], |b, x| if x.1 > b.1 { x } else { b });
            let set: Vec<usize> = members.iter().map(|(j, _)| *j).collect();
            cloud.ball(u, delta, ws);
            let mut mark = std::collections::HashSet::with_capacity(set.len());
            mark.extend(set);
            ws.found
                .iter()
                .filter(|(j, _)| mark.contains(j))
                .map(|(_, d)| *d)
                .fold(0.0, f64::max)
        }
    }
}

/// Size of the greedy cover at scale δ: scanning points in order, each
/// uncovered point claims every uncovered point within δ/2.
pub fn covering_number(cloud: &MetricCloud, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::domain("covering scale must be positive"));
    }
    Ok(greedy_cover(cloud, delta).0)
}

/// Geometric scales δ_l = δ_0 / 2^l, l = 0..levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub levels: usize,
    /// Largest scale; defaults to a quarter of the cloud diameter.
    pub delta0: Option<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            levels: 6,
            delta0: None,
        }
    }
}

impl Schedule {
    pub fn deltas(&self, cloud: &MetricCloud) -> Vec<f64> {
        let d0 = self.delta0.unwrap_or(0.25 * cloud.diameter());
        (0..self.levels)
            .map(|l| d0 / f64::powi(2.0, l as i32))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub k: f64,
    pub deltas: Vec<f64>,
    /// Raw greedy counts.
    pub counts: Vec<usize>,
    /// min over finer-or-equal scales of the raw counts; nonincreasing in δ.
    pub envelope: Vec<usize>,
    /// Σ α_k (diam/2)^k over the greedy sets.
    pub premeasure: Vec<f64>,
    /// α_k N(δ) (δ/2)^k.
    pub ball_premeasure: Vec<f64>,
    pub mesh: f64,
    pub estimate: f64,
    /// Last two premeasures agree within 10%.
    pub stable: bool,
}

/// Greedy-cover premeasures along the schedule; the estimate is the value at
/// the smallest scale.
pub fn hausdorff_measure_estimate(
    cloud: &MetricCloud,
    k: f64,
    schedule: &Schedule,
) -> Result<CoverReport> {
    let ak = alpha_k(k)?;
    let deltas = schedule.deltas(cloud);
    let mesh = cloud.mesh();
    if deltas.is_empty() {
        return Err(Error::usage("schedule needs at least one scale"));
    }
    let dmin = *deltas.last().unwrap();
    if cloud.len() > 1 && !(mesh <= 0.25 * dmin) {
        return Err(Error::SparseCloud {
            mesh,
            limit: 0.25 * dmin,
        });
    }
    let mut counts = Vec::new();
    let mut premeasure = Vec::new();
    let mut ball_premeasure = Vec::new();
    for d in &deltas {
        let (n, diams) = greedy_cover(cloud, *d);
        counts.push(n);
        premeasure.push(ak * diams.iter().map(|x| (0.5 * x).powf(k)).sum::<f64>());
        ball_premeasure.push(ak * n as f64 * (0.5 * d).powf(k));
    }
    let mut envelope = counts.clone();
    for l in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[l] = envelope[l].min(envelope[l + 1]);
    }
    let estimate = *premeasure.last().unwrap();
    let stable = match premeasure.len() {
        0 | 1 => false,
        l => {
            let (a, b) = (premeasure[l - 2], premeasure[l - 1]);
            (a - b).abs() <= 0.1 * a.abs().max(b.abs())
        }
    };
    Ok(CoverReport {
        k,
        deltas,
        counts,
        envelope,
        premeasure,
        ball_premeasure,
        mesh,
        estimate,
        stable,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub dimension: f64,
    /// (δ, N*(δ)) pairs used in the fit.
    pub used: Vec<(f64, usize)>,
}

/// Least-squares slope of log N*(δ) against log(1/δ) over scales with mesh ≤ δ/8.
pub fn hausdorff_dimension_estimate(
    cloud: &MetricCloud,
    schedule: &Schedule,
) -> Result<DimensionReport> {
    if cloud.len() <= 1 || cloud.diameter() == 0.0 {
        return Ok(DimensionReport {
            dimension: 0.0,
            used: Vec::new(),
        });
    }
    let deltas = schedule.deltas(cloud);
    let mesh = cloud.mesh();
    let mut counts: Vec<usize> = deltas.iter().map(|d| greedy_cover(cloud, *d).0).collect();
    for l in (0..counts.len().saturating_sub(1)).rev() {
        counts[l] = counts[l].min(counts[l + 1]);
    }
    let used: Vec<(f64, usize)> = deltas
        .iter()
        .copied()
        .zip(counts)
        .filter(|(d, _)| mesh <= d / 8.0)
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientScale { found: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|(d, _)| -d.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, n)| (*n as f64).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(DimensionReport {
        dimension: sxy / sxx,
        used,
    })
}

/// √det G(θ), zero where G is rank deficient.
pub fn jeffrey_density(model: &dyn ParamModel, theta: &[f64]) -> Result<f64> {
    let g = fisher_matrix(model, theta)?;
    if g.rank < g.dim() {
        return Ok(0.0);
    }
    Ok(g.det().max(0.0).sqrt())
}

/// ∫_region √det G dθ by tensor Gauss-Legendre with `resolution` panels of
/// order 8 per axis.
pub fn jeffrey_measure(model: &dyn ParamModel, region: &Region, resolution: usize) -> Result<f64> {
    region.check_in(model)?;
    if region.is_empty() {
        return Ok(0.0);
    }
    let (gx, gw) = gauss_legendre(8);
    let panels = resolution.max(1);
    let axes: Vec<Vec<(f64, f64)>> = (0..region.dim())
        .map(|a| {
            let h = (region.hi[a] - region.lo[a]) / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let left = region.lo[a] + p as f64 * h;
                    gx.iter()
                        .zip(&gw)
                        .map(move |(x, w)| (left + 0.5 * h * (x + 1.0), 0.5 * h * w))
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let per = axes[0].len();
    let total = per.pow(region.dim() as u32);
    let mut acc = 0.0;
    let mut theta = vec![0.0; region.dim()];
    for mut k in 0..total {
        let mut w = 1.0;
        for a in (0..region.dim()).rev() {
            let (x, wx) = axes[a][k % per];
            theta[a] = x;
            w *= wx;
            k /= per;
        }
        acc += w * jeffrey_density(model, &theta)?;
    }
    if !acc.is_finite() {
        return Err(Error::Integration(
            "Jeffrey integrand is not integrable on the region".into(),
        ));
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JeffreyCheckOptions {
    /// Cloud points per axis.
    pub points_per_axis: usize,
    pub schedule: Schedule,
    /// Quadrature panels per axis for the Jeffrey integral.
    pub resolution: usize,
    /// Minimum of √det G relative to its maximum on the region.
    pub min_relative_density: f64,
}

impl JeffreyCheckOptions {
    pub fn for_dim(n: usize) -> Self {
        let points_per_axis = if n == 1 { 20001 } else { 129 };
        JeffreyCheckOptions {
            points_per_axis,
            schedule: Schedule::default(),
            resolution: 16,
            min_relative_density: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JeffreyCheck {
    pub jeffrey: f64,
    pub hausdorff: f64,
    pub rel_err: f64,
    pub cover: CoverReport,
}

/// Compares ∫ √det G over the region with the H^n estimate of a lattice cloud.
pub fn jeffrey_vs_hausdorff_check(
    model: &dyn ParamModel,
    region: &Region,
    opts: &JeffreyCheckOptions,
) -> Result<JeffreyCheck> {
    region.check_in(model)?;
    let n = model.dim();
    let probe = region.lattice(if n == 1 { 201 } else { 21 });
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for p in &probe {
        let g = fisher_matrix(model, p)?;
        if g.rank < n {
            return Err(Error::DegenerateRegion(format!(
                "Fisher metric has rank {} < {n} at {p:?}",
                g.rank
            )));
        }
        let d = g.det().max(0.0).sqrt();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if dmin < opts.min_relative_density * dmax {
        return Err(Error::DegenerateRegion(format!(
            "Jeffrey density ranges over [{dmin:.3e}, {dmax:.3e}]; the metric is nearly singular on the region"
        )));
    }
    let jeffrey = jeffrey_measure(model, region, opts.resolution)?;
    let cloud = MetricCloud::lattice(model, region, opts.points_per_axis)?;
    let cover = hausdorff_measure_estimate(&cloud, n as f64, &opts.schedule)?;
    let hausdorff = cover.estimate;
    Ok(JeffreyCheck {
        jeffrey,
        hausdorff,
        rel_err: (hausdorff - jeffrey).abs() / jeffrey.abs().max(f64::MIN_POSITIVE),
        cover,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityCheck {
    pub before: f64,
    pub after: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// H^k estimates of a lattice cloud before and after pushing the model
/// through `kernel`, on the same points and scales.
pub fn hausdorff_monotonicity_check(
    kernel: &MarkovKernel,
    model: Arc<dyn ParamModel>,
    region: &Region,
    per_axis: usize,
    k: f64,
    schedule: &Schedule,
) -> Result<MonotonicityCheck> {
    if !model.space().is_finite() {
        return Err(Error::usage(
            "the monotonicity check needs a finite-backend model",
        ));
    }
    let before_cloud = MetricCloud::lattice(model.as_ref(), region, per_axis)?;
    let schedule = Schedule {
        levels: schedule.levels,
        delta0: Some(schedule.delta0.unwrap_or(0.25 * before_cloud.diameter())),
    };
    let before = hausdorff_measure_estimate(&before_cloud, k, &schedule)?.estimate;
    let pushed = PushforwardModel::new(model, kernel.clone())?;
    let after_cloud = MetricCloud::lattice(&pushed, region, per_axis)?;
    let after = hausdorff_measure_estimate(&after_cloud, k, &schedule)?.estimate;
    Ok(MonotonicityCheck {
        before,
        after,
        tolerance: 0.1,
        holds: after <= before * 1.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{from_id, Bernoulli, Categorical, GaussianMixture};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BERNOULLI_LENGTH: f64 = 1.047_197_551_196_597_6;

    #[test]
    fn unit_ball_volumes() {
        assert!((alpha_k(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((alpha_k(1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((alpha_k(2.0).unwrap() - PI).abs() < 1e-12);
        assert!((alpha_k(3.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(alpha_k(-1.0).is_err());
    }

    #[test]
    fn covering_small_clouds() {
        let one = MetricCloud::from_matrix(vec![vec![0.0]], vec![vec![0.0]]).unwrap();
        for d in [1e-3, 1.0, 10.0] {
            assert_eq!(covering_number(&one, d).unwrap(), 1);
        }
        let two = MetricCloud::from_matrix(
            vec![vec![0.0], vec![1.0]],
            vec![vec![0.0, 0.7], vec![0.7, 0.0]],
        )
        .unwrap();
        assert_eq!(covering_number(&two, 1.4).unwrap(), 1);
        assert_eq!(covering_number(&two, 1.0).unwrap(), 2);
        assert_eq!(
            hausdorff_dimension_estimate(&one, &Schedule::default())
                .unwrap()
                .dimension,
            0.0
        );
    }

    #[test]
    fn uniform_chain_counts() {
        let m = from_id("gauss-loc").unwrap();
        let c = MetricCloud::chain(m.as_ref(), -1.0, 1.0, 2001).unwrap();
        for d in [0.5, 0.1, 0.03] {
            let n = covering_number(&c, d).unwrap() as f64;
            let hand = (2.0 / d).ceil();
            assert!(n >= 0.5 * hand && n <= 2.0 * hand, "{d}: {n} vs {hand}");
        }
    }

    #[test]
    fn bernoulli_segment_measures() {
        let m = Bernoulli::new();
        let c = MetricCloud::chain(&m, 0.25, 0.75, 20001).unwrap();
        assert!((c.diameter() - BERNOULLI_LENGTH).abs() < 1e-9);
        let s = Schedule::default();
        let h1 = hausdorff_measure_estimate(&c, 1.0, &s).unwrap();
        assert!(
            (h1.estimate - BERNOULLI_LENGTH).abs() < 0.05 * BERNOULLI_LENGTH,
            "{h1:?}"
        );
        assert!(h1.stable);
        assert!(h1.envelope.windows(2).all(|w| w[0] <= w[1]));
        let h2 = hausdorff_measure_estimate(&c, 2.0, &s).unwrap();
        assert!(h2.premeasure.windows(2).all(|w| w[1] < w[0]));
        assert!(h2.estimate < 0.05);
        let h05 = hausdorff_measure_estimate(&c, 0.5, &s).unwrap();
        assert!(!h05.stable);
        assert!(h05.premeasure.windows(2).all(|w| w[1] > w[0]));
        let dim = hausdorff_dimension_estimate(&c, &s).unwrap();
        assert!((dim.dimension - 1.0).abs() < 0.15, "{dim:?}");
    }

    #[test]
    fn sparse_cloud_is_rejected() {
        let m = Bernoulli::new();
        let c = MetricCloud::chain(&m, 0.25, 0.75, 50).unwrap();
        assert!(matches!(
            hausdorff_measure_estimate(&c, 1.0, &Schedule::default()),
            Err(Error::SparseCloud { .. })
        ));
    }

    #[test]
    fn jeffrey_density_examples() {
        let m = Bernoulli::new();
        for p in [0.1f64, 0.5, 0.8] {
            let want = 1.0 / (p * (1.0 - p)).sqrt();
            assert!((jeffrey_density(&m, &[p]).unwrap() - want).abs() < 1e-9 * want);
        }
        let mix = GaussianMixture::new();
        assert_eq!(jeffrey_density(&mix, &[0.0, 0.0]).unwrap(), 0.0);
        for a in [0.2, 0.5, 0.9] {
            assert!(jeffrey_density(&mix, &[a, 0.0]).unwrap() <= 1e-6);
        }
        for b in [-2.0, 0.5, 3.0] {
            assert!(jeffrey_density(&mix, &[0.0, b]).unwrap() <= 1e-6);
        }
        assert!(jeffrey_density(&mix, &[0.5, 1.0]).unwrap() > 0.01);
    }

    #[test]
    fn jeffrey_measure_is_fisher_length_and_additive() {
        let m = Bernoulli::new();
        let r = Region::new(vec![0.25], vec![0.75]).unwrap();
        let whole = jeffrey_measure(&m, &r, 4).unwrap();
        assert!((whole - BERNOULLI_LENGTH).abs() < 1e-9);
        let left = jeffrey_measure(&m, &Region::new(vec![0.25], vec![0.4]).unwrap(), 4).unwrap();
        let right = jeffrey_measure(&m, &Region::new(vec![0.4], vec![0.75]).unwrap(), 4).unwrap();
        assert!((left + right - whole).abs() < 1e-9);
        assert_eq!(
            jeffrey_measure(&m, &Region::new(vec![0.3], vec![0.3]).unwrap(), 4).unwrap(),
            0.0
        );
    }

    #[test]
    fn jeffrey_matches_hausdorff_in_one_dimension() {
        let m = Bernoulli::new();
        let opts = JeffreyCheckOptions::for_dim(1);
        let r =
            jeffrey_vs_hausdorff_check(&m, &Region::new(vec![0.25], vec![0.75]).unwrap(), &opts)
                .unwrap();
        assert!(r.rel_err <= 0.05, "{r:?}");
        let g = from_id("gauss-loc").unwrap();
        let r = jeffrey_vs_hausdorff_check(
            g.as_ref(),
            &Region::new(vec![-1.0], vec![1.0]).unwrap(),
            &opts,
        )
        .unwrap();
        assert!((r.jeffrey - 2.0).abs() < 1e-6);
        assert!(r.rel_err <= 0.05, "{r:?}");
    }

    #[test]
    fn degenerate_mixture_region_is_refused() {
        let mix = GaussianMixture::new();
        let region = Region::new(vec![0.3, -1.0], vec![0.7, 2.0]).unwrap();
        let r = jeffrey_vs_hausdorff_check(&mix, &region, &JeffreyCheckOptions::for_dim(2));
        assert!(matches!(r, Err(Error::DegenerateRegion(_))), "{r:?}");
    }

    #[test]
    fn categorical_cloud_shrinks_under_lossy_kernels() {
        let base: Arc<dyn ParamModel> = Arc::new(Categorical::new(3).unwrap());
        let region = Region::new(vec![0.1, 0.1], vec![0.8, 0.8]).unwrap();
        let s = Schedule {
            levels: 3,
            delta0: None,
        };
        let id = MarkovKernel::identity(base.space().clone()).unwrap();
        let same = hausdorff_monotonicity_check(&id, base.clone(), &region, 81, 2.0, &s).unwrap();
        assert_eq!(same.before, same.after);
        let perm = MarkovKernel::permutation(base.space().clone(), &[2, 0, 1]).unwrap();
        let p = hausdorff_monotonicity_check(&perm, base.clone(), &region, 81, 2.0, &s).unwrap();
        assert!((p.after - p.before).abs() <= 1e-9 * p.before);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [2, 3] {
            let t = MarkovKernel::random(base.space().clone(), k, &mut rng).unwrap();
            let r = hausdorff_monotonicity_check(&t, base.clone(), &region, 81, 2.0, &s).unwrap();
            assert!(r.holds && r.after < r.before, "{r:?}");
        }
    }

    #[test]
    fn planar_location_family_is_two_dimensional() {
        let m = from_id("gauss-loc2").unwrap();
        let region = Region::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let c = MetricCloud::lattice(m.as_ref(), &region, 257).unwrap();
        let d = hausdorff_dimension_estimate(&c, &Schedule::default()).unwrap();
        eprintln!("{d:?}");
        assert!((d.dimension - 2.0).abs() <= 0.2, "{d:?}");
    }
}
