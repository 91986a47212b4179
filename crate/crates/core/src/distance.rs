//! Fisher-Rao path lengths and distance estimates by optimizing
//! piecewise-linear parameter curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{fisher_matrix, speed};
use crate::models::{CurveInModel, ParamModel};
use crate::quadrature::gauss_legendre;
use crate::tol;

/// Length of the straight parameter segment a → b, by `q`-point Gauss-Legendre.
pub fn segment_length(model: &dyn ParamModel, a: &[f64], b: &[f64], q: usize) -> Result<f64> {
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    if v.iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    let (xs, ws) = gauss_legendre(q);
    let mut total = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let s = 0.5 * (x + 1.0);
        let theta: Vec<f64> = a.iter().zip(&v).map(|(a, v)| a + s * v).collect();
        total += 0.5 * w * speed(model, &theta, &v)?;
    }
    Ok(total)
}

/// Σ over segments of ∫ |ċ(t)|_g dt.
pub fn curve_length(
    model: &dyn ParamModel,
    curve: &CurveInModel,
    quad_points: usize,
) -> Result<f64> {
    curve.check_in(model)?;
    let mut total = 0.0;
    for w in curve.nodes().windows(2) {
        total += segment_length(model, &w[0], &w[1], quad_points)?;
    }
    Ok(total)
}

/// (t, θ(t), |ċ(t)|_g) at `samples` evenly spaced parameter values.
pub fn curve_profile(
    model: &dyn ParamModel,
    curve: &CurveInModel,
    samples: usize,
) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    curve.check_in(model)?;
    let (a, b) = curve.t_range();
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let t = a + (b - a) * i as f64 / (samples - 1) as f64;
            let theta = curve.point(t);
            let s = speed(model, &theta, &curve.velocity(t))?;
            Ok((t, theta, s))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    /// Interior nodes K of the piecewise-linear curve.
    pub interior_nodes: usize,
    pub max_iter: usize,
    /// Stop once the relative length improvement stays below this value.
    pub tol: f64,
    /// Gauss-Legendre points per segment.
    pub quad_points: usize,
    /// Points per axis of the coarse lattice used as a second starting
    /// path (dimension ≤ 2); 0 or 1 disables it.
    pub lattice_init: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            interior_nodes: 8,
            max_iter: 500,
            tol: tol::OPTIMIZER_TOL,
            quad_points: 8,
            lattice_init: 17,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathResult {
    pub nodes: Vec<Vec<f64>>,
    pub length: f64,
    pub lower_bound_tv: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Segments whose midpoint metric has an eigenvalue below `eigen_tol`.
    pub degenerate_segments: Vec<usize>,
}

struct Path<'a> {
    model: &'a dyn ParamModel,
    a: Vec<f64>,
    b: Vec<f64>,
    n: usize,
    q: usize,
}

impl Path<'_> {
    fn node<'x>(&'x self, x: &'x [f64], i: usize, k: usize) -> &'x [f64] {
        if i == 0 {
            &self.a
        } else if i == k + 1 {
            &self.b
        } else {
            &x[(i - 1) * self.n..i * self.n]
        }
    }

    fn segments(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = x.len() / self.n;
        (0..=k)
            .map(|i| {
                segment_length(
                    self.model,
                    self.node(x, i, k),
                    self.node(x, i + 1, k),
                    self.q,
                )
            })
            .collect()
    }

    /// Length gradient by central differences; node j only touches segments j−1 and j.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = x.len() / self.n;
        let mut g = vec![0.0; x.len()];
        let mut y = x.to_vec();
        for j in 1..=k {
            for c in 0..self.n {
                let idx = (j - 1) * self.n + c;
                let h = 1e-6 * (1.0 + x[idx].abs());
                let mut local = [0.0; 2];
                for (slot, sign) in [1.0, -1.0].iter().enumerate() {
                    y[idx] = x[idx] + sign * h;
                    local[slot] = segment_length(
                        self.model,
                        self.node(&y, j - 1, k),
                        self.node(&y, j, k),
                        self.q,
                    )? + segment_length(
                        self.model,
                        self.node(&y, j, k),
                        self.node(&y, j + 1, k),
                        self.q,
                    )?;
                }
                y[idx] = x[idx];
                g[idx] = (local[0] - local[1]) / (2.0 * h);
            }
        }
        Ok(g)
    }

    fn project(&self, x: &mut [f64]) {
        for chunk in x.chunks_mut(self.n) {
            let p = self.model.domain().project(chunk);
            chunk.copy_from_slice(&p);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper estimate of ρ_g(θ₁, θ₂): the shortest piecewise-linear curve with
/// `interior_nodes` free nodes, found by projected BFGS with
/// central-difference gradients and Armijo backtracking. Starts from the
/// straight segment or, for models of dimension ≤ 2, from the shortest
/// path on a coarse parameter lattice when that one is shorter.
pub fn fisher_distance(
    model: &dyn ParamModel,
    a: &[f64],
    b: &[f64],
    opts: &DistanceOptions,
) -> Result<PathResult> {
    model.domain().check(a)?;
    model.domain().check(b)?;
    if opts.quad_points == 0 {
        return Err(Error::usage("quad_points must be positive"));
    }
    let lower_bound_tv = model.measure(a)?.sub(&model.measure(b)?)?.tv_norm();
    if a == b {
        return Ok(PathResult {
            nodes: vec![a.to_vec(), b.to_vec()],
            length: 0.0,
            lower_bound_tv,
            iterations: 0,
            converged: true,
            degenerate_segments: Vec::new(),
        });
    }
    let n = a.len();
    let k = opts.interior_nodes;
    let path = Path {
        model,
        a: a.to_vec(),
        b: b.to_vec(),
        n,
        q: opts.quad_points,
    };
    let straight: Vec<f64> = (1..=k)
        .flat_map(|i| {
            let s = i as f64 / (k + 1) as f64;
            a.iter()
                .zip(b)
                .map(move |(u, v)| u + s * (v - u))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut start = straight;
    if k > 0 && n <= 2 && opts.lattice_init > 1 {
        if let Some(x0) = lattice_init(model, a, b, k, opts.lattice_init)? {
            if path.segments(&x0)?.iter().sum::<f64>() < path.segments(&start)?.iter().sum::<f64>()
            {
                start = x0;
            }
        }
    }
    let Optimized {
        x,
        f,
        iterations,
        converged,
    } = optimize(&path, start, opts)?;
    let mut nodes = vec![a.to_vec()];
    nodes.extend(x.chunks(n).map(<[f64]>::to_vec));
    nodes.push(b.to_vec());
    let mut degenerate_segments = Vec::new();
    for (i, w) in nodes.windows(2).enumerate() {
        let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(u, v)| 0.5 * (u + v)).collect();
        let fm = fisher_matrix(model, &model.domain().project(&mid))?;
        let lmax = fm.eigenvalues.last().copied().unwrap_or(0.0);
        if fm.eigenvalues.first().copied().unwrap_or(0.0) <= tol::eigen_tol(lmax) {
            degenerate_segments.push(i);
        }
    }
    Ok(PathResult {
        nodes,
        length: f,
        lower_bound_tv,
        iterations,
        converged,
        degenerate_segments,
    })
}

struct Optimized {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn optimize(path: &Path, mut x: Vec<f64>, opts: &DistanceOptions) -> Result<Optimized> {
    let mut f: f64 = path.segments(&x)?.iter().sum();
    let mut iterations = 0;
    if x.is_empty() {
        return Ok(Optimized {
            x,
            f,
            iterations,
            converged: true,
        });
    }
    let mut converged = false;
    let m = x.len();
    let mut g = path.gradient(&x)?;
    let mut hinv: Vec<f64> = identity(m);
    let mut first = true;
    let mut quiet = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut d = matvec(&hinv, &g, m);
        if dot(&d, &g) >= 0.0 {
            hinv = identity(m);
            d = g.clone();
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + step * d).collect();
            path.project(&mut xn);
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let fnew: f64 = path.segments(&xn)?.iter().sum();
            if fnew.is_finite() && fnew <= f + 1e-4 * dot(&g, &s).min(0.0) && fnew <= f {
                accepted = Some((xn, s, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, s, fnew)) = accepted else {
            converged = true;
            break;
        };
        let gn = path.gradient(&xn)?;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if first {
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
                first = false;
            }
            bfgs_update(&mut hinv, &s, &y, sy, m);
        }
        let improvement = (f - fnew) / f.max(f64::MIN_POSITIVE);
        x = xn;
        g = gn;
        f = fnew;
        if improvement < opts.tol {
            quiet += 1;
            if quiet >= 2 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(Optimized {
        x,
        f,
        iterations,
        converged,
    })
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Interior nodes from the shortest a → b path on a `per_axis`-point
/// lattice over the domain box (king-move neighbours, trapezoid edge
/// lengths), resampled to equal Fisher arc length. `None` when a or b has
/// no lattice neighbour.
fn lattice_init(
    model: &dyn ParamModel,
    a: &[f64],
    b: &[f64],
    k: usize,
    per_axis: usize,
) -> Result<Option<Vec<f64>>> {
    let n = a.len();
    let (lo, hi) = (model.domain().lo(), model.domain().hi());
    let h: Vec<f64> = (0..n)
        .map(|i| (hi[i] - lo[i]) / (per_axis - 1) as f64)
        .collect();
    let mut pts: Vec<Vec<f64>> = vec![a.to_vec(), b.to_vec()];
    let total = per_axis.pow(n as u32);
    for idx in 0..total {
        let mut rest = idx;
        let p: Vec<f64> = (0..n)
            .map(|i| {
                let c = rest % per_axis;
                rest /= per_axis;
                lo[i] + h[i] * c as f64
            })
            .collect();
        let p = model.domain().project(&p);
        if model.domain().contains(&p) {
            pts.push(p);
        }
    }
    let mut mats = Vec::with_capacity(pts.len());
    for p in &pts {
        mats.push(fisher_matrix(model, p)?.matrix);
    }
    let norm = |m: &Vec<Vec<f64>>, d: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += d[i] * m[i][j] * d[j];
            }
        }
        s.max(0.0).sqrt()
    };
    // Neighbours: all points within 1.5 cells in every coordinate.
    let near = |u: &[f64], v: &[f64]| (0..n).all(|i| (u[i] - v[i]).abs() <= 1.5 * h[i]);
    let mut dist = vec![f64::INFINITY; pts.len()];
    let mut prev = vec![usize::MAX; pts.len()];
    let mut heap = std::collections::BinaryHeap::new();
    dist[0] = 0.0;
    heap.push(HeapItem(0.0, 0));
    while let Some(HeapItem(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        if u == 1 {
            break;
        }
        for v in 0..pts.len() {
            if v == u || !near(&pts[u], &pts[v]) {
                continue;
            }
            let d: Vec<f64> = pts[v].iter().zip(&pts[u]).map(|(x, y)| x - y).collect();
            let w = 0.5 * (norm(&mats[u], &d) + norm(&mats[v], &d));
            if du + w < dist[v] {
                dist[v] = du + w;
                prev[v] = u;
                heap.push(HeapItem(dist[v], v));
            }
        }
    }
    if !dist[1].is_finite() {
        return Ok(None);
    }
    let mut chain = vec![1];
    while *chain.last().unwrap() != 0 {
        chain.push(prev[*chain.last().unwrap()]);
    }
    chain.reverse();
    let arc: Vec<f64> = chain.iter().map(|&i| dist[i]).collect();
    let euclid: Vec<f64> = chain
        .iter()
        .scan((0.0, chain[0]), |(acc, last), &i| {
            *acc += pts[i]
                .iter()
                .zip(&pts[*last])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            *last = i;
            Some(*acc)
        })
        .collect();
    let s = if arc[arc.len() - 1] > 0.0 {
        arc
    } else {
        euclid
    };
    let len = s[s.len() - 1];
    let mut x = Vec::with_capacity(k * n);
    let mut seg = 0;
    for j in 1..=k {
        let target = len * j as f64 / (k + 1) as f64;
        while seg + 2 < s.len() && s[seg + 1] < target {
            seg += 1;
        }
        let span = s[seg + 1] - s[seg];
        let w = if span > 0.0 {
            ((target - s[seg]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (p, q) = (&pts[chain[seg]], &pts[chain[seg + 1]]);
        x.extend(p.iter().zip(q).map(|(u, v)| u + w * (v - u)));
    }
    Ok(Some(x))
}

fn identity(m: usize) -> Vec<f64> {
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        h[i * m + i] = 1.0;
    }
    h
}

fn matvec(h: &[f64], v: &[f64], m: usize) -> Vec<f64> {
    (0..m).map(|i| dot(&h[i * m..(i + 1) * m], v)).collect()
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, m: usize) {
    let hy = matvec(h, y, m);
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..m {
        for j in 0..m {
            h[i * m + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub points: Vec<Vec<f64>>,
    /// distances[i][j] estimates ρ_g(θ_i, θ_j).
    pub distances: Vec<Vec<f64>>,
    pub axiom_tol: f64,
    pub max_symmetry_gap: f64,
    pub max_triangle_excess: f64,
    pub max_identity: f64,
    pub symmetric: bool,
    pub triangle: bool,
    pub identity: bool,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.symmetric && self.triangle && self.identity
    }
}

/// Symmetry, triangle inequality and identity of the distance estimates on
/// `points`, within axiom_tol = 2 · optimizer_tol · (largest distance).
pub fn metric_axiom_check(
    model: &dyn ParamModel,
    points: &[Vec<f64>],
    opts: &DistanceOptions,
) -> Result<AxiomReport> {
    if points.len() < 3 {
        return Err(Error::usage("the axiom check needs at least 3 points"));
    }
    let m = points.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            d[i][j] = fisher_distance(model, &points[i], &points[j], opts)?.length;
        }
    }
    let scale = d.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
    let axiom_tol = 2.0 * opts.tol * scale;
    let mut sym = 0.0f64;
    let mut tri = f64::NEG_INFINITY;
    let mut ident = 0.0f64;
    for i in 0..m {
        ident = ident.max(d[i][i]);
        for j in 0..m {
            sym = sym.max((d[i][j] - d[j][i]).abs());
            for k in 0..m {
                tri = tri.max(d[i][k] - d[i][j] - d[j][k]);
            }
        }
    }
    Ok(AxiomReport {
        points: points.to_vec(),
        distances: d,
        axiom_tol,
        max_symmetry_gap: sym,
        max_triangle_excess: tri,
        max_identity: ident,
        symmetric: sym <= axiom_tol,
        triangle: tri <= axiom_tol,
        identity: ident <= axiom_tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TvBoundReport {
    pub distance_estimate: f64,
    pub tv: f64,
    pub holds: bool,
}

/// Checks distance_estimate ≥ ‖p(θ₁) − p(θ₂)‖_TV − quad_tol.
pub fn tv_bound_check(
    model: &dyn ParamModel,
    a: &[f64],
    b: &[f64],
    opts: &DistanceOptions,
) -> Result<TvBoundReport> {
    let r = fisher_distance(model, a, b, opts)?;
    Ok(TvBoundReport {
        distance_estimate: r.length,
        tv: r.lower_bound_tv,
        holds: r.length >= r.lower_bound_tv - tol::QUAD_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{from_id, Bernoulli, Categorical};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arcsin_len(p: f64, q: f64) -> f64 {
        2.0 * (q.sqrt().asin() - p.sqrt().asin()).abs()
    }

    fn sphere(p: &[f64], q: &[f64]) -> f64 {
        let mut pp = p.to_vec();
        pp.push(1.0 - p.iter().sum::<f64>());
        let mut qq = q.to_vec();
        qq.push(1.0 - q.iter().sum::<f64>());
        2.0 * pp
            .iter()
            .zip(&qq)
            .map(|(a, b)| (a * b).sqrt())
            .sum::<f64>()
            .min(1.0)
            .acos()
    }

    #[test]
    fn bernoulli_line_length() {
        let m = Bernoulli::new();
        let c = CurveInModel::new(vec![vec![0.25], vec![0.75]]).unwrap();
        let l = curve_length(&m, &c, 8).unwrap();
        // 2(arcsin √0.75 − arcsin √0.25) = π/3
        assert!((l - std::f64::consts::FRAC_PI_3).abs() < 1e-3);
        assert!((curve_length(&m, &c.reversed(), 8).unwrap() - l).abs() < 1e-10);
        let flat = CurveInModel::new(vec![vec![0.3], vec![0.3], vec![0.3]]).unwrap();
        assert_eq!(curve_length(&m, &flat, 8).unwrap(), 0.0);
    }

    #[test]
    fn length_is_invariant_under_knot_respacing() {
        let m = Categorical::new(3).unwrap();
        let nodes = vec![
            vec![0.2, 0.3],
            vec![0.4, 0.3],
            vec![0.5, 0.1],
            vec![0.2, 0.2],
        ];
        let even = CurveInModel::new(nodes.clone()).unwrap();
        let warped = CurveInModel::with_knots(nodes, vec![0.0, 0.05, 0.4, 1.0]).unwrap();
        let a = curve_length(&m, &even, 8).unwrap();
        let b = curve_length(&m, &warped, 8).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn bernoulli_distance_is_the_straight_segment() {
        let m = Bernoulli::new();
        let r = fisher_distance(&m, &[0.25], &[0.75], &DistanceOptions::default()).unwrap();
        assert!(
            (r.length - arcsin_len(0.25, 0.75)).abs() < 1e-6,
            "{}",
            r.length
        );
        assert!(r.converged);
        let line = curve_length(
            &m,
            &CurveInModel::new(vec![vec![0.25], vec![0.75]]).unwrap(),
            8,
        )
        .unwrap();
        assert!((r.length - line).abs() < 1e-6);
        let tv = tv_bound_check(&m, &[0.25], &[0.75], &DistanceOptions::default()).unwrap();
        assert!((tv.tv - 1.0).abs() < 1e-15);
        assert!(tv.holds);
        let same = fisher_distance(&m, &[0.4], &[0.4], &DistanceOptions::default()).unwrap();
        assert_eq!(same.length, 0.0);
    }

    #[test]
    fn categorical_matches_sphere_geodesic() {
        let m = Categorical::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let p = m.domain().sample(&mut rng, 0.1);
            let q = m.domain().sample(&mut rng, 0.1);
            let r = fisher_distance(&m, &p, &q, &DistanceOptions::default()).unwrap();
            let want = sphere(&p, &q);
            assert!(
                (r.length - want).abs() <= 0.01 * want,
                "{p:?} {q:?}: {} vs {want}",
                r.length
            );
            assert!(r.length >= want - 1e-9);
        }
    }

    #[test]
    fn refining_nodes_does_not_lengthen() {
        let m = Categorical::new(3).unwrap();
        let (p, q) = ([0.8, 0.1], [0.1, 0.1]);
        let mut last = f64::INFINITY;
        for k in [2, 4, 8] {
            let o = DistanceOptions {
                interior_nodes: k,
                ..Default::default()
            };
            let l = fisher_distance(&m, &p, &q, &o).unwrap().length;
            assert!(l <= last + tol::OPTIMIZER_TOL * l);
            last = l;
        }
    }

    #[test]
    fn axioms_on_bernoulli_triple() {
        let m = Bernoulli::new();
        let pts = vec![vec![0.2], vec![0.5], vec![0.8]];
        let r = metric_axiom_check(&m, &pts, &DistanceOptions::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        let dup = vec![vec![0.3], vec![0.3], vec![0.6]];
        let r = metric_axiom_check(&m, &dup, &DistanceOptions::default()).unwrap();
        assert_eq!(r.distances[0][1], 0.0);
        assert!(r.passed());
    }

    #[test]
    fn mixture_tv_bound() {
        let m = from_id("mixture").unwrap();
        let r = tv_bound_check(
            m.as_ref(),
            &[0.5, 1.0],
            &[0.5, 2.0],
            &DistanceOptions::default(),
        )
        .unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.tv > 0.0);
    }
}
