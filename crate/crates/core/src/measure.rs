//! Sample spaces, finite signed measures and tangent vectors.
//!
//! A [`SampleSpace`] is either a finite set of atoms with counting measure
//! or a quadrature grid whose weights approximate Lebesgue measure. A
//! [`Measure`] stores its density with respect to those reference weights,
//! so every integral is a weighted sum over nodes in a fixed order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadRule};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    Finite {
        atoms: usize,
    },
    Grid1d {
        lo: f64,
        hi: f64,
        rule: QuadRule,
    },
    Grid2d {
        x: [f64; 2],
        y: [f64; 2],
        rule: QuadRule,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Axis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    backend: Backend,
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    axes: Vec<Axis>,
}

impl SampleSpace {
    /// `m` atoms with counting measure.
    pub fn finite(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain(
                "a finite sample space needs at least one atom",
            ));
        }
        Ok(SampleSpace {
            backend: Backend::Finite { atoms: m },
            dim: 1,
            coords: (0..m).map(|i| i as f64).collect(),
            weights: vec![1.0; m],
            axes: Vec::new(),
        })
    }

    /// Composite grid on [lo, hi] with at least `nodes` nodes. Gauss-Legendre
    /// grids use `ceil(nodes / order)` equal panels.
    pub fn grid1d(lo: f64, hi: f64, nodes: usize, rule: QuadRule) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::domain("a grid needs at least 2 nodes"));
        }
        let panels = match rule {
            QuadRule::GaussLegendre { order } => nodes.div_ceil(order.max(1)),
            QuadRule::Trapezoid => nodes - 1,
        };
        Self::grid1d_breaks(&quadrature::uniform_breaks(lo, hi, panels), rule)
    }

    /// Composite grid over arbitrary panel breakpoints (e.g. graded meshes).
    pub fn grid1d_breaks(breaks: &[f64], rule: QuadRule) -> Result<Self> {
        let (nodes, weights) = quadrature::composite(breaks, rule)?;
        let space = SampleSpace {
            backend: Backend::Grid1d {
                lo: breaks[0],
                hi: *breaks.last().unwrap(),
                rule,
            },
            dim: 1,
            coords: nodes.clone(),
            weights: weights.clone(),
            axes: vec![Axis { nodes, weights }],
        };
        space.validate()?;
        Ok(space)
    }

    /// Tensor-product grid on a rectangle with `nodes_per_axis` nodes per axis.
    /// Node index is `i * ny + j` for x-node `i` and y-node `j`.
    pub fn grid2d(x: [f64; 2], y: [f64; 2], nodes_per_axis: usize, rule: QuadRule) -> Result<Self> {
        let gx = Self::grid1d(x[0], x[1], nodes_per_axis, rule)?;
        let gy = Self::grid1d(y[0], y[1], nodes_per_axis, rule)?;
        let ax = gx.axes.into_iter().next().unwrap();
        let ay = gy.axes.into_iter().next().unwrap();
        let mut coords = Vec::with_capacity(2 * ax.nodes.len() * ay.nodes.len());
        let mut weights = Vec::with_capacity(ax.nodes.len() * ay.nodes.len());
        for (xi, wx) in ax.nodes.iter().zip(&ax.weights) {
            for (yj, wy) in ay.nodes.iter().zip(&ay.weights) {
                coords.push(*xi);
                coords.push(*yj);
                weights.push(wx * wy);
            }
        }
        let space = SampleSpace {
            backend: Backend::Grid2d { x, y, rule },
            dim: 2,
            coords,
            weights,
            axes: vec![ax, ay],
        };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::domain(
                "reference weights must be positive and finite",
            ));
        }
        for axis in &self.axes {
            if axis.nodes.len() < 2 {
                return Err(Error::domain("a grid needs at least 2 nodes per axis"));
            }
            if axis.nodes.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("grid nodes must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.backend, Backend::Finite { .. })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dimension of a node's coordinates (1 for atoms and 1-D grids).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates of node `i` (the atom index for finite spaces).
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// All node coordinates, flattened row-major.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Per-axis nodes for grid backends (empty for finite spaces).
    pub fn axis_nodes(&self, axis: usize) -> &[f64] {
        &self.axes[axis].nodes
    }
}

/// A finite signed measure given by its density with respect to the
/// reference weights of its sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    space: Arc<SampleSpace>,
    density: Vec<f64>,
    signed: bool,
}

impl Measure {
    /// Nonnegative measure; rejects negative or non-finite densities.
    pub fn nonnegative(space: Arc<SampleSpace>, density: Vec<f64>) -> Result<Self> {
        check_len(&space, &density)?;
        if let Some(i) = density.iter().position(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::domain(format!(
                "density at node {i} is {} (must be finite, >= 0)",
                density[i]
            )));
        }
        Ok(Measure {
            space,
            density,
            signed: false,
        })
    }

    pub fn signed(space: Arc<SampleSpace>, density: Vec<f64>) -> Result<Self> {
        check_len(&space, &density)?;
        if density.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("signed density must be finite"));
        }
        Ok(Measure {
            space,
            density,
            signed: true,
        })
    }

    /// Probability measure: nonnegative with total mass 1 within `MASS_TOL`.
    pub fn probability(space: Arc<SampleSpace>, density: Vec<f64>) -> Result<Self> {
        let m = Self::nonnegative(space, density)?;
        let mass = m.total_mass();
        if (mass - 1.0).abs() > tol::MASS_TOL {
            return Err(Error::domain(format!("total mass {mass} differs from 1")));
        }
        Ok(m)
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn is_probability(&self) -> bool {
        !self.signed && (self.total_mass() - 1.0).abs() <= tol::MASS_TOL
    }

    /// Mass of each node: density times reference weight.
    pub fn masses(&self) -> Vec<f64> {
        self.density
            .iter()
            .zip(self.space.weights())
            .map(|(d, w)| d * w)
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.space.weights())
            .fold(0.0, |acc, (d, w)| acc + d * w)
    }

    /// Total variation norm |μ|(X).
    pub fn tv_norm(&self) -> f64 {
        tv_norm(self)
    }

    pub fn same_space(&self, other: &Measure) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn require_same_space(&self, other: &Measure) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::usage("measures live on different sample spaces"))
        }
    }

    /// a·self + b·other as a signed measure.
    pub fn combine(&self, a: f64, other: &Measure, b: f64) -> Result<Measure> {
        self.require_same_space(other)?;
        let density = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Measure::signed(self.space.clone(), density)
    }

    pub fn sub(&self, other: &Measure) -> Result<Measure> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Measure {
        Measure {
            space: self.space.clone(),
            density: self.density.iter().map(|d| a * d).collect(),
            signed: self.signed || a < 0.0,
        }
    }

    /// Signed view of the same density.
    pub fn into_signed(mut self) -> Measure {
        self.signed = true;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeasureDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Measure> {
        let doc: MeasureDoc = serde_json::from_str(text)?;
        doc.into_measure()
    }
}

fn check_len(space: &SampleSpace, density: &[f64]) -> Result<()> {
    if density.len() != space.len() {
        return Err(Error::usage(format!(
            "density has {} entries but the space has {} nodes",
            density.len(),
            space.len()
        )));
    }
    Ok(())
}

/// Σ_i |density_i| · weight_i.
pub fn tv_norm(mu: &Measure) -> f64 {
    mu.density
        .iter()
        .zip(mu.space.weights())
        .fold(0.0, |acc, (d, w)| acc + d.abs() * w)
}

/// ∫ f dμ for node values `f`. Non-finite values are tolerated only on
/// nodes carrying no mass.
pub fn integrate(f: &[f64], mu: &Measure) -> Result<f64> {
    check_len(&mu.space, f)?;
    let mut acc = 0.0;
    for (i, ((fi, d), w)) in f
        .iter()
        .zip(&mu.density)
        .zip(mu.space.weights())
        .enumerate()
    {
        if *d == 0.0 {
            continue;
        }
        if !fi.is_finite() {
            return Err(Error::domain(format!(
                "integrand is {fi} at node {i} where the measure has mass"
            )));
        }
        acc += fi * d * w;
    }
    Ok(acc)
}

/// ∫ f dμ for a function of node coordinates.
pub fn integrate_fn<F: Fn(&[f64]) -> f64>(f: F, mu: &Measure) -> Result<f64> {
    let values: Vec<f64> = (0..mu.space.len()).map(|i| f(mu.space.point(i))).collect();
    integrate(&values, mu)
}

/// Radon-Nikodym derivative dν/dξ on the nodes where ξ is positive.
///
/// Nodes where ξ's density is at most `DOMINANCE_TOL` get value 0 unless ν
/// charges them, in which case the offending nodes are reported.
pub fn radon_nikodym(nu: &Measure, xi: &Measure) -> Result<Vec<f64>> {
    radon_nikodym_with(nu, xi, tol::DOMINANCE_TOL)
}

pub fn radon_nikodym_with(nu: &Measure, xi: &Measure, dominance_tol: f64) -> Result<Vec<f64>> {
    nu.require_same_space(xi)?;
    let mut out = Vec::with_capacity(nu.density.len());
    let mut bad = Vec::new();
    for (i, (n, x)) in nu.density.iter().zip(&xi.density).enumerate() {
        if *x > dominance_tol {
            out.push(n / x);
        } else {
            if n.abs() > dominance_tol {
                bad.push(i);
            }
            out.push(0.0);
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::NotDominated { nodes: bad })
    }
}

/// A tangent vector at a probability measure ξ, stored through its
/// logarithmic representation dv/dξ.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Measure,
    log_rep: Vec<f64>,
}

impl TangentVector {
    /// Validates finiteness and the zero-mass condition ∫ log_rep dξ = 0.
    pub fn new(base: Measure, log_rep: Vec<f64>) -> Result<Self> {
        check_len(&base.space, &log_rep)?;
        if base.signed {
            return Err(Error::usage(
                "tangent vectors need a probability base measure",
            ));
        }
        for (i, (l, d)) in log_rep.iter().zip(&base.density).enumerate() {
            if *d > tol::DOMINANCE_TOL && !l.is_finite() {
                return Err(Error::domain(format!(
                    "log-representation is {l} at node {i}"
                )));
            }
        }
        let mass = integrate(&log_rep, &base)?;
        if mass.abs() > tol::QUAD_TOL {
            return Err(Error::domain(format!(
                "tangent vector has nonzero total mass {mass:.3e}"
            )));
        }
        Ok(TangentVector { base, log_rep })
    }

    /// The signed measure ν = log_rep · ξ viewed as a tangent vector at ξ.
    pub fn from_measure(nu: &Measure, base: Measure) -> Result<Self> {
        let log_rep = radon_nikodym(nu, &base)?;
        Self::new(base, log_rep)
    }

    pub fn zero(base: Measure) -> Result<Self> {
        let n = base.space.len();
        Self::new(base, vec![0.0; n])
    }

    pub fn base(&self) -> &Measure {
        &self.base
    }

    pub fn log_rep(&self) -> &[f64] {
        &self.log_rep
    }

    /// The tangent as a signed measure log_rep · ξ.
    pub fn as_measure(&self) -> Measure {
        let density = self
            .log_rep
            .iter()
            .zip(&self.base.density)
            .map(|(l, d)| l * d)
            .collect();
        Measure {
            space: self.base.space.clone(),
            density,
            signed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum NodesDoc {
    Scalar(Vec<f64>),
    Planar(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    backend: Backend,
    nodes: NodesDoc,
    densities: Vec<f64>,
    reference_weights: Vec<f64>,
    #[serde(default)]
    signed: bool,
}

impl From<&Measure> for MeasureDoc {
    fn from(m: &Measure) -> Self {
        let s = &m.space;
        let nodes = if s.dim == 2 {
            NodesDoc::Planar(s.coords.chunks(2).map(|c| [c[0], c[1]]).collect())
        } else {
            NodesDoc::Scalar(s.coords.clone())
        };
        MeasureDoc {
            backend: s.backend.clone(),
            nodes,
            densities: m.density.clone(),
            reference_weights: s.weights.clone(),
            signed: m.signed,
        }
    }
}

impl MeasureDoc {
    fn into_measure(self) -> Result<Measure> {
        let n = self.reference_weights.len();
        let (dim, coords) = match self.nodes {
            NodesDoc::Scalar(v) => (1, v),
            NodesDoc::Planar(v) => (2, v.into_iter().flatten().collect::<Vec<_>>()),
        };
        if coords.len() != dim * n {
            return Err(Error::usage("node and weight counts disagree"));
        }
        let axes = match &self.backend {
            Backend::Finite { atoms } => {
                if *atoms != n || coords.iter().enumerate().any(|(i, c)| *c != i as f64) {
                    return Err(Error::usage("finite backend must list atoms 0..m-1"));
                }
                Vec::new()
            }
            Backend::Grid1d { .. } => vec![Axis {
                nodes: coords.clone(),
                weights: self.reference_weights.clone(),
            }],
            Backend::Grid2d { .. } => {
                let xs: Vec<f64> = {
                    let mut v: Vec<f64> = coords.chunks(2).map(|c| c[0]).collect();
                    v.dedup();
                    v
                };
                let ny = if xs.is_empty() { 0 } else { n / xs.len() };
                let ys: Vec<f64> = coords.chunks(2).take(ny).map(|c| c[1]).collect();
                if xs.len() * ys.len() != n {
                    return Err(Error::usage("planar nodes are not a tensor grid"));
                }
                // Per-axis weights are not recoverable from products alone; keep nodes only.
                vec![
                    Axis {
                        nodes: xs.clone(),
                        weights: vec![1.0; xs.len()],
                    },
                    Axis {
                        nodes: ys.clone(),
                        weights: vec![1.0; ys.len()],
                    },
                ]
            }
        };
        let space = SampleSpace {
            backend: self.backend,
            dim,
            coords,
            weights: self.reference_weights,
            axes,
        };
        space.validate()?;
        let space = Arc::new(space);
        if self.signed {
            Measure::signed(space, self.densities)
        } else {
            Measure::nonnegative(space, self.densities)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite(m: usize) -> Arc<SampleSpace> {
        Arc::new(SampleSpace::finite(m).unwrap())
    }

    fn std_normal_grid() -> Measure {
        let space = Arc::new(
            SampleSpace::grid1d(-5.0, 5.0, 400, QuadRule::GaussLegendre { order: 10 }).unwrap(),
        );
        let density = (0..space.len())
            .map(|i| {
                let x = space.point(i)[0];
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            })
            .collect();
        Measure::nonnegative(space, density).unwrap()
    }

    #[test]
    fn tv_norm_examples() {
        let s = finite(2);
        let p = Measure::probability(s.clone(), vec![0.3, 0.7]).unwrap();
        assert_eq!(p.tv_norm(), 1.0);
        let q = Measure::signed(s.clone(), vec![0.5, -0.5]).unwrap();
        assert_eq!(q.tv_norm(), 1.0);
        let a = Measure::probability(s.clone(), vec![0.7, 0.3]).unwrap();
        let d = a.sub(&p).unwrap();
        assert!((d.tv_norm() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn integrate_gaussian_moments() {
        let g = std_normal_grid();
        assert!((integrate_fn(|_| 1.0, &g).unwrap() - 0.999_999_426_696_856_3).abs() < 1e-12);
        assert!(integrate_fn(|x| x[0], &g).unwrap().abs() < tol::QUAD_TOL);
        // Truncation at ±5 removes 2∫_5^∞ x²φ = 2(5φ(5) + Q(5)) ≈ 1.54e-5 of the
        // second moment; the value below comes from an independent
        // high-resolution quadrature of x²φ on [-5, 5].
        let m2 = integrate_fn(|x| x[0] * x[0], &g).unwrap();
        assert!((m2 - 0.999_984_559_501_709_4).abs() < 1e-6, "{m2}");
    }

    #[test]
    fn integrate_rejects_non_finite_on_mass() {
        let s = finite(2);
        let p = Measure::probability(s, vec![0.0, 1.0]).unwrap();
        assert!(integrate(&[f64::INFINITY, 1.0], &p).is_ok());
        assert!(matches!(
            integrate(&[1.0, f64::NAN], &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn radon_nikodym_examples() {
        let s = finite(2);
        let xi = Measure::probability(s.clone(), vec![0.5, 0.5]).unwrap();
        assert_eq!(radon_nikodym(&xi, &xi).unwrap(), vec![1.0, 1.0]);
        let nu = Measure::signed(s.clone(), vec![-1.0, 1.0]).unwrap();
        assert_eq!(radon_nikodym(&nu, &xi).unwrap(), vec![-2.0, 2.0]);
        let point = Measure::probability(s.clone(), vec![1.0, 0.0]).unwrap();
        let other = Measure::probability(s, vec![0.5, 0.5]).unwrap();
        match radon_nikodym(&other, &point) {
            Err(Error::NotDominated { nodes }) => assert_eq!(nodes, vec![1]),
            other => panic!("expected NotDominated, got {other:?}"),
        }
    }

    #[test]
    fn tangent_requires_zero_mass() {
        let s = finite(2);
        let xi = Measure::probability(s, vec![0.5, 0.5]).unwrap();
        assert!(TangentVector::new(xi.clone(), vec![-2.0, 2.0]).is_ok());
        assert!(TangentVector::new(xi, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn space_mismatch_is_usage_error() {
        let a = Measure::probability(finite(2), vec![0.5, 0.5]).unwrap();
        let b = Measure::probability(finite(3), vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(a.sub(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn json_round_trip_grid() {
        let g = std_normal_grid();
        let back = Measure::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back.density(), g.density());
        assert_eq!(back.space().weights(), g.space().weights());
    }

    proptest! {
        #[test]
        fn finite_json_round_trip_is_bit_exact(d in prop::collection::vec(-1e3f64..1e3, 1..12)) {
            let m = Measure::signed(finite(d.len()), d.clone()).unwrap();
            let back = Measure::from_json(&m.to_json().unwrap()).unwrap();
            for (a, b) in back.density().iter().zip(&d) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert!(back.is_signed());
        }

        #[test]
        fn tv_is_a_norm_on_finite_spaces(
            a in prop::collection::vec(-10.0f64..10.0, 5),
            b in prop::collection::vec(-10.0f64..10.0, 5),
            c in -5.0f64..5.0,
        ) {
            let s = finite(5);
            let ma = Measure::signed(s.clone(), a).unwrap();
            let mb = Measure::signed(s, b).unwrap();
            let sum = ma.combine(1.0, &mb, 1.0).unwrap();
            prop_assert!(sum.tv_norm() <= ma.tv_norm() + mb.tv_norm() + 1e-12);
            prop_assert!((ma.scale(c).tv_norm() - c.abs() * ma.tv_norm()).abs() <= 1e-12 * (1.0 + ma.tv_norm()));
        }

        #[test]
        fn radon_nikodym_reconstructs_density(
            nu in prop::collection::vec(-3.0f64..3.0, 6),
            xi in prop::collection::vec(0.01f64..1.0, 6),
        ) {
            let s = finite(6);
            let total: f64 = xi.iter().sum();
            let xi = Measure::probability(s.clone(), xi.iter().map(|x| x / total).collect()).unwrap();
            let nu = Measure::signed(s, nu).unwrap();
            let rn = radon_nikodym(&nu, &xi).unwrap();
            for ((r, x), n) in rn.iter().zip(xi.density()).zip(nu.density()) {
                prop_assert!((r * x - n).abs() <= 1e-12 * n.abs().max(1.0));
            }
        }
    }
}
