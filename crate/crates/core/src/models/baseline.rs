use std::f64::consts::PI;
use std::sync::Arc;

use super::{ParamDomain, ParamModel};
use crate::error::{Error, Result};
use crate::measure::SampleSpace;
use crate::quadrature::{uniform_breaks, QuadRule};

const EPS: f64 = 1e-6;

fn gaussian_grid(lo: f64, hi: f64, panel: f64, order: usize) -> Arc<SampleSpace> {
    let panels = ((hi - lo) / panel).round() as usize;
    Arc::new(
        SampleSpace::grid1d_breaks(
            &uniform_breaks(lo, hi, panels),
            QuadRule::GaussLegendre { order },
        )
        .unwrap(),
    )
}

fn std_normal(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Bernoulli(p) on two atoms, density (1 − p, p).
#[derive(Debug, Clone)]
pub struct Bernoulli {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl Bernoulli {
    pub fn new() -> Self {
        Bernoulli {
            domain: ParamDomain::closed_box(vec![EPS], vec![1.0 - EPS]),
            space: Arc::new(SampleSpace::finite(2).unwrap()),
        }
    }
}

impl Default for Bernoulli {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for Bernoulli {
    fn id(&self) -> String {
        "bernoulli".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        vec![1.0 - theta[0], theta[0]]
    }

    fn jacobian_unchecked(&self, _theta: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![-1.0, 1.0]]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }

    fn params_from_frequencies(&self, freq: &[f64]) -> Option<Vec<f64>> {
        Some(vec![freq[1]])
    }
}

/// Categorical distribution on m atoms in the chart θ = (p_1, …, p_{m−1}).
#[derive(Debug, Clone)]
pub struct Categorical {
    m: usize,
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl Categorical {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::usage("a categorical family needs at least 2 atoms"));
        }
        Ok(Categorical {
            m,
            domain: ParamDomain::simplex(m - 1, EPS),
            space: Arc::new(SampleSpace::finite(m)?),
        })
    }

    pub fn atoms(&self) -> usize {
        self.m
    }
}

impl ParamModel for Categorical {
    fn id(&self) -> String {
        format!("categorical:{}", self.m)
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let mut p = theta.to_vec();
        p.push(1.0 - theta.iter().sum::<f64>());
        p
    }

    fn jacobian_unchecked(&self, _theta: &[f64]) -> Vec<Vec<f64>> {
        (0..self.m - 1)
            .map(|i| {
                let mut row = vec![0.0; self.m];
                row[i] = 1.0;
                row[self.m - 1] = -1.0;
                row
            })
            .collect()
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }

    fn params_from_frequencies(&self, freq: &[f64]) -> Option<Vec<f64>> {
        Some(freq[..self.m - 1].to_vec())
    }
}

/// Two independent Bernoulli coordinates on atoms 00, 01, 10, 11.
#[derive(Debug, Clone)]
pub struct BernoulliPair {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl BernoulliPair {
    pub fn new() -> Self {
        BernoulliPair {
            domain: ParamDomain::closed_box(vec![EPS; 2], vec![1.0 - EPS; 2]),
            space: Arc::new(SampleSpace::finite(4).unwrap()),
        }
    }
}

impl Default for BernoulliPair {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for BernoulliPair {
    fn id(&self) -> String {
        "bernoulli-pair".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let (a, b) = (theta[0], theta[1]);
        vec![(1.0 - a) * (1.0 - b), (1.0 - a) * b, a * (1.0 - b), a * b]
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let (a, b) = (theta[0], theta[1]);
        vec![
            vec![-(1.0 - b), -b, 1.0 - b, b],
            vec![-(1.0 - a), 1.0 - a, -a, a],
        ]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }

    fn params_from_frequencies(&self, freq: &[f64]) -> Option<Vec<f64>> {
        Some(vec![freq[2] + freq[3], freq[1] + freq[3]])
    }
}

/// N(μ, σ²) with μ ∈ [−3, 3], σ ∈ [0.25, 3] on the grid [−27, 27].
#[derive(Debug, Clone)]
pub struct GaussLocScale {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl GaussLocScale {
    pub fn new() -> Self {
        GaussLocScale {
            domain: ParamDomain::closed_box(vec![-3.0, 0.25], vec![3.0, 3.0]),
            space: gaussian_grid(-27.0, 27.0, 0.5, 12),
        }
    }
}

impl Default for GaussLocScale {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for GaussLocScale {
    fn id(&self) -> String {
        "gauss-loc-scale".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let (mu, s) = (theta[0], theta[1]);
        self.space
            .coords()
            .iter()
            .map(|x| std_normal((x - mu) / s) / s)
            .collect()
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let (mu, s) = (theta[0], theta[1]);
        let mut dmu = Vec::with_capacity(self.space.len());
        let mut ds = Vec::with_capacity(self.space.len());
        for x in self.space.coords() {
            let z = (x - mu) / s;
            let p = std_normal(z) / s;
            dmu.push(p * z / s);
            ds.push(p * (z * z - 1.0) / s);
        }
        vec![dmu, ds]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }
}

/// N(θ, 1) with θ ∈ [−3, 3] on the grid [−11, 11].
#[derive(Debug, Clone)]
pub struct GaussLoc {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl GaussLoc {
    pub fn new() -> Self {
        GaussLoc {
            domain: ParamDomain::closed_box(vec![-3.0], vec![3.0]),
            space: gaussian_grid(-11.0, 11.0, 1.0, 10),
        }
    }
}

impl Default for GaussLoc {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for GaussLoc {
    fn id(&self) -> String {
        "gauss-loc".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        self.space
            .coords()
            .iter()
            .map(|x| std_normal(x - theta[0]))
            .collect()
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        vec![self
            .space
            .coords()
            .iter()
            .map(|x| (x - theta[0]) * std_normal(x - theta[0]))
            .collect()]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }
}

/// Bivariate N(θ, I) with θ ∈ [−2, 2]² on the square [−10, 10]².
#[derive(Debug, Clone)]
pub struct GaussLoc2 {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl GaussLoc2 {
    pub fn new() -> Self {
        GaussLoc2 {
            domain: ParamDomain::closed_box(vec![-2.0; 2], vec![2.0; 2]),
            space: Arc::new(
                SampleSpace::grid2d(
                    [-10.0, 10.0],
                    [-10.0, 10.0],
                    80,
                    QuadRule::GaussLegendre { order: 10 },
                )
                .unwrap(),
            ),
        }
    }

    fn factors(&self, theta: &[f64]) -> [(Vec<f64>, Vec<f64>); 2] {
        [0, 1].map(|axis| {
            let nodes = self.space.axis_nodes(axis);
            let p: Vec<f64> = nodes.iter().map(|x| std_normal(x - theta[axis])).collect();
            let dp = nodes
                .iter()
                .zip(&p)
                .map(|(x, p)| (x - theta[axis]) * p)
                .collect();
            (p, dp)
        })
    }
}

impl Default for GaussLoc2 {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for GaussLoc2 {
    fn id(&self) -> String {
        "gauss-loc2".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let [(px, _), (py, _)] = self.factors(theta);
        px.iter()
            .flat_map(|a| py.iter().map(move |b| a * b))
            .collect()
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let [(px, dx), (py, dy)] = self.factors(theta);
        vec![
            dx.iter()
                .flat_map(|a| py.iter().map(move |b| a * b))
                .collect(),
            px.iter()
                .flat_map(|a| dy.iter().map(move |b| a * b))
                .collect(),
        ]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_examples() {
        assert_eq!(Bernoulli::new().density(&[0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            Categorical::new(3).unwrap().density(&[0.2, 0.3]).unwrap(),
            vec![0.2, 0.3, 0.5]
        );
        let g = GaussLocScale::new();
        let d = g.density_unchecked(&[0.0, 1.0]);
        let x = g.space().coords();
        let k = x
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        let want = (-0.5 * x[k] * x[k]).exp() / (2.0 * PI).sqrt();
        assert!((d[k] - want).abs() < 1e-15);
        assert_eq!(std_normal(0.0), 1.0 / (2.0 * PI).sqrt());
        assert!(d.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn boundary_parameters_are_rejected() {
        assert!(Bernoulli::new().density(&[0.0]).is_err());
        assert!(Bernoulli::new().density(&[1.0]).is_err());
        assert!(Categorical::new(3).unwrap().density(&[0.5, 0.5]).is_err());
        assert!(GaussLocScale::new().density(&[0.0, 0.1]).is_err());
    }
}
