use std::f64::consts::PI;
use std::sync::Arc;

use super::{ParamDomain, ParamModel};
use crate::error::{Error, Result};
use crate::measure::SampleSpace;
use crate::quadrature::{self, uniform_breaks, QuadRule};

const B_MAX: f64 = 6.0;
const X_MAX: f64 = 14.0;

/// p(x | a, b) = ((1 − a) e^{−x²/2} + a e^{−(x−b)²/2}) / √(2π), a ∈ [0, 1], b ∈ [−6, 6].
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
    phi0: Vec<f64>,
}

impl GaussianMixture {
    pub fn new() -> Self {
        let space = SampleSpace::grid1d_breaks(
            &uniform_breaks(-X_MAX, X_MAX, (2.0 * X_MAX) as usize),
            QuadRule::GaussLegendre { order: 10 },
        )
        .unwrap();
        let phi0 = space.coords().iter().map(|x| phi(*x)).collect();
        GaussianMixture {
            domain: ParamDomain::closed_box(vec![0.0, -B_MAX], vec![1.0, B_MAX]),
            space: Arc::new(space),
            phi0,
        }
    }

    fn parts(&self, b: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.space
            .coords()
            .iter()
            .zip(&self.phi0)
            .map(move |(x, p0)| (x - b, *p0, phi(x - b)))
    }
}

impl Default for GaussianMixture {
    fn default() -> Self {
        Self::new()
    }
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

impl ParamModel for GaussianMixture {
    fn id(&self) -> String {
        "mixture".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let a = theta[0];
        self.parts(theta[1])
            .map(|(_, p0, pb)| (1.0 - a) * p0 + a * pb)
            .collect()
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let a = theta[0];
        let (da, db) = self
            .parts(theta[1])
            .map(|(z, p0, pb)| (pb - p0, a * z * pb))
            .unzip();
        vec![da, db]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }
}

/// (α(t), β(t)) with α(t) = ∫_0^t dτ / log(τ²) and β(t) = t log(t²).
pub fn singular_reparam(t: f64) -> Result<(f64, f64)> {
    if !(t.abs() < 1.0) {
        return Err(Error::domain(format!(
            "reparameterization needs |t| < 1, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let alpha = quadrature::adaptive(
        |s| if s == 0.0 { 0.0 } else { 1.0 / (s * s).ln() },
        0.0,
        t,
        1e-12,
    )?;
    Ok((alpha, t * (t * t).ln()))
}

/// The mixture evaluated along t ↦ (α(t), β(t)), t ∈ (−1, 1).
///
/// α(t) is negative for t > 0, so the curve leaves the mixture domain and
/// its densities may dip slightly below zero far in the tails; measures are
/// therefore returned as signed.
#[derive(Debug, Clone)]
pub struct SingularCurve {
    mixture: GaussianMixture,
    domain: ParamDomain,
}

impl SingularCurve {
    pub fn new() -> Self {
        SingularCurve {
            mixture: GaussianMixture::new(),
            domain: ParamDomain::open_box(vec![-1.0], vec![1.0]),
        }
    }

    pub fn mixture(&self) -> &GaussianMixture {
        &self.mixture
    }
}

impl Default for SingularCurve {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for SingularCurve {
    fn id(&self) -> String {
        "singular-curve".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        self.mixture.space()
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let (a, b) = singular_reparam(theta[0]).expect("curve parameter in (-1, 1)");
        self.mixture.density_unchecked(&[a, b])
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let t = theta[0];
        if t == 0.0 {
            return vec![vec![0.0; self.space().len()]];
        }
        let (a, b) = singular_reparam(t).expect("curve parameter in (-1, 1)");
        let log = (t * t).ln();
        let (da, db) = (1.0 / log, log + 2.0);
        let jac = self.mixture.jacobian_unchecked(&[a, b]);
        vec![jac[0]
            .iter()
            .zip(&jac[1])
            .map(|(pa, pb)| pa * da + pb * db)
            .collect()]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }

    fn signed(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;

    #[test]
    fn a_zero_gives_standard_normal() {
        let m = GaussianMixture::new();
        for b in [-6.0, -1.0, 0.0, 2.5, 6.0] {
            let d = m.density(&[0.0, b]).unwrap();
            for (x, p) in m.space().coords().iter().zip(&d) {
                assert_eq!(*p, phi(*x));
            }
        }
    }

    #[test]
    fn partials_vanish_at_origin() {
        let m = GaussianMixture::new();
        let j = m.jacobian(&[0.0, 0.0]).unwrap();
        assert!(j.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn mixture_is_normalized() {
        let m = GaussianMixture::new();
        let mu = m.measure(&[0.5, 2.0]).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < crate::tol::MASS_TOL);
        assert!(m.density(&[0.5, 7.0]).is_err());
        assert!(m.density(&[1.5, 0.0]).is_err());
    }

    #[test]
    fn reparam_is_odd_and_vanishes_at_zero() {
        assert_eq!(singular_reparam(0.0).unwrap(), (0.0, 0.0));
        for t in [1e-4, 1e-2, 0.3, 0.9] {
            let (a, b) = singular_reparam(t).unwrap();
            let (am, bm) = singular_reparam(-t).unwrap();
            assert!((a + am).abs() <= 1e-14 * a.abs().max(1e-300), "{t}");
            assert_eq!(b, -bm);
        }
        assert!(singular_reparam(1.0).is_err());
        assert!(singular_reparam(-1.5).is_err());
    }

    #[test]
    fn alpha_matches_reference_values() {
        // Independent high-precision quadrature (mpmath) of 1/log(τ²) on [0, t].
        let cases = [
            (0.5, -0.189_335_521_530_543_99),
            (0.1, -0.016_194_894_796_645_51),
            (1e-3, -6.407_749_667_293_552e-5),
        ];
        for (t, want) in cases {
            let (a, _) = singular_reparam(t).unwrap();
            assert!((a - want).abs() < 1e-11, "α({t}) = {a}, want {want}");
        }
    }

    #[test]
    fn velocity_shrinks_instead_of_approaching_x_phi() {
        let c = SingularCurve::new();
        let space = c.space().clone();
        let target: Vec<f64> = space.coords().iter().map(|x| x * phi(*x)).collect();
        let target = Measure::signed(space.clone(), target).unwrap();
        let mut last = f64::INFINITY;
        for t in [1e-1, 1e-2, 1e-3] {
            for s in [t, -t] {
                let h = 1e-3 * t;
                let dp = c.density_unchecked(&[s + h]);
                let dm = c.density_unchecked(&[s - h]);
                let v: Vec<f64> = dp
                    .iter()
                    .zip(&dm)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                let v = Measure::signed(space.clone(), v).unwrap();
                let gap = v.sub(&target).unwrap().tv_norm();
                assert!(gap > 0.6, "t = {s}: distance to xφ is {gap}");
            }
            let v = c.jacobian_unchecked(&[t]).remove(0);
            let tv = Measure::signed(space.clone(), v).unwrap().tv_norm();
            assert!(tv < last, "velocity TV should decrease");
            last = tv;
        }
        assert!(last < 5e-3);
    }
}
