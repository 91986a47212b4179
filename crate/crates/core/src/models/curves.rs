use std::f64::consts::PI;
use std::sync::Arc;

use super::{ParamDomain, ParamModel};
use crate::error::Result;
use crate::measure::{Measure, SampleSpace};
use crate::quadrature::{uniform_breaks, QuadRule};
use crate::special::cosine_integral;

/// sup of |F_t(x)| over |t| ≤ 1, |x| ≤ π (attained at t = 1, x ≈ 0.6165).
const WEAK_F_SUP: f64 = 0.578_187_508_666_236_3;

/// Normalizer of the weak curve: 2π · sup|F_t|.
pub const WEAK_CURVE_A: f64 = 2.0 * PI * WEAK_F_SUP;

/// F_t(x) = ∫_0^t sin(x/s) ds, via F_t(x) = t sin(x/t) − x Ci(x/t) for t, x > 0
/// (odd in x, even in t).
pub fn weak_f(t: f64, x: f64) -> f64 {
    if t == 0.0 || x == 0.0 {
        return 0.0;
    }
    let (a, ax) = (t.abs(), x.abs());
    let u = ax / a;
    let v = a * u.sin() - ax * cosine_integral(u);
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// μ_t = (1/(2π) + F_t(x)/(2A)) dx on [−π, π], t ∈ (−1, 1).
///
/// Weakly C¹ in t with derivative density sin(x/t)/(2A), which does not
/// converge in total variation as t → 0.
#[derive(Debug, Clone)]
pub struct WeakCurve {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl WeakCurve {
    pub fn new() -> Self {
        let space = SampleSpace::grid1d_breaks(
            &uniform_breaks(-PI, PI, 2000),
            QuadRule::GaussLegendre { order: 8 },
        )
        .unwrap();
        WeakCurve {
            domain: ParamDomain::open_box(vec![-1.0], vec![1.0]),
            space: Arc::new(space),
        }
    }

    /// The pointwise t-derivative μ'_t as a signed measure.
    pub fn velocity(&self, t: f64) -> Result<Measure> {
        self.domain.check(&[t])?;
        Measure::signed(self.space.clone(), self.jacobian_unchecked(&[t]).remove(0))
    }
}

impl Default for WeakCurve {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for WeakCurve {
    fn id(&self) -> String {
        "weak-curve".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let t = theta[0];
        self.space
            .coords()
            .iter()
            .map(|x| 0.5 / PI + weak_f(t, *x) / (2.0 * WEAK_CURVE_A))
            .collect()
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let t = theta[0];
        let row = if t == 0.0 {
            vec![0.0; self.space.len()]
        } else {
            self.space
                .coords()
                .iter()
                .map(|x| (x / t).sin() / (2.0 * WEAK_CURVE_A))
                .collect()
        };
        vec![row]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }
}

/// ∫_0^1 f(u)² du for the bump f(u) = exp(−u/(1−u)).
pub const FRIEDRICH_BUMP_MASS: f64 = 0.277_342_766_223_554_86;
/// ∫_0^1 (f(u) − 2u f'(u))² du: the squared Fisher speed of the unnormalized curve at t ≠ 0.
pub const FRIEDRICH_SPEED_SQ: f64 = 1.832_028_298_670_664_4;

fn bump(u: f64) -> f64 {
    if u < 1.0 {
        (-u / (1.0 - u)).exp()
    } else {
        0.0
    }
}

/// Friedrich's curve on X = (−1, 1): density 1 on x ≤ 0 and |t| f(x/|t|)² on
/// x > 0. The `ParamModel` view is the normalized curve.
#[derive(Debug, Clone)]
pub struct FriedrichCurve {
    domain: ParamDomain,
    space: Arc<SampleSpace>,
}

impl FriedrichCurve {
    pub fn new() -> Self {
        let mut breaks = uniform_breaks(-1.0, 0.0, 8);
        let mut b = 1e-7;
        while b < 0.95 {
            breaks.push(b);
            b *= 1.08;
        }
        breaks.push(1.0);
        let space =
            SampleSpace::grid1d_breaks(&breaks, QuadRule::GaussLegendre { order: 10 }).unwrap();
        FriedrichCurve {
            domain: ParamDomain::open_box(vec![-1.0], vec![1.0]),
            space: Arc::new(space),
        }
    }

    fn raw(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let a = t.abs();
        self.space
            .coords()
            .iter()
            .map(|x| {
                if *x <= 0.0 {
                    (1.0, 0.0)
                } else if a == 0.0 {
                    (0.0, 0.0)
                } else {
                    let u = x / a;
                    let f = bump(u);
                    if f == 0.0 {
                        (0.0, 0.0)
                    } else {
                        let fp = -f / ((1.0 - u) * (1.0 - u));
                        (a * f * f, t.signum() * (f * f - 2.0 * u * f * fp))
                    }
                }
            })
            .unzip()
    }

    /// The unnormalized curve p(t).
    pub fn unnormalized(&self, t: f64) -> Result<Measure> {
        self.domain.check(&[t])?;
        Measure::nonnegative(self.space.clone(), self.raw(t).0)
    }

    /// ṗ(t) of the unnormalized curve as a signed measure.
    pub fn unnormalized_velocity(&self, t: f64) -> Result<Measure> {
        self.domain.check(&[t])?;
        Measure::signed(self.space.clone(), self.raw(t).1)
    }

    /// p(t) / ‖p(t)‖_TV.
    pub fn normalized(&self, t: f64) -> Result<Measure> {
        let p = self.unnormalized(t)?;
        let m = p.total_mass();
        Measure::probability(
            self.space.clone(),
            p.density().iter().map(|d| d / m).collect(),
        )
    }
}

impl Default for FriedrichCurve {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamModel for FriedrichCurve {
    fn id(&self) -> String {
        "friedrich".into()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let (p, _) = self.raw(theta[0]);
        let m: f64 = p.iter().zip(self.space.weights()).map(|(p, w)| p * w).sum();
        p.iter().map(|d| d / m).collect()
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let (p, dp) = self.raw(theta[0]);
        let w = self.space.weights();
        let m: f64 = p.iter().zip(w).map(|(p, w)| p * w).sum();
        let dm: f64 = dp.iter().zip(w).map(|(d, w)| d * w).sum();
        vec![p
            .iter()
            .zip(&dp)
            .map(|(p, d)| d / m - p * dm / (m * m))
            .collect()]
    }

    fn analytic_jacobian(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_f_matches_reference_values() {
        // Oscillatory quadrature of x sin(u)/u² on [x/t, ∞) at 30 digits (mpmath).
        let cases = [
            (0.5, 1.0, 0.031_667_884_637_975_85),
            (1.0, 0.6, 0.578_004_897_570_603_2),
            (0.3, -2.0, -0.041_721_202_366_733_5),
            (0.01, 0.5, 1.904_446_250_188_648_6e-4),
            (
                0.564_478_958_602_875,
                -2.660_183_685_642_868,
                0.036_678_402_541_166_83,
            ),
        ];
        for (t, x, want) in cases {
            let got = weak_f(t, x);
            assert!(
                (got - want).abs() < 1e-13,
                "F_{t}({x}) = {got}, want {want}"
            );
            assert_eq!(weak_f(-t, x), got);
            assert_eq!(weak_f(t, -x), -got);
        }
        assert!((weak_f(1.0, 0.616_505_495_070_998_5) - WEAK_F_SUP).abs() < 1e-13);
    }

    #[test]
    fn weak_curve_basics() {
        let c = WeakCurve::new();
        let mu0 = c.measure(&[0.0]).unwrap();
        assert!(mu0.density().iter().all(|d| *d == 0.5 / PI));
        let floor = 0.5 / PI - 0.25 / PI;
        for t in [-0.9, -0.3, 1e-3, 0.5, 0.99] {
            let mu = c.measure(&[t]).unwrap();
            assert!((mu.total_mass() - 1.0).abs() < 1e-12, "{t}");
            assert!(mu.density().iter().all(|d| *d >= floor));
        }
    }

    #[test]
    fn friedrich_examples() {
        let c = FriedrichCurve::new();
        let p0 = c.unnormalized(0.0).unwrap();
        assert!((p0.total_mass() - 1.0).abs() < 1e-12);
        for t in [1e-3, 0.05, -0.3, 0.9] {
            let p = c.unnormalized(t).unwrap();
            let diff = p.sub(&p0).unwrap().tv_norm();
            let want = t * t * FRIEDRICH_BUMP_MASS;
            assert!(
                (diff - want).abs() < 1e-9 * want.max(1e-12) + 1e-15,
                "t = {t}: {diff} vs {want}"
            );
            assert!(p.tv_norm() >= 1.0);
            assert!(c.normalized(t).unwrap().is_probability());
        }
    }

    #[test]
    fn friedrich_speed_is_constant_away_from_zero() {
        let c = FriedrichCurve::new();
        for t in [1e-3, 0.02, -0.4] {
            let p = c.unnormalized(t).unwrap();
            let v = c.unnormalized_velocity(t).unwrap();
            let s2: f64 = p
                .density()
                .iter()
                .zip(v.density())
                .zip(c.space().weights())
                .filter(|((p, _), _)| **p > 0.0)
                .map(|((p, d), w)| d * d / p * w)
                .sum();
            assert!((s2 - FRIEDRICH_SPEED_SQ).abs() < 1e-8, "t = {t}: {s2}");
        }
    }
}
