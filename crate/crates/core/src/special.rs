//! Special functions needed by the model zoo.

use nalgebra::Complex;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Cosine integral Ci(x) = γ + ln x + ∫_0^x (cos u − 1)/u du for x > 0.
///
/// Power series for x ≤ 2, Lentz continued fraction for the complex
/// exponential integral E1(ix) beyond that.
pub fn cosine_integral(x: f64) -> f64 {
    assert!(x > 0.0, "Ci is defined here for x > 0");
    if x <= 2.0 {
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= -x2 / ((2.0 * kf - 1.0) * (2.0 * kf));
            let add = term / (2.0 * kf);
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        return EULER_GAMMA + x.ln() + sum;
    }
    let tiny = 1e-300;
    let mut b = Complex::new(1.0, x);
    let mut c = Complex::new(1.0 / tiny, 0.0);
    let mut d = Complex::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..200 {
        let a = -((i - 1) as f64).powi(2);
        b += Complex::new(2.0, 0.0);
        d = Complex::new(1.0, 0.0) / (d * a + b);
        c = b + Complex::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let h = Complex::new(x.cos(), -x.sin()) * h;
    -h.re
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent implementation (scipy.special.sici).
    #[test]
    fn matches_reference_values() {
        let cases = [
            (0.1, -1.727_868_386_657_296_6),
            (0.5, -0.177_784_078_806_612_87),
            (1.0, 0.337_403_922_900_968_1),
            (2.0, 0.422_980_828_774_864_6),
            (2.5, 0.285_871_196_365_383_5),
            (5.0, -0.190_029_749_656_643_87),
            (10.0, -0.045_456_433_004_455_37),
            (100.0, -0.005_148_825_142_610_493),
        ];
        for (x, want) in cases {
            let got = cosine_integral(x);
            assert!((got - want).abs() < 1e-13, "Ci({x}) = {got}, want {want}");
        }
    }
}
