use std::sync::Arc;

use super::{ParamDomain, ParamModel};
use crate::error::{Error, Result};
use crate::measure::SampleSpace;

const MAX_ATOMS: usize = 1 << 20;

/// The n-fold i.i.d. product of a finite model. Outcome k encodes the
/// sample (x_1, …, x_n) in base m, x_1 most significant.
#[derive(Debug, Clone)]
pub struct IidProduct {
    base: Arc<dyn ParamModel>,
    n: usize,
    m: usize,
    space: Arc<SampleSpace>,
}

impl IidProduct {
    pub fn new(base: Arc<dyn ParamModel>, n: usize) -> Result<Self> {
        if !base.space().is_finite() {
            return Err(Error::usage("i.i.d. products need a finite base model"));
        }
        if n == 0 {
            return Err(Error::usage("sample size must be positive"));
        }
        let m = base.space().len();
        let atoms = (0..n).try_fold(1usize, |acc, _| {
            acc.checked_mul(m).filter(|a| *a <= MAX_ATOMS)
        });
        let atoms = atoms.ok_or_else(|| {
            Error::usage(format!(
                "{m}^{n} outcomes exceed the enumeration limit {MAX_ATOMS}"
            ))
        })?;
        Ok(IidProduct {
            base,
            n,
            m,
            space: Arc::new(SampleSpace::finite(atoms)?),
        })
    }

    pub fn base(&self) -> &Arc<dyn ParamModel> {
        &self.base
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Base atoms of outcome `k`.
    pub fn decode(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = k % self.m;
            k /= self.m;
        }
        out
    }

    /// Per-atom counts of outcome `k`.
    pub fn counts(&self, mut k: usize) -> Vec<usize> {
        let mut c = vec![0; self.m];
        for _ in 0..self.n {
            c[k % self.m] += 1;
            k /= self.m;
        }
        c
    }
}

impl ParamModel for IidProduct {
    fn id(&self) -> String {
        format!("iid:{}:{}", self.n, self.base.id())
    }

    fn domain(&self) -> &ParamDomain {
        self.base.domain()
    }

    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn density_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.base.density_unchecked(theta);
        // Built digit by digit so outcome k = k' * m + x_n.
        let mut out = vec![1.0];
        for _ in 0..self.n {
            out = out
                .iter()
                .flat_map(|a| p.iter().map(move |b| a * b))
                .collect();
        }
        out
    }

    fn jacobian_unchecked(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let p = self.base.density_unchecked(theta);
        let jac = self.base.jacobian_unchecked(theta);
        jac.iter()
            .map(|dp| {
                let mut val = vec![1.0];
                let mut der = vec![0.0];
                for _ in 0..self.n {
                    let mut nv = Vec::with_capacity(val.len() * self.m);
                    let mut nd = Vec::with_capacity(val.len() * self.m);
                    for (v, d) in val.iter().zip(&der) {
                        for (pj, dj) in p.iter().zip(dp) {
                            nv.push(v * pj);
                            nd.push(d * pj + v * dj);
                        }
                    }
                    val = nv;
                    der = nd;
                }
                der
            })
            .collect()
    }

    fn analytic_jacobian(&self) -> bool {
        self.base.analytic_jacobian()
    }

    fn params_from_frequencies(&self, _freq: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Bernoulli;

    #[test]
    fn product_of_bernoulli() {
        let m = IidProduct::new(Arc::new(Bernoulli::new()), 3).unwrap();
        let d = m.density(&[0.3]).unwrap();
        assert_eq!(d.len(), 8);
        // outcome 0b110 = (1, 1, 0)
        assert_eq!(m.decode(6), vec![1, 1, 0]);
        assert_eq!(m.counts(6), vec![1, 2]);
        assert!((d[6] - 0.3 * 0.3 * 0.7).abs() < 1e-15);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn enumeration_limit() {
        assert!(IidProduct::new(Arc::new(Bernoulli::new()), 20).is_ok());
        assert!(IidProduct::new(Arc::new(Bernoulli::new()), 21).is_err());
    }
}
