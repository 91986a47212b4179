use crate::error::{Error, Result};

use super::ParamModel;

/// Piecewise-linear curve in parameter space: node θ_k sits at knot t_k.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveInModel {
    nodes: Vec<Vec<f64>>,
    knots: Vec<f64>,
}

impl CurveInModel {
    /// Nodes at evenly spaced knots on [0, 1].
    pub fn new(nodes: Vec<Vec<f64>>) -> Result<Self> {
        let k = nodes.len();
        if k < 2 {
            return Err(Error::usage("a curve needs at least two nodes"));
        }
        let knots = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        Self::with_knots(nodes, knots)
    }

    pub fn with_knots(nodes: Vec<Vec<f64>>, knots: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != knots.len() {
            return Err(Error::usage(
                "a curve needs at least two nodes and one knot per node",
            ));
        }
        let dim = nodes[0].len();
        if nodes.iter().any(|n| n.len() != dim) {
            return Err(Error::usage("curve nodes have different dimensions"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::usage("curve knots must be strictly increasing"));
        }
        Ok(CurveInModel { nodes, knots })
    }

    /// Straight segment from `a` to `b`, sampled with `interior` extra nodes.
    pub fn segment(a: &[f64], b: &[f64], interior: usize) -> Result<Self> {
        let k = interior + 1;
        let nodes = (0..=k)
            .map(|i| {
                let s = i as f64 / k as f64;
                a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
            })
            .collect();
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Reversed traversal over the same knot range.
    pub fn reversed(&self) -> Self {
        let (a, b) = self.t_range();
        let knots = self.knots.iter().rev().map(|t| a + b - t).collect();
        let nodes = self.nodes.iter().rev().cloned().collect();
        CurveInModel { nodes, knots }
    }

    pub fn check_in(&self, model: &dyn ParamModel) -> Result<()> {
        if self.nodes[0].len() != model.dim() {
            return Err(Error::usage("curve and model dimensions differ"));
        }
        self.nodes.iter().try_for_each(|n| model.domain().check(n))
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|x| *x <= t);
        k.clamp(1, self.knots.len() - 1) - 1
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let i = self.locate(t);
        let s = (t - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.nodes[i]
            .iter()
            .zip(&self.nodes[i + 1])
            .map(|(a, b)| a + s * (b - a))
            .collect()
    }

    /// dθ/dt (right derivative at knots).
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let i = self.locate(t);
        let h = self.knots[i + 1] - self.knots[i];
        self.nodes[i]
            .iter()
            .zip(&self.nodes[i + 1])
            .map(|(a, b)| (b - a) / h)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_reversal() {
        let c =
            CurveInModel::with_knots(vec![vec![0.0], vec![1.0], vec![3.0]], vec![-1.0, 0.0, 1.0])
                .unwrap();
        assert_eq!(c.point(-0.5), vec![0.5]);
        assert_eq!(c.point(0.5), vec![2.0]);
        assert_eq!(c.velocity(0.5), vec![2.0]);
        let r = c.reversed();
        assert_eq!(r.point(-0.5), vec![2.0]);
        assert_eq!(r.knots(), &[-1.0, 0.0, 1.0]);
        assert!(CurveInModel::new(vec![vec![0.0]]).is_err());
        assert!(CurveInModel::with_knots(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).is_err());
    }
}
