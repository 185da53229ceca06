use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{EstimatingEquation, ResidualModel};
use crate::linalg::{dot, Matrix};
use crate::{Error, Result};

/// Location model with score `z_i − β`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMean {
    z: Vec<f64>,
}

impl SampleMean {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InsufficientSample {
                needed: 1,
                found: 0,
            });
        }
        Ok(Self { z })
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }
}

impl EstimatingEquation for SampleMean {
    fn dim(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.z.len()
    }

    fn score(&self, i: usize, beta: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.z[i] - beta[0];
        Ok(())
    }

    fn score_jacobian(&self, _i: usize, _beta: &[f64], out: &mut Matrix) -> Result<()> {
        out[(0, 0)] = -1.0;
        Ok(())
    }

    fn score_hessians(&self, _i: usize, _beta: &[f64], out: &mut [Matrix]) -> Result<()> {
        out[0].fill(0.0);
        Ok(())
    }

    fn objective(&self, weights: &[f64], beta: &[f64]) -> Option<f64> {
        Some(
            weights
                .iter()
                .zip(&self.z)
                .map(|(w, z)| w * (z - beta[0]) * (z - beta[0]))
                .sum(),
        )
    }
}

impl ResidualModel for SampleMean {
    type FixedDesign = Self;

    fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        self.z.iter().map(|z| z - beta[0]).collect()
    }

    fn rebuild(&self, beta: &[f64], residuals: &[f64]) -> Result<Self> {
        check_len(self.z.len(), residuals)?;
        Self::new(residuals.iter().map(|e| beta[0] + e).collect())
    }

    fn perturb(&self, beta: &[f64], residuals: &[f64]) -> Result<Self> {
        self.rebuild(beta, residuals)
    }
}

/// Least squares `y_i = x_iᵀβ + e_i` with score `x_i(y_i − x_iᵀβ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegression {
    /// Row-major `n × p` design.
    x: Vec<f64>,
    y: Vec<f64>,
    p: usize,
}

impl LinearRegression {
    pub fn new(x: Vec<f64>, p: usize, y: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if x.len() != y.len() * p {
            return Err(Error::Shape {
                expected: y.len() * p,
                found: x.len(),
            });
        }
        if y.len() < p {
            return Err(Error::InsufficientSample {
                needed: p,
                found: y.len(),
            });
        }
        Ok(Self { x, y, p })
    }

    /// Single regressor, no intercept.
    pub fn simple(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(x, 1, y)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn residual(&self, i: usize, beta: &[f64]) -> f64 {
        self.y[i] - dot(self.row(i), beta)
    }
}

impl EstimatingEquation for LinearRegression {
    fn dim(&self) -> usize {
        self.p
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    fn score(&self, i: usize, beta: &[f64], out: &mut [f64]) -> Result<()> {
        let r = self.residual(i, beta);
        for (o, x) in out.iter_mut().zip(self.row(i)) {
            *o = x * r;
        }
        Ok(())
    }

    fn score_jacobian(&self, i: usize, _beta: &[f64], out: &mut Matrix) -> Result<()> {
        let row = self.row(i);
        for a in 0..self.p {
            for b in 0..self.p {
                out[(a, b)] = -row[a] * row[b];
            }
        }
        Ok(())
    }

    fn score_hessians(&self, _i: usize, _beta: &[f64], out: &mut [Matrix]) -> Result<()> {
        out.iter_mut().for_each(|h| h.fill(0.0));
        Ok(())
    }

    fn objective(&self, weights: &[f64], beta: &[f64]) -> Option<f64> {
        Some(
            (0..self.len())
                .map(|i| {
                    let r = self.residual(i, beta);
                    weights[i] * r * r
                })
                .sum(),
        )
    }
}

impl ResidualModel for LinearRegression {
    type FixedDesign = Self;

    fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.residual(i, beta)).collect()
    }

    fn rebuild(&self, beta: &[f64], residuals: &[f64]) -> Result<Self> {
        check_len(self.len(), residuals)?;
        let y = (0..self.len())
            .map(|i| dot(self.row(i), beta) + residuals[i])
            .collect();
        Self::new(self.x.clone(), self.p, y)
    }

    fn perturb(&self, beta: &[f64], residuals: &[f64]) -> Result<Self> {
        self.rebuild(beta, residuals)
    }
}

fn check_len(n: usize, residuals: &[f64]) -> Result<()> {
    if residuals.len() != n {
        return Err(Error::Shape {
            expected: n,
            found: residuals.len(),
        });
    }
    Ok(())
}

/// Responses `y_i = x_iᵀβ + σ e_i` with standard normal `e_i` on a fixed design.
pub fn simulate_linear<R: Rng + ?Sized>(
    x: Vec<f64>,
    p: usize,
    beta: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<LinearRegression> {
    if beta.len() != p {
        return Err(Error::Shape {
            expected: p,
            found: beta.len(),
        });
    }
    if p == 0 || x.len() % p != 0 {
        return Err(Error::Parameter(
            "design length must be a multiple of p".into(),
        ));
    }
    let y = x
        .chunks(p)
        .map(|row| {
            let e: f64 = StandardNormal.sample(rng);
            dot(row, beta) + sigma * e
        })
        .collect();
    LinearRegression::new(x, p, y)
}
