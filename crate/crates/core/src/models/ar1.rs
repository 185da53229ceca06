use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{EstimatingEquation, LinearRegression, ResidualModel};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// `X_t = φ X_{t−1} + e_t` fitted by least squares.
///
/// Score term `i` is `X_i (X_{i+1} − φ X_i)`, i.e. time `t = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1 {
    series: Vec<f64>,
}

impl Ar1 {
    /// `series` is `X_0, …, X_n`.
    pub fn new(series: Vec<f64>) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::InsufficientSample {
                needed: 2,
                found: series.len(),
            });
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &[f64] {
        &self.series
    }

    /// `ΣX_tX_{t−1} / ΣX²_{t−1}`; `NaN` for an all-zero lagged series.
    pub fn least_squares(&self) -> f64 {
        let (num, den) = self
            .series
            .windows(2)
            .fold((0.0, 0.0), |(n, d), w| (n + w[0] * w[1], d + w[0] * w[0]));
        num / den
    }
}

impl EstimatingEquation for Ar1 {
    fn dim(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.series.len() - 1
    }

    fn score(&self, i: usize, beta: &[f64], out: &mut [f64]) -> Result<()> {
        let lag = self.series[i];
        out[0] = lag * (self.series[i + 1] - beta[0] * lag);
        Ok(())
    }

    fn score_jacobian(&self, i: usize, _beta: &[f64], out: &mut Matrix) -> Result<()> {
        let lag = self.series[i];
        out[(0, 0)] = -lag * lag;
        Ok(())
    }

    fn score_hessians(&self, _i: usize, _beta: &[f64], out: &mut [Matrix]) -> Result<()> {
        out[0].fill(0.0);
        Ok(())
    }

    fn objective(&self, weights: &[f64], beta: &[f64]) -> Option<f64> {
        Some(
            self.series
                .windows(2)
                .zip(weights)
                .map(|(x, w)| {
                    let e = x[1] - beta[0] * x[0];
                    w * e * e
                })
                .sum(),
        )
    }
}

impl ResidualModel for Ar1 {
    type FixedDesign = LinearRegression;

    fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        self.series
            .windows(2)
            .map(|x| x[1] - beta[0] * x[0])
            .collect()
    }

    /// Rebuilds the path recursively from the observed `X_0`.
    fn rebuild(&self, beta: &[f64], residuals: &[f64]) -> Result<Self> {
        if residuals.len() != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                found: residuals.len(),
            });
        }
        let mut series = Vec::with_capacity(self.series.len());
        series.push(self.series[0]);
        for e in residuals {
            let prev = *series.last().expect("seeded with X_0");
            series.push(beta[0] * prev + e);
        }
        Self::new(series)
    }

    /// Regression of `X*_t = φX_{t−1} + e_t` on the observed lags.
    fn perturb(&self, beta: &[f64], residuals: &[f64]) -> Result<LinearRegression> {
        let lags = self.series[..self.len()].to_vec();
        let y = lags
            .iter()
            .zip(residuals)
            .map(|(x, e)| beta[0] * x + e)
            .collect();
        LinearRegression::simple(lags, y)
    }
}

/// Path of length `n + 1` from `X_0 = 0` with `Var e_t = σ₁²` for odd `t`
/// and `σ₂²` for even `t`.
pub fn simulate_ar1<R: Rng + ?Sized>(
    phi: f64,
    var_odd: f64,
    var_even: f64,
    n: usize,
    rng: &mut R,
) -> Result<Ar1> {
    if !(var_odd >= 0.0 && var_even >= 0.0) {
        return Err(Error::Parameter(
            "error variances must be nonnegative".into(),
        ));
    }
    let (sd_odd, sd_even) = (libm::sqrt(var_odd), libm::sqrt(var_even));
    let mut series = Vec::with_capacity(n + 1);
    series.push(0.0);
    for t in 1..=n {
        let z: f64 = StandardNormal.sample(rng);
        let sd = if t % 2 == 1 { sd_odd } else { sd_even };
        series.push(phi * series[t - 1] + sd * z);
    }
    Ar1::new(series)
}

#[cfg(test)]
mod tests {
    use super::super::fd::{check_hessians, check_jacobian};
    use super::super::EstimatingEquationExt;
    use super::*;
    use crate::rng::stream;
    use crate::stats::{mean, sample_variance};
    use alloc::vec;

    #[test]
    fn score_examples() {
        let m = Ar1::new(vec![0.0, 1.0, 0.2]).unwrap();
        assert!(m.score_vec(1, &[0.2]).unwrap()[0].abs() < 1e-15);
        let m = Ar1::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.score_vec(0, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(m.score_vec(1, &[0.0]).unwrap(), vec![2.0]);
        assert_eq!(m.least_squares(), 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = stream(5, 0);
        let m = simulate_ar1(0.4, 1.0, 4.0, 100, &mut rng).unwrap();
        for i in 0..100 {
            let beta = [rng.random_range(-1.0..1.0)];
            assert!(check_jacobian(&m, i, &beta, 1e-5));
            assert!(check_hessians(&m, i, &beta, 1e-4));
        }
    }

    #[test]
    fn zero_noise_gives_zero_path() {
        let m = simulate_ar1(0.7, 0.0, 0.0, 20, &mut stream(1, 0)).unwrap();
        assert!(m.series().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn alternating_variances() {
        let mut rng = stream(9, 0);
        let m = simulate_ar1(0.2, 1.0, 100.0, 20_000, &mut rng).unwrap();
        let e = m.residuals(&[0.2]);
        // e[i] is the innovation at t = i + 1
        let odd: Vec<f64> = e.iter().step_by(2).copied().collect();
        let even: Vec<f64> = e.iter().skip(1).step_by(2).copied().collect();
        assert!((sample_variance(&odd) - 1.0).abs() < 0.05);
        assert!((sample_variance(&even) - 100.0).abs() < 5.0);
        assert!(mean(&odd).abs() < 0.05);
    }

    #[test]
    fn rebuild_with_own_residuals_is_identity() {
        let m = simulate_ar1(0.5, 1.0, 2.0, 30, &mut stream(2, 0)).unwrap();
        let r = m.residuals(&[0.3]);
        let back = m.rebuild(&[0.3], &r).unwrap();
        for (a, b) in back.series().iter().zip(m.series()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
