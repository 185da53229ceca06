//! Estimating-equation models.
//!
//! A model owns its data and exposes per-observation scores `φ_i(β)`, their
//! Jacobians `φ_1i(β)` (row `a` is the gradient of component `a`) and the
//! Hessians `H_2i(a)` of every component.

mod ar1;
mod linear;
mod logistic;
mod nls;

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::Result;

pub use ar1::{simulate_ar1, Ar1};
pub use linear::{simulate_linear, LinearRegression, SampleMean};
pub use logistic::{expit, simulate_groups, Group, Logistic, LogisticLevel};
pub use nls::{isomerization_rate, Isomerization, IsomerizationRow};

pub trait EstimatingEquation {
    /// Parameter dimension `p`.
    fn dim(&self) -> usize;

    /// Number of score terms, i.e. the weight-vector length.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `φ_i(β)` into `out` (length `p`).
    fn score(&self, i: usize, beta: &[f64], out: &mut [f64]) -> Result<()>;

    /// Writes `∂φ_i/∂β` into `out` (`p × p`).
    fn score_jacobian(&self, i: usize, beta: &[f64], out: &mut Matrix) -> Result<()>;

    /// Writes the Hessian of each score component into `out` (`p` matrices).
    fn score_hessians(&self, i: usize, beta: &[f64], out: &mut [Matrix]) -> Result<()>;

    fn in_domain(&self, beta: &[f64]) -> bool {
        beta.iter().all(|b| b.is_finite())
    }

    /// Weighted least-squares criterion, for models that have one.
    fn objective(&self, _weights: &[f64], _beta: &[f64]) -> Option<f64> {
        None
    }

    fn default_init(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

/// Models whose observations decompose as fit plus residual.
pub trait ResidualModel: EstimatingEquation + Sized {
    /// Model obtained when regressors stay at their observed values.
    type FixedDesign: EstimatingEquation;

    /// Residuals at `β`, one per score term.
    fn residuals(&self, beta: &[f64]) -> Vec<f64>;

    /// Data regenerated from the model at `β` with the given innovations;
    /// autoregressions rebuild their lags recursively.
    fn rebuild(&self, beta: &[f64], residuals: &[f64]) -> Result<Self>;

    /// Responses set to fit at `β` plus `residuals`, regressors unchanged.
    fn perturb(&self, beta: &[f64], residuals: &[f64]) -> Result<Self::FixedDesign>;
}

/// Convenience wrappers that allocate.
pub trait EstimatingEquationExt: EstimatingEquation {
    fn score_vec(&self, i: usize, beta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.score(i, beta, &mut out)?;
        Ok(out)
    }

    fn jacobian_matrix(&self, i: usize, beta: &[f64]) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.dim(), self.dim());
        self.score_jacobian(i, beta, &mut out)?;
        Ok(out)
    }

    fn hessian_matrices(&self, i: usize, beta: &[f64]) -> Result<Vec<Matrix>> {
        let p = self.dim();
        let mut out = vec![Matrix::zeros(p, p); p];
        self.score_hessians(i, beta, &mut out)?;
        Ok(out)
    }
}

impl<T: EstimatingEquation + ?Sized> EstimatingEquationExt for T {}

impl<T: EstimatingEquation + ?Sized> EstimatingEquation for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn len(&self) -> usize {
        (**self).len()
    }
    fn score(&self, i: usize, beta: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).score(i, beta, out)
    }
    fn score_jacobian(&self, i: usize, beta: &[f64], out: &mut Matrix) -> Result<()> {
        (**self).score_jacobian(i, beta, out)
    }
    fn score_hessians(&self, i: usize, beta: &[f64], out: &mut [Matrix]) -> Result<()> {
        (**self).score_hessians(i, beta, out)
    }
    fn in_domain(&self, beta: &[f64]) -> bool {
        (**self).in_domain(beta)
    }
    fn objective(&self, weights: &[f64], beta: &[f64]) -> Option<f64> {
        (**self).objective(weights, beta)
    }
    fn default_init(&self) -> Vec<f64> {
        (**self).default_init()
    }
}

#[cfg(test)]
pub(crate) mod fd {
    //! Central finite-difference checks shared by the model tests.

    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
        (a - b).abs() <= tol * (a.abs().max(b.abs()).max(scale))
    }

    /// Largest relative mismatch between the analytic Jacobian and
    /// central differences of the score.
    pub fn check_jacobian<M: EstimatingEquation>(m: &M, i: usize, beta: &[f64], tol: f64) -> bool {
        let p = m.dim();
        let jac = m.jacobian_matrix(i, beta).unwrap();
        let scale = jac.max_abs().max(1e-8);
        for b in 0..p {
            let h = 1e-6 * beta[b].abs().max(1e-2);
            let mut up = beta.to_vec();
            let mut dn = beta.to_vec();
            up[b] += h;
            dn[b] -= h;
            let su = m.score_vec(i, &up).unwrap();
            let sd = m.score_vec(i, &dn).unwrap();
            for a in 0..p {
                let fd = (su[a] - sd[a]) / (2.0 * h);
                if !rel_close(jac[(a, b)], fd, tol, scale) {
                    return false;
                }
            }
        }
        true
    }

    pub fn check_hessians<M: EstimatingEquation>(m: &M, i: usize, beta: &[f64], tol: f64) -> bool {
        let p = m.dim();
        let hess = m.hessian_matrices(i, beta).unwrap();
        let scale = hess.iter().map(|h| h.max_abs()).fold(1e-8, f64::max);
        for c in 0..p {
            let h = 1e-5 * beta[c].abs().max(1e-2);
            let mut up = beta.to_vec();
            let mut dn = beta.to_vec();
            up[c] += h;
            dn[c] -= h;
            let ju = m.jacobian_matrix(i, &up).unwrap();
            let jd = m.jacobian_matrix(i, &dn).unwrap();
            for a in 0..p {
                for b in 0..p {
                    let fd = (ju[(a, b)] - jd[(a, b)]) / (2.0 * h);
                    if !rel_close(hess[a][(b, c)], fd, tol, scale) {
                        return false;
                    }
                }
            }
        }
        true
    }
}
