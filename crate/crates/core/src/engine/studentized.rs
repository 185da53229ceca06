use alloc::vec::Vec;

use super::{variance_estimate, BootstrapSample};
use crate::linalg::Matrix;
use crate::models::EstimatingEquation;
use crate::{Error, Result};

/// Bias-corrected studentized pivots for a scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentizedStats {
    /// `n⁻¹ Σ φ_1i(β̂_n)`.
    pub gamma1_hat: f64,
    /// `n⁻¹ Σ φ_2i(β̂_n)`.
    pub gamma2_hat: f64,
    /// `ĝ_n = (n⁻¹ Σ φ_i²(β̂_n))^{1/2}`.
    pub g_hat: f64,
    /// `ĝ_nB = (n⁻¹ Σ W_i² φ_i²(β̂_n))^{1/2}` per draw.
    pub g_hat_b: Vec<f64>,
    /// Needs the true parameter.
    pub t_n: Option<f64>,
    /// `None` where `ĝ_nB = 0`.
    pub t_nb: Vec<Option<f64>>,
    pub v_gbs: f64,
}

/// `T_n` and the per-draw `T_nB` of a GBS sample.
///
/// ```text
/// T_n  = γ̂₁ ĝ⁻¹ √n (β̂_n − β₀) − ½ n^{-1/2} γ̂₁⁻² ĝ⁻¹ γ̂₂ V_GBS
/// T_nB = γ̂₁ ĝ_B⁻¹ u + ½ n^{-1/2} σ_n ĝ_B⁻¹ γ̂₂ u²,   u = σ_n⁻¹ √n (β̂_B − β̂_n)
/// ```
pub fn studentized_stats<M: EstimatingEquation + ?Sized>(
    model: &M,
    sample: &BootstrapSample,
    beta0: Option<f64>,
) -> Result<StudentizedStats> {
    if model.dim() != 1 {
        return Err(Error::Unsupported(
            "studentized statistics need p = 1".into(),
        ));
    }
    let scheme = sample
        .scheme
        .ok_or_else(|| Error::Unsupported("studentized statistics need a weight scheme".into()))?;
    let n = model.len();
    let nf = n as f64;
    let beta_hat = &sample.beta_hat;
    let mut phi = Vec::with_capacity(n);
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    let mut s = [0.0];
    let mut j = Matrix::zeros(1, 1);
    let mut h = [Matrix::zeros(1, 1)];
    for i in 0..n {
        model.score(i, beta_hat, &mut s)?;
        model.score_jacobian(i, beta_hat, &mut j)?;
        model.score_hessians(i, beta_hat, &mut h)?;
        phi.push(s[0]);
        g1 += j[(0, 0)];
        g2 += h[0][(0, 0)];
    }
    let gamma1 = g1 / nf;
    let gamma2 = g2 / nf;
    let g_hat = libm::sqrt(phi.iter().map(|f| f * f).sum::<f64>() / nf);
    let v_gbs = variance_estimate(sample)?.scalar();
    let root_n = libm::sqrt(nf);
    let t_n = beta0.map(|b0| {
        gamma1 / g_hat * root_n * (beta_hat[0] - b0)
            - 0.5 / root_n / (gamma1 * gamma1) / g_hat * gamma2 * v_gbs
    });

    let sigma = libm::sqrt(sample.sigma2);
    debug_assert_eq!(scheme.n(), n);
    let mut g_hat_b = Vec::with_capacity(sample.draws.len());
    let mut t_nb = Vec::with_capacity(sample.draws.len());
    for (b, draw) in sample.draws.iter().enumerate() {
        let w = super::draw_weights(&scheme, sample.seed, b);
        let gb = libm::sqrt(
            w.values()
                .iter()
                .zip(&phi)
                .map(|(w, f)| {
                    // Degenerate laws have W_i = 0.
                    let big_w = if sigma > 0.0 { (w - 1.0) / sigma } else { 0.0 };
                    big_w * big_w * f * f
                })
                .sum::<f64>()
                / nf,
        );
        g_hat_b.push(gb);
        t_nb.push((gb > 0.0).then(|| {
            let u = root_n * (draw.beta[0] - beta_hat[0]) / sigma;
            gamma1 / gb * u + 0.5 / root_n * sigma / gb * gamma2 * u * u
        }));
    }
    Ok(StudentizedStats {
        gamma1_hat: gamma1,
        gamma2_hat: gamma2,
        g_hat,
        g_hat_b,
        t_n,
        t_nb,
        v_gbs,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{run_bootstrap, BootstrapConfig};
    use super::*;
    use crate::models::{Group, LinearRegression, Logistic, LogisticLevel};
    use crate::solver::{solve_weighted, SolveOptions};
    use crate::weights::WeightScheme;
    use alloc::vec;

    #[test]
    fn linear_model_has_no_correction() {
        let x = vec![1.0, 2.0, 0.5, 1.5, 3.0, 2.5];
        let y = vec![1.2, 1.9, 0.4, 1.6, 3.3, 2.4];
        let m = LinearRegression::simple(x.clone(), y).unwrap();
        let b = solve_weighted(&m, &[1.0; 6], &SolveOptions::default())
            .unwrap()
            .beta;
        let s = run_bootstrap(
            &m,
            &b,
            &BootstrapConfig::new(WeightScheme::multinomial(6).unwrap(), 50, 3),
        )
        .unwrap();
        let st = studentized_stats(&m, &s, Some(1.0)).unwrap();
        assert_eq!(st.gamma2_hat, 0.0);
        let expected = st.gamma1_hat / st.g_hat * libm::sqrt(6.0) * (b[0] - 1.0);
        assert!((st.t_n.unwrap() - expected).abs() < 1e-12);
        assert!((st.gamma1_hat + x.iter().map(|v| v * v).sum::<f64>() / 6.0).abs() < 1e-12);
    }

    #[test]
    fn unit_weights_make_every_pivot_undefined() {
        let m = LinearRegression::simple(vec![1.0, 2.0, 3.0], vec![1.0, 2.5, 2.9]).unwrap();
        let b = solve_weighted(&m, &[1.0; 3], &SolveOptions::default())
            .unwrap()
            .beta;
        let s = run_bootstrap(
            &m,
            &b,
            &BootstrapConfig::new(WeightScheme::constant(3).unwrap(), 5, 0),
        )
        .unwrap();
        let st = studentized_stats(&m, &s, None).unwrap();
        assert!(st.g_hat_b.iter().all(|&g| g == 0.0));
        assert!(st.t_nb.iter().all(Option::is_none));
        assert!(st.t_n.is_none());
    }

    #[test]
    fn rejects_vector_parameters() {
        let g = [
            Group {
                trials: 5,
                x: 0.0,
                successes: 2,
            },
            Group {
                trials: 5,
                x: 1.0,
                successes: 3,
            },
        ];
        let m = Logistic::new(&g, LogisticLevel::Group).unwrap();
        let s = run_bootstrap(
            &m,
            &[0.0, 0.0],
            &BootstrapConfig::new(WeightScheme::multinomial(2).unwrap(), 2, 0),
        );
        if let Ok(s) = s {
            assert!(matches!(
                studentized_stats(&m, &s, None),
                Err(Error::Unsupported(_))
            ));
        }
    }
}
