use alloc::vec::Vec;

use super::{solve_from_estimate, BootstrapSample};
use crate::linalg::Matrix;
use crate::models::EstimatingEquation;
use crate::solver::SolveOptions;
use crate::weights::{enumerate_support, WeightScheme};
use crate::{Error, Result};

/// `V_GBS = σ_n⁻² E_B (β̂_B − β̂_n)(β̂_B − β̂_n)ᵀ`.
///
/// Estimates the variance of `β̂_n`; multiply by `n` for the variance of
/// `√n(β̂_n − β₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    pub v_gbs: Matrix,
    /// Monte Carlo standard error of each entry; zero for exact expectations.
    pub mc_stderr: Matrix,
    pub draws: usize,
    pub fallback_count: usize,
    /// More than 20% of the mass came from fallback draws.
    pub degenerate: bool,
}

impl VarianceEstimate {
    /// The `(0, 0)` entry.
    pub fn scalar(&self) -> f64 {
        self.v_gbs[(0, 0)]
    }

    pub fn scalar_stderr(&self) -> f64 {
        self.mc_stderr[(0, 0)]
    }
}

/// Monte Carlo average over the draws; fallback draws contribute zero.
pub fn variance_estimate(sample: &BootstrapSample) -> Result<VarianceEstimate> {
    let b = sample.draws.len();
    if b < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            found: b,
        });
    }
    let p = sample.beta_hat.len();
    let inv = if sample.sigma2 > 0.0 {
        1.0 / sample.sigma2
    } else {
        0.0
    };
    let mut sum = Matrix::zeros(p, p);
    let mut sum_sq = Matrix::zeros(p, p);
    let mut dev = alloc::vec![0.0; p];
    for d in &sample.draws {
        for k in 0..p {
            dev[k] = d.beta[k] - sample.beta_hat[k];
        }
        for i in 0..p {
            for j in 0..p {
                let v = inv * dev[i] * dev[j];
                sum[(i, j)] += v;
                sum_sq[(i, j)] += v * v;
            }
        }
    }
    let bf = b as f64;
    let mut mean = sum;
    mean.scale(1.0 / bf);
    let mut se = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let m = mean[(i, j)];
            let var = ((sum_sq[(i, j)] / bf - m * m) * bf / (bf - 1.0)).max(0.0);
            se[(i, j)] = libm::sqrt(var / bf);
        }
    }
    Ok(VarianceEstimate {
        v_gbs: mean,
        mc_stderr: se,
        draws: b,
        fallback_count: sample.fallback_count,
        degenerate: sample.is_degenerate(),
    })
}

/// `V_GBS` as an exact expectation over the support of `scheme`.
///
/// Atoms whose solve fails contribute zero, as fallback draws do.
pub fn exact_variance_enumeration<M: EstimatingEquation + ?Sized>(
    model: &M,
    beta_hat: &[f64],
    scheme: &WeightScheme,
    solve: &SolveOptions,
) -> Result<VarianceEstimate> {
    if scheme.n() != model.len() {
        return Err(Error::Shape {
            expected: model.len(),
            found: scheme.n(),
        });
    }
    let atoms = enumerate_support(scheme)?;
    let p = beta_hat.len();
    let sigma2 = scheme.sigma2();
    let mut total = Matrix::zeros(p, p);
    let mut fallback_mass = 0.0;
    let mut fallback_count = 0;
    if sigma2 > 0.0 {
        for (w, prob) in &atoms {
            let beta = match solve_from_estimate(model, w.values(), beta_hat, solve, &[]) {
                Ok(beta) => beta,
                Err(e) => {
                    super::settle(Err(e), beta_hat, super::FallbackPolicy::UseEstimate)?;
                    fallback_count += 1;
                    fallback_mass += prob;
                    continue;
                }
            };
            let dev: Vec<f64> = beta.iter().zip(beta_hat).map(|(b, h)| b - h).collect();
            for i in 0..p {
                for j in 0..p {
                    total[(i, j)] += prob * dev[i] * dev[j] / sigma2;
                }
            }
        }
    }
    Ok(VarianceEstimate {
        v_gbs: total,
        mc_stderr: Matrix::zeros(p, p),
        draws: atoms.len(),
        fallback_count,
        degenerate: fallback_mass > super::MAX_FALLBACK_FRACTION,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{run_bootstrap, BootstrapConfig, Draw, DrawStatus};
    use super::*;
    use crate::models::{Ar1, LinearRegression, SampleMean};
    use crate::solver::solve_weighted;
    use crate::weights::WeightKind;
    use alloc::string::String;
    use alloc::vec;

    fn jackknife(n: usize) -> WeightScheme {
        WeightScheme::new(WeightKind::DeleteDJackknife { d: 1 }, n).unwrap()
    }

    #[test]
    fn jackknife_on_three_points() {
        let m = SampleMean::new(vec![1.0, 2.0, 3.0]).unwrap();
        let v = exact_variance_enumeration(&m, &[2.0], &jackknife(3), &SolveOptions::default())
            .unwrap();
        assert!((v.scalar() - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(v.draws, 3);
    }

    /// `(n−1)/n Σ(θ_(i) − θ̂)²` from explicit leave-one-out fits.
    fn classical_jackknife<M: EstimatingEquation>(m: &M, beta_hat: f64) -> f64 {
        let n = m.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut w = vec![1.0; n];
            w[i] = 0.0;
            let opts = SolveOptions::default().with_init(vec![beta_hat]);
            let b = solve_weighted(m, &w, &opts).unwrap().beta[0];
            sum += (b - beta_hat) * (b - beta_hat);
        }
        (n as f64 - 1.0) / n as f64 * sum
    }

    #[test]
    fn jackknife_identity_on_regression_models() {
        let x: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, x)| 1.5 * x + if i % 2 == 0 { 0.4 } else { -0.3 })
            .collect();
        let lin = LinearRegression::simple(x, y).unwrap();
        let ar = Ar1::new(vec![
            0.0, 1.0, 0.4, -0.8, 0.3, 1.2, 0.1, -0.5, 0.9, 0.2, -0.3,
        ])
        .unwrap();
        let b_lin = solve_weighted(&lin, &[1.0; 10], &SolveOptions::default())
            .unwrap()
            .beta[0];
        let b_ar = ar.least_squares();
        let v =
            exact_variance_enumeration(&lin, &[b_lin], &jackknife(10), &SolveOptions::default())
                .unwrap();
        assert!((v.scalar() - classical_jackknife(&lin, b_lin)).abs() < 1e-10);
        let v = exact_variance_enumeration(&ar, &[b_ar], &jackknife(10), &SolveOptions::default())
            .unwrap();
        assert!((v.scalar() - classical_jackknife(&ar, b_ar)).abs() < 1e-10);
    }

    #[test]
    fn multinomial_two_points_by_hand() {
        // Atoms (2,0), (1,1), (0,2) give means z1, z̄, z2; σ² = 1/2.
        let m = SampleMean::new(vec![1.0, 5.0]).unwrap();
        let v = exact_variance_enumeration(
            &m,
            &[3.0],
            &WeightScheme::multinomial(2).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        let expected = (0.25 * 4.0 + 0.25 * 4.0) / 0.5;
        assert!((v.scalar() - expected).abs() < 1e-12);
    }

    #[test]
    fn multinomial_mean_matches_closed_form() {
        // Var_B(z̄_B) = n⁻² Σ(z − z̄)², so V_GBS = σ⁻² n⁻² Σ(z − z̄)².
        let z = vec![0.5, 2.0, -1.0];
        let m = SampleMean::new(z.clone()).unwrap();
        let zbar = z.iter().sum::<f64>() / 3.0;
        let v = exact_variance_enumeration(
            &m,
            &[zbar],
            &WeightScheme::multinomial(3).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        let ss: f64 = z.iter().map(|x| (x - zbar) * (x - zbar)).sum();
        assert!((v.scalar() - ss / 9.0 / (2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_scheme_gives_zero() {
        let m = SampleMean::new(vec![1.0, 2.0]).unwrap();
        let v = exact_variance_enumeration(
            &m,
            &[1.5],
            &WeightScheme::constant(2).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(v.scalar(), 0.0);
    }

    #[test]
    fn continuous_schemes_are_not_enumerable() {
        let m = SampleMean::new(vec![1.0, 2.0]).unwrap();
        let s = WeightScheme::new(WeightKind::IidExponential { rate: 1.0 }, 2).unwrap();
        assert!(matches!(
            exact_variance_enumeration(&m, &[1.5], &s, &SolveOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn all_fallback_gives_zero_and_flag() {
        let draws = vec![
            Draw {
                beta: vec![1.0],
                status: DrawStatus::Fallback
            };
            4
        ];
        let s = BootstrapSample::from_draws(String::from("x"), vec![1.0], None, 1.0, 0, draws);
        let v = variance_estimate(&s).unwrap();
        assert_eq!(v.scalar(), 0.0);
        assert!(v.degenerate);
    }

    #[test]
    fn scale_equivariance() {
        let x: Vec<f64> = (0..12).map(|i| 1.0 + (i as f64).sin()).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, x)| 0.8 * x + (i as f64 * 1.7).cos())
            .collect();
        let c = 4.0;
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let m1 = LinearRegression::simple(x.clone(), y).unwrap();
        let m2 = LinearRegression::simple(x, yc).unwrap();
        let b1 = solve_weighted(&m1, &[1.0; 12], &SolveOptions::default())
            .unwrap()
            .beta;
        let b2 = solve_weighted(&m2, &[1.0; 12], &SolveOptions::default())
            .unwrap()
            .beta;
        let cfg = BootstrapConfig::new(WeightScheme::multinomial(12).unwrap(), 100, 17);
        let s1 = run_bootstrap(&m1, &b1, &cfg).unwrap();
        let s2 = run_bootstrap(&m2, &b2, &cfg).unwrap();
        for (d1, d2) in s1.draws.iter().zip(&s2.draws) {
            assert!((c * d1.beta[0] - d2.beta[0]).abs() < 1e-12 * (1.0 + d2.beta[0].abs()));
        }
        let v1 = variance_estimate(&s1).unwrap().scalar();
        let v2 = variance_estimate(&s2).unwrap().scalar();
        assert!((c * c * v1 - v2).abs() < 1e-10 * v2);
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let m = SampleMean::new(vec![0.3, 1.9, -0.4, 2.2, 0.8]).unwrap();
        let zbar = 0.96;
        for scheme in [
            WeightScheme::multinomial(5).unwrap(),
            WeightScheme::new(WeightKind::DeleteDJackknife { d: 2 }, 5).unwrap(),
        ] {
            let exact =
                exact_variance_enumeration(&m, &[zbar], &scheme, &SolveOptions::default()).unwrap();
            let cfg = BootstrapConfig::new(scheme, 20_000, 2024);
            let mc = variance_estimate(&run_bootstrap(&m, &[zbar], &cfg).unwrap()).unwrap();
            assert!((mc.scalar() - exact.scalar()).abs() < 4.0 * mc.scalar_stderr());
        }
    }
}
