//! Damped Newton root finding for `Σ w_i φ_i(β) = 0`.
//!
//! Convergence is measured against the score scale
//! `1 + Σ|w_i| ‖φ_i(init)‖∞`, which keeps the tolerance meaningful when
//! individual score terms are large. A point is accepted as a root when the
//! residual is below `tol` times that scale and the Newton step there is
//! negligible against `1 + ‖β‖∞`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{max_abs, Matrix};
use crate::models::EstimatingEquation;
use crate::{Error, Result};

/// Jacobians with an equilibrated condition estimate above this are singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed per iteration.
    pub max_halvings: usize,
    /// Relative Newton-step size accepted at a root.
    pub step_tol: f64,
    /// `None` uses the model default.
    pub init: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            max_halvings: 30,
            step_tol: 1e-5,
            init: None,
        }
    }
}

impl SolveOptions {
    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.step_tol > 0.0) {
            return Err(Error::Parameter(
                "tol > 0 and max_iter >= 1 required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub beta: Vec<f64>,
    /// `‖Σ w_i φ_i(β)‖∞` divided by the score scale.
    pub residual_norm: f64,
    pub iterations: usize,
    /// `Σ w_i φ_1i(β)` at `beta`.
    pub jacobian_at_root: Matrix,
    pub converged: bool,
    pub score_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Root {
    pub solution: Solution,
    /// Weighted least-squares criterion, when the model defines one.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Root with the smallest objective, or the first found.
    pub fn best(&self) -> &Root {
        self.roots
            .iter()
            .min_by(|a, b| {
                let key = |r: &Root| r.objective.unwrap_or(f64::INFINITY);
                key(a).total_cmp(&key(b))
            })
            .expect("root sets are never empty")
    }
}

fn check_weights<M: EstimatingEquation + ?Sized>(model: &M, weights: &[f64]) -> Result<()> {
    if weights.len() != model.len() {
        return Err(Error::Shape {
            expected: model.len(),
            found: weights.len(),
        });
    }
    Ok(())
}

/// `Σ_i w_i φ_i(β)`.
pub fn weighted_score<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    beta: &[f64],
) -> Result<Vec<f64>> {
    check_weights(model, weights)?;
    let mut total = vec![0.0; model.dim()];
    let mut term = vec![0.0; model.dim()];
    accumulate_score(model, weights, beta, &mut total, &mut term)?;
    Ok(total)
}

/// `Σ_i w_i φ_1i(β)`.
pub fn weighted_jacobian<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    beta: &[f64],
) -> Result<Matrix> {
    check_weights(model, weights)?;
    let p = model.dim();
    let mut total = Matrix::zeros(p, p);
    let mut term = Matrix::zeros(p, p);
    for (i, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            model.score_jacobian(i, beta, &mut term)?;
            total.axpy(w, &term);
        }
    }
    Ok(total)
}

fn accumulate_score<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    beta: &[f64],
    total: &mut [f64],
    term: &mut [f64],
) -> Result<()> {
    total.iter_mut().for_each(|t| *t = 0.0);
    for (i, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            model.score(i, beta, term)?;
            for (t, s) in total.iter_mut().zip(term.iter()) {
                *t += w * s;
            }
        }
    }
    Ok(())
}

/// `1 + Σ|w_i| ‖φ_i(β)‖∞`.
fn score_scale<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    beta: &[f64],
    term: &mut [f64],
) -> Result<f64> {
    let mut scale = 1.0;
    for (i, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            model.score(i, beta, term)?;
            scale += w.abs() * max_abs(term);
        }
    }
    Ok(scale)
}

/// Solves `Σ w_i φ_i(β) = 0` by Newton iteration with step halving on `‖S‖²`.
pub fn solve_weighted<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    options: &SolveOptions,
) -> Result<Solution> {
    options.validate()?;
    check_weights(model, weights)?;
    let p = model.dim();
    let mut beta = options.init.clone().unwrap_or_else(|| model.default_init());
    if beta.len() != p {
        return Err(Error::Shape {
            expected: p,
            found: beta.len(),
        });
    }
    if !model.in_domain(&beta) {
        return Err(Error::Parameter(
            "initial value outside the model domain".into(),
        ));
    }
    let mut term = vec![0.0; p];
    let scale = score_scale(model, weights, &beta, &mut term)?;
    let mut score = vec![0.0; p];
    accumulate_score(model, weights, &beta, &mut score, &mut term)?;
    let mut candidate = vec![0.0; p];
    let mut cand_score = vec![0.0; p];

    for iter in 0..options.max_iter {
        let jac = weighted_jacobian(model, weights, &beta)?;
        let residual = max_abs(&score) / scale;
        let small = residual <= options.tol;
        let condition = jac.scaled_condition();
        if !(condition <= MAX_CONDITION) {
            if small && iter > 0 {
                // Iterates ran into a flat region: no isolated root here.
                return Err(Error::NonConvergence {
                    last: beta,
                    iterations: iter,
                    residual,
                });
            }
            return Err(Error::SingularSystem { condition });
        }
        let neg: Vec<f64> = score.iter().map(|s| -s).collect();
        let step = jac.solve(&neg).ok_or(Error::SingularSystem { condition })?;
        if small && max_abs(&step) <= options.step_tol * (1.0 + max_abs(&beta)) {
            return Ok(Solution {
                beta,
                residual_norm: residual,
                iterations: iter,
                jacobian_at_root: jac,
                converged: true,
                score_scale: scale,
            });
        }

        let norm2 = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>();
        let current = norm2(&score);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_halvings {
            for k in 0..p {
                candidate[k] = beta[k] + t * step[k];
            }
            if model.in_domain(&candidate)
                && accumulate_score(model, weights, &candidate, &mut cand_score, &mut term).is_ok()
                && norm2(&cand_score) < current
            {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                last: beta,
                iterations: iter,
                residual,
            });
        }
        beta.copy_from_slice(&candidate);
        score.copy_from_slice(&cand_score);
    }
    let residual = max_abs(&score) / scale;
    Err(Error::NonConvergence {
        last: beta,
        iterations: options.max_iter,
        residual,
    })
}

/// Solves from every start and keeps the distinct converged roots.
///
/// Roots closer than `max(1e-6, 1e-6 ‖β‖∞)` in max-norm are merged.
pub fn solve_multistart<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    starts: &[Vec<f64>],
    options: &SolveOptions,
) -> Result<RootSet> {
    if starts.is_empty() {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    let mut roots: Vec<Root> = Vec::new();
    for start in starts {
        let opts = SolveOptions {
            init: Some(start.clone()),
            ..options.clone()
        };
        let solution = match solve_weighted(model, weights, &opts) {
            Ok(s) => s,
            Err(Error::Shape { expected, found }) => return Err(Error::Shape { expected, found }),
            Err(_) => continue,
        };
        let radius = 1e-6_f64.max(1e-6 * max_abs(&solution.beta));
        let duplicate = roots.iter().any(|r| {
            r.solution
                .beta
                .iter()
                .zip(&solution.beta)
                .all(|(a, b)| (a - b).abs() <= radius)
        });
        if !duplicate {
            let objective = model.objective(weights, &solution.beta);
            roots.push(Root {
                solution,
                objective,
            });
        }
    }
    if roots.is_empty() {
        return Err(Error::EmptyRootSet);
    }
    Ok(RootSet { roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Ar1, Group, LinearRegression, Logistic, LogisticLevel};
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    /// Every term contributes `β² − 1`.
    struct Quadratic(usize);

    impl EstimatingEquation for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn len(&self) -> usize {
            self.0
        }
        fn score(&self, _i: usize, beta: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = beta[0] * beta[0] - 1.0;
            Ok(())
        }
        fn score_jacobian(&self, _i: usize, beta: &[f64], out: &mut Matrix) -> Result<()> {
            out[(0, 0)] = 2.0 * beta[0];
            Ok(())
        }
        fn score_hessians(&self, _i: usize, _beta: &[f64], out: &mut [Matrix]) -> Result<()> {
            out[0][(0, 0)] = 2.0;
            Ok(())
        }
    }

    #[test]
    fn weighted_score_examples() {
        let m = LinearRegression::simple(vec![1.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(weighted_score(&m, &[0.0, 0.0], &[5.0]).unwrap(), vec![0.0]);
        assert_eq!(weighted_score(&m, &[2.0, 0.0], &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(weighted_score(&m, &[1.0, 1.0], &[0.0]).unwrap(), vec![4.0]);
        assert!(matches!(
            weighted_score(&m, &[1.0], &[0.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn linear_model_matches_closed_form() {
        let mut rng = stream(21, 0);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|x| 0.7 * x + rng.random_range(-1.0..1.0))
            .collect();
        let closed = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
            / x.iter().map(|a| a * a).sum::<f64>();
        let m = LinearRegression::simple(x, y).unwrap();
        let s = solve_weighted(&m, &[1.0; 50], &SolveOptions::default()).unwrap();
        assert!(s.converged);
        assert!(s.iterations <= 2);
        assert!((s.beta[0] - closed).abs() < 1e-12);
    }

    #[test]
    fn ar1_matches_ratio() {
        let m = crate::models::simulate_ar1(0.2, 1.0, 100.0, 200, &mut stream(1, 1)).unwrap();
        let s = solve_weighted(&m, &vec![1.0; m.len()], &SolveOptions::default()).unwrap();
        assert!(s.iterations <= 2);
        assert!((s.beta[0] - m.least_squares()).abs() < 1e-12);
        let m = Ar1::new(vec![0.0, 1.0, 2.0]).unwrap();
        let s = solve_weighted(&m, &[1.0, 1.0], &SolveOptions::default()).unwrap();
        assert!((s.beta[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn separated_logistic_does_not_converge() {
        let groups = [
            Group {
                trials: 3,
                x: -1.0,
                successes: 0,
            },
            Group {
                trials: 3,
                x: 1.0,
                successes: 3,
            },
        ];
        let m = Logistic::new(&groups, LogisticLevel::Trial).unwrap();
        let r = solve_weighted(&m, &vec![1.0; m.len()], &SolveOptions::default());
        assert!(matches!(r, Err(Error::NonConvergence { .. })), "{r:?}");
    }

    #[test]
    fn logistic_fit_is_a_root() {
        let groups = [
            Group {
                trials: 10,
                x: -1.0,
                successes: 2,
            },
            Group {
                trials: 10,
                x: 0.0,
                successes: 5,
            },
            Group {
                trials: 10,
                x: 1.0,
                successes: 7,
            },
        ];
        let m = Logistic::new(&groups, LogisticLevel::Trial).unwrap();
        let w = vec![1.0; m.len()];
        let s = solve_weighted(&m, &w, &SolveOptions::default()).unwrap();
        let g = Logistic::new(&groups, LogisticLevel::Group).unwrap();
        let sg = solve_weighted(&g, &[1.0; 3], &SolveOptions::default()).unwrap();
        assert!((s.beta[0] - sg.beta[0]).abs() < 1e-9 && (s.beta[1] - sg.beta[1]).abs() < 1e-9);
    }

    #[test]
    fn singular_jacobian() {
        let m = LinearRegression::simple(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let r = solve_weighted(&m, &[1.0, 1.0], &SolveOptions::default());
        assert!(matches!(r, Err(Error::SingularSystem { .. })), "{r:?}");
    }

    #[test]
    fn multistart_quadratic() {
        let m = Quadratic(3);
        let set = solve_multistart(
            &m,
            &[1.0; 3],
            &[vec![-2.0], vec![2.0]],
            &SolveOptions::default(),
        )
        .unwrap();
        let mut roots: Vec<f64> = set.roots.iter().map(|r| r.solution.beta[0]).collect();
        roots.sort_by(f64::total_cmp);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 1.0).abs() < 1e-10 && (roots[1] - 1.0).abs() < 1e-10);

        let set = solve_multistart(
            &m,
            &[1.0; 3],
            &[vec![2.0], vec![3.0]],
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn multistart_with_no_root() {
        let m = LinearRegression::simple(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let r = solve_multistart(&m, &[1.0, 1.0], &[vec![0.0]], &SolveOptions::default());
        assert!(matches!(r, Err(Error::EmptyRootSet)));
    }

    #[test]
    fn multistart_attaches_least_squares_objective() {
        let m = LinearRegression::simple(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let set =
            solve_multistart(&m, &[1.0, 1.0], &[vec![0.0]], &SolveOptions::default()).unwrap();
        let root = set.best();
        let b = root.solution.beta[0];
        let psi = (1.0 - b) * (1.0 - b) + (1.0 - 2.0 * b) * (1.0 - 2.0 * b);
        assert!((root.objective.unwrap() - psi).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn root_certificate_and_weight_scale_invariance(
            seed in 0u64..1000,
            c in 0.01f64..100.0,
        ) {
            let mut rng = stream(seed, 0);
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = x.iter().map(|x| -0.5 + 1.5 * x + rng.random_range(-1.0..1.0)).collect();
            let groups: Vec<Group> = x
                .iter()
                .zip(&y)
                .map(|(&x, &y)| Group { trials: 4, x, successes: ((1.0 + libm::tanh(y)) * 2.0) as usize })
                .collect();
            let m = Logistic::new(&groups, LogisticLevel::Group).unwrap();
            let w: Vec<f64> = (0..20).map(|_| rng.random_range(0.5..1.5)).collect();
            let opts = SolveOptions::default();
            if let Ok(s) = solve_weighted(&m, &w, &opts) {
                let score = weighted_score(&m, &w, &s.beta).unwrap();
                prop_assert!(max_abs(&score) <= opts.tol * s.score_scale);
                let cw: Vec<f64> = w.iter().map(|v| c * v).collect();
                let sc = solve_weighted(&m, &cw, &opts).unwrap();
                for (a, b) in s.beta.iter().zip(&sc.beta) {
                    prop_assert!((a - b).abs() <= 10.0 * opts.tol * (1.0 + a.abs()));
                }
            }
        }
    }
}
