use alloc::vec::Vec;

use rand::Rng;

use super::EstimatingEquation;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Exponent clamp for `1 / (1 + e^{−t})`.
const LOGIT_CLAMP: f64 = 500.0;

/// `1 / (1 + e^{−t})` with `t` clamped to `±500`.
pub fn expit(t: f64) -> f64 {
    let t = t.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// Dose group: `trials` binary outcomes at covariate `x`, `successes` of them positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Group {
    pub trials: usize,
    pub x: f64,
    pub successes: usize,
}

/// Whether each binary trial or each group is one score term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogisticLevel {
    #[default]
    Trial,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Unit {
    x: f64,
    trials: f64,
    /// Fractional values are allowed.
    successes: f64,
    group: usize,
}

/// Binomial logistic regression `logit p = β₀ + β₁x` with score
/// `(1, x)ᵀ(Y − N p)` per term.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    units: Vec<Unit>,
    groups: usize,
}

impl Logistic {
    pub fn new(groups: &[Group], level: LogisticLevel) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InsufficientSample {
                needed: 1,
                found: 0,
            });
        }
        let mut units = Vec::new();
        for (g, grp) in groups.iter().enumerate() {
            if grp.successes > grp.trials {
                return Err(Error::Parameter(alloc::format!(
                    "group {g} has {} successes out of {} trials",
                    grp.successes,
                    grp.trials
                )));
            }
            match level {
                LogisticLevel::Group => units.push(Unit {
                    x: grp.x,
                    trials: grp.trials as f64,
                    successes: grp.successes as f64,
                    group: g,
                }),
                LogisticLevel::Trial => {
                    for j in 0..grp.trials {
                        units.push(Unit {
                            x: grp.x,
                            trials: 1.0,
                            successes: if j < grp.successes { 1.0 } else { 0.0 },
                            group: g,
                        });
                    }
                }
            }
        }
        Ok(Self {
            units,
            groups: groups.len(),
        })
    }

    /// Single-trial terms `(x_j, y_j)` with `y_j ∈ [0, 1]`, possibly fractional.
    pub fn from_trials(x: &[f64], y: &[f64], group: &[usize]) -> Result<Self> {
        if x.len() != y.len() || x.len() != group.len() {
            return Err(Error::Shape {
                expected: x.len(),
                found: y.len().min(group.len()),
            });
        }
        if let Some(j) = y.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Parameter(alloc::format!(
                "response {j} outside [0, 1]"
            )));
        }
        let units = x
            .iter()
            .zip(y)
            .zip(group)
            .map(|((&x, &s), &g)| Unit {
                x,
                trials: 1.0,
                successes: s,
                group: g,
            })
            .collect();
        Ok(Self {
            units,
            groups: group.iter().max().map_or(0, |g| g + 1),
        })
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.units[i].group
    }

    pub fn covariate(&self, i: usize) -> f64 {
        self.units[i].x
    }

    /// Response of term `i` (success count, or 0/1 at trial level).
    pub fn response(&self, i: usize) -> f64 {
        self.units[i].successes
    }

    pub fn trials(&self, i: usize) -> f64 {
        self.units[i].trials
    }
}

impl EstimatingEquation for Logistic {
    fn dim(&self) -> usize {
        2
    }

    fn len(&self) -> usize {
        self.units.len()
    }

    fn score(&self, i: usize, beta: &[f64], out: &mut [f64]) -> Result<()> {
        let u = &self.units[i];
        let r = u.successes - u.trials * expit(beta[0] + beta[1] * u.x);
        out[0] = r;
        out[1] = u.x * r;
        Ok(())
    }

    fn score_jacobian(&self, i: usize, beta: &[f64], out: &mut Matrix) -> Result<()> {
        let u = &self.units[i];
        let p = expit(beta[0] + beta[1] * u.x);
        let v = u.trials * p * (1.0 - p);
        let z = [1.0, u.x];
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = -v * z[a] * z[b];
            }
        }
        Ok(())
    }

    fn score_hessians(&self, i: usize, beta: &[f64], out: &mut [Matrix]) -> Result<()> {
        let u = &self.units[i];
        let p = expit(beta[0] + beta[1] * u.x);
        let v = u.trials * p * (1.0 - p) * (1.0 - 2.0 * p);
        let z = [1.0, u.x];
        for (a, h) in out.iter_mut().enumerate() {
            for b in 0..2 {
                for c in 0..2 {
                    h[(b, c)] = -v * z[a] * z[b] * z[c];
                }
            }
        }
        Ok(())
    }
}

/// Draws each group's successes as `trials` independent Bernoulli(p_i) outcomes.
pub fn simulate_groups<R: Rng + ?Sized>(
    beta: &[f64],
    design: &[(usize, f64)],
    rng: &mut R,
) -> Vec<Group> {
    design
        .iter()
        .map(|&(trials, x)| {
            let p = expit(beta[0] + beta[1] * x);
            let successes = (0..trials).filter(|_| rng.random::<f64>() < p).count();
            Group {
                trials,
                x,
                successes,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::fd::{check_hessians, check_jacobian};
    use super::super::EstimatingEquationExt;
    use super::*;
    use crate::rng::stream;
    use alloc::vec;

    #[test]
    fn score_examples() {
        let m = Logistic::new(
            &[Group {
                trials: 2,
                x: 1.0,
                successes: 2,
            }],
            LogisticLevel::Group,
        )
        .unwrap();
        assert_eq!(m.score_vec(0, &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        // Fractional response equal to N p gives a zero score.
        let t = 0.3 + 0.7 * 2.0;
        let m = Logistic::from_trials(&[2.0], &[expit(t)], &[0]).unwrap();
        let s = m.score_vec(0, &[0.3, 0.7]).unwrap();
        assert!(s[0].abs() < 1e-15 && s[1].abs() < 1e-15);
    }

    #[test]
    fn trial_level_expands_groups() {
        let g = [
            Group {
                trials: 3,
                x: 0.5,
                successes: 1,
            },
            Group {
                trials: 2,
                x: 1.5,
                successes: 2,
            },
        ];
        let m = Logistic::new(&g, LogisticLevel::Trial).unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(m.group_count(), 2);
        let total: f64 = (0..5).map(|i| m.response(i)).sum();
        assert_eq!(total, 3.0);
        assert_eq!(m.group_of(4), 1);
    }

    #[test]
    fn rejects_impossible_counts() {
        let g = [Group {
            trials: 2,
            x: 0.0,
            successes: 3,
        }];
        assert!(Logistic::new(&g, LogisticLevel::Group).is_err());
    }

    #[test]
    fn expit_is_overflow_safe() {
        assert_eq!(expit(1e6), 1.0);
        assert_eq!(expit(-1e6), expit(-500.0));
        assert!(expit(-1e6) > 0.0);
        assert!((expit(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = stream(7, 0);
        for _ in 0..100 {
            let g = Group {
                trials: rng.random_range(1..20),
                x: rng.random_range(2.0..3.5),
                successes: 0,
            };
            let g = Group {
                successes: g.trials / 2,
                ..g
            };
            let m = Logistic::new(&[g], LogisticLevel::Group).unwrap();
            let beta = [rng.random_range(-20.0..-10.0), rng.random_range(3.0..8.0)];
            assert!(check_jacobian(&m, 0, &beta, 1e-5));
            assert!(check_hessians(&m, 0, &beta, 1e-4));
        }
    }

    #[test]
    fn simulated_success_rate() {
        let beta = [-17.90, 6.3];
        let x = libm::log(18.2);
        let p = expit(beta[0] + beta[1] * x);
        let g = simulate_groups(&beta, &[(100_000, x)], &mut stream(4, 0));
        let rate = g[0].successes as f64 / 1e5;
        let se = libm::sqrt(p * (1.0 - p) / 1e5);
        assert!((rate - p).abs() < 3.0 * se, "{rate} vs {p}");
    }
}
