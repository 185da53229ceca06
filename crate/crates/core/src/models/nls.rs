use alloc::vec::Vec;

use super::{EstimatingEquation, ResidualModel};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Ratio of equilibrium constants in the rate numerator.
const ISOPENTANE_RATIO: f64 = 1.632;

/// Partial pressures `H`, `P`, `I` and the observed reaction rate `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsomerizationRow {
    pub h: f64,
    pub p: f64,
    pub i: f64,
    pub y: f64,
}

/// `f(X, θ) = θ₁θ₃(P − I/1.632) / (1 + θ₂H + θ₃P + θ₄I)`.
pub fn isomerization_rate(row: &IsomerizationRow, theta: &[f64]) -> f64 {
    theta[0] * theta[2] * numerator(row) / denominator(row, theta)
}

fn numerator(row: &IsomerizationRow) -> f64 {
    row.p - row.i / ISOPENTANE_RATIO
}

fn denominator(row: &IsomerizationRow, theta: &[f64]) -> f64 {
    1.0 + theta[1] * row.h + theta[2] * row.p + theta[3] * row.i
}

/// Least-squares fit of the isomerization rate model, score `∇f (y − f)`.
///
/// Parameters with a zero denominator at some row are outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Isomerization {
    rows: Vec<IsomerizationRow>,
}

/// Value and derivatives of `f` up to third order at one row.
struct Derivatives {
    f: f64,
    d1: [f64; 4],
    d2: [[f64; 4]; 4],
    d3: [[[f64; 4]; 4]; 4],
}

impl Isomerization {
    pub fn new(rows: Vec<IsomerizationRow>) -> Result<Self> {
        if rows.len() < 4 {
            return Err(Error::InsufficientSample {
                needed: 4,
                found: rows.len(),
            });
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[IsomerizationRow] {
        &self.rows
    }

    /// Unweighted `Ψ(θ) = Σ(y_i − f(X_i, θ))²`.
    pub fn psi(&self, theta: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let e = r.y - isomerization_rate(r, theta);
                e * e
            })
            .sum()
    }

    /// Levenberg–Marquardt descent on `Σ w_i (y_i − f(X_i, θ))²` from `start`.
    ///
    /// Returns the last accepted point. It is a candidate start for the root
    /// solver, not a certified root. `None` when `start` is outside the domain.
    pub fn minimize(&self, weights: &[f64], start: &[f64], max_iter: usize) -> Option<Vec<f64>> {
        let mut theta = start.to_vec();
        let mut obj = self
            .objective(weights, &theta)
            .filter(|o| o.is_finite() && self.in_domain(&theta))?;
        let mut lambda = 1e-3;
        for _ in 0..max_iter {
            let mut a = Matrix::zeros(4, 4);
            let mut g = [0.0; 4];
            for (i, w) in weights.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let d = self.derivatives(i, &theta, 1).ok()?;
                let e = self.rows[i].y - d.f;
                for r in 0..4 {
                    g[r] += w * d.d1[r] * e;
                    for c in 0..4 {
                        a[(r, c)] += w * d.d1[r] * d.d1[c];
                    }
                }
            }
            let scale = (0..4).map(|k| a[(k, k)]).fold(0.0, f64::max);
            if !(scale > 0.0) {
                break;
            }
            let mut accepted = false;
            while lambda < 1e16 {
                let mut m = a.clone();
                for k in 0..4 {
                    m[(k, k)] += lambda * a[(k, k)].max(1e-12 * scale);
                }
                let Some(step) = m.solve(&g) else {
                    lambda *= 4.0;
                    continue;
                };
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
                match self.objective(weights, &cand) {
                    Some(o) if o.is_finite() && o < obj && self.in_domain(&cand) => {
                        let small = crate::linalg::max_abs(&step)
                            <= 1e-13 * (1.0 + crate::linalg::max_abs(&theta));
                        let flat = obj - o <= 1e-15 * obj;
                        theta = cand;
                        obj = o;
                        lambda = (lambda / 3.0).max(1e-12);
                        accepted = true;
                        if small || flat {
                            return Some(theta);
                        }
                        break;
                    }
                    _ => lambda *= 4.0,
                }
            }
            if !accepted {
                break;
            }
        }
        Some(theta)
    }

    fn derivatives(&self, i: usize, theta: &[f64], order: usize) -> Result<Derivatives> {
        let row = &self.rows[i];
        let d = denominator(row, theta);
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Domain { index: i });
        }
        let u = numerator(row);
        // f = N g with N = θ₁θ₃u and g = 1/D, D linear in θ with gradient v.
        let v = [0.0, row.h, row.p, row.i];
        let g = 1.0 / d;
        let big_n = theta[0] * theta[2] * u;
        let n1 = [theta[2] * u, 0.0, theta[0] * u, 0.0];
        let n2 = |a: usize, b: usize| {
            if (a, b) == (0, 2) || (a, b) == (2, 0) {
                u
            } else {
                0.0
            }
        };
        let g1 = |a: usize| -v[a] * g * g;
        let g2 = |a: usize, b: usize| 2.0 * v[a] * v[b] * g * g * g;
        let g3 = |a: usize, b: usize, c: usize| -6.0 * v[a] * v[b] * v[c] * g * g * g * g;

        let mut out = Derivatives {
            f: big_n * g,
            d1: [0.0; 4],
            d2: [[0.0; 4]; 4],
            d3: [[[0.0; 4]; 4]; 4],
        };
        for a in 0..4 {
            out.d1[a] = n1[a] * g + big_n * g1(a);
            if order < 2 {
                continue;
            }
            for b in 0..4 {
                out.d2[a][b] = n2(a, b) * g + n1[a] * g1(b) + n1[b] * g1(a) + big_n * g2(a, b);
                if order < 3 {
                    continue;
                }
                for c in 0..4 {
                    // N has no third derivatives.
                    out.d3[a][b][c] = n2(a, b) * g1(c)
                        + n2(a, c) * g1(b)
                        + n2(b, c) * g1(a)
                        + n1[a] * g2(b, c)
                        + n1[b] * g2(a, c)
                        + n1[c] * g2(a, b)
                        + big_n * g3(a, b, c);
                }
            }
        }
        Ok(out)
    }
}

impl EstimatingEquation for Isomerization {
    fn dim(&self) -> usize {
        4
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn score(&self, i: usize, theta: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.derivatives(i, theta, 1)?;
        let e = self.rows[i].y - d.f;
        for a in 0..4 {
            out[a] = d.d1[a] * e;
        }
        Ok(())
    }

    fn score_jacobian(&self, i: usize, theta: &[f64], out: &mut Matrix) -> Result<()> {
        let d = self.derivatives(i, theta, 2)?;
        let e = self.rows[i].y - d.f;
        for a in 0..4 {
            for b in 0..4 {
                out[(a, b)] = d.d2[a][b] * e - d.d1[a] * d.d1[b];
            }
        }
        Ok(())
    }

    fn score_hessians(&self, i: usize, theta: &[f64], out: &mut [Matrix]) -> Result<()> {
        let d = self.derivatives(i, theta, 3)?;
        let e = self.rows[i].y - d.f;
        for (a, h) in out.iter_mut().enumerate() {
            for b in 0..4 {
                for c in 0..4 {
                    h[(b, c)] = d.d3[a][b][c] * e
                        - d.d2[a][b] * d.d1[c]
                        - d.d2[a][c] * d.d1[b]
                        - d.d1[a] * d.d2[b][c];
                }
            }
        }
        Ok(())
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.iter().all(|t| t.is_finite())
            && self.rows.iter().all(|r| {
                let d = denominator(r, theta);
                d != 0.0 && d.is_finite()
            })
    }

    fn objective(&self, weights: &[f64], theta: &[f64]) -> Option<f64> {
        Some(
            self.rows
                .iter()
                .zip(weights)
                .map(|(r, w)| {
                    let e = r.y - isomerization_rate(r, theta);
                    w * e * e
                })
                .sum(),
        )
    }
}

impl ResidualModel for Isomerization {
    type FixedDesign = Isomerization;

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.y - isomerization_rate(r, theta))
            .collect()
    }

    fn rebuild(&self, theta: &[f64], residuals: &[f64]) -> Result<Self> {
        if residuals.len() != self.rows.len() {
            return Err(Error::Shape {
                expected: self.rows.len(),
                found: residuals.len(),
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(residuals)
            .map(|(r, e)| IsomerizationRow {
                y: isomerization_rate(r, theta) + e,
                ..*r
            })
            .collect();
        Self::new(rows)
    }

    /// Same as [`rebuild`](Self::rebuild): the design is fixed already.
    fn perturb(&self, theta: &[f64], residuals: &[f64]) -> Result<Self> {
        self.rebuild(theta, residuals)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fd::{check_hessians, check_jacobian};
    use super::super::EstimatingEquationExt;
    use super::*;
    use crate::rng::stream;
    use alloc::vec;
    use rand::Rng;

    const THETA_HAT: [f64; 4] = [35.9193, 0.0708583, 0.0377385, 0.167166];

    fn rows() -> Vec<IsomerizationRow> {
        [
            (205.8, 90.9, 37.1),
            (404.8, 92.9, 36.3),
            (209.7, 174.9, 49.4),
            (401.6, 187.2, 44.9),
            (224.9, 92.7, 116.3),
        ]
        .iter()
        .enumerate()
        .map(|(k, &(h, p, i))| IsomerizationRow {
            h,
            p,
            i,
            y: 1.0 + k as f64,
        })
        .collect()
    }

    #[test]
    fn rebuild_with_own_residuals_is_identity() {
        let m = Isomerization::new(rows()).unwrap();
        let e = m.residuals(&THETA_HAT);
        let back = m.rebuild(&THETA_HAT, &e).unwrap();
        for (a, b) in back.rows().iter().zip(m.rows()) {
            assert!((a.y - b.y).abs() < 1e-12);
        }
    }

    #[test]
    fn minimize_reaches_a_root() {
        use crate::solver::{solve_weighted, SolveOptions};
        let m = Isomerization::new(rows()).unwrap();
        let w = vec![1.0, 2.0, 0.5, 1.0, 1.5];
        let start = [30.0, 0.05, 0.03, 0.1];
        let t = m.minimize(&w, &start, 500).unwrap();
        assert!(m.objective(&w, &t).unwrap() <= m.objective(&w, &start).unwrap());
        let sol = solve_weighted(&m, &w, &SolveOptions::default().with_init(t.clone()));
        if let Ok(sol) = sol {
            let o = m.objective(&w, &sol.beta).unwrap();
            assert!((o - m.objective(&w, &t).unwrap()).abs() <= 1e-6 * (1.0 + o));
        }
    }

    #[test]
    fn exact_fit_has_zero_scores() {
        let rows: Vec<IsomerizationRow> = rows()
            .into_iter()
            .map(|r| IsomerizationRow {
                y: isomerization_rate(&r, &THETA_HAT),
                ..r
            })
            .collect();
        let m = Isomerization::new(rows).unwrap();
        for i in 0..m.len() {
            assert!(m
                .score_vec(i, &THETA_HAT)
                .unwrap()
                .iter()
                .all(|s| s.abs() < 1e-12));
        }
    }

    #[test]
    fn zero_numerator_row() {
        let row = IsomerizationRow {
            h: 100.0,
            p: 163.2,
            i: 266.3424,
            y: 2.0,
        };
        let m = Isomerization::new(vec![row; 4]).unwrap();
        assert!(isomerization_rate(&row, &THETA_HAT).abs() < 1e-12);
        let s = m.score_vec(0, &THETA_HAT).unwrap();
        assert!(s[0].abs() < 1e-12 && s[2].abs() < 1e-12);
        assert!(s[1].abs() < 1e-12 && s[3].abs() < 1e-12);
    }

    #[test]
    fn gradient_at_published_estimate() {
        let m = Isomerization::new(rows()).unwrap();
        for i in 0..m.len() {
            assert!(check_jacobian(&m, i, &THETA_HAT, 1e-5));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = Isomerization::new(rows()).unwrap();
        let mut rng = stream(13, 0);
        for _ in 0..100 {
            let theta = [
                rng.random_range(20.0..50.0),
                rng.random_range(0.01..0.2),
                rng.random_range(0.01..0.2),
                rng.random_range(0.01..0.3),
            ];
            let i = rng.random_range(0..m.len());
            assert!(check_jacobian(&m, i, &theta, 1e-5));
            assert!(check_hessians(&m, i, &theta, 1e-4));
        }
    }

    #[test]
    fn zero_denominator_is_a_domain_error() {
        let m = Isomerization::new(rows()).unwrap();
        let r = m.rows()[2];
        // Choose θ₂ so that 1 + θ₂H = 0 with θ₃ = θ₄ = 0.
        let theta = [1.0, -1.0 / r.h, 0.0, 0.0];
        assert!(matches!(
            m.score_vec(2, &theta),
            Err(Error::Domain { index: 2 })
        ));
        assert!(!m.in_domain(&theta));
        assert!(m.in_domain(&THETA_HAT));
    }
}
