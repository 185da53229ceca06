use alloc::vec::Vec;

use super::BootstrapSample;
use crate::linalg::{dot, Matrix};
use crate::models::EstimatingEquation;
use crate::solver::weighted_jacobian;
use crate::stats::normal_cdf;
use crate::{Error, Result};

/// Equal-mass distribution on finitely many finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientSample {
                needed: 1,
                found: 0,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(alloc::format!("value {i} is not finite")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest value with `cdf >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let k = libm::ceil(round9(q * n as f64)) as usize;
        self.sorted[k.clamp(1, n) - 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.sorted.iter().map(|&v| f(v)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Guards floor/ceil against products like `1000 × 0.025` landing just off an integer.
fn round9(x: f64) -> f64 {
    libm::round(x * 1e9) / 1e9
}

/// Equal-tail percentile interval.
///
/// With `B` sorted values and `α = 1 − level`, the bounds are the order
/// statistics `x_(⌊Bα/2⌋ + 1)` and `x_(⌈B(1 − α/2)⌉)`; for `B = 1000` at
/// level 0.95 these are the 26th and 975th values.
pub fn percentile_ci(values: &[f64], level: f64) -> Result<Interval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter("level must lie in (0, 1)".into()));
    }
    if values.len() < 10 {
        return Err(Error::InsufficientSample {
            needed: 10,
            found: values.len(),
        });
    }
    let dist = EmpiricalDistribution::new(values.to_vec())?;
    let b = values.len() as f64;
    let alpha = 1.0 - level;
    let lo = libm::floor(round9(b * alpha / 2.0)) as usize + 1;
    let hi = libm::ceil(round9(b * (1.0 - alpha / 2.0))) as usize;
    let n = dist.len();
    Ok(Interval {
        lo: dist.sorted[lo.clamp(1, n) - 1],
        hi: dist.sorted[hi.clamp(1, n) - 1],
    })
}

/// The bootstrap law `F_Bn` of the normalized replicates.
///
/// For `p = 1` without a contrast the draws are scaled by
/// `σ_n⁻¹ |Σφ_1i(β̂_n)|^{1/2}`. Otherwise `c` (unit length) projects them and
/// the scale is `ŝ_n⁻¹ σ_n⁻¹` with
/// `ŝ_n² = p⁻² [J⁻¹c]ᵀ [Σφ_iφ_iᵀ] [J⁻¹c]` and `J = Σφ_1i(β̂_n)`.
pub fn fbn_distribution<M: EstimatingEquation + ?Sized>(
    model: &M,
    sample: &BootstrapSample,
    contrast: Option<&[f64]>,
) -> Result<EmpiricalDistribution> {
    let p = model.dim();
    let beta_hat = &sample.beta_hat;
    if sample.sigma2 <= 0.0 {
        return Err(Error::Parameter("weight variance must be positive".into()));
    }
    let sigma = libm::sqrt(sample.sigma2);
    let ones = alloc::vec![1.0; model.len()];
    let jac = weighted_jacobian(model, &ones, beta_hat)?;
    let (c, scale) = match contrast {
        None if p == 1 => (alloc::vec![1.0], libm::sqrt(jac[(0, 0)].abs()) / sigma),
        None => {
            return Err(Error::Parameter("a contrast is required when p > 1".into()));
        }
        Some(c) => {
            if c.len() != p {
                return Err(Error::Shape {
                    expected: p,
                    found: c.len(),
                });
            }
            let norm = libm::sqrt(dot(c, c));
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Parameter("contrast must have unit length".into()));
            }
            let u = jac.solve(c).ok_or(Error::SingularSystem {
                condition: f64::INFINITY,
            })?;
            let mut meat = Matrix::zeros(p, p);
            let mut phi = alloc::vec![0.0; p];
            for i in 0..model.len() {
                model.score(i, beta_hat, &mut phi)?;
                meat.axpy(1.0, &Matrix::outer(&phi, &phi));
            }
            let s2 = dot(&u, &meat.mul_vec(&u)) / (p * p) as f64;
            (c.to_vec(), 1.0 / (libm::sqrt(s2) * sigma))
        }
    };
    let values = sample
        .draws
        .iter()
        .map(|d| {
            let dev: Vec<f64> = d.beta.iter().zip(beta_hat).map(|(b, h)| b - h).collect();
            scale * dot(&c, &dev)
        })
        .collect();
    EmpiricalDistribution::new(values)
}

/// `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (x, y) = (&a.sorted, &b.sorted);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / nx - j as f64 / ny).abs());
    }
    best
}

/// `sup_x |F_a(x) − Φ(x)|`.
pub fn ks_distance_normal(a: &EmpiricalDistribution) -> f64 {
    let n = a.sorted.len() as f64;
    a.sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal_cdf(x);
            (phi - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - phi).abs())
        })
        .fold(0.0, f64::max)
}
