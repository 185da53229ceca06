//! Exchangeable bootstrap weight laws.
//!
//! Every law here is normalized to unit mean, so a draw can be used directly
//! as the weight vector of a reweighted estimating equation. The closed-form
//! moments of the standardized weights `W_i = (w_i - 1) / σ_n` are in
//! [`moments`]; [`conditions`] turns their growth rates over a grid of `n`
//! into pass/fail verdicts.

pub mod conditions;
pub mod moments;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::{Error, Result};

pub use conditions::{
    check_conditions, CheckSettings, Clause, ConditionReport, GridPoint, Verdict,
};
pub use moments::{
    empirical_moments, empirical_moments_weighted, enumerate_support, enumerate_support_capped,
    theoretical_moments, MixedMoment, WeightMoments, DEFAULT_SUPPORT_CAP, FOURTH_ORDER_PATTERNS,
    THIRD_ORDER_PATTERNS,
};

/// The weight law, without the vector length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// Multinomial(n; 1/n, ..., 1/n) counts: the paired (classical) bootstrap.
    Multinomial,
    /// Multinomial(m; 1/n, ..., 1/n) counts rescaled by `n / m`.
    MOutOfN { m: usize },
    /// Weight `n / (n - d)` on a uniformly chosen `(n - d)`-subset, zero elsewhere.
    DeleteDJackknife { d: usize },
    /// Weight `d / n` on a uniformly chosen `d`-subset, `(n + d) / n` elsewhere.
    DownweightDJackknife { d: usize },
    /// `n` times a symmetric Dirichlet(α, ..., α) vector.
    Dirichlet { alpha: f64 },
    /// I.i.d. Uniform(lo, hi), divided by its mean `(lo + hi) / 2`.
    IidUniform { lo: f64, hi: f64 },
    /// I.i.d. exponential; after unit-mean normalization every rate gives Exp(1).
    IidExponential { rate: f64 },
    /// All weights equal to one. Degenerate (σ² = 0); reproduces the full-data fit.
    Constant,
}

impl WeightKind {
    pub fn name(&self) -> &'static str {
        match self {
            WeightKind::Multinomial => "multinomial",
            WeightKind::MOutOfN { .. } => "moon",
            WeightKind::DeleteDJackknife { .. } => "jackknife",
            WeightKind::DownweightDJackknife { .. } => "downweight",
            WeightKind::Dirichlet { .. } => "dirichlet",
            WeightKind::IidUniform { .. } => "uniform",
            WeightKind::IidExponential { .. } => "exp",
            WeightKind::Constant => "constant",
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Multinomial | WeightKind::Constant => f.write_str(self.name()),
            WeightKind::MOutOfN { m } => write!(f, "moon:m={m}"),
            WeightKind::DeleteDJackknife { d } => write!(f, "jackknife:d={d}"),
            WeightKind::DownweightDJackknife { d } => write!(f, "downweight:d={d}"),
            WeightKind::Dirichlet { alpha } => write!(f, "dirichlet:alpha={alpha}"),
            WeightKind::IidUniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            WeightKind::IidExponential { rate } => write!(f, "exp:{rate}"),
        }
    }
}

fn parse_num<T: FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::Parameter(format!("cannot parse {what} from {text:?}")))
}

/// Reads `key=value` or a bare value.
fn keyed<'a>(arg: &'a str, key: &str) -> Result<&'a str> {
    match arg.split_once('=') {
        Some((k, v)) if k.trim() == key => Ok(v),
        Some((k, _)) => Err(Error::Parameter(format!("expected `{key}=`, found `{k}=`"))),
        None => Ok(arg),
    }
}

impl FromStr for WeightKind {
    type Err = Error;

    /// Parses `multinomial`, `moon:m=10`, `jackknife:d=2`, `downweight:d=2`,
    /// `dirichlet:alpha=1`, `uniform:0.5,1.5`, `exp:1` or `constant`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let kind = match (name.to_ascii_lowercase().as_str(), arg) {
            ("multinomial", None) => WeightKind::Multinomial,
            ("constant" | "ones", None) => WeightKind::Constant,
            ("moon", Some(a)) => WeightKind::MOutOfN {
                m: parse_num(keyed(a, "m")?, "m")?,
            },
            ("jackknife", None) => WeightKind::DeleteDJackknife { d: 1 },
            ("jackknife", Some(a)) => WeightKind::DeleteDJackknife {
                d: parse_num(keyed(a, "d")?, "d")?,
            },
            ("downweight", None) => WeightKind::DownweightDJackknife { d: 1 },
            ("downweight", Some(a)) => WeightKind::DownweightDJackknife {
                d: parse_num(keyed(a, "d")?, "d")?,
            },
            ("dirichlet", None) => WeightKind::Dirichlet { alpha: 1.0 },
            ("dirichlet", Some(a)) => WeightKind::Dirichlet {
                alpha: parse_num(keyed(a, "alpha")?, "alpha")?,
            },
            ("uniform", None) => WeightKind::IidUniform { lo: 0.5, hi: 1.5 },
            ("uniform", Some(a)) => {
                let (lo, hi) = a
                    .split_once(',')
                    .ok_or_else(|| Error::Parameter("uniform needs `lo,hi`".to_string()))?;
                WeightKind::IidUniform {
                    lo: parse_num(lo, "lo")?,
                    hi: parse_num(hi, "hi")?,
                }
            }
            ("exp", None) => WeightKind::IidExponential { rate: 1.0 },
            ("exp", Some(a)) => WeightKind::IidExponential {
                rate: parse_num(keyed(a, "rate")?, "rate")?,
            },
            _ => return Err(Error::Parameter(format!("unknown weight scheme {s:?}"))),
        };
        kind.validate(None)?;
        Ok(kind)
    }
}

impl WeightKind {
    /// Checks the parameters, and those that depend on `n` when it is given.
    fn validate(&self, n: Option<usize>) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        match *self {
            WeightKind::MOutOfN { m } if m == 0 => bad("m must be at least 1".into()),
            WeightKind::DeleteDJackknife { d } | WeightKind::DownweightDJackknife { d } => {
                if d == 0 {
                    return bad("d must be at least 1".into());
                }
                match n {
                    Some(n) if d >= n => bad(format!("d = {d} must be below n = {n}")),
                    _ => Ok(()),
                }
            }
            WeightKind::Dirichlet { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                bad(format!("alpha must be positive, got {alpha}"))
            }
            WeightKind::IidUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 {
                    bad(format!(
                        "uniform bounds must be finite with lo >= 0, got ({lo}, {hi})"
                    ))
                } else if hi <= lo {
                    bad(format!("uniform needs hi > lo, got ({lo}, {hi})"))
                } else {
                    Ok(())
                }
            }
            WeightKind::IidExponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad(format!("rate must be positive, got {rate}"))
            }
            _ => Ok(()),
        }
    }
}

/// A weight law together with the vector length `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightScheme {
    kind: WeightKind,
    n: usize,
}

impl WeightScheme {
    pub fn new(kind: WeightKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        kind.validate(Some(n))?;
        Ok(Self { kind, n })
    }

    pub fn multinomial(n: usize) -> Result<Self> {
        Self::new(WeightKind::Multinomial, n)
    }

    pub fn constant(n: usize) -> Result<Self> {
        Self::new(WeightKind::Constant, n)
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Some(n)` when every draw sums to `n`.
    pub fn fixed_sum(&self) -> Option<f64> {
        match self.kind {
            WeightKind::Multinomial
            | WeightKind::MOutOfN { .. }
            | WeightKind::DeleteDJackknife { .. }
            | WeightKind::DownweightDJackknife { .. }
            | WeightKind::Dirichlet { .. }
            | WeightKind::Constant => Some(self.n as f64),
            WeightKind::IidUniform { .. } | WeightKind::IidExponential { .. } => None,
        }
    }

    /// σ_n² = V(w_i).
    pub fn sigma2(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            WeightKind::Multinomial => (n - 1.0) / n,
            WeightKind::MOutOfN { m } => (n - 1.0) / m as f64,
            WeightKind::DeleteDJackknife { d } => d as f64 / (n - d as f64),
            WeightKind::DownweightDJackknife { d } => {
                let d = d as f64;
                d * (n - d) / (n * n)
            }
            WeightKind::Dirichlet { alpha } => (n - 1.0) / (n * alpha + 1.0),
            WeightKind::IidUniform { lo, hi } => {
                let half = (hi - lo) / (hi + lo);
                half * half / 3.0
            }
            WeightKind::IidExponential { .. } => 1.0,
            WeightKind::Constant => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightVector {
        let mut values = vec![0.0; self.n];
        self.sample_into(rng, &mut values);
        WeightVector(values)
    }

    /// Fills `out` (length `n`) with one draw.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.n, "weight buffer length");
        let n = self.n;
        match self.kind {
            WeightKind::Multinomial => counts_into(rng, n, n, out),
            WeightKind::MOutOfN { m } => counts_into(rng, m, n, out),
            WeightKind::DeleteDJackknife { d } => {
                subset_into(rng, n, d, 0.0, n as f64 / (n - d) as f64, out)
            }
            WeightKind::DownweightDJackknife { d } => subset_into(
                rng,
                n,
                d,
                d as f64 / n as f64,
                (n + d) as f64 / n as f64,
                out,
            ),
            WeightKind::Dirichlet { alpha } => {
                let gamma = Gamma::new(alpha, 1.0).expect("validated shape");
                let mut total = 0.0;
                for w in out.iter_mut() {
                    *w = gamma.sample(rng);
                    total += *w;
                }
                // A zero total needs every gamma draw to underflow; only
                // reachable for tiny alpha.
                if total > 0.0 {
                    let scale = n as f64 / total;
                    out.iter_mut().for_each(|w| *w *= scale);
                } else {
                    out.iter_mut().for_each(|w| *w = 1.0);
                }
            }
            WeightKind::IidUniform { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                for w in out.iter_mut() {
                    *w = rng.random_range(lo..hi) / mid;
                }
            }
            WeightKind::IidExponential { .. } => {
                for w in out.iter_mut() {
                    *w = Exp1.sample(rng);
                }
            }
            WeightKind::Constant => out.iter_mut().for_each(|w| *w = 1.0),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={})", self.kind, self.n)
    }
}

fn counts_into<R: Rng + ?Sized>(rng: &mut R, trials: usize, cells: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|w| *w = 0.0);
    for _ in 0..trials {
        out[rng.random_range(0..cells)] += 1.0;
    }
    if trials != cells {
        let scale = cells as f64 / trials as f64;
        out.iter_mut().for_each(|w| *w *= scale);
    }
}

fn subset_into<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    chosen: f64,
    rest: f64,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|w| *w = rest);
    for i in rand::seq::index::sample(rng, n, d) {
        out[i] = chosen;
    }
}

/// One draw of bootstrap weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter(format!(
                "weights must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn scheme(s: &str, n: usize) -> WeightScheme {
        WeightScheme::new(s.parse().unwrap(), n).unwrap()
    }

    #[test]
    fn multinomial_sums_to_n() {
        let s = WeightScheme::multinomial(3).unwrap();
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            let w = s.sample(&mut rng);
            assert_eq!(w.sum(), 3.0);
            assert!(w.values().iter().all(|x| x.fract() == 0.0));
        }
    }

    #[test]
    fn delete_one_jackknife_layout() {
        let s = scheme("jackknife:d=1", 4);
        let w = s.sample(&mut stream(2, 0));
        let zeros = w.values().iter().filter(|x| **x == 0.0).count();
        assert_eq!(zeros, 1);
        assert!(w
            .values()
            .iter()
            .filter(|x| **x != 0.0)
            .all(|x| (x - 4.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn downweight_layout() {
        let s = scheme("downweight:d=1", 5);
        let w = s.sample(&mut stream(3, 0));
        let low: Vec<_> = w
            .values()
            .iter()
            .filter(|x| (**x - 0.2).abs() < 1e-15)
            .collect();
        assert_eq!(low.len(), 1);
        assert_eq!(
            w.values()
                .iter()
                .filter(|x| (**x - 1.2).abs() < 1e-15)
                .count(),
            4
        );
    }

    #[test]
    fn parameter_errors() {
        let bad = [
            ("jackknife:d=4", 4),
            ("downweight:d=5", 5),
            ("dirichlet:alpha=0", 3),
            ("uniform:1.5,0.5", 3),
            ("uniform:-0.5,1.5", 3),
            ("exp:0", 3),
            ("moon:m=0", 3),
        ];
        for (spec, n) in bad {
            let res = spec
                .parse::<WeightKind>()
                .and_then(|k| WeightScheme::new(k, n));
            assert!(matches!(res, Err(Error::Parameter(_))), "{spec} n={n}");
        }
        assert!("bogus".parse::<WeightKind>().is_err());
        assert!(WeightScheme::new(WeightKind::Multinomial, 0).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "multinomial",
            "jackknife:d=2",
            "downweight:d=2",
            "dirichlet:alpha=1",
            "uniform:0.5,1.5",
            "exp:1",
            "moon:m=10",
            "constant",
        ] {
            let k: WeightKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
            assert_eq!(k.to_string().parse::<WeightKind>().unwrap(), k);
        }
        assert_eq!(
            "jackknife".parse::<WeightKind>().unwrap(),
            WeightKind::DeleteDJackknife { d: 1 }
        );
    }

    const ALL: [&str; 8] = [
        "multinomial",
        "moon:m=4",
        "jackknife:d=2",
        "downweight:d=3",
        "dirichlet:alpha=0.7",
        "uniform:0.5,1.5",
        "exp:2",
        "constant",
    ];

    proptest! {
        #[test]
        fn draws_are_nonnegative_and_fixed_sums_hold(seed in any::<u64>(), idx in 0usize..8, n in 6usize..30) {
            let s = scheme(ALL[idx], n);
            let w = s.sample(&mut stream(seed, 0));
            prop_assert_eq!(w.len(), n);
            prop_assert!(w.values().iter().all(|x| *x >= 0.0 && x.is_finite()));
            if let Some(total) = s.fixed_sum() {
                prop_assert!((w.sum() - total).abs() <= 1e-12 * total);
            }
        }

        #[test]
        fn sampling_is_deterministic_given_seed(seed in any::<u64>(), idx in 0usize..8) {
            let s = scheme(ALL[idx], 12);
            prop_assert_eq!(s.sample(&mut stream(seed, 5)), s.sample(&mut stream(seed, 5)));
        }
    }

    #[test]
    fn unit_mean_and_variance_by_monte_carlo() {
        for spec in ALL {
            let s = scheme(spec, 10);
            let mut rng = stream(99, 0);
            let reps = 20_000;
            let (mut m1, mut m2) = (0.0, 0.0);
            for _ in 0..reps {
                let w = s.sample(&mut rng);
                m1 += w.values()[0];
                m2 += w.values()[0] * w.values()[0];
            }
            let mean = m1 / reps as f64;
            let var = m2 / reps as f64 - mean * mean;
            let se = (s.sigma2() / reps as f64).sqrt();
            assert!(
                (mean - 1.0).abs() <= 5.0 * se + 1e-12,
                "{spec}: mean {mean}"
            );
            assert!(
                (var - s.sigma2()).abs() <= 0.06 * s.sigma2() + 1e-12,
                "{spec}: var {var} vs {}",
                s.sigma2()
            );
        }
    }

    #[test]
    fn exchangeable_first_and_second_moments() {
        // Reversing the coordinates must not change per-coordinate means and
        // the lag-one cross moment beyond Monte Carlo error.
        for spec in ["multinomial", "jackknife:d=2", "dirichlet:alpha=1", "exp:1"] {
            let s = scheme(spec, 6);
            let mut rng = stream(5, 0);
            let reps = 10_000;
            let mut fwd = [0.0; 3];
            let mut rev = [0.0; 3];
            for _ in 0..reps {
                let w = s.sample(&mut rng);
                let v = w.values();
                let r: Vec<f64> = v.iter().rev().copied().collect();
                fwd[0] += v[0];
                rev[0] += r[0];
                fwd[1] += v[0] * v[0];
                rev[1] += r[0] * r[0];
                fwd[2] += v[0] * v[1];
                rev[2] += r[0] * r[1];
            }
            let sd = s.sigma2().sqrt();
            for k in 0..3 {
                let diff = (fwd[k] - rev[k]) / reps as f64;
                let tol = 6.0 * (1.0 + sd) * sd * 2.0 / (reps as f64).sqrt();
                assert!(diff.abs() < tol, "{spec} moment {k}: {diff}");
            }
        }
    }
}
