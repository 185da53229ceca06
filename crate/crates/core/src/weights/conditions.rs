//! Finite-grid certification of the weight conditions BW, CLTW and VW.
//!
//! Rate statements such as `c11 = O(1/n)` are decided by regressing
//! `ln |moment|` on `ln n` over the grid and comparing the slope with the
//! target exponent. Slopes are fitted on the largest `tail_points` grid
//! values, where the leading-order rate dominates. A sequence whose fitted
//! entries all fall below `CheckSettings::negligible` counts as satisfying
//! any decay bound.
//! The bad-weight event uses `m_0 = p` weights above `k_2`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::moments::{
    theoretical_moments, WeightMoments, FOURTH_ORDER_PATTERNS, THIRD_ORDER_PATTERNS,
};
use super::{WeightKind, WeightScheme};
use crate::rng::stream;
use crate::stats::ols_slope;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSettings {
    /// Allowed excess of a fitted slope over its target exponent.
    pub slope_tolerance: f64,
    /// Largest grid points used in slope fits (all points when fewer).
    pub tail_points: usize,
    pub negligible: f64,
    /// Threshold `k_2` in the bad-weight event.
    pub k2: f64,
    /// Draws for laws whose bad-weight probability has no closed form.
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            slope_tolerance: 0.2,
            tail_points: 3,
            negligible: 1e-9,
            k2: 0.5,
            mc_draws: 4000,
            seed: 0x5eed,
        }
    }
}

/// Moments at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub p: usize,
    pub moments: WeightMoments,
    /// Probability that fewer than `p` weights exceed `k_2`.
    pub bad_set_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub name: String,
    /// Value of the checked quantity at each grid point.
    pub values: Vec<f64>,
    /// Fitted log-log slope; `None` when the clause is not a rate.
    pub slope: Option<f64>,
    /// Largest slope accepted, or the target value for exact clauses.
    pub threshold: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub clauses: Vec<Clause>,
}

impl Verdict {
    fn new(clauses: Vec<Clause>) -> Self {
        Self {
            pass: clauses.iter().all(|c| c.pass),
            clauses,
        }
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub scheme: String,
    pub bw: Verdict,
    pub cltw: Verdict,
    pub vw_a: Verdict,
    pub vw_b: Verdict,
    pub evidence: Vec<GridPoint>,
    pub settings: CheckSettings,
}

/// Checks every condition for the family `n -> scheme(n)` over `n_grid`.
///
/// `p_rule` gives the parameter dimension at each `n`.
pub fn check_conditions<F, P>(
    family: F,
    n_grid: &[usize],
    p_rule: P,
    settings: &CheckSettings,
) -> Result<ConditionReport>
where
    F: Fn(usize) -> Result<WeightScheme>,
    P: Fn(usize) -> usize,
{
    if n_grid.len() < 3 {
        return Err(Error::InsufficientSample {
            needed: 3,
            found: n_grid.len(),
        });
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "n_grid must be strictly increasing".into(),
        ));
    }
    let mut evidence = Vec::with_capacity(n_grid.len());
    let mut scheme_name = String::new();
    for &n in n_grid {
        let scheme = family(n)?;
        if scheme.n() != n {
            return Err(Error::Shape {
                expected: n,
                found: scheme.n(),
            });
        }
        if scheme_name.is_empty() {
            scheme_name = format!("{}", scheme.kind());
        }
        let p = p_rule(n).max(1);
        evidence.push(GridPoint {
            n,
            p,
            moments: theoretical_moments(&scheme),
            bad_set_probability: bad_set_probability(&scheme, p, settings),
        });
    }

    let tail = settings.tail_points.clamp(2, n_grid.len());
    let ctx = Ctx {
        ln_n: n_grid.iter().map(|&n| libm::log(n as f64)).collect(),
        start: n_grid.len() - tail,
        settings,
    };
    let column = |f: &dyn Fn(&GridPoint) -> f64| -> Vec<f64> { evidence.iter().map(f).collect() };
    let sigma2 = column(&|g| g.moments.sigma2);
    let sigma = |g: &GridPoint| libm::sqrt(g.moments.sigma2);

    let bw = Verdict::new(alloc::vec![
        ctx.exact("unit mean", column(&|g| g.moments.mean), 1.0),
        ctx.positive("positive variance", sigma2.clone()),
        ctx.vanishing(
            "variance small against n/p",
            column(&|g| g.moments.sigma2 * g.p as f64 / g.n as f64),
        ),
        ctx.rate("c11 = O(1/n)", column(&|g| g.moments.c11.abs()), -1.0),
    ]);

    let cltw = Verdict::new(alloc::vec![
        ctx.vanishing("c22 -> 1", column(&|g| (g.moments.c22 - 1.0).abs())),
        ctx.rate("c4 bounded", column(&|g| g.moments.c4.abs()), 0.0),
    ]);

    let mut common = alloc::vec![ctx.rate(
        "bad weight set has probability O(1/n)",
        column(&|g| g.bad_set_probability),
        -1.0,
    )];
    for pattern in THIRD_ORDER_PATTERNS {
        let k = pattern.len() as f64;
        common.push(ctx.rate(
            &format!("third-order c{} = O(n^(1-k)/sigma)", pattern_label(pattern)),
            column(&|g| g.moments.get(pattern).unwrap_or(f64::NAN).abs() * sigma(g)),
            1.0 - k,
        ));
    }
    let fourth = |cap: bool| -> Vec<Clause> {
        FOURTH_ORDER_PATTERNS
            .iter()
            .map(|pattern| {
                let k = pattern.len() as f64;
                let exponent = if cap { (2.0 - k).min(0.0) } else { 2.0 - k };
                ctx.rate(
                    &format!("fourth-order c{} rate", pattern_label(pattern)),
                    column(&|g| g.moments.get(pattern).unwrap_or(f64::NAN).abs()),
                    exponent,
                )
            })
            .collect()
    };

    let mut vw_a = common.clone();
    vw_a.push(ctx.bounded_away("variance in a compact subset of (0, inf)", sigma2.clone()));
    vw_a.extend(fourth(true));
    let mut vw_b = common;
    vw_b.push(ctx.vanishing("variance tends to zero", sigma2));
    vw_b.extend(fourth(false));

    Ok(ConditionReport {
        scheme: scheme_name,
        bw,
        cltw,
        vw_a: Verdict::new(vw_a),
        vw_b: Verdict::new(vw_b),
        evidence,
        settings: *settings,
    })
}

fn pattern_label(pattern: &[u32]) -> String {
    pattern.iter().map(|d| format!("{d}")).collect()
}

struct Ctx<'a> {
    ln_n: Vec<f64>,
    /// First grid index used in fits.
    start: usize,
    settings: &'a CheckSettings,
}

impl Ctx<'_> {
    fn clause(
        name: &str,
        values: Vec<f64>,
        slope: Option<f64>,
        threshold: f64,
        pass: bool,
        note: String,
    ) -> Clause {
        Clause {
            name: name.into(),
            values,
            slope,
            threshold,
            pass,
            note,
        }
    }

    fn unavailable(name: &str, values: Vec<f64>, threshold: f64) -> Clause {
        Self::clause(
            name,
            values,
            None,
            threshold,
            false,
            "unavailable: undefined moment".into(),
        )
    }

    fn slope(&self, values: &[f64]) -> f64 {
        let ln_v: Vec<f64> = values[self.start..]
            .iter()
            .map(|v| libm::log(v.max(1e-300)))
            .collect();
        ols_slope(&self.ln_n[self.start..], &ln_v)
    }

    fn negligible(&self, values: &[f64]) -> bool {
        values[self.start..]
            .iter()
            .all(|v| *v < self.settings.negligible)
    }

    /// `values = O(n^exponent)`.
    fn rate(&self, name: &str, values: Vec<f64>, exponent: f64) -> Clause {
        let threshold = exponent + self.settings.slope_tolerance;
        if values.iter().any(|v| !v.is_finite()) {
            return Self::unavailable(name, values, threshold);
        }
        if self.negligible(&values) {
            return Self::clause(
                name,
                values,
                None,
                threshold,
                true,
                "negligible on the grid".into(),
            );
        }
        let s = self.slope(&values);
        let pass = s <= threshold;
        Self::clause(
            name,
            values,
            Some(s),
            threshold,
            pass,
            format!("slope {s:.3}, limit {threshold:.3}"),
        )
    }

    /// `values -> 0`.
    fn vanishing(&self, name: &str, values: Vec<f64>) -> Clause {
        let threshold = -self.settings.slope_tolerance;
        if values.iter().any(|v| !v.is_finite()) {
            return Self::unavailable(name, values, threshold);
        }
        if self.negligible(&values) {
            return Self::clause(
                name,
                values,
                None,
                threshold,
                true,
                "negligible on the grid".into(),
            );
        }
        let s = self.slope(&values);
        let pass = s <= threshold;
        Self::clause(
            name,
            values,
            Some(s),
            threshold,
            pass,
            format!("slope {s:.3}, limit {threshold:.3}"),
        )
    }

    /// Positive and neither growing nor decaying.
    fn bounded_away(&self, name: &str, values: Vec<f64>) -> Clause {
        let tol = self.settings.slope_tolerance;
        if values
            .iter()
            .any(|v| !v.is_finite() || *v < self.settings.negligible)
        {
            return Self::clause(
                name,
                values,
                None,
                tol,
                false,
                "not bounded away from zero".into(),
            );
        }
        let s = self.slope(&values);
        let pass = s.abs() <= tol;
        Self::clause(
            name,
            values,
            Some(s),
            tol,
            pass,
            format!("slope {s:.3}, limit +-{tol:.3}"),
        )
    }

    fn positive(&self, name: &str, values: Vec<f64>) -> Clause {
        let pass = values.iter().all(|v| v.is_finite() && *v > 0.0);
        let note = if pass {
            "positive at every n"
        } else {
            "zero or undefined at some n"
        };
        Self::clause(name, values, None, 0.0, pass, note.into())
    }

    fn exact(&self, name: &str, values: Vec<f64>, target: f64) -> Clause {
        let pass = values
            .iter()
            .all(|v| (v - target).abs() <= self.settings.negligible);
        let note = if pass { "holds at every n" } else { "violated" };
        Self::clause(name, values, None, target, pass, note.into())
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `P(fewer than m0 of n iid Bernoulli(q) succeed)`.
fn binomial_lower_tail(n: usize, q: f64, m0: usize) -> f64 {
    if q >= 1.0 {
        return if m0 > n { 1.0 } else { 0.0 };
    }
    if q <= 0.0 {
        return if m0 > 0 { 1.0 } else { 0.0 };
    }
    (0..m0.min(n + 1))
        .map(|j| {
            libm::exp(ln_choose(n, j) + j as f64 * libm::log(q) + (n - j) as f64 * libm::log1p(-q))
        })
        .sum()
}

/// `P(fewer than m0 cells nonempty)` when `trials` balls fall uniformly in `cells` cells.
fn occupancy_lower_tail(trials: usize, cells: usize, m0: usize) -> f64 {
    let mut total = 0.0;
    for j in 1..m0.min(cells + 1) {
        // P(exactly a fixed set of j cells is occupied) by inclusion-exclusion.
        let mut exact = 0.0;
        for i in 0..j {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let frac = (j - i) as f64 / cells as f64;
            exact += sign * libm::exp(ln_choose(j, i) + trials as f64 * libm::log(frac));
        }
        total += libm::exp(ln_choose(cells, j)) * exact.max(0.0);
    }
    total
}

/// `P(fewer than m0 weights exceed k2)`.
fn bad_set_probability(scheme: &WeightScheme, m0: usize, settings: &CheckSettings) -> f64 {
    let n = scheme.n();
    let k2 = settings.k2;
    let count_law = |trials: usize| {
        // weight = count * n / trials exceeds k2 iff count >= threshold
        let threshold = libm::floor(k2 * trials as f64 / n as f64) as usize + 1;
        (threshold == 1).then(|| occupancy_lower_tail(trials, n, m0))
    };
    let exact = match scheme.kind() {
        WeightKind::Multinomial => count_law(n),
        WeightKind::MOutOfN { m } => count_law(m),
        WeightKind::DeleteDJackknife { d } => {
            Some(two_level(n, d, 0.0, n as f64 / (n - d) as f64, k2, m0))
        }
        WeightKind::DownweightDJackknife { d } => Some(two_level(
            n,
            d,
            d as f64 / n as f64,
            (n + d) as f64 / n as f64,
            k2,
            m0,
        )),
        WeightKind::IidUniform { lo, hi } => {
            let cut = k2 * 0.5 * (lo + hi);
            let q = ((hi - cut) / (hi - lo)).clamp(0.0, 1.0);
            Some(binomial_lower_tail(n, q, m0))
        }
        WeightKind::IidExponential { .. } => Some(binomial_lower_tail(n, libm::exp(-k2), m0)),
        WeightKind::Constant => Some(if 1.0 > k2 && m0 <= n { 0.0 } else { 1.0 }),
        WeightKind::Dirichlet { .. } => None,
    };
    exact.unwrap_or_else(|| {
        let mut rng = stream(settings.seed, n as u64);
        let mut buf = alloc::vec![0.0; n];
        let mut bad = 0usize;
        for _ in 0..settings.mc_draws {
            scheme.sample_into(&mut rng, &mut buf);
            if buf.iter().filter(|&&w| w > k2).count() < m0 {
                bad += 1;
            }
        }
        bad as f64 / settings.mc_draws.max(1) as f64
    })
}

/// A fixed number `d` of weights equal `low`, the rest `high`.
fn two_level(n: usize, d: usize, low: f64, high: f64, k2: f64, m0: usize) -> f64 {
    let above = if low > k2 {
        n
    } else if high > k2 {
        n - d
    } else {
        0
    };
    if above < m0 {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<usize> {
        alloc::vec![10, 20, 40, 80, 160, 320]
    }

    fn report(family: impl Fn(usize) -> Result<WeightScheme>) -> ConditionReport {
        check_conditions(family, &grid(), |_| 1, &CheckSettings::default()).unwrap()
    }

    #[test]
    fn multinomial_satisfies_bw_cltw_and_vw_a() {
        let r = report(WeightScheme::multinomial);
        assert!(r.bw.pass, "{:#?}", r.bw);
        assert!(r.cltw.pass, "{:#?}", r.cltw);
        assert!(r.vw_a.pass, "{:#?}", r.vw_a);
        assert!(!r.vw_b.pass);
        assert_eq!(r.evidence.len(), 6);
    }

    #[test]
    fn sqrt_n_delete_d_is_variance_but_not_distribution_consistent() {
        let r = report(|n| {
            let d = libm::ceil(libm::sqrt(n as f64)) as usize;
            WeightScheme::new(WeightKind::DeleteDJackknife { d }, n)
        });
        assert!(r.bw.pass, "{:#?}", r.bw);
        assert!(r.vw_b.pass, "{:#?}", r.vw_b);
        assert!(!r.cltw.pass);
        assert!(!r.cltw.clause("c4 bounded").unwrap().pass);
    }

    #[test]
    fn constant_weights_fail_bw() {
        let r = report(WeightScheme::constant);
        assert!(!r.bw.pass);
        assert!(!r.bw.clause("positive variance").unwrap().pass);
    }

    #[test]
    fn iid_laws_pass_bw_and_cltw() {
        for spec in ["exp:1", "uniform:0.5,1.5", "dirichlet:alpha=1"] {
            let kind: WeightKind = spec.parse().unwrap();
            let r = report(|n| WeightScheme::new(kind, n));
            assert!(r.bw.pass, "{spec}");
            assert!(r.cltw.pass, "{spec}");
            assert!(r.vw_a.pass, "{spec}: {:#?}", r.vw_a);
        }
    }

    #[test]
    fn passing_clauses_carry_evidence() {
        let r = report(WeightScheme::multinomial);
        for v in [&r.bw, &r.cltw, &r.vw_a] {
            for c in &v.clauses {
                assert_eq!(c.values.len(), 6);
                assert!(!c.note.is_empty());
            }
        }
    }

    #[test]
    fn grid_validation() {
        let s = CheckSettings::default();
        assert!(check_conditions(WeightScheme::multinomial, &[10, 20], |_| 1, &s).is_err());
        assert!(check_conditions(WeightScheme::multinomial, &[10, 30, 20], |_| 1, &s).is_err());
    }

    #[test]
    fn occupancy_tail_matches_direct_count() {
        // Three balls in three cells: fewer than two occupied means all in one cell.
        assert!((occupancy_lower_tail(3, 3, 2) - 3.0 / 27.0).abs() < 1e-14);
        // Fewer than three occupied: complement of a permutation, 1 - 6/27.
        assert!((occupancy_lower_tail(3, 3, 3) - 21.0 / 27.0).abs() < 1e-14);
        assert_eq!(occupancy_lower_tail(5, 5, 1), 0.0);
    }

    #[test]
    fn binomial_tail() {
        assert!((binomial_lower_tail(4, 0.5, 1) - 1.0 / 16.0).abs() < 1e-14);
        assert!((binomial_lower_tail(4, 0.5, 2) - 5.0 / 16.0).abs() < 1e-14);
    }
}
