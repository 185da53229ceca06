//! Exact and plug-in moments of standardized weights, and support enumeration.
//!
//! A mixed moment is indexed by a pattern of exponents over distinct
//! coordinates: `[2, 1]` is `c_21 = E(W_a² W_b)` for `a != b`. Exchangeability
//! makes the choice of coordinates irrelevant.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{WeightKind, WeightScheme, WeightVector};
use crate::{Error, Result};

/// Exponent patterns whose entries sum to three.
pub const THIRD_ORDER_PATTERNS: [&[u32]; 3] = [&[3], &[2, 1], &[1, 1, 1]];
/// Exponent patterns whose entries sum to four.
pub const FOURTH_ORDER_PATTERNS: [&[u32]; 5] = [&[4], &[3, 1], &[2, 2], &[2, 1, 1], &[1, 1, 1, 1]];

/// Largest support `enumerate_support` will materialize.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MixedMoment {
    pub pattern: Vec<u32>,
    /// `NaN` when the pattern needs more distinct coordinates than `n`
    /// or the law is degenerate.
    pub value: f64,
}

/// Moments of `w` and of `W = (w - 1) / σ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMoments {
    pub mean: f64,
    pub sigma2: f64,
    pub c11: f64,
    pub c22: f64,
    pub c4: f64,
    pub third_order: Vec<MixedMoment>,
    pub fourth_order: Vec<MixedMoment>,
}

impl WeightMoments {
    pub fn get(&self, pattern: &[u32]) -> Option<f64> {
        match pattern {
            [1, 1] => Some(self.c11),
            [2, 2] => Some(self.c22),
            [4] => Some(self.c4),
            _ => self
                .third_order
                .iter()
                .chain(&self.fourth_order)
                .find(|m| m.pattern == pattern)
                .map(|m| m.value),
        }
    }

    fn assemble(mean: f64, sigma2: f64, mut c: impl FnMut(&[u32]) -> f64) -> Self {
        let collect = |patterns: &[&[u32]], c: &mut dyn FnMut(&[u32]) -> f64| {
            patterns
                .iter()
                .map(|p| MixedMoment {
                    pattern: p.to_vec(),
                    value: c(p),
                })
                .collect()
        };
        let third_order = collect(&THIRD_ORDER_PATTERNS, &mut c);
        let fourth_order = collect(&FOURTH_ORDER_PATTERNS, &mut c);
        Self {
            mean,
            sigma2,
            c11: c(&[1, 1]),
            c22: c(&[2, 2]),
            c4: c(&[4]),
            third_order,
            fourth_order,
        }
    }
}

fn stirling2(a: u32, t: u32) -> f64 {
    // S(a, t) by the triangle recurrence; exponents here never exceed 4.
    let mut row = vec![1.0_f64];
    for m in 1..=a as usize {
        let mut next = vec![0.0; m + 1];
        for j in 1..=m {
            let carry = if j < m { j as f64 * row[j] } else { 0.0 };
            next[j] = carry + row[j - 1];
        }
        row = next;
    }
    row.get(t as usize).copied().unwrap_or(0.0)
}

/// `E(Π_j w_j^{a_j})` over distinct coordinates, every `a_j >= 1`.
fn raw_moment(scheme: &WeightScheme, exps: &[u32]) -> f64 {
    let n = scheme.n();
    let k = exps.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return f64::NAN;
    }
    let total: u32 = exps.iter().sum();
    match scheme.kind() {
        WeightKind::Multinomial => count_moment(n, n, exps),
        WeightKind::MOutOfN { m } => {
            count_moment(m, n, exps) * libm::pow(n as f64 / m as f64, total as f64)
        }
        WeightKind::DeleteDJackknife { d } => {
            two_level_moment(n, d, 0.0, n as f64 / (n - d) as f64, exps)
        }
        WeightKind::DownweightDJackknife { d } => {
            two_level_moment(n, d, d as f64 / n as f64, (n + d) as f64 / n as f64, exps)
        }
        WeightKind::Dirichlet { alpha } => {
            let nf = n as f64;
            let mut num = 1.0;
            for &a in exps {
                for r in 0..a {
                    num *= (alpha + r as f64) * nf;
                }
            }
            let den: f64 = (0..total).map(|r| nf * alpha + r as f64).product();
            num / den
        }
        WeightKind::IidUniform { lo, hi } => {
            let mid = 0.5 * (lo + hi);
            exps.iter()
                .map(|&a| {
                    let a = a as f64;
                    (libm::pow(hi, a + 1.0) - libm::pow(lo, a + 1.0))
                        / ((a + 1.0) * (hi - lo))
                        / libm::pow(mid, a)
                })
                .product()
        }
        WeightKind::IidExponential { .. } => exps
            .iter()
            .map(|&a| (1..=a).map(|r| r as f64).product::<f64>())
            .product(),
        WeightKind::Constant => 1.0,
    }
}

/// Raw mixed moment of Multinomial(trials; 1/cells) counts via factorial moments:
/// `E Π (C_j)_{t_j} = (trials)_T / cells^T` and `x^a = Σ_t S(a, t) (x)_t`.
fn count_moment(trials: usize, cells: usize, exps: &[u32]) -> f64 {
    let mut total = 0.0;
    let mut t: Vec<u32> = vec![1; exps.len()];
    loop {
        let big_t: usize = t.iter().map(|&x| x as usize).sum();
        let coef: f64 = exps
            .iter()
            .zip(&t)
            .map(|(&a, &tj)| stirling2(a, tj))
            .product();
        let fall = (0..big_t).fold(1.0, |acc, i| {
            if i >= trials {
                0.0
            } else {
                acc * (trials - i) as f64 / cells as f64
            }
        });
        total += coef * fall;
        // odometer over 1..=a_j
        let mut j = 0;
        loop {
            if j == t.len() {
                return total;
            }
            if t[j] < exps[j] {
                t[j] += 1;
                break;
            }
            t[j] = 1;
            j += 1;
        }
    }
}

/// Raw mixed moment of a law that puts `low` on a uniform random `d`-subset
/// and `high` on the rest.
fn two_level_moment(n: usize, d: usize, low: f64, high: f64, exps: &[u32]) -> f64 {
    let k = exps.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        let s = mask.count_ones() as usize;
        if s > d || k - s > n - d {
            continue;
        }
        // P(exactly the masked coordinates fall in the chosen subset)
        let p = (0..s).map(|i| (d - i) as f64).product::<f64>()
            * (0..k - s).map(|i| (n - d - i) as f64).product::<f64>()
            / (0..k).map(|i| (n - i) as f64).product::<f64>();
        let value: f64 = exps
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let base = if mask & (1 << j) != 0 { low } else { high };
                libm::pow(base, a as f64)
            })
            .product();
        total += p * value;
    }
    total
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E Π_j ((w_j - 1)/σ)^{a_j}` by binomial expansion into raw moments.
fn standardized(exps: &[u32], sigma: f64, raw: &dyn Fn(&[u32]) -> f64) -> f64 {
    let mut b: Vec<u32> = vec![0; exps.len()];
    let mut total = 0.0;
    loop {
        let coef: f64 = exps
            .iter()
            .zip(&b)
            .map(|(&a, &bj)| {
                let sign = if (a - bj) % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(a, bj)
            })
            .product();
        let kept: Vec<u32> = b.iter().copied().filter(|&x| x > 0).collect();
        total += coef * raw(&kept);
        let mut j = 0;
        loop {
            if j == b.len() {
                let power: u32 = exps.iter().sum();
                return total / libm::pow(sigma, power as f64);
            }
            if b[j] < exps[j] {
                b[j] += 1;
                break;
            }
            b[j] = 0;
            j += 1;
        }
    }
}

/// Exact moments from closed forms for every supported law.
pub fn theoretical_moments(scheme: &WeightScheme) -> WeightMoments {
    let raw = |e: &[u32]| raw_moment(scheme, e);
    let mean = raw(&[1]);
    let sigma2 = scheme.sigma2();
    let sigma = libm::sqrt(sigma2);
    let n = scheme.n();
    WeightMoments::assemble(mean, sigma2, |p| {
        if sigma2 <= 0.0 || p.len() > n {
            f64::NAN
        } else {
            standardized(p, sigma, &raw)
        }
    })
}

/// Set partitions of `{0..k}` as block-label vectors (restricted growth strings).
fn set_partitions(k: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for label in 0..=next {
            prefix.push(label);
            grow(prefix, k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), k, &mut out);
    out
}

/// Sum over ordered tuples of distinct indices of `Π_j x_{i_j}^{a_j}`, from
/// power sums via Möbius inversion on the partition lattice.
fn distinct_tuple_sum(exps: &[u32], power_sums: &[f64], partitions: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    for labels in partitions {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut term = 1.0;
        for b in 0..blocks {
            let members: Vec<usize> = (0..exps.len()).filter(|&j| labels[j] == b).collect();
            let size = members.len();
            let order: u32 = members.iter().map(|&j| exps[j]).sum();
            let mobius = (1..size).map(|r| r as f64).product::<f64>()
                * if size % 2 == 0 { -1.0 } else { 1.0 };
            term *= mobius * power_sums[order as usize];
        }
        total += term;
    }
    total
}

/// Plug-in moments from equally weighted draws.
pub fn empirical_moments(draws: &[WeightVector]) -> Result<WeightMoments> {
    if draws.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            found: draws.len(),
        });
    }
    let atoms: Vec<(&[f64], f64)> = draws.iter().map(|d| (d.values(), 1.0)).collect();
    moments_from_atoms(&atoms)
}

/// Plug-in moments from draws carrying probabilities (e.g. an enumerated support).
pub fn empirical_moments_weighted(atoms: &[(WeightVector, f64)]) -> Result<WeightMoments> {
    if atoms.is_empty() {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    let atoms: Vec<(&[f64], f64)> = atoms.iter().map(|(w, p)| (w.values(), *p)).collect();
    moments_from_atoms(&atoms)
}

fn moments_from_atoms(atoms: &[(&[f64], f64)]) -> Result<WeightMoments> {
    let n = atoms[0].0.len();
    if let Some((w, _)) = atoms.iter().find(|(w, _)| w.len() != n) {
        return Err(Error::Shape {
            expected: n,
            found: w.len(),
        });
    }
    let mass: f64 = atoms.iter().map(|(_, p)| p).sum();
    let mean = atoms
        .iter()
        .map(|(w, p)| p * w.iter().sum::<f64>() / n as f64)
        .sum::<f64>()
        / mass;
    let sigma2 = atoms
        .iter()
        .map(|(w, p)| p * w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64)
        .sum::<f64>()
        / mass;
    let sigma = libm::sqrt(sigma2);
    let partitions: Vec<Vec<Vec<usize>>> = (0..=4).map(set_partitions).collect();
    let moment = |exps: &[u32]| -> f64 {
        let k = exps.len();
        if sigma2 <= 0.0 || k > n {
            return f64::NAN;
        }
        let tuples = (0..k).map(|i| (n - i) as f64).product::<f64>();
        let mut acc = 0.0;
        for (w, p) in atoms {
            let mut power_sums = [0.0; 5];
            for x in w.iter() {
                let z = (x - mean) / sigma;
                let mut zp = 1.0;
                for s in power_sums.iter_mut() {
                    *s += zp;
                    zp *= z;
                }
            }
            acc += p * distinct_tuple_sum(exps, &power_sums, &partitions[k]) / tuples;
        }
        acc / mass
    };
    Ok(WeightMoments::assemble(mean, sigma2, moment))
}

fn support_size(scheme: &WeightScheme) -> Option<f64> {
    let n = scheme.n() as u32;
    match scheme.kind() {
        WeightKind::Multinomial => Some(binomial(2 * n - 1, n)),
        WeightKind::MOutOfN { m } => Some(binomial(n + m as u32 - 1, m as u32)),
        WeightKind::DeleteDJackknife { d } | WeightKind::DownweightDJackknife { d } => {
            Some(binomial(n, d as u32))
        }
        WeightKind::Constant => Some(1.0),
        _ => None,
    }
}

/// Every atom of a finite-support law with its probability.
pub fn enumerate_support(scheme: &WeightScheme) -> Result<Vec<(WeightVector, f64)>> {
    enumerate_support_capped(scheme, DEFAULT_SUPPORT_CAP)
}

pub fn enumerate_support_capped(
    scheme: &WeightScheme,
    cap: usize,
) -> Result<Vec<(WeightVector, f64)>> {
    let size = support_size(scheme)
        .ok_or_else(|| Error::Unsupported(format!("{} has no finite support", scheme.kind())))?;
    if size > cap as f64 {
        return Err(Error::Unsupported(format!(
            "{scheme} has {size} atoms, above the cap of {cap}"
        )));
    }
    let n = scheme.n();
    let mut atoms = Vec::with_capacity(size as usize);
    match scheme.kind() {
        WeightKind::Multinomial => compositions(n, n, &mut atoms),
        WeightKind::MOutOfN { m } => compositions(m, n, &mut atoms),
        WeightKind::DeleteDJackknife { d } => {
            subsets(n, d, 0.0, n as f64 / (n - d) as f64, &mut atoms)
        }
        WeightKind::DownweightDJackknife { d } => subsets(
            n,
            d,
            d as f64 / n as f64,
            (n + d) as f64 / n as f64,
            &mut atoms,
        ),
        WeightKind::Constant => atoms.push((WeightVector::ones(n), 1.0)),
        _ => unreachable!("support_size filtered infinite laws"),
    }
    Ok(atoms)
}

fn ln_factorials(upto: usize) -> Vec<f64> {
    let mut out = vec![0.0; upto + 1];
    for i in 1..=upto {
        out[i] = out[i - 1] + libm::log(i as f64);
    }
    out
}

/// All count vectors of `trials` balls in `cells` cells, first coordinate
/// descending, with multinomial probabilities. Counts are rescaled by
/// `cells / trials`.
fn compositions(trials: usize, cells: usize, out: &mut Vec<(WeightVector, f64)>) {
    let lf = ln_factorials(trials);
    let scale = cells as f64 / trials as f64;
    let ln_base = trials as f64 * libm::log(cells as f64);
    let mut counts = vec![0usize; cells];
    fn rec(pos: usize, left: usize, counts: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            emit(counts);
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, emit);
        }
    }
    let mut emit = |c: &[usize]| {
        let ln_p = lf[trials] - c.iter().map(|&x| lf[x]).sum::<f64>() - ln_base;
        let w = c.iter().map(|&x| x as f64 * scale).collect();
        out.push((WeightVector(w), libm::exp(ln_p)));
    };
    rec(0, trials, &mut counts, &mut emit);
}

/// All `d`-subsets in lexicographic order, `low` on the subset and `high` elsewhere.
fn subsets(n: usize, d: usize, low: f64, high: f64, out: &mut Vec<(WeightVector, f64)>) {
    let p = 1.0 / binomial(n as u32, d as u32);
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let mut w = vec![high; n];
        for &i in &idx {
            w[i] = low;
        }
        out.push((WeightVector(w), p));
        // next combination
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if idx[j] < n - d + j {
                idx[j] += 1;
                for l in j + 1..d {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
    }
}
