//! Density histograms with deterministic mode detection.
//!
//! The histogram covers the central `1 − 2·trim` of the draws (default: the
//! 2.5% and 97.5% empirical quantiles) in equal-width bins. Densities are
//! smoothed with a centered 3-bin moving average (edge bins average the
//! neighbours they have). A mode is a local maximum of the smoothed density
//! whose topographic prominence is at least 10% of the global maximum.

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const SMOOTHING_BINS: usize = 3;
pub const PROMINENCE: f64 = 0.1;
pub const DEFAULT_TRIM: f64 = 0.025;
pub const MIN_DRAWS: usize = 50;
pub const MIN_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    /// Fraction of the retained draws in each bin; sums to 1.
    pub masses: Vec<f64>,
    /// Draws outside `[lo, hi]`.
    pub trimmed: usize,
    /// Bin centers of the detected modes, in increasing order.
    pub modes: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        (0..self.masses.len())
            .map(|k| self.lo + (k as f64 + 0.5) * self.bin_width)
            .collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m / self.bin_width).collect()
    }
}

/// Histogram over the central 95% of `draws`.
pub fn density_histogram(draws: &[f64], bins: usize) -> Result<Histogram> {
    density_histogram_trimmed(draws, bins, DEFAULT_TRIM)
}

pub fn density_histogram_trimmed(draws: &[f64], bins: usize, trim: f64) -> Result<Histogram> {
    if draws.len() < MIN_DRAWS {
        return Err(BenchError::Config(format!(
            "histogram needs at least {MIN_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    if bins < MIN_BINS {
        return Err(BenchError::Config(format!(
            "histogram needs at least {MIN_BINS} bins"
        )));
    }
    if !(0.0..0.5).contains(&trim) {
        return Err(BenchError::Config("trim must lie in [0, 0.5)".into()));
    }
    if draws.iter().any(|x| !x.is_finite()) {
        return Err(BenchError::Config("histogram draws must be finite".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let cut = (trim * n as f64).floor() as usize;
    let (mut lo, mut hi) = (sorted[cut], sorted[n - 1 - cut]);
    if hi <= lo {
        let pad = if lo == 0.0 { 0.5 } else { lo.abs() * 1e-6 };
        lo -= pad;
        hi += pad;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut kept = 0usize;
    for &x in &sorted {
        if x < lo || x > hi {
            continue;
        }
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
        kept += 1;
    }
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / kept as f64).collect();
    let smoothed = smooth(&masses);
    let modes = find_modes(&smoothed)
        .into_iter()
        .map(|k| lo + (k as f64 + 0.5) * width)
        .collect();
    Ok(Histogram {
        lo,
        hi,
        bin_width: width,
        masses,
        trimmed: n - kept,
        modes,
    })
}

fn smooth(h: &[f64]) -> Vec<f64> {
    let half = SMOOTHING_BINS / 2;
    (0..h.len())
        .map(|k| {
            let a = k.saturating_sub(half);
            let b = (k + half).min(h.len() - 1);
            h[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect()
}

/// Indices of local maxima with prominence at least `PROMINENCE · max`.
///
/// A plateau counts once, at its left end. Prominence is the height above
/// the higher of the two lowest points separating the peak from higher
/// ground (or from the ends of the range).
fn find_modes(s: &[f64]) -> Vec<usize> {
    let top = s.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Vec::new();
    }
    let n = s.len();
    let mut peaks = Vec::new();
    let mut k = 0;
    while k < n {
        let mut end = k;
        while end + 1 < n && s[end + 1] == s[k] {
            end += 1;
        }
        let left_lower = k == 0 || s[k - 1] < s[k];
        let right_lower = end == n - 1 || s[end + 1] < s[k];
        if left_lower && right_lower && s[k] > 0.0 {
            peaks.push(k);
        }
        k = end + 1;
    }
    peaks
        .into_iter()
        .filter(|&p| prominence(s, p) >= PROMINENCE * top)
        .collect()
}

fn prominence(s: &[f64], p: usize) -> f64 {
    let h = s[p];
    // Lowest point on one side before higher ground; `None` for an empty side.
    let side = |values: &mut dyn Iterator<Item = &f64>| -> Option<f64> {
        let mut low: Option<f64> = None;
        for &v in values {
            if v > h {
                break;
            }
            low = Some(low.map_or(v, |l| l.min(v)));
        }
        low
    };
    let left = side(&mut s[..p].iter().rev());
    let right = side(&mut s[p + 1..].iter());
    let base = match (left, right) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 0.0,
    };
    h - base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_peak() {
        let s = [0.0, 1.0, 3.0, 1.0, 0.0];
        assert_eq!(find_modes(&s), vec![2]);
        assert_eq!(prominence(&s, 2), 3.0);
    }

    #[test]
    fn shallow_bump_is_not_a_mode() {
        let s = [0.0, 5.0, 10.0, 9.6, 9.8, 4.0, 0.0];
        assert_eq!(find_modes(&s), vec![2]);
        let s = [0.0, 5.0, 10.0, 6.0, 8.0, 4.0, 0.0];
        assert_eq!(find_modes(&s), vec![2, 4]);
    }

    #[test]
    fn plateau_counts_once() {
        let s = [0.0, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(find_modes(&s), vec![1]);
    }

    #[test]
    fn smoothing_averages_neighbours() {
        let s = smooth(&[3.0, 0.0, 3.0, 0.0]);
        assert_eq!(s, vec![1.5, 2.0, 1.0, 1.5]);
    }
}
