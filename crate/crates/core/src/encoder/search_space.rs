//! Candidate sets for the `(ratio, scale, bias)` search.

use super::EncoderConfig;
use crate::error::{ensure_finite, Result, SbvrError};

/// Default ratio intervals: a negative and a positive band, both with `|r| <= 1`.
pub const DEFAULT_RATIO_INTERVALS: [(f64, f64); 2] = [(-1.0, -0.5), (0.5, 1.0)];

/// The generated candidate sets for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpaceConfig {
    pub n_ratio: usize,
    pub n_scale: usize,
    pub n_bias: usize,
    pub ratio_intervals: [(f64, f64); 2],
    pub ratios: Vec<f64>,
    pub scales: Vec<f64>,
    pub biases: Vec<f64>,
}

impl SearchSpaceConfig {
    /// Number of `(r, s, b)` entries.
    pub fn len(&self) -> usize {
        self.ratios.len() * self.scales.len() * self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Percentile by linear interpolation between closest ranks of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// `m` evenly spaced points covering `[lo, hi]` inclusive.
fn linspace(lo: f64, hi: f64, m: usize) -> impl Iterator<Item = f64> {
    let denom = m.saturating_sub(1).max(1) as f64;
    (0..m).map(move |t| lo + (hi - lo) * (t as f64 / denom))
}

/// Two uniform grids of `n_ratio / 2` points, one per interval.
pub fn ratio_candidates(n_ratio: usize, intervals: [(f64, f64); 2]) -> Vec<f64> {
    let half = n_ratio / 2;
    intervals
        .iter()
        .flat_map(|&(lo, hi)| linspace(lo, hi, half))
        .collect()
}

/// Builds `R`, `S` and `B` for `group`.
///
/// `S` runs from just above `2 * q95` up to `1.1 * (max - min)` in `n_scale`
/// equal steps and `B` covers `[-b_max, b_max)` with `b_max = 2 * |mean| / K`.
/// When the scale bounds cross (skewed groups), the upper bound is lifted to
/// `1.01 * s_min`.
pub fn generate_search_space(group: &[f64], config: &EncoderConfig) -> Result<SearchSpaceConfig> {
    if group.len() < 2 {
        return Err(SbvrError::Validation(format!(
            "search space needs at least 2 elements, got {}",
            group.len()
        )));
    }
    ensure_finite(group, "weight group")?;

    let mut sorted = group.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mean = group.iter().sum::<f64>() / group.len() as f64;

    let s_min = 2.0 * quantile_sorted(&sorted, 0.95);
    let s_max = (1.1 * (max - min)).max(s_min * 1.01);
    let s_gran = (s_max - s_min) / config.n_scale as f64;
    let scales = (0..config.n_scale)
        .map(|j| s_min + (j + 1) as f64 * s_gran)
        .collect();

    let b_max = 2.0 * mean.abs() / config.bits as f64;
    let b_min = -b_max;
    let b_gran = (b_max - b_min) / config.n_bias as f64;
    let biases = (0..config.n_bias)
        .map(|k| b_min + k as f64 * b_gran)
        .collect();

    Ok(SearchSpaceConfig {
        n_ratio: config.n_ratio,
        n_scale: config.n_scale,
        n_bias: config.n_bias,
        ratio_intervals: config.ratio_intervals,
        ratios: ratio_candidates(config.n_ratio, config.ratio_intervals),
        scales,
        biases,
    })
}
