//! Offline weight encoding.
//!
//! Every group is fitted with the coefficient set `{s * r^i + b}` that
//! minimizes mean squared error over the `R x S x B` candidate grid, after
//! which each element selects its nearest subset sum and the selection masks
//! become the group's bit-planes.

mod cache;
mod search_space;
mod subset;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use cache::{CoefficientCache, DEFAULT_CACHE_CAPACITY};
pub use search_space::{
    generate_search_space, quantile_sorted, ratio_candidates, SearchSpaceConfig,
    DEFAULT_RATIO_INTERVALS,
};
pub use subset::{nearest_point, subset_sums, SubsetSums};

use crate::error::{ensure_finite, Result, SbvrError};
use crate::hadamard;
use crate::types::{BitPlanes, CoefficientSet, QuantizedGroup, SbvrTensor, MAX_BITS};
use subset::fill_subset_values;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Coefficients (bit-planes) per group.
    pub bits: usize,
    pub group_size: usize,
    pub n_ratio: usize,
    pub n_scale: usize,
    pub n_bias: usize,
    pub ratio_intervals: [(f64, f64); 2],
    pub cache_enabled: bool,
    pub cache_capacity: usize,
    /// Weight of the newest accepted MSE in the moving average.
    pub ema_alpha: f64,
    /// Process groups sequentially through one shared cache.
    pub deterministic: bool,
    /// Rotate each group with a seeded randomized Hadamard transform before encoding.
    pub hadamard_seed: Option<u64>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            bits: 4,
            group_size: 128,
            n_ratio: 16,
            n_scale: 64,
            n_bias: 16,
            ratio_intervals: DEFAULT_RATIO_INTERVALS,
            cache_enabled: true,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            ema_alpha: 0.1,
            deterministic: true,
            hadamard_seed: None,
        }
    }
}

impl EncoderConfig {
    pub fn with_bits(bits: usize) -> Self {
        Self {
            bits,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SbvrError::Validation(msg));
        if !(1..=MAX_BITS).contains(&self.bits) {
            return fail(format!("bits {} outside 1..={MAX_BITS}", self.bits));
        }
        if self.group_size < 2 {
            return fail(format!("group size {} must be at least 2", self.group_size));
        }
        if self.n_ratio < 2 || !self.n_ratio.is_multiple_of(2) {
            return fail(format!(
                "n_ratio {} must be even and positive",
                self.n_ratio
            ));
        }
        if self.n_scale == 0 || self.n_bias == 0 {
            return fail("n_scale and n_bias must be positive".into());
        }
        for &(lo, hi) in &self.ratio_intervals {
            let ok = lo.is_finite() && hi.is_finite() && lo <= hi;
            if !ok || lo.abs() > 1.0 + 1e-9 || hi.abs() > 1.0 + 1e-9 || (lo <= 0.0 && hi >= 0.0) {
                return fail(format!(
                    "ratio interval [{lo}, {hi}] must exclude 0 and stay within [-1, 1]"
                ));
            }
        }
        let [(a_lo, a_hi), (b_lo, b_hi)] = self.ratio_intervals;
        if a_hi >= b_lo && b_hi >= a_lo {
            return fail("ratio intervals must be disjoint".into());
        }
        if !(self.ema_alpha > 0.0 && self.ema_alpha < 1.0) {
            return fail(format!("ema_alpha {} must lie in (0, 1)", self.ema_alpha));
        }
        if self.hadamard_seed.is_some() && !self.group_size.is_power_of_two() {
            return Err(SbvrError::UnsupportedSize(self.group_size));
        }
        Ok(())
    }
}

/// Result of encoding one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEncoding {
    pub planes: BitPlanes,
    pub coeffs: CoefficientSet,
    pub mse: f64,
    /// Whether a cached coefficient set was accepted instead of a full search.
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeReport {
    pub group_mse: Vec<f64>,
    pub mean_mse: f64,
    pub cache_hits: usize,
    /// Distinct coefficient sets stored in the tensor.
    pub cache_size: usize,
    pub wall_time: Duration,
}

impl EncodeReport {
    pub fn hit_rate(&self) -> f64 {
        if self.group_mse.is_empty() {
            0.0
        } else {
            self.cache_hits as f64 / self.group_mse.len() as f64
        }
    }
}

fn check_group(group: &[f64], config: &EncoderConfig) -> Result<()> {
    config.validate()?;
    if group.len() != config.group_size {
        return Err(SbvrError::Shape(format!(
            "group has {} elements, configured group size is {}",
            group.len(),
            config.group_size
        )));
    }
    ensure_finite(group, "weight group")
}

fn zero_encoding(config: &EncoderConfig) -> Result<GroupEncoding> {
    Ok(GroupEncoding {
        planes: BitPlanes::zeros(config.bits, config.group_size)?,
        coeffs: CoefficientSet::zero(config.bits)?,
        mse: 0.0,
        hit: false,
    })
}

fn sorted_copy(group: &[f64]) -> Vec<f64> {
    let mut sorted = group.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted
}

/// Sum of squared distances from each of `sorted_group` to its nearest point,
/// walking both sorted sequences once.
fn sorted_sse(sorted_group: &[f64], points: &[f64]) -> f64 {
    let last = points.len() - 1;
    let mut idx = 0;
    let mut sse = 0.0;
    for &x in sorted_group {
        while idx <= last && points[idx] < x {
            idx += 1;
        }
        let d = if idx > last {
            x - points[last]
        } else if idx == 0 {
            points[0] - x
        } else {
            (points[idx] - x).min(x - points[idx - 1])
        };
        sse += d * d;
    }
    sse
}

/// MSE of quantizing `sorted_group` with the subset sums of `coeffs`.
fn coefficient_mse(sorted_group: &[f64], coeffs: &[f64], scratch: &mut Vec<f64>) -> f64 {
    fill_subset_values(coeffs, scratch);
    scratch.sort_unstable_by(f64::total_cmp);
    sorted_sse(sorted_group, scratch) / sorted_group.len() as f64
}

/// Assigns every element to its nearest subset sum of `coeffs`.
pub fn assign_bits(group: &[f64], coeffs: CoefficientSet) -> Result<GroupEncoding> {
    let sums = subset_sums(&coeffs);
    let mut masks = Vec::with_capacity(group.len());
    let mut sse = 0.0;
    for &x in group {
        let (v, m) = nearest_point(&sums, x);
        sse += (x - v) * (x - v);
        masks.push(m);
    }
    Ok(GroupEncoding {
        planes: BitPlanes::from_masks(&masks, coeffs.k())?,
        coeffs,
        mse: sse / group.len() as f64,
        hit: false,
    })
}

/// Exhaustive search over the generated space. Returns the arg-min coefficient
/// set; ties keep the first entry in `R`-outer, `S`-middle, `B`-inner order.
pub fn search_best(group: &[f64], config: &EncoderConfig) -> Result<(CoefficientSet, f64)> {
    let space = generate_search_space(group, config)?;
    let sorted = sorted_copy(group);
    let k = config.bits;

    let per_ratio: Vec<(f64, usize, usize)> = space
        .ratios
        .par_iter()
        .map(|&r| {
            let powers: Vec<f64> = (0..k).map(|i| r.powi(i as i32)).collect();
            let mut coeffs = vec![0.0; k];
            let mut scratch = Vec::with_capacity(1 << k);
            let mut best = (f64::INFINITY, 0, 0);
            for (si, &s) in space.scales.iter().enumerate() {
                for (bi, &b) in space.biases.iter().enumerate() {
                    for (c, p) in coeffs.iter_mut().zip(&powers) {
                        *c = s * p + b;
                    }
                    let mse = coefficient_mse(&sorted, &coeffs, &mut scratch);
                    if mse < best.0 {
                        best = (mse, si, bi);
                    }
                }
            }
            best
        })
        .collect();

    let mut best: Option<(f64, usize, usize, usize)> = None;
    for (ri, &(mse, si, bi)) in per_ratio.iter().enumerate() {
        if best.is_none_or(|b| mse < b.0) {
            best = Some((mse, ri, si, bi));
        }
    }
    let (mse, ri, si, bi) = best.expect("search space is never empty");
    let coeffs =
        CoefficientSet::geometric(space.ratios[ri], space.scales[si], space.biases[bi], k)?;
    Ok((coeffs, mse))
}

/// Full-search encoding of one group, without a cache.
pub fn encode_group(group: &[f64], config: &EncoderConfig) -> Result<GroupEncoding> {
    check_group(group, config)?;
    if group.iter().all(|&x| x == 0.0) {
        return zero_encoding(config);
    }
    let (coeffs, _) = search_best(group, config)?;
    assign_bits(group, coeffs)
}

/// Encoding that first probes previously selected coefficient sets.
///
/// The best cached set is accepted when its MSE does not exceed the running
/// average of accepted MSE; otherwise a full search runs and its winner joins
/// the cache. All-zero groups bypass the cache.
pub fn encode_group_cached(
    group: &[f64],
    config: &EncoderConfig,
    cache: &mut CoefficientCache,
) -> Result<GroupEncoding> {
    if !config.cache_enabled {
        return encode_group(group, config);
    }
    check_group(group, config)?;
    if group.iter().all(|&x| x == 0.0) {
        return zero_encoding(config);
    }

    if let (Some(ema), false) = (cache.ema(), cache.is_empty()) {
        let sorted = sorted_copy(group);
        let mut scratch = Vec::with_capacity(1 << config.bits);
        let mut best: Option<(usize, f64)> = None;
        for (i, entry) in cache.entries().iter().enumerate() {
            let mse = coefficient_mse(&sorted, entry.coeffs(), &mut scratch);
            if best.is_none_or(|b| mse < b.1) {
                best = Some((i, mse));
            }
        }
        if let Some((i, probe_mse)) = best.filter(|b| b.1 <= ema) {
            let coeffs = cache.entries()[i].clone();
            cache.promote(i);
            cache.record_lookup(true);
            let mut enc = assign_bits(group, coeffs)?;
            enc.hit = true;
            cache.update_ema(probe_mse, config.ema_alpha);
            return Ok(enc);
        }
    }

    let (coeffs, search_mse) = search_best(group, config)?;
    cache.insert(coeffs.clone());
    cache.record_lookup(false);
    let enc = assign_bits(group, coeffs)?;
    // The EMA tracks the sorted-order evaluation so that probes compare like with like.
    cache.update_ema(search_mse, config.ema_alpha);
    Ok(enc)
}

/// Reconstructs a group: element `j` is the sum of the coefficients whose bits are set.
pub fn decode_group(planes: &BitPlanes, coeffs: &CoefficientSet) -> Vec<f64> {
    (0..planes.n())
        .map(|j| coeffs.subset_sum(planes.mask(j)))
        .collect()
}

/// Row-major reconstruction, in the (possibly rotated) domain the groups were encoded in.
pub fn decode_tensor(t: &SbvrTensor) -> Vec<f64> {
    t.groups()
        .iter()
        .flat_map(|g| decode_group(&g.planes, t.coefficients_of(g)))
        .collect()
}

/// Row-major reconstruction with any Hadamard rotation undone.
pub fn decode_tensor_unrotated(t: &SbvrTensor) -> Result<Vec<f64>> {
    let mut out = decode_tensor(t);
    if let Some(seed) = t.hadamard_seed() {
        let signs = hadamard::random_signs(t.group_size(), seed);
        for chunk in out.chunks_exact_mut(t.group_size()) {
            let restored = hadamard::rht_inverse(chunk, &signs)?;
            chunk.copy_from_slice(&restored);
        }
    }
    Ok(out)
}

/// Quantizes a row-major `rows x cols` matrix group by group along `cols`.
pub fn encode_tensor(
    matrix: &[f64],
    rows: usize,
    cols: usize,
    config: &EncoderConfig,
) -> Result<(SbvrTensor, EncodeReport)> {
    encode_tensor_with_cache(
        matrix,
        rows,
        cols,
        config,
        &mut CoefficientCache::new(config.cache_capacity),
    )
}

/// [`encode_tensor`] starting from (and updating) an existing cache.
///
/// Only deterministic mode threads `cache` through the run; fast mode gives
/// each worker a private cache.
pub fn encode_tensor_with_cache(
    matrix: &[f64],
    rows: usize,
    cols: usize,
    config: &EncoderConfig,
    cache: &mut CoefficientCache,
) -> Result<(SbvrTensor, EncodeReport)> {
    let start = Instant::now();
    config.validate()?;
    if rows == 0 || cols == 0 || matrix.len() != rows * cols {
        return Err(SbvrError::Shape(format!(
            "matrix of {} values does not match {rows} x {cols}",
            matrix.len()
        )));
    }
    if !cols.is_multiple_of(config.group_size) {
        return Err(SbvrError::Shape(format!(
            "cols {cols} is not a multiple of group size {}",
            config.group_size
        )));
    }
    ensure_finite(matrix, "weight matrix")?;

    let rotated;
    let source = match config.hadamard_seed {
        Some(seed) => {
            let signs = hadamard::random_signs(config.group_size, seed);
            rotated = matrix
                .chunks_exact(config.group_size)
                .map(|g| hadamard::rht(g, &signs))
                .collect::<Result<Vec<_>>>()?
                .concat();
            &rotated[..]
        }
        None => matrix,
    };
    let groups: Vec<&[f64]> = source.chunks_exact(config.group_size).collect();

    let encodings: Vec<GroupEncoding> = if config.deterministic || !config.cache_enabled {
        groups
            .iter()
            .map(|g| encode_group_cached(g, config, cache))
            .collect::<Result<_>>()?
    } else {
        let workers = rayon::current_num_threads().max(1);
        let chunk = groups.len().div_ceil(workers);
        groups
            .par_chunks(chunk)
            .map(|part| {
                let mut local = CoefficientCache::new(config.cache_capacity);
                part.iter()
                    .map(|g| encode_group_cached(g, config, &mut local))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect()
    };

    // Canonical coefficient indices: order of first appearance in row-major group order.
    let mut index_of: HashMap<[u64; 3], u32> = HashMap::new();
    let mut coeff_cache = Vec::new();
    let mut quantized = Vec::with_capacity(encodings.len());
    let mut group_mse = Vec::with_capacity(encodings.len());
    let mut cache_hits = 0;
    for enc in encodings {
        let idx = *index_of.entry(enc.coeffs.key()).or_insert_with(|| {
            coeff_cache.push(enc.coeffs.clone());
            (coeff_cache.len() - 1) as u32
        });
        cache_hits += enc.hit as usize;
        group_mse.push(enc.mse);
        quantized.push(QuantizedGroup {
            planes: enc.planes,
            coeff_index: idx,
        });
    }

    let tensor = SbvrTensor::new(
        rows,
        cols,
        config.group_size,
        config.bits,
        quantized,
        coeff_cache,
        config.hadamard_seed,
    )?;
    let mean_mse = group_mse.iter().sum::<f64>() / group_mse.len() as f64;
    let report = EncodeReport {
        mean_mse,
        cache_hits,
        cache_size: tensor.coeff_cache().len(),
        group_mse,
        wall_time: start.elapsed(),
    };
    Ok((tensor, report))
}
