//! Matrix-vector products computed directly on bit-planes.
//!
//! For a weight group with coefficients `c_i` (K planes) and an activation
//! group with coefficients `a_j` (N planes) the inner product is
//!
//! ```text
//! sum_i sum_j (c_i * a_j) * popcount(w_i AND x_j)
//! ```
//!
//! Popcounts are reduced over the group's words in integers; each `(i, j)`
//! plane pair then costs exactly one real multiply-accumulate, so a group
//! needs `K * N` of them regardless of its length.
//!
//! All paths here work in the tensor's stored domain. For tensors encoded with
//! a Hadamard rotation, rotate the activation with [`rotate_input`] first.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::activation::{quantize_activation_groups, ActivationScale};
use crate::encoder::decode_tensor;
use crate::error::{Result, SbvrError};
use crate::hadamard;
use crate::types::{BitPlanes, CoefficientSet, QuantizedActivation, QuantizedGroup, SbvrTensor};

/// Instrumentation hook for the kernel. The no-op implementation compiles away.
pub trait OpCounter {
    fn record(&mut self, word_ands: u64, popcounts: u64, fmas: u64);
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub groups: u64,
    pub word_ands: u64,
    pub popcounts: u64,
    pub fmas: u64,
}

impl OpCounter for OpCounts {
    #[inline]
    fn record(&mut self, word_ands: u64, popcounts: u64, fmas: u64) {
        self.word_ands += word_ands;
        self.popcounts += popcounts;
        self.fmas += fmas;
    }
}

impl OpCounts {
    pub fn fmas_per_group(&self) -> f64 {
        self.fmas as f64 / self.groups.max(1) as f64
    }

    pub fn word_ands_per_group(&self) -> f64 {
        self.word_ands as f64 / self.groups.max(1) as f64
    }
}

struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn record(&mut self, _: u64, _: u64, _: u64) {}
}

#[inline]
fn group_kernel<C: OpCounter>(
    w: &BitPlanes,
    w_coeffs: &[f64],
    x: &BitPlanes,
    x_coeffs: &[f64],
    counter: &mut C,
) -> f64 {
    let words = w.words_per_plane() as u64;
    let mut acc = 0.0;
    for (i, &c) in w_coeffs.iter().enumerate() {
        let wp = w.plane(i);
        for (j, &a) in x_coeffs.iter().enumerate() {
            let pc: u64 = wp
                .iter()
                .zip(x.plane(j))
                .map(|(p, q)| (p & q).count_ones() as u64)
                .sum();
            acc += (c * a) * pc as f64;
            counter.record(words, words, 1);
        }
    }
    acc
}

fn check_group_pair(w: &BitPlanes, x: &BitPlanes) -> Result<()> {
    if w.n() != x.n() {
        return Err(SbvrError::Shape(format!(
            "weight group has {} elements, activation group has {}",
            w.n(),
            x.n()
        )));
    }
    Ok(())
}

/// Inner product of one weight group with one activation group.
pub fn group_inner_product(
    planes: &BitPlanes,
    coeffs: &CoefficientSet,
    qa: &QuantizedActivation,
) -> Result<f64> {
    check_group_pair(planes, qa.planes())?;
    if coeffs.k() != planes.k() {
        return Err(SbvrError::Shape(format!(
            "{} coefficients for {} weight planes",
            coeffs.k(),
            planes.k()
        )));
    }
    Ok(group_kernel(
        planes,
        coeffs.coeffs(),
        qa.planes(),
        &qa.coefficients(),
        &mut NoCount,
    ))
}

fn check_alignment(w: &SbvrTensor, x: &[QuantizedActivation]) -> Result<()> {
    if x.len() != w.groups_per_row() {
        return Err(SbvrError::Shape(format!(
            "{} activation groups for {} weight groups per row",
            x.len(),
            w.groups_per_row()
        )));
    }
    if let Some(g) = x.iter().position(|qa| qa.n() != w.group_size()) {
        return Err(SbvrError::Shape(format!(
            "activation group {g} has {} elements, weight group size is {}",
            x[g].n(),
            w.group_size()
        )));
    }
    Ok(())
}

fn row_dot<C: OpCounter>(
    w: &SbvrTensor,
    row: &[QuantizedGroup],
    x: &[QuantizedActivation],
    x_coeffs: &[Vec<f64>],
    counter: &mut C,
) -> f64 {
    row.iter()
        .zip(x)
        .zip(x_coeffs)
        .map(|((g, qa), ac)| {
            group_kernel(
                &g.planes,
                w.coefficients_of(g).coeffs(),
                qa.planes(),
                ac,
                counter,
            )
        })
        .fold(0.0, |acc, v| acc + v)
}

/// Packed GEMV with double-precision results.
pub fn gemv_f64(w: &SbvrTensor, x: &[QuantizedActivation]) -> Result<Vec<f64>> {
    check_alignment(w, x)?;
    let x_coeffs: Vec<Vec<f64>> = x.iter().map(QuantizedActivation::coefficients).collect();
    Ok((0..w.rows())
        .into_par_iter()
        .map(|r| row_dot(w, w.row_groups(r), x, &x_coeffs, &mut NoCount))
        .collect())
}

/// Packed GEMV; accumulates in `f64`, returns `f32`.
pub fn gemv(w: &SbvrTensor, x: &[QuantizedActivation]) -> Result<Vec<f32>> {
    Ok(gemv_f64(w, x)?.into_iter().map(|v| v as f32).collect())
}

/// Sequential packed GEMV that also reports operation counts.
pub fn gemv_counted(w: &SbvrTensor, x: &[QuantizedActivation]) -> Result<(Vec<f64>, OpCounts)> {
    check_alignment(w, x)?;
    let x_coeffs: Vec<Vec<f64>> = x.iter().map(QuantizedActivation::coefficients).collect();
    let mut counts = OpCounts::default();
    let out = (0..w.rows())
        .map(|r| row_dot(w, w.row_groups(r), x, &x_coeffs, &mut counts))
        .collect();
    counts.groups = w.groups().len() as u64;
    Ok((out, counts))
}

/// Decode-then-multiply reference, double precision.
pub fn gemv_reference_f64(w: &SbvrTensor, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.cols() {
        return Err(SbvrError::Shape(format!(
            "activation has {} elements, tensor has {} columns",
            x.len(),
            w.cols()
        )));
    }
    let dense = decode_tensor(w);
    Ok(dense
        .chunks_exact(w.cols())
        .map(|row| row.iter().zip(x).fold(0.0, |acc, (a, b)| acc + a * b))
        .collect())
}

pub fn gemv_reference(w: &SbvrTensor, x: &[f64]) -> Result<Vec<f32>> {
    Ok(gemv_reference_f64(w, x)?
        .into_iter()
        .map(|v| v as f32)
        .collect())
}

/// Maps an activation into the tensor's stored domain (per-group rotation when
/// the tensor was encoded with one, otherwise a copy).
pub fn rotate_input(w: &SbvrTensor, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.cols() {
        return Err(SbvrError::Shape(format!(
            "activation has {} elements, tensor has {} columns",
            x.len(),
            w.cols()
        )));
    }
    match w.hadamard_seed() {
        None => Ok(x.to_vec()),
        Some(seed) => {
            let signs = hadamard::random_signs(w.group_size(), seed);
            Ok(x.chunks_exact(w.group_size())
                .map(|g| hadamard::rht(g, &signs))
                .collect::<Result<Vec<_>>>()?
                .concat())
        }
    }
}

/// Timing and operation counts for packed versus dense GEMV.
#[derive(Debug, Clone, PartialEq)]
pub struct GemvBench {
    pub rows: usize,
    pub cols: usize,
    pub group_size: usize,
    pub weight_bits: usize,
    pub activation_bits: usize,
    pub repeats: usize,
    /// Median time of activation conversion plus packed GEMV.
    pub packed_ns: u128,
    /// Median time of an `f32` dense GEMV over the decoded weights.
    pub dense_ns: u128,
    /// `dense_ns / packed_ns`.
    pub ratio: f64,
    pub counts: OpCounts,
}

/// Random tensor with valid structure: uniformly random bit-planes and a small
/// pool of random geometric coefficient sets. Intended for timing only.
pub fn random_tensor(
    rows: usize,
    cols: usize,
    group_size: usize,
    bits: usize,
    seed: u64,
) -> Result<SbvrTensor> {
    if group_size == 0 || !cols.is_multiple_of(group_size) || rows == 0 {
        return Err(SbvrError::Shape(format!(
            "{rows} x {cols} is not divisible into groups of {group_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = 16;
    let cache = (0..pool)
        .map(|_| {
            let r = rng.random_range(-1.0..-0.5);
            let s = rng.random_range(0.5..2.0);
            let b = rng.random_range(-0.1..0.1);
            CoefficientSet::geometric(r, s, b, bits)
        })
        .collect::<Result<Vec<_>>>()?;
    let n_groups = rows * cols / group_size;
    let full = (1u32 << bits) - 1;
    let groups = (0..n_groups)
        .map(|_| {
            let masks: Vec<u32> = (0..group_size)
                .map(|_| rng.random::<u32>() & full)
                .collect();
            Ok(QuantizedGroup {
                planes: BitPlanes::from_masks(&masks, bits)?,
                coeff_index: rng.random_range(0..pool as u32),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SbvrTensor::new(rows, cols, group_size, bits, groups, cache, None)
}

fn median_ns(mut samples: Vec<u128>) -> u128 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

pub fn bench_gemv(
    rows: usize,
    cols: usize,
    group_size: usize,
    weight_bits: usize,
    activation_bits: usize,
    repeats: usize,
    seed: u64,
) -> Result<GemvBench> {
    let repeats = repeats.max(1);
    let w = random_tensor(rows, cols, group_size, weight_bits, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();

    let dense: Vec<f32> = decode_tensor(&w).into_iter().map(|v| v as f32).collect();
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();

    let (_, counts) = gemv_counted(
        &w,
        &quantize_activation_groups(&x, group_size, activation_bits, ActivationScale::HalfRange)?,
    )?;

    let mut packed = Vec::with_capacity(repeats);
    let mut dense_t = Vec::with_capacity(repeats);
    let mut sink = 0.0f64;
    for _ in 0..repeats {
        let t = Instant::now();
        let qa = quantize_activation_groups(
            &x,
            group_size,
            activation_bits,
            ActivationScale::HalfRange,
        )?;
        let y = gemv(&w, &qa)?;
        packed.push(t.elapsed().as_nanos());
        sink += y[0] as f64;

        let t = Instant::now();
        let y: Vec<f32> = dense
            .par_chunks_exact(cols)
            .map(|row| row.iter().zip(&x32).map(|(a, b)| a * b).sum::<f32>())
            .collect();
        dense_t.push(t.elapsed().as_nanos());
        sink += y[0] as f64;
    }
    std::hint::black_box(sink);

    let packed_ns = median_ns(packed).max(1);
    let dense_ns = median_ns(dense_t).max(1);
    Ok(GemvBench {
        rows,
        cols,
        group_size,
        weight_bits,
        activation_bits,
        repeats,
        packed_ns,
        dense_ns,
        ratio: dense_ns as f64 / packed_ns as f64,
        counts,
    })
}
