//! Shared domain types and the bit-plane packing convention.
//!
//! Bit-planes are stored plane-major in 32-bit words. Within a word the bit
//! order is little-endian: bit `j` of word `w` in plane `i` is the selection
//! bit of element `w * 32 + j` for coefficient `i`. Bits past the group length
//! in the last word of every plane are always zero.

use crate::error::{Result, SbvrError};

/// Largest supported number of coefficients (bit-planes) per group.
pub const MAX_BITS: usize = 16;

/// Bits per stored word.
pub const WORD_BITS: usize = 32;

/// Number of 32-bit words needed to hold one plane of `n` elements.
#[inline]
pub fn words_per_plane(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

/// The `K` coefficients shared by one group, together with the
/// `(ratio, scale, bias)` triple they were generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    coeffs: Vec<f64>,
    ratio: f64,
    scale: f64,
    bias: f64,
}

impl CoefficientSet {
    /// Builds `{scale * ratio^i + bias : 0 <= i < k}`.
    pub fn geometric(ratio: f64, scale: f64, bias: f64, k: usize) -> Result<Self> {
        check_bits(k)?;
        let coeffs = (0..k)
            .map(|i| geometric_term(ratio, scale, bias, i))
            .collect();
        let set = Self {
            coeffs,
            ratio,
            scale,
            bias,
        };
        set.check_finite()?;
        Ok(set)
    }

    /// Rebuilds a set from stored coefficients, checking them against the triple.
    pub fn from_parts(ratio: f64, scale: f64, bias: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_bits(coeffs.len())?;
        let set = Self {
            coeffs,
            ratio,
            scale,
            bias,
        };
        set.check_finite()?;
        for (i, &c) in set.coeffs.iter().enumerate() {
            let expected = geometric_term(ratio, scale, bias, i);
            let tol = 1e-6 * ((scale * ratio.powi(i as i32)).abs() + bias.abs());
            if (c - expected).abs() > tol {
                return Err(SbvrError::Invariant(format!(
                    "coefficient {i} is {c}, expected {expected} from (r={ratio}, s={scale}, b={bias})"
                )));
            }
        }
        Ok(set)
    }

    /// The all-zero set used for all-zero groups.
    pub fn zero(k: usize) -> Result<Self> {
        Self::geometric(1.0, 0.0, 0.0, k)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Exact bit pattern of the generating triple; used as the dedup key.
    pub fn key(&self) -> [u64; 3] {
        [
            self.ratio.to_bits(),
            self.scale.to_bits(),
            self.bias.to_bits(),
        ]
    }

    /// Sum of the coefficients selected by `mask`, added in ascending bit order.
    pub fn subset_sum(&self, mask: u32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .fold(0.0, |acc, (_, c)| acc + c)
    }

    fn check_finite(&self) -> Result<()> {
        let all = [self.ratio, self.scale, self.bias];
        if all.iter().chain(&self.coeffs).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SbvrError::Validation(
                "coefficient set contains a non-finite value".into(),
            ))
        }
    }
}

#[inline]
fn geometric_term(ratio: f64, scale: f64, bias: f64, i: usize) -> f64 {
    scale * ratio.powi(i as i32) + bias
}

fn check_bits(k: usize) -> Result<()> {
    if (1..=MAX_BITS).contains(&k) {
        Ok(())
    } else {
        Err(SbvrError::Size(format!(
            "plane count {k} outside 1..={MAX_BITS}"
        )))
    }
}

/// `k` packed bit-planes over `n` elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitPlanes {
    k: usize,
    n: usize,
    words: Vec<u32>,
}

impl BitPlanes {
    pub fn zeros(k: usize, n: usize) -> Result<Self> {
        check_shape(k, n)?;
        Ok(Self {
            k,
            n,
            words: vec![0; k * words_per_plane(n)],
        })
    }

    /// Packs per-element selection masks: bit `i` of `masks[j]` becomes
    /// plane `i`, element `j`.
    pub fn from_masks(masks: &[u32], k: usize) -> Result<Self> {
        let mut planes = Self::zeros(k, masks.len())?;
        if let Some(j) = masks.iter().position(|&m| m >> k != 0) {
            return Err(SbvrError::Size(format!(
                "mask {:#x} of element {j} has bits beyond plane {}",
                masks[j],
                k - 1
            )));
        }
        let wpp = planes.words_per_plane();
        for (j, &mask) in masks.iter().enumerate() {
            let (w, b) = (j / WORD_BITS, j % WORD_BITS);
            for i in 0..k {
                planes.words[i * wpp + w] |= (mask >> i & 1) << b;
            }
        }
        Ok(planes)
    }

    /// Wraps raw plane-major words, rejecting wrong lengths and set padding bits.
    pub fn from_words(k: usize, n: usize, words: Vec<u32>) -> Result<Self> {
        check_shape(k, n)?;
        let wpp = words_per_plane(n);
        if words.len() != k * wpp {
            return Err(SbvrError::Size(format!(
                "expected {} words for k={k}, n={n}; got {}",
                k * wpp,
                words.len()
            )));
        }
        let tail = n % WORD_BITS;
        if tail != 0 {
            let pad = !0u32 << tail;
            for i in 0..k {
                if words[i * wpp + wpp - 1] & pad != 0 {
                    return Err(SbvrError::Invariant(format!(
                        "padding bits set in plane {i}"
                    )));
                }
            }
        }
        Ok(Self { k, n, words })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words_per_plane(&self) -> usize {
        words_per_plane(self.n)
    }

    /// All words, plane-major.
    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn plane(&self, i: usize) -> &[u32] {
        let wpp = self.words_per_plane();
        &self.words[i * wpp..(i + 1) * wpp]
    }

    #[inline]
    pub fn bit(&self, plane: usize, element: usize) -> bool {
        let word = self.plane(plane)[element / WORD_BITS];
        word >> (element % WORD_BITS) & 1 == 1
    }

    /// Selection mask of element `j` across all planes.
    pub fn mask(&self, element: usize) -> u32 {
        (0..self.k).fold(0, |m, i| m | (self.bit(i, element) as u32) << i)
    }
}

fn check_shape(k: usize, n: usize) -> Result<()> {
    check_bits(k)?;
    if n == 0 {
        return Err(SbvrError::Size("group length must be at least 1".into()));
    }
    Ok(())
}

/// Packs an `n x k` boolean selection matrix into bit-planes.
pub fn pack_bits<R: AsRef<[bool]>>(selection: &[R]) -> Result<BitPlanes> {
    let k = selection.first().map_or(0, |row| row.as_ref().len());
    check_shape(k, selection.len())?;
    let mut masks = Vec::with_capacity(selection.len());
    for (j, row) in selection.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != k {
            return Err(SbvrError::Size(format!(
                "row {j} has {} columns, expected {k}",
                row.len()
            )));
        }
        masks.push(
            row.iter()
                .enumerate()
                .fold(0u32, |m, (i, &b)| m | (b as u32) << i),
        );
    }
    BitPlanes::from_masks(&masks, k)
}

/// Inverse of [`pack_bits`].
pub fn unpack_bits(planes: &BitPlanes) -> Vec<Vec<bool>> {
    (0..planes.n())
        .map(|j| (0..planes.k()).map(|i| planes.bit(i, j)).collect())
        .collect()
}

/// One group's bit-planes and the index of its coefficient set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedGroup {
    pub planes: BitPlanes,
    pub coeff_index: u32,
}

/// A quantized `rows x cols` weight matrix, grouped along `cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbvrTensor {
    rows: usize,
    cols: usize,
    group_size: usize,
    bits: usize,
    groups: Vec<QuantizedGroup>,
    coeff_cache: Vec<CoefficientSet>,
    hadamard_seed: Option<u64>,
}

impl SbvrTensor {
    /// Assembles a tensor, validating every structural invariant.
    pub fn new(
        rows: usize,
        cols: usize,
        group_size: usize,
        bits: usize,
        groups: Vec<QuantizedGroup>,
        coeff_cache: Vec<CoefficientSet>,
        hadamard_seed: Option<u64>,
    ) -> Result<Self> {
        check_bits(bits)?;
        if group_size == 0 || !cols.is_multiple_of(group_size) {
            return Err(SbvrError::Shape(format!(
                "cols {cols} is not a multiple of group size {group_size}"
            )));
        }
        let expected = rows * (cols / group_size);
        if groups.len() != expected {
            return Err(SbvrError::Invariant(format!(
                "expected {expected} groups, found {}",
                groups.len()
            )));
        }
        if let Some(i) = coeff_cache.iter().position(|c| c.k() != bits) {
            return Err(SbvrError::Invariant(format!(
                "coefficient set {i} has {} coefficients, expected {bits}",
                coeff_cache[i].k()
            )));
        }
        for (gi, g) in groups.iter().enumerate() {
            if g.coeff_index as usize >= coeff_cache.len() {
                return Err(SbvrError::Invariant(format!(
                    "group {gi} references coefficient set {} but the cache holds {}",
                    g.coeff_index,
                    coeff_cache.len()
                )));
            }
            if g.planes.k() != bits || g.planes.n() != group_size {
                return Err(SbvrError::Invariant(format!(
                    "group {gi} has shape k={} n={}, expected k={bits} n={group_size}",
                    g.planes.k(),
                    g.planes.n()
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            group_size,
            bits,
            groups,
            coeff_cache,
            hadamard_seed,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn groups_per_row(&self) -> usize {
        self.cols / self.group_size
    }

    pub fn groups(&self) -> &[QuantizedGroup] {
        &self.groups
    }

    pub fn row_groups(&self, row: usize) -> &[QuantizedGroup] {
        let gpr = self.groups_per_row();
        &self.groups[row * gpr..(row + 1) * gpr]
    }

    pub fn coeff_cache(&self) -> &[CoefficientSet] {
        &self.coeff_cache
    }

    pub fn coefficients_of(&self, group: &QuantizedGroup) -> &CoefficientSet {
        &self.coeff_cache[group.coeff_index as usize]
    }

    /// Seed of the per-group randomized Hadamard rotation, when one was applied.
    pub fn hadamard_seed(&self) -> Option<u64> {
        self.hadamard_seed
    }
}

/// An activation vector on a power-of-two grid: `l` two's-complement planes
/// and one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedActivation {
    scale: f64,
    planes: BitPlanes,
}

impl QuantizedActivation {
    pub fn new(scale: f64, planes: BitPlanes) -> Result<Self> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(SbvrError::Validation(format!(
                "activation scale {scale} must be finite and non-negative"
            )));
        }
        if scale == 0.0 && planes.words().iter().any(|&w| w != 0) {
            return Err(SbvrError::Invariant(
                "zero-scale activation must have all-zero planes".into(),
            ));
        }
        Ok(Self { scale, planes })
    }

    pub fn n(&self) -> usize {
        self.planes.n()
    }

    /// Activation bitwidth.
    pub fn l(&self) -> usize {
        self.planes.k()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn planes(&self) -> &BitPlanes {
        &self.planes
    }

    /// Per-plane coefficients: `2^i * s` for `i < l - 1`, `-2^(l-1) * s` for the sign plane.
    pub fn coefficients(&self) -> Vec<f64> {
        let l = self.l();
        (0..l)
            .map(|i| {
                let w = (1u32 << i) as f64 * self.scale;
                if i + 1 == l {
                    -w
                } else {
                    w
                }
            })
            .collect()
    }
}
