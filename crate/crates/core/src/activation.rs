//! Online activation conversion onto a power-of-two grid.
//!
//! Each activation vector gets one scale `s`; elements become `l`-bit two's
//! complement integers `z`, and the integer bits are the bit-planes. Plane `i`
//! carries coefficient `2^i * s`, except the top plane which carries
//! `-2^(l-1) * s`.

use crate::error::{ensure_finite, Result, SbvrError};
use crate::types::{BitPlanes, QuantizedActivation};

/// Divisor used to derive the per-vector scale from the absolute maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationScale {
    /// `s = absmax / 2^(l-1)`: the absolute maximum lands on the grid edge.
    #[default]
    HalfRange,
    /// `s = absmax / 2^l`: the literal divisor; values beyond `absmax / 2` clip.
    FullRange,
}

impl ActivationScale {
    fn divisor(self, l: usize) -> f64 {
        match self {
            Self::HalfRange => (1u32 << (l - 1)) as f64,
            Self::FullRange => (1u32 << l) as f64,
        }
    }
}

/// Integer range `[-2^(l-1), 2^(l-1) - 1]`.
pub fn integer_range(l: usize) -> (i32, i32) {
    let half = 1i32 << (l - 1);
    (-half, half - 1)
}

pub fn quantize_activation(v: &[f64], l: usize) -> Result<QuantizedActivation> {
    quantize_activation_with(v, l, ActivationScale::default())
}

pub fn quantize_activation_with(
    v: &[f64],
    l: usize,
    mode: ActivationScale,
) -> Result<QuantizedActivation> {
    if v.is_empty() {
        return Err(SbvrError::Validation("activation vector is empty".into()));
    }
    if !(2..=8).contains(&l) {
        return Err(SbvrError::Validation(format!(
            "activation bitwidth {l} outside 2..=8"
        )));
    }
    ensure_finite(v, "activation vector")?;

    let absmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if absmax == 0.0 {
        return QuantizedActivation::new(0.0, BitPlanes::zeros(l, v.len())?);
    }
    let scale = absmax / mode.divisor(l);
    let (lo, hi) = integer_range(l);
    let width_mask = (1u32 << l) - 1;
    let masks: Vec<u32> = v
        .iter()
        .map(|x| {
            let z = ((x / scale).round() as i32).clamp(lo, hi);
            z as u32 & width_mask
        })
        .collect();
    QuantizedActivation::new(scale, BitPlanes::from_masks(&masks, l)?)
}

/// Element `j` is the sum of plane coefficients whose bits are set.
pub fn dequantize_activation(qa: &QuantizedActivation) -> Vec<f64> {
    let coeffs = qa.coefficients();
    let planes = qa.planes();
    (0..qa.n())
        .map(|j| {
            coeffs
                .iter()
                .enumerate()
                .filter(|&(i, _)| planes.bit(i, j))
                .fold(0.0, |acc, (_, c)| acc + c)
        })
        .collect()
}

/// Signed integers `z` encoded by the planes.
pub fn activation_integers(qa: &QuantizedActivation) -> Vec<i32> {
    let l = qa.l();
    (0..qa.n())
        .map(|j| {
            let raw = qa.planes().mask(j) as i32;
            // sign-extend from l bits
            (raw << (32 - l)) >> (32 - l)
        })
        .collect()
}

/// Splits `x` into consecutive groups of `group_size` and quantizes each.
pub fn quantize_activation_groups(
    x: &[f64],
    group_size: usize,
    l: usize,
    mode: ActivationScale,
) -> Result<Vec<QuantizedActivation>> {
    if group_size == 0 || !x.len().is_multiple_of(group_size) {
        return Err(SbvrError::Shape(format!(
            "activation length {} is not a multiple of group size {group_size}",
            x.len()
        )));
    }
    x.chunks_exact(group_size)
        .map(|g| quantize_activation_with(g, l, mode))
        .collect()
}
