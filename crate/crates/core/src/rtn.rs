//! Symmetric round-to-nearest quantization onto a uniform integer grid.

use crate::error::{ensure_finite, Result, SbvrError};

/// A group quantized to `q * delta` with `|q| <= 2^(bits-1) - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RtnGroup {
    pub bits: u32,
    pub delta: f64,
    pub q: Vec<i32>,
}

/// Largest grid index for a `bits`-wide symmetric grid.
#[inline]
pub fn qmax(bits: u32) -> i32 {
    (1 << (bits - 1)) - 1
}

/// `delta = max|w| / (2^(bits-1) - 1)`, `q = clip(round(w / delta))`, rounding half away from zero.
pub fn rtn_quantize(group: &[f64], bits: u32) -> Result<RtnGroup> {
    if group.is_empty() {
        return Err(SbvrError::Validation("RTN group is empty".into()));
    }
    if !(2..=8).contains(&bits) {
        return Err(SbvrError::Validation(format!(
            "RTN bitwidth {bits} outside 2..=8"
        )));
    }
    ensure_finite(group, "RTN group")?;

    let qmax = qmax(bits);
    let absmax = group.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if absmax == 0.0 {
        return Ok(RtnGroup {
            bits,
            delta: 0.0,
            q: vec![0; group.len()],
        });
    }
    let delta = absmax / qmax as f64;
    let q = group
        .iter()
        .map(|w| ((w / delta).round() as i32).clamp(-qmax, qmax))
        .collect();
    Ok(RtnGroup { bits, delta, q })
}

pub fn rtn_dequantize(g: &RtnGroup) -> Vec<f64> {
    g.q.iter().map(|&q| q as f64 * g.delta).collect()
}

/// Mean squared reconstruction error of RTN on `group`.
pub fn rtn_mse(group: &[f64], bits: u32) -> Result<f64> {
    let g = rtn_quantize(group, bits)?;
    let sse: f64 = group
        .iter()
        .zip(rtn_dequantize(&g))
        .map(|(w, d)| (w - d) * (w - d))
        .sum();
    Ok(sse / group.len() as f64)
}
