//! Randomized Hadamard rotation: `(1 / sqrt(n)) * H_n * (signs ⊙ v)` with the
//! Sylvester Hadamard matrix, applied by an in-place fast Walsh-Hadamard butterfly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SbvrError};

/// Unnormalized in-place Walsh-Hadamard transform. `values.len()` must be a power of two.
pub fn fwht_in_place(values: &mut [f64]) {
    debug_assert!(values.len().is_power_of_two());
    let mut half = 1;
    while half < values.len() {
        for block in values.chunks_exact_mut(half * 2) {
            let (left, right) = block.split_at_mut(half);
            for (x, y) in left.iter_mut().zip(right.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        half *= 2;
    }
}

/// Deterministic `±1` sign vector of length `n` drawn from `seed`.
pub fn random_signs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn check(v: &[f64], signs: &[f64]) -> Result<()> {
    if v.is_empty() || !v.len().is_power_of_two() {
        return Err(SbvrError::UnsupportedSize(v.len()));
    }
    if signs.len() != v.len() {
        return Err(SbvrError::Shape(format!(
            "sign vector has {} entries for a vector of {}",
            signs.len(),
            v.len()
        )));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(SbvrError::Validation("signs must be +1 or -1".into()));
    }
    Ok(())
}

pub fn rht(v: &[f64], signs: &[f64]) -> Result<Vec<f64>> {
    check(v, signs)?;
    let mut out: Vec<f64> = v.iter().zip(signs).map(|(x, s)| x * s).collect();
    fwht_in_place(&mut out);
    let norm = (v.len() as f64).sqrt().recip();
    out.iter_mut().for_each(|x| *x *= norm);
    Ok(out)
}

/// Inverse of [`rht`]: `signs ⊙ ((1 / sqrt(n)) * H_n * v)`.
pub fn rht_inverse(v: &[f64], signs: &[f64]) -> Result<Vec<f64>> {
    check(v, signs)?;
    let mut out = v.to_vec();
    fwht_in_place(&mut out);
    let norm = (v.len() as f64).sqrt().recip();
    for (x, s) in out.iter_mut().zip(signs) {
        *x *= norm * s;
    }
    Ok(out)
}
