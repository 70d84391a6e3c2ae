//! Subset-sum representation points and nearest-point lookup.

use std::cmp::Ordering;

use crate::types::CoefficientSet;

/// All `2^K` subset sums of a coefficient set, sorted by value then mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSums {
    values: Vec<f64>,
    masks: Vec<u32>,
}

impl SubsetSums {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.values.iter().copied().zip(self.masks.iter().copied())
    }

    /// Largest gap between adjacent representation points.
    pub fn max_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Writes `value[m] = sum of coeffs[i] over set bits i of m` into `out`.
///
/// Each value is accumulated from zero in ascending bit order, so it matches
/// [`CoefficientSet::subset_sum`] bit for bit.
pub(crate) fn fill_subset_values(coeffs: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(0.0);
    for &c in coeffs {
        let len = out.len();
        for m in 0..len {
            let v = out[m] + c;
            out.push(v);
        }
    }
}

fn cmp_value(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

pub fn subset_sums(cs: &CoefficientSet) -> SubsetSums {
    let mut values = Vec::with_capacity(1 << cs.k());
    fill_subset_values(cs.coeffs(), &mut values);
    let mut pairs: Vec<(f64, u32)> = values
        .into_iter()
        .enumerate()
        .map(|(m, v)| (v, m as u32))
        .collect();
    pairs.sort_unstable_by(|a, b| cmp_value(a.0, b.0).then(a.1.cmp(&b.1)));
    let (values, masks) = pairs.into_iter().unzip();
    SubsetSums { values, masks }
}

/// Closest representation point to `x`.
///
/// Distance ties go to the smaller value; among equal values the smaller mask
/// wins (it sorts first).
pub fn nearest_point(sums: &SubsetSums, x: f64) -> (f64, u32) {
    let idx = nearest_index(&sums.values, x);
    (sums.values[idx], sums.masks[idx])
}

fn nearest_index(values: &[f64], x: f64) -> usize {
    debug_assert!(!values.is_empty());
    let hi = values.partition_point(|&v| v < x);
    if hi == values.len() {
        return run_start(values, hi - 1);
    }
    if hi == 0 {
        return 0;
    }
    let lo = run_start(values, hi - 1);
    if values[hi] - x < x - values[lo] {
        hi
    } else {
        lo
    }
}

/// First index holding the same value as `values[i]`.
fn run_start(values: &[f64], i: usize) -> usize {
    let v = values[i];
    values[..i].partition_point(|&u| u < v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_scan(sums: &SubsetSums, x: f64) -> (f64, u32) {
        let mut best = (f64::INFINITY, f64::INFINITY, u32::MAX);
        for (v, m) in sums.iter() {
            let d = (x - v).abs();
            let better = d < best.0
                || (d == best.0 && v < best.1)
                || (d == best.0 && v == best.1 && m < best.2);
            if better {
                best = (d, v, m);
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn three_coefficient_sums() {
        let cs = CoefficientSet::geometric(0.5, 1.0, 0.0, 3).unwrap();
        let sums = subset_sums(&cs);
        assert_eq!(sums.values(), &[0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75]);
        assert_eq!(
            sums.masks(),
            &[0b000, 0b100, 0b010, 0b110, 0b001, 0b101, 0b011, 0b111]
        );
    }

    #[test]
    fn single_coefficient() {
        let cs = CoefficientSet::geometric(1.0, -2.5, 0.0, 1).unwrap();
        let sums = subset_sums(&cs);
        assert_eq!(sums.values(), &[-2.5, 0.0]);
        assert_eq!(sums.masks(), &[1, 0]);
    }

    #[test]
    fn nearest_examples() {
        let cs = CoefficientSet::geometric(0.5, 1.0, 0.0, 3).unwrap();
        let sums = subset_sums(&cs);
        assert_eq!(nearest_point(&sums, 0.8), (0.75, 0b110));
        assert_eq!(nearest_point(&sums, -3.0), (0.0, 0));
        assert_eq!(nearest_point(&sums, 9.0), (1.75, 0b111));
        assert_eq!(nearest_point(&sums, 1.25), (1.25, 0b101));
        // midpoint between 0.25 and 0.5 goes to the smaller value
        assert_eq!(nearest_point(&sums, 0.375), (0.25, 0b100));
    }

    #[test]
    fn duplicate_values_pick_smallest_mask() {
        // r = -1 gives coefficients {1, -1, 1, -1}; many masks collide
        let cs = CoefficientSet::geometric(-1.0, 1.0, 0.0, 4).unwrap();
        let sums = subset_sums(&cs);
        for x in [-2.2, -1.0, -0.4, 0.0, 0.5, 0.6, 1.0, 1.5, 3.0] {
            assert_eq!(nearest_point(&sums, x), linear_scan(&sums, x), "x = {x}");
        }
        assert_eq!(nearest_point(&sums, 0.0), (0.0, 0));
        assert_eq!(nearest_point(&sums, 1.0), (1.0, 0b0001));
        assert_eq!(nearest_point(&sums, 2.0), (2.0, 0b0101));
    }

    proptest! {
        #[test]
        fn values_match_mask_recomputation(
            r in -1.0f64..1.0, s in -4.0f64..4.0, b in -1.0f64..1.0, k in 1usize..=8
        ) {
            let cs = CoefficientSet::geometric(r, s, b, k).unwrap();
            let sums = subset_sums(&cs);
            prop_assert_eq!(sums.len(), 1 << k);
            let mut seen = vec![false; 1 << k];
            for (v, m) in sums.iter() {
                prop_assert!(!seen[m as usize]);
                seen[m as usize] = true;
                let direct: f64 = (0..k).filter(|i| m >> i & 1 == 1).map(|i| cs.coeffs()[i]).sum();
                prop_assert_eq!(v, direct);
            }
            prop_assert!(sums.values().windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn nearest_matches_linear_scan(
            r in prop::sample::select(vec![-1.0, -0.5, 0.5, 1.0, -0.75, 0.8]),
            s in -4.0f64..4.0, b in -1.0f64..1.0, k in 1usize..=8, x in -10.0f64..10.0
        ) {
            let cs = CoefficientSet::geometric(r, s, b, k).unwrap();
            let sums = subset_sums(&cs);
            prop_assert_eq!(nearest_point(&sums, x), linear_scan(&sums, x));
        }
    }
}
