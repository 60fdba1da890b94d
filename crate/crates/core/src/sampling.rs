//! Seeded sampling of chart boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fraction of each side kept clear of the chart boundary.
pub const MARGIN: f64 = 0.01;

/// `count` points uniform in `chart` shrunk by [`MARGIN`] of its width on every side.
pub fn sample_box(chart: &[(f64, f64)], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if chart.is_empty()
        || chart
            .iter()
            .any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(Error::config("chart", "empty or unbounded chart box"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            chart
                .iter()
                .map(|&(lo, hi)| {
                    let pad = MARGIN * (hi - lo);
                    rng.gen_range(lo + pad..hi - pad)
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_inside() {
        let chart = [(-1.0, 1.0), (0.3, 2.8)];
        let a = sample_box(&chart, 1, 42).unwrap();
        assert_eq!(a, sample_box(&chart, 1, 42).unwrap());
        for p in sample_box(&chart, 500, 7).unwrap() {
            for (x, (lo, hi)) in p.iter().zip(chart) {
                let pad = MARGIN * (hi - lo);
                assert!(*x >= lo + pad && *x < hi - pad);
            }
        }
        assert_ne!(sample_box(&chart, 1, 1).unwrap(), sample_box(&chart, 1, 2).unwrap());
        assert!(sample_box(&[], 3, 1).is_err());
    }
}
