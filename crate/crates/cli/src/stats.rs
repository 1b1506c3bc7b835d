//! Six-number summaries of campaign results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// `(min, max, mean, median, mode, sd)` of a sample.
///
/// The standard deviation uses the `n - 1` denominator (0 for a single
/// value); the median of an even-sized sample averages the middle pair; ties
/// for the mode go to the smallest value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsTuple {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
    pub sd: f64,
}

impl StatsTuple {
    /// Summary of integer counts; the mode is an observed value.
    pub fn of_counts(values: &[usize]) -> Option<Self> {
        let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        Self::with_mode(&as_f64, mode_of(values.iter().copied()).map(|v| v as f64))
    }

    /// Summary of wall times; the mode is taken over values rounded to four decimals.
    pub fn of_times(values: &[f64]) -> Option<Self> {
        let buckets = values.iter().map(|t| (t * 1e4).round() as i64);
        Self::with_mode(values, mode_of(buckets).map(|b| b as f64 / 1e4))
    }

    fn with_mode(values: &[f64], mode: Option<f64>) -> Option<Self> {
        let mode = mode?;
        let n = values.len();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { min: sorted[0], max: sorted[n - 1], mean, median, mode, sd })
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.min, self.max, self.mean, self.median, self.mode, self.sd]
    }
}

fn mode_of<T: Ord + Copy>(values: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    // ascending iteration: the first maximum is the smallest value
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let s = StatsTuple::of_counts(&[3]).unwrap();
        assert_eq!(s.as_array(), [3.0, 3.0, 3.0, 3.0, 3.0, 0.0]);
    }

    #[test]
    fn small_sample() {
        let s = StatsTuple::of_counts(&[4, 1, 1, 2, 2]).unwrap();
        assert_eq!((s.min, s.max, s.median, s.mode), (1.0, 4.0, 2.0, 1.0));
        assert!((s.mean - 2.0).abs() < 1e-15);
        assert!((s.sd - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(StatsTuple::of_counts(&[1, 2, 3, 4]).unwrap().median, 2.5);
        assert!(StatsTuple::of_counts(&[]).is_none());
    }

    #[test]
    fn time_mode_uses_rounding() {
        let s = StatsTuple::of_times(&[0.00012, 0.00014, 0.0003]).unwrap();
        assert_eq!(s.mode, 0.0001);
    }
}
