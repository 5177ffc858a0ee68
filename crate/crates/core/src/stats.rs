//! Small descriptive-statistics helpers shared by generators and scorers.

use serde::{Deserialize, Serialize};

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator). `0` for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Population variance. `0` for an empty slice.
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

pub fn first_differences(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Percentile of already-sorted data using linear interpolation between the
/// closest ranks: position `p/100 * (n - 1)`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, p)
}

/// Five-number summary with linear-interpolation quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesStats {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        SeriesStats {
            median: percentile_sorted(&v, 50.0),
            q25: percentile_sorted(&v, 25.0),
            q75: percentile_sorted(&v, 75.0),
            min: v[0],
            max: v[v.len() - 1],
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent percentile oracle: the "linear" definition written as a
    /// weighted average of the order statistics bracketing rank 1 + p(n-1).
    fn rank_oracle(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = 1.0 + p / 100.0 * (v.len() as f64 - 1.0);
        let k = rank.trunc() as usize;
        let d = rank - k as f64;
        if k >= v.len() {
            return v[v.len() - 1];
        }
        v[k - 1] * (1.0 - d) + v[k] * d
    }

    #[test]
    fn quartiles_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = SeriesStats::of(&v);
        assert!((s.median - 50.5).abs() < 1e-12);
        assert!((s.q25 - 25.75).abs() < 1e-12);
        assert!((s.q75 - 75.25).abs() < 1e-12);
        for p in [0.0, 10.0, 25.0, 33.3, 50.0, 75.0, 90.0, 100.0] {
            assert!((percentile(&v, p) - rank_oracle(&v, p)).abs() < 1e-9);
        }
    }

    #[test]
    fn std_and_variance() {
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((variance(&v) - 4.0).abs() < 1e-12);
        assert!((std_dev(&v) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(std_dev(&[1.0]), 0.0);
    }
}
