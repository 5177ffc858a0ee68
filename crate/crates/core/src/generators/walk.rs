use rand_distr::{Distribution, StandardNormal};

use super::GenError;
use crate::seed::Seed;

/// Standard random walk: cumulative sums of i.i.d. N(0, 1) increments, so the
/// first element is already the first increment.
pub fn gen_random_walk(seed: Seed, n: usize) -> Result<Vec<f64>, GenError> {
    if n < 2 {
        return Err(GenError::TooShort { n, min: 2 });
    }
    let mut rng = seed.rng();
    let mut acc = 0.0;
    Ok((0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            acc += x;
            acc
        })
        .collect())
}

/// Geometric walk `s0 * exp((mu - sigma^2 / 2) t + sigma W_t)` for
/// `t = 0..n-1`, with `W_0 = 0` so the series starts at `s0`.
pub fn gen_geometric_walk(seed: Seed, n: usize, s0: f64, mu: f64, sigma: f64) -> Result<Vec<f64>, GenError> {
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(GenError::InvalidParam(format!("s0 must be positive, got {s0}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(GenError::InvalidParam(format!("need finite mu and sigma >= 0, got mu={mu} sigma={sigma}")));
    }
    let w = gen_random_walk(seed, n)?;
    let drift = mu - 0.5 * sigma * sigma;
    Ok((0..n)
        .map(|t| {
            let wt = if t == 0 { 0.0 } else { w[t - 1] };
            s0 * (drift * t as f64 + sigma * wt).exp()
        })
        .collect())
}

/// Window length used by [`smooth`] for a series of `n` points.
pub fn smoothing_window(factor: f64, n: usize) -> usize {
    ((factor * 0.2 * n as f64).round() as usize).max(1)
}

/// Centered moving average. Windows are truncated at the edges rather than
/// padded; output has the same length as the input.
pub fn smooth(values: &[f64], factor: f64) -> Result<Vec<f64>, GenError> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(GenError::InvalidParam(format!("smoothing factor must be in (0, 1), got {factor}")));
    }
    Ok(moving_average(values, smoothing_window(factor, values.len())))
}

pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let w = window.max(1);
    let left = (w - 1) / 2;
    let right = w - 1 - left;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(left);
            let b = (i + right).min(n - 1);
            (prefix[b + 1] - prefix[a]) / (b + 1 - a) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{first_differences, mean, std_dev};

    #[test]
    fn random_walk_increments_are_standard_normal() {
        let w = gen_random_walk(Seed(11), 1000).unwrap();
        let mut inc = vec![w[0]];
        inc.extend(first_differences(&w));
        assert!(mean(&inc).abs() < 4.0 / 1000f64.sqrt());
        assert!((std_dev(&inc) - 1.0).abs() < 0.15);
        assert_eq!(w, gen_random_walk(Seed(11), 1000).unwrap());
        assert!(matches!(gen_random_walk(Seed(1), 1), Err(GenError::TooShort { .. })));
    }

    #[test]
    fn geometric_walk_deterministic_limit() {
        let s = gen_geometric_walk(Seed(3), 3, 1.0, 0.01, 0.0).unwrap();
        let expect = [1.0, 0.01f64.exp(), 0.02f64.exp()];
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(gen_geometric_walk(Seed(3), 3, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn geometric_walk_log_increment_mean() {
        let sigma = 0.2;
        let n = 10_000;
        let s = gen_geometric_walk(Seed(5), n, 10.0, 0.0, sigma).unwrap();
        assert!(s.iter().all(|v| *v > 0.0));
        let logs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        let d = first_differences(&logs);
        let m = mean(&d);
        assert!((m + sigma * sigma / 2.0).abs() < 4.0 * sigma / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth(&[3.0; 50], 0.5).unwrap(), vec![3.0; 50]);
        let v = [1.0, 5.0, 2.0, 8.0];
        assert_eq!(smooth(&v, 0.01).unwrap(), v.to_vec());
        let s = moving_average(&[0.0, 10.0, 0.0], 3);
        assert!((s[0] - 5.0).abs() < 1e-12);
        assert!((s[1] - 10.0 / 3.0).abs() < 1e-12);
        assert!((s[2] - 5.0).abs() < 1e-12);
        assert!(smooth(&v, 1.0).is_err());
        assert!(smooth(&v, 0.0).is_err());
    }

    #[test]
    fn even_window_is_truncated_not_padded() {
        // window 2 averages the point with its right neighbour.
        let s = moving_average(&[0.0, 2.0, 4.0], 2);
        assert_eq!(s, vec![1.0, 3.0, 4.0]);
    }
}
