use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution as _, Exp, LogNormal, Normal, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::geometry::{merge_intervals, Interval};
use crate::seed::{Seed, SeedRng};
use crate::stats::percentile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    Normal,
    Exponential,
    Poisson,
    Multimodal,
    SkewLeft,
    SkewRight,
}

impl Distribution {
    pub const ALL: [Distribution; 7] = [
        Distribution::Uniform,
        Distribution::Normal,
        Distribution::Exponential,
        Distribution::Poisson,
        Distribution::Multimodal,
        Distribution::SkewLeft,
        Distribution::SkewRight,
    ];

    /// Upper-case name used in prompts and answers.
    pub fn label(&self) -> &'static str {
        match self {
            Distribution::Uniform => "UNIFORM",
            Distribution::Normal => "NORMAL",
            Distribution::Exponential => "EXPONENTIAL",
            Distribution::Poisson => "POISSON",
            Distribution::Multimodal => "MULTIMODAL",
            Distribution::SkewLeft => "SKEW_LEFT",
            Distribution::SkewRight => "SKEW_RIGHT",
        }
    }

    /// Case-insensitive; accepts spaces or dashes in place of underscores.
    pub fn from_label(s: &str) -> Option<Distribution> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_uppercase() })
            .collect();
        Distribution::ALL.into_iter().find(|d| d.label() == norm)
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "Uniform",
            Distribution::Normal => "Normal",
            Distribution::Exponential => "Exponential",
            Distribution::Poisson => "Poisson",
            Distribution::Multimodal => "Multimodal",
            Distribution::SkewLeft => "Skew Left",
            Distribution::SkewRight => "Skew Right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistAnomalyKind {
    ExtraBins,
    RemovedBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistAnomaly {
    pub kind: HistAnomalyKind,
    pub range: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramMetadata {
    pub distribution: Distribution,
    pub dist_params: BTreeMap<String, f64>,
    /// The values actually plotted (after any anomaly was applied).
    pub values: Vec<f64>,
    pub bin_edges: Vec<f64>,
    pub bin_counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<HistAnomaly>,
    pub below_x_threshold: f64,
}

impl HistogramMetadata {
    pub fn n_bins(&self) -> usize {
        self.bin_counts.len()
    }

    pub fn bin(&self, i: usize) -> Interval {
        Interval::new(self.bin_edges[i], self.bin_edges[i + 1]).expect("edges increase")
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// Width of the first bin; all bins share it.
    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn x_extent(&self) -> Interval {
        Interval::new(self.bin_edges[0], *self.bin_edges.last().unwrap()).expect("edges increase")
    }

    fn bins_with_count(&self, target: u64) -> Vec<Interval> {
        let bins: Vec<Interval> = (0..self.n_bins())
            .filter(|&i| self.bin_counts[i] == target)
            .map(|i| self.bin(i))
            .collect();
        merge_intervals(&bins)
    }

    /// Union of the bins holding the smallest count, adjacent bins merged.
    pub fn min_bins(&self) -> Vec<Interval> {
        self.bins_with_count(*self.bin_counts.iter().min().unwrap())
    }

    pub fn max_bins(&self) -> Vec<Interval> {
        self.bins_with_count(*self.bin_counts.iter().max().unwrap())
    }

    /// Percentage of plotted values strictly below `threshold`.
    pub fn percent_below(&self, threshold: f64) -> f64 {
        100.0 * self.values.iter().filter(|&&v| v < threshold).count() as f64 / self.values.len() as f64
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.bin_edges.len() != self.bin_counts.len() + 1 || self.bin_counts.is_empty() {
            return Err(GenError::Invariant("need one more edge than counts".into()));
        }
        if self.bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(GenError::Invariant("bin edges must strictly increase".into()));
        }
        if bin_values(&self.values, &self.bin_edges) != self.bin_counts {
            return Err(GenError::Invariant("counts do not match values".into()));
        }
        if let Some(a) = self.anomaly {
            let ext = self.x_extent();
            if a.range.lo() < ext.lo() || a.range.hi() > ext.hi() {
                return Err(GenError::Invariant("anomaly range outside plotted extent".into()));
            }
        }
        Ok(())
    }
}

/// Maximal runs `(first, last)` of bins, `last > first`, whose counts never
/// decrease and rise at least once.
pub fn increasing_runs(counts: &[u64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=counts.len() {
        if i == counts.len() || counts[i] < counts[i - 1] {
            let end = i - 1;
            if end > start && counts[end] > counts[start] {
                out.push((start, end));
            }
            start = i;
        }
    }
    out
}

pub fn decreasing_runs(counts: &[u64]) -> Vec<(usize, usize)> {
    let rev: Vec<u64> = counts.iter().rev().copied().collect();
    let n = counts.len();
    let mut runs: Vec<(usize, usize)> = increasing_runs(&rev).into_iter().map(|(a, b)| (n - 1 - b, n - 1 - a)).collect();
    runs.sort_unstable();
    runs
}

/// Histogram counts: bins are half-open except the last, which is closed.
/// Values outside the edges are ignored.
pub fn bin_values(values: &[f64], edges: &[f64]) -> Vec<u64> {
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let last = edges[nb];
    for &v in values {
        if v < edges[0] || v > last {
            continue;
        }
        let i = if v == last { nb - 1 } else { edges.partition_point(|&e| e <= v) - 1 };
        counts[i] += 1;
    }
    counts
}

fn linspace(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * w }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistogramConfig {
    pub n_values: (usize, usize),
    pub bin_count: (usize, usize),
    pub anomaly_probability: f64,
    pub distributions: Vec<Distribution>,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            n_values: (500, 2000),
            bin_count: (10, 50),
            anomaly_probability: 0.3,
            distributions: Distribution::ALL.to_vec(),
        }
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64, GenError> {
    params
        .get(key)
        .copied()
        .filter(|v| v.is_finite())
        .ok_or_else(|| GenError::InvalidParam(format!("missing or non-finite parameter '{key}'")))
}

fn positive(params: &BTreeMap<String, f64>, key: &str) -> Result<f64, GenError> {
    let v = param(params, key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(GenError::InvalidParam(format!("'{key}' must be positive, got {v}")))
    }
}

/// Random but realistic parameters for `dist`.
pub fn random_params(dist: Distribution, rng: &mut SeedRng) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        p.insert(k.to_string(), v);
    };
    match dist {
        Distribution::Uniform => {
            let low = rng.random_range(-50.0..50.0);
            put("low", low);
            put("high", low + rng.random_range(10.0..100.0));
        }
        Distribution::Normal => {
            put("mean", rng.random_range(-50.0..50.0));
            put("std", rng.random_range(1.0..20.0));
        }
        Distribution::Exponential => {
            put("loc", rng.random_range(-20.0..20.0));
            put("scale", rng.random_range(1.0..20.0));
        }
        Distribution::Poisson => put("lambda", rng.random_range(2.0..30.0)),
        Distribution::Multimodal => {
            let modes = rng.random_range(2..=3usize);
            let std = rng.random_range(1.0..5.0);
            let gap = std * rng.random_range(5.0..8.0);
            let mut mean = rng.random_range(-50.0..0.0);
            put("modes", modes as f64);
            for i in 0..modes {
                put(&format!("mean_{i}"), mean);
                put(&format!("std_{i}"), std * rng.random_range(0.8..1.2));
                mean += gap;
            }
        }
        Distribution::SkewLeft | Distribution::SkewRight => {
            put("loc", rng.random_range(-20.0..20.0));
            put("scale", rng.random_range(2.0..15.0));
            put("shape", rng.random_range(0.5..0.9));
        }
    }
    p
}

fn sample_values(
    dist: Distribution,
    params: &BTreeMap<String, f64>,
    n: usize,
    rng: &mut SeedRng,
) -> Result<Vec<f64>, GenError> {
    let bad = |e: &dyn std::fmt::Display| GenError::InvalidParam(e.to_string());
    Ok(match dist {
        Distribution::Uniform => {
            let (lo, hi) = (param(params, "low")?, param(params, "high")?);
            if !(lo < hi) {
                return Err(GenError::InvalidParam("uniform needs low < high".into()));
            }
            let u = Uniform::new(lo, hi).map_err(|e| bad(&e))?;
            (0..n).map(|_| u.sample(rng)).collect()
        }
        Distribution::Normal => {
            let d = Normal::new(param(params, "mean")?, positive(params, "std")?).map_err(|e| bad(&e))?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
        Distribution::Exponential => {
            let loc = param(params, "loc")?;
            let d = Exp::new(1.0 / positive(params, "scale")?).map_err(|e| bad(&e))?;
            (0..n).map(|_| loc + d.sample(rng)).collect()
        }
        Distribution::Poisson => {
            let d = Poisson::new(positive(params, "lambda")?).map_err(|e| bad(&e))?;
            (0..n).map(|_| d.sample(rng).round()).collect()
        }
        Distribution::Multimodal => {
            let modes = positive(params, "modes")? as usize;
            let comps = (0..modes)
                .map(|i| Normal::new(param(params, &format!("mean_{i}"))?, positive(params, &format!("std_{i}"))?).map_err(|e| bad(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            (0..n).map(|_| comps[rng.random_range(0..modes)].sample(rng)).collect()
        }
        Distribution::SkewLeft | Distribution::SkewRight => {
            let loc = param(params, "loc")?;
            let scale = positive(params, "scale")?;
            let d = LogNormal::new(0.0, positive(params, "shape")?).map_err(|e| bad(&e))?;
            let sign = if dist == Distribution::SkewRight { 1.0 } else { -1.0 };
            (0..n).map(|_| loc + sign * scale * d.sample(rng)).collect()
        }
    })
}

/// Samples values, bins them, optionally injects a bin anomaly and picks the
/// threshold for the below-x question.
pub fn gen_histogram(
    seed: Seed,
    distribution: Distribution,
    params: &BTreeMap<String, f64>,
    cfg: &HistogramConfig,
) -> Result<HistogramMetadata, GenError> {
    let mut rng = seed.child("histogram.draws").rng();
    let n = rng.random_range(cfg.n_values.0..=cfg.n_values.1);
    let mut values = sample_values(distribution, params, n, &mut seed.child("histogram.values").rng())?;

    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut edges = if distribution == Distribution::Poisson {
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let bins = (hi - lo) as usize + 1;
        (0..=bins).map(|i| lo - 0.5 + i as f64).collect::<Vec<_>>()
    } else {
        let bins = rng.random_range(cfg.bin_count.0..=cfg.bin_count.1);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        linspace(lo, hi, bins)
    };
    let mut counts = bin_values(&values, &edges);
    let width = edges[1] - edges[0];

    let mut anomaly = None;
    if rng.random_bool(cfg.anomaly_probability.clamp(0.0, 1.0)) {
        let kind = if rng.random_bool(0.5) {
            HistAnomalyKind::ExtraBins
        } else {
            HistAnomalyKind::RemovedBins
        };
        match kind {
            HistAnomalyKind::ExtraBins => {
                let gap = rng.random_range(2..=4usize);
                let span = rng.random_range(1..=2usize);
                let above = rng.random_bool(0.5);
                let extra = rng.random_range(5..=30usize);
                let nb = edges.len() - 1;
                if above {
                    for k in 1..=gap + span {
                        edges.push(edges[nb] + k as f64 * width);
                    }
                } else {
                    let mut pre: Vec<f64> = (1..=gap + span).rev().map(|k| edges[0] - k as f64 * width).collect();
                    pre.extend_from_slice(&edges);
                    edges = pre;
                }
                let first = if above { nb + gap } else { 0 };
                for _ in 0..extra {
                    let b = first + rng.random_range(0..span);
                    values.push(edges[b] + width * rng.random_range(0.1..0.9));
                }
                counts = bin_values(&values, &edges);
                let used: Vec<usize> = (first..first + span).filter(|&b| counts[b] > 0).collect();
                let range = Interval::new(edges[used[0]], edges[*used.last().unwrap() + 1]).expect("edges increase");
                anomaly = Some(HistAnomaly { kind, range });
            }
            HistAnomalyKind::RemovedBins => {
                let nb = counts.len();
                let span = rng.random_range(1..=3usize);
                let starts: Vec<usize> = (1..nb.saturating_sub(span))
                    .filter(|&s| counts[s..s + span].iter().all(|&c| c > 0))
                    .collect();
                if !starts.is_empty() {
                    let s = starts[rng.random_range(0..starts.len())];
                    let cut = Interval::new(edges[s], edges[s + span]).expect("edges increase");
                    let last = *edges.last().unwrap();
                    values.retain(|&v| !(v >= cut.lo() && (v < cut.hi() || (v == last && cut.hi() == last))));
                    counts = bin_values(&values, &edges);
                    anomaly = Some(HistAnomaly { kind, range: cut });
                }
            }
        }
    }

    let p = rng.random_range(10.0..=90.0);
    let threshold = if distribution == Distribution::Poisson {
        // halfway between integers so "below" is unambiguous
        percentile(&values, p).floor() + 0.5
    } else {
        (percentile(&values, p) * 100.0).round() / 100.0
    };
    let meta = HistogramMetadata {
        distribution,
        dist_params: params.clone(),
        values,
        bin_edges: edges,
        bin_counts: counts,
        anomaly,
        below_x_threshold: threshold,
    };
    meta.validate()?;
    Ok(meta)
}

/// Draws the distribution and its parameters, then calls [`gen_histogram`].
pub fn gen_histogram_sample(seed: Seed, cfg: &HistogramConfig) -> Result<HistogramMetadata, GenError> {
    if cfg.distributions.is_empty() {
        return Err(GenError::InvalidParam("no distributions enabled".into()));
    }
    let mut rng = seed.child("histogram.params").rng();
    let dist = cfg.distributions[rng.random_range(0..cfg.distributions.len())];
    let params = random_params(dist, &mut rng);
    gen_histogram(seed, dist, &params, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_anomaly(n: usize) -> HistogramConfig {
        HistogramConfig {
            n_values: (n, n),
            anomaly_probability: 0.0,
            ..HistogramConfig::default()
        }
    }

    #[test]
    fn uniform_bins_within_binomial_bound() {
        let params = BTreeMap::from([("low".to_string(), 0.0), ("high".to_string(), 1.0)]);
        for s in 0..5 {
            let h = gen_histogram(Seed(s), Distribution::Uniform, &params, &no_anomaly(2000)).unwrap();
            let n = 2000.0;
            let bins = h.n_bins() as f64;
            let p = 1.0 / bins;
            let sigma = (n * p * (1.0 - p)).sqrt();
            assert_eq!(h.bin_counts.iter().sum::<u64>(), 2000);
            for &c in &h.bin_counts {
                assert!((c as f64 - n * p).abs() <= 5.0 * sigma, "{c} vs {}", n * p);
            }
        }
    }

    #[test]
    fn anomalies_respect_their_contracts() {
        let cfg = HistogramConfig {
            anomaly_probability: 1.0,
            ..HistogramConfig::default()
        };
        let mut kinds = std::collections::HashSet::new();
        for s in 0..60 {
            let h = gen_histogram_sample(Seed(s), &cfg).unwrap();
            h.validate().unwrap();
            let Some(a) = h.anomaly else { continue };
            kinds.insert(a.kind);
            match a.kind {
                HistAnomalyKind::ExtraBins => {
                    // regular values are those outside the anomaly range
                    let regular: Vec<f64> = h.values.iter().copied().filter(|v| !a.range.contains(*v)).collect();
                    let lo = regular.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = regular.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    assert!(a.range.lo() > hi || a.range.hi() < lo);
                    assert!(a.range.lo() - hi >= 2.0 * h.bin_width() - 1e-9 || lo - a.range.hi() >= 2.0 * h.bin_width() - 1e-9);
                }
                HistAnomalyKind::RemovedBins => {
                    assert!(h.values.iter().all(|v| !(a.range.lo() <= *v && *v < a.range.hi())));
                    for i in 0..h.n_bins() {
                        if a.range.contains(h.bin_center(i)) {
                            assert_eq!(h.bin_counts[i], 0);
                        }
                    }
                }
            }
        }
        assert_eq!(kinds.len(), 2);
    }

    #[test]
    fn counts_sum_to_values() {
        for s in 0..30 {
            let h = gen_histogram_sample(Seed(s), &HistogramConfig::default()).unwrap();
            assert_eq!(h.bin_counts.iter().sum::<u64>() as usize, h.values.len());
            if h.anomaly.is_none() {
                assert!((500..=2000).contains(&h.values.len()));
            }
            let pct = h.percent_below(h.below_x_threshold);
            assert!(pct > 0.0 && pct < 100.0, "{pct}");
        }
    }

    #[test]
    fn poisson_uses_unit_bins_on_integers() {
        let params = BTreeMap::from([("lambda".to_string(), 6.0)]);
        let h = gen_histogram(Seed(2), Distribution::Poisson, &params, &no_anomaly(1000)).unwrap();
        assert!((h.bin_width() - 1.0).abs() < 1e-12);
        for i in 0..h.n_bins() {
            assert_eq!(h.bin_center(i).fract(), 0.0);
        }
    }

    #[test]
    fn monotone_runs() {
        let c = [5, 1, 1, 9, 9, 3, 2, 2, 4];
        assert_eq!(increasing_runs(&c), vec![(1, 4), (6, 8)]);
        assert_eq!(decreasing_runs(&c), vec![(0, 2), (3, 7)]);
        assert!(increasing_runs(&[3, 3, 3]).is_empty());
    }

    #[test]
    fn labels_round_trip() {
        for d in Distribution::ALL {
            assert_eq!(Distribution::from_label(d.label()), Some(d));
        }
        assert_eq!(Distribution::from_label("skew left"), Some(Distribution::SkewLeft));
        assert_eq!(Distribution::from_label("gaussian"), None);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = BTreeMap::from([("mean".to_string(), 0.0), ("std".to_string(), -1.0)]);
        assert!(gen_histogram(Seed(1), Distribution::Normal, &bad, &HistogramConfig::default()).is_err());
        assert!(gen_histogram(Seed(1), Distribution::Poisson, &BTreeMap::new(), &HistogramConfig::default()).is_err());
    }
}
