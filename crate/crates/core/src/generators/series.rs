use rand::Rng;
use serde::{Deserialize, Serialize};

use super::walk::{gen_geometric_walk, gen_random_walk, smooth};
use super::GenError;
use crate::geometry::Interval;
use crate::seed::Seed;
use crate::stats::{first_differences, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    RandomWalk,
    GeometricWalk,
}

impl WalkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WalkKind::RandomWalk => "random_walk",
            WalkKind::GeometricWalk => "geometric_walk",
        }
    }
}

/// Affine re-ranging `x' = scale_x x + dx`, `y' = scale_y y + dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeTransform {
    pub dx: f64,
    pub dy: f64,
    pub scale_x: f64,
    pub scale_y: f64,
}

impl Default for RangeTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RangeTransform {
    pub const IDENTITY: RangeTransform = RangeTransform {
        dx: 0.0,
        dy: 0.0,
        scale_x: 1.0,
        scale_y: 1.0,
    };

    pub fn map_x(&self, x: f64) -> f64 {
        self.scale_x * x + self.dx
    }

    pub fn map_y(&self, y: f64) -> f64 {
        self.scale_y * y + self.dy
    }

    /// Composition `self ∘ inner` (apply `inner` first).
    pub fn compose(&self, inner: &RangeTransform) -> RangeTransform {
        RangeTransform {
            scale_x: self.scale_x * inner.scale_x,
            dx: self.scale_x * inner.dx + self.dx,
            scale_y: self.scale_y * inner.scale_y,
            dy: self.scale_y * inner.dy + self.dy,
        }
    }

    /// Maps the data and every piece of x/y ground truth of `series`.
    pub fn apply(&self, series: &SeriesMetadata) -> Result<SeriesMetadata, GenError> {
        if !(self.scale_x > 0.0 && self.scale_y > 0.0) {
            return Err(GenError::InvalidParam("range transform scales must be positive".into()));
        }
        let mut out = series.clone();
        out.x_values = series.x_values.iter().map(|&x| self.map_x(x)).collect();
        out.y_values = series.y_values.iter().map(|&y| self.map_y(y)).collect();
        out.anomalies_x = series.anomalies_x.iter().map(|&x| self.map_x(x)).collect();
        out.missing = series.missing.map(|m| m.affine(self.scale_x, self.dx));
        out.transform = self.compose(&series.transform);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub kind: WalkKind,
    /// Length before any points were removed.
    pub n_points: usize,
    pub drift: f64,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    pub smoothing_factor: f64,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub anomalies_x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<Interval>,
    pub transform: RangeTransform,
}

impl SeriesMetadata {
    /// A series from explicit samples with no anomalies, gap or transform.
    pub fn from_points(x_values: Vec<f64>, y_values: Vec<f64>) -> Result<Self, GenError> {
        let s = SeriesMetadata {
            kind: WalkKind::RandomWalk,
            n_points: x_values.len(),
            drift: 0.0,
            variance: 0.0,
            s0: None,
            smoothing_factor: 0.0,
            x_values,
            y_values,
            anomalies_x: Vec::new(),
            missing: None,
            transform: RangeTransform::IDENTITY,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn x_domain(&self) -> Interval {
        Interval::new(self.x_values[0], *self.x_values.last().unwrap()).expect("x values are increasing")
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
    }

    pub fn argmin(&self) -> usize {
        argext(&self.y_values, |a, b| a < b)
    }

    pub fn argmax(&self) -> usize {
        argext(&self.y_values, |a, b| a > b)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.x_values.len() != self.y_values.len() {
            return Err(GenError::Invariant("x and y lengths differ".into()));
        }
        if self.x_values.len() < 2 {
            return Err(GenError::TooShort { n: self.x_values.len(), min: 2 });
        }
        if self.x_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(GenError::Invariant("x values must be strictly increasing".into()));
        }
        if self.y_values.iter().any(|y| !y.is_finite()) {
            return Err(GenError::Invariant("non-finite y value".into()));
        }
        if let Some(m) = self.missing {
            if self.x_values.iter().any(|&x| m.lo() < x && x < m.hi()) {
                return Err(GenError::Invariant("retained point inside missing interval".into()));
            }
        }
        if self.anomalies_x.iter().any(|a| !self.x_values.contains(a)) {
            return Err(GenError::Invariant("anomaly x not among x values".into()));
        }
        Ok(())
    }
}

fn argext(v: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &y) in v.iter().enumerate().skip(1) {
        if better(y, v[best]) {
            best = i;
        }
    }
    best
}

/// Displaces 0-3 interior points by 4-8 standard deviations of the series'
/// first differences and records their x positions.
pub fn inject_anomalies(seed: Seed, series: &SeriesMetadata) -> Result<SeriesMetadata, GenError> {
    inject_anomalies_with(seed, series, &AnomalyOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyOptions {
    pub max_count: usize,
    pub magnitude: (f64, f64),
    /// Minimum index distance between two anomalies.
    pub min_spacing: usize,
}

impl Default for AnomalyOptions {
    fn default() -> Self {
        AnomalyOptions {
            max_count: 3,
            magnitude: (4.0, 8.0),
            min_spacing: 3,
        }
    }
}

pub fn inject_anomalies_with(seed: Seed, series: &SeriesMetadata, opts: &AnomalyOptions) -> Result<SeriesMetadata, GenError> {
    let n = series.y_values.len();
    if n < 20 {
        return Err(GenError::TooShort { n, min: 20 });
    }
    let mut rng = seed.rng();
    let count = rng.random_range(0..=opts.max_count);
    let mut out = series.clone();
    if count == 0 {
        return Ok(out);
    }
    let scale = std_dev(&first_differences(&series.y_values)).max(1e-12);

    // Interior positions, pairwise at least `min_spacing` apart, not already anomalous.
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    let mut attempts = 0;
    while chosen.len() < count && attempts < 10_000 {
        attempts += 1;
        let i = rng.random_range(2..n - 2);
        if series.anomalies_x.contains(&series.x_values[i]) {
            continue;
        }
        if chosen.iter().all(|&c| c.abs_diff(i) >= opts.min_spacing) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    for &i in &chosen {
        let mag = rng.random_range(opts.magnitude.0..=opts.magnitude.1) * scale;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        out.y_values[i] += sign * mag;
        out.anomalies_x.push(series.x_values[i]);
    }
    out.anomalies_x.sort_by(f64::total_cmp);
    Ok(out)
}

/// Number of points a removal fraction takes out of `n`.
pub fn removal_count(fraction: f64, n: usize) -> usize {
    // small epsilon so that e.g. 0.1 * 100 is not rounded up to 11
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Removes one contiguous run of `ceil(fraction * n)` interior points and
/// records the gap as the interval between the retained neighbours.
/// Anomalous points are never removed.
pub fn remove_points(seed: Seed, series: &SeriesMetadata, fraction: f64) -> Result<SeriesMetadata, GenError> {
    if !(0.0..=0.3).contains(&fraction) {
        return Err(GenError::InvalidParam(format!("removal fraction must be in [0, 0.3], got {fraction}")));
    }
    let n = series.x_values.len();
    let k = removal_count(fraction, n);
    if k == 0 {
        let mut out = series.clone();
        out.missing = None;
        return Ok(out);
    }
    if k + 2 > n {
        return Err(GenError::Unsatisfiable(format!("cannot remove {k} interior points from {n}")));
    }
    let blocked: Vec<bool> = series.x_values.iter().map(|x| series.anomalies_x.contains(x)).collect();
    // valid starts s: run s..s+k inside 1..n-1 with no anomaly
    let starts: Vec<usize> = (1..=n - 1 - k)
        .filter(|&s| !blocked[s..s + k].iter().any(|&b| b))
        .collect();
    if starts.is_empty() {
        return Err(GenError::Unsatisfiable("no gap position avoids the anomalies".into()));
    }
    let mut rng = seed.rng();
    let s = starts[rng.random_range(0..starts.len())];
    let mut out = series.clone();
    let gap = Interval::new(series.x_values[s - 1], series.x_values[s + k]).expect("x increasing");
    out.x_values.drain(s..s + k);
    out.y_values.drain(s..s + k);
    out.missing = Some(gap);
    Ok(out)
}

/// Parameter ranges for a generated series sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesConfig {
    pub length: (usize, usize),
    pub drift: (f64, f64),
    pub sigma: (f64, f64),
    pub geometric_drift: (f64, f64),
    pub geometric_sigma: (f64, f64),
    pub s0: (f64, f64),
    pub smoothing_factor: (f64, f64),
    pub anomalies: AnomalyOptions,
    pub missing_probability: f64,
    pub missing_fraction: (f64, f64),
    pub log_scale_x: (f64, f64),
    pub shift_x: (f64, f64),
    pub log_scale_y: (f64, f64),
    pub shift_y: (f64, f64),
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            length: (100, 500),
            drift: (-0.05, 0.05),
            sigma: (0.05, 0.5),
            geometric_drift: (-0.005, 0.005),
            geometric_sigma: (0.005, 0.05),
            s0: (10.0, 100.0),
            smoothing_factor: (0.01, 0.1),
            anomalies: AnomalyOptions::default(),
            missing_probability: 0.5,
            missing_fraction: (0.05, 0.15),
            log_scale_x: (-1.0, 1.0),
            shift_x: (-500.0, 500.0),
            log_scale_y: (-1.0, 2.0),
            shift_y: (-100.0, 100.0),
        }
    }
}

/// Full series pipeline: walk, smoothing, anomalies, gap, re-ranging.
pub fn gen_series(seed: Seed, cfg: &SeriesConfig) -> Result<SeriesMetadata, GenError> {
    let mut rng = seed.child("series.params").rng();
    let kind = if rng.random_bool(0.5) {
        WalkKind::RandomWalk
    } else {
        WalkKind::GeometricWalk
    };
    let n = rng.random_range(cfg.length.0..=cfg.length.1);
    let factor = rng.random_range(cfg.smoothing_factor.0..=cfg.smoothing_factor.1);

    let (drift, sigma, s0, raw) = match kind {
        WalkKind::RandomWalk => {
            let mu = rng.random_range(cfg.drift.0..=cfg.drift.1);
            let sigma = rng.random_range(cfg.sigma.0..=cfg.sigma.1);
            let w = gen_random_walk(seed.child("series.walk"), n)?;
            let y: Vec<f64> = w.iter().enumerate().map(|(t, wt)| mu * t as f64 + sigma * wt).collect();
            (mu, sigma, None, y)
        }
        WalkKind::GeometricWalk => {
            let mu = rng.random_range(cfg.geometric_drift.0..=cfg.geometric_drift.1);
            let sigma = rng.random_range(cfg.geometric_sigma.0..=cfg.geometric_sigma.1);
            let s0 = rng.random_range(cfg.s0.0..=cfg.s0.1);
            let y = gen_geometric_walk(seed.child("series.walk"), n, s0, mu, sigma)?;
            (mu, sigma, Some(s0), y)
        }
    };
    let y = smooth(&raw, factor)?;
    let base = SeriesMetadata {
        kind,
        n_points: n,
        drift,
        variance: sigma,
        s0,
        smoothing_factor: factor,
        x_values: (0..n).map(|i| i as f64).collect(),
        y_values: y,
        anomalies_x: Vec::new(),
        missing: None,
        transform: RangeTransform::IDENTITY,
    };
    let with_anomalies = inject_anomalies_with(seed.child("series.anomalies"), &base, &cfg.anomalies)?;
    let fraction = if rng.random_bool(cfg.missing_probability.clamp(0.0, 1.0)) {
        rng.random_range(cfg.missing_fraction.0..=cfg.missing_fraction.1)
    } else {
        0.0
    };
    let with_gap = remove_points(seed.child("series.gap"), &with_anomalies, fraction)?;

    let transform = RangeTransform {
        scale_x: 10f64.powf(rng.random_range(cfg.log_scale_x.0..=cfg.log_scale_x.1)),
        dx: rng.random_range(cfg.shift_x.0..=cfg.shift_x.1),
        scale_y: 10f64.powf(rng.random_range(cfg.log_scale_y.0..=cfg.log_scale_y.1)),
        dy: match kind {
            // keep geometric walks positive
            WalkKind::GeometricWalk => rng.random_range(0.0..=cfg.shift_y.1.max(0.0)),
            WalkKind::RandomWalk => rng.random_range(cfg.shift_y.0..=cfg.shift_y.1),
        },
    };
    let out = transform.apply(&with_gap)?;
    out.validate()?;
    Ok(out)
}
