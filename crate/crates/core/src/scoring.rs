//! Metrics that compare a parsed answer with ground truth.
//!
//! Every scorer is a pure function. Scores never exceed 1; the R²-style
//! metrics (extremes, approximation, anomalies, centers) are unbounded below.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::generators::{decreasing_runs, increasing_runs, ClusterMetadata, Distribution, HistogramMetadata, MultiSeriesMetadata, SeriesMetadata};
use crate::geometry::{iou, jaccard, jaccard_sets, BoundingBox, Interval, Point2D};
use crate::prompts::{normalize_label, PromptError, Task, TaskAnswer, TaskKind, Warning};
use crate::render::axes_for;
use crate::sample::{Family, SampleMetadata, Split};
use crate::stats::mean;

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub value: f64,
    pub warnings: BTreeSet<Warning>,
}

impl Score {
    fn new(value: f64) -> Score {
        Score {
            value,
            warnings: BTreeSet::new(),
        }
    }

    fn warn(mut self, w: Warning) -> Score {
        self.warnings.insert(w);
        self
    }
}

/// One scored reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sample_id: Uuid,
    pub family: Family,
    pub split: Split,
    pub task: TaskKind,
    pub client_name: String,
    pub repeat_index: u32,
    pub score: f64,
    pub parse_failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default)]
    pub warnings: BTreeSet<Warning>,
    #[serde(default)]
    pub feature_tags: BTreeMap<String, String>,
}

/// `1 - num / den`, with a constant-truth fallback when `den` vanishes.
fn r2_like(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        1.0 - num / den
    } else if num == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Mean of the true y values whose x lies in `iv`. With no sample inside
/// (for example an interval inside a gap) the series is interpolated at the
/// interval midpoint.
pub fn mean_y_over(series: &SeriesMetadata, iv: &Interval) -> f64 {
    let inside: Vec<f64> = series
        .x_values
        .iter()
        .zip(&series.y_values)
        .filter(|(x, _)| iv.contains(**x))
        .map(|(_, y)| *y)
        .collect();
    if inside.is_empty() {
        interpolate(&series.x_values, &series.y_values, iv.midpoint())
    } else {
        mean(&inside)
    }
}

/// Piecewise-linear interpolation through `(xs, ys)`, constant beyond the ends.
/// `xs` must be strictly increasing and non-empty.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1, y0, y1) = (xs[j - 1], xs[j], ys[j - 1], ys[j]);
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

pub fn score_min_max(series: &SeriesMetadata, min: &Interval, max: &Interval) -> Score {
    let domain = series.x_domain();
    let (cmin, cmax) = (min.clamp_to(&domain), max.clamp_to(&domain));
    let clamped = cmin != *min || cmax != *max;
    let min_pred = mean_y_over(series, &cmin);
    let max_pred = mean_y_over(series, &cmax);
    let (min_real, max_real) = series.y_range();
    let ybar = mean(&series.y_values);
    let den = (min_real - ybar).powi(2) + (max_real - ybar).powi(2);
    let num = (min_pred - min_real).powi(2) + (max_pred - max_real).powi(2);
    let s = Score::new(r2_like(num, den));
    if clamped {
        s.warn(Warning::Clamped)
    } else {
        s
    }
}

pub fn score_approximation(series: &SeriesMetadata, points: &[Point2D]) -> Score {
    let mut warnings = BTreeSet::new();
    let mut pts: Vec<Point2D> = points.to_vec();
    if pts.windows(2).any(|w| w[0].x > w[1].x) {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        warnings.insert(Warning::SortedPoints);
    }
    let mut xs: Vec<f64> = Vec::with_capacity(pts.len());
    let mut ys: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        if xs.last() == Some(&p.x) {
            warnings.insert(Warning::DuplicateX);
            continue;
        }
        xs.push(p.x);
        ys.push(p.y);
    }
    if xs.len() < 2 {
        warnings.insert(Warning::TooFewPoints);
        return Score { value: 0.0, warnings };
    }
    let ybar = mean(&series.y_values);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in series.x_values.iter().zip(&series.y_values) {
        num += (y - interpolate(&xs, &ys, x)).powi(2);
        den += (y - ybar).powi(2);
    }
    Score {
        value: r2_like(num, den),
        warnings,
    }
}

pub fn score_pointwise_anomalies(gt_xs: &[f64], predicted: &[f64], x_domain: &Interval) -> Score {
    if gt_xs.len() != predicted.len() {
        return Score::new(0.0);
    }
    if gt_xs.is_empty() {
        return Score::new(1.0);
    }
    let xbar = x_domain.midpoint();
    let num: f64 = gt_xs
        .iter()
        .map(|a| predicted.iter().map(|p| (a - p).powi(2)).fold(f64::INFINITY, f64::min))
        .sum();
    let den: f64 = gt_xs.iter().map(|a| (a - xbar).powi(2)).sum();
    Score::new(r2_like(num, den))
}

pub fn score_missing(gt: Option<&Interval>, ans: Option<&Interval>) -> Score {
    Score::new(match (gt, ans) {
        (None, None) => 1.0,
        (Some(g), Some(a)) => jaccard(g, a),
        _ => 0.0,
    })
}

/// Greedy one-to-one matching by descending IoU. Returns `(gt, pred, iou)`
/// triples for every pair with positive overlap.
pub fn greedy_box_matching(gt: &[BoundingBox], pred: &[BoundingBox]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, g) in gt.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            let v = iou(g, p);
            if v > 0.0 {
                pairs.push((i, j, v));
            }
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let (mut used_g, mut used_p) = (vec![false; gt.len()], vec![false; pred.len()]);
    let mut out = Vec::new();
    for (i, j, v) in pairs {
        if !used_g[i] && !used_p[j] {
            used_g[i] = true;
            used_p[j] = true;
            out.push((i, j, v));
        }
    }
    out
}

pub fn score_cluster_areas(gt_boxes: &[BoundingBox], predicted: &[BoundingBox]) -> Score {
    if predicted.is_empty() || gt_boxes.is_empty() {
        return Score::new(0.0);
    }
    let total: f64 = greedy_box_matching(gt_boxes, predicted).iter().map(|m| m.2).sum();
    Score::new(total / gt_boxes.len() as f64)
}

fn nearest(from: &Point2D, to: &[Point2D]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, p) in to.iter().enumerate() {
        let d = from.distance(p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Center-distance score. Identical predicted points are merged first, then
/// every true center is paired with its nearest prediction and every
/// prediction with its nearest true center; duplicate pairs count once.
pub fn score_centers(gt: &[Point2D], predicted: &[Point2D], plot_center: &Point2D) -> Score {
    if gt.is_empty() || predicted.is_empty() {
        return Score::new(0.0);
    }
    let mut preds: Vec<Point2D> = Vec::with_capacity(predicted.len());
    let mut merged = false;
    for p in predicted {
        if preds.contains(p) {
            merged = true;
        } else {
            preds.push(*p);
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, g) in gt.iter().enumerate() {
        pairs.insert((i, nearest(g, &preds)));
    }
    for (j, p) in preds.iter().enumerate() {
        pairs.insert((nearest(p, gt), j));
    }
    let den: f64 = gt.iter().map(|g| g.distance(plot_center)).sum();
    let dist: f64 = pairs.iter().map(|&(i, j)| gt[i].distance(&preds[j])).sum();
    let value = if den > 0.0 {
        (den - dist) / den
    } else if preds.iter().all(|p| p == plot_center) {
        1.0
    } else {
        0.0
    };
    let s = Score::new(value);
    if merged {
        s.warn(Warning::DuplicateX)
    } else {
        s
    }
}

/// Mean of the share of the biggest cluster inside the box, how tight the box
/// is around that cluster, and how few other points it takes in.
pub fn score_biggest_cluster(meta: &ClusterMetadata, bbox: &BoundingBox) -> Score {
    let big: Vec<&Point2D> = meta.cluster_points(meta.biggest_label).collect();
    let inside_big = big.iter().filter(|p| bbox.contains(p)).count();
    let p_correct = inside_big as f64 / big.len() as f64;
    let a_cluster = meta.biggest_box().area();
    let a_rect = bbox.area();
    let p_area = if a_rect > 0.0 {
        (a_cluster / a_rect).min(1.0)
    } else if a_cluster > 0.0 {
        0.0
    } else {
        1.0
    };
    let others_inside = meta
        .points
        .iter()
        .zip(&meta.true_labels)
        .filter(|(p, &l)| l != meta.biggest_label && bbox.contains(p))
        .count();
    let p_penalty = 1.0 - others_inside as f64 / meta.points.len() as f64;
    Score::new((p_correct + p_area + p_penalty) / 3.0)
}

/// 1 for the right label; skewed data labelled exponential also counts.
pub fn check_distribution(actual: Distribution, predicted: &str) -> Score {
    let Some(p) = Distribution::from_label(&normalize_label(predicted)) else {
        return Score::new(0.0).warn(Warning::UnknownLabel);
    };
    let ok = p == actual
        || (matches!(actual, Distribution::SkewLeft | Distribution::SkewRight) && p == Distribution::Exponential);
    Score::new(if ok { 1.0 } else { 0.0 })
}

pub fn score_min_max_bins(hist: &HistogramMetadata, min: &[Interval], max: &[Interval]) -> Score {
    let j_min = jaccard_sets(min, &hist.min_bins());
    let j_max = jaccard_sets(max, &hist.max_bins());
    Score::new((j_min + j_max) / 2.0)
}

/// Indices of the bins whose centers fall inside `iv`.
fn covered_bins(hist: &HistogramMetadata, iv: &Interval) -> Vec<usize> {
    (0..hist.n_bins()).filter(|&i| iv.contains(hist.bin_center(i))).collect()
}

fn is_monotone(counts: &[u64], increasing: bool) -> bool {
    if counts.len() < 2 {
        return false;
    }
    if increasing {
        counts.windows(2).all(|w| w[1] >= w[0]) && counts.windows(2).any(|w| w[1] > w[0])
    } else {
        counts.windows(2).all(|w| w[1] <= w[0]) && counts.windows(2).any(|w| w[1] < w[0])
    }
}

pub fn score_monotonicity(hist: &HistogramMetadata, increasing: &[Interval], decreasing: &[Interval]) -> Score {
    let total = increasing.len() + decreasing.len();
    if total == 0 {
        return Score::new(0.0);
    }
    let correct = |ivs: &[Interval], inc: bool| {
        ivs.iter()
            .filter(|iv| {
                let bins = covered_bins(hist, iv);
                let counts: Vec<u64> = bins.iter().map(|&i| hist.bin_counts[i]).collect();
                is_monotone(&counts, inc)
            })
            .count()
    };
    Score::new((correct(increasing, true) + correct(decreasing, false)) as f64 / total as f64)
}

/// The longest monotone runs as intervals between outer bin centers.
pub fn monotone_intervals(hist: &HistogramMetadata, increasing: bool, take: usize) -> Vec<Interval> {
    let mut runs = if increasing {
        increasing_runs(&hist.bin_counts)
    } else {
        decreasing_runs(&hist.bin_counts)
    };
    runs.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
    runs.truncate(take);
    runs.sort_unstable();
    runs.iter()
        .map(|&(a, b)| Interval::new(hist.bin_center(a), hist.bin_center(b)).expect("centers increase"))
        .collect()
}

pub fn score_below_x(hist: &HistogramMetadata, predicted: f64) -> Score {
    let p = predicted.clamp(0.0, 100.0);
    let actual = hist.percent_below(hist.below_x_threshold);
    let s = Score::new(1.0 - (actual - p).abs() / 100.0);
    if p != predicted {
        s.warn(Warning::Clamped)
    } else {
        s
    }
}

/// Jaccard after widening both ranges by one bin width on each side.
pub fn score_hist_anomaly(hist: &HistogramMetadata, ans: Option<&Interval>) -> Score {
    let gt = hist.anomaly.as_ref().map(|a| a.range);
    Score::new(match (gt, ans) {
        (None, None) => 1.0,
        (Some(g), Some(a)) => {
            let r = hist.bin_width();
            jaccard(&g.extended(r), &a.extended(r))
        }
        _ => 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeKey {
    Median,
    Range,
    Iqr,
}

impl ExtremeKey {
    pub fn for_task(kind: TaskKind) -> Option<ExtremeKey> {
        match kind {
            TaskKind::Medians => Some(ExtremeKey::Median),
            TaskKind::OverallRanges => Some(ExtremeKey::Range),
            TaskKind::IqrRanges => Some(ExtremeKey::Iqr),
            _ => None,
        }
    }
}

/// Positions attaining the largest and smallest statistic; ties keep all.
pub fn extreme_positions(meta: &MultiSeriesMetadata, key: ExtremeKey) -> (Vec<usize>, Vec<usize>) {
    let vals: Vec<f64> = meta
        .per_series_stats
        .iter()
        .map(|s| match key {
            ExtremeKey::Median => s.median,
            ExtremeKey::Range => s.range(),
            ExtremeKey::Iqr => s.iqr(),
        })
        .collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let pick = |t: f64| {
        vals.iter()
            .zip(&meta.series)
            .filter(|(v, _)| **v == t)
            .map(|(_, s)| s.position)
            .collect::<Vec<_>>()
    };
    (pick(hi), pick(lo))
}

pub fn score_extreme_indices(meta: &MultiSeriesMetadata, key: ExtremeKey, high: Option<f64>, low: Option<f64>) -> Score {
    let (hi, lo) = extreme_positions(meta, key);
    let hit = |pred: Option<f64>, set: &[usize]| match pred {
        Some(x) if x.is_finite() && x.round() >= 0.0 => set.contains(&(x.round() as usize)),
        _ => false,
    };
    let mut s = Score::new(0.5 * hit(high, &hi) as u8 as f64 + 0.5 * hit(low, &lo) as u8 as f64);
    if high.is_none() || low.is_none() {
        s.warnings.insert(Warning::NonNumeric);
    }
    s
}

/// Scores `answer` for `task` against a sample's ground truth.
pub fn score_answer(meta: &SampleMetadata, task: &Task, answer: &TaskAnswer) -> Result<Score, PromptError> {
    let bad = || PromptError::SchemaMismatch(format!("answer shape does not fit {task}"));
    if meta.family() != task.family {
        return Err(PromptError::FamilyMismatch {
            task: task.kind.to_string(),
            family: meta.family().to_string(),
        });
    }
    let s = match (meta, task.kind, answer) {
        (SampleMetadata::Series(s), TaskKind::MinMaxInterval, TaskAnswer::MinMaxIntervals { min, max }) => {
            score_min_max(s, min, max)
        }
        (SampleMetadata::Series(s), TaskKind::Approximate, TaskAnswer::PointList { points }) => score_approximation(s, points),
        (SampleMetadata::Series(s), TaskKind::PointwiseAnomalies, TaskAnswer::AnomalyXs { xs }) => {
            score_pointwise_anomalies(&s.anomalies_x, xs, &s.x_domain())
        }
        (SampleMetadata::Series(s), TaskKind::MissingData, TaskAnswer::MissingData { interval }) => {
            score_missing(s.missing.as_ref(), interval.as_ref())
        }
        (SampleMetadata::Clusters(c), TaskKind::BiggestCluster, TaskAnswer::BiggestBox { bbox }) => score_biggest_cluster(c, bbox),
        (SampleMetadata::Clusters(c), TaskKind::Centers, TaskAnswer::CenterMap { centers }) => {
            let preds: Vec<Point2D> = centers.values().copied().collect();
            score_centers(&c.centers, &preds, &axes_for(meta).center())
        }
        (SampleMetadata::Clusters(c), TaskKind::ClustersArea, TaskAnswer::AreaMap { areas }) => {
            let preds: Vec<BoundingBox> = areas.values().copied().collect();
            score_cluster_areas(&c.cluster_boxes(), &preds)
        }
        (SampleMetadata::Histogram(h), TaskKind::Distributions, TaskAnswer::Distribution { label }) => {
            check_distribution(h.distribution, label)
        }
        (SampleMetadata::Histogram(h), TaskKind::MinMaxBins, TaskAnswer::BinRanges { min, max }) => score_min_max_bins(h, min, max),
        (SampleMetadata::Histogram(h), TaskKind::Monotonicity, TaskAnswer::Monotonicity { increasing, decreasing }) => {
            score_monotonicity(h, increasing, decreasing)
        }
        (SampleMetadata::Histogram(h), TaskKind::BelowXValuePercent, TaskAnswer::Percent { value }) => score_below_x(h, *value),
        (SampleMetadata::Histogram(h), TaskKind::Anomalies, TaskAnswer::AnomalyRange { interval }) => {
            score_hist_anomaly(h, interval.as_ref())
        }
        (SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m), k, TaskAnswer::ExtremeIndices { high, low }) => {
            score_extreme_indices(m, ExtremeKey::for_task(k).ok_or_else(bad)?, *high, *low)
        }
        _ => return Err(bad()),
    };
    Ok(s)
}
