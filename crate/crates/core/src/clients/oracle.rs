//! Answers read straight from ground truth, in the exact reply format.

use std::collections::BTreeMap;

use super::{Client, ClientError, Outcome, Query};
use crate::generators::SeriesMetadata;
use crate::geometry::{Interval, Point2D};
use crate::prompts::{Task, TaskAnswer, TaskKind};
use crate::sample::SampleMetadata;
use crate::scoring::{extreme_positions, interpolate, monotone_intervals, ExtremeKey};

/// Most knots the oracle places when approximating a series.
pub const ORACLE_KNOTS: usize = 10;

/// `[x_i - d, x_i + d]` where `d` is half the smaller gap to a neighbour, so
/// the interval holds sample `i` and nothing else.
pub fn extreme_interval(series: &SeriesMetadata, i: usize) -> Interval {
    let xs = &series.x_values;
    let left = if i > 0 { xs[i] - xs[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { f64::INFINITY };
    let d = 0.5 * left.min(right);
    let d = if d.is_finite() { d } else { 0.0 };
    Interval::new(xs[i] - d, xs[i] + d).expect("finite")
}

/// Greedy largest-residual knot insertion: start from the end points and
/// keep adding the sample farthest from the current interpolant.
pub fn approximation_knots(series: &SeriesMetadata, max_knots: usize) -> Vec<Point2D> {
    let (xs, ys) = (&series.x_values, &series.y_values);
    let n = xs.len();
    let mut knots: Vec<usize> = if n > 1 { vec![0, n - 1] } else { vec![0] };
    while knots.len() < max_knots.min(n) {
        let kx: Vec<f64> = knots.iter().map(|&i| xs[i]).collect();
        let ky: Vec<f64> = knots.iter().map(|&i| ys[i]).collect();
        let mut best = (0usize, 0.0f64);
        for i in 0..n {
            let r = (ys[i] - interpolate(&kx, &ky, xs[i])).abs();
            if r > best.1 {
                best = (i, r);
            }
        }
        if best.1 <= 0.0 {
            break;
        }
        let pos = knots.partition_point(|&k| k < best.0);
        knots.insert(pos, best.0);
    }
    knots.iter().map(|&i| Point2D::new(xs[i], ys[i])).collect()
}

fn keyed<T>(items: impl IntoIterator<Item = T>) -> BTreeMap<String, T> {
    items.into_iter().enumerate().map(|(i, v)| (i.to_string(), v)).collect()
}

/// The ground-truth answer as a typed value.
pub fn oracle_typed(task: &Task, meta: &SampleMetadata) -> Result<TaskAnswer, ClientError> {
    if meta.family() != task.family {
        return Err(ClientError::InvalidRequest(format!("{task} asked about a {} plot", meta.family())));
    }
    let a = match (meta, task.kind) {
        (SampleMetadata::Series(s), TaskKind::MinMaxInterval) => TaskAnswer::MinMaxIntervals {
            min: extreme_interval(s, s.argmin()),
            max: extreme_interval(s, s.argmax()),
        },
        (SampleMetadata::Series(s), TaskKind::Approximate) => TaskAnswer::PointList {
            points: approximation_knots(s, ORACLE_KNOTS),
        },
        (SampleMetadata::Series(s), TaskKind::PointwiseAnomalies) => TaskAnswer::AnomalyXs { xs: s.anomalies_x.clone() },
        (SampleMetadata::Series(s), TaskKind::MissingData) => TaskAnswer::MissingData { interval: s.missing },
        (SampleMetadata::Clusters(c), TaskKind::BiggestCluster) => TaskAnswer::BiggestBox { bbox: c.biggest_box() },
        (SampleMetadata::Clusters(c), TaskKind::Centers) => TaskAnswer::CenterMap {
            centers: keyed(c.centers.iter().copied()),
        },
        (SampleMetadata::Clusters(c), TaskKind::ClustersArea) => TaskAnswer::AreaMap {
            areas: keyed(c.cluster_boxes()),
        },
        (SampleMetadata::Histogram(h), TaskKind::Distributions) => TaskAnswer::Distribution {
            label: h.distribution.label().to_string(),
        },
        (SampleMetadata::Histogram(h), TaskKind::MinMaxBins) => TaskAnswer::BinRanges {
            min: h.min_bins(),
            max: h.max_bins(),
        },
        (SampleMetadata::Histogram(h), TaskKind::Monotonicity) => TaskAnswer::Monotonicity {
            increasing: monotone_intervals(h, true, 2),
            decreasing: monotone_intervals(h, false, 2),
        },
        (SampleMetadata::Histogram(h), TaskKind::BelowXValuePercent) => TaskAnswer::Percent {
            value: h.percent_below(h.below_x_threshold),
        },
        (SampleMetadata::Histogram(h), TaskKind::Anomalies) => TaskAnswer::AnomalyRange {
            interval: h.anomaly.map(|a| a.range),
        },
        (SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m), k) => {
            let key = ExtremeKey::for_task(k).ok_or_else(|| ClientError::InvalidRequest(format!("no oracle for {task}")))?;
            let (hi, lo) = extreme_positions(m, key);
            TaskAnswer::ExtremeIndices {
                high: hi.first().map(|&p| p as f64),
                low: lo.first().map(|&p| p as f64),
            }
        }
        _ => return Err(ClientError::InvalidRequest(format!("no oracle for {task}"))),
    };
    Ok(a)
}

/// The ground-truth answer formatted as a model reply.
pub fn oracle_answer(task: &Task, meta: &SampleMetadata) -> Result<String, ClientError> {
    oracle_typed(task, meta)?
        .to_reply(task.kind)
        .map_err(|e| ClientError::InvalidRequest(e.to_string()))
}

pub struct OracleClient;

impl Client for OracleClient {
    fn name(&self) -> &str {
        "oracle"
    }

    fn query(&self, q: &Query<'_>) -> Outcome {
        Outcome::local(oracle_answer(&q.task, &q.record.metadata))
    }
}
