//! Reference answerers that anchor the score scales.

use std::collections::BTreeMap;

use rand::Rng;
use serde_json::json;

use super::{Client, ClientError, Outcome, Query};
use crate::generators::Distribution;
use crate::geometry::{BoundingBox, Interval, Point2D};
use crate::prompts::{Task, TaskAnswer, TaskKind};
use crate::render::axes_for;
use crate::sample::SampleMetadata;
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Every requested point is the middle of the axes.
    PlotCenter,
    /// The middle of the data's x range, once per true anomaly.
    XMean,
    /// The "nothing found" reply.
    Empty,
    /// Uniform draws over the axes box.
    Random(Seed),
}

impl BaselineKind {
    pub fn name(&self) -> String {
        match self {
            BaselineKind::PlotCenter => "plot_center".into(),
            BaselineKind::XMean => "x_mean".into(),
            BaselineKind::Empty => "empty".into(),
            BaselineKind::Random(s) => format!("random({})", s.value()),
        }
    }

    /// Parses `plot_center`, `x_mean`, `empty`, `random` or `random(<seed>)`.
    pub fn parse(s: &str) -> Option<BaselineKind> {
        match s {
            "plot_center" => Some(BaselineKind::PlotCenter),
            "x_mean" => Some(BaselineKind::XMean),
            "empty" => Some(BaselineKind::Empty),
            "random" => Some(BaselineKind::Random(Seed(0))),
            _ => {
                let inner = s.strip_prefix("random(")?.strip_suffix(')')?;
                inner.trim().parse().ok().map(|v| BaselineKind::Random(Seed(v)))
            }
        }
    }
}

fn point_iv(x: f64) -> Interval {
    Interval::point(x).expect("finite")
}

fn inapplicable(kind: BaselineKind, task: &Task) -> ClientError {
    ClientError::Inapplicable(format!("baseline {} does not answer {task}", kind.name()))
}

/// The baseline's reply text for `task`.
pub fn baseline_answer(kind: BaselineKind, task: &Task, meta: &SampleMetadata) -> Result<String, ClientError> {
    if meta.family() != task.family {
        return Err(ClientError::InvalidRequest(format!("{task} asked about a {} plot", meta.family())));
    }
    let reply = |a: TaskAnswer| a.to_reply(task.kind).map_err(|e| ClientError::InvalidRequest(e.to_string()));
    match kind {
        BaselineKind::PlotCenter => {
            let axes = axes_for(meta);
            let c = axes.center();
            let a = match (meta, task.kind) {
                (SampleMetadata::Clusters(m), TaskKind::Centers) => TaskAnswer::CenterMap {
                    centers: (0..m.n_clusters).map(|i| (i.to_string(), c)).collect(),
                },
                (SampleMetadata::Clusters(m), TaskKind::ClustersArea) => TaskAnswer::AreaMap {
                    areas: (0..m.n_clusters)
                        .map(|i| (i.to_string(), BoundingBox::new(point_iv(c.x), point_iv(c.y))))
                        .collect(),
                },
                (SampleMetadata::Clusters(_), TaskKind::BiggestCluster) => TaskAnswer::BiggestBox {
                    bbox: BoundingBox::new(point_iv(c.x), point_iv(c.y)),
                },
                (SampleMetadata::Series(_), TaskKind::MinMaxInterval) => TaskAnswer::MinMaxIntervals {
                    min: point_iv(c.x),
                    max: point_iv(c.x),
                },
                (SampleMetadata::Series(_), TaskKind::Approximate) => TaskAnswer::PointList {
                    points: vec![Point2D::new(axes.x.lo, c.y), Point2D::new(axes.x.hi, c.y)],
                },
                (SampleMetadata::Series(s), TaskKind::PointwiseAnomalies) => TaskAnswer::AnomalyXs {
                    xs: vec![c.x; s.anomalies_x.len()],
                },
                _ => return Err(inapplicable(kind, task)),
            };
            reply(a)
        }
        BaselineKind::XMean => match (meta, task.kind) {
            (SampleMetadata::Series(s), TaskKind::PointwiseAnomalies) => reply(TaskAnswer::AnomalyXs {
                xs: vec![s.x_domain().midpoint(); s.anomalies_x.len()],
            }),
            _ => Err(inapplicable(kind, task)),
        },
        BaselineKind::Empty => {
            let v = match task.kind {
                TaskKind::MissingData => json!({}),
                TaskKind::PointwiseAnomalies => json!({"anomalies": []}),
                TaskKind::Anomalies => json!({"anomalies_range": []}),
                TaskKind::Approximate => json!({"points": []}),
                TaskKind::MinMaxBins => json!({"min": [], "max": []}),
                TaskKind::Monotonicity => json!({"increasing": [], "decreasing": []}),
                _ => json!({}),
            };
            Ok(format!("```json\n{v}\n```"))
        }
        BaselineKind::Random(seed) => reply(random_answer(seed, task, meta)?),
    }
}

fn random_answer(seed: Seed, task: &Task, meta: &SampleMetadata) -> Result<TaskAnswer, ClientError> {
    let mut rng = seed.rng();
    let axes = axes_for(meta);
    let (xa, ya) = (axes.x.clone(), axes.y.clone());
    let xs: Vec<f64> = (0..24).map(|_| rng.random_range(xa.lo..=xa.hi)).collect();
    let ys: Vec<f64> = (0..24).map(|_| rng.random_range(ya.lo..=ya.hi)).collect();
    let iv = |a: f64, b: f64| Interval::normalized(a, b).expect("finite").0;
    let boxes = |k: usize| -> BTreeMap<String, BoundingBox> {
        (0..k)
            .map(|i| (i.to_string(), BoundingBox::new(iv(xs[2 * i], xs[2 * i + 1]), iv(ys[2 * i], ys[2 * i + 1]))))
            .collect()
    };
    let a = match (meta, task.kind) {
        (SampleMetadata::Series(_), TaskKind::MinMaxInterval) => TaskAnswer::MinMaxIntervals {
            min: iv(xs[0], xs[1]),
            max: iv(xs[2], xs[3]),
        },
        (SampleMetadata::Series(_), TaskKind::Approximate) => {
            let mut pts: Vec<Point2D> = (0..5).map(|i| Point2D::new(xs[i], ys[i])).collect();
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            TaskAnswer::PointList { points: pts }
        }
        (SampleMetadata::Series(_), TaskKind::PointwiseAnomalies) => TaskAnswer::AnomalyXs {
            xs: xs[..rng.random_range(0..=3)].to_vec(),
        },
        (SampleMetadata::Series(_), TaskKind::MissingData) => TaskAnswer::MissingData {
            interval: rng.random_bool(0.5).then(|| iv(xs[0], xs[1])),
        },
        (SampleMetadata::Clusters(m), TaskKind::Centers) => TaskAnswer::CenterMap {
            centers: (0..m.n_clusters).map(|i| (i.to_string(), Point2D::new(xs[i], ys[i]))).collect(),
        },
        (SampleMetadata::Clusters(m), TaskKind::ClustersArea) => TaskAnswer::AreaMap { areas: boxes(m.n_clusters) },
        (SampleMetadata::Clusters(_), TaskKind::BiggestCluster) => TaskAnswer::BiggestBox { bbox: boxes(1)["0"] },
        (SampleMetadata::Histogram(_), TaskKind::Distributions) => TaskAnswer::Distribution {
            label: Distribution::ALL[rng.random_range(0..Distribution::ALL.len())].label().to_string(),
        },
        (SampleMetadata::Histogram(_), TaskKind::MinMaxBins) => TaskAnswer::BinRanges {
            min: vec![iv(xs[0], xs[1])],
            max: vec![iv(xs[2], xs[3])],
        },
        (SampleMetadata::Histogram(_), TaskKind::Monotonicity) => TaskAnswer::Monotonicity {
            increasing: vec![iv(xs[0], xs[1]), iv(xs[2], xs[3])],
            decreasing: vec![iv(xs[4], xs[5]), iv(xs[6], xs[7])],
        },
        (SampleMetadata::Histogram(_), TaskKind::BelowXValuePercent) => TaskAnswer::Percent {
            value: rng.random_range(0.0..=100.0),
        },
        (SampleMetadata::Histogram(_), TaskKind::Anomalies) => TaskAnswer::AnomalyRange {
            interval: rng.random_bool(0.5).then(|| iv(xs[0], xs[1])),
        },
        (SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m), _) => {
            let n = m.series.len();
            TaskAnswer::ExtremeIndices {
                high: Some(rng.random_range(1..=n) as f64),
                low: Some(rng.random_range(1..=n) as f64),
            }
        }
        _ => return Err(ClientError::InvalidRequest(format!("no random answer for {task}"))),
    };
    Ok(a)
}

pub struct BaselineClient {
    kind: BaselineKind,
    name: String,
}

impl BaselineClient {
    pub fn new(kind: BaselineKind) -> Self {
        BaselineClient {
            kind,
            name: format!("baseline:{}", kind.name()),
        }
    }
}

impl Client for BaselineClient {
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&self, q: &Query<'_>) -> Outcome {
        let kind = match self.kind {
            // each question gets its own stream
            BaselineKind::Random(s) => BaselineKind::Random(
                s.child(&format!("{}/{}/{}", q.record.id, q.task.kind, q.repeat)),
            ),
            k => k,
        };
        Outcome::local(baseline_answer(kind, &q.task, &q.record.metadata))
    }
}
