//! Typed answers and the lenient parser that builds them from JSON.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{PromptError, Task, TaskKind};
use crate::geometry::{BoundingBox, Interval, Point2D};

/// Most points accepted for a piecewise-linear approximation.
pub const MAX_APPROX_POINTS: usize = 10;

/// Things the parser or a scorer had to fix up. They never change a score
/// by themselves; they are kept for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    CoercedNumber,
    SwappedInterval,
    SortedPoints,
    TruncatedPoints,
    DuplicateX,
    TooFewPoints,
    Clamped,
    UnknownLabel,
    NonNumeric,
    Unwrapped,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskAnswer {
    MinMaxIntervals { min: Interval, max: Interval },
    PointList { points: Vec<Point2D> },
    MissingData { interval: Option<Interval> },
    AnomalyXs { xs: Vec<f64> },
    CenterMap { centers: BTreeMap<String, Point2D> },
    AreaMap { areas: BTreeMap<String, BoundingBox> },
    BiggestBox { bbox: BoundingBox },
    BinRanges { min: Vec<Interval>, max: Vec<Interval> },
    Monotonicity { increasing: Vec<Interval>, decreasing: Vec<Interval> },
    Percent { value: f64 },
    Distribution { label: String },
    AnomalyRange { interval: Option<Interval> },
    ExtremeIndices { high: Option<f64>, low: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    pub answer: TaskAnswer,
    pub warnings: BTreeSet<Warning>,
}

/// JSON keys of the two sides of an extreme-position question.
pub(crate) fn extreme_keys(kind: TaskKind) -> Option<(&'static str, &'static str)> {
    match kind {
        TaskKind::Medians => Some(("highest_median_x", "lowest_median_x")),
        TaskKind::IqrRanges => Some(("biggest_iqr_x", "smallest_iqr_x")),
        TaskKind::OverallRanges => Some(("biggest_range_x", "smallest_range_x")),
        _ => None,
    }
}

fn iv(i: &Interval) -> Value {
    json!([i.lo(), i.hi()])
}

fn pt(p: &Point2D) -> Value {
    json!([p.x, p.y])
}

impl TaskAnswer {
    /// Serialises into the reply format the task's prompt asks for.
    pub fn to_json(&self, kind: TaskKind) -> Result<Value, PromptError> {
        let mismatch = || PromptError::SchemaMismatch(format!("{kind} cannot hold this answer"));
        let v = match (kind, self) {
            (TaskKind::MinMaxInterval, TaskAnswer::MinMaxIntervals { min, max }) => json!({"max": iv(max), "min": iv(min)}),
            (TaskKind::Approximate, TaskAnswer::PointList { points }) => {
                json!({"points": points.iter().map(pt).collect::<Vec<_>>()})
            }
            (TaskKind::MissingData, TaskAnswer::MissingData { interval }) => match interval {
                Some(i) => json!({"missing_data": iv(i)}),
                None => json!({}),
            },
            (TaskKind::PointwiseAnomalies, TaskAnswer::AnomalyXs { xs }) => json!({ "anomalies": xs }),
            (TaskKind::Centers, TaskAnswer::CenterMap { centers }) => {
                Value::Object(centers.iter().map(|(k, p)| (k.clone(), pt(p))).collect())
            }
            (TaskKind::ClustersArea, TaskAnswer::AreaMap { areas }) => Value::Object(
                areas
                    .iter()
                    .map(|(k, b)| (k.clone(), json!([[b.x.lo(), b.y.lo()], [b.x.hi(), b.y.hi()]])))
                    .collect(),
            ),
            (TaskKind::BiggestCluster, TaskAnswer::BiggestBox { bbox }) => json!({"x": iv(&bbox.x), "y": iv(&bbox.y)}),
            (TaskKind::MinMaxBins, TaskAnswer::BinRanges { min, max }) => json!({
                "min": min.iter().map(iv).collect::<Vec<_>>(),
                "max": max.iter().map(iv).collect::<Vec<_>>(),
            }),
            (TaskKind::Monotonicity, TaskAnswer::Monotonicity { increasing, decreasing }) => json!({
                "increasing": increasing.iter().map(iv).collect::<Vec<_>>(),
                "decreasing": decreasing.iter().map(iv).collect::<Vec<_>>(),
            }),
            (TaskKind::Anomalies, TaskAnswer::AnomalyRange { interval }) => match interval {
                Some(i) => json!({"anomalies_range": iv(i)}),
                None => json!({"anomalies_range": []}),
            },
            (TaskKind::BelowXValuePercent, TaskAnswer::Percent { value }) => {
                json!({"percentage_below": format!("{value}")})
            }
            (TaskKind::Distributions, TaskAnswer::Distribution { label }) => json!({ "distribution": label }),
            (k, TaskAnswer::ExtremeIndices { high, low }) if extreme_keys(k).is_some() => {
                let (hk, lk) = extreme_keys(k).expect("checked");
                let mut m = Map::new();
                m.insert(hk.to_string(), json!(high));
                m.insert(lk.to_string(), json!(low));
                Value::Object(m)
            }
            _ => return Err(mismatch()),
        };
        Ok(v)
    }

    /// The reply text a well-behaved model would send.
    pub fn to_reply(&self, kind: TaskKind) -> Result<String, PromptError> {
        let v = self.to_json(kind)?;
        let body = serde_json::to_string_pretty(&v).expect("values are always serialisable");
        Ok(format!("```json\n{body}\n```"))
    }
}

struct Ctx {
    warnings: BTreeSet<Warning>,
}

type R<T> = Result<T, PromptError>;

fn mismatch<T>(path: &str) -> R<T> {
    Err(PromptError::SchemaMismatch(path.to_string()))
}

impl Ctx {
    fn warn(&mut self, w: Warning) {
        self.warnings.insert(w);
    }

    fn num(&mut self, v: &Value, path: &str) -> R<f64> {
        let x = match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => {
                let t = s.trim().trim_end_matches('%').trim().replace(',', "");
                let parsed = t.parse::<f64>().ok();
                if parsed.is_some() {
                    self.warn(Warning::CoercedNumber);
                }
                parsed
            }
            _ => None,
        };
        match x {
            Some(x) if x.is_finite() => Ok(x),
            _ => mismatch(path),
        }
    }

    fn interval(&mut self, v: &Value, path: &str) -> R<Interval> {
        match v.as_array().map(|a| a.as_slice()) {
            Some([a, b]) => {
                let (a, b) = (self.num(a, path)?, self.num(b, path)?);
                let (i, swapped) = Interval::normalized(a, b).or_else(|_| mismatch(path))?;
                if swapped {
                    self.warn(Warning::SwappedInterval);
                }
                Ok(i)
            }
            _ => mismatch(path),
        }
    }

    fn point(&mut self, v: &Value, path: &str) -> R<Point2D> {
        match v {
            Value::Array(a) if a.len() == 2 => Ok(Point2D::new(self.num(&a[0], path)?, self.num(&a[1], path)?)),
            Value::Object(o) => match (field(o, "x"), field(o, "y")) {
                (Some(x), Some(y)) => Ok(Point2D::new(self.num(x, path)?, self.num(y, path)?)),
                _ => mismatch(path),
            },
            _ => mismatch(path),
        }
    }

    /// A list of intervals; a single bare interval is accepted as a list of one.
    fn intervals(&mut self, v: &Value, path: &str) -> R<Vec<Interval>> {
        match v {
            Value::Null => Ok(Vec::new()),
            Value::Array(a) if a.len() == 2 && !a[0].is_array() => {
                self.warn(Warning::Unwrapped);
                Ok(vec![self.interval(v, path)?])
            }
            Value::Array(a) => a.iter().map(|x| self.interval(x, path)).collect(),
            _ => mismatch(path),
        }
    }

    fn optional_interval(&mut self, v: Option<&Value>, path: &str) -> R<Option<Interval>> {
        match v {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(a)) if a.is_empty() => Ok(None),
            Some(Value::Object(o)) if o.is_empty() => Ok(None),
            Some(x) => self.interval(x, path).map(Some),
        }
    }
}

/// Looks up `key`, falling back to a case-insensitive match.
fn field<'a>(o: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    o.get(key)
        .or_else(|| o.iter().find(|(k, _)| k.trim().eq_ignore_ascii_case(key)).map(|(_, v)| v))
}

fn required<'a>(o: &'a Map<String, Value>, key: &str) -> R<&'a Value> {
    field(o, key).ok_or_else(|| PromptError::SchemaMismatch(key.to_string()))
}

/// Canonical spelling of a distribution label: upper case, underscores.
pub fn normalize_label(s: &str) -> String {
    s.trim()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_uppercase() })
        .collect()
}

/// Validates and normalises a reply already reduced to JSON.
pub fn parse_answer(task: &Task, value: &Value) -> Result<ParsedAnswer, PromptError> {
    let mut cx = Ctx {
        warnings: BTreeSet::new(),
    };
    let obj = value.as_object().ok_or_else(|| PromptError::SchemaMismatch("$".into()))?;
    let answer = match task.kind {
        TaskKind::MinMaxInterval => TaskAnswer::MinMaxIntervals {
            min: cx.interval(required(obj, "min")?, "min")?,
            max: cx.interval(required(obj, "max")?, "max")?,
        },
        TaskKind::Approximate => {
            let raw = required(obj, "points")?.as_array().ok_or_else(|| PromptError::SchemaMismatch("points".into()))?;
            let mut points = raw.iter().map(|p| cx.point(p, "points")).collect::<R<Vec<_>>>()?;
            if points.len() > MAX_APPROX_POINTS {
                points.truncate(MAX_APPROX_POINTS);
                cx.warn(Warning::TruncatedPoints);
            }
            if points.windows(2).any(|w| w[0].x > w[1].x) {
                points.sort_by(|a, b| a.x.total_cmp(&b.x));
                cx.warn(Warning::SortedPoints);
            }
            TaskAnswer::PointList { points }
        }
        TaskKind::MissingData => {
            if obj.is_empty() {
                TaskAnswer::MissingData { interval: None }
            } else {
                let v = required(obj, "missing_data")?;
                TaskAnswer::MissingData {
                    interval: cx.optional_interval(Some(v), "missing_data")?,
                }
            }
        }
        TaskKind::PointwiseAnomalies => {
            let xs = match required(obj, "anomalies")? {
                Value::Null => Vec::new(),
                Value::Array(a) => a
                    .iter()
                    .map(|x| match x {
                        Value::Array(p) if p.len() == 2 => {
                            cx.warn(Warning::Unwrapped);
                            cx.num(&p[0], "anomalies")
                        }
                        _ => cx.num(x, "anomalies"),
                    })
                    .collect::<R<Vec<_>>>()?,
                _ => return mismatch("anomalies"),
            };
            TaskAnswer::AnomalyXs { xs }
        }
        TaskKind::Centers => {
            let src = unwrap_single(obj, "centers", &mut cx);
            let centers = keyed(&src, "centers", |cx, v, p| cx.point(v, p), &mut cx)?;
            if centers.is_empty() {
                return mismatch("centers");
            }
            TaskAnswer::CenterMap { centers }
        }
        TaskKind::ClustersArea => {
            let src = unwrap_single(obj, "clusters", &mut cx);
            let areas = keyed(&src, "clusters_area", |cx, v, p| area(cx, v, p), &mut cx)?;
            TaskAnswer::AreaMap { areas }
        }
        TaskKind::BiggestCluster => TaskAnswer::BiggestBox {
            bbox: BoundingBox::new(cx.interval(required(obj, "x")?, "x")?, cx.interval(required(obj, "y")?, "y")?),
        },
        TaskKind::MinMaxBins => TaskAnswer::BinRanges {
            min: cx.intervals(required(obj, "min")?, "min")?,
            max: cx.intervals(required(obj, "max")?, "max")?,
        },
        TaskKind::Monotonicity => TaskAnswer::Monotonicity {
            increasing: cx.intervals(required(obj, "increasing")?, "increasing")?,
            decreasing: cx.intervals(required(obj, "decreasing")?, "decreasing")?,
        },
        TaskKind::Anomalies => TaskAnswer::AnomalyRange {
            interval: if obj.is_empty() {
                None
            } else {
                cx.optional_interval(Some(required(obj, "anomalies_range")?), "anomalies_range")?
            },
        },
        TaskKind::BelowXValuePercent => {
            let raw = required(obj, "percentage_below")?;
            let v = match raw.as_str().and_then(|s| s.trim().parse::<f64>().ok()) {
                Some(v) if v.is_finite() => v,
                _ => cx.num(raw, "percentage_below")?,
            };
            if !(0.0..=100.0).contains(&v) {
                cx.warn(Warning::Clamped);
            }
            TaskAnswer::Percent {
                value: v.clamp(0.0, 100.0),
            }
        }
        TaskKind::Distributions => match required(obj, "distribution")? {
            Value::String(s) => TaskAnswer::Distribution {
                label: normalize_label(s),
            },
            _ => return mismatch("distribution"),
        },
        TaskKind::Medians | TaskKind::IqrRanges | TaskKind::OverallRanges => {
            let (hk, lk) = extreme_keys(task.kind).expect("extreme task");
            let (h, l) = (required(obj, hk)?, required(obj, lk)?);
            let mut side = |v: &Value, k: &str| match cx.num(v, k) {
                Ok(x) => Some(x),
                Err(_) => {
                    cx.warn(Warning::NonNumeric);
                    None
                }
            };
            TaskAnswer::ExtremeIndices {
                high: side(h, hk),
                low: side(l, lk),
            }
        }
    };
    Ok(ParsedAnswer {
        answer,
        warnings: cx.warnings,
    })
}

/// Unwraps `{"centers": {...}}` style replies.
fn unwrap_single(obj: &Map<String, Value>, key: &str, cx: &mut Ctx) -> Value {
    if obj.len() == 1 {
        if let Some(inner) = field(obj, key) {
            if inner.is_object() || inner.is_array() {
                cx.warn(Warning::Unwrapped);
                return inner.clone();
            }
        }
    }
    Value::Object(obj.clone())
}

/// Parses an index-keyed object (or a plain array, keyed by position).
fn keyed<T>(
    v: &Value,
    path: &str,
    mut f: impl FnMut(&mut Ctx, &Value, &str) -> R<T>,
    cx: &mut Ctx,
) -> R<BTreeMap<String, T>> {
    match v {
        Value::Object(o) => o.iter().map(|(k, v)| Ok((k.trim().to_string(), f(cx, v, path)?))).collect(),
        Value::Array(a) => {
            cx.warn(Warning::Unwrapped);
            a.iter().enumerate().map(|(i, v)| Ok((i.to_string(), f(cx, v, path)?))).collect()
        }
        _ => mismatch(path),
    }
}

/// `[[x_lo, y_lo], [x_hi, y_hi]]`, or `{"x": [..], "y": [..]}`.
fn area(cx: &mut Ctx, v: &Value, path: &str) -> R<BoundingBox> {
    match v {
        Value::Array(a) if a.len() == 2 => {
            let lo = cx.point(&a[0], path)?;
            let hi = cx.point(&a[1], path)?;
            let (x, sx) = Interval::normalized(lo.x, hi.x).or_else(|_| mismatch(path))?;
            let (y, sy) = Interval::normalized(lo.y, hi.y).or_else(|_| mismatch(path))?;
            if sx || sy {
                cx.warn(Warning::SwappedInterval);
            }
            Ok(BoundingBox::new(x, y))
        }
        Value::Object(o) => match (field(o, "x"), field(o, "y")) {
            (Some(x), Some(y)) => Ok(BoundingBox::new(cx.interval(x, path)?, cx.interval(y, path)?)),
            _ => mismatch(path),
        },
        _ => mismatch(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::extract_json;
    use crate::sample::Family;

    fn task(f: Family, k: TaskKind) -> Task {
        Task::new(f, k).unwrap()
    }

    fn parse(f: Family, k: TaskKind, raw: &str) -> R<ParsedAnswer> {
        parse_answer(&task(f, k), &extract_json(raw)?)
    }

    #[test]
    fn empty_missing_data_is_none() {
        let p = parse(Family::Series, TaskKind::MissingData, "```json\n{}\n```").unwrap();
        assert_eq!(p.answer, TaskAnswer::MissingData { interval: None });
        let p = parse(Family::Series, TaskKind::MissingData, r#"{"missing_data": [9, 3]}"#).unwrap();
        assert_eq!(
            p.answer,
            TaskAnswer::MissingData {
                interval: Some(Interval::new(3.0, 9.0).unwrap())
            }
        );
        assert!(p.warnings.contains(&Warning::SwappedInterval));
    }

    #[test]
    fn approximate_truncates_and_sorts() {
        let pts: Vec<String> = (0..11).rev().map(|i| format!("[{i}, {}]", i * 2)).collect();
        let raw = format!("{{\"points\": [{}]}}", pts.join(","));
        let p = parse(Family::Series, TaskKind::Approximate, &raw).unwrap();
        let TaskAnswer::PointList { points } = &p.answer else { panic!() };
        assert_eq!(points.len(), 10);
        assert_eq!(points[0].x, 1.0);
        assert_eq!(points[9].x, 10.0);
        assert!(p.warnings.contains(&Warning::TruncatedPoints));
        assert!(p.warnings.contains(&Warning::SortedPoints));
    }

    #[test]
    fn centers_map() {
        let p = parse(Family::Clusters, TaskKind::Centers, r#"{"0":[1,2],"1":[3,4]}"#).unwrap();
        let TaskAnswer::CenterMap { centers } = &p.answer else { panic!() };
        assert_eq!(centers.len(), 2);
        assert_eq!(centers["1"], Point2D::new(3.0, 4.0));
        assert!(parse(Family::Clusters, TaskKind::Centers, "{}").is_err());
    }

    #[test]
    fn coercion_and_labels() {
        let p = parse(Family::Histogram, TaskKind::BelowXValuePercent, r#"{"percentage_below": "37.5%"}"#).unwrap();
        assert_eq!(p.answer, TaskAnswer::Percent { value: 37.5 });
        assert!(p.warnings.contains(&Warning::CoercedNumber));
        let p = parse(Family::Histogram, TaskKind::Distributions, r#"{"distribution": "skew left"}"#).unwrap();
        assert_eq!(p.answer, TaskAnswer::Distribution { label: "SKEW_LEFT".into() });
        let p = parse(Family::Boxplot, TaskKind::Medians, r#"{"highest_median_x": "3", "lowest_median_x": "n/a"}"#).unwrap();
        assert_eq!(p.answer, TaskAnswer::ExtremeIndices { high: Some(3.0), low: None });
    }

    #[test]
    fn structural_mismatch() {
        assert!(matches!(
            parse(Family::Series, TaskKind::MinMaxInterval, r#"{"max": 3}"#),
            Err(PromptError::SchemaMismatch(_))
        ));
        assert!(parse(Family::Histogram, TaskKind::Monotonicity, r#"{"increasing": []}"#).is_err());
    }

    #[test]
    fn cluster_area_template_shape() {
        let raw = "{\n  '0': [[1, 2],\n    [3, 4]],\n}";
        let p = parse(Family::Clusters, TaskKind::ClustersArea, raw).unwrap();
        let TaskAnswer::AreaMap { areas } = &p.answer else { panic!() };
        assert_eq!(areas["0"].x, Interval::new(1.0, 3.0).unwrap());
        assert_eq!(areas["0"].y, Interval::new(2.0, 4.0).unwrap());
    }

    #[test]
    fn empty_anomaly_range() {
        let p = parse(Family::Histogram, TaskKind::Anomalies, r#"{"anomalies_range": []}"#).unwrap();
        assert_eq!(p.answer, TaskAnswer::AnomalyRange { interval: None });
    }
}
