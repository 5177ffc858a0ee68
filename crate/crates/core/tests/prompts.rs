use std::collections::BTreeMap;

use proptest::prelude::*;

use plotbench::generators::{Distribution, HistogramMetadata};
use plotbench::geometry::{BoundingBox, Interval, Point2D};
use plotbench::prompts::*;
use plotbench::sample::{Family, SampleMetadata};

fn task(family: Family, kind: TaskKind) -> Task {
    Task::new(family, kind).unwrap()
}

#[test]
fn every_task_has_a_nonempty_template() {
    let mut n = 0;
    for f in Family::ALL {
        for t in Task::for_family(f) {
            assert!(!t.template().trim().is_empty(), "{t}");
            n += 1;
        }
    }
    assert_eq!(n, 18);
}

#[test]
fn distribution_prompt_lists_labels() {
    let p = task(Family::Histogram, TaskKind::Distributions).template();
    for label in ["NORMAL", "UNIFORM", "SKEW_LEFT"] {
        assert!(p.contains(label), "missing {label}");
    }
}

#[test]
fn below_x_prompt_inserts_threshold() {
    let h = HistogramMetadata {
        distribution: Distribution::Normal,
        dist_params: BTreeMap::new(),
        values: vec![1.0, 50.0],
        bin_edges: vec![0.0, 50.0, 100.0],
        bin_counts: vec![1, 1],
        anomaly: None,
        below_x_threshold: 42.0,
    };
    let t = task(Family::Histogram, TaskKind::BelowXValuePercent);
    let p = prompt_for(&t, &SampleMetadata::Histogram(h)).unwrap();
    assert!(p.contains("below 42 on the x-axis"), "{p}");
    assert!(render_prompt(&t, &BTreeMap::new()).is_err());
}

#[test]
fn series_min_max_prompt_asks_for_intervals() {
    assert!(task(Family::Series, TaskKind::MinMaxInterval).template().contains("Respond with intervals"));
}

#[test]
fn templates_without_slots_reject_params() {
    let t = task(Family::Boxplot, TaskKind::Medians);
    let params = BTreeMap::from([("__value__".to_string(), "1".to_string())]);
    assert!(matches!(render_prompt(&t, &params), Err(PromptError::UnexpectedParam(_))));
}

#[test]
fn boxplot_and_violin_share_reply_keys() {
    let b = task(Family::Boxplot, TaskKind::IqrRanges).schema();
    let v = task(Family::Violin, TaskKind::IqrRanges).schema();
    assert_eq!(b, v);
}

#[test]
fn parses_fenced_reply_with_prose() {
    let raw = "Looking at the plot, the answer is:\n```json\n{\"distribution\": \"skew_left\"}\n```\nHope that helps.";
    let p = parse_reply(&task(Family::Histogram, TaskKind::Distributions), raw).unwrap();
    assert_eq!(p.answer, TaskAnswer::Distribution { label: "SKEW_LEFT".into() });
}

#[test]
fn parses_sloppy_json() {
    let raw = "{'max': [3, 4], 'min': [1, 2],} // done";
    let p = parse_reply(&task(Family::Series, TaskKind::MinMaxInterval), raw).unwrap();
    assert_eq!(
        p.answer,
        TaskAnswer::MinMaxIntervals {
            min: Interval::new(1.0, 2.0).unwrap(),
            max: Interval::new(3.0, 4.0).unwrap(),
        }
    );
}

#[test]
fn swapped_interval_is_fixed_with_warning() {
    let p = parse_reply(&task(Family::Series, TaskKind::MinMaxInterval), r#"{"max": [4, 3], "min": [1, 2]}"#).unwrap();
    assert!(p.warnings.contains(&Warning::SwappedInterval));
}

#[test]
fn percent_strings_are_coerced() {
    let p = parse_reply(&task(Family::Histogram, TaskKind::BelowXValuePercent), r#"{"percentage_below": "37.5%"}"#).unwrap();
    assert_eq!(p.answer, TaskAnswer::Percent { value: 37.5 });
}

#[test]
fn missing_json_is_an_error() {
    let r = parse_reply(&task(Family::Histogram, TaskKind::Distributions), "I cannot tell.");
    assert_eq!(r.unwrap_err(), PromptError::NoJsonFound);
}

fn finite() -> impl Strategy<Value = f64> {
    -1.0e6..1.0e6f64
}

fn interval() -> impl Strategy<Value = Interval> {
    (finite(), finite()).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap())
}

fn bbox() -> impl Strategy<Value = BoundingBox> {
    (interval(), interval()).prop_map(|(x, y)| BoundingBox::new(x, y))
}

fn answer() -> impl Strategy<Value = (Task, TaskAnswer)> {
    let s = |k| task(Family::Series, k);
    let c = |k| task(Family::Clusters, k);
    let h = |k| task(Family::Histogram, k);
    prop_oneof![
        (interval(), interval()).prop_map(move |(min, max)| (s(TaskKind::MinMaxInterval), TaskAnswer::MinMaxIntervals { min, max })),
        prop::collection::btree_map(-100_000..100_000i32, finite(), 2..=10).prop_map(move |m| (
            s(TaskKind::Approximate),
            TaskAnswer::PointList {
                points: m.into_iter().map(|(x, y)| Point2D::new(f64::from(x) / 8.0, y)).collect()
            }
        )),
        prop::option::of(interval()).prop_map(move |interval| (s(TaskKind::MissingData), TaskAnswer::MissingData { interval })),
        prop::collection::vec(finite(), 0..6).prop_map(move |xs| (s(TaskKind::PointwiseAnomalies), TaskAnswer::AnomalyXs { xs })),
        prop::collection::vec((finite(), finite()), 1..7).prop_map(move |ps| (
            c(TaskKind::Centers),
            TaskAnswer::CenterMap {
                centers: ps.into_iter().enumerate().map(|(i, (x, y))| (i.to_string(), Point2D::new(x, y))).collect()
            }
        )),
        prop::collection::vec(bbox(), 1..7).prop_map(move |bs| (
            c(TaskKind::ClustersArea),
            TaskAnswer::AreaMap {
                areas: bs.into_iter().enumerate().map(|(i, b)| (i.to_string(), b)).collect()
            }
        )),
        bbox().prop_map(move |bbox| (c(TaskKind::BiggestCluster), TaskAnswer::BiggestBox { bbox })),
        (prop::collection::vec(interval(), 0..4), prop::collection::vec(interval(), 0..4))
            .prop_map(move |(min, max)| (h(TaskKind::MinMaxBins), TaskAnswer::BinRanges { min, max })),
        (prop::collection::vec(interval(), 0..3), prop::collection::vec(interval(), 0..3)).prop_map(move |(increasing, decreasing)| (
            h(TaskKind::Monotonicity),
            TaskAnswer::Monotonicity { increasing, decreasing }
        )),
        (0.0..100.0f64).prop_map(move |value| (h(TaskKind::BelowXValuePercent), TaskAnswer::Percent { value })),
        prop::sample::select(Distribution::ALL.to_vec()).prop_map(move |d| (
            h(TaskKind::Distributions),
            TaskAnswer::Distribution {
                label: d.label().to_string()
            }
        )),
        prop::option::of(interval()).prop_map(move |interval| (h(TaskKind::Anomalies), TaskAnswer::AnomalyRange { interval })),
        (
            prop::sample::select(vec![Family::Boxplot, Family::Violin]),
            prop::sample::select(vec![TaskKind::Medians, TaskKind::IqrRanges, TaskKind::OverallRanges]),
            prop::option::of(1..8u32),
            prop::option::of(1..8u32),
        )
            .prop_map(|(f, k, hi, lo)| (
                task(f, k),
                TaskAnswer::ExtremeIndices {
                    high: hi.map(f64::from),
                    low: lo.map(f64::from),
                }
            )),
    ]
}

proptest! {
    #[test]
    fn replies_round_trip((t, a) in answer()) {
        let reply = a.to_reply(t.kind).unwrap();
        let parsed = parse_reply(&t, &reply).unwrap();
        let blank = matches!(a, TaskAnswer::ExtremeIndices { high, low } if high.is_none() || low.is_none());
        prop_assert_eq!(parsed.answer, a);
        prop_assert!(parsed.warnings.iter().all(|w| blank && *w == Warning::NonNumeric), "{:?}", parsed.warnings);
    }

    #[test]
    fn extraction_never_panics(s in ".{0,200}") {
        let _ = extract_json(&s);
    }

    #[test]
    fn extraction_finds_object_in_prose(pre in "[a-zA-Z .,:!?\n]{0,80}", post in "[a-zA-Z .,:!?\n]{0,80}", v in -1.0e3..1.0e3f64) {
        let obj = serde_json::json!({"percentage_below": v});
        let raw = format!("{pre}{obj}{post}");
        prop_assert_eq!(extract_json(&raw).unwrap(), obj);
    }
}
