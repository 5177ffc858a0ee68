//! Exit criteria for the benchmark. Prints one PASS/FAIL line per criterion
//! and exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use plotbench::augment::{add_noise, overlay, AugmentKind};
use plotbench::clients::{oracle_typed, BaselineClient, BaselineKind, Client, OracleClient, ScriptedClient};
use plotbench::generators::{gen_blobs, Distribution, HistAnomaly, HistAnomalyKind, HistogramMetadata, MultiFamily, MultiSeriesMetadata, SeriesGenerator, SeriesMetadata, SingleSeries};
use plotbench::geometry::{iou, BoundingBox, Interval, Point2D};
use plotbench::harness::*;
use plotbench::prompts::{Task, TaskAnswer, TaskKind};
use plotbench::render::{encode_png, render, RenderConfig};
use plotbench::sample::{Family, Split};
use plotbench::scoring::*;
use plotbench::seed::Seed;
use plotbench::stats::SeriesStats;

const UNIT_TOL: f64 = 1e-9;
const UNIT_BUDGET: Duration = Duration::from_secs(5);
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const DESK_BUDGET: Duration = Duration::from_secs(60);
const MATCHING_INSTANCES: usize = 1000;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new(ok: bool, detail: impl Into<String>) -> Check {
        Check { ok, detail: detail.into() }
    }
}

/// Collects named sub-checks; the criterion passes when all of them do.
#[derive(Default)]
struct Tally {
    failures: Vec<String>,
    n: usize,
}

impl Tally {
    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.n += 1;
        if !ok {
            self.failures.push(name.into());
        }
    }

    fn close(&mut self, name: &str, got: f64, want: f64) {
        let ok = (got - want).abs() <= UNIT_TOL;
        self.check(format!("{name}: got {got}, want {want}"), ok);
    }

    fn finish(self, extra: &str) -> Check {
        if self.failures.is_empty() {
            Check::new(true, format!("{} checks{extra}", self.n))
        } else {
            Check::new(false, format!("{} of {} checks failed{extra}: {}", self.failures.len(), self.n, self.failures.join("; ")))
        }
    }
}

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn bx(x0: f64, x1: f64, y0: f64, y1: f64) -> BoundingBox {
    BoundingBox::new(iv(x0, x1), iv(y0, y1))
}

fn unit_hist(counts: &[u64]) -> HistogramMetadata {
    HistogramMetadata {
        distribution: Distribution::Uniform,
        dist_params: BTreeMap::new(),
        values: counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat(i as f64 + 0.5).take(c as usize))
            .collect(),
        bin_edges: (0..=counts.len()).map(|i| i as f64).collect(),
        bin_counts: counts.to_vec(),
        anomaly: None,
        below_x_threshold: 0.0,
    }
}

fn multi(series: Vec<Vec<f64>>) -> MultiSeriesMetadata {
    let series: Vec<SingleSeries> = series
        .into_iter()
        .enumerate()
        .map(|(i, values)| SingleSeries {
            position: i + 1,
            generator: SeriesGenerator::Normal,
            values,
        })
        .collect();
    MultiSeriesMetadata {
        family: MultiFamily::Boxplot,
        generator: SeriesGenerator::Normal,
        per_series_stats: series.iter().map(|s| SeriesStats::of(&s.values)).collect(),
        series,
    }
}

/// Length of the union of intervals, measured on a fine grid.
fn grid_jaccard(a: &[Interval], b: &[Interval], lo: f64, hi: f64) -> f64 {
    let n = 400_000;
    let (mut inter, mut uni) = (0usize, 0usize);
    for k in 0..n {
        let x = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        let (ia, ib) = (a.iter().any(|i| i.contains(x)), b.iter().any(|i| i.contains(x)));
        inter += (ia && ib) as usize;
        uni += (ia || ib) as usize;
    }
    inter as f64 / uni as f64
}

fn metric_unit_suite() -> Check {
    let start = Instant::now();
    let mut t = Tally::default();

    let s = SeriesMetadata::from_points(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 2.0, 3.0, 10.0]).unwrap();
    t.close("min/max tight", score_min_max(&s, &iv(0.0, 0.0), &iv(4.0, 4.0)).value, 1.0);
    t.close("min/max whole domain", score_min_max(&s, &iv(0.0, 4.0), &iv(0.0, 4.0)).value, 0.0);
    let m = 3.0 + 5.0 / 7.0;
    t.close(
        "min/max worked example",
        score_min_max(&s, &iv(1.0, 1.0), &iv(m - 0.1, m + 0.1)).value,
        1.0 - (1.0 + 4.0) / (10.24 + 46.24),
    );

    let xs: Vec<f64> = (0..40).map(f64::from).collect();
    let knots = [(0.0, 2.0), (13.0, -4.0), (30.0, 6.0), (39.0, 1.0)];
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let w = knots.windows(2).find(|w| x <= w[1].0).unwrap();
            w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / (w[1].0 - w[0].0)
        })
        .collect();
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let pl = SeriesMetadata::from_points(xs, ys).unwrap();
    let kp: Vec<Point2D> = knots.iter().map(|&(x, y)| Point2D::new(x, y)).collect();
    t.close("approximate exact knots", score_approximation(&pl, &kp).value, 1.0);
    t.close(
        "approximate flat mean",
        score_approximation(&pl, &[Point2D::new(0.0, ybar), Point2D::new(39.0, ybar)]).value,
        0.0,
    );
    let s3 = SeriesMetadata::from_points(vec![0.0, 2.0, 4.0], vec![0.0, 2.0, 4.0]).unwrap();
    t.close(
        "approximate clamp",
        score_approximation(&s3, &[Point2D::new(0.0, 0.0), Point2D::new(2.0, 2.0)]).value,
        1.0 - 4.0 / 8.0,
    );

    let dom = iv(0.0, 10.0);
    t.close("anomalies exact", score_pointwise_anomalies(&[2.0, 8.0], &[2.0, 8.0], &dom).value, 1.0);
    t.close("anomalies at middle", score_pointwise_anomalies(&[2.0, 8.0], &[5.0, 5.0], &dom).value, 0.0);
    t.close("anomalies worked example", score_pointwise_anomalies(&[2.0, 8.0], &[3.0, 8.0], &dom).value, 1.0 - 1.0 / 18.0);

    t.close("missing equal", score_missing(Some(&iv(0.0, 10.0)), Some(&iv(0.0, 10.0))).value, 1.0);
    t.close("missing both absent", score_missing(None, None).value, 1.0);
    t.close("missing overlap", score_missing(Some(&iv(0.0, 10.0)), Some(&iv(5.0, 15.0))).value, 5.0 / 15.0);

    let gt = [bx(0.0, 1.0, 0.0, 1.0), bx(5.0, 6.0, 5.0, 6.0)];
    t.close("areas exact", score_cluster_areas(&gt, &gt).value, 1.0);
    t.close("areas disjoint", score_cluster_areas(&gt, &[bx(20.0, 21.0, 20.0, 21.0)]).value, 0.0);
    t.close("areas half matched", score_cluster_areas(&gt, &[bx(0.5, 1.5, 0.0, 1.0)]).value, (0.5 / 1.5) / 2.0);

    let g = [Point2D::new(0.0, 0.0), Point2D::new(10.0, 0.0)];
    let c = Point2D::new(5.0, 0.0);
    t.close("centers exact", score_centers(&g, &g, &c).value, 1.0);
    t.close("centers at plot center", score_centers(&g, &[c, c], &c).value, 0.0);
    t.close(
        "centers worked example",
        score_centers(&g, &[Point2D::new(1.0, 0.0), Point2D::new(10.0, 0.0)], &c).value,
        (10.0 - 1.0) / 10.0,
    );

    let side = iv(0.0, 100.0);
    let cm = gen_blobs(Seed(7), 3, &[40, 25, 15], &[2.0, 2.0, 2.0], BoundingBox::new(side, side)).unwrap();
    let isolated = cm
        .points
        .iter()
        .zip(&cm.true_labels)
        .all(|(p, &l)| l == cm.biggest_label || !cm.biggest_box().contains(p));
    t.check("biggest fixture is isolated", isolated);
    t.close("biggest minimal box", score_biggest_cluster(&cm, &cm.biggest_box()).value, 1.0);
    t.close("biggest empty box", score_biggest_cluster(&cm, &bx(-9.0, -9.0, -9.0, -9.0)).value, 1.0 / 3.0);
    let all = BoundingBox::enclosing(cm.points.iter()).unwrap();
    let big: Vec<&Point2D> = cm.points.iter().zip(&cm.true_labels).filter(|(_, &l)| l == cm.biggest_label).map(|(p, _)| p).collect();
    let ext = |f: fn(&Point2D) -> f64| big.iter().map(|p| f(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
    let ((x0, x1), (y0, y1)) = (ext(|p| p.x), ext(|p| p.y));
    let (px0, px1) = cm.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x), a.1.max(p.x)));
    let (py0, py1) = cm.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.y), a.1.max(p.y)));
    let want = (1.0 + (x1 - x0) * (y1 - y0) / ((px1 - px0) * (py1 - py0)) + big.len() as f64 / cm.points.len() as f64) / 3.0;
    t.close("biggest whole plot", score_biggest_cluster(&cm, &all).value, want);

    t.close("distribution equal", check_distribution(Distribution::Normal, "NORMAL").value, 1.0);
    t.close("distribution skew as exponential", check_distribution(Distribution::SkewRight, "EXPONENTIAL").value, 1.0);
    t.close("distribution wrong", check_distribution(Distribution::Normal, "UNIFORM").value, 0.0);

    let h = unit_hist(&[5, 1, 1, 9]);
    t.close("bins exact", score_min_max_bins(&h, &h.min_bins(), &h.max_bins()).value, 1.0);
    t.close("bins one side", score_min_max_bins(&h, &[iv(10.0, 11.0)], &h.max_bins()).value, 0.5);
    let (amin, amax) = ([iv(1.0, 2.0)], [iv(3.0, 4.0)]);
    let grid = (grid_jaccard(&amin, &[iv(1.0, 3.0)], 0.0, 4.0) + grid_jaccard(&amax, &[iv(3.0, 4.0)], 0.0, 4.0)) / 2.0;
    t.check(format!("bins grid oracle {grid}"), (grid - 0.75).abs() < 1e-4);
    t.close("bins worked example", score_min_max_bins(&h, &amin, &amax).value, 0.75);

    let mh = unit_hist(&[1, 2, 3, 4, 3, 2, 1]);
    let inc = [iv(0.0, 4.0), iv(0.0, 2.0)];
    t.close("monotonicity all", score_monotonicity(&mh, &inc, &[iv(3.0, 7.0), iv(4.0, 6.0)]).value, 1.0);
    t.close("monotonicity 3 of 4", score_monotonicity(&mh, &inc, &[iv(3.0, 7.0), iv(0.0, 3.0)]).value, 3.0 / 4.0);
    t.close("monotonicity none", score_monotonicity(&mh, &[], &[]).value, 0.0);

    let mut bh = unit_hist(&[1; 100]);
    bh.below_x_threshold = 40.0;
    t.close("below-x exact", score_below_x(&bh, 40.0).value, 1.0);
    t.close("below-x off by ten", score_below_x(&bh, 30.0).value, 0.9);
    bh.below_x_threshold = 0.0;
    t.close("below-x maximal error", score_below_x(&bh, 100.0).value, 0.0);

    let mut ah = unit_hist(&[3; 10]);
    t.close("hist anomaly absent vs present", score_hist_anomaly(&ah, Some(&iv(0.0, 1.0))).value, 0.0);
    ah.anomaly = Some(HistAnomaly {
        kind: HistAnomalyKind::RemovedBins,
        range: iv(5.0, 6.0),
    });
    t.close("hist anomaly exact", score_hist_anomaly(&ah, Some(&iv(5.0, 6.0))).value, 1.0);
    t.close("hist anomaly radius", score_hist_anomaly(&ah, Some(&iv(6.0, 7.0))).value, 2.0 / 4.0);

    let mm = multi(vec![vec![1.0, 2.0, 3.0], vec![10.0, 10.0, 10.0], vec![1.0, 5.0, 9.0]]);
    t.close("extremes both", score_extreme_indices(&mm, ExtremeKey::Median, Some(2.0), Some(1.0)).value, 1.0);
    t.close("extremes one", score_extreme_indices(&mm, ExtremeKey::Median, Some(2.0), Some(3.0)).value, 0.5);
    t.close("extremes none", score_extreme_indices(&mm, ExtremeKey::Median, Some(1.0), Some(3.0)).value, 0.0);

    let took = start.elapsed();
    t.check(format!("runtime {took:?} over {UNIT_BUDGET:?}"), took < UNIT_BUDGET);
    t.finish(&format!(" in {took:.2?}"))
}

/// Regular-split dataset with 50 samples per family, seed 42.
fn saturation_dataset(root: &Path) -> Dataset {
    let mut cfg = DatasetConfig::uniform(50);
    cfg.splits = vec![Split::Regular];
    generate_dataset(&cfg, 42, &root.join("saturation")).unwrap();
    load_dataset(&root.join("saturation")).unwrap()
}

fn task_means(records: &[plotbench::scoring::ScoreRecord]) -> BTreeMap<(Family, TaskKind), f64> {
    let mut acc: BTreeMap<(Family, TaskKind), (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry((r.family, r.task)).or_default();
        e.0 += r.score;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Piecewise-linear series with `k` random knots on a dense grid.
fn piecewise_fixture(seed: Seed, k: usize) -> SeriesMetadata {
    let mut rng = seed.rng();
    let n = 300;
    let mut knot_x: Vec<usize> = (1..n - 1).collect();
    for i in (1..knot_x.len()).rev() {
        knot_x.swap(i, rng.random_range(0..=i));
    }
    let mut kx: Vec<usize> = knot_x[..k - 2].to_vec();
    kx.push(0);
    kx.push(n - 1);
    kx.sort_unstable();
    let ky: Vec<f64> = kx.iter().map(|_| rng.random_range(-50.0..50.0)).collect();
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
    let ys: Vec<f64> = (0..n)
        .map(|i| {
            let j = kx.partition_point(|&k| k <= i).clamp(1, kx.len() - 1);
            let (a, b) = (kx[j - 1], kx[j]);
            ky[j - 1] + (ky[j] - ky[j - 1]) * (i - a) as f64 / (b - a) as f64
        })
        .collect();
    SeriesMetadata::from_points(xs, ys).unwrap()
}

fn oracle_saturation(root: &Path, ds: &Dataset) -> Check {
    let start = Instant::now();
    let mut t = Tally::default();
    let opts = RunOptions { repeats: 1, retry_failed: false };
    let summary = run_benchmark(ds, &[&OracleClient], &opts, &root.join("saturation-runs")).unwrap();
    let records = score_run(&summary.run_dir, ds).unwrap();
    let took = start.elapsed();
    let means = task_means(&records);
    let get = |f, k| means.get(&(f, k)).copied().unwrap_or(f64::NAN);
    let exact = [
        (Family::Series, TaskKind::MissingData),
        (Family::Series, TaskKind::PointwiseAnomalies),
        (Family::Clusters, TaskKind::ClustersArea),
        (Family::Clusters, TaskKind::Centers),
        (Family::Histogram, TaskKind::Distributions),
        (Family::Histogram, TaskKind::MinMaxBins),
        (Family::Histogram, TaskKind::Monotonicity),
        (Family::Boxplot, TaskKind::Medians),
        (Family::Boxplot, TaskKind::IqrRanges),
        (Family::Boxplot, TaskKind::OverallRanges),
        (Family::Violin, TaskKind::Medians),
        (Family::Violin, TaskKind::IqrRanges),
        (Family::Violin, TaskKind::OverallRanges),
    ];
    for (f, k) in exact {
        let v = get(f, k);
        t.check(format!("{f}/{k} mean {v} != 1"), (v - 1.0).abs() <= UNIT_TOL);
    }
    let floors = [
        (Family::Clusters, TaskKind::BiggestCluster, 0.99),
        (Family::Histogram, TaskKind::BelowXValuePercent, 0.995),
        (Family::Series, TaskKind::MinMaxInterval, 0.99),
    ];
    for (f, k, floor) in floors {
        let v = get(f, k);
        t.check(format!("{f}/{k} mean {v:.5} below {floor}"), v >= floor);
    }
    let walk_min = records
        .iter()
        .filter(|r| r.task == TaskKind::Approximate)
        .map(|r| r.score)
        .fold(f64::INFINITY, f64::min);
    t.check(format!("approximate on walks min {walk_min} not > 0"), walk_min > 0.0);
    t.check(format!("{} records, expected {}", records.len(), 50 * 18), records.len() == 50 * 18);

    let task = Task::new(Family::Series, TaskKind::Approximate).unwrap();
    let mut worst = 1.0f64;
    for i in 0..50u64 {
        let s = piecewise_fixture(Seed(1000 + i), 2 + (i as usize % 9));
        let meta = plotbench::sample::SampleMetadata::Series(s.clone());
        let TaskAnswer::PointList { points } = oracle_typed(&task, &meta).unwrap() else {
            unreachable!()
        };
        worst = worst.min(score_approximation(&s, &points).value);
    }
    t.check(format!("approximate on piecewise fixtures min {worst}"), (worst - 1.0).abs() <= UNIT_TOL);
    t.check(format!("runtime {took:?} over {ORACLE_BUDGET:?}"), took < ORACLE_BUDGET);

    let detail = format!(
        " in {took:.1?}; biggest {:.4}, min/max {:.4}, below-x {:.4}",
        get(Family::Clusters, TaskKind::BiggestCluster),
        get(Family::Series, TaskKind::MinMaxInterval),
        get(Family::Histogram, TaskKind::BelowXValuePercent)
    );
    t.finish(&detail)
}

fn baseline_calibration(root: &Path, ds: &Dataset) -> Check {
    let mut t = Tally::default();
    let x_mean = BaselineClient::new(BaselineKind::XMean);
    let center = BaselineClient::new(BaselineKind::PlotCenter);
    let clients: [&dyn Client; 2] = [&x_mean, &center];
    let summary = run_benchmark(ds, &clients, &RunOptions { repeats: 1, retry_failed: false }, &root.join("baseline-runs")).unwrap();
    let records = score_run(&summary.run_dir, ds).unwrap();
    let mut n_anom = 0;
    for r in records.iter().filter(|r| r.client_name == x_mean.name() && r.task == TaskKind::PointwiseAnomalies) {
        let s = ds.record(&r.sample_id).unwrap().metadata.as_series().unwrap();
        if s.anomalies_x.is_empty() {
            continue;
        }
        n_anom += 1;
        t.check(format!("x_mean {} scored {}", r.sample_id, r.score), r.score.abs() <= UNIT_TOL);
    }
    let mut n_cent = 0;
    for r in records.iter().filter(|r| r.client_name == center.name() && r.task == TaskKind::Centers) {
        n_cent += 1;
        t.check(format!("plot_center {} scored {}", r.sample_id, r.score), r.score.abs() <= UNIT_TOL);
    }
    t.check("no anomaly samples", n_anom > 0);
    t.check("no cluster samples", n_cent == 50);
    t.finish(&format!(" ({n_anom} anomaly samples, {n_cent} cluster samples)"))
}

fn negative_fidelity(root: &Path) -> Check {
    let mut t = Tally::default();
    let mut cfg = DatasetConfig::uniform(2);
    cfg.splits = vec![Split::Regular];
    generate_dataset(&cfg, 8, &root.join("negative")).unwrap();
    let ds = load_dataset(&root.join("negative")).unwrap();
    let wild = ScriptedClient::new("off-scale", |q| match q.task.kind {
        TaskKind::Approximate => {
            let s = q.record.metadata.as_series().unwrap();
            let d = s.x_domain();
            Ok(format!("{{\"points\": [[{}, 1e7], [{}, -1e7]]}}", d.lo(), d.hi()))
        }
        _ => Ok(String::new()),
    });
    let summary = run_benchmark(&ds, &[&wild], &RunOptions { repeats: 1, retry_failed: false }, &root.join("negative-runs")).unwrap();
    let records = score_run(&summary.run_dir, &ds).unwrap();
    let rep = report(&records).unwrap();
    let series_mean = rep.summary[0]
        .family_means
        .iter()
        .find(|(f, _)| *f == Family::Series)
        .and_then(|(_, m)| *m)
        .unwrap_or(f64::NAN);
    t.check(format!("series mean {series_mean} not negative"), series_mean < 0.0);
    let md = render_report_markdown(&rep);
    let shown = format!("{series_mean:.4}");
    t.check(format!("markdown lacks {shown}"), md.contains(&shown));
    let csv = render_report_csv(&rep);
    t.check("csv lacks a negative series value", csv.lines().any(|l| l.contains("series") && l.contains(",-")));
    t.finish(&format!(" (series mean {series_mean:.4e})"))
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plotbench"))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = cli().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)))
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn only_subdir(dir: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    assert_eq!(dirs.len(), 1, "expected one run under {}", dir.display());
    dirs.into_iter().next().unwrap()
}

fn determinism(root: &Path) -> Check {
    let mut t = Tally::default();
    let (a, b) = (root.join("det-a"), root.join("det-b"));
    for d in [&a, &b] {
        if let Err(e) = run_cli(&["generate", "--seed", "17", "--out", d.to_str().unwrap()]) {
            return Check::new(false, e);
        }
    }
    let (ta, tb) = (tree(&a), tree(&b));
    let pngs = ta.keys().filter(|p| p.extension().is_some_and(|e| e == "png")).count();
    t.check(format!("{pngs} PNGs, expected 50"), pngs == 50);
    t.check("manifests differ", ta.get(Path::new("manifest.json")) == tb.get(Path::new("manifest.json")));
    t.check("dataset trees differ", ta == tb);

    let runs = root.join("det-runs");
    let steps: [&[&str]; 1] = [&["run", "--dataset", a.to_str().unwrap(), "--client", "oracle", "--client", "baseline:random", "--repeats", "2", "--out", runs.to_str().unwrap()]];
    for s in steps {
        if let Err(e) = run_cli(s) {
            return Check::new(false, e);
        }
    }
    let run = only_subdir(&runs);
    let mut scored = Vec::new();
    for _ in 0..2 {
        if let Err(e) = run_cli(&["score", "--run", run.to_str().unwrap()]) {
            return Check::new(false, e);
        }
        scored.push(std::fs::read(run.join(SCORES_FILE)).unwrap());
    }
    t.check("re-scoring changed scores.json", scored[0] == scored[1]);
    t.finish(&format!(" ({} files compared)", ta.len()))
}

fn augmentation_contracts(root: &Path) -> Check {
    let mut t = Tally::default();
    let mut cfg = DatasetConfig::uniform(10);
    cfg.splits = vec![Split::Augmented];
    generate_dataset(&cfg, 23, &root.join("augmented")).unwrap();
    let ds = load_dataset(&root.join("augmented")).unwrap();
    let mut kinds = BTreeSet::new();
    let mut angles = 0;
    for r in &ds.manifest.samples {
        let Some(a) = &r.augmentation else {
            t.check(format!("{} has no augmentation", r.id), false);
            continue;
        };
        kinds.insert(a.kind.display_name());
        if let Some(deg) = a.angle_deg {
            angles += 1;
            t.check(format!("angle {deg} outside (-60, 60)"), deg > -60.0 && deg < 60.0);
        }
        let pristine = render(
            &r.metadata,
            &RenderConfig {
                width_px: cfg.width,
                height_px: cfg.height,
                scale: 1.0,
                style: r.style.clone(),
            },
        )
        .unwrap()
        .image;
        let again = encode_png(&a.apply(&pristine).unwrap()).unwrap();
        t.check(format!("{} does not replay", r.id), again == ds.read_image(r).unwrap());

        if r.family == Family::Series {
            t.check("alpha 0 noise is not identity", add_noise(&pristine, 0.0, Seed(5)).unwrap() == pristine);
            let (out, spec) = overlay(&pristine, r.seed.child("overlay-check")).unwrap();
            let [ox, oy] = spec.position_px;
            let outside_same = out.enumerate_pixels().all(|(x, y, p)| {
                let inside = x >= ox && x < ox + spec.size_px && y >= oy && y < oy + spec.size_px;
                inside || p == pristine.get_pixel(x, y)
            });
            t.check("overlay touched pixels outside its box", outside_same);
        }
    }
    t.check(format!("augment kinds seen: {kinds:?}"), kinds.len() == AugmentKind::ALL.len());
    for i in 0..2000u64 {
        let img = image::RgbImage::new(64, 48);
        let (_, rec) = plotbench::augment::random_augment(&img, Seed(i), &[AugmentKind::Rotate]).unwrap();
        let deg = rec.angle_deg.unwrap();
        t.check(format!("drawn angle {deg} outside (-60, 60)"), deg > -60.0 && deg < 60.0);
    }
    t.finish(&format!(" ({} samples, {angles} rotated)", ds.manifest.samples.len()))
}

/// Best total IoU over every one-to-one assignment of ground truth to predictions.
fn best_assignment(gt: &[BoundingBox], pred: &[BoundingBox]) -> f64 {
    fn go(i: usize, gt: &[BoundingBox], pred: &[BoundingBox], used: &mut Vec<bool>) -> f64 {
        if i == gt.len() {
            return 0.0;
        }
        let mut best = go(i + 1, gt, pred, used);
        for j in 0..pred.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(iou(&gt[i], &pred[j]) + go(i + 1, gt, pred, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, gt, pred, &mut vec![false; pred.len()])
}

fn matching_equivalence() -> Check {
    let mut rng = Seed(2024).rng();
    let mut mismatches = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..MATCHING_INSTANCES {
        let n = rng.random_range(2..=4);
        let samples: Vec<usize> = (0..n).map(|_| rng.random_range(20..80)).collect();
        let stds: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..4.0)).collect();
        let side = iv(0.0, 100.0);
        let cm = gen_blobs(Seed(rng.random()), n, &samples, &stds, BoundingBox::new(side, side)).unwrap();
        let gt = cm.cluster_boxes();
        let m = rng.random_range(1..=4);
        let pred: Vec<BoundingBox> = (0..m)
            .map(|_| {
                let g = gt[rng.random_range(0..gt.len())];
                let (w, h) = (g.x.length().max(1.0), g.y.length().max(1.0));
                let mut j = |v: f64, s: f64| v + rng.random_range(-0.5..0.5) * s;
                let (a, b) = (j(g.x.lo(), w), j(g.x.hi(), w));
                let (c, d) = (j(g.y.lo(), h), j(g.y.hi(), h));
                BoundingBox::new(iv(a.min(b), a.max(b)), iv(c.min(d), c.max(d)))
            })
            .collect();
        let greedy = score_cluster_areas(&gt, &pred).value;
        let optimal = best_assignment(&gt, &pred) / gt.len() as f64;
        let gap = optimal - greedy;
        worst = worst.max(gap);
        if gap.abs() > UNIT_TOL {
            mismatches.push(i);
        }
    }
    if mismatches.is_empty() {
        Check::new(true, format!("{MATCHING_INSTANCES} instances agree"))
    } else {
        Check::new(
            false,
            format!(
                "{} of {MATCHING_INSTANCES} instances differ, largest shortfall {worst:.4}, first at {:?}",
                mismatches.len(),
                &mismatches[..mismatches.len().min(5)]
            ),
        )
    }
}

fn report_structure(root: &Path) -> Check {
    let mut t = Tally::default();
    let mut cfg = DatasetConfig::uniform(1);
    cfg.splits = vec![Split::Regular];
    cfg.counts.insert(Family::Clusters, 200);
    generate_dataset(&cfg, 42, &root.join("features")).unwrap();
    let ds = load_dataset(&root.join("features")).unwrap();
    let random = BaselineClient::new(BaselineKind::Random(Seed(4)));
    let clients: [&dyn Client; 2] = [&OracleClient, &random];
    let summary = run_benchmark(&ds, &clients, &RunOptions { repeats: 1, retry_failed: false }, &root.join("report-runs")).unwrap();
    let records = score_run(&summary.run_dir, &ds).unwrap();
    let rep = report(&records).unwrap();
    t.check("summary rows", rep.summary.len() == 2);
    t.check(
        "summary columns",
        rep.summary
            .iter()
            .all(|r| r.family_means.iter().map(|(f, _)| *f).collect::<Vec<_>>() == Family::ALL.to_vec()),
    );
    let md = render_report_markdown(&rep);
    t.check("summary header", md.contains("| Model | Clustering | Histograms | Series | Boxplots | Violins |"));
    let body_rows = md
        .lines()
        .skip_while(|l| !l.starts_with("| Model | Clustering"))
        .skip(2)
        .take_while(|l| l.starts_with('|'))
        .count();
    t.check(format!("summary body has {body_rows} rows"), body_rows == 2);

    let tables = analyze_features(&records);
    let Some(clusters) = tables.iter().find(|t| t.family == Family::Clusters && t.split == Split::Regular) else {
        return Check::new(false, "no regular clustering feature table");
    };
    let labels: BTreeSet<&str> = clusters.rows.iter().map(|r| r.label.as_str()).collect();
    let mut expected: Vec<String> = (2..=7).map(|n| format!("{n} Centers")).collect();
    expected.extend(["DBSCAN", "One Cluster", "Mean Shift", "K-Means"].map(|a| format!("{a} Algorithm")));
    expected.extend((2..=7).map(|n| format!("Algorithm Parameters: n_clusters={n}")));
    for b in ["False", "True"] {
        expected.push(format!("Unique Markers: {b}"));
        expected.push(format!("Legend: {b}"));
        expected.push(format!("Fill Clusters: {b}"));
    }
    for e in &expected {
        t.check(format!("missing row '{e}'"), labels.contains(e.as_str()));
    }
    t.finish(&format!(" ({} clustering rows)", clusters.rows.len()))
}

fn desk_run(root: &Path) -> Check {
    let mut t = Tally::default();
    let start = Instant::now();
    let (ds, runs) = (root.join("desk"), root.join("desk-runs"));
    let steps: [Vec<&str>; 2] = [
        vec!["generate", "--seed", "42", "--out", ds.to_str().unwrap()],
        vec!["run", "--dataset", ds.to_str().unwrap(), "--client", "oracle", "--repeats", "3", "--out", runs.to_str().unwrap()],
    ];
    for s in &steps {
        if let Err(e) = run_cli(s) {
            return Check::new(false, e);
        }
    }
    let run = only_subdir(&runs);
    for cmd in ["score", "report", "analyze"] {
        if let Err(e) = run_cli(&[cmd, "--run", run.to_str().unwrap()]) {
            return Check::new(false, e);
        }
    }
    let took = start.elapsed();
    for p in [ds.join("manifest.json"), run.join(RUN_MANIFEST_FILE), run.join(RESPONSES_FILE), run.join(SCORES_FILE)] {
        t.check(format!("missing {}", p.display()), p.is_file());
    }
    for f in ["report.md", "report.csv", "features.md", "features.csv"] {
        t.check(format!("missing {f}"), run.join(f).is_file());
    }
    let responses = std::fs::read_to_string(run.join(RESPONSES_FILE)).map(|s| s.lines().count()).unwrap_or(0);
    t.check(format!("{responses} responses, expected 540"), responses == 540);
    t.check(format!("runtime {took:?} over {DESK_BUDGET:?}"), took < DESK_BUDGET);
    t.finish(&format!(" in {took:.1?}"))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(c) => c,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Check::new(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut dataset = None;
    let mut criteria: Vec<(&str, Check)> = Vec::new();

    criteria.push(("1 metric unit suite", guarded(metric_unit_suite)));
    criteria.push((
        "2 oracle saturation",
        guarded(|| {
            let ds = saturation_dataset(root);
            let c = oracle_saturation(root, &ds);
            dataset = Some(ds);
            c
        }),
    ));
    let ds = dataset.as_ref();
    criteria.push((
        "3 baseline calibration",
        guarded(|| match ds {
            Some(ds) => baseline_calibration(root, ds),
            None => Check::new(false, "no dataset"),
        }),
    ));
    criteria.push(("4 negative score fidelity", guarded(|| negative_fidelity(root))));
    criteria.push(("5 determinism", guarded(|| determinism(root))));
    criteria.push(("6 augmentation contracts", guarded(|| augmentation_contracts(root))));
    criteria.push(("7 matching oracle equivalence", guarded(matching_equivalence)));
    criteria.push((
        "8 report structure",
        guarded(|| report_structure(root)),
    ));
    criteria.push(("9 end-to-end desk run", guarded(|| desk_run(root))));

    let mut failed = 0;
    for (name, c) in &criteria {
        println!("{} {name}: {}", if c.ok { "PASS" } else { "FAIL" }, c.detail);
        failed += usize::from(!c.ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
