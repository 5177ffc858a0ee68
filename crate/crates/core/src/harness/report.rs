use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::prompts::TaskKind;
use crate::sample::{Family, Split};
use crate::scoring::ScoreRecord;
use crate::stats::{mean, variance};

const SPLITS: [Split; 2] = [Split::Regular, Split::Augmented];

/// Statistics of one (client, family, task, split) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub client: String,
    pub family: Family,
    pub task: TaskKind,
    pub split: Split,
    pub mean: f64,
    pub failure_rate: f64,
    pub n: usize,
    /// Variance across repeats of the same question, averaged over samples.
    pub repeat_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySplitMean {
    pub client: String,
    pub family: Family,
    pub split: Split,
    pub mean: f64,
    pub n: usize,
}

/// One row of the overview: a client's mean score per family over every
/// task, split and repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub client: String,
    /// In [`Family::ALL`] order; `None` when the client has no records for
    /// that family.
    pub family_means: Vec<(Family, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub label: String,
    pub key: String,
    pub value: String,
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub family: Family,
    pub split: Split,
    pub rows: Vec<FeatureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub clients: Vec<String>,
    pub summary: Vec<SummaryRow>,
    pub family_split: Vec<FamilySplitMean>,
    pub cells: Vec<ReportCell>,
    pub features: Vec<FeatureTable>,
}

/// Column heading for a task.
pub fn task_heading(task: TaskKind) -> &'static str {
    match task {
        TaskKind::BiggestCluster => "Biggest Cluster",
        TaskKind::Centers => "Centers",
        TaskKind::ClustersArea => "Clusters Area",
        TaskKind::MinMaxInterval => "Min Max Interval",
        TaskKind::Approximate => "Approximate",
        TaskKind::PointwiseAnomalies => "Pointwise Anomalies",
        TaskKind::MissingData => "Missing Data",
        TaskKind::Distributions => "Distributions",
        TaskKind::MinMaxBins => "Min Max Bins",
        TaskKind::Monotonicity => "Monotonicity",
        TaskKind::BelowXValuePercent => "Below x Value Percent",
        TaskKind::Anomalies => "Anomalies",
        TaskKind::Medians => "Medians",
        TaskKind::OverallRanges => "Overall Ranges",
        TaskKind::IqrRanges => "IQR Ranges",
    }
}

fn split_heading(split: Split) -> &'static str {
    match split {
        Split::Regular => "Regular",
        Split::Augmented => "Augmented",
    }
}

fn scores<'a>(records: impl IntoIterator<Item = &'a ScoreRecord>) -> Vec<f64> {
    records.into_iter().map(|r| r.score).collect()
}

fn clients_in_order(records: &[ScoreRecord]) -> Vec<String> {
    let mut seen = Vec::new();
    for r in records {
        if !seen.contains(&r.client_name) {
            seen.push(r.client_name.clone());
        }
    }
    seen
}

/// Aggregates score records. Every number is recomputed from `records`.
pub fn report(records: &[ScoreRecord]) -> Result<AggregateReport, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Empty);
    }
    let clients = clients_in_order(records);

    let mut cells = Vec::new();
    let mut family_split = Vec::new();
    let mut summary = Vec::new();
    for client in &clients {
        let own: Vec<&ScoreRecord> = records.iter().filter(|r| &r.client_name == client).collect();
        let mut family_means = Vec::new();
        for family in Family::ALL {
            let fam: Vec<&ScoreRecord> = own.iter().copied().filter(|r| r.family == family).collect();
            family_means.push((family, (!fam.is_empty()).then(|| mean(&scores(fam.iter().copied())))));
            for split in SPLITS {
                let fs: Vec<&ScoreRecord> = fam.iter().copied().filter(|r| r.split == split).collect();
                if fs.is_empty() {
                    continue;
                }
                family_split.push(FamilySplitMean {
                    client: client.clone(),
                    family,
                    split,
                    mean: mean(&scores(fs.iter().copied())),
                    n: fs.len(),
                });
                for &task in TaskKind::for_family(family) {
                    let group: Vec<&ScoreRecord> = fs.iter().copied().filter(|r| r.task == task).collect();
                    if group.is_empty() {
                        continue;
                    }
                    let mut by_sample: BTreeMap<uuid::Uuid, Vec<f64>> = BTreeMap::new();
                    for r in &group {
                        by_sample.entry(r.sample_id).or_default().push(r.score);
                    }
                    let variances: Vec<f64> = by_sample.values().map(|v| variance(v)).collect();
                    cells.push(ReportCell {
                        client: client.clone(),
                        family,
                        task,
                        split,
                        mean: mean(&scores(group.iter().copied())),
                        failure_rate: group.iter().filter(|r| r.parse_failed || r.failure.is_some()).count() as f64 / group.len() as f64,
                        n: group.len(),
                        repeat_variance: mean(&variances),
                    });
                }
            }
        }
        summary.push(SummaryRow {
            client: client.clone(),
            family_means,
        });
    }
    Ok(AggregateReport {
        clients,
        summary,
        family_split,
        cells,
        features: analyze_features(records),
    })
}

/// Feature tags reported for each family, in row order.
fn feature_keys(family: Family) -> &'static [&'static str] {
    match family {
        Family::Clusters => &["n_centers", "algorithm", "algorithm_params", "unique_markers", "legend", "fill", "augment"],
        Family::Series => &["color", "grid", "augment"],
        Family::Histogram => &["trend", "color", "grid", "augment"],
        Family::Boxplot => &["color", "grid", "augment", "n_series", "generator"],
        Family::Violin => &["color", "grid", "augment", "n_series", "generator"],
    }
}

/// Row label for a feature tag value, or `None` when the tag is not
/// broken down for this family.
pub fn feature_label(family: Family, key: &str, value: &str) -> Option<String> {
    let label = match (family, key) {
        (Family::Clusters, "n_centers") => format!("{value} Centers"),
        (Family::Clusters, "algorithm") => format!("{value} Algorithm"),
        (Family::Clusters, "algorithm_params") => format!("Algorithm Parameters: {value}"),
        (Family::Clusters, "unique_markers") => format!("Unique Markers: {value}"),
        (Family::Clusters, "legend") => format!("Legend: {value}"),
        (Family::Clusters, "fill") => format!("Fill Clusters: {value}"),
        (Family::Clusters | Family::Series | Family::Violin, "augment") => format!("Augment: {value}"),
        (Family::Series | Family::Boxplot, "color") => format!("{value} Color"),
        (Family::Series | Family::Boxplot | Family::Histogram, "grid") => format!("Grid: {value}"),
        (Family::Histogram, "trend") => format!("Trend Type: {value}"),
        (Family::Histogram, "color") => format!("Plot Color: {value}"),
        (Family::Histogram, "augment") => format!("Augmentation: {value}"),
        (Family::Boxplot, "augment") => format!("{value} Augmentation"),
        (Family::Boxplot, "n_series") => format!("{value} Series"),
        (Family::Boxplot, "generator") => format!("{value} Data Generator"),
        (Family::Violin, "color") => format!("Plot Color: {value}"),
        (Family::Violin, "grid") => format!("Plot Grid: {value}"),
        (Family::Violin, "n_series") => format!("Number of Series: {value}"),
        (Family::Violin, "generator") => format!("Generator: {} Data", value.replace('-', " ")),
        _ => return None,
    };
    Some(label)
}

fn value_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Mean score per feature value within each family and split, pooled over
/// clients, tasks and repeats.
pub fn analyze_features(records: &[ScoreRecord]) -> Vec<FeatureTable> {
    let mut tables = Vec::new();
    for family in Family::ALL {
        for split in SPLITS {
            let group: Vec<&ScoreRecord> = records.iter().filter(|r| r.family == family && r.split == split).collect();
            if group.is_empty() {
                continue;
            }
            let mut rows = Vec::new();
            for &key in feature_keys(family) {
                let mut by_value: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
                for r in &group {
                    if let Some(v) = r.feature_tags.get(key) {
                        by_value.entry(v.as_str()).or_default().push(r.score);
                    }
                }
                let mut values: Vec<(&str, Vec<f64>)> = by_value.into_iter().collect();
                values.sort_by(|a, b| value_order(a.0, b.0));
                for (value, s) in values {
                    let Some(label) = feature_label(family, key, value) else { continue };
                    rows.push(FeatureRow {
                        label,
                        key: key.to_string(),
                        value: value.to_string(),
                        mean: mean(&s),
                        n: s.len(),
                    });
                }
            }
            tables.push(FeatureTable { family, split, rows });
        }
    }
    tables
}

fn fmt_num(v: f64, places: usize) -> String {
    let s = format!("{v:.places$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

fn fmt_score(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| fmt_num(v, 4))
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_rule(n: usize) -> String {
    let mut s = "|---".to_string();
    s.push_str(&"|---:".repeat(n - 1));
    s.push_str("|\n");
    s
}

pub fn render_report_markdown(rep: &AggregateReport) -> String {
    let mut out = String::from("# Benchmark report\n\n## Overall\n\n");
    let mut head = vec!["Model".to_string()];
    head.extend(Family::ALL.iter().map(|f| f.heading().to_string()));
    out.push_str(&md_row(&head));
    out.push_str(&md_rule(head.len()));
    for row in &rep.summary {
        let mut cells = vec![row.client.clone()];
        cells.extend(row.family_means.iter().map(|(_, m)| fmt_score(*m)));
        out.push_str(&md_row(&cells));
    }

    let cell = |client: &str, family: Family, task: TaskKind, split: Split| {
        rep.cells
            .iter()
            .find(|c| c.client == client && c.family == family && c.task == task && c.split == split)
    };
    for family in Family::ALL {
        if !rep.cells.iter().any(|c| c.family == family) {
            continue;
        }
        out.push_str(&format!("\n## {}\n\n", family.heading()));
        let mut head = vec!["Model".to_string()];
        for &task in TaskKind::for_family(family) {
            for split in SPLITS {
                head.push(format!("{} {}", task_heading(task), split_heading(split)));
            }
        }
        for split in SPLITS {
            head.push(format!("Average Score {}", split_heading(split)));
        }
        out.push_str(&md_row(&head));
        out.push_str(&md_rule(head.len()));
        for client in &rep.clients {
            let mut cells = vec![client.clone()];
            for &task in TaskKind::for_family(family) {
                for split in SPLITS {
                    cells.push(fmt_score(cell(client, family, task, split).map(|c| c.mean)));
                }
            }
            for split in SPLITS {
                let m = rep
                    .family_split
                    .iter()
                    .find(|m| &m.client == client && m.family == family && m.split == split);
                cells.push(fmt_score(m.map(|m| m.mean)));
            }
            out.push_str(&md_row(&cells));
        }
    }

    out.push_str("\n## Details\n\n");
    let head: Vec<String> = ["Model", "Family", "Task", "Split", "Mean", "Failure rate", "n", "Repeat variance"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.push_str(&md_row(&head));
    out.push_str(&md_rule(head.len()));
    for c in &rep.cells {
        out.push_str(&md_row(&[
            c.client.clone(),
            c.family.heading().to_string(),
            task_heading(c.task).to_string(),
            split_heading(c.split).to_string(),
            fmt_num(c.mean, 4),
            format!("{:.4}", c.failure_rate),
            c.n.to_string(),
            format!("{:.6}", c.repeat_variance),
        ]));
    }
    out
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

/// Long-format table: one line per cell, per family average and per summary
/// entry (`task` is `average` or `all`, `split` is `all` for summary lines).
pub fn render_report_csv(rep: &AggregateReport) -> String {
    let mut rows = vec![["client", "family", "task", "split", "mean", "failure_rate", "n", "repeat_variance"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for row in &rep.summary {
        for (family, m) in &row.family_means {
            if let Some(m) = m {
                rows.push(vec![
                    row.client.clone(),
                    family.to_string(),
                    "all".into(),
                    "all".into(),
                    m.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    for m in &rep.family_split {
        rows.push(vec![
            m.client.clone(),
            m.family.to_string(),
            "average".into(),
            m.split.as_str().into(),
            m.mean.to_string(),
            String::new(),
            m.n.to_string(),
            String::new(),
        ]);
    }
    for c in &rep.cells {
        rows.push(vec![
            c.client.clone(),
            c.family.to_string(),
            c.task.to_string(),
            c.split.as_str().into(),
            c.mean.to_string(),
            c.failure_rate.to_string(),
            c.n.to_string(),
            c.repeat_variance.to_string(),
        ]);
    }
    csv_string(rows)
}

pub fn render_features_markdown(tables: &[FeatureTable]) -> String {
    let mut out = String::from("# Feature analysis\n");
    for t in tables {
        out.push_str(&format!("\n## {} ({})\n\n", t.family.heading(), t.split.as_str()));
        out.push_str(&md_row(&["Configuration".into(), "Score".into(), "n".into()]));
        out.push_str(&md_rule(3));
        for r in &t.rows {
            out.push_str(&md_row(&[r.label.clone(), fmt_num(r.mean, 4), r.n.to_string()]));
        }
    }
    out
}

pub fn render_features_csv(tables: &[FeatureTable]) -> String {
    let mut rows = vec![["family", "split", "label", "key", "value", "mean", "n"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for t in tables {
        for r in &t.rows {
            rows.push(vec![
                t.family.to_string(),
                t.split.as_str().into(),
                r.label.clone(),
                r.key.clone(),
                r.value.clone(),
                r.mean.to_string(),
                r.n.to_string(),
            ]);
        }
    }
    csv_string(rows)
}

/// Writes `report.md`, `report.csv` and `report.json` into `dir`.
pub fn write_report(dir: &std::path::Path, rep: &AggregateReport) -> Result<(), HarnessError> {
    super::write_file(&dir.join("report.md"), render_report_markdown(rep).as_bytes())?;
    super::write_file(&dir.join("report.csv"), render_report_csv(rep).as_bytes())?;
    super::write_json(&dir.join("report.json"), rep)
}

/// Writes `features.md` and `features.csv` into `dir`.
pub fn write_features(dir: &std::path::Path, tables: &[FeatureTable]) -> Result<(), HarnessError> {
    super::write_file(&dir.join("features.md"), render_features_markdown(tables).as_bytes())?;
    super::write_file(&dir.join("features.csv"), render_features_csv(tables).as_bytes())
}
