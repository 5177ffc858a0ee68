//! Task prompts, answer schemas and parsing of model replies.

mod answer;
mod extract;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::{Family, SampleMetadata};

pub use answer::{normalize_label, parse_answer, ParsedAnswer, TaskAnswer, Warning};
pub use extract::extract_json;

/// Placeholder in templates that takes a caller-supplied value.
pub const VALUE_SLOT: &str = "__value__";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("no JSON object found in reply")]
    NoJsonFound,
    #[error("answer does not match schema at `{0}`")]
    SchemaMismatch(String),
    #[error("template needs a value for {0}")]
    MissingSubstitution(String),
    #[error("template has no slot for parameter `{0}`")]
    UnexpectedParam(String),
    #[error("task {task} does not apply to {family} plots")]
    FamilyMismatch { task: String, family: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    BiggestCluster,
    Centers,
    ClustersArea,
    Approximate,
    MinMaxInterval,
    MissingData,
    PointwiseAnomalies,
    MinMaxBins,
    Monotonicity,
    Anomalies,
    BelowXValuePercent,
    Distributions,
    IqrRanges,
    Medians,
    OverallRanges,
}

impl TaskKind {
    pub const ALL: [TaskKind; 15] = [
        TaskKind::BiggestCluster,
        TaskKind::Centers,
        TaskKind::ClustersArea,
        TaskKind::Approximate,
        TaskKind::MinMaxInterval,
        TaskKind::MissingData,
        TaskKind::PointwiseAnomalies,
        TaskKind::MinMaxBins,
        TaskKind::Monotonicity,
        TaskKind::Anomalies,
        TaskKind::BelowXValuePercent,
        TaskKind::Distributions,
        TaskKind::IqrRanges,
        TaskKind::Medians,
        TaskKind::OverallRanges,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::BiggestCluster => "biggest_cluster",
            TaskKind::Centers => "centers",
            TaskKind::ClustersArea => "clusters_area",
            TaskKind::Approximate => "approximate",
            TaskKind::MinMaxInterval => "min_max_interval",
            TaskKind::MissingData => "missing_data",
            TaskKind::PointwiseAnomalies => "pointwise_anomalies",
            TaskKind::MinMaxBins => "min_max_bins",
            TaskKind::Monotonicity => "monotonicity",
            TaskKind::Anomalies => "anomalies",
            TaskKind::BelowXValuePercent => "below_x_value_percent",
            TaskKind::Distributions => "distributions",
            TaskKind::IqrRanges => "iqr_ranges",
            TaskKind::Medians => "medians",
            TaskKind::OverallRanges => "overall_ranges",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Tasks asked about each plot of a family, in report column order.
    pub fn for_family(family: Family) -> &'static [TaskKind] {
        match family {
            Family::Series => &[
                TaskKind::MinMaxInterval,
                TaskKind::Approximate,
                TaskKind::PointwiseAnomalies,
                TaskKind::MissingData,
            ],
            Family::Clusters => &[TaskKind::BiggestCluster, TaskKind::Centers, TaskKind::ClustersArea],
            Family::Histogram => &[
                TaskKind::Distributions,
                TaskKind::MinMaxBins,
                TaskKind::Monotonicity,
                TaskKind::BelowXValuePercent,
                TaskKind::Anomalies,
            ],
            Family::Boxplot | Family::Violin => &[TaskKind::Medians, TaskKind::OverallRanges, TaskKind::IqrRanges],
        }
    }

    pub fn families(&self) -> Vec<Family> {
        Family::ALL.into_iter().filter(|f| TaskKind::for_family(*f).contains(self)).collect()
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! templates {
    ($($fam:ident / $name:ident),* $(,)?) => {
        fn template_text(family: Family, kind: TaskKind) -> Option<&'static str> {
            $(
                if family.as_str() == stringify!($fam) && kind.as_str() == stringify!($name) {
                    return Some(include_str!(concat!("templates/", stringify!($fam), "/", stringify!($name), ".md")));
                }
            )*
            None
        }
    };
}

templates!(
    clusters / biggest_cluster,
    clusters / centers,
    clusters / clusters_area,
    series / approximate,
    series / min_max_interval,
    series / missing_data,
    series / pointwise_anomalies,
    histogram / min_max_bins,
    histogram / monotonicity,
    histogram / anomalies,
    histogram / below_x_value_percent,
    histogram / distributions,
    boxplot / iqr_ranges,
    boxplot / medians,
    boxplot / overall_ranges,
    violin / iqr_ranges,
    violin / medians,
    violin / overall_ranges,
);

/// A question asked about one plot family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Task {
    pub family: Family,
    pub kind: TaskKind,
}

impl Task {
    pub fn new(family: Family, kind: TaskKind) -> Result<Task, PromptError> {
        if TaskKind::for_family(family).contains(&kind) {
            Ok(Task { family, kind })
        } else {
            Err(PromptError::FamilyMismatch {
                task: kind.to_string(),
                family: family.to_string(),
            })
        }
    }

    pub fn for_family(family: Family) -> Vec<Task> {
        TaskKind::for_family(family).iter().map(|&kind| Task { family, kind }).collect()
    }

    pub fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    /// Template file name, e.g. `medians.md`.
    pub fn file_name(&self) -> String {
        format!("{}.md", self.kind.as_str())
    }

    pub fn template(&self) -> &'static str {
        template_text(self.family, self.kind).expect("every valid task has a template")
    }

    /// Short description of the JSON reply.
    pub fn schema(&self) -> &'static str {
        match self.kind {
            TaskKind::BiggestCluster => r#"{"x": [lo, hi], "y": [lo, hi]}"#,
            TaskKind::Centers => r#"{"<index>": [x, y], ...}"#,
            TaskKind::ClustersArea => r#"{"<index>": [[x_lo, y_lo], [x_hi, y_hi]], ...}"#,
            TaskKind::Approximate => r#"{"points": [[x, y], ...]} (at most 10)"#,
            TaskKind::MinMaxInterval => r#"{"max": [lo, hi], "min": [lo, hi]}"#,
            TaskKind::MissingData => r#"{"missing_data": [x1, x2]} or {}"#,
            TaskKind::PointwiseAnomalies => r#"{"anomalies": [x, ...]}"#,
            TaskKind::MinMaxBins => r#"{"min": [[lo, hi], ...], "max": [[lo, hi], ...]}"#,
            TaskKind::Monotonicity => r#"{"increasing": [[lo, hi], ...], "decreasing": [[lo, hi], ...]}"#,
            TaskKind::Anomalies => r#"{"anomalies_range": [lo, hi]} or {"anomalies_range": []}"#,
            TaskKind::BelowXValuePercent => r#"{"percentage_below": "<percent>"}"#,
            TaskKind::Distributions => r#"{"distribution": "<NAME>"}"#,
            TaskKind::IqrRanges => r#"{"biggest_iqr_x": x, "smallest_iqr_x": x}"#,
            TaskKind::Medians => r#"{"highest_median_x": x, "lowest_median_x": x}"#,
            TaskKind::OverallRanges => r#"{"biggest_range_x": x, "smallest_range_x": x}"#,
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.family, self.kind)
    }
}

/// Fills the template's slots from `params`, keyed by slot name.
pub fn render_prompt(task: &Task, params: &BTreeMap<String, String>) -> Result<String, PromptError> {
    let text = task.template();
    for key in params.keys() {
        if key != VALUE_SLOT || !text.contains(VALUE_SLOT) {
            return Err(PromptError::UnexpectedParam(key.clone()));
        }
    }
    if text.contains(VALUE_SLOT) {
        let v = params
            .get(VALUE_SLOT)
            .ok_or_else(|| PromptError::MissingSubstitution(VALUE_SLOT.to_string()))?;
        Ok(text.replace(VALUE_SLOT, v))
    } else {
        Ok(text.to_string())
    }
}

/// The prompt for `task` about the sample described by `meta`.
pub fn prompt_for(task: &Task, meta: &SampleMetadata) -> Result<String, PromptError> {
    if meta.family() != task.family {
        return Err(PromptError::FamilyMismatch {
            task: task.kind.to_string(),
            family: meta.family().to_string(),
        });
    }
    let mut params = BTreeMap::new();
    if let (SampleMetadata::Histogram(h), TaskKind::BelowXValuePercent) = (meta, task.kind) {
        params.insert(VALUE_SLOT.to_string(), format_value(h.below_x_threshold));
    }
    render_prompt(task, &params)
}

/// Extracts and parses a raw reply in one step.
pub fn parse_reply(task: &Task, raw: &str) -> Result<ParsedAnswer, PromptError> {
    parse_answer(task, &extract_json(raw)?)
}

/// Formats a slot value the way prompts show numbers.
pub fn format_value(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('e') {
        format!("{v:.6}")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_task_has_its_template() {
        let mut n = 0;
        for f in Family::ALL {
            for t in Task::for_family(f) {
                assert!(t.template().ends_with('\n'));
                assert!(t.template().contains("```json"));
                n += 1;
            }
        }
        assert_eq!(n, 18);
    }

    #[test]
    fn family_mismatch_rejected() {
        assert!(Task::new(Family::Series, TaskKind::Centers).is_err());
        assert!(Task::new(Family::Violin, TaskKind::Medians).is_ok());
    }

    #[test]
    fn boxplot_and_violin_texts_differ() {
        let b = Task::new(Family::Boxplot, TaskKind::Medians).unwrap();
        let v = Task::new(Family::Violin, TaskKind::Medians).unwrap();
        assert!(b.template().contains("box plots"));
        assert!(v.template().contains("violin plots"));
    }

    #[test]
    fn slot_substitution() {
        let t = Task::new(Family::Histogram, TaskKind::BelowXValuePercent).unwrap();
        assert!(matches!(render_prompt(&t, &BTreeMap::new()), Err(PromptError::MissingSubstitution(_))));
        let p = BTreeMap::from([(VALUE_SLOT.to_string(), "42".to_string())]);
        assert!(render_prompt(&t, &p).unwrap().contains("below 42 on the x-axis"));
        let m = Task::new(Family::Series, TaskKind::MinMaxInterval).unwrap();
        assert!(render_prompt(&m, &p).is_err());
        assert!(render_prompt(&m, &BTreeMap::new()).unwrap().contains("Respond with intervals"));
    }
}
