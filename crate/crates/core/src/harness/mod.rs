//! Dataset generation, benchmark runs, scoring and reports, all backed by
//! plain files so every stage can be replayed.

mod dataset;
mod report;
mod run;

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use dataset::{generate_dataset, generate_sample, load_dataset, write_dataset, Dataset, DatasetConfig, DatasetManifest};
pub use report::{
    analyze_features, feature_label, render_features_csv, render_features_markdown, render_report_csv, render_report_markdown,
    report, task_heading, write_features, write_report, AggregateReport, FamilySplitMean, FeatureRow, FeatureTable, ReportCell, SummaryRow,
};
pub use run::{
    load_responses, make_client, read_scores, run_benchmark, score_responses, score_run, write_scores, AttemptLog, ResponseRecord,
    RunManifest, RunOptions, RunSummary, TupleKey, ATTEMPTS_FILE, RESPONSES_FILE, RUN_MANIFEST_FILE, SCORES_FILE,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample {id}: {detail}")]
    Sample { id: String, detail: String },
    #[error("unknown client '{0}'")]
    UnknownClient(String),
    #[error("run at {0} was started with different settings")]
    RunMismatch(PathBuf),
    #[error("nothing to report")]
    Empty,
}

impl HarnessError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
        move |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn json(path: &Path) -> impl FnOnce(serde_json::Error) -> HarnessError + '_ {
        move |source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let bytes = std::fs::read(path).map_err(HarnessError::io(path))?;
    serde_json::from_slice(&bytes).map_err(HarnessError::json(path))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(HarnessError::json(path))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    std::fs::write(path, bytes).map_err(HarnessError::io(path))
}
