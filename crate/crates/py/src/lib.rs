//! Python bindings: sample generation, prompts, the oracle, scoring and the
//! file-backed harness.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use plotbench::clients::{oracle_answer, Client, OracleClient};
use plotbench::harness::{self, DatasetConfig, RunOptions};
use plotbench::prompts::{parse_reply, prompt_for, Task, TaskKind};
use plotbench::sample::{Family, SampleRecord, Split};
use plotbench::scoring::score_answer;
use plotbench::seed::Seed;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn family(name: &str) -> PyResult<Family> {
    Family::parse(name).ok_or_else(|| err(format!("unknown family '{name}'")))
}

fn split(name: &str) -> PyResult<Split> {
    match name {
        "regular" => Ok(Split::Regular),
        "augmented" => Ok(Split::Augmented),
        _ => Err(err(format!("unknown split '{name}'"))),
    }
}

fn task(fam: Family, name: &str) -> PyResult<Task> {
    let kind = TaskKind::parse(name).ok_or_else(|| err(format!("unknown task '{name}'")))?;
    Task::new(fam, kind).map_err(err)
}

/// One generated plot with its ground truth.
#[pyclass(name = "Sample", module = "plotbench", frozen)]
struct PySample {
    record: SampleRecord,
    png: Vec<u8>,
}

#[pymethods]
impl PySample {
    #[getter]
    fn id(&self) -> String {
        self.record.id.to_string()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.record.family.as_str()
    }

    #[getter]
    fn split(&self) -> &'static str {
        self.record.split.as_str()
    }

    #[getter]
    fn png<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.png)
    }

    /// Names of the tasks asked about this plot.
    fn tasks(&self) -> Vec<&'static str> {
        Task::for_family(self.record.family).iter().map(|t| t.name()).collect()
    }

    /// The full record (metadata, style, augmentation) as JSON.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.record).map_err(err)
    }

    fn feature_tags(&self) -> std::collections::BTreeMap<String, String> {
        self.record.feature_tags()
    }

    fn prompt(&self, task_name: &str) -> PyResult<String> {
        let t = task(self.record.family, task_name)?;
        prompt_for(&t, &self.record.metadata).map_err(err)
    }

    /// The reply a perfect reader would give.
    fn oracle_reply(&self, task_name: &str) -> PyResult<String> {
        let t = task(self.record.family, task_name)?;
        oracle_answer(&t, &self.record.metadata).map_err(err)
    }

    /// Scores a raw model reply; returns the score and any parser warnings.
    fn score(&self, task_name: &str, reply: &str) -> PyResult<(f64, Vec<String>)> {
        let t = task(self.record.family, task_name)?;
        let parsed = parse_reply(&t, reply).map_err(err)?;
        let s = score_answer(&self.record.metadata, &t, &parsed.answer).map_err(err)?;
        let warnings = parsed.warnings.iter().chain(&s.warnings).map(|w| format!("{w:?}")).collect();
        Ok((s.value, warnings))
    }

    fn __repr__(&self) -> String {
        format!("Sample({}, {}, {})", self.record.family, self.record.split.as_str(), self.record.id)
    }
}

#[pyfunction]
fn families() -> Vec<&'static str> {
    Family::ALL.iter().map(|f| f.as_str()).collect()
}

#[pyfunction]
fn tasks(family_name: &str) -> PyResult<Vec<&'static str>> {
    Ok(Task::for_family(family(family_name)?).iter().map(|t| t.name()).collect())
}

/// Derives a labelled child seed, as the generators do.
#[pyfunction]
fn child_seed(seed: u64, label: &str) -> u64 {
    Seed(seed).child(label).value()
}

#[pyfunction]
#[pyo3(signature = (seed, family_name, index, split_name = "regular"))]
fn generate_sample(seed: u64, family_name: &str, index: usize, split_name: &str) -> PyResult<PySample> {
    let cfg = DatasetConfig::default();
    let (record, png, _) = harness::generate_sample(&cfg, Seed(seed), split(split_name)?, family(family_name)?, index).map_err(err)?;
    Ok(PySample { record, png })
}

/// Writes a dataset with `per_family` plots per family and split; returns
/// the number of samples.
#[pyfunction]
#[pyo3(signature = (out, per_family, seed, augmented = true))]
fn generate_dataset(out: PathBuf, per_family: usize, seed: u64, augmented: bool) -> PyResult<usize> {
    let mut cfg = DatasetConfig::uniform(per_family);
    if !augmented {
        cfg.splits = vec![Split::Regular];
    }
    let manifest = harness::generate_dataset(&cfg, seed, &out).map_err(err)?;
    Ok(manifest.samples.len())
}

/// Loads a dataset directory and returns its samples.
#[pyfunction]
fn load_dataset(root: PathBuf) -> PyResult<Vec<PySample>> {
    let ds = harness::load_dataset(&root).map_err(err)?;
    ds.manifest
        .samples
        .iter()
        .map(|r| {
            Ok(PySample {
                record: r.clone(),
                png: ds.read_image(r).map_err(err)?,
            })
        })
        .collect()
}

/// Runs the oracle over a dataset and returns the run directory.
#[pyfunction]
#[pyo3(signature = (dataset, runs_root, repeats = 1))]
fn run_oracle(dataset: PathBuf, runs_root: PathBuf, repeats: u32) -> PyResult<String> {
    let ds = harness::load_dataset(&dataset).map_err(err)?;
    let oracle = OracleClient;
    let clients: [&dyn Client; 1] = [&oracle];
    let opts = RunOptions {
        repeats,
        retry_failed: false,
    };
    let summary = harness::run_benchmark(&ds, &clients, &opts, &runs_root).map_err(err)?;
    Ok(summary.run_dir.display().to_string())
}

/// Scores a run, writes its report files and returns the report markdown.
#[pyfunction]
fn score_and_report(run_dir: PathBuf, dataset: PathBuf) -> PyResult<String> {
    let ds = harness::load_dataset(&dataset).map_err(err)?;
    let records = harness::score_run(&run_dir, &ds).map_err(err)?;
    harness::write_scores(&run_dir, &records).map_err(err)?;
    let rep = harness::report(&records).map_err(err)?;
    harness::write_report(&run_dir, &rep).map_err(err)?;
    Ok(harness::render_report_markdown(&rep))
}

#[pymodule]
#[pyo3(name = "plotbench")]
fn plotbench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    m.add_function(wrap_pyfunction!(tasks, m)?)?;
    m.add_function(wrap_pyfunction!(child_seed, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sample, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(score_and_report, m)?)?;
    Ok(())
}
