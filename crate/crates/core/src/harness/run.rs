use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uuid::{Builder, Uuid};

use super::{read_json, sha256_hex, write_json, Dataset, HarnessError};
use crate::clients::{
    Attempt, BaselineClient, BaselineKind, Client, ClientError, ModelEndpointConfig, OracleClient, Outcome, Query, RemoteClient,
};
use crate::prompts::{parse_reply, prompt_for, Task, TaskKind};
use crate::sample::{Family, SampleRecord, Split};
use crate::scoring::{score_answer, ScoreRecord};

pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const ATTEMPTS_FILE: &str = "attempts.jsonl";
pub const SCORES_FILE: &str = "scores.json";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Identity of one question put to one client.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TupleKey {
    pub sample_id: Uuid,
    pub task: TaskKind,
    pub client: String,
    pub repeat: u32,
}

/// One line of `responses.jsonl`: the raw reply, stored before any parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub sample_id: Uuid,
    pub family: Family,
    pub split: Split,
    pub task: TaskKind,
    pub client: String,
    pub repeat: u32,
    pub prompt_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ClientError>,
    pub attempts: u32,
}

impl ResponseRecord {
    pub fn key(&self) -> TupleKey {
        TupleKey {
            sample_id: self.sample_id,
            task: self.task,
            client: self.client.clone(),
            repeat: self.repeat,
        }
    }

    /// An error other than the client declining a task it never answers.
    pub fn is_failure(&self) -> bool {
        !matches!(self.error, None | Some(ClientError::Inapplicable(_)))
    }
}

/// One line of `attempts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub sample_id: Uuid,
    pub task: TaskKind,
    pub client: String,
    pub repeat: u32,
    #[serde(flatten)]
    pub attempt: Attempt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: Uuid,
    pub dataset_dir: String,
    pub dataset_digest: String,
    pub dataset_config_digest: String,
    pub clients: Vec<String>,
    /// Endpoint settings of the remote clients, decoding options included.
    pub endpoints: Vec<ModelEndpointConfig>,
    pub repeats: u32,
    /// Unix seconds; zero when every client is local, so such runs are
    /// byte-reproducible.
    pub created_at: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub repeats: u32,
    /// Ask again for tuples whose stored response is an error.
    pub retry_failed: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            repeats: 3,
            retry_failed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_id: Uuid,
    pub run_dir: PathBuf,
    /// Tuples the run covers.
    pub total: usize,
    /// Queries issued by this invocation.
    pub issued: usize,
    /// Tuples already answered by an earlier invocation.
    pub skipped: usize,
    /// Tuples whose latest response is an error.
    pub failed: usize,
}

impl RunSummary {
    pub fn is_partial(&self) -> bool {
        self.failed > 0
    }
}

/// Builds a client from a CLI name: `oracle`, `baseline:<kind>` or the name
/// of a configured endpoint.
pub fn make_client(name: &str, endpoints: &[ModelEndpointConfig]) -> Result<Box<dyn Client>, HarnessError> {
    if name == "oracle" {
        return Ok(Box::new(OracleClient));
    }
    if let Some(kind) = name.strip_prefix("baseline:") {
        let kind = BaselineKind::parse(kind).ok_or_else(|| HarnessError::UnknownClient(name.to_string()))?;
        return Ok(Box::new(BaselineClient::new(kind)));
    }
    let cfg = endpoints
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| HarnessError::UnknownClient(name.to_string()))?;
    let client = RemoteClient::new(cfg.clone()).map_err(|e| HarnessError::Config(format!("endpoint {name}: {e}")))?;
    Ok(Box::new(client))
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn run_manifest(dataset: &Dataset, clients: &[&dyn Client], repeats: u32) -> RunManifest {
    let names: Vec<String> = clients.iter().map(|c| c.name().to_string()).collect();
    let endpoints: Vec<ModelEndpointConfig> = dataset
        .manifest
        .config
        .endpoints
        .iter()
        .filter(|e| names.contains(&e.name))
        .cloned()
        .collect();
    let settings = serde_json::json!({
        "dataset_digest": dataset.digest,
        "clients": names,
        "endpoints": endpoints,
        "repeats": repeats,
    });
    let config_digest = sha256_hex(settings.to_string().as_bytes());
    let mut id = [0u8; 16];
    id.copy_from_slice(&Sha256::digest(config_digest.as_bytes())[..16]);
    RunManifest {
        run_id: Builder::from_random_bytes(id).into_uuid(),
        dataset_dir: dataset.root.display().to_string(),
        dataset_digest: dataset.digest.clone(),
        dataset_config_digest: dataset.manifest.config_digest.clone(),
        clients: names,
        endpoints,
        repeats,
        created_at: if clients.iter().all(|c| c.is_local()) { 0 } else { now_secs() },
        config_digest,
    }
}

/// Drops a trailing partial line left by an interrupted write.
fn repair_jsonl(path: &Path) -> Result<(), HarnessError> {
    let Ok(bytes) = std::fs::read(path) else {
        return Ok(());
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let f = OpenOptions::new().write(true).open(path).map_err(HarnessError::io(path))?;
    f.set_len(keep as u64).map_err(HarnessError::io(path))
}

/// Reads a response store; a later line for the same tuple replaces an
/// earlier one. A partial last line is ignored.
pub fn load_responses(path: &Path) -> Result<Vec<ResponseRecord>, HarnessError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(path)(e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(HarnessError::io(path))?;
    let mut order: Vec<TupleKey> = Vec::new();
    let mut latest: HashMap<TupleKey, ResponseRecord> = HashMap::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResponseRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => return Err(HarnessError::json(path)(e)),
        };
        let key = rec.key();
        if latest.insert(key.clone(), rec).is_none() {
            order.push(key);
        }
    }
    Ok(order.into_iter().map(|k| latest.remove(&k).expect("present")).collect())
}

struct Job<'a> {
    record: &'a SampleRecord,
    task: Task,
    repeat: u32,
}

struct Answered {
    response: ResponseRecord,
    attempts: Vec<Attempt>,
}

fn ask(client: &dyn Client, job: &Job<'_>, image: &[u8]) -> Answered {
    let (prompt, outcome) = match prompt_for(&job.task, &job.record.metadata) {
        Ok(prompt) => {
            let q = Query {
                record: job.record,
                task: job.task,
                prompt: &prompt,
                image_png: image,
                repeat: job.repeat,
            };
            let outcome = client.query(&q);
            (prompt, outcome)
        }
        Err(e) => (String::new(), Outcome::local(Err(ClientError::InvalidRequest(e.to_string())))),
    };
    let (text, error) = match outcome.result {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e)),
    };
    Answered {
        response: ResponseRecord {
            sample_id: job.record.id,
            family: job.record.family,
            split: job.record.split,
            task: job.task.kind,
            client: client.name().to_string(),
            repeat: job.repeat,
            prompt_sha256: sha256_hex(prompt.as_bytes()),
            text,
            error,
            attempts: outcome.attempts.len() as u32,
        },
        attempts: outcome.attempts,
    }
}

struct Store {
    responses: File,
    attempts: File,
    responses_path: PathBuf,
    attempts_path: PathBuf,
}

impl Store {
    fn open(dir: &Path) -> Result<Store, HarnessError> {
        let responses_path = dir.join(RESPONSES_FILE);
        let attempts_path = dir.join(ATTEMPTS_FILE);
        repair_jsonl(&responses_path)?;
        repair_jsonl(&attempts_path)?;
        let open = |p: &Path| OpenOptions::new().create(true).append(true).open(p).map_err(HarnessError::io(p));
        Ok(Store {
            responses: open(&responses_path)?,
            attempts: open(&attempts_path)?,
            responses_path,
            attempts_path,
        })
    }

    fn append(&mut self, a: &Answered) -> Result<(), HarnessError> {
        let mut buf = String::new();
        for attempt in &a.attempts {
            let log = AttemptLog {
                sample_id: a.response.sample_id,
                task: a.response.task,
                client: a.response.client.clone(),
                repeat: a.response.repeat,
                attempt: attempt.clone(),
            };
            buf.push_str(&serde_json::to_string(&log).map_err(HarnessError::json(&self.attempts_path))?);
            buf.push('\n');
        }
        self.attempts.write_all(buf.as_bytes()).map_err(HarnessError::io(&self.attempts_path))?;
        let mut line = serde_json::to_string(&a.response).map_err(HarnessError::json(&self.responses_path))?;
        line.push('\n');
        self.responses.write_all(line.as_bytes()).map_err(HarnessError::io(&self.responses_path))
    }
}

/// Asks every client every applicable question about every sample,
/// `repeats` times, appending raw replies to the run's response store.
/// Tuples already in the store are skipped, so an interrupted run resumes
/// where it stopped.
pub fn run_benchmark(
    dataset: &Dataset,
    clients: &[&dyn Client],
    opts: &RunOptions,
    runs_root: &Path,
) -> Result<RunSummary, HarnessError> {
    if opts.repeats == 0 {
        return Err(HarnessError::Config("repeats must be at least 1".into()));
    }
    if clients.is_empty() {
        return Err(HarnessError::Config("no clients given".into()));
    }
    let names: BTreeSet<&str> = clients.iter().map(|c| c.name()).collect();
    if names.len() != clients.len() {
        return Err(HarnessError::Config("client names must be unique".into()));
    }
    let mut manifest = run_manifest(dataset, clients, opts.repeats);
    let run_dir = runs_root.join(manifest.run_id.to_string());
    let manifest_path = run_dir.join(RUN_MANIFEST_FILE);
    if manifest_path.is_file() {
        let old: RunManifest = read_json(&manifest_path)?;
        if old.config_digest != manifest.config_digest {
            return Err(HarnessError::RunMismatch(run_dir));
        }
        manifest.created_at = old.created_at;
        manifest.dataset_dir = old.dataset_dir;
    } else {
        write_json(&manifest_path, &manifest)?;
    }

    let existing = load_responses(&run_dir.join(RESPONSES_FILE))?;
    let done: BTreeSet<TupleKey> = existing
        .iter()
        .filter(|r| !(opts.retry_failed && r.error.is_some()))
        .map(|r| r.key())
        .collect();
    let mut store = Store::open(&run_dir)?;
    let mut summary = RunSummary {
        run_id: manifest.run_id,
        run_dir: run_dir.clone(),
        total: 0,
        issued: 0,
        skipped: 0,
        failed: 0,
    };
    let mut failed: BTreeMap<TupleKey, bool> = existing.iter().map(|r| (r.key(), r.is_failure())).collect();

    for client in clients {
        let mut jobs = Vec::new();
        for record in &dataset.manifest.samples {
            for task in Task::for_family(record.family) {
                for repeat in 0..opts.repeats {
                    summary.total += 1;
                    let key = TupleKey {
                        sample_id: record.id,
                        task: task.kind,
                        client: client.name().to_string(),
                        repeat,
                    };
                    if done.contains(&key) {
                        summary.skipped += 1;
                    } else {
                        jobs.push(Job { record, task, repeat });
                    }
                }
            }
        }
        let mut record_answer = |a: Answered, store: &mut Store| -> Result<(), HarnessError> {
            store.append(&a)?;
            summary.issued += 1;
            failed.insert(a.response.key(), a.response.is_failure());
            Ok(())
        };
        if client.is_local() || client.max_concurrency() <= 1 {
            let mut cached: Option<(Uuid, Vec<u8>)> = None;
            for job in &jobs {
                if cached.as_ref().map(|(id, _)| *id) != Some(job.record.id) {
                    cached = Some((job.record.id, dataset.read_image(job.record)?));
                }
                let image = &cached.as_ref().expect("cached").1;
                record_answer(ask(*client, job, image), &mut store)?;
            }
        } else {
            let next = AtomicUsize::new(0);
            let (tx, rx) = mpsc::channel::<Result<Answered, HarnessError>>();
            let workers = client.max_concurrency().min(jobs.len().max(1));
            std::thread::scope(|scope| -> Result<(), HarnessError> {
                for _ in 0..workers {
                    let tx = tx.clone();
                    let (jobs, next) = (&jobs, &next);
                    scope.spawn(move || loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(job) = jobs.get(i) else { break };
                        let answered = dataset.read_image(job.record).map(|img| ask(*client, job, &img));
                        if tx.send(answered).is_err() {
                            break;
                        }
                    });
                }
                drop(tx);
                for answered in rx {
                    record_answer(answered?, &mut store)?;
                }
                Ok(())
            })?;
        }
    }
    summary.failed = failed
        .iter()
        .filter(|(k, &f)| f && names.contains(k.client.as_str()))
        .count();
    Ok(summary)
}

fn failed_record(resp: &ResponseRecord, record: &SampleRecord, parse_failed: bool, failure: String) -> ScoreRecord {
    ScoreRecord {
        sample_id: resp.sample_id,
        family: record.family,
        split: record.split,
        task: resp.task,
        client_name: resp.client.clone(),
        repeat_index: resp.repeat,
        score: 0.0,
        parse_failed,
        failure: Some(failure),
        warnings: BTreeSet::new(),
        feature_tags: record.feature_tags(),
    }
}

fn score_one(resp: &ResponseRecord, record: &SampleRecord) -> ScoreRecord {
    let task = match Task::new(record.family, resp.task) {
        Ok(t) => t,
        Err(e) => return failed_record(resp, record, false, e.to_string()),
    };
    let text = match (&resp.text, &resp.error) {
        (Some(t), None) => t,
        (_, Some(e)) => return failed_record(resp, record, false, e.to_string()),
        (None, None) => return failed_record(resp, record, true, "empty response".into()),
    };
    let parsed = match parse_reply(&task, text) {
        Ok(p) => p,
        Err(e) => return failed_record(resp, record, true, e.to_string()),
    };
    match score_answer(&record.metadata, &task, &parsed.answer) {
        Ok(s) => {
            let mut warnings = parsed.warnings;
            warnings.extend(s.warnings);
            ScoreRecord {
                sample_id: resp.sample_id,
                family: record.family,
                split: record.split,
                task: resp.task,
                client_name: resp.client.clone(),
                repeat_index: resp.repeat,
                score: s.value,
                parse_failed: false,
                failure: None,
                warnings,
                feature_tags: record.feature_tags(),
            }
        }
        Err(e) => failed_record(resp, record, true, e.to_string()),
    }
}

/// Parses and scores stored replies. Replies about unknown samples and
/// tasks a client declines by design are dropped. Output order is fixed regardless of store order.
pub fn score_responses(responses: &[ResponseRecord], dataset: &Dataset) -> Vec<ScoreRecord> {
    let by_id: HashMap<Uuid, &SampleRecord> = dataset.manifest.samples.iter().map(|r| (r.id, r)).collect();
    let mut out: Vec<ScoreRecord> = responses
        .par_iter()
        .filter(|resp| !matches!(resp.error, Some(ClientError::Inapplicable(_))))
        .filter_map(|resp| by_id.get(&resp.sample_id).map(|rec| score_one(resp, rec)))
        .collect();
    out.sort_by(|a, b| {
        (&a.client_name, a.family, a.split, a.sample_id, a.task, a.repeat_index).cmp(&(
            &b.client_name,
            b.family,
            b.split,
            b.sample_id,
            b.task,
            b.repeat_index,
        ))
    });
    out
}

/// Scores a run directory and writes `scores.json` into it.
pub fn score_run(run_dir: &Path, dataset: &Dataset) -> Result<Vec<ScoreRecord>, HarnessError> {
    let responses = load_responses(&run_dir.join(RESPONSES_FILE))?;
    let records = score_responses(&responses, dataset);
    write_scores(run_dir, &records)?;
    Ok(records)
}

pub fn write_scores(run_dir: &Path, records: &[ScoreRecord]) -> Result<(), HarnessError> {
    write_json(&run_dir.join(SCORES_FILE), &records)
}

pub fn read_scores(run_dir: &Path) -> Result<Vec<ScoreRecord>, HarnessError> {
    read_json(&run_dir.join(SCORES_FILE))
}
