//! Answer producers behind one query interface: remote model endpoints, the
//! ground-truth oracle, calibration baselines and scripted replies.

mod baseline;
mod oracle;
mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::Task;
use crate::sample::SampleRecord;

pub use baseline::{baseline_answer, BaselineClient, BaselineKind};
pub use oracle::{approximation_knots, extreme_interval, oracle_answer, oracle_typed, OracleClient, ORACLE_KNOTS};
pub use remote::{
    HttpResponse, HttpTransport, ModelEndpointConfig, RemoteClient, RetryPolicy, TokenBucket, TransportError, UreqTransport,
    WireStyle,
};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum ClientError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited after {0} attempts")]
    RateLimited(u32),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("credentials rejected (HTTP {0})")]
    AuthRejected(u16),
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("{0}")]
    Inapplicable(String),
}

/// Everything a client may look at for one question.
///
/// Remote clients only read the prompt and image; local clients may read the
/// sample record.
pub struct Query<'a> {
    pub record: &'a SampleRecord,
    pub task: Task,
    pub prompt: &'a str,
    pub image_png: &'a [u8],
    pub repeat: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStatus {
    Ok,
    Timeout,
    RateLimited,
    ServerError,
    Transport,
    AuthRejected,
    BadResponse,
    Rejected,
}

/// One try at a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    /// Unix milliseconds for remote clients; zero for local ones.
    pub timestamp_ms: u64,
    pub attempt: u32,
    pub status: AttemptStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Attempt {
    pub fn local(result: &Result<String, ClientError>) -> Attempt {
        Attempt {
            timestamp_ms: 0,
            attempt: 1,
            status: if result.is_ok() { AttemptStatus::Ok } else { AttemptStatus::Rejected },
            http_status: None,
            latency_ms: 0,
            text: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(|e| e.to_string()),
        }
    }
}

pub struct Outcome {
    pub result: Result<String, ClientError>,
    pub attempts: Vec<Attempt>,
}

impl Outcome {
    pub fn local(result: Result<String, ClientError>) -> Outcome {
        let attempts = vec![Attempt::local(&result)];
        Outcome { result, attempts }
    }
}

pub trait Client: Send + Sync {
    fn name(&self) -> &str;

    fn query(&self, q: &Query<'_>) -> Outcome;

    /// Largest number of queries worth running at once.
    fn max_concurrency(&self) -> usize {
        1
    }

    /// Whether answers are computed in-process (no network, no clock).
    fn is_local(&self) -> bool {
        true
    }
}

type ReplyFn = dyn Fn(&Query<'_>) -> Result<String, ClientError> + Send + Sync;

/// Replies from a closure; used for tests and calibration fixtures.
#[derive(Clone)]
pub struct ScriptedClient {
    name: String,
    reply: Arc<ReplyFn>,
}

impl ScriptedClient {
    pub fn new(name: impl Into<String>, reply: impl Fn(&Query<'_>) -> Result<String, ClientError> + Send + Sync + 'static) -> Self {
        ScriptedClient {
            name: name.into(),
            reply: Arc::new(reply),
        }
    }

    /// Always replies with `text`.
    pub fn fixed(name: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        ScriptedClient::new(name, move |_| Ok(text.clone()))
    }
}

impl Client for ScriptedClient {
    fn name(&self) -> &str {
        &self.name
    }

    fn query(&self, q: &Query<'_>) -> Outcome {
        Outcome::local((self.reply)(q))
    }
}
