//! HTTP clients for hosted multimodal models.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use base64::Engine;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Attempt, AttemptStatus, Client, ClientError, Outcome, Query};
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireStyle {
    /// `POST {base}/chat/completions` with an `image_url` data-URL part.
    ChatCompletions,
    /// `POST {base}/messages` with base64 image content blocks.
    Anthropic,
    /// `POST {base}/models/{model}:generateContent` with inline data.
    Gemini,
}

fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> u32 {
    3
}
fn default_rpm() -> f64 {
    60.0
}
fn default_concurrency() -> usize {
    4
}
fn default_max_tokens() -> u32 {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpointConfig {
    /// Name used in reports.
    pub name: String,
    pub base_url: String,
    /// Environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub model_name: String,
    pub wire_style: WireStyle,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: f64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Decoding options merged into the request body. `temperature`
    /// defaults to 0.
    #[serde(default)]
    pub options: BTreeMap<String, Value>,
}

impl ModelEndpointConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.timeout_s > 0.0) {
            return Err(ClientError::InvalidRequest("timeout_s must be positive".into()));
        }
        if !(self.requests_per_minute > 0.0) {
            return Err(ClientError::InvalidRequest("requests_per_minute must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(ClientError::InvalidRequest("max_concurrency must be at least 1".into()));
        }
        Ok(())
    }

    fn decoding_options(&self) -> BTreeMap<String, Value> {
        let mut o = self.options.clone();
        o.entry("temperature".into()).or_insert(json!(0));
        o
    }

    /// URL, headers and JSON body for one question.
    pub fn build_request(&self, api_key: Option<&str>, prompt: &str, image_png: &[u8]) -> (String, Vec<(String, String)>, String) {
        let b64 = base64::engine::general_purpose::STANDARD.encode(image_png);
        let base = self.base_url.trim_end_matches('/');
        let opts = self.decoding_options();
        let mut headers = vec![("content-type".to_string(), "application/json".to_string())];
        let (url, mut body) = match self.wire_style {
            WireStyle::ChatCompletions => {
                if let Some(k) = api_key {
                    headers.push(("authorization".into(), format!("Bearer {k}")));
                }
                let body = json!({
                    "model": self.model_name,
                    "max_tokens": self.max_tokens,
                    "messages": [{
                        "role": "user",
                        "content": [
                            {"type": "text", "text": prompt},
                            {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}},
                        ],
                    }],
                });
                (format!("{base}/chat/completions"), body)
            }
            WireStyle::Anthropic => {
                if let Some(k) = api_key {
                    headers.push(("x-api-key".into(), k.to_string()));
                }
                headers.push(("anthropic-version".into(), "2023-06-01".into()));
                let body = json!({
                    "model": self.model_name,
                    "max_tokens": self.max_tokens,
                    "messages": [{
                        "role": "user",
                        "content": [
                            {"type": "image", "source": {"type": "base64", "media_type": "image/png", "data": b64}},
                            {"type": "text", "text": prompt},
                        ],
                    }],
                });
                (format!("{base}/messages"), body)
            }
            WireStyle::Gemini => {
                if let Some(k) = api_key {
                    headers.push(("x-goog-api-key".into(), k.to_string()));
                }
                let body = json!({
                    "contents": [{
                        "role": "user",
                        "parts": [
                            {"text": prompt},
                            {"inline_data": {"mime_type": "image/png", "data": b64}},
                        ],
                    }],
                    "generationConfig": {},
                });
                (format!("{base}/models/{}:generateContent", self.model_name), body)
            }
        };
        let target = match self.wire_style {
            WireStyle::Gemini => &mut body["generationConfig"],
            _ => &mut body,
        };
        if let Value::Object(m) = target {
            for (k, v) in opts {
                m.insert(k, v);
            }
        }
        (url, headers, body.to_string())
    }

    /// Pulls the reply text out of a response body.
    pub fn extract_text(&self, body: &str) -> Result<String, ClientError> {
        let v: Value = serde_json::from_str(body).map_err(|e| ClientError::BadResponse(format!("body is not JSON: {e}")))?;
        let texts = |parts: &Value, key: &str| -> Option<String> {
            let arr = parts.as_array()?;
            let s: Vec<&str> = arr.iter().filter_map(|p| p.get(key).and_then(Value::as_str)).collect();
            (!s.is_empty()).then(|| s.concat())
        };
        let text = match self.wire_style {
            WireStyle::ChatCompletions => {
                let c = &v["choices"][0]["message"]["content"];
                c.as_str().map(str::to_string).or_else(|| texts(c, "text"))
            }
            WireStyle::Anthropic => texts(&v["content"], "text"),
            WireStyle::Gemini => texts(&v["candidates"][0]["content"]["parts"], "text"),
        };
        text.ok_or_else(|| ClientError::BadResponse("no text in response".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    Timeout,
    Io(String),
}

pub trait HttpTransport: Send + Sync {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str, timeout: Duration) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        UreqTransport {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl HttpTransport for UreqTransport {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str, _timeout: Duration) -> Result<HttpResponse, TransportError> {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        match req.send(body) {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let body = resp.body_mut().read_to_string().map_err(|e| TransportError::Io(e.to_string()))?;
                Ok(HttpResponse { status, body })
            }
            Err(ureq::Error::Timeout(_)) => Err(TransportError::Timeout),
            Err(e) => Err(TransportError::Io(e.to_string())),
        }
    }
}

/// Exponential backoff: `base * factor^k`, scaled by a random factor in
/// `[1 - jitter, 1 + jitter]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base: Duration,
    pub factor: f64,
    pub jitter: f64,
}

impl RetryPolicy {
    pub fn new(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.25,
        }
    }

    pub fn delay(&self, retry: u32, rng: &mut impl Rng) -> Duration {
        let nominal = self.base.as_secs_f64() * self.factor.powi(retry as i32);
        let j = if self.jitter > 0.0 { rng.random_range(-self.jitter..=self.jitter) } else { 0.0 };
        Duration::from_secs_f64((nominal * (1.0 + j)).max(0.0))
    }
}

/// Token bucket holding up to `capacity` requests, refilled at `rate` per second.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    rate: f64,
    state: Mutex<(f64, Option<Instant>)>,
}

impl TokenBucket {
    pub fn per_minute(rpm: f64, capacity: usize) -> Self {
        TokenBucket {
            capacity: capacity.max(1) as f64,
            rate: rpm / 60.0,
            state: Mutex::new((capacity.max(1) as f64, None)),
        }
    }

    /// Takes a token if one is available at `now`, else reports the wait.
    pub fn try_take(&self, now: Instant) -> Result<(), Duration> {
        let mut st = self.state.lock().expect("bucket lock");
        if let Some(last) = st.1 {
            let dt = now.saturating_duration_since(last).as_secs_f64();
            st.0 = (st.0 + dt * self.rate).min(self.capacity);
        }
        st.1 = Some(now);
        if st.0 >= 1.0 {
            st.0 -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - st.0) / self.rate))
        }
    }

    pub fn acquire(&self, sleep: &dyn Fn(Duration)) {
        while let Err(wait) = self.try_take(Instant::now()) {
            sleep(wait);
        }
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct RemoteClient {
    config: ModelEndpointConfig,
    api_key: Option<String>,
    transport: Box<dyn HttpTransport>,
    retry: RetryPolicy,
    bucket: TokenBucket,
    sleep: Sleeper,
}

impl RemoteClient {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: ModelEndpointConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ClientError::InvalidRequest(format!("environment variable {var} is not set")))?),
            None => None,
        };
        let transport = Box::new(UreqTransport::new(Duration::from_secs_f64(config.timeout_s)));
        Ok(Self::with_transport(config, api_key, transport))
    }

    pub fn with_transport(config: ModelEndpointConfig, api_key: Option<String>, transport: Box<dyn HttpTransport>) -> Self {
        RemoteClient {
            retry: RetryPolicy::new(config.max_retries),
            bucket: TokenBucket::per_minute(config.requests_per_minute, config.max_concurrency),
            config,
            api_key,
            transport,
            sleep: Arc::new(std::thread::sleep),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Replaces the function used to wait between attempts.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn config(&self) -> &ModelEndpointConfig {
        &self.config
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl Client for RemoteClient {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn max_concurrency(&self) -> usize {
        self.config.max_concurrency
    }

    fn is_local(&self) -> bool {
        false
    }

    fn query(&self, q: &Query<'_>) -> Outcome {
        if q.prompt.is_empty() || q.image_png.is_empty() {
            return Outcome::local(Err(ClientError::InvalidRequest("prompt and image must be non-empty".into())));
        }
        let (url, headers, body) = self.config.build_request(self.api_key.as_deref(), q.prompt, q.image_png);
        let timeout = Duration::from_secs_f64(self.config.timeout_s);
        let mut jitter = Seed(0)
            .child(&format!("{}/{}/{}/{}", self.config.name, q.record.id, q.task, q.repeat))
            .rng();
        let mut attempts = Vec::new();
        let mut last_err = ClientError::Transport("no attempt made".into());
        for n in 0..=self.retry.max_retries {
            if n > 0 {
                (self.sleep)(self.retry.delay(n - 1, &mut jitter));
            }
            self.bucket.acquire(&*self.sleep);
            let started = Instant::now();
            let timestamp_ms = now_ms();
            let res = self.transport.post(&url, &headers, &body, timeout);
            let latency_ms = started.elapsed().as_millis() as u64;
            let mut attempt = Attempt {
                timestamp_ms,
                attempt: n + 1,
                status: AttemptStatus::Ok,
                http_status: None,
                latency_ms,
                text: None,
                error: None,
            };
            let (retry, err) = match res {
                Err(TransportError::Timeout) => {
                    attempt.status = AttemptStatus::Timeout;
                    (true, ClientError::Timeout)
                }
                Err(TransportError::Io(e)) => {
                    attempt.status = AttemptStatus::Transport;
                    (true, ClientError::Transport(e))
                }
                Ok(resp) => {
                    attempt.http_status = Some(resp.status);
                    match resp.status {
                        200..=299 => match self.config.extract_text(&resp.body) {
                            Ok(text) => {
                                attempt.text = Some(text.clone());
                                attempts.push(attempt);
                                return Outcome {
                                    result: Ok(text),
                                    attempts,
                                };
                            }
                            Err(e) => {
                                attempt.status = AttemptStatus::BadResponse;
                                (false, e)
                            }
                        },
                        401 | 403 => {
                            attempt.status = AttemptStatus::AuthRejected;
                            (false, ClientError::AuthRejected(resp.status))
                        }
                        429 => {
                            attempt.status = AttemptStatus::RateLimited;
                            (true, ClientError::RateLimited(n + 1))
                        }
                        500..=599 => {
                            attempt.status = AttemptStatus::ServerError;
                            (true, ClientError::Transport(format!("HTTP {}", resp.status)))
                        }
                        s => {
                            attempt.status = AttemptStatus::BadResponse;
                            (false, ClientError::BadResponse(format!("HTTP {s}: {}", truncate(&resp.body, 200))))
                        }
                    }
                }
            };
            attempt.error = Some(err.to_string());
            attempts.push(attempt);
            last_err = err;
            if !retry {
                break;
            }
        }
        Outcome {
            result: Err(last_err),
            attempts,
        }
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(style: WireStyle) -> ModelEndpointConfig {
        ModelEndpointConfig {
            name: "m".into(),
            base_url: "http://localhost:9/v1/".into(),
            api_key_env: None,
            model_name: "vision-1".into(),
            wire_style: style,
            timeout_s: 5.0,
            max_retries: 3,
            requests_per_minute: 60.0,
            max_concurrency: 4,
            max_tokens: 512,
            options: BTreeMap::new(),
        }
    }

    #[test]
    fn request_shapes() {
        let (url, h, body) = cfg(WireStyle::ChatCompletions).build_request(Some("k"), "hi", &[1, 2, 3]);
        assert_eq!(url, "http://localhost:9/v1/chat/completions");
        assert!(h.contains(&("authorization".into(), "Bearer k".into())));
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["temperature"], json!(0));
        assert_eq!(v["messages"][0]["content"][1]["image_url"]["url"], json!("data:image/png;base64,AQID"));

        let (url, _, body) = cfg(WireStyle::Anthropic).build_request(None, "hi", &[1, 2, 3]);
        assert!(url.ends_with("/messages"));
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["messages"][0]["content"][0]["source"]["data"], json!("AQID"));

        let (url, _, body) = cfg(WireStyle::Gemini).build_request(None, "hi", &[1, 2, 3]);
        assert!(url.ends_with("/models/vision-1:generateContent"));
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["generationConfig"]["temperature"], json!(0));
        assert_eq!(v["contents"][0]["parts"][1]["inline_data"]["data"], json!("AQID"));
    }

    #[test]
    fn reply_text_extraction() {
        let c = cfg(WireStyle::ChatCompletions);
        assert_eq!(c.extract_text(r#"{"choices":[{"message":{"content":"ok"}}]}"#).unwrap(), "ok");
        let a = cfg(WireStyle::Anthropic);
        assert_eq!(
            a.extract_text(r#"{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}"#).unwrap(),
            "ab"
        );
        let g = cfg(WireStyle::Gemini);
        assert_eq!(g.extract_text(r#"{"candidates":[{"content":{"parts":[{"text":"g"}]}}]}"#).unwrap(), "g");
        assert!(g.extract_text("{}").is_err());
    }

    #[test]
    fn bucket_spacing() {
        let b = TokenBucket::per_minute(60.0, 2);
        let t0 = Instant::now();
        assert!(b.try_take(t0).is_ok());
        assert!(b.try_take(t0).is_ok());
        let wait = b.try_take(t0).unwrap_err();
        assert!((wait.as_secs_f64() - 1.0).abs() < 1e-9);
        assert!(b.try_take(t0 + Duration::from_millis(1001)).is_ok());
    }

    #[test]
    fn backoff_grows() {
        let p = RetryPolicy {
            jitter: 0.0,
            ..RetryPolicy::new(3)
        };
        let mut rng = Seed(1).rng();
        assert_eq!(p.delay(0, &mut rng), Duration::from_secs(1));
        assert_eq!(p.delay(2, &mut rng), Duration::from_secs(4));
    }
}
