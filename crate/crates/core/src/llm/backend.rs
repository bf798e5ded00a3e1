use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::parse::{parse_response, DiagnosisResponse};
use super::prompt::RenderedPrompt;
use super::LlmError;

/// Hosted API family; selects auth header and default sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    #[default]
    OpenAi,
    Glm,
    Gemini,
    /// Any other endpoint speaking the same chat-completion shape.
    Generic,
}

struct Adapter {
    default_endpoint: &'static str,
    auth_header: &'static str,
    auth_prefix: &'static str,
    temperature: Option<f64>,
    top_p: Option<f64>,
    seed: Option<u64>,
}

impl Provider {
    fn adapter(self) -> Adapter {
        match self {
            Provider::OpenAi => Adapter {
                default_endpoint: "https://api.openai.com/v1/chat/completions",
                auth_header: "Authorization",
                auth_prefix: "Bearer ",
                temperature: None,
                top_p: None,
                seed: Some(42),
            },
            Provider::Glm => Adapter {
                default_endpoint: "https://open.bigmodel.cn/api/paas/v4/chat/completions",
                auth_header: "Authorization",
                auth_prefix: "Bearer ",
                temperature: Some(0.15),
                top_p: Some(0.7),
                seed: None,
            },
            Provider::Gemini => Adapter {
                default_endpoint: "https://generativelanguage.googleapis.com/v1beta/openai/chat/completions",
                auth_header: "Authorization",
                auth_prefix: "Bearer ",
                temperature: None,
                top_p: None,
                seed: None,
            },
            Provider::Generic => Adapter {
                default_endpoint: "http://127.0.0.1:8000/v1/chat/completions",
                auth_header: "Authorization",
                auth_prefix: "Bearer ",
                temperature: None,
                top_p: None,
                seed: None,
            },
        }
    }
}

/// Connection and sampling settings for a live backend. Holds the *name*
/// of the credential variable, never the credential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub provider: Provider,
    pub endpoint: String,
    pub model: String,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub seed: Option<u64>,
    pub max_attempts: u32,
    /// Delay before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
    pub timeout_secs: u64,
    pub api_key_env: String,
    pub max_in_flight: usize,
    /// Token-bucket refill rate; `None` disables rate limiting.
    pub requests_per_minute: Option<f64>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self::for_provider(Provider::OpenAi, "gpt-4-1106-preview")
    }
}

impl BackendConfig {
    pub fn for_provider(provider: Provider, model: &str) -> Self {
        let a = provider.adapter();
        Self {
            provider,
            endpoint: a.default_endpoint.into(),
            model: model.into(),
            temperature: a.temperature,
            top_p: a.top_p,
            seed: a.seed,
            max_attempts: 3,
            backoff_ms: vec![1000, 4000, 16000],
            timeout_secs: 120,
            api_key_env: "RAREKG_API_KEY".into(),
            max_in_flight: 4,
            requests_per_minute: None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::Config(m.into()));
        if self.endpoint.is_empty() || self.model.is_empty() {
            return bad("endpoint and model must be set");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be >= 1");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be >= 1");
        }
        if self.api_key_env.is_empty() {
            return bad("api_key_env must name an environment variable");
        }
        if matches!(self.requests_per_minute, Some(r) if !(r > 0.0)) {
            return bad("requests_per_minute must be positive");
        }
        Ok(())
    }

    /// Request body; contains no credential.
    pub fn request_body(&self, prompt: &RenderedPrompt) -> serde_json::Value {
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        });
        let map = body.as_object_mut().expect("object literal");
        if let Some(t) = self.temperature {
            map.insert("temperature".into(), json!(t));
        }
        if let Some(p) = self.top_p {
            map.insert("top_p".into(), json!(p));
        }
        if let Some(s) = self.seed {
            map.insert("seed".into(), json!(s));
        }
        body
    }

    fn backoff(&self, retry: usize) -> Duration {
        let ms = self.backoff_ms.get(retry.min(self.backoff_ms.len().saturating_sub(1))).copied().unwrap_or(0);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking POST, so tests can script failures.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str, timeout: Duration) -> Result<HttpReply, String>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| LlmError::Config(format!("http client: {e}")))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str, timeout: Duration) -> Result<HttpReply, String> {
        let mut req = self
            .client
            .post(url)
            .timeout(timeout)
            .header("Content-Type", "application/json")
            .body(body.to_string());
        for (k, v) in headers {
            req = req.header(k, v);
        }
        // reqwest errors can embed the URL but never header values
        let resp = req.send().map_err(|e| e.without_url().to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.without_url().to_string())?;
        Ok(HttpReply { status, body })
    }
}

/// Counting semaphore bounding concurrent calls.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Token bucket shared by all callers; capacity one minute's worth, at
/// least one token.
pub struct RateLimiter {
    per_sec: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn per_minute(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        Self {
            per_sec: rate / 60.0,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.per_sec).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.per_sec
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// One file per call under a run directory. The credential is replaced by
/// `[REDACTED]` wherever it occurs.
pub struct CallJournal {
    dir: PathBuf,
    counter: AtomicU64,
}

impl CallJournal {
    pub fn new(dir: &Path) -> Result<Self, LlmError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            counter: AtomicU64::new(0),
        })
    }

    fn record(&self, label: &str, entry: &serde_json::Value, secret: &str) -> Result<PathBuf, LlmError> {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let safe: String = label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect();
        let mut text = serde_json::to_string_pretty(entry).expect("json value");
        if !secret.is_empty() {
            text = text.replace(secret, "[REDACTED]");
        }
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.write_all(b"\n")?;
        let mut i = 0;
        loop {
            let path = self.dir.join(format!("call-{safe}-{n:05}-{i}.json"));
            match tmp.persist_noclobber(&path) {
                Ok(_) => return Ok(path),
                Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => {
                    tmp = e.file;
                    i += 1;
                }
                Err(e) => return Err(e.error.into()),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallOutcome {
    pub response: DiagnosisResponse,
    pub attempts: u32,
}

/// Anything that turns a prompt into a diagnosis list.
pub trait DiagnosisBackend: Send + Sync {
    fn diagnose(&self, prompt: &RenderedPrompt, label: &str) -> Result<CallOutcome, LlmError>;

    /// Echoed into reports; must not contain secrets.
    fn describe(&self) -> String;
}

pub struct LiveBackend {
    config: BackendConfig,
    transport: Box<dyn Transport>,
    gate: Gate,
    limiter: Option<RateLimiter>,
    journal: Option<CallJournal>,
}

impl LiveBackend {
    pub fn new(config: BackendConfig, transport: Box<dyn Transport>) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(Self {
            gate: Gate::new(config.max_in_flight),
            limiter: config.requests_per_minute.map(RateLimiter::per_minute),
            config,
            transport,
            journal: None,
        })
    }

    pub fn with_journal(mut self, journal: CallJournal) -> Self {
        self.journal = Some(journal);
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }
}

fn extract_content(body: &str) -> Result<String, String> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| "response has no choices[0].message.content".to_string())
}

fn retryable(status: u16) -> bool {
    matches!(status, 408 | 409 | 425 | 429) || status >= 500
}

impl LiveBackend {
    fn credential(&self) -> Result<String, LlmError> {
        match std::env::var(&self.config.api_key_env) {
            Ok(k) if !k.is_empty() => Ok(k),
            _ => Err(LlmError::MissingCredential {
                var: self.config.api_key_env.clone(),
            }),
        }
    }

    /// Fails fast when the credential variable is unset or empty, so a
    /// batch run does not start without it.
    pub fn check_credential(&self) -> Result<(), LlmError> {
        self.credential().map(|_| ())
    }
}

impl DiagnosisBackend for LiveBackend {
    fn diagnose(&self, prompt: &RenderedPrompt, label: &str) -> Result<CallOutcome, LlmError> {
        let cfg = &self.config;
        let key = self.credential()?;
        let adapter = cfg.provider.adapter();
        let headers = vec![(adapter.auth_header.to_string(), format!("{}{key}", adapter.auth_prefix))];
        let body = cfg.request_body(prompt);
        let body_text = body.to_string();
        let timeout = Duration::from_secs(cfg.timeout_secs);

        let _slot = self.gate.enter();
        let mut last_status = None;
        let mut last_message = String::new();
        let mut attempts = 0;
        let mut log_entries = Vec::new();
        let mut result = None;
        while attempts < cfg.max_attempts {
            if attempts > 0 {
                std::thread::sleep(cfg.backoff(attempts as usize - 1));
            }
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            attempts += 1;
            match self.transport.post(&cfg.endpoint, &headers, &body_text, timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    log_entries.push(json!({"attempt": attempts, "status": reply.status, "body": reply.body}));
                    match extract_content(&reply.body) {
                        Ok(content) => {
                            result = Some(content);
                            break;
                        }
                        Err(m) => {
                            last_status = Some(reply.status);
                            last_message = m;
                        }
                    }
                }
                Ok(reply) => {
                    log_entries.push(json!({"attempt": attempts, "status": reply.status, "body": reply.body}));
                    last_status = Some(reply.status);
                    last_message = format!("HTTP {}", reply.status);
                    if !retryable(reply.status) {
                        break;
                    }
                }
                Err(m) => {
                    log_entries.push(json!({"attempt": attempts, "error": m}));
                    last_status = None;
                    last_message = m;
                }
            }
            log::debug!("{label}: attempt {attempts} failed: {last_message}");
        }
        if let Some(j) = &self.journal {
            let entry = json!({
                "label": label,
                "provider": cfg.provider,
                "endpoint": cfg.endpoint,
                "request": body,
                "attempts": log_entries,
            });
            j.record(label, &entry, &key)?;
        }
        match result {
            Some(content) => Ok(CallOutcome {
                response: parse_response(&content),
                attempts,
            }),
            None => Err(LlmError::Transport {
                attempts,
                status: last_status,
                message: last_message.replace(&key, "[REDACTED]"),
            }),
        }
    }

    fn describe(&self) -> String {
        let c = &self.config;
        format!(
            "live provider={:?} model={} temperature={:?} top_p={:?} seed={:?}",
            c.provider, c.model, c.temperature, c.top_p, c.seed
        )
    }
}
