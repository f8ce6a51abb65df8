//! Vision-chat completion backends behind one interface, with an audit
//! transcript of every call.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitness::ObjectiveKind;
use crate::graph::Label;
use crate::prompts::{build_prompt, Role};

/// What the caller is asking for, in working-graph labels. Live backends see
/// only the prompts and images; the mock answers from this directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskContext {
    pub role: Role,
    pub k: usize,
    pub objective: ObjectiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<[Vec<Label>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<Vec<Label>>,
}

impl TaskContext {
    pub fn init(role: Role, k: usize, objective: ObjectiveKind) -> Self {
        TaskContext {
            role,
            k,
            objective,
            parents: None,
            current: None,
        }
    }

    pub fn crossover(k: usize, objective: ObjectiveKind, a: Vec<Label>, b: Vec<Label>) -> Self {
        TaskContext {
            role: Role::Crossover,
            k,
            objective,
            parents: Some([a, b]),
            current: None,
        }
    }

    pub fn mutation(role: Role, objective: ObjectiveKind, current: Vec<Label>) -> Self {
        TaskContext {
            role,
            k: current.len(),
            objective,
            parents: None,
            current: Some(current),
        }
    }

    /// Rejects contexts that lack what the role needs.
    pub fn check(&self) -> Result<()> {
        let ok = match self.role {
            r if r.is_init() => self.k >= 1,
            Role::Crossover => self.parents.is_some() && self.k >= 1,
            _ => self.current.as_ref().is_some_and(|c| !c.is_empty()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RoleMismatch(self.role.name().to_string()))
        }
    }
}

#[derive(Clone, Debug)]
pub struct GatewayRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    /// PNG-encoded images.
    pub images: Vec<Vec<u8>>,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub context: TaskContext,
    pub correlation_id: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input: u64,
    pub output: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatewayResponse {
    pub text: String,
    pub latency: f64,
    pub token_usage: Option<TokenUsage>,
    pub attempts: u32,
    pub correlation_id: u64,
}

pub trait VisionBackend: Send + Sync {
    fn complete(&self, req: &GatewayRequest) -> Result<GatewayResponse>;

    /// Whether requests must carry rendered images.
    fn needs_images(&self) -> bool;

    fn name(&self) -> &str;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub correlation_id: u64,
    pub backend: String,
    pub model_id: String,
    pub role: Role,
    pub prompt_sha256: String,
    pub image_sha256: Vec<String>,
    pub response: Option<String>,
    pub error: Option<String>,
    pub latency_s: f64,
    pub attempts: u32,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Front end used by the engine: builds prompts, assigns correlation ids and
/// records every call.
pub struct Gateway {
    backend: Box<dyn VisionBackend>,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    next_id: AtomicU64,
    transcript: Mutex<Option<BufWriter<File>>>,
    records: Mutex<Vec<TranscriptRecord>>,
}

impl Gateway {
    pub fn new(backend: Box<dyn VisionBackend>, model_id: impl Into<String>) -> Self {
        Gateway {
            backend,
            model_id: model_id.into(),
            temperature: 0.7,
            max_tokens: 300,
            next_id: AtomicU64::new(1),
            transcript: Mutex::new(None),
            records: Mutex::new(Vec::new()),
        }
    }

    /// Appends one JSON line per call to `path`.
    pub fn with_transcript(self, path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        *self.transcript.lock().expect("transcript lock") = Some(BufWriter::new(file));
        Ok(self)
    }

    pub fn needs_images(&self) -> bool {
        self.backend.needs_images()
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.records.lock().expect("records lock").clone()
    }

    pub fn ask(&self, context: TaskContext, images: Vec<Vec<u8>>) -> Result<GatewayResponse> {
        context.check()?;
        let (system_prompt, user_prompt) = build_prompt(context.role, context.objective, context.k);
        let req = GatewayRequest {
            system_prompt,
            user_prompt,
            images,
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            context,
            correlation_id: self.next_id.fetch_add(1, Ordering::Relaxed),
        };
        let started = Instant::now();
        let outcome = self.backend.complete(&req);
        let mut record = TranscriptRecord {
            correlation_id: req.correlation_id,
            backend: self.backend.name().to_string(),
            model_id: req.model_id.clone(),
            role: req.context.role,
            prompt_sha256: sha256_hex(format!("{}\n{}", req.system_prompt, req.user_prompt).as_bytes()),
            image_sha256: req.images.iter().map(|i| sha256_hex(i)).collect(),
            response: None,
            error: None,
            latency_s: started.elapsed().as_secs_f64(),
            attempts: 1,
            input_tokens: None,
            output_tokens: None,
        };
        match &outcome {
            Ok(resp) => {
                record.response = Some(resp.text.clone());
                record.latency_s = resp.latency;
                record.attempts = resp.attempts;
                record.input_tokens = resp.token_usage.map(|u| u.input);
                record.output_tokens = resp.token_usage.map(|u| u.output);
            }
            Err(e) => {
                record.error = Some(e.to_string());
                if let Error::Transport { attempts, .. } = e {
                    record.attempts = *attempts;
                }
            }
        }
        self.log(record);
        outcome
    }

    fn log(&self, record: TranscriptRecord) {
        if let Some(w) = self.transcript.lock().expect("transcript lock").as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                log::warn!("transcript write failed: {e}");
            }
        }
        self.records.lock().expect("records lock").push(record);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub base_url: String,
    pub model_id: String,
    pub api_key_env: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub max_inflight: usize,
    pub requests_per_second: f64,
    pub backoff_base_ms: u64,
    pub max_image_bytes: usize,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com/v1".into(),
            model_id: "gpt-4o-2024-11-20".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_s: 60.0,
            max_retries: 3,
            max_inflight: 4,
            requests_per_second: 2.0,
            backoff_base_ms: 500,
            max_image_bytes: 20 * 1024 * 1024,
        }
    }
}

struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        TokenBucket {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    fn acquire(&self) {
        if self.rate <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut s = self.state.lock().expect("bucket lock");
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.rate).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

struct Inflight {
    limit: usize,
    count: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Inflight);

impl Inflight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().expect("inflight lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("inflight lock");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().expect("inflight lock") -= 1;
        self.0.freed.notify_one();
    }
}

enum Failure {
    Transient(String),
    Fatal(Error),
}

/// OpenAI-style chat-completions client with base64 image parts.
pub struct LiveBackend {
    cfg: LiveConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    bucket: TokenBucket,
    inflight: Inflight,
}

impl LiveBackend {
    /// Fails with a credential error, without touching the network, when the
    /// key variable is unset or empty.
    pub fn from_env(cfg: LiveConfig) -> Result<Self> {
        let api_key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| Error::Credential(cfg.api_key_env.clone()))?;
        Self::with_key(cfg, api_key)
    }

    pub fn with_key(cfg: LiveConfig, api_key: String) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_s))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(LiveBackend {
            bucket: TokenBucket::new(cfg.requests_per_second),
            inflight: Inflight {
                limit: cfg.max_inflight.max(1),
                count: Mutex::new(0),
                freed: Condvar::new(),
            },
            cfg,
            api_key,
            client,
        })
    }

    pub fn payload(req: &GatewayRequest) -> Value {
        let mut parts = vec![json!({"type": "text", "text": req.user_prompt})];
        for png in &req.images {
            let b64 = base64::engine::general_purpose::STANDARD.encode(png);
            parts.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{b64}")}
            }));
        }
        json!({
            "model": req.model_id,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": parts}
            ]
        })
    }

    fn attempt(&self, body: &Value) -> std::result::Result<(String, Option<TokenUsage>), Failure> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| Failure::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(Failure::Fatal(Error::Auth(format!("HTTP {status}: {text}")))),
            408 | 429 | 500..=599 => return Err(Failure::Transient(format!("HTTP {status}: {text}"))),
            _ => return Err(Failure::Fatal(Error::Rejected(format!("HTTP {status}: {text}")))),
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Fatal(e.into()))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Failure::Fatal(Error::ResponseParse { raw: text.clone() }))?;
        let usage = v["usage"]["prompt_tokens"].as_u64().map(|input| TokenUsage {
            input,
            output: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        });
        Ok((content.to_string(), usage))
    }
}

impl VisionBackend for LiveBackend {
    fn complete(&self, req: &GatewayRequest) -> Result<GatewayResponse> {
        if let Some(big) = req.images.iter().find(|i| i.len() > self.cfg.max_image_bytes) {
            return Err(Error::Input(format!(
                "image of {} bytes exceeds limit of {}",
                big.len(),
                self.cfg.max_image_bytes
            )));
        }
        let body = Self::payload(req);
        let _permit = self.inflight.acquire();
        let started = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            self.bucket.acquire();
            match self.attempt(&body) {
                Ok((text, token_usage)) => {
                    return Ok(GatewayResponse {
                        text,
                        latency: started.elapsed().as_secs_f64(),
                        token_usage,
                        attempts,
                        correlation_id: req.correlation_id,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(message)) => {
                    if attempts > self.cfg.max_retries {
                        return Err(Error::Transport { attempts, message });
                    }
                    let backoff = self.cfg.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16));
                    log::warn!("call {} attempt {attempts} failed: {message}", req.correlation_id);
                    std::thread::sleep(Duration::from_millis(backoff));
                }
            }
        }
    }

    fn needs_images(&self) -> bool {
        true
    }

    fn name(&self) -> &str {
        "live"
    }
}
