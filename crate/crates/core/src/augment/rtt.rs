use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AugmentError, Augmenter};
use crate::corpus::tokenize;
use crate::rng::Stream;

/// Environment variable holding the translation API key.
pub const API_KEY_ENV: &str = "TEXTAUG_TRANSLATE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Forward,
    Back,
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Forward => "forward",
            Leg::Back => "back",
        })
    }
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("{0}")]
    Failed(String),
}

pub trait TranslationBackend: Send + Sync {
    fn name(&self) -> &str;
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError>;
}

/// How often and how patiently rate-limited requests are retried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

/// Raw outputs of both legs of one round trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RttRecord {
    pub source: String,
    pub pivot: String,
    pub forward: String,
    pub back: String,
}

fn translate_leg(
    backend: &dyn TranslationBackend,
    text: &str,
    source: &str,
    target: &str,
    leg: Leg,
    retry: &RetryPolicy,
) -> Result<String, AugmentError> {
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        match backend.translate(text, source, target) {
            Ok(out) if out.trim().is_empty() => return Err(AugmentError::EmptyTranslation { leg }),
            Ok(out) => return Ok(out),
            Err(TranslateError::Failed(cause)) => return Err(AugmentError::BackendError { leg, cause }),
            Err(TranslateError::RateLimited { retry_after }) => {
                if attempt > retry.max_retries {
                    return Err(AugmentError::RateLimited { leg, attempts: attempt });
                }
                let backoff = retry.initial_backoff * 2u32.saturating_pow(attempt - 1);
                std::thread::sleep(retry_after.unwrap_or(backoff));
            }
        }
    }
}

/// Translates English `text` into `pivot` and back.
pub fn rtt_augment(
    backend: &dyn TranslationBackend,
    text: &str,
    pivot: &str,
    retry: &RetryPolicy,
) -> Result<RttRecord, AugmentError> {
    let forward = translate_leg(backend, text, "en", pivot, Leg::Forward, retry)?;
    let back = translate_leg(backend, &forward, pivot, "en", Leg::Back, retry)?;
    Ok(RttRecord {
        source: text.to_string(),
        pivot: pivot.to_string(),
        forward,
        back,
    })
}

/// Round-trip augmenter. Copy `j` of a record goes through
/// `pivots[j % pivots.len()]`; every round trip is kept in an audit log.
pub struct RttAugmenter {
    backend: Arc<dyn TranslationBackend>,
    pivots: Vec<String>,
    retry: RetryPolicy,
    audit: Mutex<Vec<RttRecord>>,
}

impl RttAugmenter {
    pub fn new(backend: Arc<dyn TranslationBackend>, pivots: Vec<String>, retry: RetryPolicy) -> Result<Self, AugmentError> {
        if pivots.is_empty() {
            return Err(AugmentError::InvalidConfig("at least one pivot language is required".into()));
        }
        Ok(RttAugmenter {
            backend,
            pivots,
            retry,
            audit: Mutex::new(Vec::new()),
        })
    }

    pub fn pivots(&self) -> &[String] {
        &self.pivots
    }

    /// Audit records sorted by (source, pivot) so the log is independent of
    /// thread scheduling.
    pub fn audit(&self) -> Vec<RttRecord> {
        let mut out = self.audit.lock().unwrap().clone();
        out.sort_by(|a, b| (&a.source, &a.pivot).cmp(&(&b.source, &b.pivot)));
        out
    }
}

impl Augmenter for RttAugmenter {
    fn name(&self) -> &str {
        "rtt"
    }

    fn augment(&self, text: &str, rng: &mut Stream) -> Result<String, AugmentError> {
        self.augment_copy(text, 0, rng)
    }

    fn augment_copy(&self, text: &str, copy: usize, _rng: &mut Stream) -> Result<String, AugmentError> {
        let pivot = &self.pivots[copy % self.pivots.len()];
        let record = rtt_augment(self.backend.as_ref(), text, pivot, &self.retry)?;
        let out = record.back.clone();
        self.audit.lock().unwrap().push(record);
        Ok(out)
    }

    fn max_copies(&self) -> Option<usize> {
        Some(self.pivots.len())
    }
}

/// Returns every text unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityBackend;

impl TranslationBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate(&self, text: &str, _source: &str, _target: &str) -> Result<String, TranslateError> {
        Ok(text.to_string())
    }
}

/// Offline word-for-word translator built from `{en_word: pivot_word}`
/// dictionaries, one per pivot language.
///
/// Text is tokenized and each token mapped through the table; unknown tokens
/// pass through. The reverse table maps a pivot word to the alphabetically
/// first English word that produces it, which is where paraphrases come from.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    forward: HashMap<String, BTreeMap<String, String>>,
    backward: HashMap<String, HashMap<String, String>>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_table(mut self, lang: &str, table: BTreeMap<String, String>) -> Self {
        let mut back: HashMap<String, String> = HashMap::new();
        // BTreeMap iterates keys in order: the first English word wins.
        for (en, pivot) in &table {
            back.entry(pivot.clone()).or_insert_with(|| en.clone());
        }
        self.forward.insert(lang.to_string(), table);
        self.backward.insert(lang.to_string(), back);
        self
    }

    pub fn load_table(self, lang: &str, path: impl AsRef<Path>) -> Result<Self, TranslateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| TranslateError::Failed(format!("{}: {e}", path.display())))?;
        let table: BTreeMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| TranslateError::Failed(format!("{}: {e}", path.display())))?;
        Ok(self.with_table(lang, table))
    }

    pub fn languages(&self) -> Vec<&str> {
        let mut langs: Vec<&str> = self.forward.keys().map(String::as_str).collect();
        langs.sort_unstable();
        langs
    }
}

impl TranslationBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError> {
        let lookup = |word: &str| -> Option<String> {
            if source == "en" {
                self.forward.get(target)?.get(word).cloned()
            } else if target == "en" {
                self.backward.get(source)?.get(word).cloned()
            } else {
                None
            }
        };
        let supported = (source == "en" && self.forward.contains_key(target))
            || (target == "en" && self.backward.contains_key(source));
        if !supported {
            return Err(TranslateError::Failed(format!("unsupported language pair {source}->{target}")));
        }
        Ok(tokenize(text)
            .tokens
            .iter()
            .map(|t| lookup(t).unwrap_or_else(|| t.clone()))
            .collect::<Vec<_>>()
            .join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Upper bound on request rate; `0` disables throttling.
    #[serde(default = "default_rps")]
    pub requests_per_second: f64,
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_rps() -> f64 {
    5.0
}

impl HttpBackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpBackendConfig {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            timeout_ms: default_timeout_ms(),
            requests_per_second: default_rps(),
        }
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    api_key: Option<&'a str>,
}

#[derive(Deserialize)]
struct TranslateResponse {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

/// JSON-over-HTTP translation client (`{q, source, target}` in,
/// `{translatedText}` out). Requests are serialized through a rate limiter.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    config: HttpBackendConfig,
    next_slot: Mutex<Instant>,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, TranslateError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| TranslateError::Failed(e.to_string()))?;
        Ok(HttpBackend {
            client,
            config,
            next_slot: Mutex::new(Instant::now()),
        })
    }

    fn wait_for_slot(&self) {
        if self.config.requests_per_second <= 0.0 {
            return;
        }
        let interval = Duration::from_secs_f64(1.0 / self.config.requests_per_second);
        let mut next = self.next_slot.lock().unwrap();
        let now = Instant::now();
        if *next > now {
            std::thread::sleep(*next - now);
        }
        *next = Instant::now() + interval;
    }
}

impl TranslationBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError> {
        self.wait_for_slot();
        let body = TranslateRequest {
            q: text,
            source,
            target,
            api_key: self.config.api_key.as_deref(),
        };
        let resp = self
            .client
            .post(&self.config.endpoint)
            .json(&body)
            .send()
            .map_err(|e| TranslateError::Failed(e.to_string()))?;
        let status = resp.status();
        if status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(TranslateError::RateLimited { retry_after });
        }
        if !status.is_success() {
            let detail = resp.text().unwrap_or_default();
            return Err(TranslateError::Failed(format!("HTTP {status}: {detail}")));
        }
        let parsed: TranslateResponse = resp.json().map_err(|e| TranslateError::Failed(e.to_string()))?;
        Ok(parsed.translated_text)
    }
}
