//! Client for the external text-generation service used by dense-description
//! and QA/CoT generation.
//!
//! The wire contract is a JSON chat-completion shape: the request carries
//! `{model, messages, temperature}` and the reply's first choice message
//! content is the generation. A deterministic mock keyed by prompt digest
//! stands in for the service in tests and offline builds, and a file cache
//! keyed by a canonical request digest makes corpus rebuilds free.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::sha256_hex;
use crate::templates::{render_template, TemplateSet};

/// What a generation request is for. Part of the cache key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestTag {
    Ddd,
    QaCot,
    HtmlGen,
}

/// One generation request.
#[derive(Debug, Clone, Serialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_words_hint: u32,
    pub temperature: f64,
    pub tag: RequestTag,
}

impl GenerationRequest {
    /// Request with the deterministic defaults: temperature 0.
    pub fn new(prompt: impl Into<String>, tag: RequestTag) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            max_words_hint: 500,
            temperature: 0.0,
            tag,
        }
    }

    /// 64-hex digest of the canonicalized request, the cache key.
    pub fn request_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        sha256_hex(canonical.as_bytes())
    }

    /// Digest of the prompt alone, the canned-mock key.
    pub fn prompt_hash(&self) -> String {
        sha256_hex(self.prompt.as_bytes())
    }
}

/// Transport-level failure classification, driving the retry policy.
#[derive(Debug)]
pub enum TransportError {
    /// Authentication rejected; never retried.
    Auth(String),
    /// Timeouts, connection failures, 429/5xx; retried with backoff.
    Transient(String),
    /// Anything else the service refused.
    Fatal(String),
}

/// Chat-completion request body.
#[derive(Debug, Serialize)]
pub struct WireRequest {
    pub model: String,
    pub messages: Vec<WireMessage>,
    pub temperature: f64,
}

#[derive(Debug, Serialize)]
pub struct WireMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Debug, Deserialize)]
struct WireResponseMessage {
    content: String,
}

/// Sends one wire request and returns the generated text.
pub trait Transport: Send + Sync {
    fn send(&self, request: &WireRequest) -> std::result::Result<String, TransportError>;
}

/// HTTP transport for the chat-completion endpoint. The API key comes from
/// the `LLM_API_KEY` environment variable.
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

pub const API_KEY_ENV: &str = "LLM_API_KEY";

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpTransport {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &WireRequest) -> std::result::Result<String, TransportError> {
        let mut builder = self.client.post(&self.endpoint).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(TransportError::Auth(format!("status {status}")));
        }
        if status.as_u16() == 408 || status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Fatal(format!("status {status}")));
        }
        let body: WireResponse = response
            .json()
            .map_err(|e| TransportError::Fatal(format!("malformed response: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Fatal("response without choices".into()))
    }
}

/// Deterministic mock keyed by prompt digest.
///
/// In strict mode a miss is an error naming the hash; otherwise a fixed
/// fallback per request tag keeps offline builds running.
#[derive(Debug, Clone, Default)]
pub struct MockClient {
    canned: BTreeMap<String, String>,
    strict: bool,
}

impl MockClient {
    pub fn new(strict: bool) -> Self {
        MockClient {
            canned: BTreeMap::new(),
            strict,
        }
    }

    /// Load a canned map file: a JSON object of prompt-hash to response.
    pub fn from_file(path: &Path, strict: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let canned: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        Ok(MockClient { canned, strict })
    }

    /// Register a canned response for a prompt.
    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.canned
            .insert(sha256_hex(prompt.as_bytes()), response.into());
    }

    pub fn canned_map(&self) -> &BTreeMap<String, String> {
        &self.canned
    }

    fn respond(&self, req: &GenerationRequest) -> Result<String> {
        let hash = req.prompt_hash();
        if let Some(response) = self.canned.get(&hash) {
            return Ok(response.clone());
        }
        if self.strict {
            return Err(Error::MockMiss(hash));
        }
        Ok(match req.tag {
            RequestTag::Ddd => format!(
                "This synthetic description stands in for a generated one (prompt {}). \
                 The page presents its text segments in reading order with their layout \
                 positions intact.",
                &hash[..12]
            ),
            RequestTag::QaCot => "[]".to_string(),
            RequestTag::HtmlGen => format!(
                "<html><body><h1>Synthetic document {}</h1></body></html>",
                &hash[..12]
            ),
        })
    }
}

enum Backend {
    Transport(Box<dyn Transport>),
    Mock(MockClient),
}

/// One cached generation, a line of a shard file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_hash: String,
    pub response: String,
    pub timestamp: u64,
}

#[derive(Default)]
struct Shard {
    loaded: bool,
    entries: HashMap<String, String>,
}

type SleepFn = Box<dyn Fn(Duration) + Send + Sync>;

/// Generation client with retry, size-cap and cache policies.
pub struct LlmClient {
    backend: Backend,
    model: String,
    max_retries: u32,
    response_cap: usize,
    sleeper: SleepFn,
    shards: Mutex<HashMap<PathBuf, Arc<Mutex<Shard>>>>,
}

pub const DEFAULT_RESPONSE_CAP: usize = 1 << 20;

impl LlmClient {
    pub fn http(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self::with_transport(Box::new(HttpTransport::new(endpoint)), model)
    }

    pub fn mock(mock: MockClient) -> Self {
        LlmClient {
            backend: Backend::Mock(mock),
            model: "mock".to_string(),
            max_retries: 3,
            response_cap: DEFAULT_RESPONSE_CAP,
            sleeper: Box::new(std::thread::sleep),
            shards: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_transport(transport: Box<dyn Transport>, model: impl Into<String>) -> Self {
        LlmClient {
            backend: Backend::Transport(transport),
            model: model.into(),
            max_retries: 3,
            response_cap: DEFAULT_RESPONSE_CAP,
            sleeper: Box::new(std::thread::sleep),
            shards: Mutex::new(HashMap::new()),
        }
    }

    /// Replace the backoff sleep, used by fault-injection tests.
    pub fn with_sleeper(mut self, sleeper: SleepFn) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_response_cap(mut self, cap: usize) -> Self {
        self.response_cap = cap;
        self
    }

    pub fn is_mock(&self) -> bool {
        matches!(self.backend, Backend::Mock(_))
    }

    /// One completion. Transient transport failures are retried up to three
    /// times with exponential backoff (1s, 2s, 4s); authentication failures
    /// and oversized responses are not retried.
    pub fn complete(&self, req: &GenerationRequest) -> Result<String> {
        let response = match &self.backend {
            Backend::Mock(mock) => mock.respond(req)?,
            Backend::Transport(transport) => {
                let wire = WireRequest {
                    model: self.model.clone(),
                    messages: vec![WireMessage {
                        role: "user".to_string(),
                        content: req.prompt.clone(),
                    }],
                    temperature: req.temperature,
                };
                let mut attempt = 0;
                loop {
                    match transport.send(&wire) {
                        Ok(text) => break text,
                        Err(TransportError::Auth(msg)) => return Err(Error::ClientAuth(msg)),
                        Err(TransportError::Fatal(msg)) => return Err(Error::Client(msg)),
                        Err(TransportError::Transient(msg)) => {
                            if attempt >= self.max_retries {
                                return Err(Error::Client(format!(
                                    "exhausted {} retries: {msg}",
                                    self.max_retries
                                )));
                            }
                            (self.sleeper)(Duration::from_secs(1 << attempt));
                            attempt += 1;
                        }
                    }
                }
            }
        };
        if response.len() > self.response_cap {
            return Err(Error::ResponseTooLarge {
                got: response.len(),
                cap: self.response_cap,
            });
        }
        Ok(response)
    }

    /// Completion through the file cache. A hit never touches the network;
    /// a miss calls [`Self::complete`] and appends the entry atomically.
    /// Access is serialized per cache shard.
    pub fn complete_cached(&self, req: &GenerationRequest, cache_dir: &Path) -> Result<String> {
        let hash = req.request_hash();
        let shard_path = cache_dir.join(format!("{}.jsonl", &hash[..2]));

        let shard = {
            let mut shards = self.shards.lock().expect("shard index poisoned");
            Arc::clone(shards.entry(shard_path.clone()).or_default())
        };
        let mut shard = shard.lock().expect("shard poisoned");

        if !shard.loaded {
            if shard_path.is_file() {
                let text = std::fs::read_to_string(&shard_path)
                    .map_err(|e| Error::io(shard_path.display().to_string(), e))?;
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    match serde_json::from_str::<CacheEntry>(line) {
                        Ok(entry) => {
                            shard.entries.insert(entry.request_hash, entry.response);
                        }
                        Err(e) => {
                            log::warn!("skipping corrupt cache line in {shard_path:?}: {e}");
                        }
                    }
                }
            }
            shard.loaded = true;
        }

        if let Some(hit) = shard.entries.get(&hash) {
            return Ok(hit.clone());
        }

        let response = self.complete(req)?;
        std::fs::create_dir_all(cache_dir)
            .map_err(|e| Error::io(cache_dir.display().to_string(), e))?;
        let entry = CacheEntry {
            request_hash: hash.clone(),
            response: response.clone(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut line = serde_json::to_string(&entry).expect("cache entry serializes");
        line.push('\n');
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&shard_path)
            .map_err(|e| Error::io(shard_path.display().to_string(), e))?;
        file.write_all(line.as_bytes())
            .map_err(|e| Error::io(shard_path.display().to_string(), e))?;
        shard.entries.insert(hash, response.clone());
        Ok(response)
    }
}

/// Render a named prompt template with placeholder bindings.
pub fn render_prompt(
    templates: &TemplateSet,
    template_id: &str,
    bindings: &BTreeMap<&str, String>,
) -> Result<String> {
    let template = templates.prompt(template_id)?;
    render_template(template_id, template, bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct FlakyTransport {
        calls: AtomicUsize,
        fail_first: usize,
        auth_fail: bool,
    }

    impl Transport for FlakyTransport {
        fn send(&self, _req: &WireRequest) -> std::result::Result<String, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if self.auth_fail {
                return Err(TransportError::Auth("bad key".into()));
            }
            if n < self.fail_first {
                return Err(TransportError::Transient("flaky".into()));
            }
            Ok(format!("ok after {n} failures"))
        }
    }

    fn req(prompt: &str) -> GenerationRequest {
        GenerationRequest::new(prompt, RequestTag::Ddd)
    }

    #[test]
    fn mock_hit_and_strict_miss() {
        let mut mock = MockClient::new(true);
        mock.insert("hello", "canned");
        let client = LlmClient::mock(mock);
        assert_eq!(client.complete(&req("hello")).unwrap(), "canned");
        let err = client.complete(&req("other")).unwrap_err();
        match err {
            Error::MockMiss(hash) => {
                assert_eq!(hash, sha256_hex(b"other"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mock_fallback_is_deterministic() {
        let client = LlmClient::mock(MockClient::new(false));
        let a = client.complete(&req("p")).unwrap();
        let b = client.complete(&req("p")).unwrap();
        assert_eq!(a, b);
        let qa = client
            .complete(&GenerationRequest::new("p", RequestTag::QaCot))
            .unwrap();
        assert_eq!(qa, "[]");
    }

    #[test]
    fn retry_schedule_is_one_two_four_seconds() {
        let sleeps = Arc::new(Mutex::new(Vec::new()));
        let record = Arc::clone(&sleeps);
        let transport = FlakyTransport {
            calls: AtomicUsize::new(0),
            fail_first: usize::MAX,
            auth_fail: false,
        };
        let client = LlmClient::with_transport(Box::new(transport), "m").with_sleeper(Box::new(
            move |d| {
                record.lock().unwrap().push(d);
            },
        ));
        let err = client.complete(&req("p")).unwrap_err();
        assert!(matches!(err, Error::Client(_)));
        let sleeps = sleeps.lock().unwrap();
        assert_eq!(
            *sleeps,
            vec![
                Duration::from_secs(1),
                Duration::from_secs(2),
                Duration::from_secs(4)
            ]
        );
    }

    #[test]
    fn transient_failures_recover() {
        let transport = FlakyTransport {
            calls: AtomicUsize::new(0),
            fail_first: 2,
            auth_fail: false,
        };
        let client =
            LlmClient::with_transport(Box::new(transport), "m").with_sleeper(Box::new(|_| {}));
        assert_eq!(client.complete(&req("p")).unwrap(), "ok after 2 failures");
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let transport = FlakyTransport {
            calls: AtomicUsize::new(0),
            fail_first: 0,
            auth_fail: true,
        };
        let client =
            LlmClient::with_transport(Box::new(transport), "m").with_sleeper(Box::new(|d| {
                panic!("should not sleep, slept {d:?}");
            }));
        assert!(matches!(
            client.complete(&req("p")),
            Err(Error::ClientAuth(_))
        ));
    }

    #[test]
    fn response_cap_is_enforced() {
        let mut mock = MockClient::new(true);
        mock.insert("big", "x".repeat(100));
        let client = LlmClient::mock(mock).with_response_cap(10);
        assert!(matches!(
            client.complete(&req("big")),
            Err(Error::ResponseTooLarge { .. })
        ));
    }

    #[test]
    fn cache_hits_skip_the_network() {
        let dir = tempfile::tempdir().unwrap();
        let transport = FlakyTransport {
            calls: AtomicUsize::new(0),
            fail_first: 0,
            auth_fail: false,
        };
        let client = LlmClient::with_transport(Box::new(transport), "m");
        let r = req("cache me");
        let first = client.complete_cached(&r, dir.path()).unwrap();
        let second = client.complete_cached(&r, dir.path()).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, "ok after 0 failures");

        // a fresh client instance reads the same entry from disk
        let transport2 = FlakyTransport {
            calls: AtomicUsize::new(0),
            fail_first: usize::MAX,
            auth_fail: false,
        };
        let client2 =
            LlmClient::with_transport(Box::new(transport2), "m").with_sleeper(Box::new(|_| {}));
        assert_eq!(client2.complete_cached(&r, dir.path()).unwrap(), first);
    }

    #[test]
    fn corrupt_cache_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let r = req("salvage");
        let shard = dir.path().join(format!("{}.jsonl", &r.request_hash()[..2]));
        std::fs::write(&shard, "not json at all\n").unwrap();
        let transport = FlakyTransport {
            calls: AtomicUsize::new(0),
            fail_first: 0,
            auth_fail: false,
        };
        let client = LlmClient::with_transport(Box::new(transport), "m");
        assert_eq!(
            client.complete_cached(&r, dir.path()).unwrap(),
            "ok after 0 failures"
        );
    }

    #[test]
    fn render_prompt_embeds_body_and_lists_missing_bindings() {
        let templates = TemplateSet::builtin();
        let mut bindings = BTreeMap::new();
        bindings.insert("document", "THE BODY".to_string());
        let prompt = render_prompt(&templates, "qa_cot_prompt", &bindings).unwrap();
        assert!(prompt.contains("THE BODY"));

        let err = render_prompt(&templates, "qa_cot_prompt", &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("document"));
    }

    #[test]
    fn render_html_gen_prompt_with_sampled_type() {
        let templates = TemplateSet::builtin();
        let mut bindings = BTreeMap::new();
        bindings.insert("doc_type", "invoice".to_string());
        bindings.insert("figures", "- logo.png: company logo".to_string());
        let prompt = render_prompt(&templates, "html_gen_prompt", &bindings).unwrap();
        assert!(prompt.contains("invoice"));
        assert!(prompt.contains("logo.png"));
    }
}
