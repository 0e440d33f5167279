use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CurationError;

pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderError {
    pub message: String,
    /// Whether another attempt may succeed.
    pub retryable: bool,
}

impl ProviderError {
    pub fn transient(message: impl Into<String>) -> Self {
        Self { message: message.into(), retryable: true }
    }

    pub fn permanent(message: impl Into<String>) -> Self {
        Self { message: message.into(), retryable: false }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ProviderError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub comment_id: String,
    pub span_id: String,
    pub prompt: String,
}

pub trait GenerationProvider: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<String, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        Self { base_delay: Duration::ZERO, ..Self::default() }
    }

    /// Delay before attempt `attempt + 1` (1-based `attempt`).
    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << (attempt.saturating_sub(1)).min(16))
    }

    /// Runs `f` until it succeeds, fails permanently or runs out of attempts.
    /// Returns the outcome and the number of attempts made.
    pub fn run<T>(&self, mut f: impl FnMut() -> Result<T, ProviderError>) -> (Result<T, ProviderError>, u32) {
        let max = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match f() {
                Ok(v) => return (Ok(v), attempt),
                Err(e) if !e.retryable || attempt >= max => return (Err(e), attempt),
                Err(_) => {
                    let d = self.delay_after(attempt);
                    if !d.is_zero() {
                        std::thread::sleep(d);
                    }
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    Live,
    Mock,
}

/// Remote endpoint. `credential_env` names the environment variable holding
/// the API key; the key itself is never stored here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub url: String,
    pub model: String,
    pub credential_env: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub generation: Option<Endpoint>,
    pub embedding: Option<Endpoint>,
    pub fixtures_dir: Option<PathBuf>,
}

impl ProviderConfig {
    pub fn mock(dir: impl Into<PathBuf>) -> Self {
        Self { mode: ProviderMode::Mock, generation: None, embedding: None, fixtures_dir: Some(dir.into()) }
    }

    pub fn live(generation: Endpoint, embedding: Endpoint) -> Self {
        Self { mode: ProviderMode::Live, generation: Some(generation), embedding: Some(embedding), fixtures_dir: None }
    }

    /// Checks mode requirements. `lookup` resolves environment variables.
    pub fn validate(&self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), CurationError> {
        let cfg = |m: String| CurationError::Config(m);
        match self.mode {
            ProviderMode::Mock => {
                let dir = self.fixtures_dir.as_ref().ok_or_else(|| cfg("mock mode requires a fixtures directory".into()))?;
                for f in [GENERATIONS_FILE, EMBEDDINGS_FILE] {
                    if !dir.join(f).is_file() {
                        return Err(cfg(format!("fixtures directory {} lacks {f}", dir.display())));
                    }
                }
            }
            ProviderMode::Live => {
                for (role, ep) in [("generation", &self.generation), ("embedding", &self.embedding)] {
                    let ep = ep.as_ref().ok_or_else(|| cfg(format!("live mode requires a {role} endpoint")))?;
                    if lookup(&ep.credential_env).is_none_or(|v| v.trim().is_empty()) {
                        return Err(cfg(format!("live mode requires credentials in ${}", ep.credential_env)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Recorded completion for one `(comment, span)` work item. When `prompt` is
/// present the request must match it exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFixture {
    pub comment_id: String,
    pub span_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFixture {
    pub text: String,
    pub vector: Vec<f64>,
}

/// Replays recorded generations and embeddings. Missing entries are
/// permanent errors.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    generations: HashMap<(String, String), GenerationFixture>,
    embeddings: HashMap<String, Vec<f64>>,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CurationError> {
    let fixture_err = |message: String| CurationError::Fixture { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| fixture_err(format!("line {}: {e}", i + 1))))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("fixture rows serialize"));
        out.push('\n');
    }
    std::fs::write(path, out)
}

impl MockProvider {
    pub fn new(generations: Vec<GenerationFixture>, embeddings: Vec<EmbeddingFixture>) -> Self {
        Self {
            generations: generations.into_iter().map(|g| ((g.comment_id.clone(), g.span_id.clone()), g)).collect(),
            embeddings: embeddings.into_iter().map(|e| (e.text, e.vector)).collect(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self, CurationError> {
        Ok(Self::new(read_jsonl(&dir.join(GENERATIONS_FILE))?, read_jsonl(&dir.join(EMBEDDINGS_FILE))?))
    }

    /// Writes fixtures in a stable order.
    pub fn save(dir: &Path, generations: &[GenerationFixture], embeddings: &[EmbeddingFixture]) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_jsonl(&dir.join(GENERATIONS_FILE), generations)?;
        write_jsonl(&dir.join(EMBEDDINGS_FILE), embeddings)
    }
}

impl GenerationProvider for MockProvider {
    fn generate(&self, req: &GenerationRequest) -> Result<String, ProviderError> {
        let g = self
            .generations
            .get(&(req.comment_id.clone(), req.span_id.clone()))
            .ok_or_else(|| ProviderError::permanent(format!("no recorded generation for {}/{}", req.comment_id, req.span_id)))?;
        match &g.prompt {
            Some(p) if *p != req.prompt => Err(ProviderError::permanent(format!(
                "recorded prompt for {}/{} differs from request",
                req.comment_id, req.span_id
            ))),
            _ => Ok(g.output.clone()),
        }
    }
}

impl EmbeddingProvider for MockProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.embeddings
            .get(text)
            .cloned()
            .ok_or_else(|| ProviderError::permanent(format!("no recorded embedding for {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn retry_is_bounded_and_stops_on_permanent() {
        let p = RetryPolicy::no_delay();
        let calls = Cell::new(0);
        let (r, n) = p.run(|| -> Result<(), _> {
            calls.set(calls.get() + 1);
            Err(ProviderError::transient("503"))
        });
        assert!(r.is_err());
        assert_eq!((n, calls.get()), (3, 3));

        let (r, n) = p.run(|| -> Result<(), _> { Err(ProviderError::permanent("400")) });
        assert!(r.is_err());
        assert_eq!(n, 1);

        let calls = Cell::new(0);
        let (r, n) = p.run(|| {
            calls.set(calls.get() + 1);
            if calls.get() < 2 {
                Err(ProviderError::transient("timeout"))
            } else {
                Ok(7)
            }
        });
        assert_eq!((r, n), (Ok(7), 2));
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { max_attempts: 3, base_delay: Duration::from_millis(100) };
        assert_eq!(p.delay_after(1), Duration::from_millis(100));
        assert_eq!(p.delay_after(2), Duration::from_millis(200));
    }

    #[test]
    fn config_validation() {
        let ep = |env: &str| Endpoint { url: "http://x".into(), model: "m".into(), credential_env: env.into() };
        let live = ProviderConfig::live(ep("GEN_KEY"), ep("EMB_KEY"));
        assert!(live.validate(|_| None).is_err());
        assert!(live.validate(|_| Some("secret".into())).is_ok());

        let dir = tempfile::tempdir().unwrap();
        let mock = ProviderConfig::mock(dir.path());
        assert!(mock.validate(|_| None).is_err());
        MockProvider::save(dir.path(), &[], &[]).unwrap();
        assert!(mock.validate(|_| None).is_ok());
        let none = ProviderConfig { fixtures_dir: None, ..mock };
        assert!(none.validate(|_| None).is_err());
    }

    #[test]
    fn mock_lookup() {
        let m = MockProvider::new(
            vec![GenerationFixture { comment_id: "c".into(), span_id: "o1".into(), prompt: Some("p".into()), output: "a$b".into() }],
            vec![EmbeddingFixture { text: "a".into(), vector: vec![1.0] }],
        );
        let req = GenerationRequest { comment_id: "c".into(), span_id: "o1".into(), prompt: "p".into() };
        assert_eq!(m.generate(&req).unwrap(), "a$b");
        assert!(!m.generate(&GenerationRequest { prompt: "q".into(), ..req }).unwrap_err().retryable);
        assert_eq!(m.embed("a").unwrap(), vec![1.0]);
        assert!(m.embed("b").is_err());
    }
}
