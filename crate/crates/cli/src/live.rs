//! Providers for OpenAI-compatible chat-completion and embedding endpoints.
//!
//! API keys are read from the environment at construction and never logged.

use std::time::Duration;

use hsmod_core::curation::{
    EmbeddingProvider, Endpoint, GenerationProvider, GenerationRequest, ProviderError, HATE_INSTRUCTION,
    NORMAL_INSTRUCTION,
};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

pub const GEN_URL_ENV: &str = "HSMOD_GEN_URL";
pub const GEN_MODEL_ENV: &str = "HSMOD_GEN_MODEL";
pub const GEN_KEY_ENV: &str = "HSMOD_GEN_API_KEY";
pub const EMB_URL_ENV: &str = "HSMOD_EMB_URL";
pub const EMB_MODEL_ENV: &str = "HSMOD_EMB_MODEL";
pub const EMB_KEY_ENV: &str = "HSMOD_EMB_API_KEY";

const DEFAULT_URL: &str = "https://api.openai.com/v1";
const DEFAULT_GEN_MODEL: &str = "gpt-4o";
const DEFAULT_EMB_MODEL: &str = "text-embedding-3-small";

pub fn endpoints_from_env() -> (Endpoint, Endpoint) {
    let var = |k: &str, d: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty()).unwrap_or_else(|| d.to_string());
    (
        Endpoint {
            url: var(GEN_URL_ENV, DEFAULT_URL),
            model: var(GEN_MODEL_ENV, DEFAULT_GEN_MODEL),
            credential_env: GEN_KEY_ENV.into(),
        },
        Endpoint {
            url: var(EMB_URL_ENV, DEFAULT_URL),
            model: var(EMB_MODEL_ENV, DEFAULT_EMB_MODEL),
            credential_env: EMB_KEY_ENV.into(),
        },
    )
}

struct Remote {
    client: Client,
    url: String,
    model: String,
    key: String,
}

impl Remote {
    fn new(ep: &Endpoint, path: &str) -> anyhow::Result<Self> {
        let key = std::env::var(&ep.credential_env)
            .map_err(|_| anyhow::anyhow!("${} is not set", ep.credential_env))?;
        let client = Client::builder().timeout(Duration::from_secs(120)).build()?;
        Ok(Self { client, url: format!("{}/{path}", ep.url.trim_end_matches('/')), model: ep.model.clone(), key })
    }

    fn post(&self, body: &Value) -> Result<Value, ProviderError> {
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.key)
            .json(body)
            .send()
            .map_err(|e| ProviderError::transient(format!("request failed: {}", e.without_url())))?;
        let status = resp.status();
        if !status.is_success() {
            let msg = format!("{} returned {status}", self.url);
            return Err(if retryable(status) { ProviderError::transient(msg) } else { ProviderError::permanent(msg) });
        }
        resp.json().map_err(|e| ProviderError::transient(format!("unreadable response: {}", e.without_url())))
    }
}

fn retryable(s: StatusCode) -> bool {
    s == StatusCode::TOO_MANY_REQUESTS || s == StatusCode::REQUEST_TIMEOUT || s.is_server_error()
}

pub struct LiveGeneration(Remote);

impl LiveGeneration {
    pub fn new(ep: &Endpoint) -> anyhow::Result<Self> {
        Remote::new(ep, "chat/completions").map(Self)
    }
}

impl GenerationProvider for LiveGeneration {
    fn generate(&self, req: &GenerationRequest) -> Result<String, ProviderError> {
        // the prompt is instruction + blank line + marked comment; send them as
        // system and user turns
        let (system, user) = split_prompt(&req.prompt);
        let body = json!({
            "model": self.0.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let v = self.0.post(&body)?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::permanent("completion lacks choices[0].message.content"))
    }
}

fn split_prompt(prompt: &str) -> (&str, &str) {
    for inst in [HATE_INSTRUCTION, NORMAL_INSTRUCTION] {
        if let Some(rest) = prompt.strip_prefix(inst) {
            return (inst, rest.trim_start_matches('\n'));
        }
    }
    ("", prompt)
}

pub struct LiveEmbedding(Remote);

impl LiveEmbedding {
    pub fn new(ep: &Endpoint) -> anyhow::Result<Self> {
        Remote::new(ep, "embeddings").map(Self)
    }
}

impl EmbeddingProvider for LiveEmbedding {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let v = self.0.post(&json!({"model": self.0.model, "input": text}))?;
        let arr = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::permanent("response lacks data[0].embedding"))?;
        arr.iter()
            .map(|x| x.as_f64().ok_or_else(|| ProviderError::permanent("non-numeric embedding component")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_splits_into_system_and_user() {
        let p = format!("{HATE_INSTRUCTION}\n\n이 ※말※ 좀 봐");
        assert_eq!(split_prompt(&p), (HATE_INSTRUCTION, "이 ※말※ 좀 봐"));
        assert_eq!(split_prompt("plain"), ("", "plain"));
    }

    #[test]
    fn only_throttling_and_server_errors_retry() {
        assert!(retryable(StatusCode::TOO_MANY_REQUESTS));
        assert!(retryable(StatusCode::BAD_GATEWAY));
        assert!(!retryable(StatusCode::UNAUTHORIZED));
        assert!(!retryable(StatusCode::BAD_REQUEST));
    }
}
