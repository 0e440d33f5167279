//! Typed HTTP client for the session API and a scripted participant that
//! drives a full session through it.

use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use hsmod_core::corpus::Corpus;
use hsmod_core::experiment::{
    ClientEvent, Decision, Participant, Phase, SessionArchive, SurveyKind, TaskView, MEDITATION_SECONDS,
};
use hsmod_core::measures::{Instruments, SurveyResponse};
use hsmod_core::modification::Condition;
use hsmod_core::synthetic::{bot_profile, bot_survey, plan_task};

use crate::{Ack, CreateSession, DecisionBody, ErrorBody, PhaseAck, SessionStatus};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("{status}: {} ({})", body.error, body.message)]
    Api { status: StatusCode, body: ErrorBody },
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("unexpected response: {0}")]
    Protocol(String),
}

impl ClientError {
    /// The API error code, if the server answered with one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
}

impl ApiClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let body = serde_json::from_str(&text)
            .unwrap_or_else(|_| ErrorBody { error: "http".into(), message: text.clone() });
        Err(ClientError::Api { status, body })
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: Option<&B>) -> Result<T, ClientError> {
        let mut req = self.http.post(format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(b);
        }
        Self::decode(req.send().await?).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send().await?).await
    }

    pub async fn create(&self, participant: Participant, condition: Option<Condition>) -> Result<SessionStatus, ClientError> {
        self.post("/sessions", Some(&CreateSession { participant, condition })).await
    }

    pub async fn status(&self, id: &str) -> Result<SessionStatus, ClientError> {
        self.get(&format!("/sessions/{id}")).await
    }

    pub async fn task(&self, id: &str) -> Result<TaskView, ClientError> {
        self.get(&format!("/sessions/{id}/task")).await
    }

    pub async fn event(&self, id: &str, ev: &ClientEvent) -> Result<Ack, ClientError> {
        self.post(&format!("/sessions/{id}/events"), Some(ev)).await
    }

    pub async fn decide(&self, id: &str, comment_id: &str, severity: u8, decision: Decision) -> Result<Ack, ClientError> {
        let body = DecisionBody { comment_id: comment_id.into(), severity, decision };
        self.post(&format!("/sessions/{id}/decisions"), Some(&body)).await
    }

    pub async fn survey(&self, id: &str, kind: SurveyKind, r: &SurveyResponse) -> Result<Ack, ClientError> {
        let kind = match kind {
            SurveyKind::Pre => "pre",
            SurveyKind::Post => "post",
        };
        self.post(&format!("/sessions/{id}/surveys/{kind}"), Some(r)).await
    }

    pub async fn advance(&self, id: &str) -> Result<PhaseAck, ClientError> {
        self.post::<(), _>(&format!("/sessions/{id}/phase"), None).await
    }

    pub async fn export(&self, id: &str) -> Result<SessionArchive, ClientError> {
        self.get(&format!("/sessions/{id}/export")).await
    }
}

/// Runs session `id` from `intro` to `done` as a scripted participant and
/// returns its archive. `wait` moves the server clock forward; the bot calls
/// it instead of sleeping.
pub async fn run_bot(
    api: &ApiClient,
    id: &str,
    corpus: &Corpus,
    seed: u64,
    wait: impl Fn(Duration),
) -> Result<SessionArchive, ClientError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let status = api.status(id).await?;
    let profile = bot_profile(status.condition);
    let inst = Instruments::current();
    let expect = |got: Phase, want: Phase| {
        if got == want {
            Ok(())
        } else {
            Err(ClientError::Protocol(format!("expected phase {want}, got {got}")))
        }
    };

    expect(api.advance(id).await?.phase, Phase::Meditation)?;
    wait(Duration::seconds(MEDITATION_SECONDS));
    expect(api.advance(id).await?.phase, Phase::PreSurvey)?;
    wait(Duration::seconds(30));
    api.survey(id, SurveyKind::Pre, &bot_survey(&mut rng, inst, 0)).await?;
    expect(api.advance(id).await?.phase, Phase::Practice)?;
    wait(Duration::seconds(20));
    expect(api.advance(id).await?.phase, Phase::Main)?;

    loop {
        let view = api.task(id).await?;
        let c = corpus
            .get(&view.comment_id)
            .ok_or_else(|| ClientError::Protocol(format!("unknown comment {}", view.comment_id)))?;
        let plan = plan_task(&mut rng, c, status.condition, &profile);
        let step = Duration::milliseconds(plan.millis / (plan.interactions.len() as i64 + 1));
        for ev in &plan.interactions {
            wait(step);
            api.event(id, ev).await?;
        }
        wait(step);
        api.decide(id, &c.id, plan.severity, plan.decision).await?;
        if view.progress.cursor + 1 == view.progress.total {
            break;
        }
    }

    expect(api.advance(id).await?.phase, Phase::PostSurvey)?;
    wait(Duration::seconds(30));
    api.survey(id, SurveyKind::Post, &bot_survey(&mut rng, inst, profile.affect_shift)).await?;
    expect(api.advance(id).await?.phase, Phase::Done)?;
    api.export(id).await
}
