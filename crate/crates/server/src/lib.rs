//! HTTP front end for study sessions.
//!
//! Every session is a single writer: requests for one session are
//! serialized behind its mutex, and each accepted mutation is appended to
//! the session's log and flushed before the response is sent. On start-up
//! all logs under the data directory are replayed.

mod balancer;
pub mod client;
mod clock;
pub mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use hsmod_core::corpus::Corpus;
use hsmod_core::experiment::{
    task_order, ClientEvent, Decision, ExperimentError, Participant, Phase, Progress, Session, SessionInit, SurveyKind,
    SESSION_FORMAT,
};
use hsmod_core::measures::{SurveyResponse, INSTRUMENT_V1};
use hsmod_core::modification::Condition;

pub use balancer::OnlineBalancer;
pub use clock::{Clock, ManualClock, SystemClock};
use store::{SessionLog, StoreError};

pub struct ServerConfig {
    pub data_dir: PathBuf,
    pub corpus: Corpus,
    pub clock: Arc<dyn Clock>,
    /// Give each session its own recorded task shuffle.
    pub shuffle: bool,
    /// `fsync` every append in addition to flushing it.
    pub fsync: bool,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>, corpus: Corpus) -> Self {
        Self { data_dir: data_dir.into(), corpus, clock: Arc::new(SystemClock), shuffle: false, fsync: true }
    }
}

struct Slot {
    session: Session,
    log: SessionLog,
    archived: bool,
}

struct Registry {
    next_id: u64,
    balancer: OnlineBalancer,
    participants: std::collections::HashSet<String>,
}

pub struct AppState {
    cfg: ServerConfig,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Slot>>>>,
    registry: Mutex<Registry>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl AppState {
    /// Opens the data directory and replays every session log in it.
    pub fn open(cfg: ServerConfig) -> Result<Arc<Self>, StoreError> {
        let dir = store::sessions_dir(&cfg.data_dir);
        std::fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|source| StoreError::Io { path: dir.clone(), source })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut sessions = BTreeMap::new();
        let mut registry =
            Registry { next_id: 1, balancer: OnlineBalancer::default(), participants: Default::default() };
        for p in paths {
            let (session, log) = SessionLog::open(&p, &cfg.corpus, cfg.fsync)?;
            let init = session.init();
            if let Some(n) = init.session_id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                registry.next_id = registry.next_id.max(n + 1);
            }
            registry.balancer.record(init.condition, init.participant.sensitivity_score);
            registry.participants.insert(init.participant.id.clone());
            let mut slot = Slot { session, log, archived: false };
            archive_if_done(&cfg, &mut slot)?;
            sessions.insert(slot.session.id().to_string(), Arc::new(Mutex::new(slot)));
        }
        tracing::info!(sessions = sessions.len(), "replayed session logs");
        Ok(Arc::new(Self { cfg, sessions: RwLock::new(sessions), registry: Mutex::new(registry) }))
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
    }

    /// Runs `f` under the session lock and persists whatever it appended.
    fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session, &Corpus, DateTime<Utc>) -> Result<T, ExperimentError>,
    ) -> Result<T, ApiError> {
        let slot = self.slot(id)?;
        let mut slot = lock(&slot);
        let now = self.cfg.clock.now();
        let out = f(&mut slot.session, &self.cfg.corpus, now);
        let Slot { session, log, .. } = &mut *slot;
        if let Err(e) = log.sync(session) {
            // the log is the source of truth: drop unpersisted state
            tracing::error!(error = %e, "append failed, reloading session");
            let path = log.path().to_path_buf();
            match SessionLog::open(&path, &self.cfg.corpus, self.cfg.fsync) {
                Ok((s, l)) => {
                    slot.session = s;
                    slot.log = l;
                }
                Err(e2) => tracing::error!(error = %e2, "reload failed"),
            }
            return Err(ApiError::internal(e));
        }
        archive_if_done(&self.cfg, &mut slot).map_err(ApiError::internal)?;
        out.map_err(ApiError::from)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, ApiError> {
        let slot = self.slot(id)?;
        let slot = lock(&slot);
        Ok(f(&slot.session))
    }

    pub fn corpus(&self) -> &Corpus {
        &self.cfg.corpus
    }

    fn create(&self, req: CreateSession) -> Result<SessionStatus, ApiError> {
        req.participant.validate()?;
        let mut reg = lock(&self.registry);
        if reg.participants.contains(&req.participant.id) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "duplicate_participant",
                format!("participant {} already has a session", req.participant.id),
            ));
        }
        let n = reg.next_id;
        let session_id = format!("s{n:04}");
        let condition = req.condition.unwrap_or_else(|| reg.balancer.choose(req.participant.sensitivity_score));
        let shuffle_seed = self.cfg.shuffle.then_some(n);
        let init = SessionInit {
            format: SESSION_FORMAT,
            session_id: session_id.clone(),
            participant: req.participant,
            condition,
            task_order: task_order(&self.cfg.corpus, shuffle_seed),
            corpus_digest: self.cfg.corpus.digest(),
            instrument_version: INSTRUMENT_V1.into(),
            shuffle_seed,
            created_at: self.cfg.clock.now(),
        };
        let session = Session::new(init, &self.cfg.corpus)?;
        let log = SessionLog::create(&self.cfg.data_dir, session.init(), self.cfg.fsync).map_err(ApiError::internal)?;
        reg.next_id += 1;
        reg.balancer.record(condition, session.init().participant.sensitivity_score);
        reg.participants.insert(session.init().participant.id.clone());
        let status = SessionStatus::of(&session);
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session_id.clone(), Arc::new(Mutex::new(Slot { session, log, archived: false })));
        tracing::info!(session = %session_id, %condition, "session created");
        Ok(status)
    }
}

fn archive_if_done(cfg: &ServerConfig, slot: &mut Slot) -> Result<(), StoreError> {
    if slot.archived || slot.session.phase() != Phase::Done {
        return Ok(());
    }
    let archive = slot.session.export(&cfg.corpus).map_err(|source| StoreError::Session {
        path: slot.log.path().to_path_buf(),
        source,
    })?;
    store::write_archive(&cfg.data_dir, &archive)?;
    slot.archived = true;
    Ok(())
}

// ---------- wire types ----------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub participant: Participant,
    #[serde(default)]
    pub condition: Option<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub session_id: String,
    pub condition: Condition,
    pub phase: Phase,
    pub progress: Progress,
}

impl SessionStatus {
    fn of(s: &Session) -> Self {
        Self { session_id: s.id().to_string(), condition: s.condition(), phase: s.phase(), progress: s.progress() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionBody {
    pub comment_id: String,
    pub severity: u8,
    pub decision: Decision,
}

/// `seq` of the appended event. A repeated reveal is accepted without a new
/// event (`applied: false`, no `seq`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: Option<u64>,
    pub applied: bool,
}

impl Ack {
    fn new(seq: u64) -> Self {
        Self { seq: Some(seq), applied: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAck {
    pub phase: Phase,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error: code.into(), message: message.into() } }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
    }
}

impl From<ExperimentError> for ApiError {
    fn from(e: ExperimentError) -> Self {
        use hsmod_core::modification::ModificationError as M;
        use ExperimentError as E;
        let status = match &e {
            E::WrongPhase { .. }
            | E::TerminalPhase
            | E::InvalidTransition { .. }
            | E::TooEarly { .. }
            | E::MissingSurvey(_)
            | E::SurveyAlreadySubmitted(_)
            | E::Incomplete { .. }
            | E::Exhausted
            | E::NotCurrentTask(_)
            | E::TaskAlreadyStarted(_)
            | E::TaskNotStarted(_)
            | E::OutOfOrder { .. }
            | E::DuplicateSubmission(_)
            | E::NotFinished(_)
            | E::Modification(M::AlreadyRevealed(_)) => StatusCode::CONFLICT,
            E::Modification(M::FeatureNotInCondition { .. }) => StatusCode::FORBIDDEN,
            E::WrongRatingCount { .. }
            | E::InvalidSeverity(_)
            | E::InvalidParticipant(_)
            | E::UnknownComment(_)
            | E::Modification(_)
            | E::Measures(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

// ---------- handlers ----------

type Shared = State<Arc<AppState>>;

async fn create_session(State(st): Shared, Json(req): Json<CreateSession>) -> Result<Response, ApiError> {
    let status = st.create(req)?;
    Ok((StatusCode::CREATED, Json(status)).into_response())
}

async fn get_session(State(st): Shared, Path(id): Path<String>) -> Result<Json<SessionStatus>, ApiError> {
    st.read(&id, SessionStatus::of).map(Json)
}

async fn get_task(State(st): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = st.mutate(&id, |s, c, now| s.next_task(c, now))?;
    Ok(Json(view).into_response())
}

fn already_revealed(s: &Session, ev: &ClientEvent) -> bool {
    let (cid, sid, originals) = match ev {
        ClientEvent::RevealTarget { comment_id, span_id } => (comment_id, span_id, false),
        ClientEvent::RevealOriginal { comment_id, span_id } => (comment_id, span_id, true),
        _ => return false,
    };
    s.current().is_some_and(|t| &t.comment_id == cid)
        && s.reveal_states().get(cid).is_some_and(|r| {
            if originals {
                r.revealed_originals.contains(sid)
            } else {
                r.revealed_targets.contains(sid)
            }
        })
}

async fn post_event(State(st): Shared, Path(id): Path<String>, Json(ev): Json<ClientEvent>) -> Result<Json<Ack>, ApiError> {
    st.mutate(&id, |s, c, now| {
        if already_revealed(s, &ev) {
            return Ok(Ack { seq: None, applied: false });
        }
        s.record_event(ev, c, now).map(|e| Ack::new(e.seq))
    })
    .map(Json)
}

async fn post_decision(
    State(st): Shared,
    Path(id): Path<String>,
    Json(d): Json<DecisionBody>,
) -> Result<Json<Ack>, ApiError> {
    st.mutate(&id, |s, c, now| s.submit_decision(&d.comment_id, d.severity, d.decision, c, now).map(|e| Ack::new(e.seq)))
        .map(Json)
}

async fn post_survey(
    State(st): Shared,
    Path((id, kind)): Path<(String, String)>,
    Json(r): Json<SurveyResponse>,
) -> Result<Json<Ack>, ApiError> {
    let kind: SurveyKind = kind
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "unknown_survey", format!("no survey {kind:?}")))?;
    st.mutate(&id, |s, c, now| s.submit_survey(kind, r, c, now).map(|e| Ack::new(e.seq))).map(Json)
}

async fn post_phase(State(st): Shared, Path(id): Path<String>) -> Result<Json<PhaseAck>, ApiError> {
    st.mutate(&id, |s, c, now| s.advance_phase(c, now).map(|e| PhaseAck { phase: s.phase(), seq: e.seq })).map(Json)
}

async fn get_export(State(st): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let corpus = st.corpus().clone();
    let archive = st.read(&id, |s| s.export(&corpus))??;
    Ok(([(header::CONTENT_TYPE, "application/json")], archive.to_json()).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/task", get(get_task))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/decisions", post(post_decision))
        .route("/sessions/{id}/surveys/{kind}", post(post_survey))
        .route("/sessions/{id}/phase", post(post_phase))
        .route("/sessions/{id}/export", get(get_export))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
