use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::participant::Participant;
use super::ExperimentError;
use crate::corpus::Corpus;
use crate::measures::{Decision, Instruments, SurveyResponse};
use crate::modification::{
    cycle_alternative, render, reveal_original, reveal_target, Condition, RenderedComment, RevealState,
};

pub const SESSION_FORMAT: u32 = 1;
pub const MEDITATION_SECONDS: i64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Intro,
    Meditation,
    PreSurvey,
    Practice,
    Main,
    PostSurvey,
    Done,
}

impl Phase {
    pub const ALL: [Phase; 7] =
        [Phase::Intro, Phase::Meditation, Phase::PreSurvey, Phase::Practice, Phase::Main, Phase::PostSurvey, Phase::Done];

    pub fn next(self) -> Option<Phase> {
        Phase::ALL.iter().position(|&p| p == self).and_then(|i| Phase::ALL.get(i + 1).copied())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Intro => "intro",
            Phase::Meditation => "meditation",
            Phase::PreSurvey => "pre_survey",
            Phase::Practice => "practice",
            Phase::Main => "main",
            Phase::PostSurvey => "post_survey",
            Phase::Done => "done",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyKind {
    Pre,
    Post,
}

impl std::str::FromStr for SurveyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre" => Ok(SurveyKind::Pre),
            "post" => Ok(SurveyKind::Post),
            other => Err(format!("unknown survey {other:?} (expected pre or post)")),
        }
    }
}

/// Immutable session header; the first line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionInit {
    pub format: u32,
    pub session_id: String,
    pub participant: Participant,
    pub condition: Condition,
    pub task_order: Vec<String>,
    pub corpus_digest: String,
    pub instrument_version: String,
    /// Seed used to shuffle `task_order`, if it was shuffled.
    pub shuffle_seed: Option<u64>,
    pub created_at: DateTime<Utc>,
}

/// Corpus order, or a seeded shuffle of it.
pub fn task_order(corpus: &Corpus, shuffle_seed: Option<u64>) -> Vec<String> {
    let mut ids = corpus.ids();
    if let Some(seed) = shuffle_seed {
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    PhaseChange { from: Phase, to: Phase },
    TaskStarted { comment_id: String },
    RevealTarget { comment_id: String, span_id: String },
    RevealOriginal { comment_id: String, span_id: String },
    CycleAlternative { comment_id: String, span_id: String },
    SeveritySet { comment_id: String, severity: u8 },
    DecisionSubmitted { comment_id: String, severity: u8, decision: Decision },
    SurveySubmitted { survey: SurveyKind, response: SurveyResponse },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::PhaseChange { .. } => "phase_change",
            EventBody::TaskStarted { .. } => "task_started",
            EventBody::RevealTarget { .. } => "reveal_target",
            EventBody::RevealOriginal { .. } => "reveal_original",
            EventBody::CycleAlternative { .. } => "cycle_alternative",
            EventBody::SeveritySet { .. } => "severity_set",
            EventBody::DecisionSubmitted { .. } => "decision_submitted",
            EventBody::SurveySubmitted { .. } => "survey_submitted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub session_id: String,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Events a client may submit directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ClientEvent {
    RevealTarget { comment_id: String, span_id: String },
    RevealOriginal { comment_id: String, span_id: String },
    CycleAlternative { comment_id: String, span_id: String },
    SeveritySet { comment_id: String, severity: u8 },
    DecisionSubmitted { comment_id: String, severity: u8, decision: Decision },
    SurveySubmitted { survey: SurveyKind, response: SurveyResponse },
}

impl From<ClientEvent> for EventBody {
    fn from(c: ClientEvent) -> Self {
        match c {
            ClientEvent::RevealTarget { comment_id, span_id } => EventBody::RevealTarget { comment_id, span_id },
            ClientEvent::RevealOriginal { comment_id, span_id } => EventBody::RevealOriginal { comment_id, span_id },
            ClientEvent::CycleAlternative { comment_id, span_id } => {
                EventBody::CycleAlternative { comment_id, span_id }
            }
            ClientEvent::SeveritySet { comment_id, severity } => EventBody::SeveritySet { comment_id, severity },
            ClientEvent::DecisionSubmitted { comment_id, severity, decision } => {
                EventBody::DecisionSubmitted { comment_id, severity, decision }
            }
            ClientEvent::SurveySubmitted { survey, response } => EventBody::SurveySubmitted { survey, response },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationRecord {
    pub comment_id: String,
    pub severity: u8,
    pub decision: Decision,
    pub started_at: DateTime<Utc>,
    pub submitted_at: DateTime<Utc>,
    pub reveal_count_target: u32,
    pub reveal_count_original: u32,
    pub cycle_count: u32,
}

impl ModerationRecord {
    pub fn duration_ms(&self) -> i64 {
        (self.submitted_at - self.started_at).num_milliseconds()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Surveys {
    pub pre: Option<SurveyResponse>,
    pub post: Option<SurveyResponse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentTask {
    pub comment_id: String,
    pub started_at: DateTime<Utc>,
    pub severity: Option<u8>,
    pub reveal_count_target: u32,
    pub reveal_count_original: u32,
    pub cycle_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub cursor: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub comment_id: String,
    pub rendered: RenderedComment,
    pub progress: Progress,
}

/// Session state; only ever changed by applying events.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    init: SessionInit,
    phase: Phase,
    phase_entered_at: DateTime<Utc>,
    cursor: usize,
    records: Vec<ModerationRecord>,
    reveal_states: BTreeMap<String, RevealState>,
    surveys: Surveys,
    current: Option<CurrentTask>,
    events: Vec<Event>,
}

impl Session {
    /// Checks the header against `corpus` and opens the session in `intro`.
    pub fn new(init: SessionInit, corpus: &Corpus) -> Result<Self, ExperimentError> {
        if init.format != SESSION_FORMAT {
            return Err(ExperimentError::UnsupportedFormat(init.format));
        }
        if init.session_id.trim().is_empty() {
            return Err(ExperimentError::InvalidParticipant("empty session id".into()));
        }
        init.participant.validate()?;
        Instruments::builtin(&init.instrument_version)?;
        let digest = corpus.digest();
        if init.corpus_digest != digest {
            return Err(ExperimentError::CorpusMismatch { expected: init.corpus_digest.clone(), actual: digest });
        }
        if init.task_order.is_empty() {
            return Err(ExperimentError::EmptyTaskOrder);
        }
        let mut seen = std::collections::HashSet::new();
        for id in &init.task_order {
            let c = corpus.get(id).ok_or_else(|| ExperimentError::UnknownComment(id.clone()))?;
            if !seen.insert(id) {
                return Err(ExperimentError::DuplicateTask(id.clone()));
            }
            render(c, init.condition, &RevealState::default())
                .map_err(|e| ExperimentError::Unrenderable { comment_id: id.clone(), source: e })?;
        }
        Ok(Self {
            phase_entered_at: init.created_at,
            init,
            phase: Phase::Intro,
            cursor: 0,
            records: Vec::new(),
            reveal_states: BTreeMap::new(),
            surveys: Surveys::default(),
            current: None,
            events: Vec::new(),
        })
    }

    /// Folds `events` over a fresh session.
    pub fn replay(init: SessionInit, events: &[Event], corpus: &Corpus) -> Result<Self, ExperimentError> {
        let mut s = Session::new(init, corpus)?;
        for e in events {
            s.apply(e, corpus)?;
        }
        Ok(s)
    }

    pub fn init(&self) -> &SessionInit {
        &self.init
    }
    pub fn id(&self) -> &str {
        &self.init.session_id
    }
    pub fn condition(&self) -> Condition {
        self.init.condition
    }
    pub fn phase(&self) -> Phase {
        self.phase
    }
    pub fn phase_entered_at(&self) -> DateTime<Utc> {
        self.phase_entered_at
    }
    pub fn cursor(&self) -> usize {
        self.cursor
    }
    pub fn total(&self) -> usize {
        self.init.task_order.len()
    }
    pub fn progress(&self) -> Progress {
        Progress { cursor: self.cursor, total: self.total() }
    }
    pub fn records(&self) -> &[ModerationRecord] {
        &self.records
    }
    pub fn reveal_states(&self) -> &BTreeMap<String, RevealState> {
        &self.reveal_states
    }
    pub fn surveys(&self) -> &Surveys {
        &self.surveys
    }
    pub fn current(&self) -> Option<&CurrentTask> {
        self.current.as_ref()
    }
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn current_id(&self) -> Option<&str> {
        self.init.task_order.get(self.cursor).map(String::as_str)
    }

    fn stamp(&self, now: DateTime<Utc>) -> DateTime<Utc> {
        // event timestamps never go backwards
        self.events.last().map_or(now, |e| e.timestamp.max(now))
    }

    /// Validates `body` at time `now`, appends it as the next event and
    /// returns that event.
    pub fn handle(&mut self, body: EventBody, corpus: &Corpus, now: DateTime<Utc>) -> Result<Event, ExperimentError> {
        let event = Event {
            seq: self.events.len() as u64 + 1,
            session_id: self.init.session_id.clone(),
            timestamp: self.stamp(now),
            body,
        };
        self.apply(&event, corpus)?;
        Ok(event)
    }

    pub fn record_event(
        &mut self,
        ev: ClientEvent,
        corpus: &Corpus,
        now: DateTime<Utc>,
    ) -> Result<Event, ExperimentError> {
        self.handle(ev.into(), corpus, now)
    }

    /// Moves to the next phase if its completion predicate holds.
    pub fn advance_phase(&mut self, corpus: &Corpus, now: DateTime<Utc>) -> Result<Event, ExperimentError> {
        let to = self.phase.next().ok_or(ExperimentError::TerminalPhase)?;
        self.handle(EventBody::PhaseChange { from: self.phase, to }, corpus, now)
    }

    /// Renders the current task, recording its start on first fetch.
    pub fn next_task(&mut self, corpus: &Corpus, now: DateTime<Utc>) -> Result<TaskView, ExperimentError> {
        self.require_phase(Phase::Main)?;
        let id = self.current_id().ok_or(ExperimentError::Exhausted)?.to_string();
        if self.current.is_none() {
            self.handle(EventBody::TaskStarted { comment_id: id.clone() }, corpus, now)?;
        }
        let c = corpus.get(&id).ok_or_else(|| ExperimentError::UnknownComment(id.clone()))?;
        let state = self.reveal_states.get(&id).cloned().unwrap_or_default();
        let rendered = render(c, self.init.condition, &state)?;
        Ok(TaskView { comment_id: id, rendered, progress: self.progress() })
    }

    pub fn submit_decision(
        &mut self,
        comment_id: &str,
        severity: u8,
        decision: Decision,
        corpus: &Corpus,
        now: DateTime<Utc>,
    ) -> Result<Event, ExperimentError> {
        self.handle(EventBody::DecisionSubmitted { comment_id: comment_id.into(), severity, decision }, corpus, now)
    }

    pub fn submit_survey(
        &mut self,
        survey: SurveyKind,
        response: SurveyResponse,
        corpus: &Corpus,
        now: DateTime<Utc>,
    ) -> Result<Event, ExperimentError> {
        self.handle(EventBody::SurveySubmitted { survey, response }, corpus, now)
    }

    fn require_phase(&self, p: Phase) -> Result<(), ExperimentError> {
        if self.phase == p {
            Ok(())
        } else {
            Err(ExperimentError::WrongPhase { expected: p, actual: self.phase })
        }
    }

    fn started_task(&self, comment_id: &str) -> Result<&CurrentTask, ExperimentError> {
        self.require_phase(Phase::Main)?;
        match &self.current {
            Some(t) if t.comment_id == comment_id => Ok(t),
            _ => Err(ExperimentError::NotCurrentTask(comment_id.to_string())),
        }
    }

    fn check_phase_predicate(&self, to: Phase, at: DateTime<Utc>) -> Result<(), ExperimentError> {
        match (self.phase, to) {
            (Phase::Meditation, _) => {
                let elapsed = (at - self.phase_entered_at).num_milliseconds();
                if elapsed < MEDITATION_SECONDS * 1000 {
                    return Err(ExperimentError::TooEarly { elapsed_ms: elapsed, required_s: MEDITATION_SECONDS });
                }
            }
            (Phase::PreSurvey, _) if self.surveys.pre.is_none() => {
                return Err(ExperimentError::MissingSurvey(SurveyKind::Pre))
            }
            (Phase::Main, _) if self.cursor < self.total() => {
                return Err(ExperimentError::Incomplete { cursor: self.cursor, total: self.total() })
            }
            (Phase::PostSurvey, _) if self.surveys.post.is_none() => {
                return Err(ExperimentError::MissingSurvey(SurveyKind::Post))
            }
            _ => {}
        }
        Ok(())
    }

    /// Applies one event: the single place session state changes. Invalid
    /// events leave the session untouched.
    pub fn apply(&mut self, e: &Event, corpus: &Corpus) -> Result<(), ExperimentError> {
        let expected = self.events.len() as u64 + 1;
        if e.seq != expected {
            return Err(ExperimentError::SequenceGap { expected, got: e.seq });
        }
        if e.session_id != self.init.session_id {
            return Err(ExperimentError::ForeignEvent(e.session_id.clone()));
        }
        if let Some(last) = self.events.last() {
            if e.timestamp < last.timestamp {
                return Err(ExperimentError::TimeWentBackwards { seq: e.seq });
            }
        }
        if self.phase == Phase::Done {
            return Err(ExperimentError::TerminalPhase);
        }
        let cond = self.init.condition;
        match &e.body {
            EventBody::PhaseChange { from, to } => {
                if *from != self.phase || Some(*to) != self.phase.next() {
                    return Err(ExperimentError::InvalidTransition { from: *from, to: *to, actual: self.phase });
                }
                self.check_phase_predicate(*to, e.timestamp)?;
                self.phase = *to;
                self.phase_entered_at = e.timestamp;
            }
            EventBody::TaskStarted { comment_id } => {
                self.require_phase(Phase::Main)?;
                if self.current.is_some() {
                    return Err(ExperimentError::TaskAlreadyStarted(comment_id.clone()));
                }
                match self.current_id() {
                    Some(id) if id == comment_id => {}
                    Some(_) => return Err(ExperimentError::NotCurrentTask(comment_id.clone())),
                    None => return Err(ExperimentError::Exhausted),
                }
                self.current = Some(CurrentTask {
                    comment_id: comment_id.clone(),
                    started_at: e.timestamp,
                    severity: None,
                    reveal_count_target: 0,
                    reveal_count_original: 0,
                    cycle_count: 0,
                });
            }
            EventBody::RevealTarget { comment_id, span_id }
            | EventBody::RevealOriginal { comment_id, span_id }
            | EventBody::CycleAlternative { comment_id, span_id } => {
                self.started_task(comment_id)?;
                let c = corpus.get(comment_id).ok_or_else(|| ExperimentError::UnknownComment(comment_id.clone()))?;
                let state = self.reveal_states.get(comment_id).cloned().unwrap_or_default();
                let next = match &e.body {
                    EventBody::RevealTarget { .. } => reveal_target(c, cond, &state, span_id)?,
                    EventBody::RevealOriginal { .. } => reveal_original(c, cond, &state, span_id)?,
                    _ => cycle_alternative(c, cond, &state, span_id)?,
                };
                let cur = self.current.as_mut().expect("checked above");
                match &e.body {
                    EventBody::RevealTarget { .. } => cur.reveal_count_target += 1,
                    EventBody::RevealOriginal { .. } => cur.reveal_count_original += 1,
                    _ => cur.cycle_count += 1,
                }
                self.reveal_states.insert(comment_id.clone(), next);
            }
            EventBody::SeveritySet { comment_id, severity } => {
                self.started_task(comment_id)?;
                check_severity(*severity)?;
                self.current.as_mut().expect("checked above").severity = Some(*severity);
            }
            EventBody::DecisionSubmitted { comment_id, severity, decision } => {
                self.require_phase(Phase::Main)?;
                if self.records.iter().any(|r| &r.comment_id == comment_id) {
                    return Err(ExperimentError::DuplicateSubmission(comment_id.clone()));
                }
                if self.current_id() != Some(comment_id.as_str()) {
                    return Err(ExperimentError::OutOfOrder {
                        expected: self.current_id().map(str::to_string),
                        got: comment_id.clone(),
                    });
                }
                check_severity(*severity)?;
                let cur = self.current.take().ok_or_else(|| ExperimentError::TaskNotStarted(comment_id.clone()))?;
                self.records.push(ModerationRecord {
                    comment_id: comment_id.clone(),
                    severity: *severity,
                    decision: *decision,
                    started_at: cur.started_at,
                    submitted_at: e.timestamp,
                    reveal_count_target: cur.reveal_count_target,
                    reveal_count_original: cur.reveal_count_original,
                    cycle_count: cur.cycle_count,
                });
                self.cursor += 1;
            }
            EventBody::SurveySubmitted { survey, response } => {
                let (phase, slot) = match survey {
                    SurveyKind::Pre => (Phase::PreSurvey, &self.surveys.pre),
                    SurveyKind::Post => (Phase::PostSurvey, &self.surveys.post),
                };
                self.require_phase(phase)?;
                if slot.is_some() {
                    return Err(ExperimentError::SurveyAlreadySubmitted(*survey));
                }
                response.validate(Instruments::builtin(&self.init.instrument_version)?)?;
                match survey {
                    SurveyKind::Pre => self.surveys.pre = Some(response.clone()),
                    SurveyKind::Post => self.surveys.post = Some(response.clone()),
                }
            }
        }
        self.events.push(e.clone());
        Ok(())
    }
}

fn check_severity(s: u8) -> Result<(), ExperimentError> {
    if (1..=5).contains(&s) {
        Ok(())
    } else {
        Err(ExperimentError::InvalidSeverity(s))
    }
}
