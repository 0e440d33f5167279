//! Study sessions: screening, group balancing, the phase flow, task
//! sequencing and the append-only event log.

mod archive;
mod participant;
mod session;

use thiserror::Error;

pub use archive::{encode_log_line, parse_log, SessionArchive};
pub use participant::{
    assign_groups, check_pseudonym, compute_hate_sensitivity, max_mean_gap, optimal_partition, refine_by_swaps,
    serpentine, BalanceMethod, Gender, GroupAssignment, GroupSummary, Participant, EXHAUSTIVE_MAX, SCREENING_ITEMS,
};
pub use session::{
    task_order, ClientEvent, CurrentTask, Event, EventBody, ModerationRecord, Phase, Progress, Session, SessionInit,
    SurveyKind, Surveys, TaskView, MEDITATION_SECONDS, SESSION_FORMAT,
};

pub use crate::measures::Decision;
use crate::measures::MeasuresError;
use crate::modification::ModificationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("expected {expected} ratings, got {got}")]
    WrongRatingCount { expected: usize, got: usize },
    #[error("invalid severity {0} (must be 1..=5)")]
    InvalidSeverity(u8),
    #[error("invalid participant: {0}")]
    InvalidParticipant(String),
    #[error("cohort of {size} is not divisible into four groups (remainder {remainder})")]
    CohortNotDivisible { size: usize, remainder: usize },
    #[error("unsupported session format {0}")]
    UnsupportedFormat(u32),
    #[error("corpus digest {actual} does not match session corpus {expected}")]
    CorpusMismatch { expected: String, actual: String },
    #[error("task order is empty")]
    EmptyTaskOrder,
    #[error("unknown comment {0}")]
    UnknownComment(String),
    #[error("comment {0} appears twice in the task order")]
    DuplicateTask(String),
    #[error("comment {comment_id} cannot be shown in this condition: {source}")]
    Unrenderable { comment_id: String, source: ModificationError },
    #[error("operation requires phase {expected}, session is in {actual}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("session is finished")]
    TerminalPhase,
    #[error("cannot move from {from} to {to} while in {actual}")]
    InvalidTransition { from: Phase, to: Phase, actual: Phase },
    #[error("too early: {elapsed_ms} ms of the required {required_s} s have elapsed")]
    TooEarly { elapsed_ms: i64, required_s: i64 },
    #[error("{0:?} survey has not been submitted")]
    MissingSurvey(SurveyKind),
    #[error("{0:?} survey was already submitted")]
    SurveyAlreadySubmitted(SurveyKind),
    #[error("only {cursor} of {total} comments moderated")]
    Incomplete { cursor: usize, total: usize },
    #[error("all comments have been moderated")]
    Exhausted,
    #[error("{0} is not the current task")]
    NotCurrentTask(String),
    #[error("task {0} was already started")]
    TaskAlreadyStarted(String),
    #[error("task {0} has not been fetched yet")]
    TaskNotStarted(String),
    #[error("decision for {got} is out of order (current task: {expected:?})")]
    OutOfOrder { expected: Option<String>, got: String },
    #[error("decision for {0} was already submitted")]
    DuplicateSubmission(String),
    #[error("event sequence gap: expected {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("event belongs to session {0}")]
    ForeignEvent(String),
    #[error("event {seq} is older than its predecessor")]
    TimeWentBackwards { seq: u64 },
    #[error("session is still in phase {0}")]
    NotFinished(Phase),
    #[error("replaying session {0} does not reproduce its state")]
    ReplayMismatch(String),
    #[error("archive: {0}")]
    Archive(String),
    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error(transparent)]
    Modification(#[from] ModificationError),
    #[error(transparent)]
    Measures(#[from] MeasuresError),
}

impl ExperimentError {
    /// Stable snake_case name for API clients.
    pub fn code(&self) -> &'static str {
        use ExperimentError as E;
        match self {
            E::WrongRatingCount { .. } => "wrong_rating_count",
            E::InvalidSeverity(_) => "invalid_severity",
            E::InvalidParticipant(_) => "invalid_participant",
            E::CohortNotDivisible { .. } => "cohort_not_divisible",
            E::UnsupportedFormat(_) => "unsupported_format",
            E::CorpusMismatch { .. } => "corpus_mismatch",
            E::EmptyTaskOrder => "empty_task_order",
            E::UnknownComment(_) => "unknown_comment",
            E::DuplicateTask(_) => "duplicate_task",
            E::Unrenderable { .. } => "unrenderable",
            E::WrongPhase { .. } => "wrong_phase",
            E::TerminalPhase => "terminal_phase",
            E::InvalidTransition { .. } => "invalid_transition",
            E::TooEarly { .. } => "too_early",
            E::MissingSurvey(_) => "missing_survey",
            E::SurveyAlreadySubmitted(_) => "survey_already_submitted",
            E::Incomplete { .. } => "incomplete",
            E::Exhausted => "exhausted",
            E::NotCurrentTask(_) => "not_current_task",
            E::TaskAlreadyStarted(_) => "task_already_started",
            E::TaskNotStarted(_) => "task_not_started",
            E::OutOfOrder { .. } => "out_of_order",
            E::DuplicateSubmission(_) => "duplicate_submission",
            E::SequenceGap { .. } => "sequence_gap",
            E::ForeignEvent(_) => "foreign_event",
            E::TimeWentBackwards { .. } => "time_went_backwards",
            E::NotFinished(_) => "not_finished",
            E::ReplayMismatch(_) => "replay_mismatch",
            E::Archive(_) => "archive",
            E::Log { .. } => "log",
            E::Modification(m) => match m {
                ModificationError::UnknownSpan(_) => "unknown_span",
                ModificationError::WrongKind { .. } => "wrong_kind",
                ModificationError::AlreadyRevealed(_) => "already_revealed",
                ModificationError::NoAlternatives(_) => "no_alternatives",
                ModificationError::AltIndexOutOfRange { .. } => "alt_index_out_of_range",
                ModificationError::FeatureNotInCondition { .. } => "feature_not_in_condition",
            },
            E::Measures(_) => "invalid_survey",
        }
    }
}
