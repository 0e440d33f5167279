use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::session::{Event, ModerationRecord, Phase, Session, SessionInit, Surveys, SESSION_FORMAT};
use super::ExperimentError;
use crate::corpus::{Corpus, Label};

/// Self-contained record of a completed session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionArchive {
    pub format: u32,
    pub init: SessionInit,
    /// Gold labels of the moderated comments, so analysis needs no corpus.
    pub labels: BTreeMap<String, Label>,
    pub records: Vec<ModerationRecord>,
    pub surveys: Surveys,
    pub events: Vec<Event>,
}

impl Session {
    /// Archives a finished session after checking that replaying its log
    /// reproduces the live state.
    pub fn export(&self, corpus: &Corpus) -> Result<SessionArchive, ExperimentError> {
        if self.phase() != Phase::Done {
            return Err(ExperimentError::NotFinished(self.phase()));
        }
        let replayed = Session::replay(self.init().clone(), self.events(), corpus)?;
        if &replayed != self {
            return Err(ExperimentError::ReplayMismatch(self.id().to_string()));
        }
        let labels = self
            .init()
            .task_order
            .iter()
            .map(|id| (id.clone(), corpus.get(id).expect("validated at creation").label))
            .collect();
        Ok(SessionArchive {
            format: SESSION_FORMAT,
            init: self.init().clone(),
            labels,
            records: self.records().to_vec(),
            surveys: self.surveys().clone(),
            events: self.events().to_vec(),
        })
    }
}

impl SessionArchive {
    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("archive serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, ExperimentError> {
        let a: SessionArchive = serde_json::from_str(s).map_err(|e| ExperimentError::Archive(e.to_string()))?;
        if a.format != SESSION_FORMAT {
            return Err(ExperimentError::UnsupportedFormat(a.format));
        }
        a.check_consistency()?;
        Ok(a)
    }

    /// Structural checks that need no corpus.
    pub fn check_consistency(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Archive(m));
        if self.records.len() != self.init.task_order.len() {
            return bad(format!("{} records for {} tasks", self.records.len(), self.init.task_order.len()));
        }
        for (r, id) in self.records.iter().zip(&self.init.task_order) {
            if &r.comment_id != id {
                return bad(format!("record {} out of task order", r.comment_id));
            }
            if !self.labels.contains_key(id) {
                return bad(format!("no label for {id}"));
            }
            if r.submitted_at < r.started_at {
                return bad(format!("record {} submitted before it started", r.comment_id));
            }
        }
        if self.surveys.pre.is_none() || self.surveys.post.is_none() {
            return bad("missing survey".into());
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.seq != i as u64 + 1 || e.session_id != self.init.session_id {
                return bad(format!("event {} out of sequence", i + 1));
            }
        }
        Ok(())
    }

    /// Replays the archived log against `corpus` and checks it reproduces
    /// the archived records and surveys.
    pub fn verify(&self, corpus: &Corpus) -> Result<(), ExperimentError> {
        let s = Session::replay(self.init.clone(), &self.events, corpus)?;
        if s.records() != self.records.as_slice() || s.surveys() != &self.surveys || s.phase() != Phase::Done {
            return Err(ExperimentError::ReplayMismatch(self.init.session_id.clone()));
        }
        Ok(())
    }
}

/// Session log: the header on the first line, one event per following line.
pub fn encode_log_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("log line serializes");
    s.push('\n');
    s
}

/// Parses a session log. A final line without its newline is an interrupted
/// write that was never acknowledged and is dropped.
pub fn parse_log(text: &str) -> Result<(SessionInit, Vec<Event>), ExperimentError> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| ExperimentError::Log { line: 1, message: "empty log".into() })?;
    let init: SessionInit =
        serde_json::from_str(head).map_err(|e| ExperimentError::Log { line: 1, message: e.to_string() })?;
    let events = lines
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| ExperimentError::Log { line: i + 1, message: e.to_string() }))
        .collect::<Result<Vec<Event>, _>>()?;
    Ok((init, events))
}
