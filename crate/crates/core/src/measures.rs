//! Instrument scoring (SPANE, MFSI) and per-participant moderation metrics.
//!
//! Survey answers are stored raw as value vectors in instrument order and
//! scored here on demand.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::scalar::Scalar;
use crate::TASK_COUNT;

pub const INSTRUMENT_V1: &str = "spane_mfsi_v1";
const INSTRUMENT_V1_JSON: &str = include_str!("../instruments/spane_mfsi_v1.json");

pub const SPANE_ITEMS: usize = 12;
pub const MFSI_ITEMS: usize = 18;
pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasuresError {
    #[error("unknown instrument version {0:?}")]
    UnknownVersion(String),
    #[error("instrument definition: {0}")]
    BadInstrument(String),
    #[error("{instrument}: expected {expected} items, got {got}")]
    WrongItemCount { instrument: &'static str, expected: usize, got: usize },
    #[error("{instrument}: item {item} has value {value}, outside 1..=5")]
    ValueOutOfRange { instrument: &'static str, item: usize, value: u8 },
    #[error("{instrument}: {group} has {got} items, expected 6")]
    UnbalancedItems { instrument: &'static str, group: String, got: usize },
    #[error("no comments to score")]
    Empty,
    #[error("decision and label key sets differ (first difference: {0})")]
    KeyMismatch(String),
    #[error("no hate-labelled comments")]
    NoHateComments,
    #[error("expected {expected} ratings, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("record {index}: submitted before it was started")]
    InvertedTimestamps { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subscale {
    Emotional,
    Mental,
    Vigor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub min: u8,
    pub max: u8,
    pub anchors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaneItemDef {
    pub number: usize,
    pub label: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfsiItemDef {
    pub number: usize,
    pub label: String,
    pub subscale: Subscale,
}

/// Versioned item lists with polarity and subscale tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instruments {
    pub version: String,
    pub scale: Scale,
    pub spane: Vec<SpaneItemDef>,
    pub mfsi: Vec<MfsiItemDef>,
}

impl Instruments {
    /// Built-in definition for `version`; unknown versions are refused.
    pub fn builtin(version: &str) -> Result<&'static Instruments, MeasuresError> {
        static V1: OnceLock<Instruments> = OnceLock::new();
        match version {
            INSTRUMENT_V1 => {
                Ok(V1.get_or_init(|| Instruments::from_json(INSTRUMENT_V1_JSON).expect("built-in instrument is valid")))
            }
            other => Err(MeasuresError::UnknownVersion(other.to_string())),
        }
    }

    pub fn current() -> &'static Instruments {
        Self::builtin(INSTRUMENT_V1).expect("current instrument")
    }

    pub fn from_json(s: &str) -> Result<Self, MeasuresError> {
        let inst: Instruments = serde_json::from_str(s).map_err(|e| MeasuresError::BadInstrument(e.to_string()))?;
        let bad = |m: String| MeasuresError::BadInstrument(m);
        if inst.spane.len() != SPANE_ITEMS || inst.mfsi.len() != MFSI_ITEMS {
            return Err(bad("item counts must be 12 (SPANE) and 18 (MFSI)".into()));
        }
        if inst.spane.iter().enumerate().any(|(i, d)| d.number != i + 1)
            || inst.mfsi.iter().enumerate().any(|(i, d)| d.number != i + 1)
        {
            return Err(bad("items must be numbered 1..n in order".into()));
        }
        if (inst.scale.min, inst.scale.max) != (LIKERT_MIN, LIKERT_MAX) {
            return Err(bad("scale must run 1..5".into()));
        }
        let spane = SpaneResponse {
            items: inst.spane.iter().map(|d| SpaneItem { label: d.label.clone(), polarity: d.polarity, value: 1 }).collect(),
        };
        let mfsi = MfsiResponse {
            items: inst.mfsi.iter().map(|d| MfsiItem { label: d.label.clone(), subscale: d.subscale, value: 1 }).collect(),
        };
        spane.validate()?;
        mfsi.validate()?;
        Ok(inst)
    }

    pub fn spane_response(&self, values: &[u8]) -> Result<SpaneResponse, MeasuresError> {
        check_values("SPANE", values, SPANE_ITEMS)?;
        Ok(SpaneResponse {
            items: self
                .spane
                .iter()
                .zip(values)
                .map(|(d, &value)| SpaneItem { label: d.label.clone(), polarity: d.polarity, value })
                .collect(),
        })
    }

    pub fn mfsi_response(&self, values: &[u8]) -> Result<MfsiResponse, MeasuresError> {
        check_values("MFSI", values, MFSI_ITEMS)?;
        Ok(MfsiResponse {
            items: self
                .mfsi
                .iter()
                .zip(values)
                .map(|(d, &value)| MfsiItem { label: d.label.clone(), subscale: d.subscale, value })
                .collect(),
        })
    }
}

fn check_values(instrument: &'static str, values: &[u8], expected: usize) -> Result<(), MeasuresError> {
    if values.len() != expected {
        return Err(MeasuresError::WrongItemCount { instrument, expected, got: values.len() });
    }
    for (i, &v) in values.iter().enumerate() {
        if !(LIKERT_MIN..=LIKERT_MAX).contains(&v) {
            return Err(MeasuresError::ValueOutOfRange { instrument, item: i + 1, value: v });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaneItem {
    pub label: String,
    pub polarity: Polarity,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaneResponse {
    pub items: Vec<SpaneItem>,
}

impl SpaneResponse {
    pub fn validate(&self) -> Result<(), MeasuresError> {
        let values: Vec<u8> = self.items.iter().map(|i| i.value).collect();
        check_values("SPANE", &values, SPANE_ITEMS)?;
        let pos = self.items.iter().filter(|i| i.polarity == Polarity::Positive).count();
        for (group, got) in [("positive", pos), ("negative", SPANE_ITEMS - pos)] {
            if got != 6 {
                return Err(MeasuresError::UnbalancedItems { instrument: "SPANE", group: group.into(), got });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfsiItem {
    pub label: String,
    pub subscale: Subscale,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfsiResponse {
    pub items: Vec<MfsiItem>,
}

impl MfsiResponse {
    pub fn validate(&self) -> Result<(), MeasuresError> {
        let values: Vec<u8> = self.items.iter().map(|i| i.value).collect();
        check_values("MFSI", &values, MFSI_ITEMS)?;
        for (name, sub) in [("emotional", Subscale::Emotional), ("mental", Subscale::Mental), ("vigor", Subscale::Vigor)] {
            let got = self.items.iter().filter(|i| i.subscale == sub).count();
            if got != 6 {
                return Err(MeasuresError::UnbalancedItems { instrument: "MFSI", group: name.into(), got });
            }
        }
        Ok(())
    }

    pub fn subscale_sum(&self, sub: Subscale) -> i32 {
        self.items.iter().filter(|i| i.subscale == sub).map(|i| i32::from(i.value)).sum()
    }
}

/// Positive sum minus negative sum, in `[-24, 24]`.
pub fn spane_b(r: &SpaneResponse) -> Result<i32, MeasuresError> {
    r.validate()?;
    Ok(r.items
        .iter()
        .map(|i| match i.polarity {
            Polarity::Positive => i32::from(i.value),
            Polarity::Negative => -i32::from(i.value),
        })
        .sum())
}

/// `(emotional + mental) - vigor`, in `[-18, 54]`; higher means more fatigue.
pub fn mfsi(r: &MfsiResponse) -> Result<i32, MeasuresError> {
    r.validate()?;
    Ok(r.subscale_sum(Subscale::Emotional) + r.subscale_sum(Subscale::Mental) - r.subscale_sum(Subscale::Vigor))
}

/// Raw survey answers, values in instrument item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyResponse {
    pub spane: Vec<u8>,
    pub mfsi: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyScores {
    pub spane_b: i32,
    pub mfsi: i32,
}

impl SurveyResponse {
    pub fn validate(&self, inst: &Instruments) -> Result<(), MeasuresError> {
        inst.spane_response(&self.spane)?;
        inst.mfsi_response(&self.mfsi)?;
        Ok(())
    }

    pub fn scores(&self, inst: &Instruments) -> Result<SurveyScores, MeasuresError> {
        Ok(SurveyScores {
            spane_b: spane_b(&inst.spane_response(&self.spane)?)?,
            mfsi: mfsi(&inst.mfsi_response(&self.mfsi)?)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Delete,
    Keep,
}

fn check_keys(decisions: &BTreeMap<String, Decision>, labels: &BTreeMap<String, Label>) -> Result<(), MeasuresError> {
    if decisions.is_empty() || labels.is_empty() {
        return Err(MeasuresError::Empty);
    }
    if let Some(k) = decisions.keys().find(|k| !labels.contains_key(*k)).or_else(|| labels.keys().find(|k| !decisions.contains_key(*k))) {
        return Err(MeasuresError::KeyMismatch(k.clone()));
    }
    Ok(())
}

/// Share of comments where "delete" coincides with a hate label.
pub fn moderation_accuracy<T: Scalar>(
    decisions: &BTreeMap<String, Decision>,
    labels: &BTreeMap<String, Label>,
) -> Result<T, MeasuresError> {
    check_keys(decisions, labels)?;
    let hits = decisions.iter().filter(|(k, &d)| (d == Decision::Delete) == (labels[*k] == Label::Hate)).count();
    Ok(T::from_usize_lossy(hits) / T::from_usize_lossy(decisions.len()))
}

/// Deleted hate comments over all hate comments.
pub fn moderation_recall<T: Scalar>(
    decisions: &BTreeMap<String, Decision>,
    labels: &BTreeMap<String, Label>,
) -> Result<T, MeasuresError> {
    check_keys(decisions, labels)?;
    let hate: Vec<&String> = labels.iter().filter(|(_, &l)| l == Label::Hate).map(|(k, _)| k).collect();
    if hate.is_empty() {
        return Err(MeasuresError::NoHateComments);
    }
    let deleted = hate.iter().filter(|k| decisions[**k] == Decision::Delete).count();
    Ok(T::from_usize_lossy(deleted) / T::from_usize_lossy(hate.len()))
}

/// `(x - mean) / sigma` with population sigma; all zeros when sigma is 0.
pub fn z_scores<T: Scalar>(xs: &[T]) -> Vec<T> {
    if xs.is_empty() {
        return Vec::new();
    }
    let m = crate::scalar::mean(xs);
    let var = xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_usize_lossy(xs.len());
    let sd = var.sqrt();
    if sd == T::zero() {
        return vec![T::zero(); xs.len()];
    }
    xs.iter().map(|&x| (x - m) / sd).collect()
}

/// Z-scores of a participant's full severity vector (one rating per task).
pub fn normalize_severity<T: Scalar>(ratings: &[u8]) -> Result<Vec<T>, MeasuresError> {
    if ratings.len() != TASK_COUNT {
        return Err(MeasuresError::WrongLength { expected: TASK_COUNT, got: ratings.len() });
    }
    check_values("severity", ratings, TASK_COUNT)?;
    let xs: Vec<T> = ratings.iter().map(|&r| T::lit(f64::from(r))).collect();
    Ok(z_scores(&xs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionTime {
    pub total_minutes: f64,
    /// Minutes elapsed after each step, nondecreasing.
    pub cumulative_minutes: Vec<f64>,
}

/// Sums per-task durations `submitted - started` over a full session.
pub fn completion_time(intervals: &[(DateTime<Utc>, DateTime<Utc>)]) -> Result<CompletionTime, MeasuresError> {
    if intervals.len() != TASK_COUNT {
        return Err(MeasuresError::WrongLength { expected: TASK_COUNT, got: intervals.len() });
    }
    let mut ms: i64 = 0;
    let mut cumulative_minutes = Vec::with_capacity(intervals.len());
    for (index, (start, end)) in intervals.iter().enumerate() {
        let d = (*end - *start).num_milliseconds();
        if d < 0 {
            return Err(MeasuresError::InvertedTimestamps { index });
        }
        ms += d;
        cumulative_minutes.push(ms as f64 / 60_000.0);
    }
    Ok(CompletionTime { total_minutes: ms as f64 / 60_000.0, cumulative_minutes })
}

/// Everything the report needs about one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantMetrics {
    pub spane_b_pre: i32,
    pub spane_b_post: i32,
    pub mfsi_pre: i32,
    pub mfsi_post: i32,
    pub accuracy: f64,
    pub recall: f64,
    pub completion_minutes: f64,
    pub severity_z: Vec<f64>,
}
