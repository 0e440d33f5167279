use serde::{Deserialize, Serialize};

use super::CurationError;
use crate::corpus::{insert_markers, Comment, Label, SpanKind, OFFENSIVE_MARKER};

pub const HATE_INSTRUCTION: &str = "You are a text content moderator for Korean news comments. Your task is to paraphrase the original comment into a euphemistic comment while maintaining the original meaning of the comment. For your information, Euphemism is an innocuous word or expression used in place of one that is deemed offensive or suggests something unpleasant. From a given Korean comment on the News, output 10 distinct Euphemistic paraphrased comments by paraphrasing only words between `※'. Do not change the original meaning and separate each output with `$'.";

pub const NORMAL_INSTRUCTION: &str = "You are a text content moderator for Korean news comments. Your task is to paraphrase a comment. From a given Korean comment on the News, output 10 distinct paraphrased comments by paraphrasing only words between `※'. Do not change the original meaning and separate each output with `$'.";

pub const OUTPUT_SEPARATOR: char = '$';
pub const EXPECTED_CANDIDATES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Hate,
    Normal,
}

impl PromptKind {
    pub fn instruction(self) -> &'static str {
        match self {
            PromptKind::Hate => HATE_INSTRUCTION,
            PromptKind::Normal => NORMAL_INSTRUCTION,
        }
    }
}

impl From<Label> for PromptKind {
    fn from(l: Label) -> Self {
        match l {
            Label::Hate => PromptKind::Hate,
            Label::Normal => PromptKind::Normal,
        }
    }
}

fn assemble(kind: PromptKind, marked: &str) -> String {
    format!("{}\n\n{}", kind.instruction(), marked)
}

/// Instruction followed by the comment with every offensive span wrapped in `※`.
pub fn build_prompt(c: &Comment, kind: PromptKind) -> Result<String, CurationError> {
    if c.spans_of(SpanKind::Offensive).next().is_none() {
        return Err(CurationError::NoParaphrasableSpan(c.id.clone()));
    }
    let marked = insert_markers(&c.text, &c.spans, |s| (s.kind == SpanKind::Offensive).then_some(OFFENSIVE_MARKER));
    Ok(assemble(kind, &marked))
}

/// Like [`build_prompt`] but marks only `span_id`, so each candidate differs
/// from the original in exactly one place.
pub fn build_span_prompt(c: &Comment, span_id: &str, kind: PromptKind) -> Result<String, CurationError> {
    match c.span(span_id) {
        Some(s) if s.kind == SpanKind::Offensive => {}
        _ => {
            return Err(CurationError::NotParaphrasable { comment_id: c.id.clone(), span_id: span_id.to_string() })
        }
    }
    let marked = insert_markers(&c.text, &c.spans, |s| (s.id == span_id).then_some(OFFENSIVE_MARKER));
    Ok(assemble(kind, &marked))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub candidates: Vec<String>,
    /// Set when the raw output held a number of candidates other than ten.
    pub count_warning: Option<usize>,
}

/// Splits a raw completion on `$`, trimming items and dropping empty ones.
/// At most ten candidates are kept.
pub fn parse_generation(raw: &str) -> Result<Generation, CurationError> {
    let mut candidates: Vec<String> = raw
        .split(OUTPUT_SEPARATOR)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if candidates.is_empty() {
        return Err(CurationError::EmptyOutput);
    }
    let count_warning = (candidates.len() != EXPECTED_CANDIDATES).then_some(candidates.len());
    candidates.truncate(EXPECTED_CANDIDATES);
    Ok(Generation { candidates, count_warning })
}
