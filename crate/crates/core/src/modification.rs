//! Condition-specific rendering of a comment and the reveal/cycle state machine.
//!
//! Everything here is a pure function of `(Comment, Condition, RevealState)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Comment, Span, SpanKind};

/// Constant placeholder drawn over anonymized targets. Independent of the
/// target's length.
pub const MASK_GLYPHS: &str = "■■■";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Control,
    Anonymizing,
    Paraphrasing,
    Revealing,
}

impl Condition {
    pub const ALL: [Condition; 4] =
        [Condition::Control, Condition::Anonymizing, Condition::Paraphrasing, Condition::Revealing];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Control => "control",
            Condition::Anonymizing => "anonymizing",
            Condition::Paraphrasing => "paraphrasing",
            Condition::Revealing => "revealing",
        }
    }

    pub fn masks_targets(self) -> bool {
        matches!(self, Condition::Anonymizing | Condition::Revealing)
    }

    pub fn paraphrases(self) -> bool {
        matches!(self, Condition::Paraphrasing | Condition::Revealing)
    }

    pub fn allows_reveal(self) -> bool {
        self == Condition::Revealing
    }

    pub fn allows_cycle(self) -> bool {
        self.paraphrases()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown condition {s:?}"))
    }
}

/// Per-comment interaction state. Sets only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealState {
    pub revealed_targets: BTreeSet<String>,
    pub revealed_originals: BTreeSet<String>,
    pub alt_index: BTreeMap<String, usize>,
}

impl RevealState {
    pub fn is_empty(&self) -> bool {
        self.revealed_targets.is_empty() && self.revealed_originals.is_empty() && self.alt_index.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentStyle {
    Plain,
    TargetHighlight,
    OffensiveUnderline,
    TargetMask,
    Paraphrased,
}

/// `index` is 1-based, as displayed ("1/3").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    pub index: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub text: String,
    pub style: SegmentStyle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter: Option<Counter>,
    pub revealable: bool,
}

impl Segment {
    fn plain(text: String) -> Self {
        Self { text, style: SegmentStyle::Plain, span_id: None, counter: None, revealable: false }
    }

    fn span(text: String, style: SegmentStyle, span: &Span) -> Self {
        Self { text, style, span_id: Some(span.id.clone()), counter: None, revealable: false }
    }
}

/// Wire form is a bare array of segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RenderedComment {
    pub segments: Vec<Segment>,
}

impl RenderedComment {
    pub fn concat(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn segment(&self, span_id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.span_id.as_deref() == Some(span_id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModificationError {
    #[error("unknown span {0}")]
    UnknownSpan(String),
    #[error("span {span_id} is not a {expected:?} span")]
    WrongKind { span_id: String, expected: SpanKind },
    #[error("span {0} has already been revealed")]
    AlreadyRevealed(String),
    #[error("span {0} has no alternatives")]
    NoAlternatives(String),
    #[error("alternative index {index} out of range for span {span_id} ({total} alternatives)")]
    AltIndexOutOfRange { span_id: String, index: usize, total: usize },
    #[error("{feature} is not available under the {condition} condition")]
    FeatureNotInCondition { feature: &'static str, condition: Condition },
}

fn spans_of_kind<'a>(c: &'a Comment, id: &str, kind: SpanKind) -> Result<&'a Span, ModificationError> {
    let span = c.span(id).ok_or_else(|| ModificationError::UnknownSpan(id.to_owned()))?;
    if span.kind != kind {
        return Err(ModificationError::WrongKind { span_id: id.to_owned(), expected: kind });
    }
    Ok(span)
}

/// Checks that `s` only references spans of `c` and fits `cond`.
pub fn validate_state(c: &Comment, cond: Condition, s: &RevealState) -> Result<(), ModificationError> {
    if !cond.allows_reveal()
        && (!s.revealed_targets.is_empty() || !s.revealed_originals.is_empty()) {
            return Err(ModificationError::FeatureNotInCondition { feature: "reveal", condition: cond });
        }
    if !cond.allows_cycle() && !s.alt_index.is_empty() {
        return Err(ModificationError::FeatureNotInCondition { feature: "cycle_alternative", condition: cond });
    }
    for id in &s.revealed_targets {
        spans_of_kind(c, id, SpanKind::Target)?;
    }
    for id in &s.revealed_originals {
        spans_of_kind(c, id, SpanKind::Offensive)?;
    }
    for (id, &index) in &s.alt_index {
        spans_of_kind(c, id, SpanKind::Offensive)?;
        let total = c.alternatives_for(id).len();
        if total == 0 {
            return Err(ModificationError::NoAlternatives(id.clone()));
        }
        if index >= total {
            return Err(ModificationError::AltIndexOutOfRange { span_id: id.clone(), index, total });
        }
    }
    Ok(())
}

/// Produces the view of `c` a moderator sees under `cond`.
///
/// Control and Anonymizing accept only the empty state; Paraphrasing accepts
/// alternative cycling but no reveals. Offensive spans without alternatives
/// cannot be rendered under a paraphrasing condition.
pub fn render(c: &Comment, cond: Condition, s: &RevealState) -> Result<RenderedComment, ModificationError> {
    validate_state(c, cond, s)?;
    let chars: Vec<char> = c.text.chars().collect();
    let mut segments = Vec::with_capacity(c.spans.len() * 2 + 1);
    let mut pos = 0usize;
    for span in c.sorted_spans() {
        if span.start > pos {
            segments.push(Segment::plain(chars[pos..span.start].iter().collect()));
        }
        let surface: String = chars[span.start..span.end].iter().collect();
        segments.push(render_span(c, cond, s, span, surface)?);
        pos = span.end;
    }
    if pos < chars.len() {
        segments.push(Segment::plain(chars[pos..].iter().collect()));
    }
    Ok(RenderedComment { segments })
}

fn render_span(
    c: &Comment,
    cond: Condition,
    s: &RevealState,
    span: &Span,
    surface: String,
) -> Result<Segment, ModificationError> {
    let seg = match span.kind {
        SpanKind::Target => {
            if cond.masks_targets() && !s.revealed_targets.contains(&span.id) {
                let mut seg = Segment::span(MASK_GLYPHS.to_owned(), SegmentStyle::TargetMask, span);
                seg.revealable = cond.allows_reveal();
                seg
            } else {
                Segment::span(surface, SegmentStyle::TargetHighlight, span)
            }
        }
        SpanKind::Offensive => {
            if cond.paraphrases() && !s.revealed_originals.contains(&span.id) {
                let alts = c.alternatives_for(&span.id);
                if alts.is_empty() {
                    return Err(ModificationError::NoAlternatives(span.id.clone()));
                }
                let index = s.alt_index.get(&span.id).copied().unwrap_or(0);
                let mut seg = Segment::span(alts[index].clone(), SegmentStyle::Paraphrased, span);
                seg.counter = Some(Counter { index: index + 1, total: alts.len() });
                seg.revealable = cond.allows_reveal();
                seg
            } else {
                Segment::span(surface, SegmentStyle::OffensiveUnderline, span)
            }
        }
    };
    Ok(seg)
}

/// Marks a masked target as revealed. Idempotent.
pub fn reveal_target(
    c: &Comment,
    cond: Condition,
    s: &RevealState,
    span_id: &str,
) -> Result<RevealState, ModificationError> {
    if !cond.allows_reveal() {
        return Err(ModificationError::FeatureNotInCondition { feature: "reveal_target", condition: cond });
    }
    spans_of_kind(c, span_id, SpanKind::Target)?;
    let mut next = s.clone();
    next.revealed_targets.insert(span_id.to_owned());
    Ok(next)
}

/// Shows the original surface of a paraphrased span. Idempotent.
pub fn reveal_original(
    c: &Comment,
    cond: Condition,
    s: &RevealState,
    span_id: &str,
) -> Result<RevealState, ModificationError> {
    if !cond.allows_reveal() {
        return Err(ModificationError::FeatureNotInCondition { feature: "reveal_original", condition: cond });
    }
    spans_of_kind(c, span_id, SpanKind::Offensive)?;
    let mut next = s.clone();
    next.revealed_originals.insert(span_id.to_owned());
    Ok(next)
}

/// Advances the shown alternative, wrapping after the last one.
pub fn cycle_alternative(
    c: &Comment,
    cond: Condition,
    s: &RevealState,
    span_id: &str,
) -> Result<RevealState, ModificationError> {
    if !cond.allows_cycle() {
        return Err(ModificationError::FeatureNotInCondition { feature: "cycle_alternative", condition: cond });
    }
    spans_of_kind(c, span_id, SpanKind::Offensive)?;
    if s.revealed_originals.contains(span_id) {
        return Err(ModificationError::AlreadyRevealed(span_id.to_owned()));
    }
    let n = c.alternatives_for(span_id).len();
    if n == 0 {
        return Err(ModificationError::NoAlternatives(span_id.to_owned()));
    }
    let mut next = s.clone();
    let idx = next.alt_index.entry(span_id.to_owned()).or_insert(0);
    *idx = (*idx + 1) % n;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{import_marked, Label, OFFENSIVE_MARKER, TARGET_MARKER};

    fn example() -> Comment {
        let (text, spans) = import_marked(
            "§women§ will bring about the ※downfall※ of this country",
            &[(TARGET_MARKER, SpanKind::Target), (OFFENSIVE_MARKER, SpanKind::Offensive)],
        )
        .unwrap();
        let mut alternatives = BTreeMap::new();
        alternatives.insert(
            "o1".to_owned(),
            vec!["embarrassing moment".to_owned(), "setback".to_owned(), "troubles".to_owned()],
        );
        Comment { id: "c1".into(), text, label: Label::Hate, topic: "gender".into(), spans, alternatives }
    }

    #[test]
    fn anonymizing_hides_target() {
        let c = example();
        let r = render(&c, Condition::Anonymizing, &RevealState::default()).unwrap();
        assert!(r.segments.iter().any(|s| s.style == SegmentStyle::TargetMask));
        assert!(!r.concat().contains("women"));
        assert_eq!(r.segment("o1").unwrap().style, SegmentStyle::OffensiveUnderline);
        assert!(r.segments.iter().all(|s| !s.revealable));
    }

    #[test]
    fn control_is_identity() {
        let c = example();
        let r = render(&c, Condition::Control, &RevealState::default()).unwrap();
        assert_eq!(r.concat(), c.text);
        assert_eq!(r.segment("t1").unwrap().style, SegmentStyle::TargetHighlight);
        assert_eq!(r.segment("o1").unwrap().style, SegmentStyle::OffensiveUnderline);
    }

    #[test]
    fn paraphrasing_shows_first_alternative_with_counter() {
        let c = example();
        let r = render(&c, Condition::Paraphrasing, &RevealState::default()).unwrap();
        let seg = r.segment("o1").unwrap();
        assert_eq!(seg.text, "embarrassing moment");
        assert_eq!(seg.counter, Some(Counter { index: 1, total: 3 }));
        assert!(!seg.revealable);
        assert!(!r.concat().contains("downfall"));
        assert_eq!(r.segment("t1").unwrap().style, SegmentStyle::TargetHighlight);
    }

    #[test]
    fn revealing_starts_hidden_and_reveals() {
        let c = example();
        let cond = Condition::Revealing;
        let s0 = RevealState::default();
        let r0 = render(&c, cond, &s0).unwrap();
        let text = r0.concat();
        assert!(!text.contains("women") && !text.contains("downfall"));
        assert!(r0.segment("t1").unwrap().revealable);
        assert!(r0.segment("o1").unwrap().revealable);

        let s1 = reveal_target(&c, cond, &s0, "t1").unwrap();
        assert_eq!(reveal_target(&c, cond, &s1, "t1").unwrap(), s1);
        let r1 = render(&c, cond, &s1).unwrap();
        let t = r1.segment("t1").unwrap();
        assert_eq!((t.text.as_str(), t.style, t.revealable), ("women", SegmentStyle::TargetHighlight, false));
        assert_eq!(r1.segment("o1"), r0.segment("o1"));

        let s2 = reveal_original(&c, cond, &s1, "o1").unwrap();
        assert_eq!(reveal_original(&c, cond, &s2, "o1").unwrap(), s2);
        let o = render(&c, cond, &s2).unwrap().segment("o1").cloned().unwrap();
        assert_eq!(o.text, "downfall");
        assert_eq!(o.counter, None);
        assert!(!o.revealable);
    }

    #[test]
    fn reveal_errors() {
        let c = example();
        let s = RevealState::default();
        assert_eq!(
            reveal_target(&c, Condition::Revealing, &s, "o1"),
            Err(ModificationError::WrongKind { span_id: "o1".into(), expected: SpanKind::Target })
        );
        assert_eq!(
            reveal_original(&c, Condition::Revealing, &s, "nope"),
            Err(ModificationError::UnknownSpan("nope".into()))
        );
        assert!(matches!(
            reveal_target(&c, Condition::Control, &s, "t1"),
            Err(ModificationError::FeatureNotInCondition { .. })
        ));
    }

    #[test]
    fn cycling_wraps() {
        let c = example();
        let mut s = RevealState::default();
        let mut seen = vec![];
        for _ in 0..4 {
            s = cycle_alternative(&c, Condition::Paraphrasing, &s, "o1").unwrap();
            seen.push(s.alt_index["o1"]);
        }
        assert_eq!(seen, vec![1, 2, 0, 1]);
        let r = render(&c, Condition::Paraphrasing, &s).unwrap();
        assert_eq!(r.segment("o1").unwrap().counter, Some(Counter { index: 2, total: 3 }));
    }

    #[test]
    fn cycling_single_alternative_and_after_reveal() {
        let mut c = example();
        c.alternatives.insert("o1".into(), vec!["setback".into()]);
        let s = cycle_alternative(&c, Condition::Revealing, &RevealState::default(), "o1").unwrap();
        assert_eq!(s.alt_index["o1"], 0);
        let s = reveal_original(&c, Condition::Revealing, &s, "o1").unwrap();
        assert_eq!(
            cycle_alternative(&c, Condition::Revealing, &s, "o1"),
            Err(ModificationError::AlreadyRevealed("o1".into()))
        );
        assert!(cycle_alternative(&c, Condition::Anonymizing, &RevealState::default(), "o1").is_err());
    }

    #[test]
    fn invalid_states_rejected() {
        let c = example();
        let mut s = RevealState::default();
        s.alt_index.insert("o1".into(), 3);
        assert!(matches!(
            render(&c, Condition::Paraphrasing, &s),
            Err(ModificationError::AltIndexOutOfRange { index: 3, total: 3, .. })
        ));
        assert!(render(&c, Condition::Control, &s).is_err());
        let mut s = RevealState::default();
        s.revealed_targets.insert("ghost".into());
        assert_eq!(render(&c, Condition::Revealing, &s), Err(ModificationError::UnknownSpan("ghost".into())));
        assert!(render(&c, Condition::Paraphrasing, &s).is_err());
    }

    #[test]
    fn missing_alternatives_fail_closed() {
        let mut c = example();
        c.alternatives.clear();
        assert_eq!(
            render(&c, Condition::Paraphrasing, &RevealState::default()),
            Err(ModificationError::NoAlternatives("o1".into()))
        );
        assert!(render(&c, Condition::Anonymizing, &RevealState::default()).is_ok());
    }

    #[test]
    fn wire_form_is_segment_array() {
        let c = example();
        let r = render(&c, Condition::Paraphrasing, &RevealState::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.is_array());
        assert_eq!(v[0]["style"], "target_highlight");
        assert!(v[0].get("counter").is_none());
        let para = v.as_array().unwrap().iter().find(|s| s["style"] == "paraphrased").unwrap();
        assert_eq!(para["counter"]["index"], 1);
        assert_eq!(para["counter"]["total"], 3);
        let back: RenderedComment = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
