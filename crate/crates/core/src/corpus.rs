//! Annotated comment corpus: data model, JSON Lines codec, validation and the
//! `※`-marker importer.
//!
//! All offsets are counted in Unicode scalar values (`char`s), never bytes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Marker delimiting paraphrasable (offensive/keyword) segments.
pub const OFFENSIVE_MARKER: char = '※';
/// Marker delimiting target (subject/object) segments in marked text files.
pub const TARGET_MARKER: char = '§';
/// Upper bound on alternatives stored per span.
pub const MAX_ALTERNATIVES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Target,
    Offensive,
}

impl SpanKind {
    fn id_prefix(self) -> char {
        match self {
            SpanKind::Target => 't',
            SpanKind::Offensive => 'o',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Hate,
    Normal,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Hate => "hate",
            Label::Normal => "normal",
        })
    }
}

/// Half-open character range `[start, end)` inside a comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comment {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub topic: String,
    pub spans: Vec<Span>,
    pub alternatives: BTreeMap<String, Vec<String>>,
}

impl Comment {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn span(&self, id: &str) -> Option<&Span> {
        self.spans.iter().find(|s| s.id == id)
    }

    /// Text covered by `span`. Out-of-range spans yield the clipped surface.
    pub fn surface(&self, span: &Span) -> String {
        self.text
            .chars()
            .skip(span.start)
            .take(span.end.saturating_sub(span.start))
            .collect()
    }

    pub fn spans_of(&self, kind: SpanKind) -> impl Iterator<Item = &Span> {
        self.spans.iter().filter(move |s| s.kind == kind)
    }

    pub fn alternatives_for(&self, span_id: &str) -> &[String] {
        self.alternatives.get(span_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Spans ordered by start offset.
    pub fn sorted_spans(&self) -> Vec<&Span> {
        let mut spans: Vec<&Span> = self.spans.iter().collect();
        spans.sort_by_key(|s| (s.start, s.end));
        spans
    }

    /// Comment text with `replacement` substituted for `span_id`.
    pub fn with_span_replaced(&self, span_id: &str, replacement: &str) -> Option<String> {
        let span = self.span(span_id)?;
        let chars: Vec<char> = self.text.chars().collect();
        if span.end > chars.len() || span.start >= span.end {
            return None;
        }
        let mut out: String = chars[..span.start].iter().collect();
        out.push_str(replacement);
        out.extend(&chars[span.end..]);
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    EmptyCommentId,
    EmptySpanId,
    SpanOutOfBounds,
    EmptySpan,
    OverlappingSpans,
    DuplicateSpanId,
    UnknownSpanReference,
    AlternativesOnNonOffensiveSpan,
    EmptyAlternatives,
    TooManyAlternatives,
    EmptyAlternativeText,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyCommentId => "empty-comment-id",
            ViolationCode::EmptySpanId => "empty-span-id",
            ViolationCode::SpanOutOfBounds => "span-out-of-bounds",
            ViolationCode::EmptySpan => "empty-span",
            ViolationCode::OverlappingSpans => "overlapping-spans",
            ViolationCode::DuplicateSpanId => "duplicate-span-id",
            ViolationCode::UnknownSpanReference => "unknown-span-reference",
            ViolationCode::AlternativesOnNonOffensiveSpan => "alternatives-on-non-offensive-span",
            ViolationCode::EmptyAlternatives => "empty-alternatives",
            ViolationCode::TooManyAlternatives => "too-many-alternatives",
            ViolationCode::EmptyAlternativeText => "empty-alternative-text",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_id: Option<String>,
}

impl Violation {
    fn new(code: ViolationCode, span_id: Option<&str>) -> Self {
        Self { code, span_id: span_id.map(str::to_owned) }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span_id {
            Some(id) => write!(f, "{} (span {id})", self.code),
            None => write!(f, "{}", self.code),
        }
    }
}

/// Checks every comment/span invariant. An empty result means the comment is valid.
pub fn validate_comment(c: &Comment) -> Vec<Violation> {
    let mut out = Vec::new();
    if c.id.is_empty() {
        out.push(Violation::new(ViolationCode::EmptyCommentId, None));
    }
    let len = c.char_len();
    let mut seen = HashSet::new();
    for span in &c.spans {
        if span.id.is_empty() {
            out.push(Violation::new(ViolationCode::EmptySpanId, None));
        }
        if !seen.insert(span.id.as_str()) {
            out.push(Violation::new(ViolationCode::DuplicateSpanId, Some(&span.id)));
        }
        if span.start >= span.end {
            out.push(Violation::new(ViolationCode::EmptySpan, Some(&span.id)));
        } else if span.end > len {
            out.push(Violation::new(ViolationCode::SpanOutOfBounds, Some(&span.id)));
        }
    }
    let sorted = c.sorted_spans();
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end && pair[0].start < pair[0].end {
            out.push(Violation::new(ViolationCode::OverlappingSpans, Some(&pair[1].id)));
        }
    }
    for (span_id, alts) in &c.alternatives {
        match c.span(span_id) {
            None => out.push(Violation::new(ViolationCode::UnknownSpanReference, Some(span_id))),
            Some(s) if s.kind != SpanKind::Offensive => out.push(Violation::new(
                ViolationCode::AlternativesOnNonOffensiveSpan,
                Some(span_id),
            )),
            Some(_) => {}
        }
        if alts.is_empty() {
            out.push(Violation::new(ViolationCode::EmptyAlternatives, Some(span_id)));
        }
        if alts.len() > MAX_ALTERNATIVES {
            out.push(Violation::new(ViolationCode::TooManyAlternatives, Some(span_id)));
        }
        if alts.iter().any(|a| a.trim().is_empty()) {
            out.push(Violation::new(ViolationCode::EmptyAlternativeText, Some(span_id)));
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: input is not valid UTF-8")]
    Utf8 { line: usize },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: comment {comment_id}: {}", join_violations(.violations))]
    Invalid { line: usize, comment_id: String, violations: Vec<Violation> },
    #[error("line {line}: duplicate comment id {id}")]
    DuplicateCommentId { line: usize, id: String },
    #[error("line {line}: {source}")]
    Marker { line: usize, source: MarkerError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub source: String,
    pub hate: usize,
    pub normal: usize,
}

/// Validated, immutable comment collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    comments: Vec<Comment>,
    metadata: CorpusMetadata,
    index: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.comments == other.comments && self.metadata == other.metadata
    }
}

impl Corpus {
    /// Builds a corpus, rejecting it wholesale if any comment is invalid.
    /// Error line numbers are 1-based positions in `comments`.
    pub fn new(source: impl Into<String>, comments: Vec<Comment>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(comments.len());
        for (i, c) in comments.iter().enumerate() {
            let violations = validate_comment(c);
            if !violations.is_empty() {
                return Err(CorpusError::Invalid { line: i + 1, comment_id: c.id.clone(), violations });
            }
            if index.insert(c.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateCommentId { line: i + 1, id: c.id.clone() });
            }
        }
        let hate = comments.iter().filter(|c| c.label == Label::Hate).count();
        let metadata = CorpusMetadata { source: source.into(), hate, normal: comments.len() - hate };
        Ok(Self { comments, metadata, index })
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn metadata(&self) -> &CorpusMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Comment> {
        self.index.get(id).map(|&i| &self.comments[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.comments.iter().map(|c| c.id.clone()).collect()
    }

    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.comments.iter().map(|c| (c.id.clone(), c.label)).collect()
    }

    /// One JSON object per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str(&serde_json::to_string(c).expect("comment serializes"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical JSON Lines serialization, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    pub fn into_comments(self) -> Vec<Comment> {
        self.comments
    }
}

/// Parses a JSON Lines corpus. Blank lines are ignored; anything else must be
/// a complete, valid comment record or the whole file is rejected.
pub fn parse_corpus(bytes: &[u8], source: &str) -> Result<Corpus, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CorpusError::Utf8 {
        line: bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1,
    })?;
    let mut comments = Vec::new();
    let mut lines = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let c: Comment = serde_json::from_str(raw)
            .map_err(|e| CorpusError::Malformed { line, message: e.to_string() })?;
        let violations = validate_comment(&c);
        if !violations.is_empty() {
            return Err(CorpusError::Invalid { line, comment_id: c.id, violations });
        }
        if !seen.insert(c.id.clone()) {
            return Err(CorpusError::DuplicateCommentId { line, id: c.id });
        }
        comments.push(c);
        lines.push(line);
    }
    Corpus::new(source, comments).map_err(|e| remap_line(e, &lines))
}

fn remap_line(e: CorpusError, lines: &[usize]) -> CorpusError {
    let fix = |l: usize| lines.get(l - 1).copied().unwrap_or(l);
    match e {
        CorpusError::Invalid { line, comment_id, violations } => {
            CorpusError::Invalid { line: fix(line), comment_id, violations }
        }
        CorpusError::DuplicateCommentId { line, id } => CorpusError::DuplicateCommentId { line: fix(line), id },
        other => other,
    }
}

pub fn read_corpus(path: &std::path::Path) -> Result<Corpus, CorpusError> {
    let bytes = std::fs::read(path)?;
    parse_corpus(&bytes, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkerError {
    #[error("unbalanced marker {marker:?} opened at character {offset}")]
    Unbalanced { marker: char, offset: usize },
    #[error("empty marked segment at character {offset}")]
    EmptySegment { offset: usize },
    #[error("marker {inner:?} at character {offset} appears inside an open {outer:?} segment")]
    Nested { outer: char, inner: char, offset: usize },
}

/// Strips `※` pairs from `marked`, returning the clean text and one span of
/// `kind` per marked segment (offsets on the stripped text).
pub fn import_marked_text(marked: &str, kind: SpanKind) -> Result<(String, Vec<Span>), MarkerError> {
    import_marked(marked, &[(OFFENSIVE_MARKER, kind)])
}

/// Multi-marker variant: each `(marker, kind)` pair delimits its own segments.
/// Span ids are `t1, t2, …` for targets and `o1, o2, …` for offensive spans.
pub fn import_marked(marked: &str, markers: &[(char, SpanKind)]) -> Result<(String, Vec<Span>), MarkerError> {
    let mut clean = String::with_capacity(marked.len());
    let mut spans = Vec::new();
    let mut counters: HashMap<SpanKind, usize> = HashMap::new();
    let mut open: Option<(char, SpanKind, usize)> = None;
    let mut pos = 0usize;
    for ch in marked.chars() {
        let Some(&(marker, kind)) = markers.iter().find(|(m, _)| *m == ch) else {
            clean.push(ch);
            pos += 1;
            continue;
        };
        match open {
            None => open = Some((marker, kind, pos)),
            Some((m, k, start)) if m == marker => {
                if start == pos {
                    return Err(MarkerError::EmptySegment { offset: start });
                }
                let n = counters.entry(k).or_insert(0);
                *n += 1;
                spans.push(Span { id: format!("{}{}", k.id_prefix(), n), start, end: pos, kind: k });
                open = None;
            }
            Some((m, _, _)) => return Err(MarkerError::Nested { outer: m, inner: marker, offset: pos }),
        }
    }
    if let Some((marker, _, offset)) = open {
        return Err(MarkerError::Unbalanced { marker, offset });
    }
    Ok((clean, spans))
}

/// Inverse of [`import_marked`]: wraps each span's surface in the marker
/// returned by `marker_for`. Spans for which it returns `None` are left bare.
pub fn insert_markers<'a>(
    text: &str,
    spans: impl IntoIterator<Item = &'a Span>,
    marker_for: impl Fn(&Span) -> Option<char>,
) -> String {
    let mut opens: BTreeMap<usize, char> = BTreeMap::new();
    let mut closes: BTreeMap<usize, char> = BTreeMap::new();
    for s in spans {
        if let Some(m) = marker_for(s) {
            opens.insert(s.start, m);
            closes.insert(s.end, m);
        }
    }
    let mut out = String::with_capacity(text.len() + 8);
    let n = text.chars().count();
    for (i, ch) in text.chars().enumerate() {
        if let Some(m) = closes.get(&i) {
            out.push(*m);
        }
        if let Some(m) = opens.get(&i) {
            out.push(*m);
        }
        out.push(ch);
    }
    if let Some(m) = closes.get(&n) {
        out.push(*m);
    }
    out
}

/// Reads the tab-separated marked format: `id<TAB>label<TAB>topic<TAB>text`,
/// where `text` carries `§target§` and `※offensive※` segments. Blank lines and
/// lines starting with `#` are skipped.
pub fn import_marked_file(text: &str, source: &str) -> Result<Corpus, CorpusError> {
    let mut comments = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(CorpusError::Malformed { line, message: "expected 4 tab-separated fields".into() });
        }
        let label = match fields[1] {
            "hate" => Label::Hate,
            "normal" => Label::Normal,
            other => {
                return Err(CorpusError::Malformed { line, message: format!("unknown label {other:?}") })
            }
        };
        let (clean, spans) = import_marked(
            fields[3],
            &[(TARGET_MARKER, SpanKind::Target), (OFFENSIVE_MARKER, SpanKind::Offensive)],
        )
        .map_err(|source| CorpusError::Marker { line, source })?;
        comments.push(Comment {
            id: fields[0].to_owned(),
            text: clean,
            label,
            topic: fields[2].to_owned(),
            spans,
            alternatives: BTreeMap::new(),
        });
        lines.push(line);
    }
    Corpus::new(source, comments).map_err(|e| remap_line(e, &lines))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comment(text: &str, spans: Vec<Span>) -> Comment {
        Comment {
            id: "c1".into(),
            text: text.into(),
            label: Label::Hate,
            topic: "gender".into(),
            spans,
            alternatives: BTreeMap::new(),
        }
    }

    fn span(id: &str, start: usize, end: usize, kind: SpanKind) -> Span {
        Span { id: id.into(), start, end, kind }
    }

    fn line(id: &str, label: &str) -> String {
        format!(
            r#"{{"id":"{id}","text":"women ruin everything","label":"{label}","topic":"gender","spans":[{{"id":"t1","start":0,"end":5,"kind":"target"}},{{"id":"o1","start":6,"end":10,"kind":"offensive"}}],"alternatives":{{"o1":["spoil"]}}}}"#
        )
    }

    #[test]
    fn parses_two_valid_records() {
        let input = format!("{}\n{}\n", line("a", "hate"), line("b", "normal"));
        let corpus = parse_corpus(input.as_bytes(), "test").unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.metadata().hate, 1);
        assert_eq!(corpus.metadata().normal, 1);
    }

    #[test]
    fn span_past_end_names_line_and_span() {
        let bad = r#"{"id":"x","text":"abc","label":"hate","topic":"job","spans":[{"id":"o9","start":1,"end":7,"kind":"offensive"}],"alternatives":{}}"#;
        let input = format!("{}\n{}\n", line("a", "hate"), bad);
        match parse_corpus(input.as_bytes(), "t").unwrap_err() {
            CorpusError::Invalid { line, violations, .. } => {
                assert_eq!(line, 2);
                assert_eq!(violations[0].code, ViolationCode::SpanOutOfBounds);
                assert_eq!(violations[0].span_id.as_deref(), Some("o9"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_duplicates() {
        let extra = line("a", "hate").replace(r#""topic""#, r#""extra":1,"topic""#);
        assert!(matches!(parse_corpus(extra.as_bytes(), "t"), Err(CorpusError::Malformed { line: 1, .. })));
        let dup = format!("{}\n\n{}\n", line("a", "hate"), line("a", "hate"));
        assert!(matches!(parse_corpus(dup.as_bytes(), "t"), Err(CorpusError::DuplicateCommentId { line: 3, .. })));
    }

    #[test]
    fn reports_invalid_utf8_line() {
        let mut bytes = format!("{}\n", line("a", "hate")).into_bytes();
        bytes.extend_from_slice(&[0xff, 0xfe]);
        assert!(matches!(parse_corpus(&bytes, "t"), Err(CorpusError::Utf8 { line: 2 })));
    }

    #[test]
    fn overlapping_and_duplicate_spans() {
        let c = comment(
            "abcdef",
            vec![span("a", 0, 3, SpanKind::Target), span("a", 2, 4, SpanKind::Offensive)],
        );
        let codes: Vec<_> = validate_comment(&c).into_iter().map(|v| v.code).collect();
        assert!(codes.contains(&ViolationCode::DuplicateSpanId));
        assert!(codes.contains(&ViolationCode::OverlappingSpans));
    }

    #[test]
    fn well_formed_comment_has_no_violations() {
        let mut c = comment("women ruin it", vec![span("t1", 0, 5, SpanKind::Target), span("o1", 6, 10, SpanKind::Offensive)]);
        c.alternatives.insert("o1".into(), vec!["spoil".into()]);
        assert!(validate_comment(&c).is_empty());
    }

    #[test]
    fn alternatives_rules() {
        let mut c = comment("women ruin it", vec![span("t1", 0, 5, SpanKind::Target), span("o1", 6, 10, SpanKind::Offensive)]);
        c.alternatives.insert("zz".into(), vec!["x".into()]);
        assert_eq!(
            validate_comment(&c),
            vec![Violation::new(ViolationCode::UnknownSpanReference, Some("zz"))]
        );
        c.alternatives.clear();
        c.alternatives.insert("o1".into(), vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        assert_eq!(validate_comment(&c)[0].code, ViolationCode::TooManyAlternatives);
        c.alternatives.clear();
        c.alternatives.insert("t1".into(), vec!["a".into()]);
        assert_eq!(validate_comment(&c)[0].code, ViolationCode::AlternativesOnNonOffensiveSpan);
        c.alternatives.clear();
        c.alternatives.insert("o1".into(), vec![]);
        assert_eq!(validate_comment(&c)[0].code, ViolationCode::EmptyAlternatives);
    }

    #[test]
    fn marker_import_single_segment() {
        let (text, spans) = import_marked_text("A ※B※ C", SpanKind::Offensive).unwrap();
        assert_eq!(text, "A B C");
        assert_eq!(spans, vec![span("o1", 2, 3, SpanKind::Offensive)]);
    }

    #[test]
    fn marker_import_identity_and_adjacent() {
        assert_eq!(import_marked_text("plain", SpanKind::Offensive).unwrap(), ("plain".into(), vec![]));
        let (text, spans) = import_marked_text("※X※※Y※", SpanKind::Offensive).unwrap();
        assert_eq!(text, "XY");
        assert_eq!((spans[0].start, spans[0].end), (0, 1));
        assert_eq!((spans[1].start, spans[1].end), (1, 2));
    }

    #[test]
    fn marker_import_errors() {
        assert_eq!(
            import_marked_text("a ※b", SpanKind::Offensive),
            Err(MarkerError::Unbalanced { marker: '※', offset: 2 })
        );
        assert_eq!(import_marked_text("a ※※ b", SpanKind::Offensive), Err(MarkerError::EmptySegment { offset: 2 }));
        assert!(matches!(
            import_marked("§a ※b※§", &[(TARGET_MARKER, SpanKind::Target), (OFFENSIVE_MARKER, SpanKind::Offensive)]),
            Err(MarkerError::Nested { .. })
        ));
    }

    #[test]
    fn multibyte_offsets_are_scalar_counts() {
        let (text, spans) = import_marked_text("여자들은 ※다 망해야※ 해", SpanKind::Offensive).unwrap();
        let c = comment(&text, spans);
        assert_eq!(c.surface(&c.spans[0]), "다 망해야");
        assert_eq!(c.spans[0].start, 5);
    }

    #[test]
    fn marked_file_import() {
        let src = "# header\nc1\thate\tgender\t§women§ should ※fail※\n\nc2\tnormal\tjob\t§workers§ ※rest※ today\n";
        let corpus = import_marked_file(src, "f").unwrap();
        assert_eq!(corpus.len(), 2);
        let c1 = corpus.get("c1").unwrap();
        assert_eq!(c1.text, "women should fail");
        assert_eq!(c1.spans.len(), 2);
        assert_eq!(c1.surface(c1.span("t1").unwrap()), "women");
        assert!(matches!(import_marked_file("x\thate\tjob\t※a", "f"), Err(CorpusError::Marker { line: 1, .. })));
    }
}
