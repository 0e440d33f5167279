use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prompt::{build_span_prompt, parse_generation, PromptKind};
use super::provider::{EmbeddingProvider, GenerationProvider, GenerationRequest, ProviderError, RetryPolicy};
use super::similarity::{filter_candidates, select_alternatives, CandidateSet};
use super::{CurationError, DEFAULT_K, DEFAULT_THRESHOLD};
use crate::corpus::{Comment, Corpus, SpanKind, MAX_ALTERNATIVES, OFFENSIVE_MARKER};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub threshold: f64,
    pub k: usize,
    pub retry: RetryPolicy,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, k: DEFAULT_K, retry: RetryPolicy::default() }
    }
}

/// Why a candidate never reached similarity scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// Text outside the marked span was altered, so no single replacement exists.
    Unaligned,
    EmptyReplacement,
    /// Replacement is identical to the original span.
    Unchanged,
    /// Replacement still contains the original span text.
    LeaksOriginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Prompt,
    Generation,
    Parse,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub comment_id: String,
    pub span_id: String,
    pub candidate_index: usize,
    pub prompt: String,
    pub raw_output: String,
    pub candidate_text: String,
    pub replacement: Option<String>,
    pub similarity: Option<f64>,
    pub threshold: f64,
    pub retained: bool,
    pub selected: bool,
    pub rejection: Option<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub comment_id: String,
    pub span_id: String,
    pub stage: Stage,
    pub attempts: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedSpan {
    pub comment_id: String,
    pub span_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountWarning {
    pub comment_id: String,
    pub span_id: String,
    pub candidates: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub corpus: Corpus,
    pub audit: Vec<AuditRecord>,
    pub failures: Vec<Failure>,
    pub flagged: Vec<FlaggedSpan>,
    pub warnings: Vec<CountWarning>,
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

impl PipelineOutput {
    pub fn audit_jsonl(&self) -> String {
        jsonl(&self.audit)
    }

    pub fn failures_jsonl(&self) -> String {
        jsonl(&self.failures)
    }

    pub fn flagged_jsonl(&self) -> String {
        jsonl(&self.flagged)
    }
}

/// Recovers the text a candidate put in place of span `[start, end)`.
/// `※` markers are ignored; everything before and after the span must be
/// unchanged.
pub fn extract_replacement(c: &Comment, span_id: &str, candidate: &str) -> Result<(String, String), Rejection> {
    let span = c.span(span_id).ok_or(Rejection::Unaligned)?;
    let chars: Vec<char> = c.text.chars().collect();
    let prefix: String = chars[..span.start].iter().collect();
    let suffix: String = chars[span.end..].iter().collect();
    let stripped: String = candidate.chars().filter(|&ch| ch != OFFENSIVE_MARKER).collect();
    if stripped.len() < prefix.len() + suffix.len() || !stripped.starts_with(&prefix) || !stripped.ends_with(&suffix) {
        return Err(Rejection::Unaligned);
    }
    let middle = &stripped[prefix.len()..stripped.len() - suffix.len()];
    if middle.trim().is_empty() {
        return Err(Rejection::EmptyReplacement);
    }
    let surface = c.surface(span);
    if middle == surface {
        return Err(Rejection::Unchanged);
    }
    if middle.contains(&surface) {
        return Err(Rejection::LeaksOriginal);
    }
    Ok((stripped.clone(), middle.to_string()))
}

struct Retrying<'a, P: ?Sized> {
    inner: &'a P,
    policy: RetryPolicy,
    attempts: std::sync::atomic::AtomicU32,
}

impl<'a, P: EmbeddingProvider + ?Sized> EmbeddingProvider for Retrying<'a, P> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let (r, n) = self.policy.run(|| self.inner.embed(text));
        self.attempts.store(n, std::sync::atomic::Ordering::Relaxed);
        r
    }
}

struct Item<'a> {
    comment: &'a Comment,
    span_id: String,
}

enum Outcome {
    Done { audit: Vec<AuditRecord>, selected: Vec<String>, warning: Option<usize>, flagged: Option<String> },
    Failed(Failure),
}

fn process(
    item: &Item<'_>,
    gen: &(impl GenerationProvider + ?Sized),
    emb: &(impl EmbeddingProvider + ?Sized),
    opts: &PipelineOptions,
) -> Outcome {
    let c = item.comment;
    let fail = |stage, attempts, message: String| {
        Outcome::Failed(Failure { comment_id: c.id.clone(), span_id: item.span_id.clone(), stage, attempts, message })
    };
    let prompt = match build_span_prompt(c, &item.span_id, PromptKind::from(c.label)) {
        Ok(p) => p,
        Err(e) => return fail(Stage::Prompt, 0, e.to_string()),
    };
    let req = GenerationRequest { comment_id: c.id.clone(), span_id: item.span_id.clone(), prompt: prompt.clone() };
    let (raw, attempts) = opts.retry.run(|| gen.generate(&req));
    let raw = match raw {
        Ok(r) => r,
        Err(e) => return fail(Stage::Generation, attempts, e.message),
    };
    let generation = match parse_generation(&raw) {
        Ok(g) => g,
        Err(e) => return fail(Stage::Parse, attempts, e.to_string()),
    };

    let mut aligned: Vec<(usize, String, String)> = Vec::new();
    let mut audit: Vec<AuditRecord> = Vec::new();
    let record = |index: usize, text: &str| AuditRecord {
        comment_id: c.id.clone(),
        span_id: item.span_id.clone(),
        candidate_index: index,
        prompt: prompt.clone(),
        raw_output: raw.clone(),
        candidate_text: text.to_string(),
        replacement: None,
        similarity: None,
        threshold: opts.threshold,
        retained: false,
        selected: false,
        rejection: None,
    };
    for (i, cand) in generation.candidates.iter().enumerate() {
        match extract_replacement(c, &item.span_id, cand) {
            Ok((full, rep)) => aligned.push((i, full, rep)),
            Err(r) => audit.push(AuditRecord { rejection: Some(r), ..record(i, cand) }),
        }
    }

    let texts: Vec<String> = aligned.iter().map(|(_, t, _)| t.clone()).collect();
    let retrying = Retrying { inner: emb, policy: opts.retry, attempts: 0.into() };
    let mut cs: CandidateSet =
        match filter_candidates(&c.id, &item.span_id, &c.text, &texts, opts.threshold, &retrying) {
            Ok(cs) => cs,
            Err(e) => {
                let n = retrying.attempts.load(std::sync::atomic::Ordering::Relaxed);
                return fail(Stage::Embedding, n, e.to_string());
            }
        };
    for (cand, (_, _, rep)) in cs.candidates.iter_mut().zip(&aligned) {
        cand.replacement = Some(rep.clone());
    }
    let selected = select_alternatives(&cs, opts.k);
    for (cand, (i, _, rep)) in cs.candidates.iter().zip(&aligned) {
        audit.push(AuditRecord {
            replacement: Some(rep.clone()),
            similarity: Some(cand.similarity),
            retained: cand.retained,
            selected: false,
            ..record(*i, &generation.candidates[*i])
        });
    }
    // mark the first occurrence of each selected replacement
    for s in &selected {
        if let Some(r) = audit.iter_mut().filter(|r| r.retained && r.replacement.as_ref() == Some(s)).min_by(|a, b| {
            b.similarity.unwrap_or(0.0).total_cmp(&a.similarity.unwrap_or(0.0)).then(a.candidate_index.cmp(&b.candidate_index))
        }) {
            r.selected = true;
        }
    }
    audit.sort_by_key(|r| r.candidate_index);
    let flagged = selected.is_empty().then(|| {
        if aligned.is_empty() {
            "no candidate preserved the text outside the span".to_string()
        } else {
            format!("no candidate above similarity {}", opts.threshold)
        }
    });
    Outcome::Done { audit, selected, warning: generation.count_warning, flagged }
}

/// Generates, filters and selects alternatives for every offensive span.
///
/// Work items run in parallel but results are merged in corpus order, so the
/// output depends only on the corpus and provider responses. A failing item is
/// recorded and leaves that span's existing alternatives untouched.
pub fn run_pipeline(
    corpus: &Corpus,
    gen: &(impl GenerationProvider + ?Sized),
    emb: &(impl EmbeddingProvider + ?Sized),
    opts: &PipelineOptions,
) -> Result<PipelineOutput, CurationError> {
    if opts.k == 0 || opts.k > MAX_ALTERNATIVES {
        return Err(CurationError::Config(format!("k must be in 1..={MAX_ALTERNATIVES}, got {}", opts.k)));
    }
    if !opts.threshold.is_finite() {
        return Err(CurationError::Config("threshold must be finite".into()));
    }
    let items: Vec<Item<'_>> = corpus
        .comments()
        .iter()
        .flat_map(|c| {
            c.sorted_spans()
                .into_iter()
                .filter(|s| s.kind == SpanKind::Offensive)
                .map(move |s| Item { comment: c, span_id: s.id.clone() })
        })
        .collect();
    let outcomes: Vec<Outcome> = items.par_iter().map(|it| process(it, gen, emb, opts)).collect();

    let mut comments: Vec<Comment> = corpus.comments().to_vec();
    let index: std::collections::HashMap<&str, usize> =
        corpus.comments().iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
    let mut out = PipelineOutput {
        corpus: corpus.clone(),
        audit: Vec::new(),
        failures: Vec::new(),
        flagged: Vec::new(),
        warnings: Vec::new(),
    };
    for (item, outcome) in items.iter().zip(outcomes) {
        let (cid, sid) = (&item.comment.id, &item.span_id);
        match outcome {
            Outcome::Failed(f) => out.failures.push(f),
            Outcome::Done { audit, selected, warning, flagged } => {
                out.audit.extend(audit);
                if let Some(n) = warning {
                    out.warnings.push(CountWarning { comment_id: cid.clone(), span_id: sid.clone(), candidates: n });
                }
                if let Some(reason) = flagged {
                    out.flagged.push(FlaggedSpan { comment_id: cid.clone(), span_id: sid.clone(), reason });
                } else {
                    comments[index[cid.as_str()]].alternatives.insert(sid.clone(), selected);
                }
            }
        }
    }
    out.corpus = Corpus::new(corpus.metadata().source.clone(), comments)
        .map_err(|e| CurationError::Config(format!("augmented corpus failed validation: {e}")))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Span};
    use crate::curation::{EmbeddingFixture, GenerationFixture, MockProvider};
    use std::collections::BTreeMap;

    fn comment() -> Comment {
        Comment {
            id: "c1".into(),
            text: "women bring the downfall of the nation".into(),
            label: Label::Hate,
            topic: "gender".into(),
            spans: vec![
                Span { id: "t1".into(), start: 0, end: 5, kind: SpanKind::Target },
                Span { id: "o1".into(), start: 16, end: 24, kind: SpanKind::Offensive },
            ],
            alternatives: BTreeMap::new(),
        }
    }

    #[test]
    fn extraction() {
        let c = comment();
        let ok = extract_replacement(&c, "o1", "women bring the ※embarrassing moment※ of the nation").unwrap();
        assert_eq!(ok.1, "embarrassing moment");
        assert_eq!(ok.0, "women bring the embarrassing moment of the nation");
        assert_eq!(extract_replacement(&c, "o1", "women cause the decline of the nation"), Err(Rejection::Unaligned));
        assert_eq!(extract_replacement(&c, "o1", "women bring the downfall of the nation"), Err(Rejection::Unchanged));
        assert_eq!(extract_replacement(&c, "o1", "women bring the big downfall of the nation"), Err(Rejection::LeaksOriginal));
        assert_eq!(extract_replacement(&c, "o1", "women bring the  of the nation"), Err(Rejection::EmptyReplacement));
    }

    #[test]
    fn downfall_gains_embarrassing_moment() {
        let c = comment();
        let corpus = Corpus::new("t", vec![c.clone()]).unwrap();
        let cand = "women bring the embarrassing moment of the nation";
        let drift = "men bring the embarrassing moment of the nation";
        let low = "women bring the weather of the nation";
        let gen = MockProvider::new(
            vec![GenerationFixture {
                comment_id: "c1".into(),
                span_id: "o1".into(),
                prompt: Some(build_span_prompt(&c, "o1", PromptKind::Hate).unwrap()),
                output: format!("{cand}${drift}${low}"),
            }],
            vec![
                EmbeddingFixture { text: c.text.clone(), vector: vec![1.0, 0.0] },
                EmbeddingFixture { text: cand.into(), vector: vec![0.9, 0.1] },
                EmbeddingFixture { text: low.into(), vector: vec![0.0, 1.0] },
            ],
        );
        let opts = PipelineOptions { retry: RetryPolicy::no_delay(), ..Default::default() };
        let out = run_pipeline(&corpus, &gen, &gen, &opts).unwrap();
        assert_eq!(out.corpus.get("c1").unwrap().alternatives_for("o1"), ["embarrassing moment".to_string()]);
        assert_eq!(out.audit.len(), 3);
        assert_eq!(out.audit[1].rejection, Some(Rejection::Unaligned));
        assert!(out.audit[0].selected && !out.audit[2].retained);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.failures.is_empty() && out.flagged.is_empty());
    }

    #[test]
    fn missing_fixture_is_recorded_failure() {
        let corpus = Corpus::new("t", vec![comment()]).unwrap();
        let empty = MockProvider::default();
        let opts = PipelineOptions { retry: RetryPolicy::no_delay(), ..Default::default() };
        let out = run_pipeline(&corpus, &empty, &empty, &opts).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].stage, Stage::Generation);
        assert_eq!(out.corpus, corpus);
    }
}
