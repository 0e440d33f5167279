use serde::{Deserialize, Serialize};

use super::provider::EmbeddingProvider;
use super::CurationError;
use crate::scalar::Scalar;

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]` against rounding.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T, CurationError> {
    if a.len() != b.len() {
        return Err(CurationError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if a.is_empty() || na == T::zero() || nb == T::zero() {
        return Err(CurationError::ZeroVector);
    }
    let s = dot / (na.sqrt() * nb.sqrt());
    Ok(s.max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Full paraphrased comment.
    pub text: String,
    /// Text standing in for the span inside `text`, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<String>,
    pub similarity: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub comment_id: String,
    pub span_id: String,
    pub threshold: f64,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn retained(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.retained)
    }
}

/// Scores already-computed similarities against `threshold` (strictly greater
/// is retained).
pub fn filter_scored(scored: impl IntoIterator<Item = (String, f64)>, threshold: f64) -> Vec<Candidate> {
    scored
        .into_iter()
        .map(|(text, similarity)| Candidate { text, replacement: None, similarity, retained: similarity > threshold })
        .collect()
}

/// Embeds the original and every candidate and keeps those whose cosine
/// similarity to the original exceeds `threshold`. Every candidate stays in
/// the output with its score.
pub fn filter_candidates(
    comment_id: &str,
    span_id: &str,
    original_text: &str,
    candidates: &[String],
    threshold: f64,
    embedder: &dyn EmbeddingProvider,
) -> Result<CandidateSet, CurationError> {
    let original = embedder.embed(original_text).map_err(|source| CurationError::Provider { index: None, source })?;
    let mut scored = Vec::with_capacity(candidates.len());
    for (i, text) in candidates.iter().enumerate() {
        let v = embedder.embed(text).map_err(|source| CurationError::Provider { index: Some(i), source })?;
        scored.push((text.clone(), cosine_similarity(&original, &v)?));
    }
    Ok(CandidateSet {
        comment_id: comment_id.to_string(),
        span_id: span_id.to_string(),
        threshold,
        candidates: filter_scored(scored, threshold),
    })
}

/// Retained candidates by descending similarity (stable on ties), exact
/// duplicates removed, first `k` kept. Returns the span replacement when
/// known, the full candidate text otherwise.
pub fn select_alternatives(cs: &CandidateSet, k: usize) -> Vec<String> {
    let mut kept: Vec<&Candidate> = cs.retained().collect();
    kept.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
    let mut out: Vec<String> = Vec::new();
    for c in kept {
        let t = c.replacement.as_ref().unwrap_or(&c.text);
        if !out.contains(t) {
            out.push(t.clone());
        }
        if out.len() == k {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(scores: &[(&str, f64)]) -> CandidateSet {
        CandidateSet {
            comment_id: "c".into(),
            span_id: "o1".into(),
            threshold: 0.7,
            candidates: filter_scored(scores.iter().map(|(t, s)| (t.to_string(), *s)), 0.7),
        }
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s: f64 = cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        let v = [0.3, -2.0, 5.5];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0f64).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0f32], &[1.0, 2.0]), Err(CurationError::DimensionMismatch(1, 2)));
        assert_eq!(cosine_similarity(&[0.0f64, 0.0], &[1.0, 2.0]), Err(CurationError::ZeroVector));
        assert_eq!(cosine_similarity::<f64>(&[], &[]), Err(CurationError::ZeroVector));
    }

    #[test]
    fn boundary_vectors_are_exactly_point_seven() {
        let s: f64 = cosine_similarity(&[1.0, 0.0, 0.0, 0.0], &[7.0, 7.0, 1.0, 1.0]).unwrap();
        assert_eq!(s, 0.7);
    }

    #[test]
    fn strict_threshold() {
        let cs = set(&[("a", 0.95), ("b", 0.71), ("c", 0.70), ("d", 0.40)]);
        let kept: Vec<&str> = cs.retained().map(|c| c.text.as_str()).collect();
        assert_eq!(kept, vec!["a", "b"]);
        assert_eq!(cs.candidates.len(), 4);
    }

    #[test]
    fn selection_order_ties_and_dedup() {
        let cs = set(&[("a", 0.8), ("b", 0.9), ("c", 0.75), ("d", 0.99), ("e", 0.85)]);
        assert_eq!(select_alternatives(&cs, 3), vec!["d", "b", "e"]);
        let tie = set(&[("x", 0.8), ("y", 0.8), ("z", 0.8)]);
        assert_eq!(select_alternatives(&tie, 2), vec!["x", "y"]);
        let dup = set(&[("best", 0.95), ("best", 0.95), ("next", 0.9), ("third", 0.8)]);
        assert_eq!(select_alternatives(&dup, 3), vec!["best", "next", "third"]);
        assert_eq!(select_alternatives(&set(&[("a", 0.9), ("b", 0.72)]), 3).len(), 2);
        assert!(select_alternatives(&set(&[("a", 0.1)]), 3).is_empty());
    }
}
