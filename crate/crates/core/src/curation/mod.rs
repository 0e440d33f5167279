//! Offline paraphrase curation: prompt construction, output parsing,
//! embedding-similarity filtering, top-k selection and the batch pipeline.
//! Also hosts Fleiss' kappa for label-agreement checks.

mod kappa;
mod pipeline;
mod prompt;
mod provider;
mod similarity;

use thiserror::Error;

pub use kappa::fleiss_kappa;
pub use pipeline::{
    extract_replacement, run_pipeline, AuditRecord, Failure, FlaggedSpan, PipelineOptions, PipelineOutput,
    Rejection, Stage,
};
pub use prompt::{
    build_prompt, build_span_prompt, parse_generation, Generation, PromptKind, EXPECTED_CANDIDATES,
    HATE_INSTRUCTION, NORMAL_INSTRUCTION, OUTPUT_SEPARATOR,
};
pub use provider::{
    EmbeddingFixture, EmbeddingProvider, Endpoint, GenerationFixture, GenerationProvider, GenerationRequest,
    MockProvider, ProviderConfig, ProviderError, ProviderMode, RetryPolicy,
};
pub use similarity::{cosine_similarity, filter_candidates, filter_scored, select_alternatives, Candidate, CandidateSet};

/// Default retention threshold; similarity must be strictly greater.
pub const DEFAULT_THRESHOLD: f64 = 0.7;
/// Default number of alternatives kept per span.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurationError {
    #[error("comment {0} has no paraphrasable span")]
    NoParaphrasableSpan(String),
    #[error("span {span_id} is not a paraphrasable span of comment {comment_id}")]
    NotParaphrasable { comment_id: String, span_id: String },
    #[error("generation output contains no candidates")]
    EmptyOutput,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("zero or empty vector")]
    ZeroVector,
    #[error("provider failure{}: {source}", .index.map(|i| format!(" on candidate {i}")).unwrap_or_default())]
    Provider { index: Option<usize>, source: ProviderError },
    #[error("rating table: {0}")]
    InvalidRatings(String),
    #[error("kappa undefined: all ratings fall in one category")]
    KappaUndefined,
    #[error("invalid provider configuration: {0}")]
    Config(String),
    #[error("fixture file {path}: {message}")]
    Fixture { path: String, message: String },
}
