//! Core of a human-in-the-loop hate-speech moderation study platform.
//!
//! - [`corpus`]: annotated comments, JSON Lines codec, marker import
//! - [`modification`]: condition-specific rendering and reveal/cycle state
//! - [`curation`]: paraphrase prompt, candidate filtering, agreement statistics
//! - [`experiment`]: participant balancing and the event-sourced session
//! - [`measures`]: SPANE/MFSI scoring and moderation metrics
//! - [`stats`]: the statistics kernel
//! - [`report`]: study report from exported session archives
//!
//! Numeric kernels are generic over [`Scalar`] (`f32`, `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod corpus;
pub mod curation;
pub mod experiment;
pub mod measures;
pub mod modification;
pub mod report;
pub mod scalar;
pub mod stats;
pub mod synthetic;

pub use scalar::Scalar;

/// Comments moderated per session.
pub const TASK_COUNT: usize = 100;

pub type TestResult64 = stats::TestResult<f64>;
pub type Descriptive64 = stats::Descriptive<f64>;
