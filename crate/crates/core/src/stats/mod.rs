//! Statistics kernel: descriptives, normality, omnibus and pairwise tests,
//! multiple-comparison correction.
//!
//! Statistics are computed in the caller's scalar type; tail probabilities of
//! the reference distributions are evaluated in `f64`.

mod dist;
mod parametric;
mod rank;
mod shapiro;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{mean, Scalar};

pub use parametric::{one_way_anova, t_test_two_tailed};
pub use rank::{kruskal_wallis, mann_whitney_u, rankdata, wilcoxon_signed_rank, Ranks};
pub use shapiro::shapiro_wilk;

/// `n1 * n2` at or below which Mann-Whitney uses the exact null distribution.
pub const MANN_WHITNEY_EXACT_MAX_PRODUCT: usize = 400;
/// Effective sample size at or below which Wilcoxon uses the exact distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapiroWilk,
    Anova,
    KruskalWallis,
    TTest,
    MannWhitney,
    WilcoxonSignedRank,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ShapiroWilk => "shapiro_wilk",
            Method::Anova => "anova",
            Method::KruskalWallis => "kruskal_wallis",
            Method::TTest => "t_test",
            Method::MannWhitney => "mann_whitney",
            Method::WilcoxonSignedRank => "wilcoxon_signed_rank",
        }
    }
}

/// Exact two-sided p-value as a rational: `min(1, 2 * tail_count / total)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactTail {
    pub tail_count: u128,
    pub total: u128,
}

impl ExactTail {
    pub fn two_sided_p(self) -> f64 {
        ((2 * self.tail_count) as f64 / self.total as f64).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub method: Method,
    pub statistic: T,
    pub p_value: T,
    /// Sample size per group (one entry for one-sample tests).
    pub ns: Vec<usize>,
    /// Degrees of freedom where the reference distribution has them.
    pub df: Vec<T>,
    /// Present when the p-value came from full enumeration.
    pub exact: Option<ExactTail>,
}

impl<T: Scalar> TestResult<T> {
    fn new(method: Method, statistic: T, p: f64, ns: Vec<usize>) -> Self {
        Self { method, statistic, p_value: T::lit(p.clamp(0.0, 1.0)), ns, df: Vec::new(), exact: None }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("at most {max} observations supported, got {got}")]
    TooManyObservations { max: usize, got: usize },
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("all values are tied")]
    AllTied,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("p-value {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
}

pub(crate) fn check_finite<T: Scalar>(xs: &[T]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive<T> {
    pub n: usize,
    pub mean: T,
    /// Sample standard deviation (n − 1 denominator); `None` when n = 1.
    pub std: Option<T>,
    pub min: T,
    pub max: T,
}

pub fn descriptive<T: Scalar>(values: &[T]) -> Result<Descriptive<T>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(values)?;
    let m = mean(values);
    let std = (values.len() >= 2).then(|| {
        let ss: T = values.iter().map(|&x| (x - m) * (x - m)).sum();
        (ss / T::from_usize_lossy(values.len() - 1)).sqrt()
    });
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(Descriptive { n: values.len(), mean: m, std, min, max })
}

/// `p'_i = min(1, m * p_i)` with `m` the number of p-values.
pub fn bonferroni<T: Scalar>(p_values: &[T]) -> Result<Vec<T>, StatsError> {
    let m = T::from_usize_lossy(p_values.len());
    p_values
        .iter()
        .map(|&p| {
            if !(p >= T::zero() && p <= T::one()) {
                Err(StatsError::ProbabilityOutOfRange(p.as_f64()))
            } else {
                Ok((p * m).min(T::one()))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptive_pair() {
        let d = descriptive(&[2.0, 4.0]).unwrap();
        assert_eq!((d.mean, d.min, d.max), (3.0, 2.0, 4.0));
        assert!((d.std.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn descriptive_edges() {
        assert_eq!(descriptive(&[5.0f32]).unwrap().std, None);
        assert_eq!(descriptive(&[7.0, 7.0, 7.0]).unwrap().std, Some(0.0));
        assert_eq!(descriptive::<f64>(&[]), Err(StatsError::Empty));
        assert_eq!(descriptive(&[1.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn bonferroni_cases() {
        let out = bonferroni(&[0.01f64, 0.04]).unwrap();
        assert!((out[0] - 0.02).abs() < 1e-15 && (out[1] - 0.08).abs() < 1e-15);
        assert_eq!(bonferroni(&[0.9]).unwrap(), vec![0.9]);
        let out = bonferroni(&[0.3f64, 0.4, 0.5]).unwrap();
        assert!((out[0] - 0.9).abs() < 1e-12);
        assert_eq!(&out[1..], &[1.0, 1.0]);
        assert!(matches!(bonferroni(&[1.2]), Err(StatsError::ProbabilityOutOfRange(_))));
        assert!(bonferroni(&[f64::NAN]).is_err());
    }
}
