use super::dist::{f_sf, t_two_sided};
use super::{check_finite, Method, StatsError, TestResult};
use crate::scalar::{mean, Scalar};

fn sum_sq_dev<T: Scalar>(xs: &[T], m: T) -> T {
    xs.iter().map(|&x| (x - m) * (x - m)).sum()
}

/// One-way ANOVA, `F = MS_between / MS_within` on `(k - 1, N - k)` df.
pub fn one_way_anova<T: Scalar>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: k });
    }
    for g in groups {
        if g.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: g.len() });
        }
        check_finite(g)?;
    }
    let all: Vec<T> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n_total = all.len();
    let grand = mean(&all);
    let mut ss_between = T::zero();
    let mut ss_within = T::zero();
    for g in groups {
        let m = mean(g);
        ss_between += T::from_usize_lossy(g.len()) * (m - grand) * (m - grand);
        ss_within += sum_sq_dev(g, m);
    }
    let df_between = T::from_usize_lossy(k - 1);
    let df_within = T::from_usize_lossy(n_total - k);
    let (f, p) = if ss_within == T::zero() {
        if ss_between == T::zero() {
            return Err(StatsError::ZeroVariance);
        }
        (T::infinity(), 0.0)
    } else {
        let f = (ss_between / df_between) / (ss_within / df_within);
        (f, f_sf(f.as_f64(), (k - 1) as f64, (n_total - k) as f64))
    };
    let mut r = TestResult::new(Method::Anova, f, p, groups.iter().map(|g| g.len()).collect());
    r.df = vec![df_between, df_within];
    Ok(r)
}

/// Welch's unequal-variance two-sample t-test, two-tailed. `t` is positive
/// when `mean(a) > mean(b)`.
pub fn t_test_two_tailed<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult<T>, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let (ma, mb) = (mean(a), mean(b));
    let va = sum_sq_dev(a, ma) / (na - T::one()) / na;
    let vb = sum_sq_dev(b, mb) / (nb - T::one()) / nb;
    let se2 = va + vb;
    let ns = vec![a.len(), b.len()];
    if se2 == T::zero() {
        if ma == mb {
            return Err(StatsError::ZeroVariance);
        }
        let t = if ma > mb { T::infinity() } else { T::neg_infinity() };
        return Ok(TestResult::new(Method::TTest, t, 0.0, ns));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - T::one()) + vb * vb / (nb - T::one()));
    let mut r = TestResult::new(Method::TTest, t, t_two_sided(t.as_f64(), df.as_f64()), ns);
    r.df = vec![df];
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anova_hand_sums_of_squares() {
        let g: [&[f64]; 3] = [&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0], &[3.0, 4.0, 5.0]];
        let r = one_way_anova(&g).unwrap();
        assert!((r.statistic - 3.0).abs() < 1e-12);
        assert_eq!(r.df, vec![2.0, 6.0]);
        // F(2, 6) survival at 3 equals (1 + 3 * 2 / 6)^-3 for these dfs
        assert!((r.p_value - 0.125).abs() < 1e-9);
    }

    #[test]
    fn anova_identical_and_degenerate() {
        let g: [&[f64]; 2] = [&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]];
        let r = one_way_anova(&g).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let c: [&[f64]; 2] = [&[2.0, 2.0], &[2.0, 2.0]];
        assert_eq!(one_way_anova(&c), Err(StatsError::ZeroVariance));
        let one: [&[f64]; 1] = [&[1.0, 2.0]];
        assert!(matches!(one_way_anova(&one), Err(StatsError::TooFewGroups { .. })));
    }

    #[test]
    fn welch_identity_and_symmetry() {
        let a = [1.0, 2.0, 3.0];
        let r = t_test_two_tailed(&a, &a).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let b = [4.0, 5.5, 6.0, 9.0];
        let ab = t_test_two_tailed(&a, &b).unwrap();
        let ba = t_test_two_tailed(&b, &a).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn welch_zero_variance() {
        assert_eq!(t_test_two_tailed(&[1.0, 1.0], &[1.0, 1.0]), Err(StatsError::ZeroVariance));
        let r = t_test_two_tailed(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
    }
}
