//! Rank-based tests: Kruskal-Wallis, Mann-Whitney U, Wilcoxon signed-rank.

use super::dist::{chi2_sf, normal_sf};
use super::{
    check_finite, ExactTail, Method, StatsError, TestResult, MANN_WHITNEY_EXACT_MAX_PRODUCT,
    WILCOXON_EXACT_MAX_N,
};
use crate::scalar::Scalar;

/// Average ranks (1-based) plus the size of every tie group.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranks<T> {
    pub ranks: Vec<T>,
    pub tie_sizes: Vec<usize>,
}

impl<T: Scalar> Ranks<T> {
    pub fn has_ties(&self) -> bool {
        self.tie_sizes.iter().any(|&t| t > 1)
    }

    /// `sum(t^3 - t)` over tie groups.
    pub fn tie_term(&self) -> T {
        self.tie_sizes
            .iter()
            .map(|&t| {
                let t = T::from_usize_lossy(t);
                t * t * t - t
            })
            .sum()
    }
}

pub fn rankdata<T: Scalar>(values: &[T]) -> Ranks<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = T::from_usize_lossy(i + 1 + j) / T::lit(2.0);
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        tie_sizes.push(j - i);
        i = j;
    }
    Ranks { ranks, tie_sizes }
}

/// Kruskal-Wallis H with tie correction; p from chi-square on `k - 1` df.
pub fn kruskal_wallis<T: Scalar>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: k });
    }
    let mut pooled = Vec::new();
    for g in groups {
        if g.is_empty() {
            return Err(StatsError::Empty);
        }
        check_finite(g)?;
        pooled.extend_from_slice(g);
    }
    let n = pooled.len();
    if n < 5 {
        return Err(StatsError::TooFewObservations { needed: 5, got: n });
    }
    let ranks = rankdata(&pooled);
    let nf = T::from_usize_lossy(n);
    let correction = T::one() - ranks.tie_term() / (nf * nf * nf - nf);
    if correction <= T::zero() {
        return Err(StatsError::AllTied);
    }
    let mut offset = 0;
    let mut acc = T::zero();
    for g in groups {
        let r: T = ranks.ranks[offset..offset + g.len()].iter().copied().sum();
        acc += r * r / T::from_usize_lossy(g.len());
        offset += g.len();
    }
    let h = (T::lit(12.0) / (nf * (nf + T::one())) * acc - T::lit(3.0) * (nf + T::one())) / correction;
    let df = (k - 1) as f64;
    let mut r = TestResult::new(Method::KruskalWallis, h, chi2_sf(h.as_f64(), df), groups.iter().map(|g| g.len()).collect());
    r.df = vec![T::lit(df)];
    Ok(r)
}

/// Counts of the Mann-Whitney U statistic over all `C(n1+n2, n1)` labelings.
fn mann_whitney_null_counts(n1: usize, n2: usize) -> Vec<u128> {
    let max_u = n1 * n2;
    // f[i][j] = distribution of U for i items from sample one, j from sample two
    let mut prev: Vec<Vec<u128>> = vec![vec![1]; n2 + 1];
    for i in 1..=n1 {
        let mut cur: Vec<Vec<u128>> = Vec::with_capacity(n2 + 1);
        cur.push(vec![1]);
        for j in 1..=n2 {
            let mut dist = vec![0u128; i * j + 1];
            // largest element from sample one: it beats all j of sample two
            for (u, &c) in prev[j].iter().enumerate() {
                dist[u + j] += c;
            }
            for (u, &c) in cur[j - 1].iter().enumerate() {
                dist[u] += c;
            }
            cur.push(dist);
        }
        prev = cur;
    }
    let out = prev.swap_remove(n2);
    debug_assert_eq!(out.len(), max_u + 1);
    out
}

/// Two-sided Mann-Whitney U; the reported statistic is `min(U1, U2)`.
///
/// Exact enumeration when `n1 * n2 <= 400` and the pooled sample has no ties,
/// otherwise the normal approximation with tie and continuity corrections.
pub fn mann_whitney_u<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult<T>, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(a)?;
    check_finite(b)?;
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let ranks = rankdata(&pooled);
    let r1: T = ranks.ranks[..n1].iter().copied().sum();
    let n1f = T::from_usize_lossy(n1);
    let prod = T::from_usize_lossy(n1 * n2);
    let u1 = r1 - n1f * (n1f + T::one()) / T::lit(2.0);
    let u2 = prod - u1;
    let u = u1.min(u2);
    let ns = vec![n1, n2];

    if n1 * n2 <= MANN_WHITNEY_EXACT_MAX_PRODUCT && !ranks.has_ties() {
        let counts = mann_whitney_null_counts(n1, n2);
        let u_int = u.round().to_usize().expect("non-negative U");
        let tail: u128 = counts[..=u_int].iter().sum();
        let total: u128 = counts.iter().sum();
        let exact = ExactTail { tail_count: tail, total };
        let mut r = TestResult::new(Method::MannWhitney, u, exact.two_sided_p(), ns);
        r.exact = Some(exact);
        return Ok(r);
    }

    let n = T::from_usize_lossy(n1 + n2);
    let mu = prod / T::lit(2.0);
    let var = prod / T::lit(12.0) * ((n + T::one()) - ranks.tie_term() / (n * (n - T::one())));
    let p = if var <= T::zero() {
        1.0
    } else {
        let z = (u1.max(u2) - mu - T::lit(0.5)) / var.sqrt();
        2.0 * normal_sf(z.as_f64())
    };
    Ok(TestResult::new(Method::MannWhitney, u, p, ns))
}

/// Counts of the positive-rank sum over all `2^n` sign assignments of ranks `1..=n`.
fn signed_rank_null_counts(n: usize) -> Vec<u128> {
    let max = n * (n + 1) / 2;
    let mut dist = vec![0u128; max + 1];
    dist[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            dist[s] += dist[s - r];
        }
    }
    dist
}

/// Two-sided Wilcoxon signed-rank test on `post - pre`.
///
/// Zero differences are dropped before ranking. The statistic is the smaller
/// signed-rank sum. Exact when the effective n is at most 25 and the absolute
/// differences are tie-free; otherwise normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_signed_rank<T: Scalar>(pre: &[T], post: &[T]) -> Result<TestResult<T>, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch(pre.len(), post.len()));
    }
    check_finite(pre)?;
    check_finite(post)?;
    let diffs: Vec<T> = pre.iter().zip(post).map(|(&x, &y)| y - x).filter(|d| *d != T::zero()).collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let n = diffs.len();
    let abs: Vec<T> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = rankdata(&abs);
    let mut w_plus = T::zero();
    let mut w_minus = T::zero();
    for (d, &r) in diffs.iter().zip(&ranks.ranks) {
        if *d > T::zero() {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    let w = w_plus.min(w_minus);

    if n <= WILCOXON_EXACT_MAX_N && !ranks.has_ties() {
        let counts = signed_rank_null_counts(n);
        let w_int = w.round().to_usize().expect("non-negative W");
        let exact = ExactTail { tail_count: counts[..=w_int].iter().sum(), total: 1u128 << n };
        let mut r = TestResult::new(Method::WilcoxonSignedRank, w, exact.two_sided_p(), vec![n]);
        r.exact = Some(exact);
        return Ok(r);
    }

    let nf = T::from_usize_lossy(n);
    let mu = nf * (nf + T::one()) / T::lit(4.0);
    let var = (nf * (nf + T::one()) * (T::lit(2.0) * nf + T::one()) - ranks.tie_term() / T::lit(2.0)) / T::lit(24.0);
    let se = var.sqrt();
    let mut z = (w_plus - mu) / se;
    if z > T::zero() {
        z -= T::lit(0.5) / se;
    } else if z < T::zero() {
        z += T::lit(0.5) / se;
    }
    let p = 2.0 * normal_sf(z.abs().as_f64());
    Ok(TestResult::new(Method::WilcoxonSignedRank, w, p, vec![n]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rankdata_averages_ties() {
        let r = rankdata(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r.ranks, vec![3.5, 1.0, 3.5, 2.0]);
        assert!(r.has_ties());
        assert_eq!(r.tie_term(), 6.0);
    }

    #[test]
    fn kruskal_blocks_hand_value() {
        let g: [&[f64]; 3] = [&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]];
        let r = kruskal_wallis(&g).unwrap();
        assert!((r.statistic - 7.2).abs() < 1e-12);
        // chi-square(2) survival is exp(-x/2)
        assert!((r.p_value - (-3.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn kruskal_all_tied() {
        let g: [&[f64]; 2] = [&[1.0, 1.0, 1.0], &[1.0, 1.0]];
        assert_eq!(kruskal_wallis(&g), Err(StatsError::AllTied));
    }

    #[test]
    fn mann_whitney_separation_and_overlap() {
        let r = mann_whitney_u(&[1.0f64, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.exact, Some(ExactTail { tail_count: 1, total: 20 }));
        assert!((r.p_value - 0.1).abs() < 1e-15);
        let same = mann_whitney_u(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(same.statistic, 2.0);
        assert_eq!(same.exact, None);
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn mann_whitney_all_identical() {
        let r = mann_whitney_u(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn null_counts_sum_to_binomial() {
        let c = mann_whitney_null_counts(4, 4);
        assert_eq!(c.iter().sum::<u128>(), 70);
        assert_eq!(c.len(), 17);
        let c = mann_whitney_null_counts(20, 20);
        assert_eq!(c.iter().sum::<u128>(), 137_846_528_820);
        assert_eq!(signed_rank_null_counts(3), vec![1, 1, 1, 2, 1, 1, 1]);
    }

    #[test]
    fn wilcoxon_edges() {
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::AllZeroDifferences));
        let r = wilcoxon_signed_rank(&[1.0, 5.0], &[2.0, 5.0]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert_eq!(r.ns, vec![1]);
        assert_eq!(r.exact, Some(ExactTail { tail_count: 1, total: 2 }));
        assert!(matches!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(1, 2))));
    }

    #[test]
    fn wilcoxon_uniformly_worse_is_zero() {
        let pre = [10.0f64, 12.0, 9.0, 15.0, 11.0, 14.0];
        let post = [3.0, 4.0, 2.5, 5.0, 1.5, 0.5];
        let r = wilcoxon_signed_rank(&pre, &post).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 2.0 / 64.0).abs() < 1e-15);
    }
}
