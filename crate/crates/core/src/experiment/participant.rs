use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::modification::Condition;
use crate::scalar::Scalar;

pub const SCREENING_ITEMS: usize = 8;
/// Cohorts up to this size are balanced by exhaustive search.
pub const EXHAUSTIVE_MAX: usize = 12;
const GROUPS: usize = 4;
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Undisclosed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participant {
    pub id: String,
    pub pseudonym: String,
    pub age: u32,
    pub gender: Gender,
    /// Mean of the screening ratings, in `[1, 5]`.
    pub sensitivity_score: f64,
}

impl Participant {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| ExperimentError::InvalidParticipant(m);
        if self.id.trim().is_empty() {
            return Err(bad("empty id".into()));
        }
        if !(1.0..=5.0).contains(&self.sensitivity_score) {
            return Err(bad(format!("sensitivity score {} outside [1, 5]", self.sensitivity_score)));
        }
        check_pseudonym(&self.pseudonym).map_err(bad)
    }
}

/// Rejects empty pseudonyms and ones that look like e-mail addresses or
/// phone numbers.
pub fn check_pseudonym(p: &str) -> Result<(), String> {
    if p.trim().is_empty() {
        return Err("empty pseudonym".into());
    }
    if p.contains('@') {
        return Err("pseudonym looks like an e-mail address".into());
    }
    if p.chars().filter(char::is_ascii_digit).count() >= 7 {
        return Err("pseudonym looks like a phone number".into());
    }
    Ok(())
}

/// Mean of the eight screening ratings.
pub fn compute_hate_sensitivity<T: Scalar>(ratings: &[u8]) -> Result<T, ExperimentError> {
    if ratings.len() != SCREENING_ITEMS {
        return Err(ExperimentError::WrongRatingCount { expected: SCREENING_ITEMS, got: ratings.len() });
    }
    if let Some(&r) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
        return Err(ExperimentError::InvalidSeverity(r));
    }
    let sum: u32 = ratings.iter().map(|&r| u32::from(r)).sum();
    Ok(T::lit(f64::from(sum)) / T::from_usize_lossy(SCREENING_ITEMS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMethod {
    Exhaustive,
    SerpentineSwap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub condition: Condition,
    pub n: usize,
    pub mean_sensitivity: f64,
    pub mean_age: f64,
    pub female: usize,
    pub male: usize,
    pub undisclosed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub groups: BTreeMap<String, Condition>,
    pub method: BalanceMethod,
    /// Largest difference between two group-mean sensitivities.
    pub max_gap: f64,
    pub summaries: Vec<GroupSummary>,
}

/// Participants ordered by sensitivity descending, id ascending on ties.
fn ranked(ps: &[Participant]) -> Vec<&Participant> {
    let mut v: Vec<&Participant> = ps.iter().collect();
    v.sort_by(|a, b| b.sensitivity_score.total_cmp(&a.sensitivity_score).then_with(|| a.id.cmp(&b.id)));
    v
}

/// Group index for each rank position under the 1-2-3-4-4-3-2-1 deal.
pub fn serpentine(n: usize) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let (round, pos) = (i / GROUPS, i % GROUPS);
            if round % 2 == 0 {
                pos
            } else {
                GROUPS - 1 - pos
            }
        })
        .collect()
}

/// Largest pairwise difference of group means.
pub fn max_mean_gap(scores: &[f64], groups: &[usize]) -> f64 {
    let mut sum = [0.0; GROUPS];
    let mut n = [0usize; GROUPS];
    for (&s, &g) in scores.iter().zip(groups) {
        sum[g] += s;
        n[g] += 1;
    }
    let means: Vec<f64> = (0..GROUPS).filter(|&g| n[g] > 0).map(|g| sum[g] / n[g] as f64).collect();
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

fn sums_gap(sums: &[f64; GROUPS]) -> f64 {
    let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Minimum achievable gap over all equal-size 4-way partitions, with one
/// optimal grouping. Exponential; meant for small cohorts.
pub fn optimal_partition(scores: &[f64]) -> (f64, Vec<usize>) {
    let n = scores.len();
    assert!(n.is_multiple_of(GROUPS), "cohort size must be a multiple of 4");
    let size = n / GROUPS;
    let mut best_groups = serpentine(n);
    let mut best = max_mean_gap(scores, &best_groups) * size as f64;
    let mut cur = vec![0usize; n];
    let mut sums = [0.0; GROUPS];
    let mut counts = [0usize; GROUPS];
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        opened: usize,
        scores: &[f64],
        size: usize,
        cur: &mut Vec<usize>,
        sums: &mut [f64; GROUPS],
        counts: &mut [usize; GROUPS],
        best: &mut f64,
        best_groups: &mut Vec<usize>,
    ) {
        if i == scores.len() {
            let gap = sums_gap(sums);
            if gap < *best - EPS {
                *best = gap;
                best_groups.clone_from(cur);
            }
            return;
        }
        // groups are opened in order so each unlabeled partition is visited once
        for g in 0..(opened + 1).min(GROUPS) {
            if counts[g] == size {
                continue;
            }
            cur[i] = g;
            sums[g] += scores[i];
            counts[g] += 1;
            go(i + 1, opened.max(g + 1), scores, size, cur, sums, counts, best, best_groups);
            sums[g] -= scores[i];
            counts[g] -= 1;
        }
    }
    go(0, 0, scores, size, &mut cur, &mut sums, &mut counts, &mut best, &mut best_groups);
    (max_mean_gap(scores, &best_groups), best_groups)
}

/// Serpentine deal followed by best-improvement pairwise swaps until no swap
/// narrows the gap.
pub fn refine_by_swaps(scores: &[f64], mut groups: Vec<usize>) -> Vec<usize> {
    let mut sums = [0.0; GROUPS];
    for (&s, &g) in scores.iter().zip(&groups) {
        sums[g] += s;
    }
    loop {
        let current = sums_gap(&sums);
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..scores.len() {
            for j in (i + 1)..scores.len() {
                let (gi, gj) = (groups[i], groups[j]);
                if gi == gj || scores[i] == scores[j] {
                    continue;
                }
                let mut t = sums;
                t[gi] += scores[j] - scores[i];
                t[gj] += scores[i] - scores[j];
                let gap = sums_gap(&t);
                if gap < current - EPS && best.is_none_or(|(b, _, _)| gap < b - EPS) {
                    best = Some((gap, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { return groups };
        let (gi, gj) = (groups[i], groups[j]);
        sums[gi] += scores[j] - scores[i];
        sums[gj] += scores[i] - scores[j];
        groups.swap(i, j);
    }
}

/// Balances participants over the four conditions by sensitivity.
///
/// Participants are ranked (sensitivity descending, id ascending) and dealt
/// serpentine. Cohorts of at most [`EXHAUSTIVE_MAX`] are then replaced by
/// an exhaustive optimum when it is strictly better; larger cohorts get
/// pairwise-swap refinement. The group holding the top-ranked participant is
/// Control, then Anonymizing, Paraphrasing, Revealing.
pub fn assign_groups(ps: &[Participant]) -> Result<GroupAssignment, ExperimentError> {
    if ps.is_empty() || !ps.len().is_multiple_of(GROUPS) {
        return Err(ExperimentError::CohortNotDivisible { size: ps.len(), remainder: ps.len() % GROUPS });
    }
    let mut seen = std::collections::HashSet::new();
    for p in ps {
        p.validate()?;
        if !seen.insert(p.id.as_str()) {
            return Err(ExperimentError::InvalidParticipant(format!("duplicate participant id {}", p.id)));
        }
    }
    let order = ranked(ps);
    let scores: Vec<f64> = order.iter().map(|p| p.sensitivity_score).collect();
    let (groups, method) = if ps.len() <= EXHAUSTIVE_MAX {
        (optimal_partition(&scores).1, BalanceMethod::Exhaustive)
    } else {
        (refine_by_swaps(&scores, serpentine(ps.len())), BalanceMethod::SerpentineSwap)
    };
    // relabel so group ids follow first appearance in rank order
    let mut relabel = [usize::MAX; GROUPS];
    let mut next = 0;
    for &g in &groups {
        if relabel[g] == usize::MAX {
            relabel[g] = next;
            next += 1;
        }
    }
    let groups: Vec<usize> = groups.iter().map(|&g| relabel[g]).collect();

    let mut summaries: Vec<GroupSummary> = Condition::ALL
        .iter()
        .map(|&condition| GroupSummary {
            condition,
            n: 0,
            mean_sensitivity: 0.0,
            mean_age: 0.0,
            female: 0,
            male: 0,
            undisclosed: 0,
        })
        .collect();
    let mut map = BTreeMap::new();
    for (p, &g) in order.iter().zip(&groups) {
        map.insert(p.id.clone(), Condition::ALL[g]);
        let s = &mut summaries[g];
        s.n += 1;
        s.mean_sensitivity += p.sensitivity_score;
        s.mean_age += f64::from(p.age);
        match p.gender {
            Gender::Female => s.female += 1,
            Gender::Male => s.male += 1,
            Gender::Undisclosed => s.undisclosed += 1,
        }
    }
    for s in &mut summaries {
        s.mean_sensitivity /= s.n as f64;
        s.mean_age /= s.n as f64;
    }
    Ok(GroupAssignment { groups: map, method, max_gap: max_mean_gap(&scores, &groups), summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: &str, s: f64) -> Participant {
        Participant { id: id.into(), pseudonym: format!("P-{id}"), age: 30, gender: Gender::Undisclosed, sensitivity_score: s }
    }

    #[test]
    fn sensitivity() {
        assert_eq!(compute_hate_sensitivity::<f64>(&[4; 8]).unwrap(), 4.0);
        assert_eq!(compute_hate_sensitivity::<f32>(&[5, 5, 5, 5, 1, 1, 1, 1]).unwrap(), 3.0);
        assert!(matches!(compute_hate_sensitivity::<f64>(&[4; 7]), Err(ExperimentError::WrongRatingCount { .. })));
        assert_eq!(compute_hate_sensitivity::<f64>(&[4, 4, 4, 4, 4, 4, 4, 0]), Err(ExperimentError::InvalidSeverity(0)));
    }

    #[test]
    fn serpentine_deal() {
        assert_eq!(serpentine(8), vec![0, 1, 2, 3, 3, 2, 1, 0]);
        // sensitivities 8..1 dealt serpentine give equal sums of 9
        let scores: Vec<f64> = (1..=8).rev().map(f64::from).collect();
        assert_eq!(max_mean_gap(&scores, &serpentine(8)), 0.0);
    }

    #[test]
    fn eight_participants_balance_exactly() {
        let ps: Vec<Participant> = (1..=8).map(|i| p(&format!("p{i}"), 1.0 + f64::from(i) * 0.5)).collect();
        let a = assign_groups(&ps).unwrap();
        assert_eq!(a.max_gap, 0.0);
        assert!(a.summaries.iter().all(|s| s.n == 2));
        assert_eq!(a.groups["p8"], Condition::Control);
    }

    #[test]
    fn eighty_make_four_groups_of_twenty() {
        let ps: Vec<Participant> =
            (0..80).map(|i| p(&format!("p{i:02}"), 1.0 + f64::from((i * 37) % 33) / 8.0)).collect();
        let a = assign_groups(&ps).unwrap();
        assert!(a.summaries.iter().all(|s| s.n == 20));
        assert_eq!(a.method, BalanceMethod::SerpentineSwap);
        let serp = max_mean_gap(
            &ranked(&ps).iter().map(|p| p.sensitivity_score).collect::<Vec<_>>(),
            &serpentine(80),
        );
        assert!(a.max_gap <= serp);
    }

    #[test]
    fn ties_are_deterministic() {
        let ps: Vec<Participant> = ["d", "b", "a", "c"].iter().map(|id| p(id, 3.0)).collect();
        let a = assign_groups(&ps).unwrap();
        assert_eq!(a.groups["a"], Condition::Control);
        assert_eq!(a.groups["d"], Condition::Revealing);
        let mut rev = ps.clone();
        rev.reverse();
        assert_eq!(assign_groups(&rev).unwrap().groups, a.groups);
    }

    #[test]
    fn non_divisible_cohort() {
        let ps: Vec<Participant> = (0..7).map(|i| p(&format!("p{i}"), 3.0)).collect();
        assert_eq!(assign_groups(&ps), Err(ExperimentError::CohortNotDivisible { size: 7, remainder: 3 }));
    }

    #[test]
    fn pseudonym_rules() {
        assert!(check_pseudonym("P-017").is_ok());
        assert!(check_pseudonym("kim@example.com").is_err());
        assert!(check_pseudonym("010-1234-5678").is_err());
        assert!(check_pseudonym(" ").is_err());
    }
}
