use hsmod_core::modification::Condition;

/// Assigns arriving participants one at a time: the next participant goes to
/// a least-filled group, choosing the one that leaves the smallest spread of
/// group mean sensitivities (condition order breaks ties).
#[derive(Debug, Clone, Default)]
pub struct OnlineBalancer {
    sums: [f64; 4],
    counts: [usize; 4],
}

fn index(c: Condition) -> usize {
    Condition::ALL.iter().position(|&x| x == c).expect("listed condition")
}

impl OnlineBalancer {
    pub fn record(&mut self, c: Condition, sensitivity: f64) {
        let i = index(c);
        self.sums[i] += sensitivity;
        self.counts[i] += 1;
    }

    fn spread(sums: &[f64; 4], counts: &[usize; 4]) -> f64 {
        let means: Vec<f64> = (0..4).filter(|&g| counts[g] > 0).map(|g| sums[g] / counts[g] as f64).collect();
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        if means.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn choose(&self, sensitivity: f64) -> Condition {
        let fewest = *self.counts.iter().min().expect("four groups");
        let mut best: Option<(f64, usize)> = None;
        for g in (0..4).filter(|&g| self.counts[g] == fewest) {
            let (mut s, mut n) = (self.sums, self.counts);
            s[g] += sensitivity;
            n[g] += 1;
            let gap = Self::spread(&s, &n);
            if best.is_none_or(|(b, _)| gap < b - 1e-12) {
                best = Some((gap, g));
            }
        }
        Condition::ALL[best.expect("some group has the fewest members").1]
    }

    pub fn counts(&self) -> [usize; 4] {
        self.counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_group_sizes_within_one() {
        let mut b = OnlineBalancer::default();
        for i in 0..23 {
            let s = 1.0 + (i * 7 % 9) as f64 / 2.0;
            let c = b.choose(s);
            b.record(c, s);
            let counts = b.counts();
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn first_arrivals_fill_groups_in_order() {
        let mut b = OnlineBalancer::default();
        let picks: Vec<Condition> = [3.0, 3.0, 3.0, 3.0]
            .iter()
            .map(|&s| {
                let c = b.choose(s);
                b.record(c, s);
                c
            })
            .collect();
        assert_eq!(picks, Condition::ALL);
    }
}
