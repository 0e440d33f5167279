//! Tiny runner for acceptance criteria: each criterion runs in isolation,
//! panics count as failures, and every criterion prints exactly one line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

/// What a criterion found. `known` lists divergences that are documented
/// and expected; they still print as FAIL but do not fail the run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub detail: String,
    pub failures: Vec<String>,
    pub known: Vec<String>,
}

impl Outcome {
    pub fn new(detail: impl Into<String>) -> Self {
        Self { detail: detail.into(), ..Self::default() }
    }

    /// Records a failure unless `ok`.
    pub fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.known.is_empty()
    }
}

#[derive(Debug, Default)]
pub struct Runner {
    unexpected: usize,
    known: usize,
    total: usize,
}

impl Runner {
    pub fn run(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        self.total += 1;
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome { failures: vec![format!("panicked: {msg}")], ..Outcome::default() }
        });
        let secs = start.elapsed().as_secs_f64();
        if out.passed() {
            println!("PASS  {name} [{secs:.2}s] {}", out.detail);
            return;
        }
        if out.failures.is_empty() {
            self.known += 1;
            println!("FAIL  {name} [{secs:.2}s] known divergence: {}; {}", out.known.join("; "), out.detail);
        } else {
            self.unexpected += 1;
            let mut all = out.failures.clone();
            all.extend(out.known.iter().map(|k| format!("known: {k}")));
            let shown: Vec<&String> = all.iter().take(5).collect();
            println!("FAIL  {name} [{secs:.2}s] {} problem(s): {shown:?}", all.len());
        }
    }

    /// Summary line; returns whether any criterion failed unexpectedly.
    pub fn finish(&self) -> bool {
        println!(
            "{} criteria: {} passed, {} known divergence(s), {} failed",
            self.total,
            self.total - self.known - self.unexpected,
            self.known,
            self.unexpected
        );
        self.unexpected == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_and_known_divergences_are_counted_separately() {
        let mut r = Runner::default();
        r.run("ok", || Outcome::new("fine"));
        r.run("boom", || panic!("bad"));
        r.run("known", || Outcome { known: vec!["x".into()], ..Outcome::default() });
        assert_eq!((r.total, r.unexpected, r.known), (3, 1, 1));
        assert!(!r.finish());
    }
}
