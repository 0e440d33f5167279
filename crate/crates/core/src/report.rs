//! Study report from exported session archives: descriptives, normality,
//! omnibus and pairwise tests, within-group pre/post tests and cumulative
//! completion-time series.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::experiment::{ExperimentError, SessionArchive};
use crate::measures::{
    completion_time, moderation_accuracy, moderation_recall, normalize_severity, Instruments, MeasuresError,
    ParticipantMetrics,
};
use crate::modification::Condition;
use crate::stats::{
    bonferroni, descriptive, kruskal_wallis, mann_whitney_u, one_way_anova, shapiro_wilk, t_test_two_tailed,
    wilcoxon_signed_rank, StatsError, TestResult,
};

pub const DEFAULT_ALPHA: f64 = 0.05;
const NA: &str = "NA";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no archives")]
    NoArchives,
    #[error("group {0} has no archives")]
    EmptyGroup(Condition),
    #[error("archives come from different corpora ({0} and {1})")]
    MixedCorpora(String, String),
    #[error("session {0} appears more than once")]
    DuplicateSession(String),
    #[error("archive {path}: {source}")]
    Archive { path: String, source: ExperimentError },
    #[error("session {session}: {source}")]
    Metrics { session: String, source: MeasuresError },
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    Bonferroni,
}

impl std::str::FromStr for Correction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bonferroni" => Ok(Correction::Bonferroni),
            other => Err(format!("unsupported correction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Shapiro-Wilk level for the parametric/non-parametric routing.
    pub alpha: f64,
    pub correction: Correction,
    pub groups: Vec<Condition>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, correction: Correction::Bonferroni, groups: Condition::ALL.to_vec() }
    }
}

/// Reads every `*.json` archive in `dir`, ordered by session id.
pub fn load_archives(dir: &Path) -> Result<Vec<SessionArchive>, ReportError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut archives = paths
        .par_iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            SessionArchive::from_json(&text)
                .map_err(|source| ReportError::Archive { path: p.display().to_string(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    archives.sort_by(|a, b| a.init.session_id.cmp(&b.init.session_id));
    Ok(archives)
}

/// Scores one archive.
pub fn participant_metrics(a: &SessionArchive) -> Result<ParticipantMetrics, MeasuresError> {
    let inst = Instruments::builtin(&a.init.instrument_version)?;
    let pre = a.surveys.pre.as_ref().ok_or(MeasuresError::Empty)?.scores(inst)?;
    let post = a.surveys.post.as_ref().ok_or(MeasuresError::Empty)?.scores(inst)?;
    let decisions = a.records.iter().map(|r| (r.comment_id.clone(), r.decision)).collect();
    let severities: Vec<u8> = a.records.iter().map(|r| r.severity).collect();
    let intervals: Vec<_> = a.records.iter().map(|r| (r.started_at, r.submitted_at)).collect();
    Ok(ParticipantMetrics {
        spane_b_pre: pre.spane_b,
        spane_b_post: post.spane_b,
        mfsi_pre: pre.mfsi,
        mfsi_post: post.mfsi,
        accuracy: moderation_accuracy(&decisions, &a.labels)?,
        recall: moderation_recall(&decisions, &a.labels)?,
        completion_minutes: completion_time(&intervals)?.total_minutes,
        severity_z: normalize_severity(&severities)?,
    })
}

struct Participant {
    condition: Condition,
    metrics: ParticipantMetrics,
    cumulative: Vec<f64>,
    hate_severity_z: f64,
}

/// Between-group measures, in report order.
const MEASURES: [&str; 8] = [
    "spane_b_pre",
    "spane_b_post",
    "mfsi_pre",
    "mfsi_post",
    "accuracy",
    "recall",
    "completion_minutes",
    "severity_z_hate",
];

impl Participant {
    fn value(&self, measure: &str) -> f64 {
        let m = &self.metrics;
        match measure {
            "spane_b_pre" => f64::from(m.spane_b_pre),
            "spane_b_post" => f64::from(m.spane_b_post),
            "mfsi_pre" => f64::from(m.mfsi_pre),
            "mfsi_post" => f64::from(m.mfsi_post),
            "accuracy" => m.accuracy,
            "recall" => m.recall,
            "completion_minutes" => m.completion_minutes,
            "severity_z_hate" => self.hate_severity_z,
            other => unreachable!("unknown measure {other}"),
        }
    }
}

/// File name to contents; every table is CSV, plus `summary.md`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub files: BTreeMap<String, String>,
}

impl Report {
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        NA.into()
    }
}

fn pval(p: f64) -> String {
    if !p.is_finite() {
        NA.into()
    } else if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.6}")
    }
}

fn opt(x: Option<f64>, f: fn(f64) -> String) -> String {
    x.map_or_else(|| NA.to_string(), f)
}

struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Table(w)
    }
    fn row(&mut self, cells: &[String]) {
        self.0.write_record(cells).expect("in-memory write");
    }
    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

struct Routing {
    parametric: bool,
}

fn p_of(r: &Result<TestResult<f64>, StatsError>) -> Option<f64> {
    r.as_ref().ok().map(|t| t.p_value)
}

/// Builds the full report from archives of completed sessions.
pub fn build_report(archives: &[SessionArchive], opts: &ReportOptions) -> Result<Report, ReportError> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(ReportError::BadAlpha(opts.alpha));
    }
    let first = archives.first().ok_or(ReportError::NoArchives)?;
    let mut ids = BTreeSet::new();
    for a in archives {
        if a.init.corpus_digest != first.init.corpus_digest {
            return Err(ReportError::MixedCorpora(first.init.corpus_digest.clone(), a.init.corpus_digest.clone()));
        }
        if !ids.insert(a.init.session_id.as_str()) {
            return Err(ReportError::DuplicateSession(a.init.session_id.clone()));
        }
    }
    let mut sorted: Vec<&SessionArchive> = archives.iter().collect();
    sorted.sort_by(|a, b| a.init.session_id.cmp(&b.init.session_id));
    let people: Vec<Participant> = sorted
        .par_iter()
        .map(|a| {
            let metrics = participant_metrics(a)
                .map_err(|source| ReportError::Metrics { session: a.init.session_id.clone(), source })?;
            let intervals: Vec<_> = a.records.iter().map(|r| (r.started_at, r.submitted_at)).collect();
            let cumulative = completion_time(&intervals)
                .map_err(|source| ReportError::Metrics { session: a.init.session_id.clone(), source })?
                .cumulative_minutes;
            let hate: Vec<f64> = a
                .records
                .iter()
                .zip(&metrics.severity_z)
                .filter(|(r, _)| a.labels.get(&r.comment_id) == Some(&Label::Hate))
                .map(|(_, &z)| z)
                .collect();
            let hate_severity_z = if hate.is_empty() { f64::NAN } else { hate.iter().sum::<f64>() / hate.len() as f64 };
            Ok(Participant { condition: a.init.condition, metrics, cumulative, hate_severity_z })
        })
        .collect::<Result<_, ReportError>>()?;

    let groups = &opts.groups;
    let by_group: Vec<Vec<&Participant>> =
        groups.iter().map(|g| people.iter().filter(|p| p.condition == *g).collect()).collect();
    for (g, members) in groups.iter().zip(&by_group) {
        if members.is_empty() {
            return Err(ReportError::EmptyGroup(*g));
        }
    }
    let values = |measure: &str| -> Vec<Vec<f64>> {
        by_group.iter().map(|m| m.iter().map(|p| p.value(measure)).collect()).collect()
    };

    let mut files = BTreeMap::new();
    let mut summary = String::new();
    summary.push_str("# Study report\n\n");
    summary.push_str(&format!(
        "{} sessions; corpus `{}`; alpha {}; correction {:?}.\n\n",
        people.len(),
        first.init.corpus_digest,
        opts.alpha,
        opts.correction
    ));
    summary.push_str("| group | n |\n|---|---|\n");
    for (g, m) in groups.iter().zip(&by_group) {
        summary.push_str(&format!("| {g} | {} |\n", m.len()));
    }

    // descriptives
    let mut desc = Table::new(&["measure", "group", "n", "mean", "std", "min", "max"]);
    summary.push_str("\n## Descriptives (mean ± std)\n\n| measure |");
    for g in groups {
        summary.push_str(&format!(" {g} |"));
    }
    summary.push_str("\n|---|");
    summary.push_str(&"---|".repeat(groups.len()));
    summary.push('\n');
    for measure in MEASURES {
        summary.push_str(&format!("| {measure} |"));
        for (g, xs) in groups.iter().zip(values(measure)) {
            match descriptive(&xs) {
                Ok(d) => {
                    desc.row(&[
                        measure.into(),
                        g.to_string(),
                        d.n.to_string(),
                        num(d.mean),
                        opt(d.std, num),
                        num(d.min),
                        num(d.max),
                    ]);
                    summary.push_str(&format!(" {:.2} ± {} |", d.mean, d.std.map_or(NA.into(), |s| format!("{s:.2}"))));
                }
                Err(_) => {
                    desc.row(&[measure.into(), g.to_string(), xs.len().to_string(), NA.into(), NA.into(), NA.into(), NA.into()]);
                    summary.push_str(" NA |");
                }
            }
        }
        summary.push('\n');
    }
    files.insert("descriptives.csv".into(), desc.finish());

    // normality and omnibus
    let mut norm = Table::new(&["measure", "group", "n", "w", "p_value", "normal"]);
    let mut omni = Table::new(&["measure", "all_normal", "test", "statistic", "df1", "df2", "p_value"]);
    let mut routing: BTreeMap<&str, Routing> = BTreeMap::new();
    summary.push_str("\n## Omnibus tests\n\n| measure | test | statistic | p |\n|---|---|---|---|\n");
    for measure in MEASURES {
        let vs = values(measure);
        let mut all_normal = true;
        for (g, xs) in groups.iter().zip(&vs) {
            let sw = shapiro_wilk(xs);
            let normal = matches!(&sw, Ok(r) if r.p_value > opts.alpha);
            all_normal &= normal;
            let (w, p) = match &sw {
                Ok(r) => (num(r.statistic), pval(r.p_value)),
                Err(_) => (NA.into(), NA.into()),
            };
            norm.row(&[measure.into(), g.to_string(), xs.len().to_string(), w, p, normal.to_string()]);
        }
        let refs: Vec<&[f64]> = vs.iter().map(Vec::as_slice).collect();
        let r = if all_normal { one_way_anova(&refs) } else { kruskal_wallis(&refs) };
        let test = if all_normal { "anova" } else { "kruskal_wallis" };
        let (stat, df1, df2, p) = match &r {
            Ok(t) => (
                num(t.statistic),
                t.df.first().map_or_else(|| (groups.len() - 1).to_string(), |d| num(*d)),
                t.df.get(1).map_or(NA.to_string(), |d| num(*d)),
                pval(t.p_value),
            ),
            Err(_) => (NA.into(), NA.into(), NA.into(), NA.into()),
        };
        summary.push_str(&format!("| {measure} | {test} | {stat} | {p} |\n"));
        omni.row(&[measure.into(), all_normal.to_string(), test.into(), stat, df1, df2, p]);
        routing.insert(measure, Routing { parametric: all_normal });
    }
    files.insert("normality.csv".into(), norm.finish());
    files.insert("omnibus.csv".into(), omni.finish());

    // pairwise
    let mut pair = Table::new(&["measure", "group_a", "group_b", "test", "statistic", "p_value", "p_adjusted"]);
    for measure in MEASURES {
        let vs = values(measure);
        let parametric = routing[measure].parametric;
        let mut rows = Vec::new();
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                let r = if parametric { t_test_two_tailed(&vs[i], &vs[j]) } else { mann_whitney_u(&vs[i], &vs[j]) };
                rows.push((i, j, r));
            }
        }
        let valid: Vec<f64> = rows.iter().filter_map(|(_, _, r)| p_of(r)).collect();
        let adjusted = match opts.correction {
            Correction::Bonferroni => bonferroni(&valid).unwrap_or_default(),
        };
        let mut adj = adjusted.into_iter();
        for (i, j, r) in &rows {
            let (stat, p, pa) = match r {
                Ok(t) => (num(t.statistic), pval(t.p_value), pval(adj.next().expect("one per valid p"))),
                Err(_) => (NA.into(), NA.into(), NA.into()),
            };
            let test = if parametric { "t_test" } else { "mann_whitney" };
            pair.row(&[measure.into(), groups[*i].to_string(), groups[*j].to_string(), test.into(), stat, p, pa]);
        }
    }
    files.insert("pairwise.csv".into(), pair.finish());

    // within-group pre/post
    let mut within =
        Table::new(&["measure", "group", "n", "n_effective", "mean_pre", "mean_post", "statistic", "p_value", "exact"]);
    summary.push_str("\n## Within-group Wilcoxon (pre vs post)\n\n| measure | group | W | p |\n|---|---|---|---|\n");
    for (measure, pre_key, post_key) in [("spane_b", "spane_b_pre", "spane_b_post"), ("mfsi", "mfsi_pre", "mfsi_post")] {
        let pre = values(pre_key);
        let post = values(post_key);
        for (gi, g) in groups.iter().enumerate() {
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            let r = wilcoxon_signed_rank(&pre[gi], &post[gi]);
            let (n_eff, stat, p, exact) = match &r {
                Ok(t) => (t.ns[0].to_string(), num(t.statistic), pval(t.p_value), t.exact.is_some().to_string()),
                Err(_) => ("0".into(), NA.into(), NA.into(), NA.into()),
            };
            summary.push_str(&format!("| {measure} | {g} | {stat} | {p} |\n"));
            within.row(&[
                measure.into(),
                g.to_string(),
                pre[gi].len().to_string(),
                n_eff,
                num(mean(&pre[gi])),
                num(mean(&post[gi])),
                stat,
                p,
                exact,
            ]);
        }
    }
    files.insert("within.csv".into(), within.finish());

    // cumulative completion time per step
    for (g, members) in groups.iter().zip(&by_group) {
        let mut t = Table::new(&["step", "n", "mean_minutes", "std_minutes", "min_minutes", "max_minutes"]);
        let steps = members.iter().map(|p| p.cumulative.len()).min().unwrap_or(0);
        for step in 0..steps {
            let xs: Vec<f64> = members.iter().map(|p| p.cumulative[step]).collect();
            let d = descriptive(&xs).expect("non-empty finite series");
            t.row(&[(step + 1).to_string(), d.n.to_string(), num(d.mean), opt(d.std, num), num(d.min), num(d.max)]);
        }
        files.insert(format!("cumulative_time_{g}.csv"), t.finish());
    }

    summary.push_str(
        "\nPairwise comparisons (Bonferroni-adjusted) are in `pairwise.csv`; per-group normality in \
         `normality.csv`; cumulative completion time per step in `cumulative_time_<group>.csv`.\n",
    );
    files.insert("summary.md".into(), summary);
    Ok(Report { files })
}
