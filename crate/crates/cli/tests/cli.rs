use std::path::Path;
use std::process::{Command, Output};

fn hsmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsmod"))
        .args(args)
        .env_remove("HSMOD_GEN_API_KEY")
        .env_remove("HSMOD_EMB_API_KEY")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hsmod(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn mock_curation_rebuilds_the_fixture_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d)]);
    assert!(ok(&["validate", p(&d.join("corpus.jsonl"))]).starts_with("ok: 100 comments (50 hate)"));

    let run = |tag: &str| {
        let out = d.join(format!("curated-{tag}.jsonl"));
        let audit = d.join(format!("audit-{tag}.jsonl"));
        ok(&[
            "curate", "--corpus", p(&d.join("corpus.stripped.jsonl")), "--out", p(&out),
            "--provider", "mock", "--fixtures", p(&d.join("mock")), "--threshold", "0.7", "--k", "3",
            "--audit", p(&audit),
        ]);
        (std::fs::read(out).unwrap(), std::fs::read(audit).unwrap())
    };
    let (a, audit_a) = run("a");
    let (b, audit_b) = run("b");
    assert_eq!(a, b);
    assert_eq!(audit_a, audit_b);
    assert_eq!(a, std::fs::read(d.join("corpus.jsonl")).unwrap());
    assert!(!audit_a.is_empty());
}

#[test]
fn live_mode_without_credentials_names_the_variable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d)]);
    let out = hsmod(&[
        "curate", "--corpus", p(&d.join("corpus.jsonl")), "--out", p(&d.join("o.jsonl")),
        "--provider", "live", "--audit", p(&d.join("a.jsonl")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("HSMOD_GEN_API_KEY"), "{err}");
    assert!(!d.join("o.jsonl").exists());
}

#[test]
fn bad_corpus_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.jsonl");
    std::fs::write(&f, "{\"id\":\"a\"}\n").unwrap();
    let out = hsmod(&["validate", p(&f)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn marked_import_produces_a_valid_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("marked.tsv");
    std::fs::write(
        &src,
        "# id label topic text\nc1\thate\tpolitics\t§그 사람들§은 정말 ※멍청하다※\nc2\tnormal\tsports\t오늘 경기 ※대박※이었다\n",
    )
    .unwrap();
    let out = dir.path().join("c.jsonl");
    assert_eq!(ok(&["import-marked", p(&src), "--out", p(&out)]).trim(), "imported 2 comments");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"text\":\"그 사람들은 정말 멍청하다\""), "{text}");
    ok(&["validate", p(&out)]);
}

#[test]
fn assign_balances_a_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("people.jsonl");
    let rows: String = (0..8)
        .map(|i| {
            format!(
                "{{\"id\":\"p{i}\",\"pseudonym\":\"P{i}\",\"age\":30,\"gender\":\"female\",\"sensitivity_score\":{}}}\n",
                1.0 + f64::from(i) * 0.5
            )
        })
        .collect();
    std::fs::write(&f, rows).unwrap();
    let v: serde_json::Value = serde_json::from_str(&ok(&["assign", p(&f)])).unwrap();
    assert_eq!(v["groups"].as_object().unwrap().len(), 8);
    assert_eq!(v["method"], "exhaustive");
    // scores 1.0..=4.5 in steps of 0.5 pair up with equal sums
    assert!(v["max_gap"].as_f64().unwrap() < 1e-12);

    std::fs::write(&f, "{\"id\":\"p0\",\"pseudonym\":\"x\",\"age\":1,\"gender\":\"male\",\"sensitivity_score\":2}\n").unwrap();
    assert!(!hsmod(&["assign", p(&f)]).status.success());
}

#[test]
fn simulate_then_analyze_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fixtures", "--out", p(d)]);
    ok(&["simulate", "--corpus", p(&d.join("corpus.jsonl")), "--out", p(&d.join("arch")), "--per-group", "3"]);
    let report = d.join("report");
    ok(&["analyze", "--archives", p(&d.join("arch")), "--out", p(&report), "--alpha", "0.05", "--correction", "bonferroni"]);
    for f in ["descriptives.csv", "normality.csv", "omnibus.csv", "pairwise.csv", "within.csv", "summary.md"] {
        assert!(report.join(f).is_file(), "{f}");
    }
    for g in ["control", "anonymizing", "paraphrasing", "revealing"] {
        assert!(report.join(format!("cumulative_time_{g}.csv")).is_file(), "{g}");
    }
    assert!(!hsmod(&["analyze", "--archives", p(&d.join("arch")), "--out", p(&report), "--correction", "holm"]).status.success());
}
