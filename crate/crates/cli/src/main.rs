use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use hsmod_core::corpus::{import_marked_file, read_corpus, Corpus, Label};
use hsmod_core::curation::{
    run_pipeline, MockProvider, PipelineOptions, ProviderConfig, DEFAULT_K, DEFAULT_THRESHOLD,
};
use hsmod_core::experiment::{assign_groups, Participant};
use hsmod_core::report::{build_report, load_archives, Correction, ReportOptions, DEFAULT_ALPHA};
use hsmod_core::synthetic;

mod live;

#[derive(Parser)]
#[command(name = "hsmod", version, about = "Hate-speech modification study toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Live,
    Mock,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file and print a one-line summary.
    Validate {
        corpus: PathBuf,
    },
    /// Convert the tab-separated marked format into a corpus file.
    ImportMarked {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate, filter and select paraphrase alternatives.
    ///
    /// Live mode reads HSMOD_GEN_API_KEY and HSMOD_EMB_API_KEY, plus the optional
    /// HSMOD_GEN_URL, HSMOD_GEN_MODEL, HSMOD_EMB_URL and HSMOD_EMB_MODEL.
    Curate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "mock")]
        provider: Provider,
        /// Directory with generations.jsonl and embeddings.jsonl (mock mode).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Where to write the per-candidate audit log (JSON Lines).
        #[arg(long)]
        audit: PathBuf,
    },
    /// Assign a cohort to the four conditions by hate sensitivity.
    Assign {
        /// Participants, one JSON object per line.
        participants: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the study report from exported session archives.
    Analyze {
        #[arg(long)]
        archives: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value = "bonferroni")]
        correction: Correction,
    },
    /// Write the synthetic fixture corpus and matching mock provider fixtures.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run simulated participants in-process and export their archives.
    Simulate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        per_group: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Serve the session API.
    Serve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Shuffle task order per session.
        #[arg(long)]
        shuffle: bool,
        /// Skip fsync after each logged event.
        #[arg(long)]
        no_fsync: bool,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> anyhow::Result<Corpus> {
    read_corpus(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Validate { corpus } => {
            let c = load(&corpus)?;
            let hate = c.labels().values().filter(|&&l| l == Label::Hate).count();
            println!("ok: {} comments ({hate} hate), digest {}", c.len(), c.digest());
        }
        Command::ImportMarked { input, out } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let c = import_marked_file(&text, &input.display().to_string())?;
            write(&out, &c.to_jsonl())?;
            println!("imported {} comments", c.len());
        }
        Command::Curate { corpus, out, provider, fixtures, threshold, k, audit } => {
            let input = load(&corpus)?;
            let opts = PipelineOptions { threshold, k, ..PipelineOptions::default() };
            let result = match provider {
                Provider::Mock => {
                    let Some(dir) = fixtures else { bail!("--provider mock requires --fixtures") };
                    ProviderConfig::mock(&dir).validate(|k| std::env::var(k).ok())?;
                    let mock = MockProvider::load(&dir)?;
                    run_pipeline(&input, &mock, &mock, &opts)?
                }
                Provider::Live => {
                    let (g, e) = live::endpoints_from_env();
                    ProviderConfig::live(g.clone(), e.clone()).validate(|k| std::env::var(k).ok())?;
                    tracing::info!(generation = %g.url, model = %g.model, embedding = %e.url, "live provider");
                    run_pipeline(&input, &live::LiveGeneration::new(&g)?, &live::LiveEmbedding::new(&e)?, &opts)?
                }
            };
            write(&out, &result.corpus.to_jsonl())?;
            write(&audit, &result.audit_jsonl())?;
            for w in &result.warnings {
                tracing::warn!(comment = %w.comment_id, span = %w.span_id, candidates = w.candidates, "unexpected candidate count");
            }
            for f in &result.flagged {
                tracing::warn!(comment = %f.comment_id, span = %f.span_id, "fewer than k candidates retained");
            }
            if !result.failures.is_empty() {
                let path = audit.with_extension("failures.jsonl");
                write(&path, &result.failures_jsonl())?;
                tracing::warn!(count = result.failures.len(), path = %path.display(), "work items failed");
            }
            println!(
                "curated {} comments: {} audit rows, {} failures, {} flagged",
                result.corpus.len(),
                result.audit.len(),
                result.failures.len(),
                result.flagged.len()
            );
        }
        Command::Assign { participants, out } => {
            let text = fs::read_to_string(&participants)?;
            let ps = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| serde_json::from_str::<Participant>(l).with_context(|| format!("line {}", i + 1)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let a = assign_groups(&ps)?;
            let json = serde_json::to_string_pretty(&a)? + "\n";
            match out {
                Some(p) => write(&p, &json)?,
                None => print!("{json}"),
            }
        }
        Command::Analyze { archives, out, alpha, correction } => {
            let list = load_archives(&archives)?;
            let report = build_report(&list, &ReportOptions { alpha, correction, ..ReportOptions::default() })?;
            report.write_to(&out)?;
            println!("analyzed {} archives into {}", list.len(), out.display());
        }
        Command::Fixtures { out } => {
            let corpus = synthetic::fixture_corpus();
            let stripped = synthetic::strip_alternatives(&corpus);
            let (g, e) = synthetic::mock_fixtures(&corpus);
            write(&out.join("corpus.jsonl"), &corpus.to_jsonl())?;
            write(&out.join("corpus.stripped.jsonl"), &stripped.to_jsonl())?;
            MockProvider::save(&out.join("mock"), &g, &e)?;
            println!("wrote {} comments and {} generation fixtures to {}", corpus.len(), g.len(), out.display());
        }
        Command::Simulate { corpus, out, per_group, seed } => {
            let c = load(&corpus)?;
            fs::create_dir_all(&out)?;
            let list = synthetic::simulate_study(&c, per_group, seed);
            for a in &list {
                write(&out.join(format!("{}.json", a.init.session_id)), &a.to_json())?;
            }
            println!("simulated {} sessions into {}", list.len(), out.display());
        }
        Command::Serve { corpus, data, addr, shuffle, no_fsync } => {
            let c = load(&corpus)?;
            let cfg = hsmod_server::ServerConfig { shuffle, fsync: !no_fsync, ..hsmod_server::ServerConfig::new(data, c) };
            let state = hsmod_server::AppState::open(cfg)?;
            tokio::runtime::Runtime::new()?.block_on(hsmod_server::serve(state, addr))?;
        }
    }
    Ok(())
}
