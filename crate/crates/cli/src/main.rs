mod config;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use apiknow::docs::{build_kb, load_corpus};
use apiknow::emit::{emit_suite, EmitStyle, Manifest, MANIFEST_FILE};
use apiknow::model::KnowledgeBase;
use apiknow::report::{check_suite, load_checks, render_checks, render_report, CheckRecord, ReportFormat};
use apiknow::resolve::KnownApis;
use apiknow::suite::Backend;
use apiknow::synth::{generate, CoverageFeedback, PriorRun, SynthError};
use apiknow::usage::{
    build_transactions, derive_rules, load_patterns, load_posts, load_transactions, mine_frequent_itemsets,
    save_patterns, save_transactions, PatternIndex, Ratio,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "apiknow", version, about = "Mine API knowledge and generate guided unit tests")]
struct Cli {
    /// TOML file with default paths, thresholds and generation settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a knowledge base from a documentation corpus.
    MineDocs(MineDocs),
    /// Extract API-call transactions from a posts file.
    ExtractUsage(ExtractUsage),
    /// Mine usage patterns from transactions.
    MineUsage(MineUsage),
    /// Generate and emit a test suite for one module.
    Gen(Gen),
    /// Check an emitted suite against a knowledge base.
    Check(Check),
    /// Summarize check results and coverage feedback.
    Report(Report),
}

#[derive(Debug, Args)]
struct MineDocs {
    #[arg(long, value_name = "FILE")]
    docs: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractUsage {
    /// Posts file, one `{"source_id", "fragments"}` object per line.
    #[arg(long, value_name = "FILE")]
    posts: PathBuf,
    /// Known APIs taken from a documentation corpus.
    #[arg(long, value_name = "FILE", conflicts_with = "kb")]
    docs: Option<PathBuf>,
    /// Known APIs taken from a knowledge base.
    #[arg(long, value_name = "FILE")]
    kb: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MineUsage {
    #[arg(long, value_name = "FILE")]
    transactions: Option<PathBuf>,
    /// Minimum support count [default: 2]
    #[arg(long, value_name = "N")]
    min_support: Option<u64>,
    /// Minimum confidence as a decimal [default: 0.5]
    #[arg(long, value_name = "X")]
    min_confidence: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Random,
    Search,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Random => Backend::Random,
            BackendArg::Search => Backend::Search,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Structured,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Structured => ReportFormat::Structured,
        }
    }
}

#[derive(Debug, Args)]
struct Gen {
    #[arg(long, value_name = "FILE")]
    kb: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    patterns: Option<PathBuf>,
    /// Module to test, e.g. `fx.cluster`.
    #[arg(long, value_name = "ID")]
    target: String,
    /// [default: random]
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// [default: 300]
    #[arg(long, value_name = "N")]
    budget_seconds: Option<u64>,
    /// [default: 0]
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Coverage of the suite currently in DIR; seeds the search backend.
    #[arg(long, value_name = "FILE")]
    feedback: Option<PathBuf>,
    /// Generate from signatures alone, ignoring constraints and patterns.
    #[arg(long)]
    blind: bool,
}

#[derive(Debug, Args)]
struct Check {
    #[arg(long, value_name = "FILE")]
    kb: Option<PathBuf>,
    /// Directory holding an emitted suite and its manifest.
    #[arg(long, value_name = "DIR")]
    suite: PathBuf,
    /// Patterns used for the proxy score; none by default.
    #[arg(long, value_name = "FILE")]
    patterns: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Append to the checks file instead of replacing it.
    #[arg(long)]
    append: bool,
}

#[derive(Debug, Args)]
struct Report {
    #[arg(long, value_name = "FILE")]
    checks: PathBuf,
    /// Coverage feedback, one per summarized suite in checks order.
    #[arg(long, value_name = "FILE")]
    feedback: Vec<PathBuf>,
    /// [default: text]
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    MissingInput(PathBuf),
    Schema(anyhow::Error),
    Run(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Run(_) => 1,
            Failure::Usage(_) => 2,
            Failure::MissingInput(_) => 3,
            Failure::Schema(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::MissingInput(p) => write!(f, "missing input file: {}", p.display()),
            Failure::Schema(e) => write!(f, "invalid input: {e:#}"),
            Failure::Run(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Failure {
        Failure::Run(e)
    }
}

type Outcome = Result<(), Failure>;

fn pick(flag: Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> Result<PathBuf, Failure> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| Failure::Usage(format!("--{name} is required (or set paths.{name} in --config)")))
}

fn existing(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::MissingInput(path.to_path_buf()))
    }
}

fn schema<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Schema(e.into()))
}

fn load_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    existing(path)?;
    schema(KnowledgeBase::load(path))
}

fn load_pattern_file(path: &Path) -> Result<PatternIndex, Failure> {
    existing(path)?;
    schema(load_patterns(path))
}

fn load_feedback(path: &Path) -> Result<CoverageFeedback, Failure> {
    existing(path)?;
    schema(CoverageFeedback::load(path))
}

fn load_manifest(dir: &Path) -> Result<Manifest, Failure> {
    existing(&dir.join(MANIFEST_FILE))?;
    schema(Manifest::load(dir))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn mine_docs(a: MineDocs, cfg: &RunConfig) -> Outcome {
    let docs = pick(a.docs, &cfg.paths.docs, "docs")?;
    let out = pick(a.out, &cfg.paths.kb, "out")?;
    existing(&docs)?;
    let records = schema(load_corpus(&docs))?;
    let kb = schema(build_kb(&records))?;
    kb.save(&out).map_err(|e| Failure::Run(e.into()))?;
    println!("mined {} apis from {} records into {}", kb.entries.len(), records.len(), out.display());
    Ok(())
}

fn extract_usage(a: ExtractUsage, cfg: &RunConfig) -> Outcome {
    existing(&a.posts)?;
    let out = pick(a.out, &cfg.paths.transactions, "out")?;
    let known = match (a.docs, a.kb.or_else(|| cfg.paths.kb.clone())) {
        (Some(docs), _) => {
            existing(&docs)?;
            KnownApis::new(schema(load_corpus(&docs))?.into_iter().map(|r| r.api_id))
        }
        (None, Some(kb)) => KnownApis::new(load_kb(&kb)?.entries.into_keys()),
        (None, None) => return Err(Failure::Usage("one of --docs or --kb is required".into())),
    };
    let posts = schema(load_posts(&a.posts))?;
    let transactions = build_transactions(&posts, &known);
    save_transactions(&transactions, &out).map_err(|e| Failure::Run(e.into()))?;
    println!("{} transactions from {} posts into {}", transactions.len(), posts.len(), out.display());
    Ok(())
}

fn mine_usage(a: MineUsage, cfg: &RunConfig) -> Outcome {
    let input = pick(a.transactions, &cfg.paths.transactions, "transactions")?;
    let out = pick(a.out, &cfg.paths.patterns, "out")?;
    let min_support = a.min_support.unwrap_or(cfg.min_support);
    if min_support == 0 {
        return Err(Failure::Usage("--min-support must be at least 1".into()));
    }
    let spelled = a.min_confidence.unwrap_or_else(|| cfg.min_confidence.to_string());
    let min_confidence = Ratio::parse_decimal(&spelled)
        .filter(|r| r.to_f64() <= 1.0)
        .ok_or_else(|| Failure::Usage(format!("--min-confidence {spelled} is not a decimal in [0, 1]")))?;
    existing(&input)?;
    let transactions = schema(load_transactions(&input))?;
    let itemsets = mine_frequent_itemsets(&transactions, min_support);
    let index = PatternIndex::build(&derive_rules(&itemsets, min_confidence));
    save_patterns(&index, &out).map_err(|e| Failure::Run(e.into()))?;
    println!(
        "{} rules from {} frequent itemsets over {} transactions into {}",
        index.len(),
        itemsets.len(),
        transactions.len(),
        out.display()
    );
    Ok(())
}

fn gen(a: Gen, cfg: &RunConfig) -> Outcome {
    let kb_path = pick(a.kb, &cfg.paths.kb, "kb")?;
    let patterns_path = pick(a.patterns, &cfg.paths.patterns, "patterns")?;
    let out = pick(a.out, &cfg.paths.out, "out")?;
    let mut g = cfg.gen.clone();
    if let Some(b) = a.backend {
        g.backend = b.into();
    }
    if let Some(s) = a.budget_seconds {
        g.budget_seconds = s;
    }
    if let Some(s) = a.seed {
        g.seed = s;
    }
    if a.blind {
        g.guided = false;
    }
    let kb = load_kb(&kb_path)?;
    let patterns = load_pattern_file(&patterns_path)?;
    let prior = match a.feedback.or_else(|| cfg.paths.feedback.clone()) {
        Some(fb_path) => {
            let fb = load_feedback(&fb_path)?;
            let previous = load_manifest(&out)?;
            if g.backend == Backend::Random {
                log::warn!("coverage feedback only guides the search backend; ignored");
            }
            Some(PriorRun::new(previous.suite().tests, &fb))
        }
        None => None,
    };
    let suite = generate(&kb, &patterns, &a.target, &g, prior.as_ref()).map_err(|e| match e {
        SynthError::Config(_) | SynthError::EmptyApiSet(_) => Failure::Usage(e.to_string()),
        e => Failure::Run(e.into()),
    })?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    emit_suite(&suite, &out, &EmitStyle::default()).map_err(|e| Failure::Run(e.into()))?;
    println!(
        "{} tests for {} ({} {}, seed {}) into {}",
        suite.tests.len(),
        suite.module,
        suite.backend,
        if suite.guided { "guided" } else { "blind" },
        suite.seed,
        out.display()
    );
    Ok(())
}

fn check(a: Check, cfg: &RunConfig) -> Outcome {
    let kb = load_kb(&pick(a.kb, &cfg.paths.kb, "kb")?)?;
    let out = pick(a.out, &None, "out")?;
    let patterns = match a.patterns {
        Some(p) => load_pattern_file(&p)?,
        None => PatternIndex::empty(),
    };
    let manifest = load_manifest(&a.suite)?;
    let records = check_suite(&manifest.suite(), &kb, &patterns, cfg.gen.proxy_weights);
    let text = render_checks(&records);
    if a.append {
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&out)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .with_context(|| format!("appending to {}", out.display()))?;
    } else {
        write_file(&out, &text)?;
    }
    if let Some(CheckRecord::Summary(s)) = records.first() {
        println!(
            "{}: {} tests, {} invalid ({:.1}%), {} violations, proxy {:.4}",
            s.label(),
            s.tests,
            s.invalid,
            s.invalid_rate * 100.0,
            s.violations,
            s.proxy
        );
    }
    Ok(())
}

fn report(a: Report, cfg: &RunConfig) -> Outcome {
    existing(&a.checks)?;
    let records = schema(load_checks(&a.checks))?;
    let feedback = a
        .feedback
        .iter()
        .map(|p| load_feedback(p))
        .collect::<Result<Vec<_>, _>>()?;
    let format = a.format.map_or(cfg.format, ReportFormat::from);
    let text = render_report(&records, &feedback, format);
    match a.out {
        Some(out) => write_file(&out, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(path) => {
            existing(path)?;
            schema(RunConfig::load(path).map_err(|e| anyhow!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    match cli.command {
        Command::MineDocs(a) => mine_docs(a, &cfg),
        Command::ExtractUsage(a) => extract_usage(a, &cfg),
        Command::MineUsage(a) => mine_usage(a, &cfg),
        Command::Gen(a) => gen(a, &cfg),
        Command::Check(a) => check(a, &cfg),
        Command::Report(a) => report(a, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("APIKNOW_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("apiknow: {f}");
            ExitCode::from(f.code())
        }
    }
}
