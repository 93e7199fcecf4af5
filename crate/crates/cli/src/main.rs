use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{ConfigError, PipelineConfig};

/// Corpus construction and MT evaluation pipeline for low-resource language triples.
#[derive(Debug, Parser)]
#[command(name = "tricorpus", disable_version_flag = true)]
pub struct Cli {
    /// Flat `key = value` config file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages (0 = all cores)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Directory of `<lang>.txt` abbreviation lists
    #[arg(long, global = true, value_name = "DIR")]
    pub abbrev_dir: Option<PathBuf>,

    /// Random seed
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Print the effective configuration and exit
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Print version and config hash
    #[arg(short = 'V', long)]
    pub version: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Repair mojibake and normalize a raw text file
    Clean(CleanArgs),
    /// Split cleaned text into filtered, deduplicated sentences
    SplitSentences(SplitSentencesArgs),
    /// Align verse-keyed documents into parallel units
    AlignVerses(AlignVersesArgs),
    /// Align two documents from sentence embeddings
    Align(AlignArgs),
    /// Learn a BPE model from monolingual text
    LearnBpe(LearnBpeArgs),
    /// Extend a base vocabulary with a new language's BPE model
    ExtendVocab(ExtendVocabArgs),
    /// Stratified train/holdout split
    Split(SplitArgs),
    /// Assemble the training set of one experiment
    Assemble(AssembleArgs),
    /// Export a holdout batch as an `id,text` CSV for an LLM
    ExportLlm(ExportLlmArgs),
    /// Read LLM responses and separate translations from refusals
    IngestLlm(IngestLlmArgs),
    /// Score a hypothesis file against a reference file
    Score(ScoreArgs),
    /// Direction × source score tables from evaluation records
    Report(ReportArgs),
    /// Unit counts per source and language set
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Input file
    #[arg(long)]
    pub input: PathBuf,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitSentencesArgs {
    /// Input file
    #[arg(long)]
    pub input: PathBuf,
    /// Language tag, e.g. rus_Cyrl
    #[arg(long)]
    pub lang: String,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum word tokens per kept sentence
    #[arg(long)]
    pub min_words: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AlignVersesArgs {
    /// `LANG=PATH` verse file (`key<TAB>text` lines); give two or more
    #[arg(long = "doc", required = true, value_name = "LANG=PATH")]
    pub docs: Vec<String>,
    /// Source name, e.g. bible, quran, qusar
    #[arg(long)]
    pub source: String,
    /// Prefix for unit ids
    #[arg(long, default_value = "")]
    pub id_prefix: String,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Source EMB1 file (ids in `<file>.ids`)
    #[arg(long)]
    pub src: PathBuf,
    /// Target EMB1 file
    #[arg(long)]
    pub tgt: PathBuf,
    /// Source sentences, one per line in row order
    #[arg(long)]
    pub src_text: PathBuf,
    /// Target sentences, one per line in row order
    #[arg(long)]
    pub tgt_text: PathBuf,
    /// Cost of a 1-0 or 0-1 bead
    #[arg(long)]
    pub skip_penalty: Option<f64>,
    /// Neighbors for margin scoring
    #[arg(long)]
    pub margin_k: Option<usize>,
    /// Similarity below which pairs are flagged low-confidence
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LearnBpeArgs {
    /// Number of merges to learn
    #[arg(long)]
    pub merges: Option<usize>,
    /// Input file
    #[arg(long)]
    pub input: PathBuf,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
    /// End-of-word marker
    #[arg(long)]
    pub end_of_word: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtendVocabArgs {
    /// Base BPE model (JSON)
    #[arg(long)]
    pub base: PathBuf,
    /// BPE model of the new language (JSON)
    #[arg(long)]
    pub new: PathBuf,
    /// Special token added for the new language
    #[arg(long)]
    pub lang_code: String,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Corpus file (.jsonl or .tsv)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Holdout size in units
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Corpus file (.jsonl or .tsv)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Split file written by `split`
    #[arg(long)]
    pub split: PathBuf,
    /// Experiment preset 1-4
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub experiment: u8,
    /// Back-translated units (JSONL), required by experiment 4
    #[arg(long)]
    pub bt: Option<PathBuf>,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportLlmArgs {
    /// Corpus file (.jsonl or .tsv)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Split file written by `split`
    #[arg(long)]
    pub split: PathBuf,
    /// Source name, e.g. bible, quran, qusar
    #[arg(long)]
    pub source: String,
    /// Number of sentences
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Language of the exported text
    #[arg(long)]
    pub src_lang: String,
    /// Language the text should be translated into
    #[arg(long)]
    pub tgt_lang: String,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestLlmArgs {
    /// Response CSV with `id,text` header
    #[arg(long)]
    pub responses: PathBuf,
    /// The exported batch CSV listing the expected ids
    #[arg(long)]
    pub batch: PathBuf,
    /// Language the responses should be in
    #[arg(long)]
    pub tgt_lang: String,
    /// Case-insensitive substring marking a refusal (repeatable)
    #[arg(long = "refusal-pattern")]
    pub refusal_patterns: Vec<String>,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Hypotheses, one per line
    #[arg(long)]
    pub hyp: PathBuf,
    /// References, one per line, parallel to --hyp
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Direction label such as lez-rus
    #[arg(long)]
    pub direction: Option<String>,
    /// Source name recorded with the scores
    #[arg(long)]
    pub source: Option<String>,
    /// bleu, chrfpp or both
    #[arg(long)]
    pub metric: Option<String>,
    /// Also write scores as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSONL of {direction, source, hypothesis, reference}
    #[arg(long)]
    pub pairs: PathBuf,
    /// bleu, chrfpp or both
    #[arg(long)]
    pub metric: Option<String>,
    /// Also write the tables as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus file (.jsonl or .tsv)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also write the counts as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Problems detected before any stage runs.
#[derive(Debug)]
pub enum UsageError {
    MissingInput(PathBuf),
    MissingOutputDir(PathBuf),
    NoCommand,
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UsageError::MissingInput(p) => write!(f, "input not found: {}", p.display()),
            UsageError::MissingOutputDir(p) => write!(f, "output directory does not exist: {}", p.display()),
            UsageError::NoCommand => write!(f, "no subcommand given; see --help"),
        }
    }
}

impl std::error::Error for UsageError {}

fn effective_config(cli: &Cli) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.abbrev_dir {
        cfg.abbrev_dir = Some(d.clone());
    }
    let mut set = |key: &str, v: Option<String>| match v {
        Some(v) => cfg.set(key, &v),
        None => Ok(()),
    };
    match &cli.command {
        Some(Command::SplitSentences(a)) => set("min_words", a.min_words.map(|v| v.to_string()))?,
        Some(Command::Align(a)) => {
            set("skip_penalty", a.skip_penalty.map(|v| v.to_string()))?;
            set("margin_k", a.margin_k.map(|v| v.to_string()))?;
            set("low_confidence", a.threshold.map(|v| v.to_string()))?;
        }
        Some(Command::LearnBpe(a)) => {
            set("merges", a.merges.map(|v| v.to_string()))?;
            set("end_of_word", a.end_of_word.clone())?;
        }
        Some(Command::Split(a)) => set("holdout", a.holdout.map(|v| v.to_string()))?,
        Some(Command::Score(a)) => set("metric", a.metric.clone())?,
        Some(Command::Report(a)) => set("metric", a.metric.clone())?,
        _ => {}
    }
    cfg.check()?;
    Ok(cfg)
}

/// Checks every input exists and every output has an existing parent.
fn validate_paths(cmd: &Command, cfg: &PipelineConfig) -> Result<(), UsageError> {
    let (inputs, outputs) = commands::paths(cmd);
    let mut inputs: Vec<&Path> = inputs;
    if let Some(d) = &cfg.abbrev_dir {
        inputs.push(d);
    }
    for p in inputs {
        if !p.exists() {
            return Err(UsageError::MissingInput(p.to_path_buf()));
        }
    }
    for p in outputs {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(UsageError::MissingOutputDir(dir.to_path_buf()));
            }
        }
    }
    Ok(())
}

fn error_code(err: &anyhow::Error) -> &'static str {
    use tricorpus::{align, bpe, corpus, experiments, metrics, verses};
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return "usage";
        }
        if cause.is::<ConfigError>() {
            return "config";
        }
        if cause.is::<corpus::CorpusError>() {
            return "corpus";
        }
        if cause.is::<verses::VerseError>() {
            return "verses";
        }
        if cause.is::<align::AlignError>() {
            return "align";
        }
        if cause.is::<bpe::BpeError>() {
            return "bpe";
        }
        if cause.is::<metrics::MetricsError>() {
            return "metrics";
        }
        if cause.is::<experiments::ExperimentError>() {
            return "experiment";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "error"
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = effective_config(&cli)?;
    if cli.version {
        println!("tricorpus {} config-sha256 {}", env!("CARGO_PKG_VERSION"), cfg.hash());
        return Ok(());
    }
    if cli.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let cmd = cli.command.as_ref().ok_or(UsageError::NoCommand)?;
    validate_paths(cmd, &cfg)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    commands::execute(cmd, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error[usage]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = error_code(&e);
            eprintln!("error[{code}]: {}", one_line(&format!("{e:#}")));
            ExitCode::from(if code == "usage" { 2 } else { 1 })
        }
    }
}
