//! `linkgram`: parse, generate, estimate, fit, score, and critique
//! link-grammar language models from line-oriented text files.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

/// Exit status contract: 0 success, 1 input or validation error, 2 some
/// sentences failed while the rest were processed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    Partial,
}

#[derive(Parser, Debug)]
#[command(name = "linkgram", version, about = "Link-grammar language models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate linkages for one sentence or a corpus of sentences.
    Parse(ParseArgs),
    /// Sample sentence trees from a source or model file.
    Generate(GenerateArgs),
    /// Estimate a source from a linkage or tree corpus.
    Estimate(EstimateArgs),
    /// Fit a path-conditioned model of a given order to a tree corpus.
    Fit(FitArgs),
    /// Score trees exactly and under the single-parent approximation.
    Score(ScoreArgs),
    /// Measure how far a context-dependent model is from its order-1 projection.
    Critique(CritiqueArgs),
    /// Maximum total-PMI projective dependency parsing.
    Mst(MstArgs),
    /// Spectral-radius test for almost-sure finite generation.
    CheckFinite(CheckFiniteArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ParseModeArg {
    Strict,
    Tt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GenModeArg {
    Permissive,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ambiguous {
    /// Count the first linkage in canonical order.
    First,
    /// Count every linkage with weight 1/k.
    AllUniform,
    /// Drop sentences with more than one linkage.
    Skip,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["sentence", "corpus"])))]
pub struct ParseArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub sentence: Option<String>,
    /// One whitespace-tokenized sentence per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tt")]
    pub mode: ParseModeArg,
    #[arg(long, default_value_t = linkgram::linkage::DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerationArgs {
    #[arg(long, default_value_t = linkgram::source::DEFAULT_NODE_CAP)]
    pub node_cap: usize,
    #[arg(long, value_enum, default_value = "permissive")]
    pub mode: GenModeArg,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("tables").required(true).args(["source", "model"])))]
pub struct GenerateArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of trees.
    #[arg(short = 'n', long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Root every tree at this term instead of the file's or uniform roots.
    #[arg(long)]
    pub root: Option<String>,
    #[command(flatten)]
    pub generation: GenerationArgs,
    /// Margin below 1 at which the spectral radius triggers a warning.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write a heuristic linearization, one sentence per line.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("corpus").required(true).args(["linkages", "trees"])))]
pub struct EstimateArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub linkages: Option<PathBuf>,
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "first")]
    pub ambiguous: Ambiguous,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub trees: PathBuf,
    /// Path order: a positive integer or `inf`.
    #[arg(long, default_value = "2")]
    pub order: String,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("tables").required(true).args(["source", "model"])))]
pub struct ScoreArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub trees: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CritiqueArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Trees sampled for the divergence estimate.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Sentences per corpus in the attachment experiment.
    #[arg(long, default_value_t = 1_000)]
    pub sentences: usize,
    /// PMI co-occurrence window.
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    /// Comma-separated interpolation strengths.
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    pub sweep: String,
    /// Largest support to enumerate exactly; 0 disables enumeration.
    #[arg(long, default_value_t = 100_000)]
    pub enumeration_limit: usize,
    #[arg(long, default_value_t = 5)]
    pub worst: usize,
    #[command(flatten)]
    pub generation: GenerationArgs,
    /// Run on an order-1 model anyway, as a control.
    #[arg(long)]
    pub allow_order1: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub metrics: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["corpus", "trees"])))]
pub struct MstArgs {
    /// One whitespace-tokenized sentence per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Gold trees; their linearizations are parsed and scored.
    #[arg(long, requires = "lexicon")]
    pub trees: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    /// Write the PMI table here.
    #[arg(long)]
    pub pmi: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckFiniteArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Parse(a) => commands::parse(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Score(a) => commands::score(&a),
        Command::Critique(a) => commands::critique(&a),
        Command::Mst(a) => commands::mst(&a),
        Command::CheckFinite(a) => commands::check_finite(&a),
    };
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
