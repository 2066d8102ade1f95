//! `lexshift` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    load_definition_set, load_gold_scores, write_definition_set, write_gold_scores, write_store,
    EmbeddingStore,
};
use crate::error::{Error, Result};
use crate::eval::{aggregate, write_summary, GroupKey};
use crate::interpret::{write_asymmetry_csv, Regularization};
use crate::metrics::Metric;
use crate::pipeline::{
    asymmetry_ranking, evaluate_files, explain_word, hubness_table, run_score, run_stress,
    write_evaluations, write_hubness, write_stress, RunSpec, SpacePlan, StressSpec,
};
use crate::spaces::{SpaceKind, DEFAULT_STRESS_FLOOR};
use crate::synth::{synth_store, ScenarioKind, SynthStoreConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lexshift", version, about = "Graded lexical semantic change from usage embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every word of a store; one CSV per (metric, space).
    Score(ScoreArgs),
    /// Spearman correlation of result CSVs against gold scores.
    Evaluate(EvaluateArgs),
    /// Halve the dimension with PCA and random selection, report correlations.
    Stress(StressArgs),
    /// Nearest-neighbour hubness statistics per word.
    Hubness(HubnessArgs),
    /// Directional AMD asymmetry and LDA over definitions.
    Explain(ExplainArgs),
    /// Write a synthetic store with definitions and gold scores.
    Synth(SynthArgs),
    /// Load and check every matrix of a store.
    ValidateStore(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Embedding store directory (holds manifest.json).
    #[arg(long)]
    pub store: PathBuf,
    /// Directory with <word>/definitions.{txt,emb}.
    #[arg(long)]
    pub defs: Option<PathBuf>,
    /// Master seed for all sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_values_t = Metric::MAIN.map(|m| m.to_string()))]
    pub metric: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "full")]
    pub space: Vec<String>,
    /// Target dimension for pca/rand: `defs` (per-word definition count) or an integer.
    #[arg(long, default_value = "defs")]
    pub k: String,
    /// SAMD samples averaged per word (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Results CSVs written by `score`.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub gold: PathBuf,
    /// Per-file output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Aggregate keys among source, metric, space, k, seed.
    #[arg(long, value_delimiter = ',')]
    pub group_by: Vec<String>,
    /// Aggregate summary CSV (default: stdout after the per-file table).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StressArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = Metric::MAIN.map(|m| m.to_string()))]
    pub metric: Vec<String>,
    /// Smallest dimension kept.
    #[arg(long, default_value_t = DEFAULT_STRESS_FLOOR)]
    pub floor: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HubnessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "full")]
    pub space: String,
    #[arg(long, default_value = "defs")]
    pub k: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Words to explain; each gets an LDA report (needs --defs).
    #[arg(long)]
    pub word: Vec<String>,
    /// Definitions listed per side.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Space for the directional AMD comparison.
    #[arg(long, default_value = "full")]
    pub space: String,
    #[arg(long, default_value = "defs")]
    pub k: String,
    /// Fixed LDA ridge; default 1e-3 · trace(S_w) / K.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Asymmetries up to this size are labelled BALANCED.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Write the asymmetry ranking of all words here.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// Write LDA reports here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "shift")]
    pub scenario: String,
    #[arg(long, default_value_t = 20)]
    pub words: usize,
    #[arg(long, default_value_t = crate::synth::DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = 40)]
    pub n_usages: usize,
    #[arg(long, default_value_t = 0.05)]
    pub spread: f64,
    #[arg(long, default_value_t = 6)]
    pub defs_per_word: usize,
    /// Stable scenario only: period 2 is a copy of period 1.
    #[arg(long)]
    pub identical: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub defs: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.parse()).collect()
}

fn lambda(arg: Option<f64>) -> Regularization {
    arg.map_or(Regularization::Auto, Regularization::Fixed)
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Stress(args) => cmd_stress(args),
        Command::Hubness(args) => cmd_hubness(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Synth(args) => cmd_synth(args),
        Command::ValidateStore(args) => cmd_validate(args),
    }
}

fn cmd_score(args: ScoreArgs) -> Result<i32> {
    let spec = RunSpec {
        store: args.common.store,
        metrics: parse_list(&args.metric)?,
        spaces: parse_list(&args.space)?,
        k: args.k.parse()?,
        defs_dir: args.common.defs,
        seed: args.common.seed,
        repetitions: args.repetitions,
        out_dir: args.out,
        jobs: args.common.jobs,
    };
    let output = run_score(&spec)?;
    for file in &output.files {
        println!("{}", file.display());
    }
    for (space, s) in &output.skipped {
        eprintln!("skipped {} in {space} space: {}", s.word, s.reason);
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32> {
    let gold = load_gold_scores(&args.gold)?;
    let evals = evaluate_files(&args.results, &gold);
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_evaluations(&evals, file)?;
        }
        None => write_evaluations(&evals, std::io::stdout().lock())?,
    }
    let mut failed = false;
    for e in &evals {
        match &e.outcome {
            Ok(r) if !r.missing.is_empty() => eprintln!(
                "warning: {}: {} words missing from scores or gold",
                e.file.display(),
                r.missing.len()
            ),
            Ok(_) => {}
            Err(err) => {
                failed = true;
                eprintln!("error: {}: {err}", e.file.display());
            }
        }
    }
    if !args.group_by.is_empty() {
        let results: Vec<_> = evals.iter().filter_map(|e| e.outcome.as_ref().ok().cloned()).collect();
        let keys: Vec<&str> = args.group_by.iter().map(String::as_str).collect();
        if !results.is_empty() {
            let rows = aggregate(&results, &keys)?;
            match &args.summary {
                Some(path) => {
                    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
                    write_summary(&rows, &keys, file)?;
                }
                None => write_summary(&rows, &keys, std::io::stdout().lock())?,
            }
        } else {
            // validate the keys even when nothing could be aggregated
            for key in &keys {
                GroupKey::parse(key)?;
            }
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

fn cmd_stress(args: StressArgs) -> Result<i32> {
    let spec = StressSpec {
        store: args.store,
        gold: load_gold_scores(&args.gold)?,
        metrics: parse_list(&args.metric)?,
        floor: args.floor,
        seed: args.seed,
        repetitions: args.repetitions,
        jobs: args.jobs,
    };
    let rows = run_stress(&spec)?;
    write_stress(&rows, &args.out)?;
    Ok(EXIT_OK)
}

fn cmd_hubness(args: HubnessArgs) -> Result<i32> {
    let store = EmbeddingStore::open(&args.common.store)?;
    let space: SpaceKind = args.space.parse()?;
    let plan = SpacePlan::new(space, args.k.parse()?, args.common.seed, args.common.defs);
    let (stats, skipped) = hubness_table(&store, &plan, args.common.jobs)?;
    write_hubness(&stats, space, &args.out)?;
    for s in skipped {
        eprintln!("skipped {}: {}", s.word, s.reason);
    }
    Ok(EXIT_OK)
}

fn cmd_explain(args: ExplainArgs) -> Result<i32> {
    let store = EmbeddingStore::open(&args.common.store)?;
    let plan = SpacePlan::new(
        args.space.parse()?,
        args.k.parse()?,
        args.common.seed,
        args.common.defs.clone(),
    );
    plan.validate(store.dimension())?;
    if args.word.is_empty() && args.ranking.is_none() {
        return Err(Error::Config("give --word and/or --ranking".into()));
    }
    if let Some(path) = &args.ranking {
        let (records, skipped) = asymmetry_ranking(&store, &plan, args.epsilon, args.common.jobs)?;
        write_asymmetry_csv(&records, path)?;
        for s in skipped {
            eprintln!("skipped {}: {}", s.word, s.reason);
        }
    }
    if args.word.is_empty() {
        return Ok(EXIT_OK);
    }
    let defs_dir = args
        .common
        .defs
        .as_ref()
        .ok_or_else(|| Error::Config("explaining a word needs --defs".into()))?;
    let mut text = String::new();
    for word in &args.word {
        let e = explain_word(&store, &plan, defs_dir, word, args.m, lambda(args.lambda), args.epsilon)?;
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&e.report);
    }
    match &args.report {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_synth(args: SynthArgs) -> Result<i32> {
    let cfg = SynthStoreConfig {
        kind: args.scenario.parse::<ScenarioKind>()?,
        words: args.words,
        dim: args.dim,
        n_usages: args.n_usages,
        spread: args.spread,
        defs_per_word: args.defs_per_word,
        identical: args.identical,
        seed: args.seed,
    };
    let synth = synth_store(&cfg)?;
    write_store(&args.out, "synthetic", &format!("synthetic-{}", cfg.kind), &synth.entries)?;
    for defs in &synth.definitions {
        write_definition_set(&args.out, defs)?;
    }
    write_gold_scores(args.out.join("gold.tsv"), &synth.gold)?;
    println!("{}", args.out.display());
    Ok(EXIT_OK)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let store = EmbeddingStore::open(&args.store)?;
    let mut problems = 0usize;
    for word in store.sorted_words() {
        if let Err(e) = store.load_pair(&word) {
            problems += 1;
            eprintln!("error: {e}");
        }
        if let Some(dir) = &args.defs {
            match load_definition_set(dir, &word) {
                Ok(defs) if defs.dim() != store.dimension() => {
                    problems += 1;
                    eprintln!(
                        "error: word '{word}': definition dimension {} differs from store dimension {}",
                        defs.dim(),
                        store.dimension()
                    );
                }
                Ok(_) => {}
                Err(e) => {
                    problems += 1;
                    eprintln!("error: {e}");
                }
            }
        }
    }
    let m = store.manifest();
    println!(
        "{}: {} words, dimension {}, encoder '{}', language '{}', {problems} problems",
        args.store.display(),
        m.words.len(),
        m.dimension,
        m.encoder_name,
        m.language
    );
    Ok(if problems == 0 { EXIT_OK } else { EXIT_FAILURE })
}
