//! Store-level runs: every word of a store through one space and a set of
//! metrics, with word-level parallelism and canonical output order.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{
    csv_error, csv_writer, format_real, load_definition_set, read_results, write_results,
    ChangeScoreTable, DefinitionSet, EmbeddingStore, GoldScores, ScoreRow,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_run, k_label, EvalResult};
use crate::hubness::{hubness_report, HubnessStats};
use crate::interpret::{
    lda_direction, lda_report, rank_asymmetry, AsymmetryRecord, LdaDirection, Regularization,
};
use crate::matrix::Matrix;
use crate::metrics::{amd_directional, Metric};
use crate::spaces::{
    apply_space, derive_seed, project_definition_space, stress_schedule, ProjectedPair,
    SpaceConfig, SpaceKind,
};

/// How the target dimension of PCA/RAND spaces is chosen per word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    /// The word's number of definitions.
    PerWordDefs,
    Fixed(usize),
}

impl fmt::Display for KPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPolicy::PerWordDefs => f.write_str("defs"),
            KPolicy::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for KPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "defs" => Ok(KPolicy::PerWordDefs),
            other => match other.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(KPolicy::Fixed(k)),
                _ => Err(Error::Config(format!("k must be 'defs' or a positive integer, got '{s}'"))),
            },
        }
    }
}

/// Resolves the space of every word of a run.
#[derive(Debug, Clone)]
pub struct SpacePlan {
    pub kind: SpaceKind,
    pub k: KPolicy,
    pub master_seed: u64,
    pub defs_dir: Option<PathBuf>,
}

impl SpacePlan {
    pub fn new(kind: SpaceKind, k: KPolicy, master_seed: u64, defs_dir: Option<PathBuf>) -> Self {
        SpacePlan {
            kind,
            k,
            master_seed,
            defs_dir,
        }
    }

    /// Rejects combinations that cannot work for any word.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let needs_defs = match self.kind {
            SpaceKind::Full => false,
            SpaceKind::Def => true,
            SpaceKind::Pca | SpaceKind::Rand => self.k == KPolicy::PerWordDefs,
        };
        if needs_defs && self.defs_dir.is_none() {
            return Err(Error::Config(format!(
                "space '{}' with k={} needs a definitions directory (--defs)",
                self.kind, self.k
            )));
        }
        if let (SpaceKind::Rand, KPolicy::Fixed(k)) = (self.kind, self.k) {
            if k > dim {
                return Err(Error::Config(format!(
                    "random selection of {k} dimensions from a {dim}-dimensional store"
                )));
            }
        }
        Ok(())
    }

    fn definitions(&self, word: &str) -> Result<DefinitionSet> {
        let dir = self
            .defs_dir
            .as_ref()
            .ok_or_else(|| Error::Config("no definitions directory given".into()))?;
        load_definition_set(dir, word)
    }

    pub fn project(&self, word: &str, a: &Matrix, b: &Matrix) -> Result<ProjectedPair> {
        let defs = match (self.kind, self.k) {
            (SpaceKind::Def, _) | (SpaceKind::Pca | SpaceKind::Rand, KPolicy::PerWordDefs) => {
                Some(self.definitions(word)?)
            }
            _ => None,
        };
        let k = match (self.kind, self.k) {
            (SpaceKind::Full | SpaceKind::Def, _) => None,
            (_, KPolicy::Fixed(k)) => Some(k),
            (_, KPolicy::PerWordDefs) => defs.as_ref().map(DefinitionSet::len),
        };
        if let (SpaceKind::Rand, Some(k)) = (self.kind, k) {
            if k > a.cols() {
                return Err(Error::Validation(format!(
                    "word '{word}': k={k} exceeds the dimension {}",
                    a.cols()
                )));
            }
        }
        let config = SpaceConfig {
            kind: self.kind,
            k,
            seed: derive_seed(self.master_seed, word),
        };
        apply_space(a, b, config, defs.as_ref())
    }
}

/// Runs `f` on every word with `jobs` workers (0 = all cores), preserving
/// input order in the output.
pub fn map_words<T, F>(words: &[String], jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&str) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| words.par_iter().map(|w| f(w)).collect()))
}

/// A word left out of a run and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub word: String,
    pub reason: String,
}

type Partitioned<T> = (Vec<(String, T)>, Vec<Skipped>);

/// Splits per-word outcomes; configuration errors abort the whole run.
fn partition<T>(words: &[String], outcomes: Vec<Result<T>>, what: &str) -> Result<Partitioned<T>> {
    let mut done = Vec::new();
    let mut skipped = Vec::new();
    for (word, outcome) in words.iter().zip(outcomes) {
        match outcome {
            Ok(v) => done.push((word.clone(), v)),
            Err(e) if e.is_usage() => return Err(e),
            Err(e) => {
                log::warn!("{what}: skipping word '{word}': {e}");
                skipped.push(Skipped {
                    word: word.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok((done, skipped))
}

/// Seeds whose SAMD scores are averaged for one word.
pub fn samd_seeds(master: u64, repetitions: usize, word: &str) -> Vec<u64> {
    (0..repetitions as u64)
        .map(|r| derive_seed(master.wrapping_add(r), word))
        .collect()
}

/// Scores every word of `store` with every metric in one space.
pub fn score_space(
    store: &EmbeddingStore,
    plan: &SpacePlan,
    metrics: &[Metric],
    repetitions: usize,
    jobs: usize,
) -> Result<(Vec<ChangeScoreTable>, Vec<Skipped>)> {
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be ≥ 1".into()));
    }
    plan.validate(store.dimension())?;
    let words = store.sorted_words();
    let outcomes = map_words(&words, jobs, |word| -> Result<(usize, Vec<f64>)> {
        let (a, b) = store.load_pair(word)?;
        let p = plan.project(word, a.vectors(), b.vectors())?;
        let seeds = samd_seeds(plan.master_seed, repetitions, word);
        let scores = metrics
            .iter()
            .map(|m| m.compute(&p.a, &p.b, &seeds))
            .collect::<Result<Vec<_>>>()?;
        Ok((p.dim(), scores))
    })?;
    let (done, skipped) = partition(&words, outcomes, &format!("{} space", plan.kind))?;
    let tables = metrics
        .iter()
        .enumerate()
        .map(|(idx, &metric)| {
            let mut table = ChangeScoreTable::new(metric, plan.kind, plan.master_seed);
            for (word, (k, scores)) in &done {
                table.rows.insert(word.clone(), ScoreRow { k: *k, score: scores[idx] });
            }
            table
        })
        .collect();
    Ok((tables, skipped))
}

/// Everything `score` needs.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub store: PathBuf,
    pub metrics: Vec<Metric>,
    pub spaces: Vec<SpaceKind>,
    pub k: KPolicy,
    pub defs_dir: Option<PathBuf>,
    pub seed: u64,
    pub repetitions: usize,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

pub fn results_file_name(table: &ChangeScoreTable, k: KPolicy, repetitions: usize) -> String {
    let mut name = format!("{}-{}", table.metric, table.space);
    if matches!(table.space, SpaceKind::Pca | SpaceKind::Rand) {
        name.push_str(&format!("-k{k}"));
    }
    name.push_str(&format!("-s{}", table.seed));
    if repetitions > 1 && table.metric.uses_sampling() {
        name.push_str(&format!("-r{repetitions}"));
    }
    name + ".csv"
}

#[derive(Debug, Clone)]
pub struct ScoreOutput {
    pub files: Vec<PathBuf>,
    pub skipped: Vec<(SpaceKind, Skipped)>,
}

/// Writes one results CSV per (metric, space).
pub fn run_score(spec: &RunSpec) -> Result<ScoreOutput> {
    if spec.metrics.is_empty() || spec.spaces.is_empty() {
        return Err(Error::Config("at least one metric and one space are required".into()));
    }
    let store = EmbeddingStore::open(&spec.store)?;
    for &space in &spec.spaces {
        SpacePlan::new(space, spec.k, spec.seed, spec.defs_dir.clone()).validate(store.dimension())?;
    }
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for &space in &spec.spaces {
        let plan = SpacePlan::new(space, spec.k, spec.seed, spec.defs_dir.clone());
        let (tables, skip) = score_space(&store, &plan, &spec.metrics, spec.repetitions, spec.jobs)?;
        for table in &tables {
            let path = spec.out_dir.join(results_file_name(table, spec.k, spec.repetitions));
            write_results(table, &path)?;
            files.push(path);
        }
        skipped.extend(skip.into_iter().map(|s| (space, s)));
    }
    Ok(ScoreOutput { files, skipped })
}

/// One evaluated results file.
#[derive(Debug)]
pub struct FileEvaluation {
    pub file: PathBuf,
    pub outcome: Result<EvalResult>,
}

/// Label for grouping: the name of the directory holding the file.
pub fn source_label(path: &Path) -> String {
    path.parent()
        .and_then(Path::file_name)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn evaluate_files(files: &[PathBuf], gold: &GoldScores) -> Vec<FileEvaluation> {
    files
        .iter()
        .map(|file| {
            let outcome = read_results(file).and_then(|t| evaluate_run(&t, gold)).map(|mut r| {
                r.source = source_label(file);
                r
            });
            FileEvaluation {
                file: file.clone(),
                outcome,
            }
        })
        .collect()
}

pub const EVAL_HEADER: [&str; 9] = [
    "source", "file", "metric", "space", "k", "seed", "rho", "n_words", "error",
];

pub fn write_evaluations<W: std::io::Write>(evals: &[FileEvaluation], out: W) -> Result<()> {
    let label = Path::new("<evaluation output>");
    let mut w = csv::Writer::from_writer(out);
    let err = |e| csv_error(label, e);
    w.write_record(EVAL_HEADER).map_err(err)?;
    for e in evals {
        let file = e.file.display().to_string();
        let record = match &e.outcome {
            Ok(r) => vec![
                r.source.clone(),
                file,
                r.metric.to_string(),
                r.space.to_string(),
                k_label(r.k),
                r.seed.to_string(),
                format_real(r.rho),
                r.n_words.to_string(),
                String::new(),
            ],
            Err(err) => {
                let mut rec = vec![source_label(&e.file), file];
                rec.extend(std::iter::repeat_n(String::new(), 6));
                rec.push(err.to_string());
                rec
            }
        };
        w.write_record(&record).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(label, e))
}

/// One row of the stress-test output.
#[derive(Debug, Clone, PartialEq)]
pub struct StressRow {
    pub metric: Metric,
    pub space: SpaceKind,
    pub k: usize,
    pub seed: u64,
    /// `NaN` when the correlation is undefined (e.g. constant scores).
    pub rho: f64,
    pub n_words: usize,
}

#[derive(Debug, Clone)]
pub struct StressSpec {
    pub store: PathBuf,
    pub gold: GoldScores,
    pub metrics: Vec<Metric>,
    pub floor: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub jobs: usize,
}

/// PCA and RAND arms at every halved dimension, one row per (metric, arm, K).
pub fn run_stress(spec: &StressSpec) -> Result<Vec<StressRow>> {
    let store = EmbeddingStore::open(&spec.store)?;
    let mut rows = Vec::new();
    for k in stress_schedule(store.dimension(), spec.floor) {
        for space in [SpaceKind::Pca, SpaceKind::Rand] {
            let plan = SpacePlan::new(space, KPolicy::Fixed(k), spec.seed, None);
            let (tables, _) = score_space(&store, &plan, &spec.metrics, spec.repetitions, spec.jobs)?;
            for table in tables {
                let (rho, n_words) = match evaluate_run(&table, &spec.gold) {
                    Ok(r) => (r.rho, r.n_words),
                    Err(e) => {
                        log::warn!("stress {} {space} k={k}: correlation undefined: {e}", table.metric);
                        let shared = table.rows.keys().filter(|w| spec.gold.get(w).is_some()).count();
                        (f64::NAN, shared)
                    }
                };
                rows.push(StressRow {
                    metric: table.metric,
                    space,
                    k,
                    seed: spec.seed,
                    rho,
                    n_words,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_stress(rows: &[StressRow], path: &Path) -> Result<()> {
    let mut out = csv_writer(path)?;
    let err = |e| csv_error(path, e);
    out.write_record(["metric", "space", "k", "seed", "rho", "n_words"]).map_err(err)?;
    for r in rows {
        out.write_record([
            r.metric.to_string(),
            r.space.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            format_real(r.rho),
            r.n_words.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn hubness_table(
    store: &EmbeddingStore,
    plan: &SpacePlan,
    jobs: usize,
) -> Result<(BTreeMap<String, HubnessStats>, Vec<Skipped>)> {
    plan.validate(store.dimension())?;
    let words = store.sorted_words();
    let outcomes = map_words(&words, jobs, |word| {
        let (a, b) = store.load_pair(word)?;
        let p = plan.project(word, a.vectors(), b.vectors())?;
        hubness_report(&p.a, &p.b)
    })?;
    let (done, skipped) = partition(&words, outcomes, "hubness")?;
    Ok((done.into_iter().collect(), skipped))
}

pub fn write_hubness(stats: &BTreeMap<String, HubnessStats>, space: SpaceKind, path: &Path) -> Result<()> {
    let mut out = csv_writer(path)?;
    let err = |e| csv_error(path, e);
    out.write_record(["word", "space", "dominant_share", "unused_share", "avg_load"])
        .map_err(err)?;
    for (word, s) in stats {
        out.write_record([
            word.as_str(),
            space.name(),
            &format_real(s.dominant_share),
            &format_real(s.unused_share),
            &format_real(s.avg_load),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn asymmetry_record(
    store: &EmbeddingStore,
    plan: &SpacePlan,
    word: &str,
    epsilon: f64,
) -> Result<AsymmetryRecord> {
    let (a, b) = store.load_pair(word)?;
    let p = plan.project(word, a.vectors(), b.vectors())?;
    Ok(AsymmetryRecord::new(word, amd_directional(&p.a, &p.b)?, epsilon))
}

/// Words by decreasing directional AMD asymmetry.
pub fn asymmetry_ranking(
    store: &EmbeddingStore,
    plan: &SpacePlan,
    epsilon: f64,
    jobs: usize,
) -> Result<(Vec<AsymmetryRecord>, Vec<Skipped>)> {
    plan.validate(store.dimension())?;
    let words = store.sorted_words();
    let outcomes = map_words(&words, jobs, |word| asymmetry_record(store, plan, word, epsilon))?;
    let (done, skipped) = partition(&words, outcomes, "asymmetry")?;
    let mut records: Vec<_> = done.into_iter().map(|(_, r)| r).collect();
    rank_asymmetry(&mut records);
    Ok((records, skipped))
}

#[derive(Debug, Clone)]
pub struct Explanation {
    pub record: AsymmetryRecord,
    pub direction: LdaDirection,
    pub report: String,
}

/// Asymmetry record plus LDA over the word's definition space.
pub fn explain_word(
    store: &EmbeddingStore,
    plan: &SpacePlan,
    defs_dir: &Path,
    word: &str,
    m: usize,
    reg: Regularization,
    epsilon: f64,
) -> Result<Explanation> {
    if !store.contains(word) {
        return Err(Error::Config(format!("word '{word}' is not in the store")));
    }
    let defs = load_definition_set(defs_dir, word)?;
    if m == 0 || m > defs.len() {
        return Err(Error::Config(format!(
            "m={m} is outside 1..={} for word '{word}'",
            defs.len()
        )));
    }
    let record = asymmetry_record(store, plan, word, epsilon)?;
    let (a, b) = store.load_pair(word)?;
    let projected = project_definition_space(a.vectors(), b.vectors(), &defs)?;
    let direction = lda_direction(&projected.a, &projected.b, reg)?;
    let report = lda_report(&record, &direction, &defs, m)?;
    Ok(Explanation {
        record,
        direction,
        report,
    })
}
