//! Embedding stores, definition sets, gold scores and result tables.
//!
//! On-disk layout of a store:
//!
//! ```text
//! <root>/manifest.json
//! <root>/<word>/1.emb          period 1 usages
//! <root>/<word>/2.emb          period 2 usages
//! <defs>/<word>/definitions.txt
//! <defs>/<word>/definitions.emb
//! ```
//!
//! `.emb` files hold the magic `EMB1`, a little-endian `u32` row count, a
//! little-endian `u32` dimension, then `rows × dim` little-endian `f32`
//! values in row-major order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::Metric;
use crate::spaces::SpaceKind;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
const EMB_HEADER_LEN: usize = 12;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_HEADER: [&str; 6] = ["word", "metric", "space", "k", "seed", "score"];

/// Time period of a usage set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Period {
    First,
    Second,
}

impl Period {
    pub fn number(self) -> u8 {
        match self {
            Period::First => 1,
            Period::Second => 2,
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            Period::First => "1.emb",
            Period::Second => "2.emb",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "period {}", self.number())
    }
}

// ---------------------------------------------------------------------------
// Binary matrix files

/// Reads only the `(rows, dim)` header of an `.emb` file.
pub fn read_emb_header(path: &Path) -> Result<(usize, usize)> {
    use std::io::Read;
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; EMB_HEADER_LEN];
    file.read_exact(&mut header)
        .map_err(|_| Error::format(path, "file shorter than the 12-byte header"))?;
    parse_header(path, &header)
}

fn parse_header(path: &Path, header: &[u8]) -> Result<(usize, usize)> {
    if &header[0..4] != EMB_MAGIC {
        return Err(Error::format(path, "bad magic, expected EMB1"));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    Ok((rows, dim))
}

/// Reads a whole `.emb` file. Values are widened from `f32` exactly.
pub fn read_emb(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < EMB_HEADER_LEN {
        return Err(Error::format(path, "file shorter than the 12-byte header"));
    }
    let (rows, dim) = parse_header(path, &bytes[..EMB_HEADER_LEN])?;
    let payload = &bytes[EMB_HEADER_LEN..];
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(path, "header sizes overflow"))?;
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "payload is {} bytes, header promises {rows}×{dim} f32 ({expected} bytes)",
                payload.len()
            ),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Matrix::new(rows, dim, data)
}

/// Writes a matrix as an `.emb` file, narrowing values to `f32`.
pub fn write_emb(path: &Path, matrix: &Matrix) -> Result<()> {
    let rows = u32::try_from(matrix.rows())
        .map_err(|_| Error::Validation("row count exceeds u32".into()))?;
    let dim = u32::try_from(matrix.cols())
        .map_err(|_| Error::Validation("dimension exceeds u32".into()))?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));
    write(EMB_MAGIC)?;
    write(&rows.to_le_bytes())?;
    write(&dim.to_le_bytes())?;
    for &x in matrix.as_slice() {
        write(&(x as f32).to_le_bytes())?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Usage sets and stores

/// The usage embeddings of one word in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageEmbeddingSet {
    word: String,
    period: Period,
    vectors: Matrix,
}

impl UsageEmbeddingSet {
    /// Validates that the set is non-empty, finite and has no zero rows.
    pub fn new(word: impl Into<String>, period: Period, vectors: Matrix) -> Result<Self> {
        let word = word.into();
        if vectors.rows() == 0 {
            return Err(Error::Validation(format!(
                "word '{word}', {period}: usage set has no rows"
            )));
        }
        if vectors.cols() == 0 {
            return Err(Error::Validation(format!(
                "word '{word}', {period}: dimension is 0"
            )));
        }
        if vectors.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "word '{word}', {period}: non-finite value"
            )));
        }
        if let Some(row) = vectors.first_zero_row() {
            return Err(Error::Validation(format!(
                "word '{word}', {period}: row {row} is the zero vector"
            )));
        }
        Ok(UsageEmbeddingSet {
            word,
            period,
            vectors,
        })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn into_vectors(self) -> Matrix {
        self.vectors
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestWord {
    pub word: String,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub encoder_name: String,
    pub dimension: usize,
    pub language: String,
    pub words: Vec<ManifestWord>,
}

impl StoreManifest {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Validation("manifest dimension must be ≥ 1".into()));
        }
        let mut seen = HashSet::new();
        for entry in &self.words {
            check_word_name(&entry.word)?;
            if !seen.insert(entry.word.as_str()) {
                return Err(Error::Validation(format!(
                    "word '{}' listed twice in manifest",
                    entry.word
                )));
            }
            if entry.n1 == 0 || entry.n2 == 0 {
                return Err(Error::Validation(format!(
                    "word '{}': manifest row counts must be ≥ 1",
                    entry.word
                )));
            }
        }
        Ok(())
    }
}

/// Words double as directory names.
fn check_word_name(word: &str) -> Result<()> {
    if word.is_empty()
        || word == "."
        || word == ".."
        || word.contains(['/', '\\', '\n', '\r', '\0'])
    {
        return Err(Error::Validation(format!(
            "'{word}' is not usable as a word identifier"
        )));
    }
    Ok(())
}

/// A validated on-disk collection of usage sets.
///
/// Opening checks the manifest and every matrix header; matrix contents are
/// validated when a word is loaded.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    root: PathBuf,
    manifest: StoreManifest,
}

impl EmbeddingStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let manifest_path = root.join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            return Err(Error::format(&manifest_path, "store manifest not found"));
        }
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: StoreManifest = serde_json::from_str(&text)
            .map_err(|e| Error::format(&manifest_path, e.to_string()))?;
        manifest.validate()?;

        for entry in &manifest.words {
            for (period, expected_rows) in [(Period::First, entry.n1), (Period::Second, entry.n2)] {
                let path = root.join(&entry.word).join(period.file_name());
                if !path.is_file() {
                    return Err(Error::Validation(format!(
                        "word '{}': missing period {}",
                        entry.word,
                        period.number()
                    )));
                }
                let (rows, dim) = read_emb_header(&path)?;
                if dim != manifest.dimension {
                    return Err(Error::Validation(format!(
                        "word '{}', {period}: dimension {dim} does not match manifest dimension {}",
                        entry.word, manifest.dimension
                    )));
                }
                if rows == 0 {
                    return Err(Error::Validation(format!(
                        "word '{}', {period}: matrix has zero rows",
                        entry.word
                    )));
                }
                if rows != expected_rows {
                    return Err(Error::Validation(format!(
                        "word '{}', {period}: {rows} rows on disk, manifest says {expected_rows}",
                        entry.word
                    )));
                }
            }
        }
        Ok(EmbeddingStore { root, manifest })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &StoreManifest {
        &self.manifest
    }

    pub fn dimension(&self) -> usize {
        self.manifest.dimension
    }

    /// Words in manifest order.
    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.manifest.words.iter().map(|w| w.word.as_str())
    }

    /// Words in lexicographic order.
    pub fn sorted_words(&self) -> Vec<String> {
        let mut words: Vec<String> = self.words().map(str::to_owned).collect();
        words.sort();
        words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words().any(|w| w == word)
    }

    pub fn load_set(&self, word: &str, period: Period) -> Result<UsageEmbeddingSet> {
        if !self.contains(word) {
            return Err(Error::Validation(format!("word '{word}' is not in the store")));
        }
        let vectors = read_emb(&self.root.join(word).join(period.file_name()))?;
        if vectors.cols() != self.manifest.dimension {
            return Err(Error::Validation(format!(
                "word '{word}', {period}: dimension {} does not match manifest dimension {}",
                vectors.cols(),
                self.manifest.dimension
            )));
        }
        UsageEmbeddingSet::new(word, period, vectors)
    }

    pub fn load_pair(&self, word: &str) -> Result<(UsageEmbeddingSet, UsageEmbeddingSet)> {
        Ok((
            self.load_set(word, Period::First)?,
            self.load_set(word, Period::Second)?,
        ))
    }
}

/// One word's contents when writing a store.
#[derive(Debug, Clone)]
pub struct StoreEntry {
    pub word: String,
    pub period1: Matrix,
    pub period2: Matrix,
}

/// Serializes a store and re-opens it.
pub fn write_store(
    root: impl AsRef<Path>,
    encoder_name: &str,
    language: &str,
    entries: &[StoreEntry],
) -> Result<EmbeddingStore> {
    let root = root.as_ref();
    let dimension = entries.first().map_or(0, |e| e.period1.cols());
    let mut words = Vec::with_capacity(entries.len());
    for entry in entries {
        for (period, m) in [(Period::First, &entry.period1), (Period::Second, &entry.period2)] {
            if m.cols() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: m.cols(),
                });
            }
            // validate the same way the loader will
            UsageEmbeddingSet::new(entry.word.clone(), period, m.clone())?;
        }
        words.push(ManifestWord {
            word: entry.word.clone(),
            n1: entry.period1.rows(),
            n2: entry.period2.rows(),
        });
    }
    let manifest = StoreManifest {
        encoder_name: encoder_name.to_owned(),
        dimension,
        language: language.to_owned(),
        words,
    };
    manifest.validate()?;

    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    for entry in entries {
        let dir = root.join(&entry.word);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_emb(&dir.join(Period::First.file_name()), &entry.period1)?;
        write_emb(&dir.join(Period::Second.file_name()), &entry.period2)?;
    }
    let manifest_path = root.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    EmbeddingStore::open(root)
}

// ---------------------------------------------------------------------------
// Definitions

/// Definition texts of one word with their embeddings, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct DefinitionSet {
    word: String,
    texts: Vec<String>,
    embeddings: Matrix,
}

impl DefinitionSet {
    pub fn new(word: impl Into<String>, texts: Vec<String>, embeddings: Matrix) -> Result<Self> {
        let word = word.into();
        if texts.is_empty() {
            return Err(Error::Validation(format!(
                "word '{word}': K must be ≥ 1, no definitions found"
            )));
        }
        if texts.len() != embeddings.rows() {
            return Err(Error::Validation(format!(
                "word '{word}': {} definition texts but {} embedding rows",
                texts.len(),
                embeddings.rows()
            )));
        }
        if embeddings.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "word '{word}': non-finite definition embedding"
            )));
        }
        if let Some(row) = embeddings.first_zero_row() {
            return Err(Error::Validation(format!(
                "word '{word}': definition embedding {row} is the zero vector"
            )));
        }
        Ok(DefinitionSet {
            word,
            texts,
            embeddings,
        })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    /// Number of definitions K.
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }
}

pub fn definition_paths(defs_dir: &Path, word: &str) -> (PathBuf, PathBuf) {
    let dir = defs_dir.join(word);
    (dir.join("definitions.txt"), dir.join("definitions.emb"))
}

/// Loads `<defs_dir>/<word>/definitions.{txt,emb}`.
pub fn load_definition_set(defs_dir: impl AsRef<Path>, word: &str) -> Result<DefinitionSet> {
    let (txt, emb) = definition_paths(defs_dir.as_ref(), word);
    let text = fs::read_to_string(&txt).map_err(|e| Error::io(&txt, e))?;
    let texts: Vec<String> = text.lines().map(str::to_owned).collect();
    if texts.is_empty() {
        return Err(Error::Validation(format!(
            "word '{word}': K must be ≥ 1, definitions file is empty"
        )));
    }
    let embeddings = read_emb(&emb)?;
    DefinitionSet::new(word, texts, embeddings)
}

pub fn write_definition_set(defs_dir: impl AsRef<Path>, defs: &DefinitionSet) -> Result<()> {
    let (txt, emb) = definition_paths(defs_dir.as_ref(), defs.word());
    let dir = txt.parent().expect("definition path has a parent");
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut body = defs.texts().join("\n");
    body.push('\n');
    fs::write(&txt, body).map_err(|e| Error::io(&txt, e))?;
    write_emb(&emb, defs.embeddings())
}

// ---------------------------------------------------------------------------
// Gold scores

/// Human-annotated graded change score per word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldScores {
    entries: BTreeMap<String, f64>,
}

impl GoldScores {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (word, score) in entries {
            let word = word.into();
            if !score.is_finite() {
                return Err(Error::Validation(format!("gold score for '{word}' is not finite")));
            }
            if map.insert(word.clone(), score).is_some() {
                return Err(Error::Validation(format!("duplicate gold word '{word}'")));
            }
        }
        Ok(GoldScores { entries: map })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_gold_scores(text: &str, path: &Path) -> Result<GoldScores> {
    let mut entries = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let word = fields.next().unwrap_or_default().trim();
        let raw = fields
            .next()
            .ok_or_else(|| Error::format(path, format!("line {lineno}: expected word<TAB>score")))?
            .trim();
        let score = raw
            .parse::<f64>()
            .ok()
            .filter(|s| s.is_finite())
            .ok_or_else(|| {
                Error::format(path, format!("line {lineno}: non-numeric score '{raw}'"))
            })?;
        if word.is_empty() {
            return Err(Error::format(path, format!("line {lineno}: empty word")));
        }
        if entries.insert(word.to_owned(), score).is_some() {
            return Err(Error::Validation(format!(
                "duplicate gold word '{word}' at line {lineno}"
            )));
        }
    }
    Ok(GoldScores { entries })
}

pub fn load_gold_scores(path: impl AsRef<Path>) -> Result<GoldScores> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gold_scores(&text, path)
}

pub fn write_gold_scores(path: impl AsRef<Path>, gold: &GoldScores) -> Result<()> {
    let path = path.as_ref();
    let mut body = String::new();
    for (word, score) in gold.entries() {
        body.push_str(&format!("{word}\t{}\n", format_real(*score)));
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Result tables

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    /// Dimension of the space the score was computed in.
    pub k: usize,
    pub score: f64,
}

/// Per-word change scores for one (metric, space, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeScoreTable {
    pub metric: Metric,
    pub space: SpaceKind,
    pub seed: u64,
    pub rows: BTreeMap<String, ScoreRow>,
}

impl ChangeScoreTable {
    pub fn new(metric: Metric, space: SpaceKind, seed: u64) -> Self {
        ChangeScoreTable {
            metric,
            space,
            seed,
            rows: BTreeMap::new(),
        }
    }

    /// The shared `k` of all rows, or `None` when it varies per word.
    pub fn uniform_k(&self) -> Option<usize> {
        let mut ks = self.rows.values().map(|r| r.k);
        let first = ks.next()?;
        ks.all(|k| k == first).then_some(first)
    }

    pub fn scores(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.rows.iter().map(|(w, r)| (w.as_str(), r.score))
    }
}

/// Formats a real with 15 significant digits, `%.15g` style.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        format!("{}e{exp}", trim_fraction(mantissa))
    } else {
        let decimals = (14 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

pub fn write_results(table: &ChangeScoreTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = csv_writer(path)?;
    let err = |e| csv_error(path, e);
    out.write_record(RESULTS_HEADER).map_err(err)?;
    let metric = table.metric.to_string();
    let space = table.space.to_string();
    let seed = table.seed.to_string();
    for (word, row) in &table.rows {
        out.write_record([
            word.as_str(),
            &metric,
            &space,
            &row.k.to_string(),
            &seed,
            &format_real(row.score),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Parses a results CSV. All rows must agree on metric, space and seed.
pub fn read_results(path: impl AsRef<Path>) -> Result<ChangeScoreTable> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::format(
            path,
            format!("expected header {}", RESULTS_HEADER.join(",")),
        ));
    }
    let mut table: Option<ChangeScoreTable> = None;
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let bad = |what: &str| Error::format(path, format!("line {lineno}: invalid {what}"));
        let metric: Metric = record[1].parse().map_err(|_| bad("metric"))?;
        let space: SpaceKind = record[2].parse().map_err(|_| bad("space"))?;
        let k: usize = record[3].parse().map_err(|_| bad("k"))?;
        let seed: u64 = record[4].parse().map_err(|_| bad("seed"))?;
        let score: f64 = record[5].parse().map_err(|_| bad("score"))?;
        let t = table.get_or_insert_with(|| ChangeScoreTable::new(metric, space, seed));
        if t.metric != metric || t.space != space || t.seed != seed {
            return Err(Error::format(
                path,
                format!("line {lineno}: rows mix several metric/space/seed runs"),
            ));
        }
        if t.rows.insert(record[0].to_owned(), ScoreRow { k, score }).is_some() {
            return Err(Error::format(
                path,
                format!("line {lineno}: duplicate word '{}'", &record[0]),
            ));
        }
    }
    table.ok_or_else(|| Error::format(path, "results file has no rows"))
}
