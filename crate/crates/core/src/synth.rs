//! Synthetic usage sets with known qualitative behaviour.
//!
//! Every scenario lives in the plane spanned by a random unit `base`
//! direction and a random unit direction `ortho` orthogonal to it; usages are
//! isotropic Gaussian clouds around points of that plane.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{DefinitionSet, GoldScores, StoreEntry};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{amd, amd_directional, prt, samd_greedy};
use crate::spaces::derive_seed;

pub const DEFAULT_DIM: usize = 16;

/// `n` rows of `center + spread · g`, `g` standard normal per coordinate.
/// Rows that come out exactly zero are redrawn.
pub fn gaussian_cluster(center: &[f64], spread: f64, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::Config("cluster size must be ≥ 1".into()));
    }
    if center.iter().all(|&c| c == 0.0) {
        return Err(Error::Config("cluster center must be nonzero".into()));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Config(format!("spread must be finite and ≥ 0, got {spread}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(n, center.len());
    for i in 0..n {
        let row = out.row_mut(i);
        loop {
            for (x, &c) in row.iter_mut().zip(center) {
                let g: f64 = rng.sample(StandardNormal);
                *x = c + spread * g;
            }
            if row.iter().any(|&x| x != 0.0) {
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Stable,
    Emergence,
    Disappearance,
    Shift,
    HubInjection,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Stable,
        ScenarioKind::Emergence,
        ScenarioKind::Disappearance,
        ScenarioKind::Shift,
        ScenarioKind::HubInjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Stable => "stable",
            ScenarioKind::Emergence => "emergence",
            ScenarioKind::Disappearance => "disappearance",
            ScenarioKind::Shift => "shift",
            ScenarioKind::HubInjection => "hub-injection",
        }
    }

    /// Default `magnitude` for the kind; see [`Scenario::magnitude`].
    pub fn default_magnitude(self) -> f64 {
        match self {
            ScenarioKind::Stable => 0.0,
            ScenarioKind::Emergence | ScenarioKind::Disappearance => 0.3,
            ScenarioKind::Shift => FRAC_PI_2 / 2.0,
            ScenarioKind::HubInjection => 0.1,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace('_', "-");
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub dim: usize,
    pub n1: usize,
    pub n2: usize,
    pub spread: f64,
    /// Emergence/disappearance: share of usages in the extra sense.
    /// Shift: angle between the period centres, radians.
    /// Hub injection: share of period-1 usages moved onto the period-2 centroid.
    pub magnitude: f64,
    /// Stable only: when false, period 2 is an exact copy of period 1.
    pub resample: bool,
    pub seed: u64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Scenario {
            kind,
            dim: DEFAULT_DIM,
            n1: 40,
            n2: 40,
            spread: 0.05,
            magnitude: kind.default_magnitude(),
            resample: true,
            seed,
        }
    }

    /// Typical cosine distance between two draws of one cluster; differences
    /// below this are noise.
    pub fn noise_floor(&self) -> f64 {
        self.spread * self.spread * self.dim as f64
    }
}

/// Two orthonormal directions drawn from a seed.
#[derive(Debug, Clone)]
pub struct Plane {
    pub base: Vec<f64>,
    pub ortho: Vec<f64>,
}

impl Plane {
    pub fn random(dim: usize, seed: u64) -> Result<Plane> {
        if dim < 2 {
            return Err(Error::Config("scenarios need dimension ≥ 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.sample(StandardNormal)).collect() };
        let base = normalized(draw());
        let ortho = loop {
            let mut v = draw();
            let proj: f64 = v.iter().zip(&base).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(&base).for_each(|(x, b)| *x -= proj * b);
            if v.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
                break normalized(v);
            }
        };
        Ok(Plane { base, ortho })
    }

    /// `cos θ · base + sin θ · ortho`.
    pub fn at(&self, theta: f64) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.ortho)
            .map(|(b, o)| theta.cos() * b + theta.sin() * o)
            .collect()
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// What a scenario is expected to show.
#[derive(Debug, Clone, PartialEq)]
pub enum Contract {
    /// Symmetric AMD and directional asymmetry both stay below `tolerance`.
    NearZero { tolerance: f64 },
    /// `amd_2to1 > amd_1to2`.
    Broadening,
    /// `amd_1to2 > amd_2to1`.
    Narrowing,
    /// PRT is close to the centre angle's cosine distance.
    Shift { expected_prt: f64, tolerance: f64 },
    /// Relative to the hub-free baseline, AMD drops by more than SAMD does.
    HubResistant { baseline_a: Matrix, baseline_b: Matrix },
}

impl Contract {
    pub fn holds(&self, a: &Matrix, b: &Matrix) -> Result<bool> {
        Ok(match self {
            Contract::NearZero { tolerance } => {
                let d = amd_directional(a, b)?;
                d.symmetric() <= *tolerance && (d.a_to_b - d.b_to_a).abs() <= *tolerance
            }
            Contract::Broadening => {
                let d = amd_directional(a, b)?;
                d.b_to_a > d.a_to_b
            }
            Contract::Narrowing => {
                let d = amd_directional(a, b)?;
                d.a_to_b > d.b_to_a
            }
            Contract::Shift { expected_prt, tolerance } => {
                (prt(a, b)? - expected_prt).abs() <= *tolerance
            }
            Contract::HubResistant { baseline_a, baseline_b } => {
                let amd_drop = amd(baseline_a, baseline_b)? - amd(a, b)?;
                let samd_drop =
                    samd_greedy(baseline_a, baseline_b, 0)?.score - samd_greedy(a, b, 0)?.score;
                amd_drop > 0.0 && amd_drop > samd_drop
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub a: Matrix,
    pub b: Matrix,
    pub contract: Contract,
    pub plane: Plane,
}

fn count_of(share: f64, n: usize) -> usize {
    ((share * n as f64).round() as usize).min(n)
}

fn validate(s: &Scenario) -> Result<()> {
    if s.n1 == 0 || s.n2 == 0 {
        return Err(Error::Config("scenario usage counts must be ≥ 1".into()));
    }
    if !s.magnitude.is_finite() || s.magnitude < 0.0 {
        return Err(Error::Config(format!("magnitude must be ≥ 0, got {}", s.magnitude)));
    }
    if matches!(
        s.kind,
        ScenarioKind::Emergence | ScenarioKind::Disappearance | ScenarioKind::HubInjection
    ) && s.magnitude > 1.0
    {
        return Err(Error::Config("share-type magnitude must be ≤ 1".into()));
    }
    Ok(())
}

/// Stacks a cluster of `n - extra` around `main` and `extra` around `other`.
fn two_sense_set(
    main: &[f64],
    other: &[f64],
    n: usize,
    extra: usize,
    spread: f64,
    seed: u64,
) -> Result<Matrix> {
    if extra == 0 {
        return gaussian_cluster(main, spread, n, seed);
    }
    if extra == n {
        return gaussian_cluster(other, spread, n, seed ^ 0x5eed);
    }
    gaussian_cluster(main, spread, n - extra, seed)?
        .vstack(&gaussian_cluster(other, spread, extra, seed ^ 0x5eed)?)
}

pub fn make_scenario(s: &Scenario) -> Result<ScenarioData> {
    validate(s)?;
    let plane = Plane::random(s.dim, s.seed)?;
    let seed_a = derive_seed(s.seed, "period-1");
    let seed_b = derive_seed(s.seed, "period-2");
    let base = plane.base.clone();
    let (a, b, contract) = match s.kind {
        ScenarioKind::Stable => {
            let a = gaussian_cluster(&base, s.spread, s.n1, seed_a)?;
            let b = if s.resample {
                gaussian_cluster(&base, s.spread, s.n2, seed_b)?
            } else {
                a.clone()
            };
            (a, b, Contract::NearZero { tolerance: s.noise_floor() })
        }
        ScenarioKind::Emergence | ScenarioKind::Disappearance => {
            let emerging = s.kind == ScenarioKind::Emergence;
            let n_changed = if emerging { s.n2 } else { s.n1 };
            let extra = count_of(s.magnitude, n_changed).clamp(1, n_changed.max(2) - 1);
            let plain_n = if emerging { s.n1 } else { s.n2 };
            let plain_seed = if emerging { seed_a } else { seed_b };
            let changed_seed = if emerging { seed_b } else { seed_a };
            let plain = gaussian_cluster(&base, s.spread, plain_n, plain_seed)?;
            let changed = two_sense_set(&base, &plane.ortho, n_changed, extra, s.spread, changed_seed)?;
            if emerging {
                (plain, changed, Contract::Broadening)
            } else {
                (changed, plain, Contract::Narrowing)
            }
        }
        ScenarioKind::Shift => {
            let a = gaussian_cluster(&base, s.spread, s.n1, seed_a)?;
            let b = gaussian_cluster(&plane.at(s.magnitude), s.spread, s.n2, seed_b)?;
            let contract = Contract::Shift {
                expected_prt: 1.0 - s.magnitude.cos(),
                tolerance: s.noise_floor(),
            };
            (a, b, contract)
        }
        ScenarioKind::HubInjection => {
            let baseline_a = gaussian_cluster(&base, s.spread, s.n1, seed_a)?;
            let baseline_b = gaussian_cluster(&plane.at(FRAC_PI_2 * 2.0 / 3.0), s.spread, s.n2, seed_b)?;
            let hubs = count_of(s.magnitude, s.n1).max(1);
            let centroid = baseline_b.column_mean();
            let mut a = baseline_a.clone();
            for i in 0..hubs {
                a.row_mut(i).copy_from_slice(&centroid);
            }
            let contract = Contract::HubResistant {
                baseline_a,
                baseline_b: baseline_b.clone(),
            };
            (a, baseline_b, contract)
        }
    };
    Ok(ScenarioData { a, b, contract, plane })
}

/// Parameters of a synthetic store: one word per graded magnitude.
#[derive(Debug, Clone)]
pub struct SynthStoreConfig {
    pub kind: ScenarioKind,
    pub words: usize,
    pub dim: usize,
    pub n_usages: usize,
    pub spread: f64,
    pub defs_per_word: usize,
    /// Stable only: period 2 copies period 1.
    pub identical: bool,
    pub seed: u64,
}

impl Default for SynthStoreConfig {
    fn default() -> Self {
        SynthStoreConfig {
            kind: ScenarioKind::Shift,
            words: 20,
            dim: DEFAULT_DIM,
            n_usages: 40,
            spread: 0.05,
            defs_per_word: 6,
            identical: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthStore {
    pub entries: Vec<StoreEntry>,
    pub definitions: Vec<DefinitionSet>,
    pub gold: GoldScores,
}

/// Magnitude assigned to word `i` of `n`; increases with `i`.
fn graded_magnitude(kind: ScenarioKind, i: usize, n: usize) -> f64 {
    let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    match kind {
        ScenarioKind::Stable => 0.0,
        ScenarioKind::Shift => t * FRAC_PI_2,
        ScenarioKind::Emergence | ScenarioKind::Disappearance => 0.05 + 0.45 * t,
        ScenarioKind::HubInjection => 0.05 + 0.25 * t,
    }
}

pub fn synth_store(cfg: &SynthStoreConfig) -> Result<SynthStore> {
    if cfg.words == 0 {
        return Err(Error::Config("synthetic store needs at least one word".into()));
    }
    if cfg.defs_per_word == 0 {
        return Err(Error::Config("synthetic store needs at least one definition per word".into()));
    }
    let mut entries = Vec::with_capacity(cfg.words);
    let mut definitions = Vec::with_capacity(cfg.words);
    let mut gold = Vec::with_capacity(cfg.words);
    let width = cfg.words.to_string().len().max(3);
    for i in 0..cfg.words {
        let word = format!("w{i:0width$}");
        let seed = derive_seed(cfg.seed, &word);
        let magnitude = graded_magnitude(cfg.kind, i, cfg.words);
        let scenario = Scenario {
            kind: cfg.kind,
            dim: cfg.dim,
            n1: cfg.n_usages,
            n2: cfg.n_usages,
            spread: cfg.spread,
            magnitude,
            resample: !cfg.identical,
            seed,
        };
        let data = make_scenario(&scenario)?;
        definitions.push(synth_definitions(&word, &data.plane, cfg.defs_per_word, seed)?);
        entries.push(StoreEntry {
            word: word.clone(),
            period1: data.a,
            period2: data.b,
        });
        gold.push((word, magnitude));
    }
    Ok(SynthStore {
        entries,
        definitions,
        gold: GoldScores::from_entries(gold)?,
    })
}

/// Definition embeddings fanned out over the scenario plane, each with a
/// random off-plane component.
fn synth_definitions(word: &str, plane: &Plane, k: usize, seed: u64) -> Result<DefinitionSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "definitions"));
    let mut texts = Vec::with_capacity(k);
    let mut emb = Matrix::zeros(k, plane.base.len());
    for j in 0..k {
        let angle = if k > 1 { FRAC_PI_2 * j as f64 / (k - 1) as f64 } else { 0.0 };
        let centre = plane.at(angle);
        let row = emb.row_mut(j);
        for (x, c) in row.iter_mut().zip(&centre) {
            let g: f64 = rng.sample(StandardNormal);
            *x = c + 0.3 * g / (plane.base.len() as f64).sqrt();
        }
        texts.push(format!("{word}: synthetic sense {j} at {:.0} degrees", angle.to_degrees()));
    }
    DefinitionSet::new(word, texts, emb)
}
