//! Representation spaces in which metrics are evaluated.
//!
//! * `Full`: the original embeddings.
//! * `Def`: coordinate `k` is the cosine distance to definition embedding `k`.
//! * `Pca`: per-word PCA fitted on both periods together (mean-centred).
//! * `Rand`: a per-word random subset of the original coordinates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::DefinitionSet;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::cosine_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceKind {
    Full,
    Def,
    Pca,
    Rand,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 4] = [SpaceKind::Full, SpaceKind::Def, SpaceKind::Pca, SpaceKind::Rand];

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Full => "full",
            SpaceKind::Def => "def",
            SpaceKind::Pca => "pca",
            SpaceKind::Rand => "rand",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        SpaceKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::Config(format!("unknown space '{s}'")))
    }
}

/// How to build one word's space. `k` is required for `Pca` and `Rand`;
/// `seed` is the already-derived per-word seed used by `Rand`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub k: Option<usize>,
    pub seed: u64,
}

impl SpaceConfig {
    pub fn full() -> Self {
        SpaceConfig {
            kind: SpaceKind::Full,
            k: None,
            seed: 0,
        }
    }

    pub fn def() -> Self {
        SpaceConfig {
            kind: SpaceKind::Def,
            k: None,
            seed: 0,
        }
    }

    pub fn pca(k: usize) -> Self {
        SpaceConfig {
            kind: SpaceKind::Pca,
            k: Some(k),
            seed: 0,
        }
    }

    pub fn rand(k: usize, seed: u64) -> Self {
        SpaceConfig {
            kind: SpaceKind::Rand,
            k: Some(k),
            seed,
        }
    }
}

/// Both periods mapped through the same transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPair {
    pub a: Matrix,
    pub b: Matrix,
    pub space: SpaceConfig,
}

impl ProjectedPair {
    pub fn dim(&self) -> usize {
        self.a.cols()
    }
}

fn check_same_dim(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    Ok(())
}

/// Maps every usage `v` to `(δ(v, z_1), …, δ(v, z_K))`.
pub fn project_definition_space(a: &Matrix, b: &Matrix, defs: &DefinitionSet) -> Result<ProjectedPair> {
    check_same_dim(a, b)?;
    if defs.dim() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: defs.dim(),
        });
    }
    let z = defs.embeddings();
    let project = |m: &Matrix| -> Result<Matrix> {
        let mut out = Matrix::zeros(m.rows(), z.rows());
        for (i, v) in m.iter_rows().enumerate() {
            for (k, zk) in z.iter_rows().enumerate() {
                out.row_mut(i)[k] = cosine_distance(v, zk)?;
            }
        }
        if let Some(row) = out.first_zero_row() {
            return Err(Error::Domain(format!(
                "word '{}': usage {row} projects to the zero vector in definition space",
                defs.word()
            )));
        }
        Ok(out)
    };
    Ok(ProjectedPair {
        a: project(a)?,
        b: project(b)?,
        space: SpaceConfig {
            kind: SpaceKind::Def,
            k: Some(defs.len()),
            seed: 0,
        },
    })
}

/// A fitted, mean-centred PCA.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k × D`, one unit loading vector per row, by decreasing variance.
    pub components: Matrix,
    /// Variance along every numerically nonzero component, decreasing.
    pub explained_variance: Vec<f64>,
}

impl Pca {
    /// Fits `k` components to the rows of `data`.
    ///
    /// Each loading's largest-magnitude entry is made positive.
    pub fn fit(data: &Matrix, k: usize) -> Result<Pca> {
        let (n, d) = (data.rows(), data.cols());
        if k == 0 {
            return Err(Error::Config("PCA needs k ≥ 1".into()));
        }
        if n < 2 {
            return Err(Error::Domain("PCA needs at least two usages".into()));
        }
        let mean = data.column_mean();
        let centred = DMatrix::from_fn(n, d, |i, j| data.get(i, j) - mean[j]);
        let svd = centred.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");

        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| {
            svd.singular_values[y]
                .total_cmp(&svd.singular_values[x])
                .then(x.cmp(&y))
        });
        let s_max = order.first().map_or(0.0, |&i| svd.singular_values[i]);
        let tol = s_max * n.max(d) as f64 * f64::EPSILON;
        let rank = order
            .iter()
            .take_while(|&&i| svd.singular_values[i] > tol)
            .count();
        if rank == 0 {
            return Err(Error::Domain(
                "all usages are identical; principal components are undefined".into(),
            ));
        }
        if k > rank {
            return Err(Error::RankExceeded { requested: k, max: rank });
        }

        let mut components = Matrix::zeros(k, d);
        for (c, &src) in order.iter().take(k).enumerate() {
            let row = components.row_mut(c);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = v_t[(src, j)];
            }
            let mut pivot = 0;
            for j in 1..d {
                if row[j].abs() > row[pivot].abs() {
                    pivot = j;
                }
            }
            if row[pivot] < 0.0 {
                row.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let explained_variance = order
            .iter()
            .take(rank)
            .map(|&i| svd.singular_values[i].powi(2) / (n - 1) as f64)
            .collect();
        Ok(Pca {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn transform(&self, m: &Matrix) -> Matrix {
        let k = self.components.rows();
        let mut out = Matrix::zeros(m.rows(), k);
        let mut centred = vec![0.0; m.cols()];
        for (i, row) in m.iter_rows().enumerate() {
            for ((c, &x), &mu) in centred.iter_mut().zip(row).zip(&self.mean) {
                *c = x - mu;
            }
            for (c, comp) in self.components.iter_rows().enumerate() {
                out.row_mut(i)[c] = centred.iter().zip(comp).map(|(x, w)| x * w).sum();
            }
        }
        out
    }
}

/// PCA fitted on both periods stacked, applied to each.
pub fn fit_pca(a: &Matrix, b: &Matrix, k: usize) -> Result<ProjectedPair> {
    check_same_dim(a, b)?;
    let pca = Pca::fit(&a.vstack(b)?, k)?;
    Ok(ProjectedPair {
        a: pca.transform(a),
        b: pca.transform(b),
        space: SpaceConfig::pca(k),
    })
}

/// Ascending size-`k` subset of `0..dim`, uniform without replacement.
pub fn random_dims(dim: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > dim {
        return Err(Error::Config(format!(
            "random dimension selection needs 1 ≤ k ≤ {dim}, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = index::sample(&mut rng, dim, k).into_vec();
    dims.sort_unstable();
    Ok(dims)
}

/// Keeps the same random coordinates in both periods.
pub fn select_random_dims(a: &Matrix, b: &Matrix, k: usize, seed: u64) -> Result<ProjectedPair> {
    check_same_dim(a, b)?;
    let dims = random_dims(a.cols(), k, seed)?;
    Ok(ProjectedPair {
        a: a.select_cols(&dims),
        b: b.select_cols(&dims),
        space: SpaceConfig::rand(k, seed),
    })
}

/// Dimensions for the halving stress test: `dim/2, dim/4, …` while `≥ floor`.
pub fn stress_schedule(dim: usize, floor: usize) -> Vec<usize> {
    let floor = floor.max(1);
    std::iter::successors(Some(dim / 2), |&k| Some(k / 2))
        .take_while(|&k| k >= floor)
        .collect()
}

pub const DEFAULT_STRESS_FLOOR: usize = 4;

pub fn apply_space(
    a: &Matrix,
    b: &Matrix,
    config: SpaceConfig,
    defs: Option<&DefinitionSet>,
) -> Result<ProjectedPair> {
    check_same_dim(a, b)?;
    let need_k = || {
        config
            .k
            .ok_or_else(|| Error::Config(format!("space '{}' needs a target dimension k", config.kind)))
    };
    match config.kind {
        SpaceKind::Full => Ok(ProjectedPair {
            a: a.clone(),
            b: b.clone(),
            space: config,
        }),
        SpaceKind::Def => {
            let defs = defs.ok_or_else(|| {
                Error::Config("definition space requested without a definition set".into())
            })?;
            project_definition_space(a, b, defs)
        }
        SpaceKind::Pca => fit_pca(a, b, need_k()?),
        SpaceKind::Rand => select_random_dims(a, b, need_k()?, config.seed),
    }
}

/// Stable 64-bit FNV-1a hash of a word.
pub fn word_hash(word: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    word.bytes()
        .fold(OFFSET, |h, byte| (h ^ byte as u64).wrapping_mul(PRIME))
}

/// Per-word seed: depends only on the master seed and the word, never on the
/// order in which words are processed.
pub fn derive_seed(master: u64, word: &str) -> u64 {
    // splitmix64 finaliser
    let mut z = master ^ word_hash(word);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(stress_schedule(1024, 4), vec![512, 256, 128, 64, 32, 16, 8, 4]);
        assert_eq!(stress_schedule(768, 4), vec![384, 192, 96, 48, 24, 12, 6]);
        assert!(stress_schedule(4, 4).is_empty());
        assert_eq!(stress_schedule(64, 4), vec![32, 16, 8, 4]);
    }

    #[test]
    fn definition_space_examples() {
        let z = m(&[&[1.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 1.0, 0.0]]);
        let defs = DefinitionSet::new("w", vec!["a".into(), "b".into(), "c".into()], z.clone()).unwrap();
        let a = m(&[&[1.0, 0.0, 0.0, 0.0]]);
        let b = m(&[&[0.0, 0.0, 0.0, 1.0]]);
        let p = project_definition_space(&a, &b, &defs).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.a.get(0, 0), 0.0);
        assert!(p.a.get(0, 1) > 0.0 && p.a.get(0, 2) > 0.0);
        assert_eq!(p.a.get(0, 1), metrics::cosine_distance(z.row(0), z.row(1)).unwrap());
        assert_eq!(p.b.row(0), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn definition_space_zero_projection_is_domain_error() {
        let defs = DefinitionSet::new("w", vec!["only".into()], m(&[&[1.0, 0.0]])).unwrap();
        let a = m(&[&[2.0, 0.0]]);
        let err = project_definition_space(&a, &m(&[&[0.0, 1.0]]), &defs).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn pca_rank_errors() {
        let a = m(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]);
        let err = fit_pca(&a, &a, 1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");

        let b = m(&[&[2.0, 4.0, 6.0], &[3.0, 6.0, 9.0]]);
        let err = fit_pca(&a, &b, 2).unwrap_err();
        assert!(matches!(err, Error::RankExceeded { requested: 2, max: 1 }), "{err}");
        assert!(err.to_string().contains('1'));
    }

    #[test]
    fn pca_sign_convention() {
        let a = m(&[&[1.0, 0.1], &[-2.0, 0.0], &[3.0, -0.1]]);
        let b = m(&[&[0.5, 0.3], &[-1.5, -0.2]]);
        let pca = Pca::fit(&a.vstack(&b).unwrap(), 2).unwrap();
        for comp in pca.components.iter_rows() {
            let pivot = comp.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap();
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn random_dims_contract() {
        let first = random_dims(16, 5, 9).unwrap();
        assert_eq!(first, random_dims(16, 5, 9).unwrap());
        assert!(first.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(random_dims(4, 4, 1).unwrap(), vec![0, 1, 2, 3]);
        assert!(random_dims(4, 5, 1).is_err());
        assert!(random_dims(4, 0, 1).is_err());
    }

    #[test]
    fn rand_single_dim_collapses_distances() {
        let a = m(&[&[2.0, 1.0, -3.0], &[2.0, -5.0, 0.5]]);
        let b = m(&[&[2.0, 0.0, 9.0]]);
        // find a seed that keeps coordinate 0, where every vector is positive
        let seed = (0..).find(|&s| random_dims(3, 1, s).unwrap() == [0]).unwrap();
        let p = select_random_dims(&a, &b, 1, seed).unwrap();
        let d = metrics::distance_matrix(&p.a, &p.b).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn apply_space_dispatch() {
        let a = m(&[&[1.0, 2.0, 0.5], &[0.0, 1.0, 1.0]]);
        let b = m(&[&[3.0, 0.0, 1.0], &[1.0, 1.0, 1.0]]);
        let full = apply_space(&a, &b, SpaceConfig::full(), None).unwrap();
        assert_eq!((full.a, full.b), (a.clone(), b.clone()));
        assert!(matches!(
            apply_space(&a, &b, SpaceConfig::def(), None),
            Err(Error::Config(_))
        ));
        let defs = DefinitionSet::new(
            "w",
            vec!["x".into(), "y".into(), "z".into()],
            m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]),
        )
        .unwrap();
        assert_eq!(apply_space(&a, &b, SpaceConfig::def(), Some(&defs)).unwrap().dim(), 3);
        let pca = apply_space(&a, &b, SpaceConfig::pca(defs.len()), None).unwrap();
        assert_eq!(pca.dim(), defs.len());
        let rand = apply_space(&a, &b, SpaceConfig::rand(2, 5), None).unwrap();
        assert_eq!(rand.dim(), 2);
        let no_k = SpaceConfig { k: None, ..SpaceConfig::rand(1, 0) };
        assert!(matches!(apply_space(&a, &b, no_k, None), Err(Error::Config(_))));
    }

    #[test]
    fn seed_derivation_is_stable() {
        assert_eq!(word_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(word_hash("a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(derive_seed(1, "plane"), derive_seed(1, "plane"));
        assert_ne!(derive_seed(1, "plane"), derive_seed(2, "plane"));
        assert_ne!(derive_seed(1, "plane"), derive_seed(1, "head"));
    }
}
