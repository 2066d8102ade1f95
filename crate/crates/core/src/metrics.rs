//! Change metrics between two usage sets: APD, PRT, AMD and SAMD.
//!
//! All metrics are built on cosine distance `1 - cos(x, y)` with `f64`
//! accumulation. Inputs are row matrices (one usage per row); rows must be
//! nonzero, which the loaders guarantee for raw stores.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Score reported in a result table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Apd,
    Prt,
    Amd,
    Amd1to2,
    Amd2to1,
    Samd,
    /// SAMD with the optimal (Hungarian) matching instead of greedy.
    SamdHungarian,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Apd,
        Metric::Prt,
        Metric::Amd,
        Metric::Amd1to2,
        Metric::Amd2to1,
        Metric::Samd,
        Metric::SamdHungarian,
    ];

    /// The four headline metrics.
    pub const MAIN: [Metric; 4] = [Metric::Apd, Metric::Prt, Metric::Amd, Metric::Samd];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Apd => "apd",
            Metric::Prt => "prt",
            Metric::Amd => "amd",
            Metric::Amd1to2 => "amd_1to2",
            Metric::Amd2to1 => "amd_2to1",
            Metric::Samd => "samd",
            Metric::SamdHungarian => "samd_hungarian",
        }
    }

    pub fn uses_sampling(self) -> bool {
        matches!(self, Metric::Samd | Metric::SamdHungarian)
    }

    /// Computes this metric. `samd_seeds` lists the sampling seeds whose
    /// SAMD scores are averaged; it is ignored by the other metrics.
    pub fn compute(self, a: &Matrix, b: &Matrix, samd_seeds: &[u64]) -> Result<f64> {
        match self {
            Metric::Apd => apd(a, b),
            Metric::Prt => prt(a, b),
            Metric::Amd => amd(a, b),
            Metric::Amd1to2 => Ok(amd_directional(a, b)?.a_to_b),
            Metric::Amd2to1 => Ok(amd_directional(a, b)?.b_to_a),
            Metric::Samd | Metric::SamdHungarian => {
                if samd_seeds.is_empty() {
                    return Err(Error::Config("SAMD needs at least one sampling seed".into()));
                }
                let mut total = 0.0;
                for &seed in samd_seeds {
                    let result = if self == Metric::Samd {
                        samd_greedy(a, b, seed)?
                    } else {
                        samd_hungarian(a, b, seed)?
                    };
                    total += result.score;
                }
                Ok(total / samd_seeds.len() as f64)
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::Config(format!("unknown metric '{s}'")))
    }
}

/// Cosine distance `1 - cos(x, y)`, clamped to `[0, 2]`.
///
/// `cosine_distance(x, x)` is exactly 0: the squared norm and the dot product
/// are accumulated in the same order, and `sqrt(n * n) == n` in IEEE
/// arithmetic.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let (mut dot, mut nx, mut ny) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Domain("cosine distance of a zero vector".into()));
    }
    Ok(distance_from_parts(dot, nx, ny))
}

#[inline]
fn distance_from_parts(dot: f64, nx: f64, ny: f64) -> f64 {
    (1.0 - dot / (nx * ny).sqrt()).clamp(0.0, 2.0)
}

fn squared_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, &v| acc + v * v)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |acc, (&a, &b)| acc + a * b)
}

/// `|A| × |B|` matrix of cosine distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps precomputed values, e.g. a hand-written cost matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let values: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        assert_eq!(values.len(), rows.len() * cols, "ragged distance rows");
        DistanceMatrix {
            rows: rows.len(),
            cols,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over every entry, summed row by row.
    pub fn mean(&self) -> f64 {
        let total: f64 = (0..self.rows).map(|i| self.row(i).iter().sum::<f64>()).sum();
        total / (self.rows * self.cols) as f64
    }

    pub fn row_minima(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn col_minima(&self) -> Vec<f64> {
        let mut mins = vec![f64::INFINITY; self.cols];
        for i in 0..self.rows {
            for (m, &d) in mins.iter_mut().zip(self.row(i)) {
                *m = m.min(d);
            }
        }
        mins
    }

    /// Index of the smallest entry in each row; ties go to the lowest column.
    pub fn row_argmin(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for (j, &d) in row.iter().enumerate().skip(1) {
                    if d < row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn transpose(&self) -> DistanceMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            values.extend((0..self.rows).map(|i| self.get(i, j)));
        }
        DistanceMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }
}

fn nonzero_norms(m: &Matrix, side: &str) -> Result<Vec<f64>> {
    m.iter_rows()
        .enumerate()
        .map(|(i, row)| {
            let n = squared_norm(row);
            if n == 0.0 {
                Err(Error::Domain(format!("row {i} of set {side} is the zero vector")))
            } else {
                Ok(n)
            }
        })
        .collect()
}

/// Rows below this count are computed on the calling thread.
const PARALLEL_ROWS: usize = 64;

pub fn distance_matrix(a: &Matrix, b: &Matrix) -> Result<DistanceMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let na = nonzero_norms(a, "A")?;
    let nb = nonzero_norms(b, "B")?;
    let cols = b.rows();
    let mut values = vec![0.0; a.rows() * cols];
    let fill = |(i, out): (usize, &mut [f64])| {
        let x = a.row(i);
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = distance_from_parts(dot(x, b.row(j)), na[i], nb[j]);
        }
    };
    if cols > 0 {
        if a.rows() >= PARALLEL_ROWS {
            values.par_chunks_mut(cols).enumerate().for_each(fill);
        } else {
            values.chunks_mut(cols).enumerate().for_each(fill);
        }
    }
    Ok(DistanceMatrix {
        rows: a.rows(),
        cols,
        values,
    })
}

fn require_nonempty(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() == 0 || b.rows() == 0 {
        return Err(Error::Validation("usage sets must have at least one row".into()));
    }
    Ok(())
}

/// Average pairwise distance over all cross-period pairs.
pub fn apd(a: &Matrix, b: &Matrix) -> Result<f64> {
    require_nonempty(a, b)?;
    Ok(distance_matrix(a, b)?.mean())
}

/// Mean of the L2-normalised rows, so every usage carries equal weight.
fn unit_centroid(m: &Matrix) -> Vec<f64> {
    let mut c = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        let norm = squared_norm(row).sqrt();
        for (acc, &x) in c.iter_mut().zip(row) {
            *acc += x / norm;
        }
    }
    let n = m.rows() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Cosine distance between the two period centroids of unit-length usages.
pub fn prt(a: &Matrix, b: &Matrix) -> Result<f64> {
    require_nonempty(a, b)?;
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let (ca, cb) = (unit_centroid(a), unit_centroid(b));
    for (c, period) in [(&ca, 1), (&cb, 2)] {
        if c.iter().all(|&x| x == 0.0) {
            return Err(Error::Domain(format!("period {period} centroid is the zero vector")));
        }
    }
    cosine_distance(&ca, &cb)
}

/// Both directions of the average minimum distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalAmd {
    /// Mean over `a ∈ A` of the distance to its nearest `b ∈ B`.
    pub a_to_b: f64,
    pub b_to_a: f64,
}

impl DirectionalAmd {
    pub fn symmetric(&self) -> f64 {
        (self.a_to_b + self.b_to_a) / 2.0
    }

    pub fn from_distances(d: &DistanceMatrix) -> Self {
        DirectionalAmd {
            a_to_b: sorted_mean(d.row_minima()),
            b_to_a: sorted_mean(d.col_minima()),
        }
    }
}

/// Mean accumulated in ascending order. Sums of elementwise-dominated
/// multisets then compare exactly as they do in real arithmetic, which keeps
/// the AMD ≤ SAMD bound free of rounding violations.
fn sorted_mean(mut xs: Vec<f64>) -> f64 {
    xs.sort_unstable_by(f64::total_cmp);
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn amd_directional(a: &Matrix, b: &Matrix) -> Result<DirectionalAmd> {
    require_nonempty(a, b)?;
    Ok(DirectionalAmd::from_distances(&distance_matrix(a, b)?))
}

/// Symmetric average minimum distance.
pub fn amd(a: &Matrix, b: &Matrix) -> Result<f64> {
    Ok(amd_directional(a, b)?.symmetric())
}

/// Row indices kept by [`subsample_equal`], ascending.
pub fn equal_sample_indices(na: usize, nb: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = na.min(nb);
    let pick = |total: usize| -> Vec<usize> {
        if total == n {
            return (0..total).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = index::sample(&mut rng, total, n).into_vec();
        idx.sort_unstable();
        idx
    };
    (pick(na), pick(nb))
}

/// Samples the larger set down to the size of the smaller one, uniformly
/// without replacement. The smaller set passes through unchanged.
pub fn subsample_equal(a: &Matrix, b: &Matrix, seed: u64) -> (Matrix, Matrix) {
    let (ia, ib) = equal_sample_indices(a.rows(), b.rows(), seed);
    (a.select_rows(&ia), b.select_rows(&ib))
}

/// One-to-one pairs between rows of A and rows of B (original indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamdResult {
    pub score: f64,
    pub matching: Matching,
}

fn samd_with(
    a: &Matrix,
    b: &Matrix,
    seed: u64,
    solve: impl Fn(&DistanceMatrix) -> Vec<(usize, usize)>,
) -> Result<SamdResult> {
    require_nonempty(a, b)?;
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let (ia, ib) = equal_sample_indices(a.rows(), b.rows(), seed);
    let d = distance_matrix(&a.select_rows(&ia), &b.select_rows(&ib))?;
    let local = solve(&d);
    let score = sorted_mean(local.iter().map(|&(i, j)| d.get(i, j)).collect());
    let pairs = local.into_iter().map(|(i, j)| (ia[i], ib[j])).collect();
    Ok(SamdResult {
        score,
        matching: Matching { pairs },
    })
}

/// SAMD with greedy smallest-distance-first matching on equal-size samples.
pub fn samd_greedy(a: &Matrix, b: &Matrix, seed: u64) -> Result<SamdResult> {
    samd_with(a, b, seed, assignment::greedy)
}

/// SAMD with the minimum-cost perfect matching on the same samples as
/// [`samd_greedy`].
pub fn samd_hungarian(a: &Matrix, b: &Matrix, seed: u64) -> Result<SamdResult> {
    samd_with(a, b, seed, |d| {
        assignment::hungarian(d).into_iter().enumerate().collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            cosine_distance(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn self_distance_is_exactly_zero() {
        let x = [0.1, -3.7, 2.2, 1e-3, 7.0];
        assert_eq!(cosine_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn distance_matrix_examples() {
        let d = distance_matrix(&m(&[&[1.0, 0.0]]), &m(&[&[0.0, 1.0]])).unwrap();
        assert_eq!(d.values(), &[1.0]);
        let d = distance_matrix(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &m(&[&[1.0, 0.0]])).unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 1));
        assert_eq!(d.values(), &[0.0, 1.0]);
        assert!(distance_matrix(&m(&[&[1.0, 0.0]]), &m(&[&[1.0]])).is_err());
    }

    #[test]
    fn apd_examples() {
        assert_eq!(apd(&m(&[&[1.0, 0.0]]), &m(&[&[0.0, 1.0]])).unwrap(), 1.0);
        assert_eq!(
            apd(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &m(&[&[1.0, 0.0]])).unwrap(),
            0.5
        );
    }

    #[test]
    fn prt_examples() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(prt(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(
            prt(&a, &m(&[&[1.0, 0.0]])).unwrap(),
            1.0 - H,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            prt(&m(&[&[1.0, 1.0]]), &m(&[&[2.0, 2.0]])).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let err = prt(&m(&[&[1.0, 0.0], &[-1.0, 0.0]]), &a).unwrap_err();
        assert!(err.to_string().contains("centroid"), "{err}");
    }

    #[test]
    fn amd_examples() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = m(&[&[1.0, 0.0]]);
        let d = amd_directional(&a, &b).unwrap();
        assert_eq!((d.a_to_b, d.b_to_a), (0.5, 0.0));
        assert_eq!(amd(&a, &b).unwrap(), 0.25);
        assert_eq!(amd_directional(&a, &a).unwrap(), DirectionalAmd { a_to_b: 0.0, b_to_a: 0.0 });
    }

    #[test]
    fn subsampling_contract() {
        let a = Matrix::from_rows(&(0..10).map(|i| vec![1.0, i as f64]).collect::<Vec<_>>()).unwrap();
        let b = a.select_rows(&[0, 1, 2, 3]);
        let (a1, b1) = subsample_equal(&a, &b, 7);
        let (a2, _) = subsample_equal(&a, &b, 7);
        assert_eq!(a1, a2);
        assert_eq!(b1, b);
        assert_eq!(a1.rows(), 4);
        for row in a1.iter_rows() {
            assert!(a.iter_rows().any(|r| r == row));
        }
        let (same_a, same_b) = subsample_equal(&a, &a, 1);
        assert_eq!((same_a, same_b), (a.clone(), a));
    }

    #[test]
    fn samd_greedy_hand_trace() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = m(&[&[1.0, 0.0], &[H, H]]);
        let r = samd_greedy(&a, &b, 0).unwrap();
        assert_eq!(r.matching.pairs, vec![(0, 0), (1, 1)]);
        assert_abs_diff_eq!(r.score, (1.0 - H) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn samd_self_is_zero() {
        let a = m(&[&[1.0, 0.2], &[0.3, 1.0], &[-1.0, 0.5]]);
        let g = samd_greedy(&a, &a, 3).unwrap();
        assert_eq!(g.score, 0.0);
        assert_eq!(g.matching.pairs.len(), 3);
        assert!(g.matching.pairs.iter().all(|&(i, j)| i == j));
        assert_eq!(samd_hungarian(&a, &a, 3).unwrap().score, 0.0);
    }

    #[test]
    fn samd_matching_uses_original_indices() {
        let a = Matrix::from_rows(&(0..8).map(|i| vec![1.0, i as f64]).collect::<Vec<_>>()).unwrap();
        let b = m(&[&[1.0, 3.0], &[1.0, 6.0]]);
        let r = samd_greedy(&a, &b, 11).unwrap();
        assert_eq!(r.matching.pairs.len(), 2);
        let (ia, _) = equal_sample_indices(8, 2, 11);
        assert!(r.matching.pairs.iter().all(|(i, _)| ia.contains(i)));
    }

    #[test]
    fn metric_names_round_trip() {
        for metric in Metric::ALL {
            assert_eq!(metric.name().parse::<Metric>().unwrap(), metric);
        }
        assert_eq!("SAMD".parse::<Metric>().unwrap(), Metric::Samd);
        assert!("euclid".parse::<Metric>().is_err());
    }

    #[test]
    fn samd_repetitions_average_seeds() {
        let a = Matrix::from_rows(&(0..9).map(|i| vec![1.0, (i * i) as f64 * 0.1]).collect::<Vec<_>>()).unwrap();
        let b = m(&[&[1.0, 0.5], &[0.2, 1.0], &[1.0, -1.0]]);
        let expected = (0..3).map(|s| samd_greedy(&a, &b, 40 + s).unwrap().score).sum::<f64>() / 3.0;
        let got = Metric::Samd.compute(&a, &b, &[40, 41, 42]).unwrap();
        assert_eq!(got, expected);
    }
}
