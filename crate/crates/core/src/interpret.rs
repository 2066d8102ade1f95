//! Directional AMD asymmetry and LDA over definition dimensions.

use std::cmp::Ordering;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::{csv_error, csv_writer, format_real, DefinitionSet};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::DirectionalAmd;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeDirection {
    /// Period-1 usages lack close period-2 counterparts: a sense faded.
    Narrowing,
    /// Period-2 usages lack close period-1 counterparts: a sense emerged.
    Broadening,
    Balanced,
}

impl ChangeDirection {
    pub fn name(self) -> &'static str {
        match self {
            ChangeDirection::Narrowing => "NARROWING",
            ChangeDirection::Broadening => "BROADENING",
            ChangeDirection::Balanced => "BALANCED",
        }
    }
}

impl fmt::Display for ChangeDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryRecord {
    pub word: String,
    pub amd_1to2: f64,
    pub amd_2to1: f64,
    pub asymmetry: f64,
    pub direction: ChangeDirection,
}

impl AsymmetryRecord {
    /// Labels the direction; differences within `epsilon` count as balanced.
    pub fn new(word: impl Into<String>, amd: DirectionalAmd, epsilon: f64) -> Self {
        let diff = amd.a_to_b - amd.b_to_a;
        let direction = if diff.abs() <= epsilon {
            ChangeDirection::Balanced
        } else if diff > 0.0 {
            ChangeDirection::Narrowing
        } else {
            ChangeDirection::Broadening
        };
        AsymmetryRecord {
            word: word.into(),
            amd_1to2: amd.a_to_b,
            amd_2to1: amd.b_to_a,
            asymmetry: diff.abs(),
            direction,
        }
    }
}

/// Largest asymmetry first; ties by word.
pub fn rank_asymmetry(records: &mut [AsymmetryRecord]) {
    records.sort_by(|x, y| {
        y.asymmetry
            .total_cmp(&x.asymmetry)
            .then_with(|| x.word.cmp(&y.word))
    });
}

pub fn write_asymmetry_csv(records: &[AsymmetryRecord], path: &Path) -> Result<()> {
    let mut out = csv_writer(path)?;
    let err = |e| csv_error(path, e);
    out.write_record(["word", "amd_1to2", "amd_2to1", "asymmetry", "direction"])
        .map_err(err)?;
    for r in records {
        out.write_record([
            r.word.as_str(),
            &format_real(r.amd_1to2),
            &format_real(r.amd_2to1),
            &format_real(r.asymmetry),
            r.direction.name(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Ridge added to the within-class scatter before solving.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularization {
    /// `1e-3 · trace(S_w) / K`.
    #[default]
    Auto,
    Fixed(f64),
}

/// Fisher discriminant over definition dimensions. Positive weights point
/// towards period 2.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaDirection {
    pub weights: Vec<f64>,
    pub lambda: f64,
}

/// Two-class Fisher LDA: `w = (S_w + λI)⁻¹ (μ₂ − μ₁)`.
pub fn lda_direction(a: &Matrix, b: &Matrix, reg: Regularization) -> Result<LdaDirection> {
    let k = a.cols();
    if k == 0 {
        return Err(Error::Validation("LDA needs K ≥ 1 dimensions".into()));
    }
    if b.cols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: b.cols(),
        });
    }
    if a.rows() < 2 || b.rows() < 2 {
        return Err(Error::Validation(
            "LDA needs at least two usages in each period".into(),
        ));
    }
    let (mu1, mu2) = (a.column_mean(), b.column_mean());
    let diff = DVector::from_iterator(k, mu2.iter().zip(&mu1).map(|(x, y)| x - y));
    if diff.iter().all(|&d| d == 0.0) {
        return Err(Error::Domain(
            "identical period means: no discriminant direction".into(),
        ));
    }

    let mut scatter = DMatrix::<f64>::zeros(k, k);
    for (m, mu) in [(a, &mu1), (b, &mu2)] {
        for row in m.iter_rows() {
            let c = DVector::from_iterator(k, row.iter().zip(mu.iter()).map(|(x, y)| x - y));
            scatter += &c * c.transpose();
        }
    }
    let lambda = match reg {
        Regularization::Auto => 1e-3 * scatter.trace() / k as f64,
        Regularization::Fixed(l) if l >= 0.0 && l.is_finite() => l,
        Regularization::Fixed(l) => {
            return Err(Error::Config(format!("LDA regularisation must be ≥ 0, got {l}")))
        }
    };
    for i in 0..k {
        scatter[(i, i)] += lambda;
    }
    let solved = scatter
        .clone()
        .cholesky()
        .map(|c| c.solve(&diff))
        .or_else(|| scatter.lu().solve(&diff))
        .filter(|w| w.iter().all(|x| x.is_finite()));
    let mut w = match solved {
        Some(w) => w,
        None if lambda == 0.0 => {
            return Err(Error::Domain(
                "within-class scatter is singular; use a positive regularisation".into(),
            ))
        }
        None => return Err(Error::Domain("regularised scatter is singular".into())),
    };
    if w.dot(&diff) < 0.0 {
        w = -w;
    }
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain("LDA direction is zero".into()));
    }
    Ok(LdaDirection {
        weights: w.iter().copied().collect(),
        lambda,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDefinition {
    pub index: usize,
    pub weight: f64,
    pub text: String,
}

/// The `m` most negative (earlier) and `m` most positive (later) definitions.
/// Zero weights belong to neither list.
pub fn top_discriminative_definitions(
    dir: &LdaDirection,
    defs: &DefinitionSet,
    m: usize,
) -> Result<(Vec<WeightedDefinition>, Vec<WeightedDefinition>)> {
    if dir.weights.len() != defs.len() {
        return Err(Error::DimensionMismatch {
            expected: defs.len(),
            found: dir.weights.len(),
        });
    }
    if m == 0 || m > defs.len() {
        return Err(Error::Config(format!(
            "m must lie in 1..={}, got {m}",
            defs.len()
        )));
    }
    if dir.weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Domain("all LDA weights are zero".into()));
    }
    let entry = |i: usize| WeightedDefinition {
        index: i,
        weight: dir.weights[i],
        text: defs.texts()[i].clone(),
    };
    let mut order: Vec<usize> = (0..defs.len()).collect();
    order.sort_by(|&x, &y| {
        dir.weights[x]
            .partial_cmp(&dir.weights[y])
            .unwrap_or(Ordering::Equal)
            .then(x.cmp(&y))
    });
    let earlier = order
        .iter()
        .copied()
        .filter(|&i| dir.weights[i] < 0.0)
        .take(m)
        .map(entry)
        .collect();
    let later = order
        .iter()
        .rev()
        .copied()
        .filter(|&i| dir.weights[i] > 0.0)
        .take(m)
        .map(entry)
        .collect();
    Ok((earlier, later))
}

/// Human-readable report block for one word.
pub fn lda_report(
    record: &AsymmetryRecord,
    dir: &LdaDirection,
    defs: &DefinitionSet,
    m: usize,
) -> Result<String> {
    let (earlier, later) = top_discriminative_definitions(dir, defs, m)?;
    let mut out = String::new();
    let _ = writeln!(out, "word: {}", record.word);
    let _ = writeln!(
        out,
        "direction: {} (amd_1to2={}, amd_2to1={}, asymmetry={})",
        record.direction,
        format_real(record.amd_1to2),
        format_real(record.amd_2to1),
        format_real(record.asymmetry)
    );
    let _ = writeln!(out, "lda lambda: {}", format_real(dir.lambda));
    for (title, list) in [("earlier", &earlier), ("later", &later)] {
        let _ = writeln!(out, "{title}:");
        for d in list {
            let _ = writeln!(out, "  {:+.6}  [{}] {}", d.weight, d.index, d.text);
        }
    }
    let _ = writeln!(out, "weights:");
    for (i, (w, text)) in dir.weights.iter().zip(defs.texts()).enumerate() {
        let _ = writeln!(out, "  {w:+.6}  [{i}] {text}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn direction_labels() {
        let balanced = AsymmetryRecord::new("w", DirectionalAmd { a_to_b: 0.0, b_to_a: 0.0 }, 0.0);
        assert_eq!((balanced.asymmetry, balanced.direction), (0.0, ChangeDirection::Balanced));
        let broad = AsymmetryRecord::new("w", DirectionalAmd { a_to_b: 0.1, b_to_a: 0.4 }, 0.0);
        assert_eq!(broad.direction, ChangeDirection::Broadening);
        assert_abs_diff_eq!(broad.asymmetry, 0.3, epsilon = 1e-15);
        let narrow = AsymmetryRecord::new("w", DirectionalAmd { a_to_b: 0.4, b_to_a: 0.1 }, 0.0);
        assert_eq!(narrow.direction, ChangeDirection::Narrowing);
        let within = AsymmetryRecord::new("w", DirectionalAmd { a_to_b: 0.4, b_to_a: 0.1 }, 0.5);
        assert_eq!(within.direction, ChangeDirection::Balanced);
    }

    #[test]
    fn ranking_order() {
        let mk = |w: &str, x: f64| AsymmetryRecord::new(w, DirectionalAmd { a_to_b: x, b_to_a: 0.0 }, 0.0);
        let mut records = vec![mk("b", 0.2), mk("c", 0.5), mk("a", 0.2)];
        rank_asymmetry(&mut records);
        let words: Vec<_> = records.iter().map(|r| r.word.as_str()).collect();
        assert_eq!(words, ["c", "a", "b"]);
    }

    #[test]
    fn lda_single_separating_dimension() {
        let a = m(&[&[0.0, 1.0, 1.0], &[0.2, 1.0, 1.0], &[0.1, 1.0, 1.0]]);
        let b = m(&[&[1.0, 1.0, 1.0], &[1.2, 1.0, 1.0], &[1.1, 1.0, 1.0]]);
        let dir = lda_direction(&a, &b, Regularization::Auto).unwrap();
        assert!(dir.weights[0] > 0.0);
        assert_eq!(&dir.weights[1..], &[0.0, 0.0]);
    }

    #[test]
    fn lda_closed_form_diagonal_scatter() {
        // class 1 around (0,0), class 2 around (2,1); scatter diag(2*0.5, 2*2)
        let a = m(&[&[-0.5, 0.0], &[0.5, 0.0], &[0.0, -1.0], &[0.0, 1.0]]);
        let b = m(&[&[1.5, 1.0], &[2.5, 1.0], &[2.0, 0.0], &[2.0, 2.0]]);
        let dir = lda_direction(&a, &b, Regularization::Fixed(0.0)).unwrap();
        // S_w = diag(0.25*2*2, 1*2*2) = diag(1, 4); μ₂−μ₁ = (2, 1)
        assert_abs_diff_eq!(dir.weights[0], 2.0 / 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dir.weights[1], 1.0 / 4.0, epsilon = 1e-9);
    }

    #[test]
    fn lda_errors() {
        let a = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let err = lda_direction(&a, &a, Regularization::Auto).unwrap_err();
        assert!(err.to_string().contains("identical period means"), "{err}");

        // no within-class spread in dimension 1 and no ridge
        let a = m(&[&[0.0, 1.0], &[1.0, 1.0]]);
        let b = m(&[&[2.0, 2.0], &[3.0, 2.0]]);
        let err = lda_direction(&a, &b, Regularization::Fixed(0.0)).unwrap_err();
        assert!(err.to_string().contains("regularisation"), "{err}");
        assert!(lda_direction(&a, &b, Regularization::Auto).is_ok());

        let one = m(&[&[0.0, 1.0]]);
        assert!(lda_direction(&one, &b, Regularization::Auto).is_err());
    }

    #[test]
    fn label_flip_negates_direction() {
        let a = m(&[&[0.1, 0.9, 0.3], &[0.2, 0.8, 0.5], &[0.0, 1.0, 0.4]]);
        let b = m(&[&[0.9, 0.2, 0.3], &[0.7, 0.1, 0.6], &[0.8, 0.3, 0.2]]);
        let fwd = lda_direction(&a, &b, Regularization::Auto).unwrap();
        let back = lda_direction(&b, &a, Regularization::Auto).unwrap();
        for (x, y) in fwd.weights.iter().zip(&back.weights) {
            assert_abs_diff_eq!(*x, -*y, epsilon = 1e-9);
        }
    }

    fn defs(k: usize) -> DefinitionSet {
        let texts = (0..k).map(|i| format!("d{i}")).collect();
        let mut emb = Matrix::zeros(k, 2);
        for i in 0..k {
            emb.row_mut(i)[0] = 1.0 + i as f64;
        }
        DefinitionSet::new("w", texts, emb).unwrap()
    }

    #[test]
    fn top_definitions() {
        let dir = LdaDirection { weights: vec![-2.0, 0.0, 3.0], lambda: 0.0 };
        let (earlier, later) = top_discriminative_definitions(&dir, &defs(3), 1).unwrap();
        assert_eq!(earlier[0].text, "d0");
        assert_eq!(later[0].text, "d2");

        let (earlier, later) = top_discriminative_definitions(&dir, &defs(3), 3).unwrap();
        assert_eq!(earlier.len() + later.len(), 2);

        assert!(top_discriminative_definitions(&dir, &defs(3), 4).is_err());
        assert!(top_discriminative_definitions(&dir, &defs(3), 0).is_err());
        let zero = LdaDirection { weights: vec![0.0; 3], lambda: 0.0 };
        assert!(top_discriminative_definitions(&zero, &defs(3), 1).is_err());
    }
}
