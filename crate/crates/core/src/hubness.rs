//! Nearest-neighbour occurrence statistics between the two periods.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::metrics::{distance_matrix, DistanceMatrix};

/// Symmetric hubness statistics, each the mean of both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubnessStats {
    /// Share of queries whose nearest neighbour is the most frequent one.
    pub dominant_share: f64,
    /// Share of candidates never chosen as a nearest neighbour.
    pub unused_share: f64,
    /// Queries per distinct neighbour that was used at least once.
    pub avg_load: f64,
}

impl HubnessStats {
    fn mean(x: &HubnessStats, y: &HubnessStats) -> HubnessStats {
        HubnessStats {
            dominant_share: (x.dominant_share + y.dominant_share) / 2.0,
            unused_share: (x.unused_share + y.unused_share) / 2.0,
            avg_load: (x.avg_load + y.avg_load) / 2.0,
        }
    }
}

/// Nearest row of `b` for every row of `a` (lowest index on ties).
pub fn nn_assignment(a: &Matrix, b: &Matrix) -> Result<Vec<usize>> {
    Ok(distance_matrix(a, b)?.row_argmin())
}

/// Statistics of one assignment of `queries` onto `candidates` neighbours.
pub fn assignment_stats(assignment: &[usize], candidates: usize) -> HubnessStats {
    let mut counts = vec![0usize; candidates];
    for &j in assignment {
        counts[j] += 1;
    }
    let used = counts.iter().filter(|&&c| c > 0).count();
    let top = counts.iter().copied().max().unwrap_or(0);
    let queries = assignment.len() as f64;
    HubnessStats {
        dominant_share: top as f64 / queries,
        unused_share: (candidates - used) as f64 / candidates as f64,
        avg_load: queries / used as f64,
    }
}

fn directional(d: &DistanceMatrix) -> HubnessStats {
    assignment_stats(&d.row_argmin(), d.cols())
}

/// Queries from `a`, neighbours in `b`.
pub fn directional_hubness(a: &Matrix, b: &Matrix) -> Result<HubnessStats> {
    Ok(directional(&distance_matrix(a, b)?))
}

pub fn hubness_report(a: &Matrix, b: &Matrix) -> Result<HubnessStats> {
    let d = distance_matrix(a, b)?;
    Ok(HubnessStats::mean(&directional(&d), &directional(&d.transpose())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn nn_examples() {
        let a = m(&[&[1.0, 0.0], &[0.9, 0.1]]);
        let b = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(nn_assignment(&a, &b).unwrap(), vec![0, 0]);
        let c = m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.2]]);
        assert_eq!(nn_assignment(&c, &c).unwrap(), vec![0, 1, 2]);
        // equidistant candidates resolve to the first
        assert_eq!(nn_assignment(&m(&[&[1.0, 1.0]]), &b).unwrap(), vec![0]);
    }

    #[test]
    fn closed_form_stats() {
        let hub = assignment_stats(&[2, 2, 2, 2], 5);
        assert_eq!(hub, HubnessStats { dominant_share: 1.0, unused_share: 0.8, avg_load: 4.0 });

        let identity = assignment_stats(&[0, 1, 2, 3], 4);
        assert_eq!(identity, HubnessStats { dominant_share: 0.25, unused_share: 0.0, avg_load: 1.0 });

        let even = assignment_stats(&[0, 0, 3, 3, 5, 5], 6);
        assert_eq!(even, HubnessStats { dominant_share: 2.0 / 6.0, unused_share: 0.5, avg_load: 2.0 });
    }

    #[test]
    fn report_on_identical_sets() {
        let a = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, -1.0]]);
        let r = hubness_report(&a, &a).unwrap();
        assert_eq!(r, HubnessStats { dominant_share: 0.25, unused_share: 0.0, avg_load: 1.0 });
    }
}
