//! One-to-one assignment on square cost matrices.

use crate::metrics::DistanceMatrix;

/// Greedy matching: repeatedly takes the smallest remaining entry and removes
/// its row and column. Ties go to the smaller row, then the smaller column.
///
/// Returns `(row, col)` pairs in selection order. For a rectangular matrix
/// the result has `min(rows, cols)` pairs.
pub fn greedy(costs: &DistanceMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = (costs.rows(), costs.cols());
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        entries.extend(costs.row(i).iter().enumerate().map(|(j, &d)| (d, i, j)));
    }
    entries.sort_unstable_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let target = rows.min(cols);
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut pairs = Vec::with_capacity(target);
    for (_, i, j) in entries {
        if row_used[i] || col_used[j] {
            continue;
        }
        row_used[i] = true;
        col_used[j] = true;
        pairs.push((i, j));
        if pairs.len() == target {
            break;
        }
    }
    pairs
}

/// Exact minimum-cost perfect matching (Hungarian algorithm with potentials,
/// O(n³)). Returns `assignment[row] = col`.
///
/// # Panics
/// If the matrix is not square.
pub fn hungarian(costs: &DistanceMatrix) -> Vec<usize> {
    let n = costs.rows();
    assert_eq!(n, costs.cols(), "hungarian requires a square matrix");
    if n == 0 {
        return Vec::new();
    }

    // 1-based potentials; column 0 is a virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let row = costs.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = row[j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}
