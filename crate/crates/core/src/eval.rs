//! Rank correlation against gold scores and aggregation over runs.

use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::{csv_error, format_real, ChangeScoreTable, GoldScores};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::spaces::SpaceKind;

/// Fractional ranks starting at 1; tied values share the mean of their
/// positions.
pub fn rank_with_ties(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Validation("cannot rank an empty list".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("cannot rank non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain(
            "correlation undefined: one of the lists is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson correlation of the fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Validation(format!(
            "spearman needs at least 3 pairs, got {}",
            xs.len()
        )));
    }
    pearson(&rank_with_ties(xs)?, &rank_with_ties(ys)?)
}

/// Correlation of one score table with the gold standard.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// Free-form label of where the run came from (e.g. its output directory).
    pub source: String,
    pub metric: Metric,
    pub space: SpaceKind,
    /// Shared dimension of the run, `None` when it varies per word.
    pub k: Option<usize>,
    pub seed: u64,
    pub rho: f64,
    pub n_words: usize,
    /// Words present on only one side.
    pub missing: Vec<String>,
}

impl EvalResult {
    fn key(&self, key: GroupKey) -> String {
        match key {
            GroupKey::Source => self.source.clone(),
            GroupKey::Metric => self.metric.to_string(),
            GroupKey::Space => self.space.to_string(),
            GroupKey::K => k_label(self.k),
            GroupKey::Seed => self.seed.to_string(),
        }
    }
}

pub fn k_label(k: Option<usize>) -> String {
    k.map_or_else(|| "per-word".to_owned(), |k| k.to_string())
}

/// Spearman over the words scored in `table` and present in `gold`.
pub fn evaluate_run(table: &ChangeScoreTable, gold: &GoldScores) -> Result<EvalResult> {
    let mut predicted = Vec::new();
    let mut reference = Vec::new();
    let mut missing = Vec::new();
    // BTreeMap iteration gives lexicographic word order
    for (word, score) in table.scores() {
        match gold.get(word) {
            Some(g) => {
                predicted.push(score);
                reference.push(g);
            }
            None => missing.push(word.to_owned()),
        }
    }
    missing.extend(
        gold.entries()
            .keys()
            .filter(|w| !table.rows.contains_key(*w))
            .cloned(),
    );
    missing.sort();
    if predicted.len() < 3 {
        return Err(Error::Validation(format!(
            "only {} words shared between scores and gold, need at least 3",
            predicted.len()
        )));
    }
    if !missing.is_empty() {
        log::warn!(
            "{} {}: {} words missing from scores or gold: {}",
            table.metric,
            table.space,
            missing.len(),
            missing.join(" ")
        );
    }
    Ok(EvalResult {
        source: String::new(),
        metric: table.metric,
        space: table.space,
        k: table.uniform_k(),
        seed: table.seed,
        rho: spearman(&predicted, &reference)?,
        n_words: predicted.len(),
        missing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Source,
    Metric,
    Space,
    K,
    Seed,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Source => "source",
            GroupKey::Metric => "metric",
            GroupKey::Space => "space",
            GroupKey::K => "k",
            GroupKey::Seed => "seed",
        }
    }

    pub fn parse(s: &str) -> Result<GroupKey> {
        [GroupKey::Source, GroupKey::Metric, GroupKey::Space, GroupKey::K, GroupKey::Seed]
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown grouping key '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    /// `(key name, value)` in the requested key order.
    pub keys: Vec<(String, String)>,
    pub mean_rho: f64,
    /// Population standard deviation.
    pub std_rho: f64,
    pub n_runs: usize,
}

/// Mean and population std of `rho` per group.
pub fn aggregate(results: &[EvalResult], group_by: &[&str]) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(Error::Validation("nothing to aggregate".into()));
    }
    let keys = group_by
        .iter()
        .map(|k| GroupKey::parse(k))
        .collect::<Result<Vec<_>>>()?;
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for r in results {
        let values = keys.iter().map(|&k| r.key(k)).collect();
        groups.entry(values).or_default().push(r.rho);
    }
    Ok(groups
        .into_iter()
        .map(|(values, rhos)| {
            let n = rhos.len() as f64;
            let mean = rhos.iter().sum::<f64>() / n;
            let var = rhos.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
            AggregateRow {
                keys: keys
                    .iter()
                    .map(|k| k.name().to_owned())
                    .zip(values)
                    .collect(),
                mean_rho: mean,
                std_rho: var.sqrt(),
                n_runs: rhos.len(),
            }
        })
        .collect())
}

/// Writes `<keys…>,mean_rho,std_rho,n_runs`.
pub fn write_summary<W: std::io::Write>(rows: &[AggregateRow], group_by: &[&str], out: W) -> Result<()> {
    let path = Path::new("<summary output>");
    let mut out = csv::Writer::from_writer(out);
    let err = |e| csv_error(path, e);
    let mut header: Vec<&str> = group_by.iter().map(|k| k.trim()).collect();
    header.extend(["mean_rho", "std_rho", "n_runs"]);
    out.write_record(&header).map_err(err)?;
    for row in rows {
        let mut record: Vec<String> = row.keys.iter().map(|(_, v)| v.clone()).collect();
        record.push(format_real(row.mean_rho));
        record.push(format_real(row.std_rho));
        record.push(row.n_runs.to_string());
        out.write_record(&record).map_err(err)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ScoreRow;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ranking_examples() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 30.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(rank_with_ties(&[10.0, 10.0, 30.0]).unwrap(), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank_with_ties(&[5.0; 4]).unwrap(), vec![2.5; 4]);
        assert_eq!(rank_with_ties(&[3.0, 1.0, 2.0, 1.0]).unwrap(), vec![4.0, 1.5, 3.0, 1.5]);
        assert!(rank_with_ties(&[]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(), -1.0);
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Domain(_))
        ));
    }

    fn table(scores: &[(&str, f64)]) -> ChangeScoreTable {
        let mut t = ChangeScoreTable::new(Metric::Amd, SpaceKind::Full, 0);
        for &(w, s) in scores {
            t.rows.insert(w.into(), ScoreRow { k: 8, score: s });
        }
        t
    }

    fn ten_words() -> Vec<String> {
        (0..10).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn evaluate_perfect_and_swapped() {
        let words = ten_words();
        let gold = GoldScores::from_entries(words.iter().enumerate().map(|(i, w)| (w.clone(), i as f64))).unwrap();
        let perfect: Vec<(&str, f64)> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i as f64 * 0.1)).collect();
        let r = evaluate_run(&table(&perfect), &gold).unwrap();
        assert_eq!((r.rho, r.n_words, r.k), (1.0, 10, Some(8)));

        let mut swapped = perfect.clone();
        swapped[4].1 = 0.5;
        swapped[5].1 = 0.4;
        let r = evaluate_run(&table(&swapped), &gold).unwrap();
        assert_abs_diff_eq!(r.rho, 1.0 - 6.0 * 2.0 / 990.0, epsilon = 1e-12);
        assert!(r.rho > 0.9 && r.rho < 1.0);
    }

    #[test]
    fn evaluate_needs_three_shared_words() {
        let gold = GoldScores::from_entries([("a", 1.0), ("b", 2.0), ("c", 3.0)]).unwrap();
        let err = evaluate_run(&table(&[("a", 0.1), ("b", 0.2), ("z", 0.3)]), &gold).unwrap_err();
        assert!(err.to_string().contains("only 2 words"), "{err}");
    }

    #[test]
    fn evaluate_reports_missing_words() {
        let gold = GoldScores::from_entries([("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)]).unwrap();
        let r = evaluate_run(&table(&[("a", 0.1), ("b", 0.2), ("c", 0.3), ("x", 0.0)]), &gold).unwrap();
        assert_eq!(r.n_words, 3);
        assert_eq!(r.missing, vec!["d".to_owned(), "x".to_owned()]);
    }

    fn result(rho: f64, metric: Metric) -> EvalResult {
        EvalResult {
            source: "run".into(),
            metric,
            space: SpaceKind::Full,
            k: None,
            seed: 0,
            rho,
            n_words: 10,
            missing: vec![],
        }
    }

    #[test]
    fn aggregate_examples() {
        let rows = aggregate(&[result(0.5, Metric::Amd)], &["metric"]).unwrap();
        assert_eq!((rows[0].mean_rho, rows[0].std_rho, rows[0].n_runs), (0.5, 0.0, 1));

        let rows = aggregate(&[result(0.4, Metric::Amd), result(0.6, Metric::Amd)], &["metric", "space"]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_abs_diff_eq!(rows[0].mean_rho, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0].std_rho, 0.1, epsilon = 1e-15);
        assert_eq!(rows[0].keys[1], ("space".to_owned(), "full".to_owned()));

        let rows = aggregate(&[result(0.4, Metric::Amd), result(0.6, Metric::Apd)], &["metric"]).unwrap();
        assert_eq!(rows.len(), 2);

        let err = aggregate(&[result(0.4, Metric::Amd)], &["language"]).unwrap_err();
        assert!(err.to_string().contains("language"));
        assert!(aggregate(&[], &["metric"]).is_err());
    }
}
