use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexshift::corpus::{read_results, write_store, StoreEntry};
use lexshift::metrics::samd_greedy;
use lexshift::pipeline::samd_seeds;
use lexshift::synth::gaussian_cluster;
use lexshift::Matrix;

fn lexshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexshift"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let store = dir.join("store");
    let mut args = vec!["synth", "--out", p(&store), "--words", "8"];
    args.extend_from_slice(extra);
    let out = lexshift(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    store
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![reader.headers().unwrap().iter().map(str::to_owned).collect()];
    for r in reader.records() {
        rows.push(r.unwrap().iter().map(str::to_owned).collect());
    }
    rows
}

#[test]
fn synthetic_store_validates() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &[]);
    let out = lexshift(&["validate-store", "--store", p(&store), "--defs", p(&store)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(store.join("gold.tsv").exists());
}

#[test]
fn corrupt_store_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &[]);
    fs::write(store.join("w000").join("1.emb"), b"EMB1\x01\x00").unwrap();
    let out = lexshift(&["validate-store", "--store", p(&store)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn definition_space_without_definitions_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &[]);
    let out = lexshift(&["score", "--store", p(&store), "--space", "def", "--out", p(&dir.path().join("r"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_metric_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &[]);
    let out = lexshift(&["score", "--store", p(&store), "--metric", "cosine", "--out", p(&dir.path().join("r"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn asking_for_more_definitions_than_exist_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &[]);
    let args = ["explain", "--store", p(&store), "--defs", p(&store), "--word", "w000", "--m", "7"];
    assert_eq!(code(&lexshift(&args)), 2);
    let args = ["explain", "--store", p(&store), "--defs", p(&store), "--word", "w000", "--m", "2"];
    let out = lexshift(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("w000"));
}

#[test]
fn rank_deficient_word_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let full_a = gaussian_cluster(&[1.0, 0.0, 0.0, 0.0], 0.2, 10, 1).unwrap();
    let full_b = gaussian_cluster(&[0.0, 1.0, 0.0, 0.0], 0.2, 10, 2).unwrap();
    // every usage lies on the line through (1, 1, 0, 0)
    let line = |scale: f64| Matrix::from_rows(&[[scale, scale, 0.0, 0.0], [2.0 * scale, 2.0 * scale, 0.0, 0.0]]).unwrap();
    let entries = vec![
        StoreEntry { word: "flat".into(), period1: line(1.0), period2: line(3.0) },
        StoreEntry { word: "full".into(), period1: full_a, period2: full_b },
    ];
    write_store(&store, "test", "en", &entries).unwrap();
    let results = dir.path().join("r");
    let out = lexshift(&["score", "--store", p(&store), "--space", "pca", "--k", "3", "--metric", "apd", "--out", p(&results)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flat"));
    let table = read_results(results.join("apd-pca-k3-s0.csv")).unwrap();
    assert_eq!(table.rows.keys().collect::<Vec<_>>(), ["full"]);
    assert_eq!(table.rows["full"].k, 3);
}

#[test]
fn repetitions_average_independent_samples() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let a = gaussian_cluster(&[1.0, 0.0, 0.0], 0.3, 9, 3).unwrap();
    let b = gaussian_cluster(&[0.0, 1.0, 0.0], 0.3, 5, 4).unwrap();
    // the store holds f32, so score against what it reads back
    let opened = write_store(&store, "test", "en", &[StoreEntry { word: "w".into(), period1: a, period2: b }]).unwrap();
    let (a, b) = opened.load_pair("w").unwrap();
    let (a, b) = (a.into_vectors(), b.into_vectors());
    let results = dir.path().join("r");
    let out = lexshift(&[
        "score", "--store", p(&store), "--metric", "samd", "--repetitions", "3", "--seed", "5", "--out", p(&results),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = read_results(results.join("samd-full-s5-r3.csv")).unwrap();
    let seeds = samd_seeds(5, 3, "w");
    let expected = seeds.iter().map(|&s| samd_greedy(&a, &b, s).unwrap().score).sum::<f64>() / 3.0;
    assert!((table.rows["w"].score - expected).abs() < 1e-13);
}

fn write_results_file(path: &Path, scores: &[f64]) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    let mut text = String::from("word,metric,space,k,seed,score\n");
    for (i, s) in scores.iter().enumerate() {
        text.push_str(&format!("w{i},apd,full,4,0,{s}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn evaluate_aggregates_runs() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "# word\tscore\nw0\t1\nw1\t2\nw2\t3\nw3\t4\nw4\t5\n").unwrap();
    // rank differences with squared sums 12 and 8 give rho 0.4 and 0.6
    let first = dir.path().join("a").join("apd-full-s0.csv");
    let second = dir.path().join("b").join("apd-full-s0.csv");
    write_results_file(&first, &[4.0, 1.0, 2.0, 3.0, 5.0]);
    write_results_file(&second, &[3.0, 2.0, 1.0, 4.0, 5.0]);
    let per_file = dir.path().join("eval.csv");
    let summary = dir.path().join("summary.csv");
    let out = lexshift(&[
        "evaluate", p(&first), p(&second), "--gold", p(&gold), "--out", p(&per_file),
        "--group-by", "metric,space", "--summary", p(&summary),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let rows = csv_rows(&per_file);
    let rho = rows[0].iter().position(|h| h == "rho").unwrap();
    let source = rows[0].iter().position(|h| h == "source").unwrap();
    let found: Vec<(String, f64)> = rows[1..].iter().map(|r| (r[source].clone(), r[rho].parse().unwrap())).collect();
    assert_eq!(found.len(), 2);
    assert_eq!(found[0].0, "a");
    assert!((found[0].1 - 0.4).abs() < 1e-12);
    assert!((found[1].1 - 0.6).abs() < 1e-12);

    let rows = csv_rows(&summary);
    assert_eq!(rows[0], ["metric", "space", "mean_rho", "std_rho", "n_runs"]);
    assert_eq!(rows.len(), 2);
    assert!((rows[1][2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert!((rows[1][3].parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(rows[1][4], "2");
}

#[test]
fn evaluate_reports_broken_files() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "w0\t1\nw1\t2\nw2\t3\n").unwrap();
    let good = dir.path().join("r").join("apd-full-s0.csv");
    write_results_file(&good, &[1.0, 2.0, 3.0]);
    let bad = dir.path().join("r").join("broken.csv");
    fs::write(&bad, "word,metric\nw0,apd\n").unwrap();
    let per_file = dir.path().join("eval.csv");
    let out = lexshift(&["evaluate", p(&good), p(&bad), "--gold", p(&gold), "--out", p(&per_file)]);
    assert_eq!(code(&out), 1);
    let rows = csv_rows(&per_file);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][6], "1");
    assert!(!rows[2][8].is_empty());
}

#[test]
fn identical_periods_have_no_hubs() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &["--scenario", "stable", "--identical", "--n-usages", "12"]);
    let out_path = dir.path().join("hub.csv");
    let out = lexshift(&["hubness", "--store", p(&store), "--out", p(&out_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_path);
    assert_eq!(rows[0], ["word", "space", "dominant_share", "unused_share", "avg_load"]);
    assert_eq!(rows.len(), 9);
    for r in &rows[1..] {
        assert!((r[2].parse::<f64>().unwrap() - 1.0 / 12.0).abs() < 1e-14);
        assert_eq!(r[3], "0");
        assert_eq!(r[4], "1");
    }
}

#[test]
fn explain_ranking_labels_directions() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &["--scenario", "emergence"]);
    let ranking = dir.path().join("asym.csv");
    let out = lexshift(&["explain", "--store", p(&store), "--ranking", p(&ranking)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&ranking);
    assert_eq!(rows.len(), 9);
    assert!(rows[1..].iter().all(|r| r[4] == "BROADENING"));
}

#[test]
fn stress_writes_both_arms() {
    let dir = tempfile::tempdir().unwrap();
    let store = synth(dir.path(), &["--dim", "16"]);
    let out_path = dir.path().join("stress.csv");
    let out = lexshift(&[
        "stress", "--store", p(&store), "--gold", p(&store.join("gold.tsv")), "--metric", "apd,amd", "--out", p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_path);
    assert_eq!(rows[0], ["metric", "space", "k", "seed", "rho", "n_words"]);
    // k = 8 and 4, two arms, two metrics
    assert_eq!(rows.len() - 1, 8);
}
