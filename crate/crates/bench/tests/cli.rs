use std::path::Path;
use std::process::Command;

use aliasfft::Snr;
use aliasfft_bench::{run_cell, run_suite, Algo, BenchError, Cell, ExperimentConfig, CSV_HEADER};

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().expect("bench binary runs")
}

fn rows_without_runtime(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            cols[5] = "";
            cols.join(",")
        })
        .collect()
}

fn config(algo: Algo, n: usize, k: usize, trials: usize, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        algos: vec![algo],
        n_list: vec![n],
        k_list: vec![k],
        snr_list: vec![Snr::Exact],
        trials,
        seed_base: 0,
        out_path: out.to_path_buf(),
    }
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = bench(&[
            "--algo",
            "dt3,ffast,rffast,dsfft",
            "--n",
            "504,1024",
            "--k",
            "4",
            "--snr",
            "exact,10",
            "--trials",
            "3",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = rows_without_runtime(&a);
    assert_eq!(rows, rows_without_runtime(&b));
    assert_eq!(rows.len(), 1 + 4 * 2 * 2 * 3);
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().next(), Some(CSV_HEADER));
    // Power-of-two algorithms skip N=504 and the peeling ones skip 1024.
    assert_eq!(rows.iter().filter(|r| r.contains("skipped:")).count(), 4 * 2 * 3);
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    for args in [
        vec!["--algo", "fftw", "--n", "64", "--k", "2", "--out", out],
        vec!["--algo", "dt1", "--n", "64", "--k", "2", "--trials", "0", "--out", out],
        vec!["--algo", "dt1", "--n", "64", "--k", "2", "--snr", "loud", "--out", out],
        vec!["--algo", "dt1", "--n", "64", "--out", out],
    ] {
        assert_eq!(bench(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn single_cell_suite_writes_header_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let records = run_suite(&config(Algo::Dt1, 256, 2, 5, &out)).unwrap();
    assert_eq!(records.len(), 5);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 13 && l.contains(",exact,")));
}

#[test]
fn empty_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Algo::Dt1, 256, 2, 1, &dir.path().join("e.csv"));
    cfg.k_list.clear();
    assert!(matches!(run_suite(&cfg), Err(BenchError::InvalidConfig(_))));
}

#[test]
fn unwritable_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Algo::Dense, 64, 2, 1, &dir.path().join("missing").join("out.csv"));
    assert!(matches!(run_suite(&cfg), Err(BenchError::Io { .. })));
}

#[test]
fn ffast_fixture_cell() {
    let cell = Cell { algo: Algo::Ffast, n: 20, k: 5, snr: Snr::Exact, trials: 1, seed_base: 7 };
    let r = &run_cell(&cell).unwrap()[0];
    assert_eq!(r.samples().map(|s| s.0), Some(27));
}

#[test]
fn dense_reads_everything() {
    let cell = Cell { algo: Algo::Dense, n: 300, k: 3, snr: Snr::Db(10.0), trials: 3, seed_base: 0 };
    for r in run_cell(&cell).unwrap() {
        assert_eq!(r.sampled_pct(), Some(1.0));
    }
}

#[test]
fn dt3_recovers_at_sixty_four_k() {
    let cell = Cell { algo: Algo::Dt3, n: 1 << 16, k: 4, snr: Snr::Exact, trials: 10, seed_base: 0 };
    let rows = run_cell(&cell).unwrap();
    let ok = rows.iter().filter(|r| r.success()).count();
    assert!(ok >= 9, "{ok}/10");
}

#[test]
fn dt3_unique_samples_grow_slowly() {
    let unique = |n: usize| -> f64 {
        let cell = Cell { algo: Algo::Dt3, n, k: 16, snr: Snr::Exact, trials: 3, seed_base: 0 };
        let rows = run_cell(&cell).unwrap();
        rows.iter().map(|r| r.samples().unwrap().1 as f64).sum::<f64>() / rows.len() as f64
    };
    assert!(unique(1 << 16) / unique(1 << 14) < 2.5);
}
