//! Experiment harness: runs the sparse FFT algorithms over a grid of
//! signal sizes, sparsities and noise levels and writes one CSV row per
//! trial.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use aliasfft::dsfft::{dsfft, DsfftConfig};
use aliasfft::oneshot::{sfft_dt, OneShotConfig, Variant};
use aliasfft::peeling::{ffast, plan_cycles, r_ffast, Mode};
use aliasfft::signals::DEFAULT_L0_TOL;
use aliasfft::{evaluate, fast_dft, generate_test_case, SampleLedger, Signal, Snr, SparseSpectrum};
use rayon::prelude::*;

/// Exact CSV header.
pub const CSV_HEADER: &str = "algo,n,k,snr,seed,runtime_ns,samples_raw,samples_unique,sampled_pct,l0,l1,l2,success";

/// Caps the worker pool used by [`run_suite`].
pub const THREADS_ENV: &str = "ALIASFFT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Algorithm(#[from] aliasfft::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Dt1,
    Dt2,
    Dt3,
    Ffast,
    Rffast,
    Dsfft,
    Dense,
}

impl Algo {
    pub const ALL: [Algo; 7] = [Algo::Dt1, Algo::Dt2, Algo::Dt3, Algo::Ffast, Algo::Rffast, Algo::Dsfft, Algo::Dense];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Dt1 => "dt1",
            Algo::Dt2 => "dt2",
            Algo::Dt3 => "dt3",
            Algo::Ffast => "ffast",
            Algo::Rffast => "rffast",
            Algo::Dsfft => "dsfft",
            Algo::Dense => "dense",
        }
    }

    fn variant(self) -> Option<Variant> {
        match self {
            Algo::Dt1 => Some(Variant::Dt1),
            Algo::Dt2 => Some(Variant::Dt2),
            Algo::Dt3 => Some(Variant::Dt3),
            _ => None,
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BenchError::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

/// Parses `exact` or a dB value.
pub fn parse_snr(s: &str) -> Result<Snr, BenchError> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("exact") {
        return Ok(Snr::Exact);
    }
    match s.parse::<f64>() {
        Ok(db) if db.is_finite() => Ok(Snr::Db(db)),
        _ => Err(BenchError::InvalidConfig(format!("bad SNR '{s}'"))),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algos: Vec<Algo>,
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub snr_list: Vec<Snr>,
    pub trials: usize,
    pub seed_base: u64,
    pub out_path: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let empty = |what: &str| Err(BenchError::InvalidConfig(format!("{what} list is empty")));
        if self.algos.is_empty() {
            return empty("algo");
        }
        if self.n_list.is_empty() {
            return empty("n");
        }
        if self.k_list.is_empty() {
            return empty("k");
        }
        if self.snr_list.is_empty() {
            return empty("snr");
        }
        if self.trials == 0 {
            return Err(BenchError::InvalidConfig("trials must be at least 1".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0) {
            return Err(BenchError::InvalidConfig(format!("signal size {n} must be positive")));
        }
        if self.k_list.contains(&0) {
            return Err(BenchError::InvalidConfig("sparsity must be positive".into()));
        }
        Ok(())
    }

    /// Cartesian product of the lists in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &algo in &self.algos {
            for &n in &self.n_list {
                for &k in &self.k_list {
                    for &snr in &self.snr_list {
                        out.push(Cell { algo, n, k, snr, trials: self.trials, seed_base: self.seed_base });
                    }
                }
            }
        }
        out
    }
}

/// One grid point of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub snr: Snr,
    pub trials: usize,
    pub seed_base: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ran {
        runtime_ns: u128,
        samples_raw: u64,
        samples_unique: usize,
        l0: usize,
        l1: f64,
        l2: f64,
        /// Recovered support equals the true support, values aside.
        support_recovered: bool,
    },
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub snr: Snr,
    pub seed: u64,
    pub outcome: Outcome,
}

impl ExperimentRecord {
    pub fn sampled_pct(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Ran { samples_unique, .. } => Some(samples_unique as f64 / self.n as f64),
            Outcome::Skipped(_) => None,
        }
    }

    pub fn success(&self) -> bool {
        matches!(self.outcome, Outcome::Ran { l0: 0, .. })
    }

    pub fn support_recovered(&self) -> bool {
        matches!(self.outcome, Outcome::Ran { support_recovered: true, .. })
    }

    pub fn samples(&self) -> Option<(u64, usize)> {
        match self.outcome {
            Outcome::Ran { samples_raw, samples_unique, .. } => Some((samples_raw, samples_unique)),
            Outcome::Skipped(_) => None,
        }
    }

    pub fn to_csv_row(&self) -> String {
        let head = format!("{},{},{},{},{}", self.algo, self.n, self.k, self.snr, self.seed);
        match &self.outcome {
            Outcome::Ran { runtime_ns, samples_raw, samples_unique, l0, l1, l2, .. } => format!(
                "{head},{runtime_ns},{samples_raw},{samples_unique},{},{l0},{},{},{}",
                fmt_float(self.sampled_pct().unwrap_or(0.0)),
                fmt_float(*l1),
                fmt_float(*l2),
                self.success()
            ),
            // Reason text must not break the column layout.
            Outcome::Skipped(reason) => {
                format!("{head},,,,,,,,skipped:{}", reason.replace([',', '\n', '\r'], ";"))
            }
        }
    }
}

/// Nine significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = x.abs().log10().floor() as i32;
    if (-4..9).contains(&digits) {
        let decimals = (8 - digits).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

/// Why `(algo, n, k)` cannot run, if it cannot.
pub fn check_compat(algo: Algo, n: usize, k: usize) -> Option<String> {
    if k == 0 || k > n {
        return Some(format!("k={k} outside 1..={n}"));
    }
    match algo {
        Algo::Dt1 | Algo::Dt2 | Algo::Dt3 | Algo::Dsfft if !n.is_power_of_two() => {
            Some(format!("n={n} is not a power of two"))
        }
        Algo::Ffast | Algo::Rffast => plan_cycles(n, k, Mode::Exact, 0).err().map(|e| e.to_string()),
        _ => None,
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for an algorithm's internal randomness, distinct per cell and trial.
pub fn stream_seed(algo: Algo, n: usize, k: usize, seed: u64) -> u64 {
    let mut h = mix(seed);
    for b in algo.name().bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ mix(n as u64) ^ mix(k as u64).rotate_left(17))
}

/// Runs one algorithm on `x` with a fresh ledger.
pub fn run_algorithm(
    algo: Algo,
    x: &Signal,
    k: usize,
    snr: Snr,
    seed: u64,
    ledger: &mut SampleLedger,
) -> Result<SparseSpectrum, BenchError> {
    let n = x.len();
    let est = match algo {
        Algo::Dt1 | Algo::Dt2 | Algo::Dt3 => {
            let variant = algo.variant().expect("one-shot algorithm");
            let cfg = OneShotConfig::for_signal(n, k, variant, seed)?;
            sfft_dt(x, k, &cfg, ledger)?
        }
        Algo::Ffast => ffast(x, k, ledger)?,
        Algo::Rffast => r_ffast(x, k, snr.db(), seed, ledger)?,
        Algo::Dsfft => {
            let cfg = DsfftConfig { snr_hint: snr.db(), seed, ..DsfftConfig::default() };
            dsfft(x, k, &cfg, ledger)?
        }
        Algo::Dense => {
            for i in 0..n {
                ledger.record(i);
            }
            let mut s = SparseSpectrum::from_dense(&fast_dft(x));
            s.truncate_to(k);
            s
        }
    };
    Ok(est)
}

/// All trials of one cell. Trial `t` uses signal seed `seed_base + t`, so
/// every algorithm sees the same signals for a given `(n, k, snr)`.
pub fn run_cell(cell: &Cell) -> Result<Vec<ExperimentRecord>, BenchError> {
    let seeds = (0..cell.trials as u64).map(|t| cell.seed_base.wrapping_add(t));
    let record =
        |seed, outcome| ExperimentRecord { algo: cell.algo, n: cell.n, k: cell.k, snr: cell.snr, seed, outcome };
    if let Some(reason) = check_compat(cell.algo, cell.n, cell.k) {
        return Ok(seeds.map(|s| record(s, Outcome::Skipped(reason.clone()))).collect());
    }
    let mut out = Vec::with_capacity(cell.trials);
    for seed in seeds {
        let case = generate_test_case(cell.n, cell.k, cell.snr, seed)?;
        let algo_seed = stream_seed(cell.algo, cell.n, cell.k, seed);
        let mut ledger = SampleLedger::new();
        let start = Instant::now();
        let result = run_algorithm(cell.algo, &case.signal, cell.k, cell.snr, algo_seed, &mut ledger);
        let runtime_ns = start.elapsed().as_nanos();
        let outcome = match result {
            Ok(est) => {
                let m = evaluate(&case.truth, &est, DEFAULT_L0_TOL)?;
                Outcome::Ran {
                    runtime_ns,
                    samples_raw: ledger.count(),
                    samples_unique: ledger.unique(),
                    l0: m.l0,
                    l1: m.l1,
                    l2: m.l2,
                    support_recovered: est.support() == case.truth.support(),
                }
            }
            Err(BenchError::Algorithm(e)) => Outcome::Skipped(e.to_string()),
            Err(e) => return Err(e),
        };
        out.push(record(seed, outcome));
    }
    Ok(out)
}

fn pool() -> Result<rayon::ThreadPool, BenchError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        builder = builder.num_threads(t.max(1));
    }
    builder.build().map_err(|e| BenchError::InvalidConfig(format!("thread pool: {e}")))
}

/// Runs every cell in parallel and returns rows in grid order.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, BenchError> {
    config.validate()?;
    let cells = config.cells();
    let per_cell: Vec<Result<Vec<ExperimentRecord>, BenchError>> =
        pool()?.install(|| cells.par_iter().map(run_cell).collect());
    let mut rows = Vec::new();
    for r in per_cell {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_csv(path: &Path, records: &[ExperimentRecord]) -> Result<(), BenchError> {
    let io_err = |source| BenchError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "{CSV_HEADER}").map_err(io_err)?;
    for r in records {
        writeln!(w, "{}", r.to_csv_row()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Runs the whole grid and writes the CSV to `config.out_path`.
pub fn run_suite(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, BenchError> {
    let records = run_records(config)?;
    write_csv(&config.out_path, &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("fftw".parse::<Algo>().is_err());
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(0.25), "0.25");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(1234.56789012), "1234.56789");
        assert_eq!(fmt_float(1.5e-9), "1.50000000e-9");
        assert_eq!(fmt_float(0.0), "0");
    }

    #[test]
    fn compat_rules() {
        assert!(check_compat(Algo::Dt3, 1000, 4).is_some());
        assert!(check_compat(Algo::Dt3, 1024, 4).is_none());
        assert!(check_compat(Algo::Ffast, 4096, 4).is_some());
        assert!(check_compat(Algo::Ffast, 20, 5).is_none());
        assert!(check_compat(Algo::Dense, 7, 8).is_some());
    }

    #[test]
    fn skipped_row_keeps_columns() {
        let r = ExperimentRecord {
            algo: Algo::Dt1,
            n: 10,
            k: 1,
            snr: Snr::Exact,
            seed: 3,
            outcome: Outcome::Skipped("a, b".into()),
        };
        let row = r.to_csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.ends_with("skipped:a; b"));
    }

    #[test]
    fn stream_seeds_differ() {
        let a = stream_seed(Algo::Dt1, 64, 4, 0);
        assert_ne!(a, stream_seed(Algo::Dt2, 64, 4, 0));
        assert_ne!(a, stream_seed(Algo::Dt1, 64, 4, 1));
        assert_ne!(a, stream_seed(Algo::Dt1, 128, 4, 0));
    }
}
