use std::path::PathBuf;
use std::process::ExitCode;

use aliasfft_bench::{parse_snr, run_suite, Algo, BenchError, ExperimentConfig};
use clap::Parser;

/// Run sparse FFT experiments and write one CSV row per trial.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    /// Algorithms: dt1, dt2, dt3, ffast, rffast, dsfft, dense.
    #[arg(long, value_delimiter = ',', required = true)]
    algo: Vec<String>,
    /// Signal sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Sparsities.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// SNR values in dB, or `exact`.
    #[arg(long, value_delimiter = ',', default_value = "exact")]
    snr: Vec<String>,
    /// Seeds per cell.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// First seed; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn config(cli: Cli) -> Result<ExperimentConfig, BenchError> {
    Ok(ExperimentConfig {
        algos: cli.algo.iter().map(|s| s.parse::<Algo>()).collect::<Result<_, _>>()?,
        n_list: cli.n,
        k_list: cli.k,
        snr_list: cli.snr.iter().map(|s| parse_snr(s)).collect::<Result<_, _>>()?,
        trials: cli.trials,
        seed_base: cli.seed,
        out_path: cli.out,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match config(cli).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(2);
        }
    };
    match run_suite(&cfg) {
        Ok(rows) => {
            eprintln!("bench: wrote {} rows to {}", rows.len(), cfg.out_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::FAILURE
        }
    }
}
