use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tensor_mmse::harness::{self, output, run_campaign, selftest, Campaign, OUT_DIR_ENV};
use tensor_mmse::metrics::SolveTail;
use tensor_mmse::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tensor-mmse",
    version,
    about = "Low-rank tensor MMSE equalization experiments",
    after_help = "Relative output paths are placed under $TENSOR_MMSE_OUT_DIR when it is set.\n\
                  Exit codes: 0 success, 1 configuration error, 2 runtime or numerical error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo campaign and write a CSV table.
    Simulate {
        /// INI campaign file; flags below override its keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed (campaign.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV (campaign.out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot-data file of x,series,y triples (campaign.plot).
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Trials per sweep point (campaign.trials).
        #[arg(long)]
        trials: Option<usize>,
        /// Sweep as VAR=v1,v2,... with VAR one of snr_db, K, R, D, N.
        #[arg(long)]
        sweep: Option<String>,
        /// Any other key as section.key=value; may repeat.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Write closed-form product counts for the benchmark and tensor filters.
    Complexity {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trailing per-block solve term: linear (N_d) or quadratic (N_d^2).
        #[arg(long, default_value = "linear")]
        tail: String,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn resolve_out(path: Option<PathBuf>, default_name: &str) -> PathBuf {
    let path = path.unwrap_or_else(|| PathBuf::from(default_name));
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path,
    }
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
    trials: Option<usize>,
    sweep: Option<String>,
    sets: Vec<String>,
) -> Result<(), Error> {
    let mut campaign = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Campaign::from_ini(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => Campaign::default(),
    };
    for kv in &sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set '{kv}' is not KEY=VALUE")))?;
        campaign.set(k, v)?;
    }
    if let Some(s) = sweep {
        campaign.set_sweep(&s)?;
    }
    if let Some(s) = seed {
        campaign.master_seed = s;
    }
    if let Some(t) = trials {
        campaign.trials = t;
    }
    if out.is_some() {
        campaign.out = out;
    }
    if plot.is_some() {
        campaign.plot = plot;
    }
    campaign.validate()?;

    let rows = run_campaign(&campaign)?;
    let out_path = resolve_out(campaign.out.clone(), "results.csv");
    harness::emit_csv(&rows, &out_path)?;
    if let Some(p) = campaign.plot.clone() {
        harness::emit_plot_data(&rows, &resolve_out(Some(p), "plot.csv"))?;
    }
    for r in &rows {
        println!(
            "{}={:<8} {:<17} SINR {:>8.3} dB  MSE {:.4}  iters {:.2}",
            r.sweep, r.sweep_value, r.equalizer, r.sinr_db, r.mse, r.iterations
        );
    }
    eprintln!("wrote {}", out_path.display());
    Ok(())
}

fn complexity(out: Option<PathBuf>, tail: &str) -> Result<(), Error> {
    let tail = match tail {
        "linear" => SolveTail::Linear,
        "quadratic" => SolveTail::Quadratic,
        other => return Err(Error::Config(format!("unknown tail '{other}'"))),
    };
    let rows = harness::emit_complexity_table(&harness::default_complexity_configs(), tail)?;
    let path = resolve_out(out, "complexity.csv");
    output::emit_complexity_csv(&rows, &path)?;
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            plot,
            trials,
            sweep,
            sets,
        } => simulate(config, seed, out, plot, trials, sweep, sets),
        Command::Complexity { out, tail } => complexity(out, &tail),
        Command::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                println!(
                    "[{}] {} ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
