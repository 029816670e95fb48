use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tdaco::format;
use tdaco::harness::{
    gbas_convergence_experiment, parse_overrides, provenance, run_experiment, scaling_sweep,
    verify_bounds, write_plot_data, write_summary_csv, write_trials_csv, ExperimentConfig, PlotData,
};
use tdaco::instances::{make_random_dag, make_series};
use tdaco::{Error, Result};

#[derive(Parser)]
#[command(name = "tdaco", version, about = "Time-dependent ACO simulator and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials described by a key=value config.
    Run {
        config: PathBuf,
        /// `--key value` overrides for any config key.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Median/mean cycles on series(n) for each `--n` value.
    Sweep {
        config: PathBuf,
        /// Comma-separated chain lengths (`--n 4,8,12`) and config overrides.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Numeric sweep of the analysis inequalities as a pass/fail table.
    VerifyBounds {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a generated instance in the text format.
    GenInstance {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Empirical probability of no optimal GBAS walk against its bound.
    GbasConvergence {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

#[derive(Subcommand)]
enum GenKind {
    Series {
        #[arg(long)]
        n: usize,
        /// Attractor path length; defaults to n + 1.
        #[arg(long = "big-m")]
        big_m: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    Dag {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 1.0)]
        lo: f64,
        #[arg(long, default_value_t = 10.0)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(config: &PathBuf, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply_overrides(overrides)?;
    Ok(cfg)
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &parse_overrides(&overrides)?)?;
            let result = run_experiment(&cfg)?;
            if cfg.output.is_none() {
                let mut out = io::stdout().lock();
                write_trials_csv(&result, &mut out)?;
                writeln!(out)?;
                write_summary_csv(&result, &mut out)?;
            } else {
                let s = &result.summary;
                eprintln!(
                    "{} trials: median {} mean {} cap hits {}",
                    s.count, s.median, s.mean, s.cap_hits
                );
            }
        }
        Command::Sweep { config, overrides } => {
            let mut pairs = parse_overrides(&overrides)?;
            let ns = pairs
                .iter()
                .position(|(k, _)| k == "n")
                .map(|i| pairs.remove(i).1)
                .ok_or_else(|| Error::Config {
                    field: "n".into(),
                    message: "sweep needs --n 4,8,12".into(),
                })?;
            let n_values = ns
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|_| Error::Config {
                        field: "n".into(),
                        message: format!("bad chain length `{s}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = load(&config, &pairs)?;
            let rows = scaling_sweep(&cfg, &n_values, cfg.trials)?;
            let header = provenance(Some(&cfg), &[("n_values", ns.clone())]);
            let mut w = sink(cfg.output.as_ref())?;
            write_plot_data(&PlotData::CyclesVsN(rows), &header, &mut w)?;
            w.flush()?;
        }
        Command::VerifyBounds { output } => {
            let mut w = sink(output.as_ref())?;
            let rows = verify_bounds(&mut w)?;
            w.flush()?;
            let failed: Vec<_> = rows
                .iter()
                .filter(|r| !r.pass && r.check != "hard_recurrence_statement_gamma")
                .collect();
            if !failed.is_empty() {
                for r in failed {
                    eprintln!("FAIL {} {}", r.check, r.params);
                }
                return Err(Error::Domain("bound checks failed".into()));
            }
        }
        Command::GenInstance { kind } => {
            let (inst, output) = match kind {
                GenKind::Series { n, big_m, output } => (make_series(n, big_m.unwrap_or(n as f64 + 1.0))?, output),
                GenKind::Dag { n, density, lo, hi, seed, output } => {
                    (make_random_dag(n, density, (lo, hi), seed)?, output)
                }
            };
            match output {
                Some(p) => format::write(&inst, p)?,
                None => print!("{}", format::to_text(&inst)),
            }
        }
        Command::GbasConvergence { config, overrides } => {
            let cfg = load(&config, &parse_overrides(&overrides)?)?;
            let rows = gbas_convergence_experiment(&cfg)?;
            let mut w = sink(cfg.output.as_ref())?;
            write_plot_data(&PlotData::ProbVsM(rows), &provenance(Some(&cfg), &[]), &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
