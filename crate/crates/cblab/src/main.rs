//! `cblab`: convergence-order experiments for atomistic vs continuum
//! energies on periodic 2-lattices.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cblab::convergence::{emit, run_experiment, ExperimentConfig, OutputFormat, SlopeFit};
use cblab::suite::{run_suite, SuiteKind};

#[derive(Parser)]
#[command(
    name = "cblab",
    version,
    about = "Atomistic vs Cauchy-Born energies on periodic 2-lattices: \
             measure each continuum model's order of accuracy"
)]
struct Cli {
    /// Worker threads for energy sums and quadrature (default: all cores).
    /// Results are bit-identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one convergence sweep described by a key = value config file.
    Run {
        /// Config file; `model` is required, everything else defaults to
        /// the canonical sweep for that model.
        #[arg(long)]
        config: PathBuf,
        /// Write the report here (summary always goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Run a bundled check suite; exits nonzero if any check fails.
    Suite {
        #[arg(value_enum)]
        name: SuiteArg,
        /// Directory for the per-sweep CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Rates,
    Symmetry,
    All,
}

impl From<SuiteArg> for SuiteKind {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Rates => SuiteKind::Rates,
            SuiteArg::Symmetry => SuiteKind::Symmetry,
            SuiteArg::All => SuiteKind::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("cblab: failed to configure {threads} threads: {e}");
            return ExitCode::FAILURE;
        }
    }

    match cli.command {
        Command::Run {
            config,
            out,
            format,
        } => match run_command(&config, out.as_deref(), format.into()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("cblab: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Suite { name, out } => match run_suite(name.into(), out.as_deref()) {
            Ok(outcomes) => {
                let mut failures = 0usize;
                for outcome in &outcomes {
                    println!("{outcome}");
                    if !outcome.passed {
                        failures += 1;
                    }
                }
                if failures == 0 {
                    println!("all {} checks passed", outcomes.len());
                    ExitCode::SUCCESS
                } else {
                    println!("{failures} of {} checks failed", outcomes.len());
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("cblab: {e}");
                ExitCode::FAILURE
            }
        },
    }
}

fn run_command(
    config: &std::path::Path,
    out: Option<&std::path::Path>,
    format: OutputFormat,
) -> cblab::Result<()> {
    let text = std::fs::read_to_string(config)?;
    let cfg = ExperimentConfig::parse(&text)?;
    let report = run_experiment(&cfg)?;

    println!(
        "model {}, field {} (amplitude {}), potential {}, symmetrize {}, d = {}",
        cfg.model, cfg.field, cfg.amplitude, cfg.potential, cfg.symmetrize, cfg.dim
    );
    println!("{:>6}  {:>24}  {:>24}  {:>12}", "N", "E^a per site", "E^c", "err");
    for row in &report.rows {
        println!(
            "{:>6}  {:>24.16e}  {:>24.16e}  {:>12.4e}{}",
            row.n,
            row.e_atomistic_per_site,
            row.e_continuum,
            row.err,
            if row.retained { "" } else { "  (below floor)" }
        );
    }
    match report.fit {
        SlopeFit::Exact => println!("fit: exact (all errors at the floor)"),
        SlopeFit::Fitted {
            slope,
            residual,
            points_used,
        } => println!(
            "fit: slope {slope:.4} (log-residual {residual:.2e}, {points_used} points)"
        ),
    }
    println!("wall time: {:.2}s", report.wall_time_s);

    if let Some(path) = out {
        emit(&report, format, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
