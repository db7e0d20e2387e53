use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dynit::acceptance::{acceptance_report, AcceptanceConfig};
use dynit::experiments::{default_specs, load_specs, write_all, FigureId, Overrides};

#[derive(Parser)]
#[command(
    name = "dynit",
    version,
    about = "Dynamic interference-threshold model: figures and acceptance checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// RNG seed; overrides spec files and DYNIT_SEED.
    #[arg(long, global = true, env = "DYNIT_SEED")]
    seed: Option<u64>,
    /// Monte Carlo samples per simulation.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Truncation tolerance for the demand series.
    #[arg(long, global = true)]
    tail_tol: Option<f64>,
    /// Absolute tolerance for capacity quadrature.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments in a spec file and write one CSV per experiment.
    Run {
        spec_file: PathBuf,
        /// Also write a gnuplot script next to each CSV.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run the acceptance suite; exits non-zero if any criterion fails.
    Accept {
        /// Restrict the suite to the figures in this spec file.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// List the figure ids accepted in spec files.
    ListFigures,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> dynit::Result<ExitCode> {
    let c = &cli.common;
    let overrides = Overrides {
        seed: c.seed,
        samples: c.samples,
        tail_tol: c.tail_tol,
        quad_tol: c.quad_tol,
    };
    match cli.command {
        Command::ListFigures => {
            for f in FigureId::ALL {
                println!("{:<12} {}", f.as_str(), f.description());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { spec_file, gnuplot } => {
            let mut specs = load_specs(&spec_file)?;
            for s in &mut specs {
                overrides.apply(s)?;
            }
            for path in write_all(&specs, &c.out_dir, gnuplot)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Accept { spec } => {
            let mut specs = match spec {
                Some(path) => load_specs(&path)?,
                None => default_specs(),
            };
            for s in &mut specs {
                overrides.apply(s)?;
            }
            let defaults = AcceptanceConfig::default();
            let cfg = AcceptanceConfig {
                samples: c.samples.unwrap_or(defaults.samples),
                seed: c.seed.unwrap_or(defaults.seed),
                tail_tol: c.tail_tol.unwrap_or(defaults.tail_tol),
                quad_tol: c.quad_tol.unwrap_or(defaults.quad_tol),
                ..defaults
            };
            let report = acceptance_report(&specs, cfg, Some(&c.out_dir));
            print!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
