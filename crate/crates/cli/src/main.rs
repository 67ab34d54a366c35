//! `ris-sim`: Monte Carlo runs, parameter sweeps, asymptotic tables and the
//! validation suites of the RIS downlink simulator.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ris_core::harness::{self, draw_block, run_monte_carlo, write_records, write_sweep};
use ris_core::validation::run_all;
use ris_core::{Error, SweepAxis, SystemConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "ris-sim", version, about = "RIS-assisted multiuser downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo runs of every configured scheme, one CSV row per run, scheme and user.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write each run's randomized reflection schedule as an integer matrix.
        #[arg(long)]
        schedules_dir: Option<PathBuf>,
    },
    /// Mean and spread of capacity and fairness along one axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form capacity and SNR under the homogeneous model.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// User counts; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        users: Vec<usize>,
        /// Element counts; defaults to the configured surface.
        #[arg(long, value_delimiter = ',')]
        atoms: Vec<usize>,
    },
    /// Oracle and property suites at full size.
    Validate {
        #[arg(long, default_value_t = 2021)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Validation(usize),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::EmptySweep | Error::OverheadExceedsFrame(_) => Failure::Config(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| run(cli.command));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("ris-sim: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Validation(n)) => {
            eprintln!("ris-sim: {n} validation check(s) failed");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("ris-sim: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("RIS_SIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("RIS_SIM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Other(e.to_string()))
}

fn load(path: &Path) -> Result<SystemConfig, Failure> {
    SystemConfig::from_path(path).map_err(|e| Failure::Config(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            config,
            out,
            schedules_dir,
        } => {
            let cfg = load(&config)?;
            let records = run_monte_carlo(&cfg)?;
            write_records(&records, create(&out)?)?;
            if let Some(dir) = schedules_dir {
                write_schedules(&cfg, &dir)?;
            }
            println!(
                "simulate: {} runs, K={}, Q={}, M={}, rng {} base seed {}, {} rows -> {}",
                cfg.runs,
                cfg.users,
                cfg.elements(),
                cfg.simulated_slots,
                cfg.rng,
                cfg.base_seed,
                records.iter().map(|r| r.users).sum::<usize>(),
                out.display()
            );
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = load(&config)?;
            let axis: SweepAxis = axis.parse()?;
            let rows = harness::sweep(&cfg, axis, &values)?;
            write_sweep(&rows, create(&out)?)?;
            println!(
                "sweep: {} points x {} runs, rng {} base seed {} -> {}",
                values.len(),
                cfg.runs,
                cfg.rng,
                cfg.base_seed,
                out.display()
            );
        }
        Command::Analyze {
            config,
            out,
            users,
            atoms,
        } => {
            let cfg = load(&config)?;
            let users = if users.is_empty() { vec![cfg.users] } else { users };
            let atoms = if atoms.is_empty() { vec![cfg.elements()] } else { atoms };
            let rows = harness::analyze(&cfg, &users, &atoms)?;
            harness::write_analysis(&rows, create(&out)?)?;
            println!("analyze: {} rows -> {}", rows.len(), out.display());
        }
        Command::Validate { seed } => {
            let outcomes = run_all(seed);
            let mut failed = 0;
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                failed += usize::from(!o.passed);
            }
            if failed > 0 {
                return Err(Failure::Validation(failed));
            }
        }
    }
    Ok(())
}

fn write_schedules(cfg: &SystemConfig, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
    for run in 0..cfg.runs {
        let draw = draw_block(cfg, run)?;
        let path = dir.join(format!("schedule_run{run:05}.csv"));
        draw.schedule
            .write_csv(create(&path)?)
            .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
