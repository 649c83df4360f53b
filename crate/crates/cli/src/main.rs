//! `grahtp` — command-line front end for the benchmark harness.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures (outputs produced so far are still written), 1 for I/O errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use grahtp::solver::SolveStatus;
use grahtp_cli::config::SolveJobConfig;
use grahtp_cli::error::{config_err, io_err};
use grahtp_cli::{
    generate_instance, run_experiment, run_solve_job, write_instance, CliError, CliResult,
    ExperimentConfig, Family, GenConfig,
};

#[derive(Parser)]
#[command(name = "grahtp", version, about = "Sparse phase retrieval benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file for the subcommand.
    #[arg(long)]
    config: PathBuf,

    /// Directory the output files are written into (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Overrides the config's seed: `seed_base` for benchmarks, `seed` for
    /// gen, `init_seed` for solve jobs.
    #[arg(long)]
    seed: Option<u64>,

    /// Caps the worker pool used for parallel trials (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem instance and write it as instance.json.
    Gen(Common),
    /// Solve a stored instance and write solution.json (and trace.csv).
    Solve(Common),
    /// Run a benchmark family and write results.csv, timing.csv, meta.json.
    Bench {
        /// One of: convergence, timing, transition_curve, transition_grid,
        /// reconstruct_1d, reconstruct_2d, dft.
        family: String,
        #[command(flatten)]
        common: Common,
    },
    /// Shortcut for `bench dft`.
    Dft(Common),
    /// Shortcut for `bench reconstruct_1d`.
    Reconstruct1d(Common),
    /// Shortcut for `bench reconstruct_2d`.
    Reconstruct2d(Common),
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(common) => {
            install_threads(common.threads)?;
            let mut cfg = GenConfig::load(&common.config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let instance = generate_instance(&cfg)?;
            write_instance(&common.out, &instance)?;
            println!("wrote {}", common.out.join("instance.json").display());
            Ok(())
        }
        Command::Solve(common) => {
            install_threads(common.threads)?;
            let cfg = SolveJobConfig::load(&common.config)?;
            let init_seed = common.seed.unwrap_or(cfg.init_seed);
            let output = run_solve_job(&cfg, init_seed)?;
            std::fs::create_dir_all(&common.out).map_err(io_err)?;
            let solution_path = common.out.join("solution.json");
            std::fs::write(&solution_path, &output.solution_json).map_err(io_err)?;
            if let Some(trace) = &output.trace_csv {
                std::fs::write(common.out.join("trace.csv"), trace).map_err(io_err)?;
            }
            println!("wrote {}", solution_path.display());
            match output.status {
                SolveStatus::SingularSystem => Err(CliError::Numerical(
                    "the refinement system stayed singular after the step-halving retry; \
                     the partial solution was written"
                        .into(),
                )),
                SolveStatus::Diverged => Err(CliError::Numerical(
                    "the iteration diverged; the last finite iterate was written".into(),
                )),
                SolveStatus::Converged | SolveStatus::MaxIters => Ok(()),
            }
        }
        Command::Bench { family, common } => {
            let family = Family::from_name(&family).ok_or_else(|| {
                let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
                CliError::Config(format!(
                    "unknown family {family:?}; expected one of: {}",
                    names.join(", ")
                ))
            })?;
            bench(family, common)
        }
        Command::Dft(common) => bench(Family::Dft, common),
        Command::Reconstruct1d(common) => bench(Family::Reconstruct1d, common),
        Command::Reconstruct2d(common) => bench(Family::Reconstruct2d, common),
    }
}

fn bench(family: Family, common: Common) -> CliResult<()> {
    install_threads(common.threads)?;
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if cfg.family != family {
        return Err(CliError::Config(format!(
            "config {} declares family {}, but the command selected {family}",
            common.config.display(),
            cfg.family
        )));
    }
    if let Some(seed) = common.seed {
        cfg.seed_base = seed;
    }
    let output = run_experiment(&cfg)?;
    output.write_to(&common.out)?;
    println!(
        "wrote {} files to {}",
        3 + output.aux_files.len(),
        common.out.display()
    );
    Ok(())
}

fn install_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(config_err)?;
    }
    Ok(())
}
