//! One-off jobs: `gen` materializes an instance to JSON; `solve` runs the
//! solver on a stored instance and writes the solution.

use std::path::Path;

use grahtp::init::{perturbed_oracle_init, spectral_init};
use grahtp::numerics::relative_error;
use grahtp::rng::derive_seed;
use grahtp::sensing::{
    add_noise, gen_sparse_signal, measure, sample_ensemble, EnsembleKind, Measurements,
    SensingEnsemble, SparseSignal,
};
use grahtp::solver::{solve, solve_resampled, SolveResult, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::config::{GenConfig, InitSpec, SolveJobConfig, SCHEMA_VERSION};
use crate::error::{io_err, run_err, CliError, CliResult};
use crate::table;

/// The on-disk instance format produced by `gen` and consumed by `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub signal: SparseSignal,
    pub ensemble: SensingEnsemble,
    pub measurements: Measurements,
}

/// Builds an instance from a gen config. Seed streams: signal, ensemble,
/// noise = derive_seed(seed, 0/1/2).
pub fn generate_instance(cfg: &GenConfig) -> CliResult<InstanceFile> {
    cfg.validate()?;
    let signal = gen_sparse_signal(cfg.n, cfg.s, cfg.field, derive_seed(cfg.seed, 0))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let ensemble = sample_ensemble(cfg.ensemble, cfg.m, cfg.n, derive_seed(cfg.seed, 1))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let clean = measure(&ensemble, &signal.vector).map_err(run_err)?;
    let measurements = if cfg.sigma > 0.0 {
        add_noise(&clean, cfg.sigma, derive_seed(cfg.seed, 2)).map_err(run_err)?
    } else {
        clean
    };
    Ok(InstanceFile {
        schema_version: SCHEMA_VERSION,
        signal,
        ensemble,
        measurements,
    })
}

pub fn write_instance(dir: &Path, instance: &InstanceFile) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut text = serde_json::to_string_pretty(instance).expect("instance serializes");
    text.push('\n');
    std::fs::write(dir.join("instance.json"), text).map_err(io_err)
}

pub fn load_instance(path: &Path) -> CliResult<InstanceFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    let instance: InstanceFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if instance.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported instance schema_version {} (this tool reads {SCHEMA_VERSION})",
            instance.schema_version
        )));
    }
    Ok(instance)
}

#[derive(Serialize)]
struct Solution<'a> {
    schema_version: u32,
    final_r: f64,
    result: &'a SolveResult,
}

pub struct SolveJobOutput {
    pub solution_json: String,
    pub trace_csv: Option<String>,
    /// Terminal solver status: an unrecoverable Gauss-Newton system or a
    /// diverged run means the caller should exit with the numerical-failure
    /// code after writing outputs.
    pub status: SolveStatus,
}

/// Runs a solve job. `init_seed` feeds the oracle_perturbed initializer
/// (ignored by spectral init, which is deterministic given the data).
pub fn run_solve_job(cfg: &SolveJobConfig, init_seed: u64) -> CliResult<SolveJobOutput> {
    let instance = load_instance(Path::new(&cfg.instance))?;
    if instance.ensemble.kind() == EnsembleKind::PartialDft && cfg.init == InitSpec::Spectral {
        return Err(CliError::Config(
            "the spectral initializer is not validated for partial-DFT sensing; \
             use init {\"kind\": \"oracle_perturbed\", \"r\": ...} instead"
                .into(),
        ));
    }
    let field = instance.signal.vector.field();
    let z0 = match cfg.init {
        InitSpec::Spectral => {
            spectral_init(
                &instance.ensemble,
                &instance.measurements,
                cfg.solver.sparsity,
                field,
            )
            .map_err(run_err)?
            .z0
        }
        InitSpec::OraclePerturbed { r } => {
            perturbed_oracle_init(&instance.signal, r, init_seed).map_err(run_err)?
        }
    };
    let result = if cfg.solver.resample_partitions {
        solve_resampled(
            &instance.ensemble,
            &instance.measurements,
            &cfg.solver,
            &z0,
            Some(&instance.signal.vector),
        )
    } else {
        solve(
            &instance.ensemble,
            &instance.measurements,
            &cfg.solver,
            &z0,
            Some(&instance.signal.vector),
        )
    }
    .map_err(run_err)?;

    let final_r = relative_error(&result.final_state.z, &instance.signal.vector)
        .map_err(run_err)?;
    let mut solution_json = serde_json::to_string_pretty(&Solution {
        schema_version: SCHEMA_VERSION,
        final_r,
        result: &result,
    })
    .expect("solution serializes");
    solution_json.push('\n');
    Ok(SolveJobOutput {
        solution_json,
        trace_csv: cfg.trace.then(|| table::trace_csv(0, &result.history)),
        status: result.status,
    })
}
