//! Experiment execution: per-trial instance generation, solving, and
//! aggregation into result tables. Trials run in parallel; each owns its
//! seeds, and rows are emitted in sweep order so output is deterministic.

use grahtp::init::{perturbed_oracle_init, spectral_init};
use grahtp::numerics::{psnr, relative_error, DenseVector};
use grahtp::rng::derive_seed;
use grahtp::sensing::{
    add_noise, gen_sparse_signal, measure, sample_ensemble, EnsembleKind, Measurements,
    SensingEnsemble, SparseSignal,
};
use grahtp::solver::{solve, solve_resampled, IterationRecord, SolveResult, SolverConfig};
use grahtp::wavelet::{encode_pgm, haar_inverse_1d, haar_inverse_2d, parse_pgm, Grid, WaveletSpec};
use rayon::prelude::*;

use crate::config::{Cell, ExperimentConfig, Family, InitSpec};
use crate::error::{io_err, run_err, CliResult};
use crate::synth::{
    align_sign, compose_rows_1d, compose_rows_2d, image_truth_2d, wavelet_sparse_1d,
    wavelet_sparse_2d, WaveletTruth2d,
};
use crate::table::{self, ExperimentOutput, SummaryRow, DEEP_R, SUCCESS_R};

/// Per-trial seed streams, all derived from (seed_base, cell index, trial).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub signal: u64,
    pub ensemble: u64,
    pub noise: u64,
    pub init: u64,
}

/// The documented seed chain: cell = derive_seed(seed_base, cell_index),
/// then four streams per trial. Exposed so external checks can regenerate
/// any trial's instance exactly.
pub fn trial_seeds(seed_base: u64, cell_index: u64, trial: usize) -> TrialSeeds {
    let cell = derive_seed(seed_base, cell_index);
    let t = trial as u64;
    TrialSeeds {
        signal: derive_seed(cell, 4 * t),
        ensemble: derive_seed(cell, 4 * t + 1),
        noise: derive_seed(cell, 4 * t + 2),
        init: derive_seed(cell, 4 * t + 3),
    }
}

/// The reconstruction families run entirely in real mode; a complex vector
/// here means a config validation hole, not a user mistake.
fn real_entries(v: &DenseVector) -> CliResult<&[f64]> {
    v.as_real()
        .ok_or_else(|| run_err("reconstruction produced a complex-mode vector"))
}

struct TrialOutcome {
    final_r: f64,
    iterations: usize,
    solve_s: f64,
    pgd_s: f64,
    gn_s: f64,
    psnr: Option<f64>,
    history: Vec<IterationRecord>,
    aux: Vec<(String, Vec<u8>)>,
}

/// Runs a full experiment in memory. Callers write the output with
/// [`ExperimentOutput::write_to`].
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    cfg.validate()?;
    // A supplied image is shared by all trials; load it once.
    let image_truth: Option<WaveletTruth2d> = match (&cfg.image, cfg.family) {
        (Some(path), Family::Reconstruct2d) => {
            let bytes = std::fs::read(path).map_err(|e| io_err(format!("{path}: {e}")))?;
            let image = parse_pgm(&bytes).map_err(run_err)?;
            let spec = WaveletSpec::new(cfg.wavelet_levels.unwrap());
            if image.height != cfg.height.unwrap() || image.width != cfg.width.unwrap() {
                return Err(crate::error::CliError::Config(format!(
                    "image {path} is {}x{} but the config says {}x{}",
                    image.height,
                    image.width,
                    cfg.height.unwrap(),
                    cfg.width.unwrap()
                )));
            }
            Some(image_truth_2d(&image, cfg.s.unwrap(), &spec).map_err(run_err)?)
        }
        _ => None,
    };

    let mut rows = Vec::new();
    let mut aux_files = Vec::new();
    if let Some(truth) = &image_truth {
        aux_files.push(("reference.pgm".to_string(), encode_pgm(&truth.reference)));
    }
    for cell in cfg.cells() {
        let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, &cell, trial, image_truth.as_ref()))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(summarize(&cell, cfg.trials, &outcomes));
        for (trial, outcome) in outcomes.into_iter().enumerate() {
            if cfg.trace {
                aux_files.push((
                    format!("trace_{trial}.csv"),
                    table::trace_csv(trial, &outcome.history).into_bytes(),
                ));
            }
            aux_files.extend(outcome.aux);
        }
    }

    Ok(ExperimentOutput {
        results_csv: table::results_csv(cfg, &rows),
        timing_csv: table::timing_csv(&rows),
        meta_json: table::meta_json(cfg, &aux_files),
        aux_files,
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    cell: &Cell,
    trial: usize,
    image_truth: Option<&WaveletTruth2d>,
) -> CliResult<TrialOutcome> {
    match cfg.family {
        Family::Reconstruct1d => reconstruct_1d_trial(cfg, cell, trial),
        Family::Reconstruct2d => reconstruct_2d_trial(cfg, cell, trial, image_truth),
        _ => standard_trial(cfg, cell, trial),
    }
}

/// Shared trial body for the non-wavelet families: draw signal, ensemble,
/// measurements; initialize; solve against the tracked truth.
fn standard_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> CliResult<TrialOutcome> {
    let seeds = trial_seeds(cfg.seed_base, cell.index, trial);
    let truth = gen_sparse_signal(cell.n, cell.s, cfg.field, seeds.signal).map_err(run_err)?;
    let kind = if cfg.family == Family::Dft {
        EnsembleKind::PartialDft
    } else {
        EnsembleKind::ComplexGaussian
    };
    let a = sample_ensemble(kind, cell.m, cell.n, seeds.ensemble).map_err(run_err)?;
    let y = noisy_measurements(cfg, &a, &truth.vector, seeds.noise)?;
    let z0 = make_init(cfg, &a, &y, cell.s, &truth, seeds.init)?;
    let result = run_solve(cfg, cell, &a, &y, &z0, &truth.vector)?;
    finish_trial(&result, &truth.vector, None, Vec::new())
}

fn reconstruct_1d_trial(
    cfg: &ExperimentConfig,
    cell: &Cell,
    trial: usize,
) -> CliResult<TrialOutcome> {
    let seeds = trial_seeds(cfg.seed_base, cell.index, trial);
    let spec = WaveletSpec::new(cfg.wavelet_levels.unwrap());
    let truth = wavelet_sparse_1d(cell.n, cell.s, &spec, seeds.signal).map_err(run_err)?;
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, cell.m, cell.n, seeds.ensemble)
        .map_err(run_err)?;
    let b = compose_rows_1d(&a, &spec).map_err(run_err)?;
    let y = noisy_measurements(cfg, &b, &truth.coeffs.vector, seeds.noise)?;
    let z0 = make_init(cfg, &b, &y, cell.s, &truth.coeffs, seeds.init)?;
    let result = run_solve(cfg, cell, &b, &y, &z0, &truth.coeffs.vector)?;

    let est_coeffs = align_sign(
        real_entries(&result.final_state.z)?,
        real_entries(&truth.coeffs.vector)?,
    );
    let est_signal = haar_inverse_1d(&est_coeffs, &spec).map_err(run_err)?;
    let quality = psnr(
        &DenseVector::real(truth.signal.clone()).map_err(run_err)?,
        &DenseVector::real(est_signal.clone()).map_err(run_err)?,
    )
    .map_err(run_err)?;
    let aux = vec![(
        format!("signal_{trial}.csv"),
        signal_csv(&truth.signal, &est_signal).into_bytes(),
    )];
    finish_trial(&result, &truth.coeffs.vector, Some(quality), aux)
}

fn reconstruct_2d_trial(
    cfg: &ExperimentConfig,
    cell: &Cell,
    trial: usize,
    image_truth: Option<&WaveletTruth2d>,
) -> CliResult<TrialOutcome> {
    let seeds = trial_seeds(cfg.seed_base, cell.index, trial);
    let spec = WaveletSpec::new(cfg.wavelet_levels.unwrap());
    let (height, width) = (cfg.height.unwrap(), cfg.width.unwrap());
    let synthesized;
    let truth = match image_truth {
        Some(shared) => shared,
        None => {
            synthesized =
                wavelet_sparse_2d(height, width, cell.s, &spec, seeds.signal).map_err(run_err)?;
            &synthesized
        }
    };
    let a = sample_ensemble(
        EnsembleKind::ComplexGaussian,
        cell.m,
        height * width,
        seeds.ensemble,
    )
    .map_err(run_err)?;
    let b = compose_rows_2d(&a, &spec, height, width).map_err(run_err)?;
    let y = noisy_measurements(cfg, &b, &truth.coeffs.vector, seeds.noise)?;
    let z0 = make_init(cfg, &b, &y, cell.s, &truth.coeffs, seeds.init)?;
    let result = run_solve(cfg, cell, &b, &y, &z0, &truth.coeffs.vector)?;

    let est_coeffs = align_sign(
        real_entries(&result.final_state.z)?,
        real_entries(&truth.coeffs.vector)?,
    );
    let est_grid = Grid::new(height, width, est_coeffs).map_err(run_err)?;
    let est_image = haar_inverse_2d(&est_grid, &spec).map_err(run_err)?;
    let quality = psnr(
        &DenseVector::real(truth.reference.data.clone()).map_err(run_err)?,
        &DenseVector::real(est_image.data.clone()).map_err(run_err)?,
    )
    .map_err(run_err)?;
    let aux = vec![(format!("recon_{trial}.pgm"), encode_pgm(&est_image))];
    finish_trial(&result, &truth.coeffs.vector, Some(quality), aux)
}

fn noisy_measurements(
    cfg: &ExperimentConfig,
    a: &SensingEnsemble,
    x: &DenseVector,
    noise_seed: u64,
) -> CliResult<Measurements> {
    let clean = measure(a, x).map_err(run_err)?;
    if cfg.sigma > 0.0 {
        add_noise(&clean, cfg.sigma, noise_seed).map_err(run_err)
    } else {
        Ok(clean)
    }
}

fn make_init(
    cfg: &ExperimentConfig,
    a: &SensingEnsemble,
    y: &Measurements,
    s: usize,
    truth: &SparseSignal,
    init_seed: u64,
) -> CliResult<DenseVector> {
    match cfg.init {
        InitSpec::Spectral => Ok(spectral_init(a, y, s, cfg.field).map_err(run_err)?.z0),
        InitSpec::OraclePerturbed { r } => {
            perturbed_oracle_init(truth, r, init_seed).map_err(run_err)
        }
    }
}

/// The family's s overrides the solver config's sparsity so sweeps stay
/// consistent; the resampling flag picks the fresh-partition variant.
fn run_solve(
    cfg: &ExperimentConfig,
    cell: &Cell,
    a: &SensingEnsemble,
    y: &Measurements,
    z0: &DenseVector,
    truth: &DenseVector,
) -> CliResult<SolveResult> {
    let solver = SolverConfig {
        sparsity: cell.s,
        ..cfg.solver.clone()
    };
    let result = if solver.resample_partitions {
        solve_resampled(a, y, &solver, z0, Some(truth))
    } else {
        solve(a, y, &solver, z0, Some(truth))
    };
    result.map_err(run_err)
}

fn finish_trial(
    result: &SolveResult,
    truth: &DenseVector,
    quality: Option<f64>,
    aux: Vec<(String, Vec<u8>)>,
) -> CliResult<TrialOutcome> {
    let final_r = relative_error(&result.final_state.z, truth).map_err(run_err)?;
    Ok(TrialOutcome {
        final_r,
        iterations: result.iterations(),
        solve_s: result.timings.total_s,
        pgd_s: result.timings.pgd_s,
        gn_s: result.timings.gauss_newton_s,
        psnr: quality,
        history: result.history.clone(),
        aux,
    })
}

fn summarize(cell: &Cell, trials: usize, outcomes: &[TrialOutcome]) -> SummaryRow {
    let count = trials as f64;
    let successes = outcomes.iter().filter(|o| o.final_r <= SUCCESS_R).count();
    let deep = outcomes.iter().filter(|o| o.final_r <= DEEP_R).count();
    let iters: Vec<usize> = outcomes.iter().map(|o| o.iterations).collect();
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| -> f64 {
        outcomes.iter().map(f).sum::<f64>() / count
    };
    let psnr = if outcomes.iter().all(|o| o.psnr.is_some()) {
        Some(mean(&|o| o.psnr.unwrap()))
    } else {
        None
    };
    SummaryRow {
        n: cell.n,
        m: cell.m,
        s: cell.s,
        trials,
        success_rate: successes as f64 / count,
        deep_rate: deep as f64 / count,
        median_iters: table::median(&iters),
        mean_final_r: mean(&|o| o.final_r),
        psnr,
        mean_solve_s: mean(&|o| o.solve_s),
        mean_pgd_s: mean(&|o| o.pgd_s),
        mean_gn_s: mean(&|o| o.gn_s),
    }
}

fn signal_csv(truth: &[f64], estimate: &[f64]) -> String {
    let mut out = String::from("index,truth,estimate\n");
    for (i, (t, e)) in truth.iter().zip(estimate).enumerate() {
        out.push_str(&format!("{i},{t:e},{e:e}\n"));
    }
    out
}
