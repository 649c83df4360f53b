//! The outer solve loop: hard-thresholded projected gradient step, then
//! Gauss-Newton refinement on the captured support, with an optional
//! fresh-sample variant that consumes disjoint measurement partitions.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dist, hard_threshold, DenseVector, Field, SupportSet};
use crate::objective::{damped_gn_step, gradient, loss, wirtinger_gradient};
use crate::sensing::{Measurements, SensingEnsemble};

/// Step-size policy for the projected gradient stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum StepPolicy {
    /// A caller-chosen constant step.
    Fixed { mu: f64 },
    /// 0.394 / mean(y): since E y_j = ||x||^2 for the complex Gaussian
    /// ensemble, this lands inside the proven interval
    /// (0.3910, 0.3975) / ||x||^2 up to sampling error.
    #[default]
    Auto,
}

/// Where the Gauss-Newton inner loop starts from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStart {
    /// Start from the thresholded gradient point (the default).
    #[default]
    PgdPoint,
    /// Start from the previous outer iterate restricted to the new support.
    PreviousIterate,
}

/// Solver configuration. Fields other than `sparsity` default to the values
/// of [`SolverConfig::new`] when deserialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Sparsity level s of the sought signal.
    pub sparsity: usize,
    /// Outer iteration cap K.
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    /// Gauss-Newton steps per outer iteration (L).
    #[serde(default = "default_gn_steps")]
    pub gn_steps: usize,
    #[serde(default)]
    pub step: StepPolicy,
    /// Stop once ||z_{k+1} - z_k|| / max(||z_k||, 1e-30) falls below this.
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default)]
    pub inner_start: InnerStart,
    /// Route measurements through 2*max_outer disjoint partitions, one pair
    /// per outer iteration (`solve_resampled`). Plain `solve` ignores this;
    /// harnesses use it to pick the variant.
    #[serde(default)]
    pub resample_partitions: bool,
}

fn default_max_outer() -> usize {
    60
}

fn default_gn_steps() -> usize {
    1
}

fn default_stop_tol() -> f64 {
    1e-14
}

impl SolverConfig {
    /// Defaults: K = 60, L = 1, auto step, stop_tol = 1e-14, inner loop from
    /// the thresholded gradient point.
    pub fn new(sparsity: usize) -> Self {
        SolverConfig {
            sparsity,
            max_outer: 60,
            gn_steps: 1,
            step: StepPolicy::Auto,
            stop_tol: 1e-14,
            inner_start: InnerStart::PgdPoint,
            resample_partitions: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::Parameter("sparsity must be at least 1".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Parameter("max_outer must be at least 1".into()));
        }
        if self.gn_steps == 0 {
            return Err(Error::Parameter("gn_steps must be at least 1".into()));
        }
        if !self.stop_tol.is_finite() || self.stop_tol < 0.0 {
            return Err(Error::Parameter(format!(
                "stop_tol must be finite and nonnegative, got {}",
                self.stop_tol
            )));
        }
        if let StepPolicy::Fixed { mu } = self.step {
            if !mu.is_finite() || mu <= 0.0 {
                return Err(Error::Parameter(format!(
                    "fixed step size must be finite and positive, got {mu}"
                )));
            }
        }
        Ok(())
    }
}

/// Resolves the step size for a measurement vector.
pub fn step_size(policy: StepPolicy, y: &Measurements) -> Result<f64> {
    match policy {
        StepPolicy::Fixed { mu } => {
            if !mu.is_finite() || mu <= 0.0 {
                return Err(Error::Parameter(format!(
                    "fixed step size must be finite and positive, got {mu}"
                )));
            }
            Ok(mu)
        }
        StepPolicy::Auto => {
            let mean = y.mean();
            if mean.is_nan() || mean <= 0.0 {
                return Err(Error::Initialization(format!(
                    "auto step size needs mean(y) > 0, got {mean}"
                )));
            }
            Ok(0.394 / mean)
        }
    }
}

/// Snapshot of the solver state after an outer iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterateState {
    pub z: DenseVector,
    pub support: SupportSet,
    pub k: usize,
    pub loss: f64,
    pub dist_to_truth: Option<f64>,
}

/// Per-iteration summary kept in the solve history (the full iterate is only
/// retained for the final state).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub loss: f64,
    pub dist_to_truth: Option<f64>,
    pub rel_err: Option<f64>,
    pub support: SupportSet,
    /// Seconds elapsed since the solve started, measured when this iterate
    /// was produced. Wall-clock: excluded from reproducibility guarantees.
    pub elapsed_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    SingularSystem,
    /// An iterate blew up to non-finite magnitude (e.g. a far-too-large step
    /// outside the basin of attraction). The final state is the last finite
    /// iterate.
    Diverged,
}

/// Wall-clock totals per solver phase (seconds).
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub pgd_s: f64,
    pub gauss_newton_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub final_state: IterateState,
    pub history: Vec<IterationRecord>,
    pub status: SolveStatus,
    pub timings: PhaseTimings,
}

impl SolveResult {
    /// Outer iterations actually performed.
    pub fn iterations(&self) -> usize {
        self.final_state.k
    }
}

fn field_gradient(
    a: &SensingEnsemble,
    y: &Measurements,
    z: &DenseVector,
) -> Result<DenseVector> {
    match z.field() {
        Field::Real => gradient(a, y, z),
        Field::Complex => wirtinger_gradient(a, y, z),
    }
}

fn descend(z: &DenseVector, g: &DenseVector, mu: f64) -> DenseVector {
    match (z, g) {
        (DenseVector::Real(zv), DenseVector::Real(gv)) => {
            DenseVector::Real(zv.iter().zip(gv).map(|(a, b)| a - mu * b).collect())
        }
        (DenseVector::Complex(zv), DenseVector::Complex(gv)) => {
            DenseVector::Complex(zv.iter().zip(gv).map(|(a, b)| a - mu * b).collect())
        }
        _ => unreachable!("gradient matches iterate field"),
    }
}

/// Keeps `z` on `support`, zeroing everything else.
fn restrict_to(z: &DenseVector, support: &SupportSet) -> DenseVector {
    match z {
        DenseVector::Real(v) => {
            let mut out = vec![0.0; v.len()];
            for &i in support.indices() {
                out[i] = v[i];
            }
            DenseVector::Real(out)
        }
        DenseVector::Complex(v) => {
            let mut out = vec![num_complex::Complex64::new(0.0, 0.0); v.len()];
            for &i in support.indices() {
                out[i] = v[i];
            }
            DenseVector::Complex(out)
        }
    }
}

struct IterationOutput {
    z: DenseVector,
    support: SupportSet,
    pgd_s: f64,
    gn_s: f64,
}

/// One outer iteration; the gradient/threshold stage reads (a_pgd, y_pgd) and
/// the Gauss-Newton stage reads (a_gn, y_gn). Plain solves pass the same
/// instance twice; the fresh-sample variant passes the iteration's partitions.
fn iteration_core(
    a_pgd: &SensingEnsemble,
    y_pgd: &Measurements,
    a_gn: &SensingEnsemble,
    y_gn: &Measurements,
    z: &DenseVector,
    mu: f64,
    cfg: &SolverConfig,
) -> Result<IterationOutput> {
    let pgd_start = Instant::now();
    let g = field_gradient(a_pgd, y_pgd, z)?;
    let v = descend(z, &g, mu);
    let (u, support) = hard_threshold(&v, cfg.sparsity)?;
    let pgd_s = pgd_start.elapsed().as_secs_f64();

    let gn_start = Instant::now();
    let mut inner = match cfg.inner_start {
        InnerStart::PgdPoint => u,
        InnerStart::PreviousIterate => restrict_to(z, &support),
    };
    for _ in 0..cfg.gn_steps {
        // The backtracked step: far from the restricted minimizer the plain
        // Gauss-Newton step can overshoot so badly that the quartic loss
        // amplifies the iterate without bound; damping keeps the refinement
        // loss-monotone while leaving the full step untouched near the
        // minimizer.
        inner = damped_gn_step(a_gn, y_gn, &inner, &support)?;
    }
    Ok(IterationOutput {
        z: inner,
        support,
        pgd_s,
        gn_s: gn_start.elapsed().as_secs_f64(),
    })
}

/// Runs one outer iteration with the given step size, retrying once with the
/// step halved if the Gauss-Newton system is singular.
fn iteration_with_fallback(
    a_pgd: &SensingEnsemble,
    y_pgd: &Measurements,
    a_gn: &SensingEnsemble,
    y_gn: &Measurements,
    z: &DenseVector,
    mu: f64,
    cfg: &SolverConfig,
) -> Result<IterationOutput> {
    match iteration_core(a_pgd, y_pgd, a_gn, y_gn, z, mu, cfg) {
        Err(Error::SingularSystem { .. }) => {
            iteration_core(a_pgd, y_pgd, a_gn, y_gn, z, mu / 2.0, cfg)
        }
        other => other,
    }
}

/// One outer iteration of the solver: projected gradient step with hard
/// thresholding, then `gn_steps` backtracked Gauss-Newton steps on the
/// captured support (see [`damped_gn_step`]; the refinement never increases
/// the loss, and takes the plain full step whenever that suffices).
pub fn grahtp_iteration(
    a: &SensingEnsemble,
    y: &Measurements,
    z: &DenseVector,
    mu: f64,
    cfg: &SolverConfig,
) -> Result<(DenseVector, SupportSet)> {
    cfg.validate()?;
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::Parameter(format!(
            "step size must be finite and positive, got {mu}"
        )));
    }
    let out = iteration_core(a, y, a, y, z, mu, cfg)?;
    Ok((out.z, out.support))
}

struct RunState {
    z: DenseVector,
    support: SupportSet,
    history: Vec<IterationRecord>,
    timings: PhaseTimings,
    started: Instant,
    truth_norm: Option<f64>,
}

impl RunState {
    fn record(&mut self, k: usize, a: &SensingEnsemble, y: &Measurements, truth: Option<&DenseVector>) -> Result<f64> {
        let loss_k = loss(a, y, &self.z)?;
        let dist_k = match truth {
            Some(t) => Some(dist(&self.z, t)?),
            None => None,
        };
        let rel_err = match (dist_k, self.truth_norm) {
            (Some(d), Some(norm)) if norm > 0.0 => Some(d / norm),
            _ => None,
        };
        self.history.push(IterationRecord {
            k,
            loss: loss_k,
            dist_to_truth: dist_k,
            rel_err,
            support: self.support.clone(),
            elapsed_s: self.started.elapsed().as_secs_f64(),
        });
        Ok(loss_k)
    }

    fn into_result(mut self, k: usize, status: SolveStatus, loss_k: f64) -> SolveResult {
        self.timings.total_s = self.started.elapsed().as_secs_f64();
        let dist_to_truth = self.history.last().and_then(|r| r.dist_to_truth);
        SolveResult {
            final_state: IterateState {
                z: self.z,
                support: self.support,
                k,
                loss: loss_k,
                dist_to_truth,
            },
            history: self.history,
            status,
            timings: self.timings,
        }
    }
}

fn prepare_run(
    a: &SensingEnsemble,
    y: &Measurements,
    cfg: &SolverConfig,
    init: &DenseVector,
    truth: Option<&DenseVector>,
) -> Result<RunState> {
    cfg.validate()?;
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements vs {} sensing vectors",
            y.len(),
            a.rows()
        )));
    }
    if init.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "init length {} vs ensemble columns {}",
            init.len(),
            a.cols()
        )));
    }
    if let Some(t) = truth {
        if t.field() != init.field() {
            return Err(Error::FieldMismatch(
                "truth and init live in different fields".into(),
            ));
        }
        if t.len() != init.len() {
            return Err(Error::DimensionMismatch(
                "truth and init lengths differ".into(),
            ));
        }
    }
    init.validate()?;
    // The solver works on s-sparse iterates; threshold the init on entry.
    let (z, support) = hard_threshold(init, cfg.sparsity)?;
    Ok(RunState {
        z,
        support,
        history: Vec::new(),
        timings: PhaseTimings::default(),
        started: Instant::now(),
        truth_norm: truth.map(|t| t.norm()),
    })
}

/// Full solve: thresholds `init` to the configured sparsity, then runs outer
/// iterations until the relative iterate change drops below `stop_tol`, the
/// iteration cap is reached, or a Gauss-Newton system stays singular after
/// the step-halving retry (reported via `SolveStatus::SingularSystem` with
/// the history accumulated so far). Iterates that blow up to non-finite
/// magnitude end the run with `SolveStatus::Diverged` and the last finite
/// iterate as the final state.
pub fn solve(
    a: &SensingEnsemble,
    y: &Measurements,
    cfg: &SolverConfig,
    init: &DenseVector,
    truth: Option<&DenseVector>,
) -> Result<SolveResult> {
    let mut state = prepare_run(a, y, cfg, init, truth)?;
    let mut loss_k = state.record(0, a, y, truth)?;
    // Exact stationary start (e.g. y = 0 with z = 0, or a noiseless fixed
    // point): nothing to do.
    if loss_k == 0.0 {
        return Ok(state.into_result(0, SolveStatus::Converged, loss_k));
    }
    let mu = step_size(cfg.step, y)?;
    for k in 1..=cfg.max_outer {
        let out = match iteration_with_fallback(a, y, a, y, &state.z, mu, cfg) {
            Ok(out) => out,
            Err(Error::SingularSystem { .. }) => {
                return Ok(state.into_result(k - 1, SolveStatus::SingularSystem, loss_k));
            }
            Err(Error::NonFinite(_)) => {
                return Ok(state.into_result(k - 1, SolveStatus::Diverged, loss_k));
            }
            Err(e) => return Err(e),
        };
        if !out.z.norm().is_finite() {
            return Ok(state.into_result(k - 1, SolveStatus::Diverged, loss_k));
        }
        let change = out.z.sub(&state.z)?.norm() / state.z.norm().max(1e-30);
        state.z = out.z;
        state.support = out.support;
        state.timings.pgd_s += out.pgd_s;
        state.timings.gauss_newton_s += out.gn_s;
        loss_k = state.record(k, a, y, truth)?;
        if change <= cfg.stop_tol {
            return Ok(state.into_result(k, SolveStatus::Converged, loss_k));
        }
    }
    Ok(state.into_result(cfg.max_outer, SolveStatus::MaxIters, loss_k))
}

/// Fresh-sample variant: the m measurements are split into 2*max_outer equal
/// disjoint partitions (trailing remainder rows are dropped); outer iteration
/// k takes its gradient/threshold stage from partition 2k and its
/// Gauss-Newton stage from partition 2k+1. With the auto policy the step size
/// is resolved per iteration from the gradient partition.
///
/// History records (loss, and distances when truth is given) are evaluated
/// against the full dataset so traces stay comparable with `solve`.
pub fn solve_resampled(
    a: &SensingEnsemble,
    y: &Measurements,
    cfg: &SolverConfig,
    init: &DenseVector,
    truth: Option<&DenseVector>,
) -> Result<SolveResult> {
    let mut state = prepare_run(a, y, cfg, init, truth)?;
    let partitions = 2 * cfg.max_outer;
    let part_len = a.rows() / partitions;
    if part_len < cfg.sparsity {
        return Err(Error::Parameter(format!(
            "{} rows split into {partitions} partitions gives {part_len} rows each, \
             fewer than the sparsity {}",
            a.rows(),
            cfg.sparsity
        )));
    }
    let mut loss_k = state.record(0, a, y, truth)?;
    if loss_k == 0.0 {
        return Ok(state.into_result(0, SolveStatus::Converged, loss_k));
    }
    for k in 1..=cfg.max_outer {
        let pgd_start = (2 * (k - 1)) * part_len;
        let a_pgd = a.row_range(pgd_start, part_len)?;
        let y_pgd = y.range(pgd_start, part_len)?;
        let a_gn = a.row_range(pgd_start + part_len, part_len)?;
        let y_gn = y.range(pgd_start + part_len, part_len)?;
        let mu = step_size(cfg.step, &y_pgd)?;
        let out = match iteration_with_fallback(&a_pgd, &y_pgd, &a_gn, &y_gn, &state.z, mu, cfg) {
            Ok(out) => out,
            Err(Error::SingularSystem { .. }) => {
                return Ok(state.into_result(k - 1, SolveStatus::SingularSystem, loss_k));
            }
            Err(Error::NonFinite(_)) => {
                return Ok(state.into_result(k - 1, SolveStatus::Diverged, loss_k));
            }
            Err(e) => return Err(e),
        };
        if !out.z.norm().is_finite() {
            return Ok(state.into_result(k - 1, SolveStatus::Diverged, loss_k));
        }
        let change = out.z.sub(&state.z)?.norm() / state.z.norm().max(1e-30);
        state.z = out.z;
        state.support = out.support;
        state.timings.pgd_s += out.pgd_s;
        state.timings.gauss_newton_s += out.gn_s;
        loss_k = state.record(k, a, y, truth)?;
        if change <= cfg.stop_tol {
            return Ok(state.into_result(k, SolveStatus::Converged, loss_k));
        }
    }
    Ok(state.into_result(cfg.max_outer, SolveStatus::MaxIters, loss_k))
}
