//! Contract tests for step-size policies, single iterations, the full solve
//! loop, and the fresh-sample (partitioned) variant.

use grahtp::init::{perturbed_oracle_init, spectral_init};
use grahtp::numerics::{dist, hard_threshold, relative_error, DenseVector, Field};
use grahtp::objective::{gn_step, gradient, wirtinger_gradient};
use grahtp::sensing::{
    add_noise, gen_sparse_signal, measure, sample_ensemble, EnsembleKind, Measurements,
};
use grahtp::solver::{
    grahtp_iteration, solve, solve_resampled, step_size, InnerStart, SolveStatus, SolverConfig,
    StepPolicy,
};
use grahtp::Error;
use num_complex::Complex64;

fn scalar_instance() -> (grahtp::SensingEnsemble, Measurements) {
    let a = grahtp::SensingEnsemble::from_rows(
        EnsembleKind::ComplexGaussian,
        1,
        1,
        0,
        vec![Complex64::new(1.0, 0.0)],
    )
    .unwrap();
    let y = Measurements {
        values: vec![1.0],
        sigma: 0.0,
        noise_seed: None,
    };
    (a, y)
}

#[test]
fn fixed_step_passes_through_and_validates() {
    let y = Measurements {
        values: vec![1.0, 2.0],
        sigma: 0.0,
        noise_seed: None,
    };
    assert_eq!(step_size(StepPolicy::Fixed { mu: 0.95 }, &y).unwrap(), 0.95);
    assert!(step_size(StepPolicy::Fixed { mu: 0.0 }, &y).is_err());
    assert!(step_size(StepPolicy::Fixed { mu: -1.0 }, &y).is_err());
    assert!(step_size(StepPolicy::Fixed { mu: f64::INFINITY }, &y).is_err());
}

#[test]
fn auto_step_divides_the_constant_by_the_measurement_mean() {
    let y = Measurements {
        values: vec![3.0, 5.0], // mean 4
        sigma: 0.0,
        noise_seed: None,
    };
    assert_eq!(step_size(StepPolicy::Auto, &y).unwrap(), 0.0985);

    let zero = Measurements {
        values: vec![0.0, 0.0],
        sigma: 0.0,
        noise_seed: None,
    };
    assert!(matches!(
        step_size(StepPolicy::Auto, &zero),
        Err(Error::Initialization(_))
    ));
}

#[test]
fn auto_step_concentrates_for_unit_norm_signals() {
    // For a unit-norm signal, E y = 1 and the auto step targets 0.394; at
    // m = 5000 the sample mean stays within 5% of 1 in nearly every draw
    // (5% is about 3.5 standard errors of an Exp(1) mean).
    let x = DenseVector::real(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let mut inside = 0;
    let seeds = 100;
    for seed in 0..seeds {
        let a = sample_ensemble(EnsembleKind::ComplexGaussian, 5000, 4, 7000 + seed).unwrap();
        let y = measure(&a, &x).unwrap();
        let mu = step_size(StepPolicy::Auto, &y).unwrap();
        if (mu - 0.394).abs() <= 0.05 * 0.394 {
            inside += 1;
        }
    }
    assert!(
        inside >= 95,
        "auto step within 5% of 0.394 in only {inside}/{seeds} unit-norm draws"
    );
}

#[test]
fn scalar_iteration_chain_by_hand() {
    // From z = 2 with mu = 0.1: the gradient is 6, so v = 1.4 and the support
    // stays {0}; the Gauss-Newton step from 1.4 has c = 1.4, F = 0.48,
    // J = 1.4, giving z' = 1.4 - 0.48/1.4 = 37/35.
    let (a, y) = scalar_instance();
    let z = DenseVector::real(vec![2.0]).unwrap();
    let cfg = SolverConfig {
        step: StepPolicy::Fixed { mu: 0.1 },
        ..SolverConfig::new(1)
    };
    let (z1, support) = grahtp_iteration(&a, &y, &z, 0.1, &cfg).unwrap();
    assert_eq!(support.indices(), &[0]);
    let got = z1.as_real().unwrap()[0];
    let want = 37.0 / 35.0;
    assert!(
        (got - want).abs() < 1e-12,
        "one iteration from 2 gave {got}, want 37/35 = {want}"
    );
}

#[test]
fn truth_is_a_fixed_point_of_the_iteration() {
    for field in [Field::Real, Field::Complex] {
        let truth = gen_sparse_signal(30, 4, field, 110).unwrap();
        let a = sample_ensemble(EnsembleKind::ComplexGaussian, 90, 30, 111).unwrap();
        let y = measure(&a, &truth.vector).unwrap();
        let cfg = SolverConfig::new(4);
        let (next, support) = grahtp_iteration(&a, &y, &truth.vector, 0.1, &cfg).unwrap();
        assert_eq!(
            next, truth.vector,
            "{field:?}: gradient and Gauss-Newton residual both vanish at the truth"
        );
        assert_eq!(support, truth.support);

        // The sign/phase-flipped truth is equally stationary.
        let flipped = match &truth.vector {
            DenseVector::Real(v) => {
                DenseVector::Real(v.iter().map(|x| -x).collect())
            }
            DenseVector::Complex(v) => {
                DenseVector::Complex(v.iter().map(|x| -x).collect())
            }
        };
        let (next, _) = grahtp_iteration(&a, &y, &flipped, 0.1, &cfg).unwrap();
        assert_eq!(next, flipped, "{field:?}: -x must be stationary too");
    }
}

#[test]
fn one_iteration_captures_the_support_near_the_truth() {
    // Once dist(z, x) < x_min the thresholded gradient point keeps the true
    // support.
    for seed in [120, 121, 122, 123] {
        let truth = gen_sparse_signal(60, 6, Field::Real, seed).unwrap();
        let a = sample_ensemble(EnsembleKind::ComplexGaussian, 240, 60, seed + 50).unwrap();
        let y = measure(&a, &truth.vector).unwrap();
        let r = 0.8 * truth.min_magnitude() / truth.vector.norm();
        let z = perturbed_oracle_init(&truth, r, seed + 99).unwrap();
        let mu = step_size(StepPolicy::Auto, &y).unwrap();
        let (_, support) = grahtp_iteration(&a, &y, &z, mu, &SolverConfig::new(6)).unwrap();
        assert_eq!(
            support, truth.support,
            "seed {seed}: support lost from a start inside the basin"
        );
    }
}

#[test]
fn zero_data_zero_init_converges_at_iteration_zero() {
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 10, 6, 130).unwrap();
    let y = Measurements {
        values: vec![0.0; 10],
        sigma: 0.0,
        noise_seed: None,
    };
    let init = DenseVector::zeros(Field::Real, 6);
    let result = solve(&a, &y, &SolverConfig::new(2), &init, None).unwrap();
    assert_eq!(result.status, SolveStatus::Converged);
    assert_eq!(result.iterations(), 0);
    assert_eq!(result.final_state.z, init);
    assert_eq!(result.history.len(), 1, "only the initial record is kept");
}

#[test]
fn solve_recovers_a_small_complex_instance_and_keeps_iterates_sparse() {
    let mut successes = 0;
    let mut deep = 0;
    for seed in 0..5u64 {
        let truth = gen_sparse_signal(200, 5, Field::Complex, 300 + seed).unwrap();
        let a = sample_ensemble(EnsembleKind::ComplexGaussian, 160, 200, 400 + seed).unwrap();
        let y = measure(&a, &truth.vector).unwrap();
        let z0 = spectral_init(&a, &y, 5, Field::Complex).unwrap().z0;
        let result = solve(&a, &y, &SolverConfig::new(5), &z0, Some(&truth.vector)).unwrap();

        for record in &result.history {
            assert!(
                record.support.len() <= 5,
                "seed {seed}: iterate support grew to {}",
                record.support.len()
            );
            assert!(record.loss.is_finite());
        }
        let r = relative_error(&result.final_state.z, &truth.vector).unwrap();
        if r <= 1e-6 {
            successes += 1;
        }
        if r <= 1e-12 {
            deep += 1;
        }

        // After the support first equals the true one (on successful runs),
        // it must never be lost again.
        if r <= 1e-6 {
            let first_capture = result
                .history
                .iter()
                .position(|rec| rec.support == truth.support);
            if let Some(at) = first_capture {
                for rec in &result.history[at..] {
                    assert_eq!(
                        rec.support, truth.support,
                        "seed {seed}: support lost after capture at iteration {at}"
                    );
                }
            }
        }
    }
    assert!(
        successes >= 1,
        "no recovery at n = 200, m = 160, s = 5 over 5 seeds"
    );
    assert!(
        deep >= 1,
        "no run reached 1e-12 at n = 200, m = 160, s = 5 over 5 seeds"
    );
}

#[test]
fn noisy_solve_lands_within_the_noise_scale() {
    // Theorem-style bound with a loose constant: final dist <= 10 ||eps|| / sqrt(m).
    let truth = gen_sparse_signal(100, 4, Field::Complex, 140).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 300, 100, 141).unwrap();
    let clean = measure(&a, &truth.vector).unwrap();
    for (i, sigma) in [0.01, 0.02].into_iter().enumerate() {
        let noisy = add_noise(&clean, sigma, 142).unwrap();
        let eps_norm: f64 = noisy
            .values
            .iter()
            .zip(&clean.values)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        let z0 = spectral_init(&a, &noisy, 4, Field::Complex).unwrap().z0;
        let result = solve(&a, &noisy, &SolverConfig::new(4), &z0, Some(&truth.vector)).unwrap();
        let d = result.final_state.dist_to_truth.unwrap();
        let bound = 10.0 * eps_norm / (300.0f64).sqrt();
        assert!(
            d.is_finite() && d <= bound,
            "sigma {sigma} (case {i}): final dist {d:e} above 10 ||eps||/sqrt(m) = {bound:e}"
        );
    }
}

#[test]
fn an_absurd_step_size_ends_in_a_diverged_status_with_a_finite_state() {
    // The gradient is cubic in the iterate, so a huge fixed step makes the
    // magnitudes explode within a few iterations. The solve must stop with a
    // Diverged status and hand back the last finite iterate, not panic.
    let truth = gen_sparse_signal(20, 3, Field::Complex, 160).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 40, 20, 161).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let z0 = spectral_init(&a, &y, 3, Field::Complex).unwrap().z0;
    let cfg = SolverConfig {
        step: StepPolicy::Fixed { mu: 1e8 },
        ..SolverConfig::new(3)
    };
    let result = solve(&a, &y, &cfg, &z0, Some(&truth.vector)).unwrap();
    assert_eq!(result.status, SolveStatus::Diverged);
    assert!(
        result.iterations() < cfg.max_outer,
        "divergence should be detected well before the iteration cap"
    );
    assert!(
        result.final_state.z.norm().is_finite(),
        "the reported final iterate must be the last finite one"
    );
    assert_eq!(
        result.history.len(),
        result.iterations() + 1,
        "history must cover exactly the recorded iterations"
    );
}

#[test]
fn solve_is_deterministic_in_everything_but_wall_time() {
    let truth = gen_sparse_signal(80, 4, Field::Complex, 150).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 120, 80, 151).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let z0 = spectral_init(&a, &y, 4, Field::Complex).unwrap().z0;
    let cfg = SolverConfig::new(4);

    let r1 = solve(&a, &y, &cfg, &z0, Some(&truth.vector)).unwrap();
    let r2 = solve(&a, &y, &cfg, &z0, Some(&truth.vector)).unwrap();
    assert_eq!(r1.final_state.z, r2.final_state.z, "iterates must match bit-for-bit");
    assert_eq!(r1.status, r2.status);
    assert_eq!(r1.history.len(), r2.history.len());
    for (h1, h2) in r1.history.iter().zip(&r2.history) {
        assert_eq!(h1.k, h2.k);
        assert_eq!(h1.loss.to_bits(), h2.loss.to_bits(), "iteration {}", h1.k);
        assert_eq!(h1.dist_to_truth, h2.dist_to_truth);
        assert_eq!(h1.support, h2.support);
    }
}

#[test]
fn solver_config_validation_catches_bad_fields() {
    let mut cfg = SolverConfig::new(0);
    assert!(cfg.validate().is_err(), "sparsity 0 must fail");
    cfg.sparsity = 2;
    cfg.max_outer = 0;
    assert!(cfg.validate().is_err(), "max_outer 0 must fail");
    cfg.max_outer = 5;
    cfg.gn_steps = 0;
    assert!(cfg.validate().is_err(), "gn_steps 0 must fail");
    cfg.gn_steps = 1;
    cfg.stop_tol = f64::NAN;
    assert!(cfg.validate().is_err(), "NaN stop_tol must fail");
    cfg.stop_tol = 1e-14;
    cfg.step = StepPolicy::Fixed { mu: -0.5 };
    assert!(cfg.validate().is_err(), "negative step must fail");
    cfg.step = StepPolicy::Auto;
    assert!(cfg.validate().is_ok());
}

#[test]
fn solver_config_serde_rejects_unknown_fields() {
    let json = serde_json::to_string(&SolverConfig::new(3)).unwrap();
    let back: SolverConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, SolverConfig::new(3));

    let tampered = json.replace('}', ",\"mystery\":1}");
    assert!(
        serde_json::from_str::<SolverConfig>(&tampered).is_err(),
        "unknown config fields must be rejected"
    );
}

#[test]
fn resampled_single_iteration_unrolls_to_the_half_split() {
    // With 2K = 2 partitions, one outer iteration must equal: gradient and
    // threshold on the first half, Gauss-Newton on the second half.
    let truth = gen_sparse_signal(40, 4, Field::Complex, 160).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 120, 40, 161).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let init = perturbed_oracle_init(&truth, 0.5, 162).unwrap();
    let mu = 0.05;
    let cfg = SolverConfig {
        max_outer: 1,
        step: StepPolicy::Fixed { mu },
        ..SolverConfig::new(4)
    };

    let result = solve_resampled(&a, &y, &cfg, &init, None).unwrap();

    let a1 = a.row_range(0, 60).unwrap();
    let y1 = y.range(0, 60).unwrap();
    let a2 = a.row_range(60, 60).unwrap();
    let y2 = y.range(60, 60).unwrap();
    let (z0, _) = hard_threshold(&init, 4).unwrap();
    let g = wirtinger_gradient(&a1, &y1, &z0).unwrap();
    let v = DenseVector::complex(
        z0.as_complex()
            .unwrap()
            .iter()
            .zip(g.as_complex().unwrap())
            .map(|(z, g)| z - mu * g)
            .collect(),
    )
    .unwrap();
    let (u, support) = hard_threshold(&v, 4).unwrap();
    let manual = gn_step(&a2, &y2, &u, &support).unwrap();

    assert_eq!(
        result.final_state.z, manual,
        "partition wiring diverged from the unrolled half-split definition"
    );
}

#[test]
fn resampled_rejects_partitions_smaller_than_the_sparsity() {
    let truth = gen_sparse_signal(30, 8, Field::Real, 163).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 100, 30, 164).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    // 100 rows over 2*12 partitions leaves 4 rows each, below s = 8.
    let cfg = SolverConfig {
        max_outer: 12,
        ..SolverConfig::new(8)
    };
    let init = DenseVector::zeros(Field::Real, 30);
    assert!(matches!(
        solve_resampled(&a, &y, &cfg, &init, None),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn resampled_tolerates_a_trailing_remainder() {
    // 2K = 4 partitions of 30 rows use 120 of the 123 rows; the remainder
    // must be silently ignored rather than breaking the split.
    let truth = gen_sparse_signal(50, 4, Field::Complex, 165).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 123, 50, 166).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let init = perturbed_oracle_init(&truth, 0.5, 167).unwrap();
    let cfg = SolverConfig {
        max_outer: 2,
        ..SolverConfig::new(4)
    };
    let result = solve_resampled(&a, &y, &cfg, &init, Some(&truth.vector)).unwrap();
    assert!(result.final_state.loss.is_finite());
    assert!(result.history.len() >= 2);
}

#[test]
fn resampled_recovers_with_fresh_partitions() {
    // Desk-scale version of the partitioned-run regime (full scale lives in
    // the acceptance suite).
    let mut successes = 0;
    for seed in 0..5u64 {
        let truth = gen_sparse_signal(150, 5, Field::Complex, 170 + seed).unwrap();
        let a =
            sample_ensemble(EnsembleKind::ComplexGaussian, 8 * 200, 150, 180 + seed).unwrap();
        let y = measure(&a, &truth.vector).unwrap();
        let z0 = spectral_init(&a, &y, 5, Field::Complex).unwrap().z0;
        let cfg = SolverConfig {
            max_outer: 4,
            ..SolverConfig::new(5)
        };
        let result = solve_resampled(&a, &y, &cfg, &z0, Some(&truth.vector)).unwrap();
        if relative_error(&result.final_state.z, &truth.vector).unwrap() <= 1e-6 {
            successes += 1;
        }
    }
    assert!(
        successes >= 3,
        "fresh-sample solve succeeded only {successes}/5 times at desk scale"
    );
}

#[test]
fn solve_validates_shapes_and_fields() {
    let truth = gen_sparse_signal(20, 3, Field::Real, 190).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 30, 20, 191).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let cfg = SolverConfig::new(3);

    let short_init = DenseVector::zeros(Field::Real, 19);
    assert!(solve(&a, &y, &cfg, &short_init, None).is_err());

    let complex_init = DenseVector::zeros(Field::Complex, 20);
    assert!(matches!(
        solve(&a, &y, &cfg, &complex_init, Some(&truth.vector)),
        Err(Error::FieldMismatch(_))
    ));

    let bad_y = Measurements {
        values: vec![1.0; 29],
        sigma: 0.0,
        noise_seed: None,
    };
    assert!(solve(&a, &bad_y, &cfg, &DenseVector::zeros(Field::Real, 20), None).is_err());
}

#[test]
fn inner_start_previous_iterate_is_a_valid_variant() {
    // The non-default inner start must still contract from inside the basin.
    let truth = gen_sparse_signal(60, 5, Field::Real, 195).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 240, 60, 196).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let init = perturbed_oracle_init(&truth, 0.3, 197).unwrap();
    let cfg = SolverConfig {
        inner_start: InnerStart::PreviousIterate,
        ..SolverConfig::new(5)
    };
    let result = solve(&a, &y, &cfg, &init, Some(&truth.vector)).unwrap();
    let d_start = dist(&init, &truth.vector).unwrap();
    let d_end = result.final_state.dist_to_truth.unwrap();
    assert!(
        d_end < 1e-6 * d_start,
        "previous-iterate inner start stalled: {d_start:e} -> {d_end:e}"
    );
}

#[test]
fn gradient_field_dispatch_matches_the_iterate() {
    // solve() must route real iterates to the real gradient; a real solve on
    // complex-sensing data is the standard real-signal mode.
    let truth = gen_sparse_signal(50, 4, Field::Real, 198).unwrap();
    let a = sample_ensemble(EnsembleKind::ComplexGaussian, 150, 50, 199).unwrap();
    let y = measure(&a, &truth.vector).unwrap();
    let z0 = spectral_init(&a, &y, 4, Field::Real).unwrap().z0;
    assert_eq!(z0.field(), Field::Real);
    let result = solve(&a, &y, &SolverConfig::new(4), &z0, Some(&truth.vector)).unwrap();
    let r = relative_error(&result.final_state.z, &truth.vector).unwrap();
    assert!(
        r <= 1e-6,
        "real-mode recovery failed at n = 50, m = 150: rel err {r:e}"
    );
    let _ = gradient(&a, &y, &result.final_state.z).unwrap();
}
