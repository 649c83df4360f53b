//! Contract tests for config parsing, per-family validation, and the sweep
//! cell enumeration.

use grahtp::numerics::Field;
use grahtp::solver::SolverConfig;
use grahtp_cli::config::{RangeSpec, SCHEMA_VERSION};
use grahtp_cli::{CliError, ExperimentConfig, Family};

fn base_json(family: &str) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "n": 64,
        "m": 128,
        "s": 4,
        "trials": 2,
        "seed_base": 1,
        "field": "complex",
        "solver": { "sparsity": 4 },
        "init": { "kind": "spectral" }
    })
}

fn parse(value: serde_json::Value) -> Result<ExperimentConfig, serde_json::Error> {
    serde_json::from_value(value)
}

#[test]
fn range_values_are_inclusive_of_the_stop_when_hit_exactly() {
    let range = RangeSpec {
        start: 150,
        stop: 350,
        step: 100,
    };
    assert_eq!(range.values(), vec![150, 250, 350]);
    let offset = RangeSpec {
        start: 3,
        stop: 8,
        step: 3,
    };
    assert_eq!(offset.values(), vec![3, 6], "8 is not on the grid");
    let single = RangeSpec {
        start: 7,
        stop: 7,
        step: 1,
    };
    assert_eq!(single.values(), vec![7]);
}

#[test]
fn family_names_and_serde_spellings_agree() {
    for family in Family::ALL {
        assert_eq!(Family::from_name(family.name()), Some(family));
        let as_json = serde_json::to_value(family).unwrap();
        assert_eq!(
            as_json,
            serde_json::Value::String(family.name().to_string()),
            "config files and the bench argument must accept the same name"
        );
    }
    assert_eq!(Family::from_name("no_such_family"), None);
}

#[test]
fn partial_solver_blocks_fill_in_the_documented_defaults() {
    let solver: SolverConfig = serde_json::from_str(r#"{ "sparsity": 7 }"#).unwrap();
    assert_eq!(solver, SolverConfig::new(7));
}

#[test]
fn unknown_fields_are_rejected_everywhere() {
    let mut cfg = base_json("convergence");
    cfg["surprise"] = serde_json::json!(1);
    assert!(parse(cfg).is_err());

    let mut cfg = base_json("convergence");
    cfg["solver"]["surprise"] = serde_json::json!(1);
    assert!(parse(cfg).is_err());

    let mut cfg = base_json("convergence");
    cfg["init"] = serde_json::json!({ "kind": "spectral", "surprise": 1 });
    assert!(parse(cfg).is_err());
}

#[test]
fn convergence_accepts_scalars_and_rejects_ranges() {
    let cfg = parse(base_json("convergence")).unwrap();
    cfg.validate().unwrap();

    let mut ranged = base_json("convergence");
    ranged["m_range"] = serde_json::json!({ "start": 10, "stop": 20, "step": 5 });
    let cfg = parse(ranged).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn transition_grid_sweeps_s_major_with_sequential_cell_indices() {
    let mut raw = base_json("transition_grid");
    raw["m"] = serde_json::Value::Null;
    raw["s"] = serde_json::Value::Null;
    raw["m_range"] = serde_json::json!({ "start": 100, "stop": 300, "step": 100 });
    raw["s_range"] = serde_json::json!({ "start": 3, "stop": 9, "step": 3 });
    let cfg = parse(raw).unwrap();
    cfg.validate().unwrap();

    let cells = cfg.cells();
    let coords: Vec<(usize, usize, u64)> = cells.iter().map(|c| (c.s, c.m, c.index)).collect();
    assert_eq!(
        coords,
        vec![
            (3, 100, 0),
            (3, 200, 1),
            (3, 300, 2),
            (6, 100, 3),
            (6, 200, 4),
            (6, 300, 5),
            (9, 100, 6),
            (9, 200, 7),
            (9, 300, 8),
        ],
        "rows must come out s-major, m-minor, with indices in output order"
    );
    assert!(cells.iter().all(|c| c.n == 64));
}

#[test]
fn dft_family_refuses_the_spectral_initializer() {
    let cfg = parse(base_json("dft")).unwrap();
    let err = cfg.validate().unwrap_err();
    assert!(
        matches!(&err, CliError::Config(msg) if msg.contains("oracle_perturbed")),
        "the error should point at the supported initializer, got: {err}"
    );

    let mut fixed = base_json("dft");
    fixed["init"] = serde_json::json!({ "kind": "oracle_perturbed", "r": 0.8 });
    parse(fixed).unwrap().validate().unwrap();
}

#[test]
fn trace_requires_a_single_cell() {
    let mut raw = base_json("transition_curve");
    raw["m"] = serde_json::Value::Null;
    raw["m_range"] = serde_json::json!({ "start": 100, "stop": 200, "step": 50 });
    raw["trace"] = serde_json::json!(true);
    let cfg = parse(raw).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn reconstructions_enforce_real_field_and_divisible_shapes() {
    let mut raw = base_json("reconstruct_1d");
    raw["wavelet_levels"] = serde_json::json!(4);
    raw["field"] = serde_json::json!("real");
    let cfg = parse(raw.clone()).unwrap();
    cfg.validate().unwrap();

    raw["field"] = serde_json::json!("complex");
    let cfg = parse(raw.clone()).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));

    raw["field"] = serde_json::json!("real");
    raw["n"] = serde_json::json!(100); // 100 % 2^4 != 0
    let cfg = parse(raw).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));

    let mut raw2d = base_json("reconstruct_2d");
    raw2d["n"] = serde_json::Value::Null;
    raw2d["height"] = serde_json::json!(32);
    raw2d["width"] = serde_json::json!(48); // 48 % 2^4 = 0
    raw2d["wavelet_levels"] = serde_json::json!(4);
    raw2d["field"] = serde_json::json!("real");
    let cfg = parse(raw2d.clone()).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.cells()[0].n, 32 * 48, "2-D cells use n = height * width");

    raw2d["width"] = serde_json::json!(50);
    let cfg = parse(raw2d).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn image_height_width_are_reconstruct_2d_only() {
    let mut raw = base_json("convergence");
    raw["image"] = serde_json::json!("whatever.pgm");
    let cfg = parse(raw).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn timing_accepts_one_axis_as_scalar_or_range_but_not_both() {
    let mut raw = base_json("timing");
    raw["m"] = serde_json::Value::Null;
    raw["m_range"] = serde_json::json!({ "start": 100, "stop": 200, "step": 100 });
    parse(raw.clone()).unwrap().validate().unwrap();

    raw["m"] = serde_json::json!(150);
    let cfg = parse(raw).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn schema_version_and_basic_scalars_are_checked() {
    let mut raw = base_json("convergence");
    raw["schema_version"] = serde_json::json!(99);
    assert!(parse(raw).unwrap().validate().is_err());

    let mut raw = base_json("convergence");
    raw["trials"] = serde_json::json!(0);
    assert!(parse(raw).unwrap().validate().is_err());

    let mut raw = base_json("convergence");
    raw["sigma"] = serde_json::json!(-0.5);
    assert!(parse(raw).unwrap().validate().is_err());

    let mut raw = base_json("convergence");
    raw["init"] = serde_json::json!({ "kind": "oracle_perturbed", "r": 0.0 });
    assert!(parse(raw).unwrap().validate().is_err());
}

#[test]
fn field_spellings_follow_the_core_convention() {
    let real: Field = serde_json::from_str("\"real\"").unwrap();
    let complex: Field = serde_json::from_str("\"complex\"").unwrap();
    assert_eq!(real, Field::Real);
    assert_eq!(complex, Field::Complex);
}
