//! The two worked examples shipped as ready-made benchmark instances.

use crate::lp::{apply_edit, parse_model, LpModel, ModelEdit};
use crate::saboteur::{
    assign_difficulty, BenchmarkInstance, ErrorType, GroundTruth, SCHEMA_VERSION,
};
use crate::solver::{compute_iis, solve};

const PRODUCTION: &str = include_str!("../fixtures/production_a1.json");
const TRANSPORT: &str = include_str!("../fixtures/transport_a4.json");

/// Three products over a shared capacity of 100 with minimums 60 and 50.
/// The intended minimum for product 1 was 40.
pub fn production_instance() -> BenchmarkInstance {
    let sabotaged = parse_model(PRODUCTION).expect("bundled fixture parses");
    build("production_a1", ErrorType::C, sabotaged, "c3_min_1", -10.0)
}

/// Supplies 40, 35, 25 against demands 30, 35, 25, 25. Demand 1 was 20.
pub fn transport_instance() -> BenchmarkInstance {
    let sabotaged = parse_model(TRANSPORT).expect("bundled fixture parses");
    build("transport_a4", ErrorType::E, sabotaged, "d1_min", -15.0)
}

fn build(id: &str, t: ErrorType, sabotaged: LpModel, key: &str, delta: f64) -> BenchmarkInstance {
    let fix = ModelEdit::Relax {
        target: key.to_string(),
        delta,
    };
    let original = apply_edit(&sabotaged, &fix).expect("fixture fix applies");
    let iis = compute_iis(&sabotaged).expect("fixture is infeasible");
    let objective = solve(&original)
        .objective
        .expect("fixture original is optimal");
    BenchmarkInstance {
        schema_version: SCHEMA_VERSION,
        id: id.to_string(),
        error_type: t,
        original,
        sabotaged,
        difficulty: assign_difficulty(t, iis.size()),
        ground_truth: GroundTruth {
            key_constraints: vec![key.to_string()],
            fix: vec![fix],
            iis_gt: iis,
            original_objective: objective,
        },
        root_cause: None,
        cascade: None,
    }
}
