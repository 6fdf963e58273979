use orgym_core::lp::{
    apply_edit, parse_model, serialize_model, Constraint, LpError, LpModel, ModelEdit,
    ObjectiveSense, Sense, Variable,
};
use proptest::prelude::*;

const A1: &str = include_str!("../fixtures/production_a1.json");

#[test]
fn parses_production_fixture() {
    let m = parse_model(A1).unwrap();
    assert_eq!(m.variables.len(), 3);
    assert_eq!(m.constraints.len(), 4);
    let c1 = m.constraint("c1_total").unwrap();
    assert_eq!(c1.sense, Sense::Le);
    assert_eq!(c1.rhs, 100.0);
    assert_eq!(c1.terms.len(), 3);
}

#[test]
fn empty_constraint_list_is_valid() {
    let text = r#"{"objective_sense":"MAX","variables":[{"name":"x","lower":0,"upper":"+inf","obj_coeff":1}],"constraints":[]}"#;
    let m = parse_model(text).unwrap();
    assert!(m.constraints.is_empty());
    assert_eq!(m.description, None);
}

#[test]
fn unknown_variable_is_an_invariant_error() {
    let text = r#"{"objective_sense":"MIN","variables":[{"name":"x","lower":0,"upper":"+inf","obj_coeff":1}],
        "constraints":[{"name":"c","terms":{"y":1},"sense":"LE","rhs":1}]}"#;
    assert!(matches!(parse_model(text), Err(LpError::Invariant(_))));
}

#[test]
fn malformed_json_is_a_schema_error() {
    assert!(matches!(parse_model("{"), Err(LpError::Schema(_))));
    let missing = r#"{"objective_sense":"MIN","variables":[]}"#;
    assert!(matches!(parse_model(missing), Err(LpError::Schema(_))));
}

#[test]
fn crossed_bounds_rejected() {
    let text = r#"{"objective_sense":"MIN","variables":[{"name":"x","lower":5,"upper":1,"obj_coeff":1}],"constraints":[]}"#;
    assert!(matches!(parse_model(text), Err(LpError::Invariant(_))));
}

#[test]
fn round_trip_fixture() {
    let m = parse_model(A1).unwrap();
    assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
}

#[test]
fn infinite_bounds_use_sentinel_strings() {
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    m.variables.push(Variable::bounded(
        "x",
        f64::NEG_INFINITY,
        f64::INFINITY,
        0.0,
    ));
    let text = serialize_model(&m);
    assert!(text.contains(r#""lower":"-inf""#), "{text}");
    assert!(text.contains(r#""upper":"+inf""#), "{text}");
    assert_eq!(parse_model(&text).unwrap(), m);
}

#[test]
fn equal_models_serialize_identically() {
    let a = parse_model(A1).unwrap();
    let b = parse_model(&serialize_model(&a)).unwrap();
    assert_eq!(serialize_model(&a), serialize_model(&b));
}

#[test]
fn relax_shifts_rhs_by_signed_delta() {
    let m = parse_model(A1).unwrap();
    let e = ModelEdit::Relax {
        target: "c3_min_1".into(),
        delta: -10.0,
    };
    let out = apply_edit(&m, &e).unwrap();
    assert_eq!(out.constraint("c3_min_1").unwrap().rhs, 40.0);
    assert_eq!(m.constraint("c3_min_1").unwrap().rhs, 50.0);
}

#[test]
fn flip_swaps_ge_to_le() {
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    m.variables.push(Variable::nonneg("x", 1.0));
    m.variables.push(Variable::nonneg("y", 1.0));
    m.constraints.push(Constraint::new(
        "c",
        [("x", 1.0), ("y", 1.0)],
        Sense::Ge,
        10.0,
    ));
    let out = apply_edit(&m, &ModelEdit::Flip { target: "c".into() }).unwrap();
    assert_eq!(out.constraint("c").unwrap().to_string(), "c: x + y <= 10");
}

#[test]
fn flip_on_equality_is_rejected() {
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    m.variables.push(Variable::nonneg("x", 1.0));
    m.constraints
        .push(Constraint::new("c", [("x", 1.0)], Sense::Eq, 1.0));
    assert_eq!(
        apply_edit(&m, &ModelEdit::Flip { target: "c".into() }),
        Err(LpError::FlipOnEquality("c".into()))
    );
}

#[test]
fn drop_then_relax_is_unknown_target() {
    let m = parse_model(A1).unwrap();
    let dropped = apply_edit(
        &m,
        &ModelEdit::Drop {
            target: "c2_min_0".into(),
        },
    )
    .unwrap();
    assert_eq!(dropped.constraints.len(), 3);
    assert_eq!(
        apply_edit(
            &dropped,
            &ModelEdit::Relax {
                target: "c2_min_0".into(),
                delta: 1.0
            }
        ),
        Err(LpError::UnknownTarget("c2_min_0".into()))
    );
}

#[test]
fn bound_targets() {
    let m = parse_model(A1).unwrap();
    let out = apply_edit(
        &m,
        &ModelEdit::Relax {
            target: "x[0]__lb".into(),
            delta: 5.0,
        },
    )
    .unwrap();
    assert_eq!(out.variable("x[0]").unwrap().lower, 5.0);
    let out = apply_edit(
        &m,
        &ModelEdit::Drop {
            target: "x[0]__lb".into(),
        },
    )
    .unwrap();
    assert_eq!(out.variable("x[0]").unwrap().lower, f64::NEG_INFINITY);
    // infinite upper bound is not a target
    assert!(matches!(
        apply_edit(
            &m,
            &ModelEdit::Drop {
                target: "x[0]__ub".into()
            }
        ),
        Err(LpError::UnknownTarget(_))
    ));
    assert!(matches!(
        apply_edit(
            &m,
            &ModelEdit::Flip {
                target: "x[0]__lb".into()
            }
        ),
        Err(LpError::UnknownTarget(_))
    ));
}

#[test]
fn edit_json_shape() {
    let e = ModelEdit::Relax {
        target: "d1_min".into(),
        delta: -15.0,
    };
    assert_eq!(
        serde_json::to_string(&e).unwrap(),
        r#"{"type":"RELAX","target":"d1_min","delta":-15.0}"#
    );
}

fn arb_model() -> impl Strategy<Value = LpModel> {
    let var = (
        any::<bool>(),
        -1e6f64..1e6,
        0f64..1e6,
        any::<bool>(),
        -1e3f64..1e3,
    );
    let vars = prop::collection::vec(var, 1..6);
    (
        vars,
        any::<bool>(),
        prop::collection::vec((0usize..6, -1e3f64..1e3, 0u8..3, -1e4f64..1e4), 0..8),
    )
        .prop_map(|(vars, max, rows)| {
            let mut m = LpModel::new(if max {
                ObjectiveSense::Maximize
            } else {
                ObjectiveSense::Minimize
            });
            for (j, (free, lo, width, open, c)) in vars.iter().enumerate() {
                let lower = if *free { f64::NEG_INFINITY } else { *lo };
                let upper = if *open { f64::INFINITY } else { lo + width };
                m.variables
                    .push(Variable::bounded(format!("v{j}"), lower, upper, *c));
            }
            let n = m.variables.len();
            for (i, (j, a, s, rhs)) in rows.into_iter().enumerate() {
                let a = if a == 0.0 { 1.0 } else { a };
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][s as usize];
                m.constraints.push(Constraint::new(
                    format!("c{i}"),
                    [
                        (format!("v{}", j % n), a),
                        (format!("v{}", (j + 1) % n), 0.5),
                    ],
                    sense,
                    rhs,
                ));
            }
            m
        })
}

proptest! {
    #[test]
    fn serialization_round_trips(m in arb_model()) {
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_model(&back), text);
    }

    #[test]
    fn apply_edit_does_not_mutate_input(m in arb_model(), idx in 0usize..8, delta in -10f64..10.0) {
        prop_assume!(!m.constraints.is_empty());
        let name = m.constraints[idx % m.constraints.len()].name.clone();
        let before = m.clone();
        for e in [
            ModelEdit::Relax { target: name.clone(), delta },
            ModelEdit::Drop { target: name.clone() },
            ModelEdit::Flip { target: name.clone() },
            ModelEdit::SetRhs { target: name.clone(), value: delta },
        ] {
            let _ = apply_edit(&m, &e);
            prop_assert_eq!(&m, &before);
        }
    }

    #[test]
    fn flip_twice_is_identity(m in arb_model(), idx in 0usize..8) {
        prop_assume!(!m.constraints.is_empty());
        let c = &m.constraints[idx % m.constraints.len()];
        prop_assume!(c.sense != Sense::Eq);
        let e = ModelEdit::Flip { target: c.name.clone() };
        let twice = apply_edit(&apply_edit(&m, &e).unwrap(), &e).unwrap();
        prop_assert_eq!(twice, m);
    }
}
