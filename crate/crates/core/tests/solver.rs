use indexmap::IndexMap;
use orgym_core::lp::{parse_model, Constraint, LpModel, ObjectiveSense, Sense, Variable};
use orgym_core::solver::{
    compute_iis, constraint_slacks, solve, IisReport, SolveStatus, SolverError,
};
use orgym_oracles::feasibility::{
    is_feasible, is_irreducible_infeasible, members, minimal_infeasible_subsets,
};
use orgym_oracles::random_lp::random_small_lp;

const A1: &str = include_str!("../fixtures/production_a1.json");

fn one_var(sense: ObjectiveSense, rows: Vec<Constraint>) -> LpModel {
    let mut m = LpModel::new(sense);
    m.variables.push(Variable::nonneg("x", 1.0));
    m.constraints = rows;
    m
}

#[test]
fn production_fixture_is_infeasible() {
    assert_eq!(
        solve(&parse_model(A1).unwrap()).status,
        SolveStatus::Infeasible
    );
}

#[test]
fn max_with_cap() {
    let m = one_var(
        ObjectiveSense::Maximize,
        vec![Constraint::new("cap", [("x", 1.0)], Sense::Le, 5.0)],
    );
    let r = solve(&m);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.objective, Some(5.0));
    assert_eq!(r.primal["x"], 5.0);
    assert_eq!(r.slacks["cap"], 0.0);
}

#[test]
fn max_without_cap_is_unbounded() {
    let r = solve(&one_var(ObjectiveSense::Maximize, vec![]));
    assert_eq!(r.status, SolveStatus::Unbounded);
    assert_eq!(r.objective, None);
}

#[test]
fn iis_of_production_fixture() {
    let m = parse_model(A1).unwrap();
    let iis = compute_iis(&m).unwrap();
    assert_eq!(iis.constraints, ["c1_total", "c2_min_0", "c3_min_1"]);
    // x[2] >= 0 is what makes the total row bite; it is a bound, reported apart
    assert_eq!(iis.bounds, ["x[2]__lb"]);
    assert!(is_irreducible_infeasible(&m, &iis.members()));
}

#[test]
fn iis_of_feasible_model_is_an_error() {
    let m = one_var(
        ObjectiveSense::Minimize,
        vec![Constraint::new("c", [("x", 1.0)], Sense::Ge, 1.0)],
    );
    assert_eq!(
        compute_iis(&m),
        Err(SolverError::NotInfeasible(SolveStatus::Optimal))
    );
}

#[test]
fn iis_two_of_three_rows() {
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    m.variables.push(Variable::bounded(
        "x",
        f64::NEG_INFINITY,
        f64::INFINITY,
        0.0,
    ));
    m.variables.push(Variable::bounded(
        "y",
        f64::NEG_INFINITY,
        f64::INFINITY,
        0.0,
    ));
    m.constraints = vec![
        Constraint::new("x_ge_5", [("x", 1.0)], Sense::Ge, 5.0),
        Constraint::new("x_le_3", [("x", 1.0)], Sense::Le, 3.0),
        Constraint::new("y_le_7", [("y", 1.0)], Sense::Le, 7.0),
    ];
    let all = members(&m);
    let minimal = minimal_infeasible_subsets(&m, &all);
    assert_eq!(
        minimal,
        vec![vec!["x_ge_5".to_string(), "x_le_3".to_string()]]
    );
    assert_eq!(
        compute_iis(&m).unwrap(),
        IisReport {
            constraints: minimal[0].clone(),
            bounds: vec![]
        }
    );
}

#[test]
fn slack_examples() {
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    m.variables.push(Variable::nonneg("x", 1.0));
    m.variables.push(Variable::nonneg("y", 1.0));
    m.constraints = vec![
        Constraint::new("cap", [("x", 1.0), ("y", 1.0)], Sense::Le, 100.0),
        Constraint::new("min", [("x", 1.0)], Sense::Ge, 50.0),
        Constraint::new("fix", [("x", 1.0)], Sense::Eq, 55.0),
    ];
    let point: IndexMap<String, f64> = [("x".to_string(), 60.0), ("y".to_string(), 40.0)]
        .into_iter()
        .collect();
    let s = constraint_slacks(&m, &point).unwrap();
    assert_eq!((s["cap"].value, s["cap"].violated), (0.0, false));
    assert_eq!((s["min"].value, s["min"].violated), (10.0, false));
    assert_eq!((s["fix"].value, s["fix"].violated), (5.0, true));

    let partial: IndexMap<String, f64> = [("x".to_string(), 1.0)].into_iter().collect();
    assert_eq!(
        constraint_slacks(&m, &partial),
        Err(SolverError::UnknownVariable("y".into()))
    );
}

/// Objective bound computed only from the duals: Σ π_i b_i plus, for every
/// variable, its reduced cost times the bound that reduced cost points at.
/// `None` when a required bound is infinite or a dual has the wrong sign.
fn dual_objective(m: &LpModel, duals: &IndexMap<String, f64>) -> Option<f64> {
    let tol = 1e-7;
    let max = m.objective_sense == ObjectiveSense::Maximize;
    let mut total = 0.0;
    for c in &m.constraints {
        let pi = duals[&c.name];
        // rhs up on a LE row relaxes it, so a MIN objective can only go down
        let wrong = match (c.sense, max) {
            (Sense::Le, false) | (Sense::Ge, true) => pi > tol,
            (Sense::Ge, false) | (Sense::Le, true) => pi < -tol,
            (Sense::Eq, _) => false,
        };
        if wrong {
            return None;
        }
        total += pi * c.rhs;
    }
    for v in &m.variables {
        let mut d = v.obj_coeff;
        for c in &m.constraints {
            d -= duals[&c.name] * c.terms.get(&v.name).copied().unwrap_or(0.0);
        }
        if d.abs() <= tol {
            continue;
        }
        let at_lower = (d > 0.0) != max;
        let bound = if at_lower { v.lower } else { v.upper };
        if !bound.is_finite() {
            return None;
        }
        total += d * bound;
    }
    Some(total)
}

/// Optimality certificate via the feasibility oracle: the model plus a cut
/// demanding a strictly better objective must be infeasible.
fn strictly_better_is_infeasible(m: &LpModel, obj: f64) -> bool {
    let mut cut = m.clone();
    let terms: Vec<(String, f64)> = m
        .variables
        .iter()
        .map(|v| (v.name.clone(), v.obj_coeff))
        .filter(|t| t.1 != 0.0)
        .collect();
    if terms.is_empty() {
        return true;
    }
    let eps = 1e-4 * (1.0 + obj.abs());
    let c = match m.objective_sense {
        ObjectiveSense::Minimize => Constraint::new("better", terms, Sense::Le, obj - eps),
        ObjectiveSense::Maximize => Constraint::new("better", terms, Sense::Ge, obj + eps),
    };
    cut.constraints.push(c);
    !is_feasible(&cut)
}

#[test]
fn random_lps_agree_with_fourier_motzkin() {
    let (mut optimal, mut infeasible, mut unbounded) = (0, 0, 0);
    for seed in 0..1500u64 {
        let m = random_small_lp(seed, 4, 6);
        let r = solve(&m);
        let feasible = is_feasible(&m);
        match r.status {
            SolveStatus::Infeasible => {
                assert!(!feasible, "seed {seed}: solver says infeasible");
                infeasible += 1;
            }
            SolveStatus::Optimal => {
                assert!(feasible, "seed {seed}");
                let obj = r.objective.unwrap();
                assert!(
                    strictly_better_is_infeasible(&m, obj),
                    "seed {seed}: not optimal"
                );
                let dual = dual_objective(&m, &r.duals)
                    .unwrap_or_else(|| panic!("seed {seed}: dual infeasible"));
                assert!(
                    (dual - obj).abs() <= 1e-6 * (1.0 + obj.abs()),
                    "seed {seed}: primal {obj} dual {dual}"
                );
                optimal += 1;
            }
            SolveStatus::Unbounded => {
                assert!(feasible, "seed {seed}");
                unbounded += 1;
            }
            SolveStatus::Error => panic!("seed {seed}: {:?}", r.message),
        }
    }
    assert!(
        optimal > 100 && infeasible > 100 && unbounded > 20,
        "{optimal} {infeasible} {unbounded}"
    );
}

#[test]
fn random_iis_are_irreducible() {
    let mut checked = 0;
    for seed in 0..2000u64 {
        let m = random_small_lp(seed, 4, 6);
        if solve(&m).status != SolveStatus::Infeasible {
            continue;
        }
        let iis = compute_iis(&m).unwrap();
        assert!(
            is_irreducible_infeasible(&m, &iis.members()),
            "seed {seed}: {iis:?}"
        );
        checked += 1;
    }
    assert!(checked > 200);
}

#[test]
fn solve_is_byte_deterministic() {
    for seed in 0..200u64 {
        let m = random_small_lp(seed, 4, 6);
        let a = serde_json::to_string(&solve(&m)).unwrap();
        let b = serde_json::to_string(&solve(&m)).unwrap();
        assert_eq!(a, b);
    }
}
