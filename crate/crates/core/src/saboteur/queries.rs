//! Small LP questions asked while choosing sabotage targets.

use indexmap::IndexMap;

use crate::lp::{LpModel, ObjectiveSense};
use crate::solver::{compute_iis, solve, IisReport, SolveResult, SolveStatus};

/// Optimum of `Σ terms` over the feasible set of `model`, or `None` when the
/// extreme is unbounded or the model infeasible.
pub(crate) fn extreme(
    model: &LpModel,
    terms: &IndexMap<String, f64>,
    sense: ObjectiveSense,
) -> Option<f64> {
    let mut m = model.clone();
    m.objective_sense = sense;
    for v in &mut m.variables {
        v.obj_coeff = terms.get(&v.name).copied().unwrap_or(0.0);
    }
    let r = solve(&m);
    match r.status {
        SolveStatus::Optimal => r.objective,
        _ => None,
    }
}

pub(crate) fn without_row(model: &LpModel, name: &str) -> LpModel {
    let mut m = model.clone();
    m.constraints.retain(|c| c.name != name);
    m
}

pub(crate) fn optimal(model: &LpModel) -> Option<SolveResult> {
    let r = solve(model);
    r.is_optimal().then_some(r)
}

/// IIS of `model` if it is infeasible and the IIS contains every name in `must`.
pub(crate) fn infeasible_with(model: &LpModel, must: &[&str]) -> Option<IisReport> {
    if solve(model).status != SolveStatus::Infeasible {
        return None;
    }
    let iis = compute_iis(model).ok()?;
    must.iter().all(|n| iis.contains(n)).then_some(iis)
}

pub(crate) fn single_term(var: &str) -> IndexMap<String, f64> {
    let mut t = IndexMap::new();
    t.insert(var.to_string(), 1.0);
    t
}

/// Rounds a sabotaged value to a whole number strictly beyond `limit` by at
/// least `gap` in the given direction.
pub(crate) fn beyond(limit: f64, gap: f64, upward: bool) -> f64 {
    if upward {
        (limit + gap.max(1.0)).ceil()
    } else {
        (limit - gap.max(1.0)).floor()
    }
}
