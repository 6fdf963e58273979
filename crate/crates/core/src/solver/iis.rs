use serde::{Deserialize, Serialize};

use crate::lp::{bound_name, parse_bound_name, BoundSide, LpModel};

use super::{solve_with, SolveStatus, SolverConfig, SolverError};

/// An irreducible infeasible subsystem.
///
/// Rows and variable bounds are reported separately, in deletion order.
/// Bounds use the implicit names `<var>__lb` / `<var>__ub`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IisReport {
    pub constraints: Vec<String>,
    pub bounds: Vec<String>,
}

impl IisReport {
    /// Rows first, then bounds.
    pub fn members(&self) -> Vec<String> {
        self.constraints
            .iter()
            .chain(&self.bounds)
            .cloned()
            .collect()
    }

    pub fn size(&self) -> usize {
        self.constraints.len() + self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn contains(&self, name: &str) -> bool {
        self.constraints.iter().any(|c| c == name) || self.bounds.iter().any(|b| b == name)
    }
}

/// Deletion filter with default tolerances.
pub fn compute_iis(model: &LpModel) -> Result<IisReport, SolverError> {
    compute_iis_with(model, &SolverConfig::default())
}

/// Deletion filter: walk the rows in model order, then the finite variable
/// bounds in variable order (lower before upper). Each member is dropped for
/// good if the remaining system is still infeasible. What survives is
/// infeasible, and removing any one survivor makes it feasible.
pub fn compute_iis_with(model: &LpModel, cfg: &SolverConfig) -> Result<IisReport, SolverError> {
    let status = solve_with(model, cfg).status;
    if status != SolveStatus::Infeasible {
        return Err(match status {
            SolveStatus::Error => SolverError::Oracle("initial solve failed".into()),
            other => SolverError::NotInfeasible(other),
        });
    }

    let mut candidates: Vec<String> = model.constraints.iter().map(|c| c.name.clone()).collect();
    for v in &model.variables {
        for side in [BoundSide::Lower, BoundSide::Upper] {
            if v.bound(side).is_finite() {
                candidates.push(bound_name(&v.name, side));
            }
        }
    }
    let mut active = vec![true; candidates.len()];

    for i in 0..candidates.len() {
        active[i] = false;
        let sub = subsystem(model, &candidates, &active);
        match solve_with(&sub, cfg).status {
            SolveStatus::Infeasible => {}
            SolveStatus::Optimal | SolveStatus::Unbounded => active[i] = true,
            SolveStatus::Error => {
                return Err(SolverError::Oracle(format!(
                    "feasibility check failed while testing `{}`",
                    candidates[i]
                )))
            }
        }
    }

    let n_rows = model.constraints.len();
    let mut report = IisReport::default();
    for (i, name) in candidates.into_iter().enumerate() {
        if active[i] {
            if i < n_rows {
                report.constraints.push(name);
            } else {
                report.bounds.push(name);
            }
        }
    }
    Ok(report)
}

/// The feasibility problem over the active members only: zero objective,
/// inactive rows removed, inactive bounds opened to infinity.
pub(crate) fn subsystem(model: &LpModel, candidates: &[String], active: &[bool]) -> LpModel {
    let keep = |name: &str| candidates.iter().zip(active).any(|(c, a)| *a && c == name);
    let mut sub = model.clone();
    sub.description = None;
    sub.constraints.retain(|c| keep(&c.name));
    for v in &mut sub.variables {
        v.obj_coeff = 0.0;
        if v.lower.is_finite() && !keep(&bound_name(&v.name, BoundSide::Lower)) {
            v.lower = f64::NEG_INFINITY;
        }
        if v.upper.is_finite() && !keep(&bound_name(&v.name, BoundSide::Upper)) {
            v.upper = f64::INFINITY;
        }
    }
    sub
}

/// The subsystem induced by an explicit member list (rows and bound names).
pub fn induced_subsystem(model: &LpModel, members: &[String]) -> LpModel {
    let mut candidates: Vec<String> = model.constraints.iter().map(|c| c.name.clone()).collect();
    for v in &model.variables {
        for side in [BoundSide::Lower, BoundSide::Upper] {
            candidates.push(bound_name(&v.name, side));
        }
    }
    let active: Vec<bool> = candidates
        .iter()
        .map(|c| members.iter().any(|m| m == c))
        .collect();
    debug_assert!(members
        .iter()
        .all(|m| model.constraint(m).is_some() || parse_bound_name(m).is_some()));
    subsystem(model, &candidates, &active)
}
