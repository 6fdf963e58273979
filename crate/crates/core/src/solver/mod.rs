//! Deterministic LP oracle: status, primal values, slacks, duals, and IIS.

mod iis;
mod simplex;

use std::fmt;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpModel, Sense};

pub use iis::{compute_iis, compute_iis_with, induced_subsystem, IisReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Error,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::Unbounded => "UNBOUNDED",
            SolveStatus::Error => "ERROR",
        })
    }
}

/// Tolerances and limits. Defaults: feasibility 1e-7, reduced-cost
/// optimality 1e-9, 10 s per solve. The solver is single-threaded.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub timeout: Duration,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            timeout: Duration::from_secs(10),
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("model is not infeasible (status {0})")]
    NotInfeasible(SolveStatus),
    #[error("solver failure: {0}")]
    Oracle(String),
    #[error("no value for variable `{0}`")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff the status is OPTIMAL.
    pub objective: Option<f64>,
    /// Optimal point; for INFEASIBLE, the phase-1 point of least infeasibility.
    pub primal: IndexMap<String, f64>,
    pub slacks: IndexMap<String, f64>,
    /// Rate of change of the objective per unit increase of each row's rhs.
    pub duals: IndexMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SolveResult {
    fn bare(status: SolveStatus, message: Option<String>) -> Self {
        SolveResult {
            status,
            objective: None,
            primal: IndexMap::new(),
            slacks: IndexMap::new(),
            duals: IndexMap::new(),
            message,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

pub fn solve(model: &LpModel) -> SolveResult {
    solve_with(model, &SolverConfig::default())
}

pub fn solve_with(model: &LpModel, cfg: &SolverConfig) -> SolveResult {
    if let Err(e) = model.validate() {
        return SolveResult::bare(SolveStatus::Error, Some(e.to_string()));
    }
    match simplex::run(model, cfg) {
        simplex::SimplexOutcome::Optimal { x, row_duals } => {
            if let Some(msg) = check_primal(model, &x, cfg) {
                return SolveResult::bare(SolveStatus::Error, Some(msg));
            }
            let primal = primal_map(model, &x);
            let slacks = constraint_slacks(model, &primal)
                .expect("primal covers all variables")
                .into_iter()
                .map(|(k, s)| (k, s.value))
                .collect();
            let duals = model
                .constraints
                .iter()
                .zip(row_duals)
                .map(|(c, d)| (c.name.clone(), d))
                .collect();
            SolveResult {
                status: SolveStatus::Optimal,
                objective: Some(model.objective_value(&x)),
                primal,
                slacks,
                duals,
                message: None,
            }
        }
        simplex::SimplexOutcome::Infeasible { x } => {
            let primal = primal_map(model, &x);
            let slacks = constraint_slacks(model, &primal)
                .expect("primal covers all variables")
                .into_iter()
                .map(|(k, s)| (k, s.value))
                .collect();
            SolveResult {
                primal,
                slacks,
                ..SolveResult::bare(SolveStatus::Infeasible, None)
            }
        }
        simplex::SimplexOutcome::Unbounded => SolveResult::bare(SolveStatus::Unbounded, None),
        simplex::SimplexOutcome::Error(msg) => SolveResult::bare(SolveStatus::Error, Some(msg)),
    }
}

fn primal_map(model: &LpModel, x: &[f64]) -> IndexMap<String, f64> {
    model
        .variables
        .iter()
        .zip(x)
        .map(|(v, x)| (v.name.clone(), *x))
        .collect()
}

/// Rejects an "optimal" point that violates the model by more than a scaled
/// tolerance; that only happens after numerical breakdown.
fn check_primal(model: &LpModel, x: &[f64], cfg: &SolverConfig) -> Option<String> {
    let tol = |scale: f64| 1e3 * cfg.feasibility_tol * (1.0 + scale.abs());
    for (v, xv) in model.variables.iter().zip(x) {
        if *xv < v.lower - tol(v.lower) || *xv > v.upper + tol(v.upper) {
            return Some(format!(
                "numerical breakdown: `{}` = {xv} outside bounds",
                v.name
            ));
        }
    }
    for c in &model.constraints {
        let act = c.activity(|name| x[model.variable_index(name).expect("validated")]);
        if !c.is_satisfied_by(act, tol(c.rhs)) {
            return Some(format!("numerical breakdown: row `{}` violated", c.name));
        }
    }
    None
}

/// Slack of one row at a point, with a flag for violation.
///
/// LE: `rhs - activity`; GE: `activity - rhs`; EQ: `|activity - rhs|`.
/// For inequalities a negative value is a violation; for equalities any
/// value above the tolerance is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub value: f64,
    pub violated: bool,
}

pub fn constraint_slacks(
    model: &LpModel,
    primal: &IndexMap<String, f64>,
) -> Result<IndexMap<String, Slack>, SolverError> {
    let tol = SolverConfig::default().feasibility_tol;
    for v in &model.variables {
        if !primal.contains_key(&v.name) {
            return Err(SolverError::UnknownVariable(v.name.clone()));
        }
    }
    let mut out = IndexMap::with_capacity(model.constraints.len());
    for c in &model.constraints {
        let mut missing = None;
        let act = c.activity(|name| match primal.get(name) {
            Some(v) => *v,
            None => {
                missing = Some(name.to_string());
                0.0
            }
        });
        if let Some(name) = missing {
            return Err(SolverError::UnknownVariable(name));
        }
        let slack = match c.sense {
            Sense::Le => {
                let value = c.rhs - act;
                Slack {
                    value,
                    violated: value < -tol,
                }
            }
            Sense::Ge => {
                let value = act - c.rhs;
                Slack {
                    value,
                    violated: value < -tol,
                }
            }
            Sense::Eq => {
                let value = (act - c.rhs).abs();
                Slack {
                    value,
                    violated: value > tol,
                }
            }
        };
        out.insert(c.name.clone(), slack);
    }
    Ok(out)
}
