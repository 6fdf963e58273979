//! Four-phase acceptance check for a generated instance.

use serde::{Deserialize, Serialize};

use crate::lp::apply_edits;
use crate::solver::{compute_iis, solve, SolveStatus};

use super::{BenchmarkInstance, ErrorType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    /// 1 to 4, the first phase that rejected the instance.
    pub failed_phase: Option<u8>,
    pub detail: String,
}

impl ValidationReport {
    fn ok() -> Self {
        ValidationReport {
            pass: true,
            failed_phase: None,
            detail: "all phases passed".into(),
        }
    }

    fn fail(phase: u8, detail: impl Into<String>) -> Self {
        ValidationReport {
            pass: false,
            failed_phase: Some(phase),
            detail: detail.into(),
        }
    }
}

/// Runs the phases in order and stops at the first failure:
/// original optimal, sabotaged infeasible, IIS covers the ground truth,
/// fix restores optimality.
pub fn validate(inst: &BenchmarkInstance) -> ValidationReport {
    let orig = solve(&inst.original);
    if orig.status != SolveStatus::Optimal {
        return ValidationReport::fail(1, format!("original model is {}", orig.status));
    }

    let sab = solve(&inst.sabotaged);
    if sab.status != SolveStatus::Infeasible {
        return ValidationReport::fail(2, format!("sabotaged model is {}", sab.status));
    }

    let iis = match compute_iis(&inst.sabotaged) {
        Ok(iis) => iis,
        Err(e) => return ValidationReport::fail(3, format!("IIS computation failed: {e}")),
    };
    if iis.is_empty() {
        return ValidationReport::fail(3, "IIS is empty");
    }
    let gt = &inst.ground_truth;
    for k in &gt.key_constraints {
        if !iis.contains(k) {
            return ValidationReport::fail(3, format!("key constraint {k} not in IIS"));
        }
    }
    match &inst.root_cause {
        Some(root) if !iis.contains(root) => {
            return ValidationReport::fail(3, format!("root cause {root} not in IIS"));
        }
        None if inst.error_type == ErrorType::F => {
            return ValidationReport::fail(3, "missing root cause");
        }
        _ => {}
    }
    for edit in &gt.fix {
        let t = edit.target();
        if !iis.contains(&t) {
            return ValidationReport::fail(3, format!("fix target {t} not in IIS"));
        }
    }

    if inst.cascade.is_some() {
        match apply_edits(&inst.sabotaged, &gt.fix) {
            Ok(m) if solve(&m).status == SolveStatus::Infeasible => {}
            Ok(_) => return ValidationReport::fail(4, "primary fix alone resolves the cascade"),
            Err(e) => return ValidationReport::fail(4, format!("primary fix does not apply: {e}")),
        }
    }
    let fixed = match apply_edits(&inst.sabotaged, &inst.full_fix()) {
        Ok(m) => m,
        Err(e) => return ValidationReport::fail(4, format!("fix does not apply: {e}")),
    };
    let status = solve(&fixed).status;
    if status != SolveStatus::Optimal {
        return ValidationReport::fail(4, format!("fixed model is {status}"));
    }
    ValidationReport::ok()
}
