use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::saboteur::GroundTruth;
use crate::solver::SolveStatus;

use super::{Action, EpisodeState};

pub const FAITHFULNESS_PENALTY: f64 = 20.0;

const W_OUTCOME: f64 = 0.5;
const W_DIAGNOSIS: f64 = 0.3;
const W_EFFICIENCY: f64 = 0.2;

/// Unweighted reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRaw {
    pub outcome: f64,
    pub diagnosis: f64,
    pub efficiency: f64,
}

/// Weighted terms; `total = outcome + diagnosis + efficiency - faithfulness_penalty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub outcome: f64,
    pub diagnosis: f64,
    pub efficiency: f64,
    pub faithfulness_penalty: f64,
    pub total: f64,
    pub raw: RewardRaw,
}

impl RewardBreakdown {
    fn from_raw(raw: RewardRaw, penalty: f64) -> Self {
        let outcome = W_OUTCOME * raw.outcome;
        let diagnosis = W_DIAGNOSIS * raw.diagnosis;
        let efficiency = W_EFFICIENCY * raw.efficiency;
        RewardBreakdown {
            outcome,
            diagnosis,
            efficiency,
            faithfulness_penalty: penalty,
            total: outcome + diagnosis + efficiency - penalty,
            raw,
        }
    }

    /// Rejected actions always pay the penalty, whatever their target.
    pub(crate) fn apply_invalid_penalty(&mut self) {
        *self = RewardBreakdown::from_raw(self.raw, FAITHFULNESS_PENALTY);
    }
}

/// Reward for the transition `s --a--> next`.
///
/// Efficiency uses the repair counter of `s`. The faithfulness check compares
/// a repair target with the IIS of `s`, since a successful repair leaves
/// `next` without one.
pub fn compute_reward(
    s: &EpisodeState,
    a: &Action,
    next: &EpisodeState,
    gt: &GroundTruth,
) -> RewardBreakdown {
    let outcome = match next.status {
        SolveStatus::Optimal => 100.0,
        SolveStatus::Infeasible => -50.0,
        _ => 0.0,
    };
    let diagnosis = match &a.diagnosis {
        Some(d) => 100.0 * diagnostic_accuracy(d, gt),
        None => 0.0,
    };
    let efficiency = 50.0 * f64::max(0.0, (50.0 - f64::from(s.step)) / 50.0);
    let penalty = match a.kind.target() {
        Some(t) if !s.iis_log.iter().any(|m| m == t) => FAITHFULNESS_PENALTY,
        _ => 0.0,
    };
    RewardBreakdown::from_raw(
        RewardRaw {
            outcome,
            diagnosis,
            efficiency,
        },
        penalty,
    )
}

/// |D ∩ IIS| / |IIS| over the reference IIS, duplicates in D counted once.
pub fn diagnostic_accuracy<S: AsRef<str>>(diagnosed: &[S], gt: &GroundTruth) -> f64 {
    let members = gt.iis_gt.members();
    if members.is_empty() {
        return 0.0;
    }
    let d: HashSet<&str> = diagnosed.iter().map(AsRef::as_ref).collect();
    let hit = members.iter().filter(|m| d.contains(m.as_str())).count();
    hit as f64 / members.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    FullSuccess,
    PartialSuccess,
    Failure,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self != Outcome::Failure
    }
}

/// `1 - |final - original| / |original|`. A zero original objective gives 1
/// when the final objective is also zero and 0 otherwise.
pub fn optimality_preservation(original: f64, final_objective: f64) -> f64 {
    let delta = (final_objective - original).abs();
    if original.abs() < 1e-9 {
        return if delta < 1e-9 { 1.0 } else { 0.0 };
    }
    1.0 - delta / original.abs()
}

/// Classifies a finished episode from its last state. Returns OP alongside
/// when the final model is optimal.
pub fn classify_outcome(last: &EpisodeState, gt: &GroundTruth) -> (Outcome, Option<f64>) {
    let Some(obj) = last
        .objective
        .filter(|_| last.status == SolveStatus::Optimal)
    else {
        return (Outcome::Failure, None);
    };
    let op = optimality_preservation(gt.original_objective, obj);
    let class = if op > 0.95 {
        Outcome::FullSuccess
    } else if op > 0.8 {
        Outcome::PartialSuccess
    } else {
        Outcome::Failure
    };
    (class, Some(op))
}
