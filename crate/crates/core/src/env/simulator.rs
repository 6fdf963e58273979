//! Solver-free approximation of action outcomes, driven by the ground truth.

use rand::Rng;

use crate::saboteur::GroundTruth;
use crate::solver::SolveStatus;

use super::{Action, ActionKind, EpisodeState};

pub const SIM_RELAX_P: f64 = 0.9;
pub const SIM_DROP_P: f64 = 0.7;
pub const SIM_SHRINK_P: f64 = 0.5;

/// Simulated next state.
///
/// GET_IIS and CHECK_SLACK return `s` unchanged. A RELAX or DROP on a key
/// constraint succeeds with probability 0.9 or 0.7; other kinds on a key
/// constraint, and failed draws, leave the status as is. A repair on any
/// other reference IIS member removes it from the log with probability 0.5.
/// Everything else reports INFEASIBLE. Repairs advance the step counter.
pub fn simulate_step<R: Rng + ?Sized>(
    a: &Action,
    s: &EpisodeState,
    gt: &GroundTruth,
    rng: &mut R,
) -> EpisodeState {
    if matches!(a.kind, ActionKind::GetIis | ActionKind::CheckSlack) {
        return s.clone();
    }
    let mut n = s.clone();
    n.history.push(a.clone());
    n.actions_taken += 1;
    if a.kind.is_repair() {
        n.step += 1;
    }
    let target = a.kind.target();
    if target.is_some_and(|t| gt.key_constraints.iter().any(|k| k == t)) {
        let p = match a.kind {
            ActionKind::Relax { .. } => SIM_RELAX_P,
            ActionKind::Drop { .. } => SIM_DROP_P,
            _ => 0.0,
        };
        if p > 0.0 && rng.random_bool(p) {
            n.status = SolveStatus::Optimal;
            n.iis_log.clear();
        }
    } else if let Some(t) = target.filter(|t| gt.iis_gt.contains(t)) {
        if rng.random_bool(SIM_SHRINK_P) {
            n.iis_log.retain(|m| m != t);
        }
    } else {
        n.status = SolveStatus::Infeasible;
    }
    n
}
