//! The agent interface and the three built-in baselines.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::env::{Action, ActionKind, EpisodeState};
use crate::lp::{bound_name, parse_bound_name, BoundSide, LpModel, Sense};
use crate::rng::{stream, Rng as StreamRng};
use crate::saboteur::BenchmarkInstance;
use crate::solver::SolveStatus;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent protocol error: {0}")]
    Protocol(String),
    #[error("agent did not reply within {0:?}")]
    Timeout(std::time::Duration),
    #[error("could not start agent: {0}")]
    Spawn(String),
}

/// Something that picks actions. `begin` is called once per attempt before
/// the first `act`; built-ins may look at the instance, external agents must
/// not.
pub trait Agent: Send {
    fn begin(&mut self, inst: &BenchmarkInstance, attempt: u32) -> Result<(), AgentError>;
    fn act(&mut self, state: &EpisodeState) -> Result<Action, AgentError>;
    fn end(&mut self) {}
}

/// Replays the ground truth: GET_IIS diagnosing the whole reference IIS, then
/// every fix edit (cascade included), then SUBMIT.
#[derive(Debug, Default)]
pub struct OracleAgent {
    plan: VecDeque<Action>,
}

impl OracleAgent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan_for(inst: &BenchmarkInstance) -> Vec<Action> {
        let mut plan = vec![
            Action::new(ActionKind::GetIis).with_diagnosis(inst.ground_truth.iis_gt.members())
        ];
        for edit in inst.full_fix() {
            let kind =
                ActionKind::from_edit(&edit).expect("ground-truth fixes use repair edits only");
            plan.push(Action::new(kind));
        }
        plan.push(Action::new(ActionKind::Submit));
        plan
    }
}

impl Agent for OracleAgent {
    fn begin(&mut self, inst: &BenchmarkInstance, _attempt: u32) -> Result<(), AgentError> {
        self.plan = Self::plan_for(inst).into();
        Ok(())
    }

    fn act(&mut self, _state: &EpisodeState) -> Result<Action, AgentError> {
        Ok(self
            .plan
            .pop_front()
            .unwrap_or_else(|| Action::new(ActionKind::Submit)))
    }
}

/// Trial-and-error baseline: loosen the most violated IIS member by 10% of
/// its right-hand side, re-reading slacks after every change.
#[derive(Debug, Default)]
pub struct GreedyAgent {
    cursor: usize,
}

impl GreedyAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

fn member_rhs(code: &LpModel, name: &str) -> Option<f64> {
    if let Some(c) = code.constraint(name) {
        return Some(c.rhs);
    }
    let (var, side) = parse_bound_name(name)?;
    code.variable(var)
        .map(|v| v.bound(side))
        .filter(|b| b.is_finite())
}

/// Signed relaxation step that loosens `name` at the observed point.
fn loosening_delta(s: &EpisodeState, name: &str) -> Option<f64> {
    let rhs = member_rhs(&s.code, name)?;
    let step = (0.1 * rhs.abs()).max(1.0);
    if let Some(c) = s.code.constraint(name) {
        return Some(match c.sense {
            Sense::Le => step,
            Sense::Ge => -step,
            Sense::Eq => {
                let act = s
                    .slack_values
                    .as_ref()
                    .and_then(|m| m.get(name))
                    .map(|r| r.activity);
                match act {
                    Some(a) if a < rhs => -step,
                    _ => step,
                }
            }
        });
    }
    let (_, side) = parse_bound_name(name)?;
    Some(match side {
        BoundSide::Lower => -step,
        BoundSide::Upper => step,
    })
}

impl Agent for GreedyAgent {
    fn begin(&mut self, _inst: &BenchmarkInstance, _attempt: u32) -> Result<(), AgentError> {
        self.cursor = 0;
        Ok(())
    }

    fn act(&mut self, s: &EpisodeState) -> Result<Action, AgentError> {
        match s.status {
            SolveStatus::Infeasible => {}
            _ => return Ok(Action::new(ActionKind::Submit)),
        }
        if s.iis_log.is_empty() {
            return Ok(Action::new(ActionKind::GetIis));
        }
        let Some(slacks) = &s.slack_values else {
            return Ok(Action::new(ActionKind::CheckSlack));
        };
        let violation = |name: &String| -> f64 {
            slacks
                .get(name)
                .filter(|r| r.violated)
                .map_or(0.0, |r| r.slack.abs())
        };
        let worst = s
            .iis_log
            .iter()
            .filter(|m| violation(m) > 0.0)
            .max_by(|a, b| violation(a).total_cmp(&violation(b)));
        let target = match worst {
            Some(t) => t.clone(),
            None => {
                let t = s.iis_log[self.cursor % s.iis_log.len()].clone();
                self.cursor += 1;
                t
            }
        };
        let delta = loosening_delta(s, &target).unwrap_or(1.0);
        Ok(Action::new(ActionKind::Relax {
            target: target.clone(),
            delta,
        })
        .with_diagnosis([target]))
    }
}

/// Uniformly random baseline with occasional SUBMIT and RESTART.
#[derive(Debug)]
pub struct RandomAgent {
    seed: u64,
    rng: StreamRng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent {
            seed,
            rng: stream(seed, "agent-random", 0),
        }
    }
}

fn repair_targets(code: &LpModel) -> Vec<String> {
    let mut names: Vec<String> = code.constraints.iter().map(|c| c.name.clone()).collect();
    for v in &code.variables {
        for side in [BoundSide::Lower, BoundSide::Upper] {
            if v.bound(side).is_finite() {
                names.push(bound_name(&v.name, side));
            }
        }
    }
    names
}

impl Agent for RandomAgent {
    fn begin(&mut self, inst: &BenchmarkInstance, attempt: u32) -> Result<(), AgentError> {
        self.rng = stream(
            self.seed,
            &format!("agent-random/{}", inst.id),
            u64::from(attempt),
        );
        Ok(())
    }

    fn act(&mut self, s: &EpisodeState) -> Result<Action, AgentError> {
        let rng = &mut self.rng;
        let u: f64 = rng.random();
        let kind = if u < 0.05 {
            ActionKind::Submit
        } else if u < 0.07 {
            ActionKind::Restart
        } else {
            let targets = repair_targets(&s.code);
            let pick = rng.random_range(0..10);
            match (pick, targets.choose(rng)) {
                (0, _) | (_, None) => ActionKind::GetIis,
                (1, _) => ActionKind::CheckSlack,
                (2, _) => ActionKind::CheckBound,
                (3..=7, Some(t)) => ActionKind::Relax {
                    target: t.clone(),
                    delta: f64::from(rng.random_range(-20..=20)),
                },
                (_, Some(t)) => ActionKind::Drop { target: t.clone() },
            }
        };
        let mut action = Action::new(kind);
        if !s.iis_log.is_empty() && rng.random_bool(0.3) {
            let n = rng.random_range(1..=s.iis_log.len());
            action = action.with_diagnosis(s.iis_log.choose_multiple(rng, n).cloned());
        }
        Ok(action)
    }
}
