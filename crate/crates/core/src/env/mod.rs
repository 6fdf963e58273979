//! The debugging environment: episode state, action execution against the
//! solver, composite reward, outcome classification and the offline tool
//! result simulator.

mod reward;
mod simulator;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lp::{apply_edit, extended_real, LpModel, ModelEdit, Sense};
use crate::saboteur::{BenchmarkInstance, GroundTruth};
use crate::solver::{compute_iis_with, constraint_slacks, solve_with, SolveStatus, SolverConfig};

pub use reward::{
    classify_outcome, compute_reward, diagnostic_accuracy, optimality_preservation, Outcome,
    RewardBreakdown, RewardRaw, FAITHFULNESS_PENALTY,
};
pub use simulator::{simulate_step, SIM_DROP_P, SIM_RELAX_P, SIM_SHRINK_P};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub max_steps: u32,
    /// Seconds allowed per solver call.
    pub per_solve_timeout: f64,
    pub diagnostic_actions_free: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            max_steps: 50,
            per_solve_timeout: 10.0,
            diagnostic_actions_free: true,
        }
    }
}

impl EnvConfig {
    /// Hard cap on total actions, diagnostics included.
    pub fn action_cap(&self) -> u32 {
        self.max_steps.saturating_mul(4)
    }

    pub fn check(&self) -> Result<(), EnvError> {
        if self.max_steps == 0 {
            return Err(EnvError::Config("max_steps must be at least 1".into()));
        }
        if self.per_solve_timeout.is_nan() || self.per_solve_timeout <= 0.0 {
            return Err(EnvError::Config(
                "per_solve_timeout must be positive".into(),
            ));
        }
        Ok(())
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            timeout: std::time::Duration::from_secs_f64(self.per_solve_timeout),
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    GetIis,
    CheckSlack,
    CheckBound,
    Relax {
        target: String,
        delta: f64,
    },
    Drop {
        target: String,
    },
    Rewrite {
        target: String,
        terms: IndexMap<String, f64>,
        sense: Sense,
        rhs: f64,
    },
    Submit,
    Restart,
}

impl ActionKind {
    pub fn is_diagnostic(&self) -> bool {
        matches!(
            self,
            ActionKind::GetIis | ActionKind::CheckSlack | ActionKind::CheckBound
        )
    }

    pub fn is_repair(&self) -> bool {
        matches!(
            self,
            ActionKind::Relax { .. } | ActionKind::Drop { .. } | ActionKind::Rewrite { .. }
        )
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            ActionKind::Relax { target, .. }
            | ActionKind::Drop { target }
            | ActionKind::Rewrite { target, .. } => Some(target),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActionKind::GetIis => "GET_IIS",
            ActionKind::CheckSlack => "CHECK_SLACK",
            ActionKind::CheckBound => "CHECK_BOUND",
            ActionKind::Relax { .. } => "RELAX",
            ActionKind::Drop { .. } => "DROP",
            ActionKind::Rewrite { .. } => "REWRITE",
            ActionKind::Submit => "SUBMIT",
            ActionKind::Restart => "RESTART",
        }
    }

    pub fn to_edit(&self) -> Option<ModelEdit> {
        Some(match self.clone() {
            ActionKind::Relax { target, delta } => ModelEdit::Relax { target, delta },
            ActionKind::Drop { target } => ModelEdit::Drop { target },
            ActionKind::Rewrite {
                target,
                terms,
                sense,
                rhs,
            } => ModelEdit::Rewrite {
                target,
                terms,
                sense,
                rhs,
            },
            _ => return None,
        })
    }

    /// The repair action performing `edit`, if it is one an agent may issue.
    pub fn from_edit(edit: &ModelEdit) -> Option<ActionKind> {
        Some(match edit.clone() {
            ModelEdit::Relax { target, delta } => ActionKind::Relax { target, delta },
            ModelEdit::Drop { target } => ActionKind::Drop { target },
            ModelEdit::Rewrite {
                target,
                terms,
                sense,
                rhs,
            } => ActionKind::Rewrite {
                target,
                terms,
                sense,
                rhs,
            },
            _ => return None,
        })
    }
}

/// An action plus an optional diagnosis naming the constraints the agent
/// believes are responsible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    #[serde(flatten)]
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<Vec<String>>,
}

impl Action {
    pub fn new(kind: ActionKind) -> Self {
        Action {
            kind,
            diagnosis: None,
        }
    }

    pub fn with_diagnosis<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.diagnosis = Some(names.into_iter().map(Into::into).collect());
        self
    }
}

impl From<ActionKind> for Action {
    fn from(kind: ActionKind) -> Self {
        Action::new(kind)
    }
}

/// Row slack at the solver's point; for an infeasible model this is the
/// phase-1 point of least infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowSlack {
    pub activity: f64,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundPosition {
    AtLower,
    AtUpper,
    Between,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub value: f64,
    #[serde(with = "extended_real")]
    pub lower: f64,
    #[serde(with = "extended_real")]
    pub upper: f64,
    pub position: BoundPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub problem_nl: String,
    pub code: LpModel,
    pub status: SolveStatus,
    /// Members of the last computed IIS, rows first then bounds.
    pub iis_log: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack_values: Option<IndexMap<String, RowSlack>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_status: Option<IndexMap<String, BoundState>>,
    pub history: Vec<Action>,
    /// Repair steps taken; diagnostics are free.
    pub step: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    /// Every accepted action, diagnostics included.
    pub actions_taken: u32,
    pub done: bool,
}

impl EpisodeState {
    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn iis_size(&self) -> usize {
        self.iis_log.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("oracle disagreement: sabotaged model is {0}, expected INFEASIBLE")]
    OracleDisagreement(SolveStatus),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("episode already finished")]
    Finished,
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EpisodeState,
    pub reward: RewardBreakdown,
    pub done: bool,
    /// Set when the action was rejected; the state is then unchanged.
    pub invalid: Option<String>,
}

/// One episode's environment: the instance under repair and its limits.
#[derive(Debug, Clone)]
pub struct DebugEnv {
    instance: BenchmarkInstance,
    cfg: EnvConfig,
    solver: SolverConfig,
}

impl DebugEnv {
    pub fn new(instance: BenchmarkInstance, cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.check()?;
        let solver = cfg.solver();
        Ok(DebugEnv {
            instance,
            cfg,
            solver,
        })
    }

    pub fn instance(&self) -> &BenchmarkInstance {
        &self.instance
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        &self.instance.ground_truth
    }

    /// Fresh state on the sabotaged model with its IIS already computed.
    pub fn reset(&self) -> Result<EpisodeState, EnvError> {
        let mut s = EpisodeState {
            problem_nl: self.instance.problem_nl().to_string(),
            code: self.instance.sabotaged.clone(),
            status: SolveStatus::Infeasible,
            iis_log: Vec::new(),
            slack_values: None,
            bound_status: None,
            history: Vec::new(),
            step: 0,
            objective: None,
            actions_taken: 0,
            done: false,
        };
        self.resolve(&mut s);
        if s.status != SolveStatus::Infeasible {
            return Err(EnvError::OracleDisagreement(s.status));
        }
        Ok(s)
    }

    /// Executes `a` in `s`. Invalid actions leave the state untouched and
    /// are charged the faithfulness penalty.
    pub fn step(&self, s: &EpisodeState, a: &Action) -> Result<Transition, EnvError> {
        if s.done {
            return Err(EnvError::Finished);
        }
        let gt = self.ground_truth();
        let next = match self.execute(s, a) {
            Ok(next) => next,
            Err(why) => {
                let mut reward = compute_reward(s, a, s, gt);
                reward.apply_invalid_penalty();
                return Ok(Transition {
                    state: s.clone(),
                    reward,
                    done: false,
                    invalid: Some(why),
                });
            }
        };
        let reward = compute_reward(s, a, &next, gt);
        let done = next.done;
        Ok(Transition {
            state: next,
            reward,
            done,
            invalid: None,
        })
    }

    fn execute(&self, s: &EpisodeState, a: &Action) -> Result<EpisodeState, String> {
        if let Some(d) = &a.diagnosis {
            if d.iter().any(|n| n.is_empty()) {
                return Err("empty name in diagnosis".into());
            }
        }
        let mut n = s.clone();
        match &a.kind {
            ActionKind::GetIis => {
                // the log is refreshed after every change, so this only re-reads it
                self.refresh_iis(&mut n);
            }
            ActionKind::CheckSlack => {
                let r = solve_with(&n.code, &self.solver);
                let slacks = constraint_slacks(&n.code, &r.primal).map_err(|e| e.to_string())?;
                n.slack_values = Some(
                    n.code
                        .constraints
                        .iter()
                        .map(|c| {
                            let act = c.activity(|v| r.primal[v]);
                            let sl = slacks[&c.name];
                            (
                                c.name.clone(),
                                RowSlack {
                                    activity: act,
                                    slack: sl.value,
                                    violated: sl.violated,
                                },
                            )
                        })
                        .collect(),
                );
            }
            ActionKind::CheckBound => {
                let r = solve_with(&n.code, &self.solver);
                if r.primal.is_empty() && !n.code.variables.is_empty() {
                    return Err(format!("no point available (status {})", r.status));
                }
                let tol = self.solver.feasibility_tol;
                n.bound_status = Some(
                    n.code
                        .variables
                        .iter()
                        .map(|v| {
                            let x = r.primal[&v.name];
                            let at_lo = (x - v.lower).abs() <= tol * (1.0 + v.lower.abs());
                            let at_hi = (x - v.upper).abs() <= tol * (1.0 + v.upper.abs());
                            let position = match (at_lo, at_hi) {
                                (true, true) => BoundPosition::Fixed,
                                (true, false) => BoundPosition::AtLower,
                                (false, true) => BoundPosition::AtUpper,
                                (false, false) => BoundPosition::Between,
                            };
                            (
                                v.name.clone(),
                                BoundState {
                                    value: x,
                                    lower: v.lower,
                                    upper: v.upper,
                                    position,
                                },
                            )
                        })
                        .collect(),
                );
            }
            kind @ (ActionKind::Relax { .. }
            | ActionKind::Drop { .. }
            | ActionKind::Rewrite { .. }) => {
                if let ActionKind::Relax { delta, .. } = kind {
                    if !delta.is_finite() {
                        return Err("RELAX delta must be finite".into());
                    }
                }
                let edit = kind.to_edit().expect("repair kinds map to edits");
                n.code = apply_edit(&n.code, &edit).map_err(|e| e.to_string())?;
                n.step += 1;
                self.resolve(&mut n);
            }
            ActionKind::Submit => {
                self.resolve(&mut n);
                n.done = true;
            }
            ActionKind::Restart => {
                n.code = self.instance.sabotaged.clone();
                n.step += 1;
                self.resolve(&mut n);
            }
        }
        if a.kind.is_diagnostic() && !self.cfg.diagnostic_actions_free {
            n.step += 1;
        }
        n.history.push(a.clone());
        n.actions_taken += 1;
        if n.step >= self.cfg.max_steps || n.actions_taken >= self.cfg.action_cap() {
            n.done = true;
        }
        Ok(n)
    }

    /// Re-solves the current code, clearing stale diagnostics.
    fn resolve(&self, s: &mut EpisodeState) {
        let r = solve_with(&s.code, &self.solver);
        s.status = r.status;
        s.objective = r.objective;
        s.slack_values = None;
        s.bound_status = None;
        self.refresh_iis(s);
    }

    fn refresh_iis(&self, s: &mut EpisodeState) {
        s.iis_log = if s.status == SolveStatus::Infeasible {
            compute_iis_with(&s.code, &self.solver)
                .map(|r| r.members())
                .unwrap_or_default()
        } else {
            Vec::new()
        };
    }
}
