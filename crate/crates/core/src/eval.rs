//! Multi-attempt evaluation, benchmark metrics, stratified sampling, PRM
//! step labels and SFT trajectory filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::Agent;
use crate::env::{
    classify_outcome, diagnostic_accuracy, Action, ActionKind, DebugEnv, EnvConfig, Outcome,
    RewardBreakdown,
};
use crate::rng::stream;
use crate::saboteur::{BenchmarkInstance, ErrorType, GroundTruth, Tier};
use crate::solver::SolveStatus;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("tier {tier}: requested {requested}, only {available} available")]
    InsufficientPool {
        tier: Tier,
        requested: usize,
        available: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Attempts per instance.
    pub attempts: u32,
    pub env: EnvConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            attempts: 5,
            env: EnvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Digest of the state the action was taken in.
    pub state_digest: String,
    pub action: Action,
    pub reward: RewardBreakdown,
    pub status: SolveStatus,
    pub iis_before: usize,
    pub iis_after: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema_version: u32,
    pub instance_id: String,
    pub error_type: ErrorType,
    pub difficulty: Tier,
    pub attempt_index: u32,
    pub success: bool,
    pub outcome: Outcome,
    /// 1-based index of the action after which the model first became
    /// OPTIMAL, counting every action; set only for successful episodes.
    pub first_success_step: Option<u32>,
    pub da: f64,
    pub op: Option<f64>,
    pub repair_steps: u32,
    pub actions: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_error: Option<String>,
    pub trajectory: Vec<TrajectoryStep>,
}

/// Runs one attempt of `agent` on `inst`.
pub fn run_episode(
    agent: &mut dyn Agent,
    inst: &BenchmarkInstance,
    attempt: u32,
    cfg: &EnvConfig,
) -> EpisodeRecord {
    let mut record = EpisodeRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        instance_id: inst.id.clone(),
        error_type: inst.error_type,
        difficulty: inst.difficulty,
        attempt_index: attempt,
        success: false,
        outcome: Outcome::Failure,
        first_success_step: None,
        da: 0.0,
        op: None,
        repair_steps: 0,
        actions: 0,
        protocol_error: None,
        trajectory: Vec::new(),
    };
    let env = match DebugEnv::new(inst.clone(), cfg.clone()) {
        Ok(env) => env,
        Err(e) => {
            record.protocol_error = Some(e.to_string());
            return record;
        }
    };
    let mut state = match env.reset() {
        Ok(s) => s,
        Err(e) => {
            record.protocol_error = Some(e.to_string());
            return record;
        }
    };
    if let Err(e) = agent.begin(inst, attempt) {
        record.protocol_error = Some(e.to_string());
        return record;
    }
    let mut diagnosed: BTreeSet<String> = BTreeSet::new();
    let mut first_optimal = None;
    // rejected actions do not advance the state, so turns are capped here too
    for turn in 1..=cfg.action_cap() {
        if state.done {
            break;
        }
        let action = match agent.act(&state) {
            Ok(a) => a,
            Err(e) => {
                record.protocol_error = Some(e.to_string());
                break;
            }
        };
        if let Some(d) = &action.diagnosis {
            diagnosed.extend(d.iter().cloned());
        }
        let tr = env.step(&state, &action).expect("loop stops at done");
        record.trajectory.push(TrajectoryStep {
            state_digest: state.digest(),
            action,
            reward: tr.reward,
            status: tr.state.status,
            iis_before: state.iis_size(),
            iis_after: tr.state.iis_size(),
            invalid: tr.invalid,
        });
        if first_optimal.is_none() && tr.state.status == SolveStatus::Optimal {
            first_optimal = Some(turn);
        }
        state = tr.state;
    }
    agent.end();

    let gt = &inst.ground_truth;
    let diagnosed: Vec<String> = diagnosed.into_iter().collect();
    record.da = diagnostic_accuracy(&diagnosed, gt);
    record.repair_steps = state.step;
    record.actions = record.trajectory.len() as u32;
    if record.protocol_error.is_none() {
        let (outcome, op) = classify_outcome(&state, gt);
        record.outcome = outcome;
        record.op = op;
        record.success = outcome.is_success();
        record.first_success_step = if record.success { first_optimal } else { None };
    }
    record
}

/// `attempts` episodes per instance, run in parallel. Records come back in
/// instance order, then attempt order.
pub fn run_episodes<F>(
    make_agent: F,
    instances: &[BenchmarkInstance],
    cfg: &EvalConfig,
) -> Vec<EpisodeRecord>
where
    F: Fn() -> Box<dyn Agent> + Sync,
{
    let jobs: Vec<(usize, u32)> = (0..instances.len())
        .flat_map(|i| (0..cfg.attempts).map(move |a| (i, a)))
        .collect();
    jobs.par_iter()
        .map(|&(i, a)| {
            let mut agent = make_agent();
            run_episode(agent.as_mut(), &instances[i], a, &cfg.env)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub instances: usize,
    pub records: usize,
    /// Percent of instances with a full or partial success in any attempt.
    pub rr: f64,
    /// Percent of instances with a full success within `k` actions.
    pub rr_at_k: BTreeMap<u32, f64>,
    pub da_mean: f64,
    /// Mean OP over records that ended OPTIMAL.
    pub op_mean: Option<f64>,
    /// Mean repair steps over successful records.
    pub avg_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub attempts: u32,
    pub overall: MetricsRow,
    pub per_error_type: BTreeMap<ErrorType, MetricsRow>,
    pub per_tier: BTreeMap<Tier, MetricsRow>,
}

impl MetricsTable {
    pub fn rr_at(&self, k: u32) -> f64 {
        self.overall.rr_at_k.get(&k).copied().unwrap_or(0.0)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn metrics_row(records: &[&EpisodeRecord], max_k: u32) -> MetricsRow {
    let mut by_instance: BTreeMap<&str, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        by_instance.entry(&r.instance_id).or_default().push(r);
    }
    let n = by_instance.len();
    let pct = |hits: usize| {
        if n == 0 {
            0.0
        } else {
            100.0 * hits as f64 / n as f64
        }
    };
    let rr = pct(by_instance
        .values()
        .filter(|rs| rs.iter().any(|r| r.success))
        .count());
    let best: Vec<Option<u32>> = by_instance
        .values()
        .map(|rs| {
            rs.iter()
                .filter(|r| r.outcome == Outcome::FullSuccess)
                .filter_map(|r| r.first_success_step)
                .min()
        })
        .collect();
    let rr_at_k = (1..=max_k)
        .map(|k| {
            (
                k,
                pct(best.iter().filter(|b| b.is_some_and(|s| s <= k)).count()),
            )
        })
        .collect();
    MetricsRow {
        instances: n,
        records: records.len(),
        rr,
        rr_at_k,
        da_mean: 100.0 * mean(records.iter().map(|r| r.da)).unwrap_or(0.0),
        op_mean: mean(records.iter().filter_map(|r| r.op)),
        avg_steps: mean(
            records
                .iter()
                .filter(|r| r.success)
                .map(|r| f64::from(r.repair_steps)),
        ),
    }
}

/// Aggregates records. RR@k is reported for k = 1 ..= max(attempts, 10).
pub fn compute_metrics(
    records: &[EpisodeRecord],
    attempts: u32,
) -> Result<MetricsTable, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let max_k = attempts.max(10);
    let all: Vec<&EpisodeRecord> = records.iter().collect();
    let mut per_type: BTreeMap<ErrorType, Vec<&EpisodeRecord>> = BTreeMap::new();
    let mut per_tier: BTreeMap<Tier, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        per_type.entry(r.error_type).or_default().push(r);
        per_tier.entry(r.difficulty).or_default().push(r);
    }
    Ok(MetricsTable {
        attempts,
        overall: metrics_row(&all, max_k),
        per_error_type: per_type
            .into_iter()
            .map(|(t, rs)| (t, metrics_row(&rs, max_k)))
            .collect(),
        per_tier: per_tier
            .into_iter()
            .map(|(t, rs)| (t, metrics_row(&rs, max_k)))
            .collect(),
    })
}

/// Fixed-width text table with RR, RR@5, DA, OP and Steps columns.
pub fn render_table(m: &MetricsTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>5} {:>7} {:>7} {:>7} {:>6} {:>6}",
        "Group", "N", "RR", "RR@5", "DA", "OP", "Steps"
    );
    let row = |out: &mut String, label: &str, r: &MetricsRow| {
        let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        let _ = writeln!(
            out,
            "{:<10} {:>5} {:>6.1}% {:>6.1}% {:>6.1}% {:>6} {:>6}",
            label,
            r.instances,
            r.rr,
            r.rr_at_k.get(&5).copied().unwrap_or(0.0),
            r.da_mean,
            opt(r.op_mean, 3),
            opt(r.avg_steps, 2),
        );
    };
    row(&mut out, "Overall", &m.overall);
    for (t, r) in &m.per_error_type {
        row(&mut out, &format!("Type {t}"), r);
    }
    for (t, r) in &m.per_tier {
        row(&mut out, &t.to_string(), r);
    }
    out
}

/// Tier counts of the 450-instance evaluation subset.
pub const PAPER_TIER_COUNTS: [(Tier, usize); 3] =
    [(Tier::Easy, 180), (Tier::Hard, 158), (Tier::Expert, 112)];
/// Tier counts implied by 50 instances per error type.
pub const PER_TYPE_TIER_COUNTS: [(Tier, usize); 3] =
    [(Tier::Easy, 200), (Tier::Hard, 150), (Tier::Expert, 100)];

/// Exactly `n` instances of each requested tier, chosen with a seeded shuffle
/// and returned in benchmark order.
pub fn stratified_sample(
    bench: &[BenchmarkInstance],
    counts: &[(Tier, usize)],
    seed: u64,
) -> Result<Vec<BenchmarkInstance>, EvalError> {
    let mut chosen = Vec::new();
    for (ti, &(tier, n)) in counts.iter().enumerate() {
        let mut idx: Vec<usize> = (0..bench.len())
            .filter(|&i| bench[i].difficulty == tier)
            .collect();
        if idx.len() < n {
            return Err(EvalError::InsufficientPool {
                tier,
                requested: n,
                available: idx.len(),
            });
        }
        idx.shuffle(&mut stream(seed, "sample", ti as u64));
        chosen.extend_from_slice(&idx[..n]);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| bench[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelBranch {
    Solved,
    IisShrink,
    CorrectDiagnosis,
    InfoGathering,
    NoProgress,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLabel {
    pub value: f64,
    pub branch: LabelBranch,
}

/// Progress label per step, from the first matching rule: solved, IIS
/// shrank (not on the first step), diagnosis hits the reference IIS, GET_IIS
/// or CHECK_SLACK, otherwise none.
pub fn prm_label(trajectory: &[TrajectoryStep], gt: &GroundTruth) -> Vec<StepLabel> {
    trajectory
        .iter()
        .enumerate()
        .map(|(t, st)| {
            let hits_iis = st
                .action
                .diagnosis
                .as_ref()
                .is_some_and(|d| d.iter().any(|n| gt.iis_gt.contains(n)));
            let (value, branch) = if st.status == SolveStatus::Optimal {
                (1.0, LabelBranch::Solved)
            } else if t > 0 && st.iis_after < st.iis_before {
                (1.0, LabelBranch::IisShrink)
            } else if hits_iis {
                (0.5, LabelBranch::CorrectDiagnosis)
            } else if matches!(st.action.kind, ActionKind::GetIis | ActionKind::CheckSlack) {
                (0.2, LabelBranch::InfoGathering)
            } else {
                (0.0, LabelBranch::NoProgress)
            };
            StepLabel { value, branch }
        })
        .collect()
}

/// Records worth keeping as supervised demonstrations: successful, at most
/// five repair steps, DA at least 0.5.
pub fn filter_sft_trajectories(records: &[EpisodeRecord]) -> Vec<EpisodeRecord> {
    records
        .iter()
        .filter(|r| r.success && r.repair_steps <= 5 && r.da >= 0.5)
        .cloned()
        .collect()
}
