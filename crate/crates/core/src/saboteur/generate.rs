//! Benchmark generation over a seed pool, with regeneration on validation
//! failure and JSONL persistence.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{apply_edits, LpModel, ModelEdit, Sense};
use crate::rng::{stream, Rng as StreamRng};
use crate::solver::compute_iis;

use super::inject::{inject, Injection};
use super::validate::validate;
use super::{
    BenchmarkInstance, ConfigError, ErrorType, GroundTruth, SabotageConfig, Tier, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub error_type: ErrorType,
    pub requested: usize,
    pub produced: usize,
    pub inject_failures: usize,
    pub validation_failures: usize,
}

impl fmt::Display for Shortfall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Type {}: {}/{} produced ({} models rejected by the injector, {} failed validation)",
            self.error_type,
            self.produced,
            self.requested,
            self.inject_failures,
            self.validation_failures
        )
    }
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("seed pool exhausted:\n{}", fmt_shortfalls(.0))]
    PoolExhausted(Vec<Shortfall>),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_shortfalls(s: &[Shortfall]) -> String {
    s.iter()
        .map(|x| format!("  {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Tier from realised IIS size. Sizes 8 to 10 count as Expert only for the
/// multi-constraint and composite types.
pub fn assign_difficulty(t: ErrorType, iis_size: usize) -> Tier {
    match iis_size {
        0..=4 => Tier::Easy,
        5..=7 => Tier::Hard,
        8..=10 if matches!(t, ErrorType::H | ErrorType::I) => Tier::Expert,
        8..=10 => Tier::Hard,
        _ => Tier::Expert,
    }
}

/// Tier of an emitted instance, from its reference IIS.
pub fn instance_difficulty(inst: &BenchmarkInstance) -> Tier {
    assign_difficulty(inst.error_type, inst.ground_truth.iis_gt.size())
}

/// Generates `count` instances for every requested type. Each type walks its
/// own seeded permutation of `pool`; models the injector cannot use are
/// skipped for free, while each validation failure spends one unit of a
/// per-type budget of `max_regenerations * count`.
pub fn generate_benchmark(
    pool: &[LpModel],
    counts: &[(ErrorType, usize)],
    cfg: &SabotageConfig,
) -> Result<Vec<BenchmarkInstance>, GenerationError> {
    cfg.check()?;
    let results: Vec<(Vec<BenchmarkInstance>, Shortfall)> = counts
        .par_iter()
        .map(|&(t, n)| generate_type(pool, t, n, cfg))
        .collect();
    let short: Vec<Shortfall> = results
        .iter()
        .filter(|(_, s)| s.produced < s.requested)
        .map(|(_, s)| s.clone())
        .collect();
    if !short.is_empty() {
        return Err(GenerationError::PoolExhausted(short));
    }
    Ok(results.into_iter().flat_map(|(v, _)| v).collect())
}

fn generate_type(
    pool: &[LpModel],
    t: ErrorType,
    count: usize,
    cfg: &SabotageConfig,
) -> (Vec<BenchmarkInstance>, Shortfall) {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut stream(cfg.rng_seed, &format!("order-{t}"), 0));
    let budget = cfg.max_regenerations * count;
    let mut report = Shortfall {
        error_type: t,
        requested: count,
        produced: 0,
        inject_failures: 0,
        validation_failures: 0,
    };
    let mut out = Vec::with_capacity(count);
    for idx in order {
        if out.len() == count || report.validation_failures > budget {
            break;
        }
        let mut rng = stream(cfg.rng_seed, &format!("sabotage-{t}"), idx as u64);
        let Ok(inj) = inject(&pool[idx], t, cfg, &mut rng) else {
            report.inject_failures += 1;
            continue;
        };
        let id = format!("lp_type{t}_{:03}", out.len());
        match finalize(id, t, &pool[idx], inj, &mut rng) {
            Some(inst) if validate(&inst).pass => out.push(inst),
            _ => report.validation_failures += 1,
        }
    }
    report.produced = out.len();
    (out, report)
}

/// Renames rows where the type asks for it, recomputes the reference IIS on
/// the final model and assigns a tier.
fn finalize(
    id: String,
    t: ErrorType,
    original: &LpModel,
    inj: Injection,
    rng: &mut StreamRng,
) -> Option<BenchmarkInstance> {
    let mut inst = BenchmarkInstance {
        schema_version: SCHEMA_VERSION,
        id,
        error_type: t,
        original: original.clone(),
        sabotaged: inj.sabotaged,
        ground_truth: inj.ground_truth,
        root_cause: inj.root_cause,
        cascade: inj.cascade,
        difficulty: Tier::Easy,
    };
    if t.uses_random_names() {
        let map = random_names(&inst.sabotaged, rng);
        rename_model(&mut inst.original, &map);
        rename_model(&mut inst.sabotaged, &map);
        rename_truth(&mut inst.ground_truth, &map);
        if let Some(c) = inst.cascade.as_mut() {
            rename_truth(c, &map);
        }
        if let Some(r) = inst.root_cause.as_mut() {
            rename(r, &map);
        }
    }
    inst.ground_truth.iis_gt = compute_iis(&inst.sabotaged).ok()?;
    if let Some(c) = inst.cascade.as_mut() {
        let after = apply_edits(&inst.sabotaged, &inst.ground_truth.fix).ok()?;
        c.iis_gt = compute_iis(&after).ok()?;
    }
    inst.difficulty = instance_difficulty(&inst);
    Some(inst)
}

/// `c_<6 hex>_<ub|lb|eq>`, the suffix following the row's sense as the agent
/// sees it.
fn random_names(model: &LpModel, rng: &mut StreamRng) -> HashMap<String, String> {
    let mut used = HashSet::new();
    let mut map = HashMap::new();
    for c in &model.constraints {
        let suffix = match c.sense {
            Sense::Le => "ub",
            Sense::Ge => "lb",
            Sense::Eq => "eq",
        };
        let name = loop {
            let candidate = format!("c_{:06x}_{suffix}", rng.random_range(0..0x0100_0000u32));
            if used.insert(candidate.clone()) {
                break candidate;
            }
        };
        map.insert(c.name.clone(), name);
    }
    map
}

fn rename(name: &mut String, map: &HashMap<String, String>) {
    if let Some(n) = map.get(name) {
        *name = n.clone();
    }
}

fn rename_model(model: &mut LpModel, map: &HashMap<String, String>) {
    for c in &mut model.constraints {
        rename(&mut c.name, map);
    }
}

fn rename_truth(gt: &mut GroundTruth, map: &HashMap<String, String>) {
    gt.key_constraints.iter_mut().for_each(|k| rename(k, map));
    gt.iis_gt
        .constraints
        .iter_mut()
        .for_each(|k| rename(k, map));
    for edit in &mut gt.fix {
        match edit {
            ModelEdit::Relax { target, .. }
            | ModelEdit::Drop { target }
            | ModelEdit::Rewrite { target, .. }
            | ModelEdit::Flip { target }
            | ModelEdit::SetRhs { target, .. } => rename(target, map),
            ModelEdit::SetBound { .. } => {}
        }
    }
}

/// One JSON object per line.
pub fn write_benchmark<W: Write>(mut w: W, instances: &[BenchmarkInstance]) -> std::io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_benchmark<R: BufRead>(r: R) -> Result<Vec<BenchmarkInstance>, GenerationError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst = serde_json::from_str(&line).map_err(|source| GenerationError::Parse {
            line: i + 1,
            source,
        })?;
        out.push(inst);
    }
    Ok(out)
}
