//! Per-type sabotage of a feasible model.
//!
//! Every injector walks a candidate list, applies the corruption, and keeps
//! the candidate only if the result is infeasible with the sabotaged element
//! inside the IIS. Among valid candidates the first whose IIS size falls in
//! the type's target range wins; failing that, the first valid one.
//! Ground-truth fixes are exact inverses of the sabotage, expressed only with
//! RELAX, DROP and REWRITE so that an agent can replay them.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::lp::{
    apply_edit, bound_name, BoundSide, Constraint, LpModel, ModelEdit, ObjectiveSense, Sense,
};
use crate::rng::Rng as StreamRng;
use crate::solver::{IisReport, SolveResult};

use super::queries::{beyond, extreme, infeasible_with, optimal, single_term, without_row};
use super::{ErrorType, GroundTruth, SabotageConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub sabotaged: LpModel,
    pub ground_truth: GroundTruth,
    pub root_cause: Option<String>,
    pub cascade: Option<GroundTruth>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InjectFailure {
    #[error("seed model is not feasible")]
    SeedNotOptimal,
    #[error("no candidate produced a valid Type {0} sabotage")]
    NoCandidate(ErrorType),
}

/// Corrupts `model` with an error of type `t`.
pub fn inject(
    model: &LpModel,
    t: ErrorType,
    cfg: &SabotageConfig,
    rng: &mut StreamRng,
) -> Result<Injection, InjectFailure> {
    let sol = optimal(model).ok_or(InjectFailure::SeedNotOptimal)?;
    let ctx = Ctx {
        model,
        sol: &sol,
        cfg,
        objective: sol.objective.unwrap_or(0.0),
    };
    let found = match t {
        ErrorType::A => type_a(&ctx),
        ErrorType::B => type_b(&ctx, rng),
        ErrorType::C => type_c(&ctx),
        ErrorType::D => type_d(&ctx, rng),
        ErrorType::E => type_e(&ctx, rng),
        ErrorType::F => type_f(&ctx, rng),
        ErrorType::G => type_g(&ctx, rng),
        ErrorType::H => type_h(&ctx, rng),
        ErrorType::I => type_i(&ctx, rng),
    };
    found.ok_or(InjectFailure::NoCandidate(t))
}

struct Ctx<'a> {
    model: &'a LpModel,
    sol: &'a SolveResult,
    cfg: &'a SabotageConfig,
    objective: f64,
}

impl Ctx<'_> {
    fn truth(&self, key: Vec<String>, fix: Vec<ModelEdit>, iis: IisReport) -> GroundTruth {
        GroundTruth {
            key_constraints: key,
            fix,
            iis_gt: iis,
            original_objective: self.objective,
        }
    }
}

/// Keeps the first valid candidate, or the first in range once one shows up.
struct Chooser {
    range: (usize, usize),
    first: Option<Injection>,
}

impl Chooser {
    fn new(t: ErrorType) -> Self {
        Chooser {
            range: t.target_iis_range(),
            first: None,
        }
    }

    /// Returns the winner as soon as an in-range candidate is offered.
    fn offer(&mut self, inj: Injection) -> Option<Injection> {
        let size = inj.ground_truth.iis_gt.size();
        if size >= self.range.0 && size <= self.range.1 {
            return Some(inj);
        }
        if self.first.is_none() {
            self.first = Some(inj);
        }
        None
    }

    fn finish(self) -> Option<Injection> {
        self.first
    }
}

fn simple(sabotaged: LpModel, gt: GroundTruth) -> Injection {
    Injection {
        sabotaged,
        ground_truth: gt,
        root_cause: None,
        cascade: None,
    }
}

fn rewrite_back(c: &Constraint) -> ModelEdit {
    ModelEdit::Rewrite {
        target: c.name.clone(),
        terms: c.terms.clone(),
        sense: c.sense,
        rhs: c.rhs,
    }
}

fn set_rhs(model: &LpModel, name: &str, value: f64) -> LpModel {
    apply_edit(
        model,
        &ModelEdit::SetRhs {
            target: name.to_string(),
            value,
        },
    )
    .expect("row exists and rhs is finite")
}

/// Edit that restores a bound changed from `old` to `new`.
fn restore_bound(var: &str, side: BoundSide, old: f64, new: f64) -> ModelEdit {
    let target = bound_name(var, side);
    if old.is_finite() {
        ModelEdit::Relax {
            target,
            delta: old - new,
        }
    } else {
        ModelEdit::Drop { target }
    }
}

fn set_bound(model: &LpModel, var: &str, side: BoundSide, value: f64) -> Option<LpModel> {
    apply_edit(
        model,
        &ModelEdit::SetBound {
            variable: var.to_string(),
            side,
            value,
        },
    )
    .ok()
}

fn gap(rng: &mut StreamRng, scale: f64) -> f64 {
    (rng.random_range(0.1..0.3) * scale.abs()).max(1.0)
}

/// Flip the inequality with the least slack that turns the model infeasible.
fn type_a(ctx: &Ctx) -> Option<Injection> {
    let mut rows: Vec<&Constraint> = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense != Sense::Eq)
        .collect();
    rows.sort_by(|a, b| {
        let sa = ctx.sol.slacks[&a.name].abs();
        let sb = ctx.sol.slacks[&b.name].abs();
        sa.total_cmp(&sb)
    });
    let mut chooser = Chooser::new(ErrorType::A);
    for c in rows.into_iter().take(ctx.cfg.num_candidates) {
        let flipped = apply_edit(
            ctx.model,
            &ModelEdit::Flip {
                target: c.name.clone(),
            },
        )
        .ok()?;
        if let Some(iis) = infeasible_with(&flipped, &[&c.name]) {
            let gt = ctx.truth(vec![c.name.clone()], vec![rewrite_back(c)], iis);
            if let Some(win) = chooser.offer(simple(flipped, gt)) {
                return Some(win);
            }
        }
    }
    chooser.finish()
}

/// Push one right-hand side past what the rest of the model can reach:
/// shrink a LE row below its minimum activity or inflate a GE row above its
/// maximum.
fn type_b(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let mut le: Vec<&Constraint> = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Le)
        .collect();
    let mut ge: Vec<&Constraint> = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Ge)
        .collect();
    le.shuffle(rng);
    ge.shuffle(rng);
    let mut chooser = Chooser::new(ErrorType::B);
    for c in le.into_iter().chain(ge) {
        let rest = without_row(ctx.model, &c.name);
        let new_rhs = match c.sense {
            Sense::Le => {
                let Some(lo) = extreme(&rest, &c.terms, ObjectiveSense::Minimize) else {
                    continue;
                };
                beyond(lo, gap(rng, lo), false)
            }
            _ => {
                let Some(hi) = extreme(&rest, &c.terms, ObjectiveSense::Maximize) else {
                    continue;
                };
                beyond(hi, gap(rng, hi), true)
            }
        };
        let sab = set_rhs(ctx.model, &c.name, new_rhs);
        if let Some(iis) = infeasible_with(&sab, &[&c.name]) {
            let fix = ModelEdit::Relax {
                target: c.name.clone(),
                delta: c.rhs - new_rhs,
            };
            let gt = ctx.truth(vec![c.name.clone()], vec![fix], iis);
            if let Some(win) = chooser.offer(simple(sab, gt)) {
                return Some(win);
            }
        }
    }
    chooser.finish()
}

/// Four-tier fallback. Tiers 1 to 3 rewrite one row (drop its positive
/// terms, negate them, scale by 10); tier 4 pins a variable between two new
/// rows one unit apart.
fn type_c(ctx: &Ctx) -> Option<Injection> {
    let mut ge: Vec<&Constraint> = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Ge)
        .collect();
    ge.sort_by(|a, b| {
        ctx.sol.duals[&b.name]
            .abs()
            .total_cmp(&ctx.sol.duals[&a.name].abs())
    });
    let tier1 = ge.into_iter().filter_map(|c| {
        let terms: IndexMap<String, f64> = c
            .terms
            .iter()
            .filter(|(_, a)| **a <= 0.0)
            .map(|(v, a)| (v.clone(), *a))
            .collect();
        (!terms.is_empty() && terms.len() < c.terms.len()).then_some((c, terms))
    });
    let tier2 = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Le)
        .filter(|c| c.terms.values().any(|a| *a > 0.0))
        .map(|c| {
            (
                c,
                c.terms
                    .iter()
                    .map(|(v, a)| (v.clone(), if *a > 0.0 { -a } else { *a }))
                    .collect(),
            )
        });
    let tier3 = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense != Sense::Eq)
        .map(|c| {
            (
                c,
                c.terms.iter().map(|(v, a)| (v.clone(), a * 10.0)).collect(),
            )
        });

    type Candidates<'m> = Box<dyn Iterator<Item = (&'m Constraint, IndexMap<String, f64>)> + 'm>;
    let tiers: [Candidates; 3] = [Box::new(tier1), Box::new(tier2), Box::new(tier3)];
    for tier in tiers {
        let mut chooser = Chooser::new(ErrorType::C);
        for (c, terms) in tier {
            let edit = ModelEdit::Rewrite {
                target: c.name.clone(),
                terms,
                sense: c.sense,
                rhs: c.rhs,
            };
            let Ok(sab) = apply_edit(ctx.model, &edit) else {
                continue;
            };
            if let Some(iis) = infeasible_with(&sab, &[&c.name]) {
                let gt = ctx.truth(vec![c.name.clone()], vec![rewrite_back(c)], iis);
                if let Some(win) = chooser.offer(simple(sab, gt)) {
                    return Some(win);
                }
            }
        }
        if let Some(found) = chooser.finish() {
            return Some(found);
        }
    }
    tier4(ctx)
}

fn fresh_name(model: &LpModel, base: String) -> String {
    let mut name = base.clone();
    let mut k = 1;
    while model.constraint(&name).is_some() {
        name = format!("{base}{k}");
        k += 1;
    }
    name
}

fn tier4(ctx: &Ctx) -> Option<Injection> {
    // widest bound range; infinite ranges win, ties go to the first variable
    let v =
        ctx.model
            .variables
            .iter()
            .fold(None::<&crate::lp::Variable>, |best, v| match best {
                Some(b) if b.upper - b.lower >= v.upper - v.lower => Some(b),
                _ => Some(v),
            })?;
    let x_star = ctx.sol.primal[&v.name];
    let mut sab = ctx.model.clone();
    let cap = fresh_name(&sab, format!("{}_cap", v.name));
    sab.constraints.push(Constraint::new(
        cap.clone(),
        [(v.name.clone(), 1.0)],
        Sense::Le,
        x_star,
    ));
    let floor = fresh_name(&sab, format!("{}_floor", v.name));
    sab.constraints.push(Constraint::new(
        floor.clone(),
        [(v.name.clone(), 1.0)],
        Sense::Ge,
        x_star + 1.0,
    ));
    let iis = infeasible_with(&sab, &[&floor])?;
    let gt = ctx.truth(
        vec![floor.clone()],
        vec![ModelEdit::Drop { target: floor }],
        iis,
    );
    Some(simple(sab, gt))
}

/// Raise a lower bound above the largest value the rest of the model allows
/// for that variable. Falls back to single-variable GE rows.
fn type_d(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let mut order: Vec<usize> = (0..ctx.model.variables.len()).collect();
    order.shuffle(rng);
    let mut chooser = Chooser::new(ErrorType::D);
    for j in order {
        let v = &ctx.model.variables[j];
        let Some(open) = set_bound(ctx.model, &v.name, BoundSide::Upper, f64::INFINITY) else {
            continue;
        };
        let Some(hi) = extreme(&open, &single_term(&v.name), ObjectiveSense::Maximize) else {
            continue;
        };
        if hi > v.upper - 2.0 {
            continue; // its own upper bound is what binds
        }
        let new_lb = beyond(hi, gap(rng, hi - v.lower.max(0.0)), true)
            .min((hi + v.upper) / 2.0)
            .floor();
        if new_lb <= hi + 0.5 {
            continue;
        }
        let Some(sab) = set_bound(ctx.model, &v.name, BoundSide::Lower, new_lb) else {
            continue;
        };
        let key = bound_name(&v.name, BoundSide::Lower);
        if let Some(iis) = infeasible_with(&sab, &[&key]) {
            let fix = restore_bound(&v.name, BoundSide::Lower, v.lower, new_lb);
            let gt = ctx.truth(vec![key], vec![fix], iis);
            if let Some(win) = chooser.offer(simple(sab, gt)) {
                return Some(win);
            }
        }
    }
    if let Some(found) = chooser.finish() {
        return Some(found);
    }
    let mut chooser = Chooser::new(ErrorType::D);
    for c in ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Ge && c.terms.len() == 1)
    {
        let rest = without_row(ctx.model, &c.name);
        let Some(hi) = extreme(&rest, &c.terms, ObjectiveSense::Maximize) else {
            continue;
        };
        let new_rhs = beyond(hi, gap(rng, hi), true);
        let sab = set_rhs(ctx.model, &c.name, new_rhs);
        if let Some(iis) = infeasible_with(&sab, &[&c.name]) {
            let fix = ModelEdit::Relax {
                target: c.name.clone(),
                delta: c.rhs - new_rhs,
            };
            let gt = ctx.truth(vec![c.name.clone()], vec![fix], iis);
            if let Some(win) = chooser.offer(simple(sab, gt)) {
                return Some(win);
            }
        }
    }
    chooser.finish()
}

/// Scale the largest demand-like row (GE, all coefficients positive) by a
/// factor drawn from the configured alpha range.
fn type_e(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let alpha = rng.random_range(ctx.cfg.alpha_min..=ctx.cfg.alpha_max);
    let mut rows: Vec<&Constraint> = ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Ge && c.rhs > 0.0 && c.terms.values().all(|a| *a > 0.0))
        .collect();
    rows.sort_by(|a, b| b.rhs.total_cmp(&a.rhs));
    let mut chooser = Chooser::new(ErrorType::E);
    for c in rows.into_iter().take(ctx.cfg.num_candidates) {
        let new_rhs = (c.rhs * alpha).round();
        if new_rhs <= c.rhs {
            continue;
        }
        let sab = set_rhs(ctx.model, &c.name, new_rhs);
        if let Some(iis) = infeasible_with(&sab, &[&c.name]) {
            let fix = ModelEdit::Relax {
                target: c.name.clone(),
                delta: c.rhs - new_rhs,
            };
            let gt = ctx.truth(vec![c.name.clone()], vec![fix], iis);
            if let Some(win) = chooser.offer(simple(sab, gt)) {
                return Some(win);
            }
        }
    }
    chooser.finish()
}

/// Tighten a variable's upper bound below the least value a multi-variable
/// GE row forces on it. The row shows up in the IIS as the symptom; the bound
/// is the root cause and the fix restores it.
fn type_f(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let mut chooser = Chooser::new(ErrorType::F);
    for c in ctx
        .model
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Ge && c.terms.values().filter(|a| **a > 0.0).count() >= 2)
    {
        let mut vars: Vec<&crate::lp::Variable> = c
            .terms
            .iter()
            .filter(|(_, a)| **a > 0.0)
            .filter_map(|(v, _)| ctx.model.variable(v))
            .filter(|v| v.upper.is_finite())
            .collect();
        vars.sort_by(|a, b| b.upper.total_cmp(&a.upper));
        for v in vars {
            let Some(lo) = extreme(ctx.model, &single_term(&v.name), ObjectiveSense::Minimize)
            else {
                continue;
            };
            let floor = v.lower.max(f64::NEG_INFINITY);
            if lo < floor + 2.0 {
                continue;
            }
            let new_ub = beyond(lo, gap(rng, lo), false).max(floor);
            if new_ub >= lo - 0.5 {
                continue;
            }
            let Some(sab) = set_bound(ctx.model, &v.name, BoundSide::Upper, new_ub) else {
                continue;
            };
            let root = bound_name(&v.name, BoundSide::Upper);
            if let Some(iis) = infeasible_with(&sab, &[&c.name, &root]) {
                let fix = restore_bound(&v.name, BoundSide::Upper, v.upper, new_ub);
                let gt = ctx.truth(vec![c.name.clone()], vec![fix], iis);
                let inj = Injection {
                    sabotaged: sab,
                    ground_truth: gt,
                    root_cause: Some(root),
                    cascade: None,
                };
                if let Some(win) = chooser.offer(inj) {
                    return Some(win);
                }
            }
        }
    }
    chooser.finish()
}

/// Corrupt the right-hand side of an equality (a flow balance) so it exceeds
/// what the network can carry, and plant a second, independent demand
/// conflict in rows that come earlier. The deletion filter discards the
/// earlier conflict first, so it only surfaces once the primary is fixed.
fn type_g(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let model = ctx.model;
    let eq_rows: Vec<usize> = (0..model.constraints.len())
        .filter(|&i| model.constraints[i].sense == Sense::Eq)
        .collect();
    for &pi in eq_rows.iter().rev() {
        let p = &model.constraints[pi];
        let rest = without_row(model, &p.name);
        let Some(hi) = extreme(&rest, &p.terms, ObjectiveSense::Maximize) else {
            continue;
        };
        let b = beyond(hi, (rng.random_range(0.2..0.5) * hi.abs()).max(5.0), true);
        let primary = set_rhs(model, &p.name, b);
        let Some(iis1) = infeasible_with(&primary, &[&p.name]) else {
            continue;
        };
        let touched: Vec<&String> = iis1
            .constraints
            .iter()
            .filter_map(|n| model.constraint(n))
            .flat_map(|c| c.terms.keys())
            .collect();
        let primary_fix = ModelEdit::Relax {
            target: p.name.clone(),
            delta: p.rhs - b,
        };

        for q in model.constraints[..pi]
            .iter()
            .filter(|q| q.sense == Sense::Ge && q.terms.keys().all(|v| !touched.contains(&v)))
        {
            let Some(qhi) = extreme(
                &without_row(model, &q.name),
                &q.terms,
                ObjectiveSense::Maximize,
            ) else {
                continue;
            };
            let new_q = beyond(qhi, gap(rng, qhi), true);
            let sab = set_rhs(&primary, &q.name, new_q);
            let Some(iis) = infeasible_with(&sab, &[&p.name]) else {
                continue;
            };
            if iis.contains(&q.name) {
                continue;
            }
            let after = apply_edit(&sab, &primary_fix).expect("primary row exists");
            let Some(iis2) = infeasible_with(&after, &[&q.name]) else {
                continue;
            };
            let cascade_fix = ModelEdit::Relax {
                target: q.name.clone(),
                delta: q.rhs - new_q,
            };
            let gt = ctx.truth(vec![p.name.clone()], vec![primary_fix.clone()], iis);
            let cascade = ctx.truth(vec![q.name.clone()], vec![cascade_fix], iis2);
            return Some(Injection {
                sabotaged: sab,
                ground_truth: gt,
                root_cause: None,
                cascade: Some(cascade),
            });
        }
    }
    None
}

/// Add a requirement over a group of variables that exceeds the largest sum
/// the model allows for that group.
fn type_h(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let n = ctx.model.variables.len();
    if n < 2 {
        return None;
    }
    let (lo, hi) = ErrorType::H.target_iis_range();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    if n < hi {
        groups.push((0..n).collect());
    }
    for _ in 0..6 {
        let k = rng.random_range((lo - 1).min(n)..=(hi - 1).min(n)).max(2);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let mut g = idx[..k].to_vec();
        g.sort_unstable();
        groups.push(g);
    }
    let name = fresh_name(ctx.model, "req_group".to_string());
    let mut chooser = Chooser::new(ErrorType::H);
    for g in groups {
        let terms: IndexMap<String, f64> = g
            .iter()
            .map(|&j| (ctx.model.variables[j].name.clone(), 1.0))
            .collect();
        let Some(max) = extreme(ctx.model, &terms, ObjectiveSense::Maximize) else {
            continue;
        };
        let rhs = beyond(max, rng.random_range(0.05..0.15) * max.abs(), true);
        let mut sab = ctx.model.clone();
        sab.constraints.push(Constraint {
            name: name.clone(),
            terms,
            sense: Sense::Ge,
            rhs,
        });
        if let Some(iis) = infeasible_with(&sab, &[&name]) {
            let gt = ctx.truth(
                vec![name.clone()],
                vec![ModelEdit::Drop {
                    target: name.clone(),
                }],
                iis,
            );
            if let Some(win) = chooser.offer(simple(sab, gt)) {
                return Some(win);
            }
        }
    }
    chooser.finish()
}

/// Flip a multi-variable GE row (still feasible on its own), then raise one
/// of its variables' lower bounds past what the flipped row leaves room for.
/// Either edit alone can be undone to regain feasibility, but only undoing
/// both keeps the original optimum.
fn type_i(ctx: &Ctx, rng: &mut StreamRng) -> Option<Injection> {
    let mut rows: Vec<&Constraint> = ctx
        .model
        .constraints
        .iter()
        .filter(|c| {
            c.sense == Sense::Ge && c.terms.len() >= 2 && c.terms.values().all(|a| *a > 0.0)
        })
        .collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.terms.len()));
    let mut chooser = Chooser::new(ErrorType::I);
    for c in rows {
        let flip = ModelEdit::Flip {
            target: c.name.clone(),
        };
        let flipped = apply_edit(ctx.model, &flip).expect("GE rows flip");
        if optimal(&flipped).is_none() {
            continue;
        }
        let mut vars: Vec<&crate::lp::Variable> = c
            .terms
            .keys()
            .filter_map(|v| ctx.model.variable(v))
            .collect();
        vars.sort_by(|a, b| b.upper.total_cmp(&a.upper));
        for v in vars.into_iter().take(3) {
            let Some(hi) = extreme(&flipped, &single_term(&v.name), ObjectiveSense::Maximize)
            else {
                continue;
            };
            if hi > v.upper - 2.0 {
                continue;
            }
            let base = v.lower.max(0.0);
            let new_lb = beyond(hi, gap(rng, hi - base), true).min(((hi + v.upper) / 2.0).floor());
            if new_lb <= hi + 0.5 {
                continue;
            }
            let Some(sab) = set_bound(&flipped, &v.name, BoundSide::Lower, new_lb) else {
                continue;
            };
            let lb_name = bound_name(&v.name, BoundSide::Lower);
            let Some(iis) = infeasible_with(&sab, &[&c.name, &lb_name]) else {
                continue;
            };
            let bound_fix = restore_bound(&v.name, BoundSide::Lower, v.lower, new_lb);
            // the objective-changing alternative must exist
            if apply_edit(&sab, &bound_fix)
                .ok()
                .and_then(|m| optimal(&m))
                .is_none()
            {
                continue;
            }
            let gt = ctx.truth(
                vec![c.name.clone(), lb_name],
                vec![rewrite_back(c), bound_fix],
                iis,
            );
            if let Some(win) = chooser.offer(simple(sab, gt)) {
                return Some(win);
            }
        }
    }
    chooser.finish()
}
