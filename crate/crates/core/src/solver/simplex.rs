//! Dense two-phase primal simplex with Bland's rule.
//!
//! Every variable is rewritten over nonnegative columns (shifted by a finite
//! lower bound, mirrored around a finite upper bound, or split when free).
//! Finite upper bounds of shifted variables become explicit rows. Rows are
//! normalised to a nonnegative right-hand side, then slack and artificial
//! columns are added so that the starting basis is the identity.

use std::time::Instant;

use crate::lp::{LpModel, ObjectiveSense, Sense};

use super::SolverConfig;

/// Raw outcome of the simplex run, in the original variable space.
pub(crate) enum SimplexOutcome {
    Optimal {
        x: Vec<f64>,
        row_duals: Vec<f64>,
    },
    /// `x` is the phase-1 end point (least total artificial infeasibility).
    Infeasible {
        x: Vec<f64>,
    },
    Unbounded,
    Error(String),
}

#[derive(Clone, Copy)]
enum ColumnMap {
    /// x = offset + y
    Shift { col: usize, offset: f64 },
    /// x = offset - y
    Mirror { col: usize, offset: f64 },
    /// x = y+ - y-
    Split { pos: usize, neg: usize },
}

#[derive(Clone, Copy, PartialEq)]
enum RowOrigin {
    Model(usize),
    UpperBound,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    origin: Vec<RowOrigin>,
    /// Per row, the column that formed the initial identity basis.
    unit_col: Vec<usize>,
    /// -1 where the row was negated to make its rhs nonnegative.
    row_sign: Vec<f64>,
    n_cols: usize,
    art_start: usize,
}

struct Budget {
    deadline: Instant,
    iterations: usize,
    max_iterations: usize,
}

impl Budget {
    fn tick(&mut self) -> Result<(), String> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(format!("iteration limit {} reached", self.max_iterations));
        }
        if self.iterations.is_multiple_of(64) && Instant::now() > self.deadline {
            return Err("time limit reached".into());
        }
        Ok(())
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

pub(crate) fn run(model: &LpModel, cfg: &SolverConfig) -> SimplexOutcome {
    let start = Instant::now();
    let mut budget = Budget {
        deadline: start + cfg.timeout,
        iterations: 0,
        max_iterations: cfg.max_iterations,
    };

    let (maps, n_struct) = map_columns(model);
    let mut t = build_tableau(model, &maps, n_struct);
    let obj_sign = match model.objective_sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };

    // Phase 1: minimise the sum of artificials.
    let mut phase1_cost = vec![0.0; t.n_cols];
    for c in phase1_cost.iter_mut().skip(t.art_start) {
        *c = 1.0;
    }
    match optimise(&mut t, &phase1_cost, cfg, &mut budget) {
        Ok(Phase::Optimal) => {}
        Ok(Phase::Unbounded) => return SimplexOutcome::Error("phase 1 reported unbounded".into()),
        Err(e) => return SimplexOutcome::Error(e),
    }
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.rhs)
        .filter(|(b, _)| **b >= t.art_start)
        .map(|(_, v)| *v)
        .sum();
    if infeasibility > cfg.feasibility_tol {
        let x = recover_x(&t, &maps, n_struct, model.variables.len());
        return SimplexOutcome::Infeasible { x };
    }

    drive_out_artificials(&mut t, cfg);

    // Phase 2 on the (sign-adjusted) objective.
    let mut cost = vec![0.0; t.n_cols];
    for (j, var) in model.variables.iter().enumerate() {
        let c = obj_sign * var.obj_coeff;
        match maps[j] {
            ColumnMap::Shift { col, .. } => cost[col] += c,
            ColumnMap::Mirror { col, .. } => cost[col] -= c,
            ColumnMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    match optimise(&mut t, &cost, cfg, &mut budget) {
        Ok(Phase::Optimal) => {}
        Ok(Phase::Unbounded) => return SimplexOutcome::Unbounded,
        Err(e) => return SimplexOutcome::Error(e),
    }

    let x = recover_x(&t, &maps, n_struct, model.variables.len());
    let mut row_duals = vec![0.0; model.constraints.len()];
    for (r, origin) in t.origin.iter().enumerate() {
        if let RowOrigin::Model(i) = origin {
            let col = t.unit_col[r];
            let y: f64 = t
                .basis
                .iter()
                .enumerate()
                .map(|(k, &b)| cost[b] * t.rows[k][col])
                .sum();
            row_duals[*i] = clean(obj_sign * t.row_sign[r] * y);
        }
    }
    SimplexOutcome::Optimal { x, row_duals }
}

fn map_columns(model: &LpModel) -> (Vec<ColumnMap>, usize) {
    let mut next = 0;
    let maps = model
        .variables
        .iter()
        .map(|v| {
            let m = if v.lower.is_finite() {
                ColumnMap::Shift {
                    col: next,
                    offset: v.lower,
                }
            } else if v.upper.is_finite() {
                ColumnMap::Mirror {
                    col: next,
                    offset: v.upper,
                }
            } else {
                next += 1;
                ColumnMap::Split {
                    pos: next - 1,
                    neg: next,
                }
            };
            next += 1;
            m
        })
        .collect();
    (maps, next)
}

fn build_tableau(model: &LpModel, maps: &[ColumnMap], n_struct: usize) -> Tableau {
    // (coefficients over structural columns, sense, rhs, origin)
    let mut raw: Vec<(Vec<f64>, Sense, f64, RowOrigin)> = Vec::new();
    for (i, row) in model.constraints.iter().enumerate() {
        let mut coeffs = vec![0.0; n_struct];
        let mut rhs = row.rhs;
        for (name, a) in &row.terms {
            let j = model.variable_index(name).expect("validated model");
            match maps[j] {
                ColumnMap::Shift { col, offset } => {
                    coeffs[col] += a;
                    rhs -= a * offset;
                }
                ColumnMap::Mirror { col, offset } => {
                    coeffs[col] -= a;
                    rhs -= a * offset;
                }
                ColumnMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        raw.push((coeffs, row.sense, rhs, RowOrigin::Model(i)));
    }
    for (j, var) in model.variables.iter().enumerate() {
        if let ColumnMap::Shift { col, offset } = maps[j] {
            if var.upper.is_finite() {
                let mut coeffs = vec![0.0; n_struct];
                coeffs[col] = 1.0;
                raw.push((coeffs, Sense::Le, var.upper - offset, RowOrigin::UpperBound));
            }
        }
    }

    let m = raw.len();
    let mut row_sign = vec![1.0; m];
    for (r, (coeffs, sense, rhs, _)) in raw.iter_mut().enumerate() {
        if *rhs < 0.0 {
            coeffs.iter_mut().for_each(|a| *a = -*a);
            *rhs = -*rhs;
            *sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
            row_sign[r] = -1.0;
        }
    }

    let n_slack = raw.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = raw.iter().filter(|r| r.1 != Sense::Le).count();
    let slack_start = n_struct;
    let art_start = slack_start + n_slack;
    let n_cols = art_start + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut origin = Vec::with_capacity(m);
    let mut unit_col = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (slack_start, art_start);
    for (coeffs, sense, b, o) in raw {
        let mut row = vec![0.0; n_cols];
        row[..n_struct].copy_from_slice(&coeffs);
        let unit = match sense {
            Sense::Le => {
                row[next_slack] = 1.0;
                next_slack += 1;
                next_slack - 1
            }
            Sense::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                next_art += 1;
                next_art - 1
            }
            Sense::Eq => {
                row[next_art] = 1.0;
                next_art += 1;
                next_art - 1
            }
        };
        rows.push(row);
        rhs.push(b);
        basis.push(unit);
        origin.push(o);
        unit_col.push(unit);
    }

    Tableau {
        rows,
        rhs,
        basis,
        origin,
        unit_col,
        row_sign,
        n_cols,
        art_start,
    }
}

/// Bland's rule: lowest-index improving column enters; among tied ratios the
/// row whose basic column has the lowest index leaves. Artificial columns
/// never enter.
fn optimise(
    t: &mut Tableau,
    cost: &[f64],
    cfg: &SolverConfig,
    budget: &mut Budget,
) -> Result<Phase, String> {
    let m = t.rows.len();
    let mut is_basic = vec![false; t.n_cols];
    loop {
        budget.tick()?;
        is_basic.iter_mut().for_each(|b| *b = false);
        for &b in &t.basis {
            is_basic[b] = true;
        }

        let mut entering = None;
        for j in 0..t.art_start {
            if is_basic[j] {
                continue;
            }
            let mut d = cost[j];
            for i in 0..m {
                let a = t.rows[i][j];
                if a != 0.0 {
                    d -= cost[t.basis[i]] * a;
                }
            }
            if d < -cfg.optimality_tol {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(Phase::Optimal);
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t.rows[i][e];
            if a > cfg.pivot_tol {
                let ratio = t.rhs[i] / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-12 * (1.0 + best.abs())
                            || ((ratio - best).abs() <= 1e-12 * (1.0 + best.abs())
                                && t.basis[i] < t.basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leaving else {
            return Ok(Phase::Unbounded);
        };
        pivot(t, r, e);
    }
}

fn pivot(t: &mut Tableau, r: usize, e: usize) {
    let p = t.rows[r][e];
    for v in t.rows[r].iter_mut() {
        *v /= p;
    }
    t.rhs[r] /= p;
    t.rows[r][e] = 1.0;
    let pivot_row = t.rows[r].clone();
    let pivot_rhs = t.rhs[r];
    for i in 0..t.rows.len() {
        if i == r {
            continue;
        }
        let f = t.rows[i][e];
        if f == 0.0 {
            continue;
        }
        for (v, pv) in t.rows[i].iter_mut().zip(&pivot_row) {
            *v = clean(*v - f * pv);
        }
        t.rows[i][e] = 0.0;
        t.rhs[i] = clean(t.rhs[i] - f * pivot_rhs);
        if t.rhs[i] < 0.0 && t.rhs[i] > -1e-11 {
            t.rhs[i] = 0.0;
        }
    }
    t.basis[r] = e;
}

/// Pivots zero-valued artificials out of the basis; rows where that is
/// impossible are linearly dependent and get removed.
fn drive_out_artificials(t: &mut Tableau, cfg: &SolverConfig) {
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] < t.art_start {
            r += 1;
            continue;
        }
        let col =
            (0..t.art_start).find(|&j| t.rows[r][j].abs() > cfg.pivot_tol && !t.basis.contains(&j));
        match col {
            Some(j) => {
                pivot(t, r, j);
                r += 1;
            }
            None => {
                t.rows.remove(r);
                t.rhs.remove(r);
                t.basis.remove(r);
                t.origin.remove(r);
                t.unit_col.remove(r);
                t.row_sign.remove(r);
            }
        }
    }
}

fn recover_x(t: &Tableau, maps: &[ColumnMap], n_struct: usize, n_vars: usize) -> Vec<f64> {
    let mut y = vec![0.0; n_struct];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n_struct {
            y[b] = t.rhs[i];
        }
    }
    (0..n_vars)
        .map(|j| match maps[j] {
            ColumnMap::Shift { col, offset } => offset + y[col],
            ColumnMap::Mirror { col, offset } => offset - y[col],
            ColumnMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .map(clean)
        .collect()
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}
