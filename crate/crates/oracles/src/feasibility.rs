//! LP feasibility by Fourier–Motzkin elimination, and exhaustive subset search.
//!
//! Only meant for tiny systems (a handful of variables); the number of
//! inequalities can grow quadratically per eliminated variable.

use orgym_core::lp::{bound_name, BoundSide, LpModel, Sense};

const TOL: f64 = 1e-9;

/// `coeffs · x <= rhs`
#[derive(Debug, Clone)]
struct Ineq {
    coeffs: Vec<f64>,
    rhs: f64,
}

/// Every constraint and finite bound of `model`, named as the IIS reports them.
pub fn members(model: &LpModel) -> Vec<String> {
    let mut out: Vec<String> = model.constraints.iter().map(|c| c.name.clone()).collect();
    for v in &model.variables {
        for side in [BoundSide::Lower, BoundSide::Upper] {
            if v.bound(side).is_finite() {
                out.push(bound_name(&v.name, side));
            }
        }
    }
    out
}

/// Feasibility of the system made of only the listed rows and bounds.
pub fn is_feasible_subset(model: &LpModel, active: &[String]) -> bool {
    let n = model.variables.len();
    let on = |name: &str| active.iter().any(|a| a == name);
    let mut ineqs = Vec::new();
    for c in &model.constraints {
        if !on(&c.name) {
            continue;
        }
        let mut coeffs = vec![0.0; n];
        for (var, a) in &c.terms {
            let j = model.variables.iter().position(|v| &v.name == var).unwrap();
            coeffs[j] += a;
        }
        let neg: Vec<f64> = coeffs.iter().map(|a| -a).collect();
        match c.sense {
            Sense::Le => ineqs.push(Ineq { coeffs, rhs: c.rhs }),
            Sense::Ge => ineqs.push(Ineq {
                coeffs: neg,
                rhs: -c.rhs,
            }),
            Sense::Eq => {
                ineqs.push(Ineq { coeffs, rhs: c.rhs });
                ineqs.push(Ineq {
                    coeffs: neg,
                    rhs: -c.rhs,
                });
            }
        }
    }
    for (j, v) in model.variables.iter().enumerate() {
        if v.lower.is_finite() && on(&bound_name(&v.name, BoundSide::Lower)) {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = -1.0;
            ineqs.push(Ineq {
                coeffs,
                rhs: -v.lower,
            });
        }
        if v.upper.is_finite() && on(&bound_name(&v.name, BoundSide::Upper)) {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = 1.0;
            ineqs.push(Ineq {
                coeffs,
                rhs: v.upper,
            });
        }
    }
    fourier_motzkin(ineqs, n)
}

/// Feasibility of the whole model.
pub fn is_feasible(model: &LpModel) -> bool {
    is_feasible_subset(model, &members(model))
}

fn fourier_motzkin(mut ineqs: Vec<Ineq>, n: usize) -> bool {
    for j in 0..n {
        let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
        for q in ineqs {
            if q.coeffs[j] > TOL {
                pos.push(q);
            } else if q.coeffs[j] < -TOL {
                neg.push(q);
            } else {
                zero.push(q);
            }
        }
        for p in &pos {
            for q in &neg {
                let (a, b) = (p.coeffs[j], -q.coeffs[j]);
                let coeffs: Vec<f64> = p
                    .coeffs
                    .iter()
                    .zip(&q.coeffs)
                    .map(|(x, y)| {
                        let v = x / a + y / b;
                        if v.abs() < TOL {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect();
                zero.push(Ineq {
                    coeffs,
                    rhs: p.rhs / a + q.rhs / b,
                });
            }
        }
        for q in &mut zero {
            q.coeffs[j] = 0.0;
        }
        ineqs = prune(zero);
    }
    ineqs.iter().all(|q| q.rhs >= -1e-7)
}

/// Drops exact duplicates and trivially true rows to slow the blow-up.
fn prune(ineqs: Vec<Ineq>) -> Vec<Ineq> {
    let mut out: Vec<Ineq> = Vec::with_capacity(ineqs.len());
    for q in ineqs {
        if q.coeffs.iter().all(|a| *a == 0.0) && q.rhs >= 0.0 {
            continue;
        }
        // scale so the largest |coeff| is 1 for duplicate detection
        let scale = q.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let q = if scale > 0.0 {
            Ineq {
                coeffs: q.coeffs.iter().map(|a| a / scale).collect(),
                rhs: q.rhs / scale,
            }
        } else {
            q
        };
        if let Some(existing) = out.iter_mut().find(|e| {
            e.coeffs
                .iter()
                .zip(&q.coeffs)
                .all(|(x, y)| (x - y).abs() <= 1e-12)
        }) {
            existing.rhs = existing.rhs.min(q.rhs);
        } else {
            out.push(q);
        }
    }
    out
}

/// All inclusion-minimal infeasible subsets of `candidates`, by enumerating
/// every subset in order of size.
pub fn minimal_infeasible_subsets(model: &LpModel, candidates: &[String]) -> Vec<Vec<String>> {
    let k = candidates.len();
    assert!(k <= 16, "exhaustive enumeration is for tiny systems");
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut found: Vec<u32> = Vec::new();
    for m in masks {
        if found.iter().any(|f| f & m == *f) {
            continue;
        }
        let subset = select(candidates, m);
        if !is_feasible_subset(model, &subset) {
            found.push(m);
        }
    }
    found.into_iter().map(|m| select(candidates, m)).collect()
}

/// True iff `members` is infeasible and every proper subset of it is feasible.
pub fn is_irreducible_infeasible(model: &LpModel, members: &[String]) -> bool {
    let k = members.len();
    if k == 0 || k > 20 || is_feasible_subset(model, members) {
        return false;
    }
    // Feasibility is monotone under removal, so the maximal proper subsets suffice.
    (0..k).all(|skip| {
        let subset: Vec<String> = members
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, m)| m.clone())
            .collect();
        is_feasible_subset(model, &subset)
    })
}

fn select(candidates: &[String], mask: u32) -> Vec<String> {
    candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, c)| c.clone())
        .collect()
}
