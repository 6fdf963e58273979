//! Small random LPs with integer data, for cross-checking the solver.

use orgym_core::lp::{Constraint, LpModel, ObjectiveSense, Sense, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_small_lp(seed: u64, max_vars: usize, max_rows: usize) -> LpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(1..=max_rows);
    let sense = if rng.random_bool(0.5) {
        ObjectiveSense::Minimize
    } else {
        ObjectiveSense::Maximize
    };
    let mut model = LpModel::new(sense);
    for j in 0..n {
        let lower = match rng.random_range(0..4) {
            0 => f64::NEG_INFINITY,
            1 | 2 => 0.0,
            _ => rng.random_range(-10..=10) as f64,
        };
        let upper = match rng.random_range(0..3) {
            0 => f64::INFINITY,
            _ => lower.max(-10.0) + rng.random_range(0..=20) as f64,
        };
        let obj = rng.random_range(-5..=5) as f64;
        model
            .variables
            .push(Variable::bounded(format!("x{j}"), lower, upper, obj));
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.6) {
                let mut a = rng.random_range(-5..=5);
                if a == 0 {
                    a = 1;
                }
                terms.push((format!("x{j}"), a as f64));
            }
        }
        if terms.is_empty() {
            terms.push((format!("x{}", rng.random_range(0..n)), 1.0));
        }
        let sense = match rng.random_range(0..5) {
            0 | 1 => Sense::Le,
            2 | 3 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = rng.random_range(-20..=20) as f64;
        model
            .constraints
            .push(Constraint::new(format!("r{i}"), terms, sense, rhs));
    }
    model
}
