//! Random feasible seed LPs for the saboteur.
//!
//! Four families, all with integer data and a cost-minimising objective:
//! small production plans, single-echelon transport, two-region hub networks,
//! and larger assembly plans. Each model carries a one-paragraph description.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lp::{Constraint, LpModel, ObjectiveSense, Sense, Variable};
use crate::rng::{stream, Rng as StreamRng};
use crate::solver::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolFamily {
    Production,
    Transport,
    Network,
    Assembly,
}

impl PoolFamily {
    pub const ALL: [PoolFamily; 4] = [
        PoolFamily::Production,
        PoolFamily::Transport,
        PoolFamily::Network,
        PoolFamily::Assembly,
    ];
}

/// `size` feasible models cycling through the families in a fixed ratio
/// (production 4, assembly 3, transport 2, network 2 out of every 11).
pub fn generate_pool(size: usize, seed: u64) -> Vec<LpModel> {
    const CYCLE: [PoolFamily; 11] = [
        PoolFamily::Production,
        PoolFamily::Assembly,
        PoolFamily::Transport,
        PoolFamily::Network,
        PoolFamily::Production,
        PoolFamily::Assembly,
        PoolFamily::Production,
        PoolFamily::Transport,
        PoolFamily::Network,
        PoolFamily::Assembly,
        PoolFamily::Production,
    ];
    (0..size)
        .map(|i| pool_model(CYCLE[i % CYCLE.len()], seed, i as u64))
        .collect()
}

/// One feasible model of `family`, drawn from stream `pool`/`index`.
pub fn pool_model(family: PoolFamily, seed: u64, index: u64) -> LpModel {
    let mut rng = stream(seed, "pool", index);
    loop {
        let m = match family {
            PoolFamily::Production => production(&mut rng),
            PoolFamily::Transport => transport(&mut rng),
            PoolFamily::Network => network(&mut rng),
            PoolFamily::Assembly => assembly(&mut rng),
        };
        // construction keeps a feasible reference point, so this is a guard only
        if solve(&m).is_optimal() {
            return m;
        }
    }
}

fn var(name: String, upper: f64, cost: f64) -> Variable {
    Variable::bounded(name, 0.0, upper, cost)
}

fn production(rng: &mut StreamRng) -> LpModel {
    let n = rng.random_range(3..=7);
    let names: Vec<String> = (0..n).map(|i| format!("x[{i}]")).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(60..=150) as f64).collect();
    let mins: Vec<f64> = (0..n).map(|_| rng.random_range(5..=40) as f64).collect();
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    for i in 0..n {
        m.variables.push(var(
            names[i].clone(),
            upper[i],
            rng.random_range(1..=9) as f64,
        ));
    }
    // reference point that every row is built to accept
    let mut x0 = mins.clone();

    let output = if n >= 4 && rng.random_bool(0.55) {
        let k = rng.random_range(4..=n.min(6));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let mut s: Vec<usize> = idx[..k].to_vec();
        s.sort_unstable();
        for &i in &s {
            x0[i] = upper[i] - rng.random_range(2..=8) as f64;
        }
        Some(s)
    } else {
        None
    };

    for i in 0..n {
        m.constraints.push(Constraint::new(
            format!("min_{i}"),
            [(names[i].clone(), 1.0)],
            Sense::Ge,
            mins[i],
        ));
    }
    // pairwise aggregate requirements with a small surplus at x0
    let outside: Vec<usize> = (0..n)
        .filter(|i| output.as_ref().is_none_or(|s| !s.contains(i)))
        .collect();
    let n_agg = if outside.len() >= 2 {
        rng.random_range(1..=2)
    } else {
        0
    };
    for g in 0..n_agg {
        let mut pick = outside.clone();
        pick.shuffle(rng);
        let (a, b) = (pick[0].min(pick[1]), pick[0].max(pick[1]));
        let rhs = x0[a] + x0[b] - rng.random_range(1..=5) as f64;
        m.constraints.push(Constraint::new(
            format!("agg_{g}"),
            [(names[a].clone(), 1.0), (names[b].clone(), 1.0)],
            Sense::Ge,
            rhs,
        ));
    }
    if rng.random_bool(0.8) {
        let a = rng.random_range(0..n);
        let b = (a + 1 + rng.random_range(0..n - 1)) % n;
        let r = ((x0[a] / x0[b]) * rng.random_range(0.3..0.7) * 10.0)
            .round()
            .max(1.0)
            / 10.0;
        if x0[a] - r * x0[b] >= 0.0 {
            m.constraints.push(Constraint::new(
                "ratio_0",
                [(names[a].clone(), 1.0), (names[b].clone(), -r)],
                Sense::Ge,
                0.0,
            ));
        }
    }
    let n_res = rng.random_range(1..=2);
    for r in 0..n_res {
        let k = rng.random_range(2..=3.min(n));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let mut cols = idx[..k].to_vec();
        cols.sort_unstable();
        let terms: Vec<(String, f64)> = cols
            .iter()
            .map(|&i| (names[i].clone(), rng.random_range(1..=4) as f64))
            .collect();
        let act: f64 = terms.iter().zip(&cols).map(|((_, a), &i)| a * x0[i]).sum();
        let rhs = (act * rng.random_range(1.15..1.5)).ceil();
        m.constraints
            .push(Constraint::new(format!("res_{r}"), terms, Sense::Le, rhs));
    }
    if let Some(s) = &output {
        let rhs: f64 = s.iter().map(|&i| x0[i]).sum();
        m.constraints.push(Constraint::new(
            "output_req",
            s.iter().map(|&i| (names[i].clone(), 1.0)),
            Sense::Ge,
            rhs,
        ));
    }
    if rng.random_bool(0.5) {
        let total: f64 = x0.iter().sum();
        let rhs = (total * rng.random_range(1.1..1.4)).ceil();
        m.constraints.push(Constraint::new(
            "cap_total",
            names.iter().map(|v| (v.clone(), 1.0)),
            Sense::Le,
            rhs,
        ));
    }
    m.with_description(format!(
        "A plant makes {n} products x[0]..x[{}] on shared resources. Each product has its own \
         capacity and a minimum production level, some pairs of products have joint minimums, \
         and resource usage per unit is limited by the available stock.{} Choose production \
         quantities that meet every requirement at minimum total cost.",
        n - 1,
        if output.is_some() {
            " A contracted output target covers a group of the products."
        } else {
            ""
        }
    ))
}

fn shares(rng: &mut StreamRng, k: usize, min_top: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let sum: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let top = w.iter().cloned().fold(0.0, f64::max);
        if top >= min_top && top <= 0.45f64.max(1.0 / k as f64 + 0.1) {
            return w;
        }
    }
}

fn transport(rng: &mut StreamRng) -> LpModel {
    loop {
        let n_s = rng.random_range(2..=3);
        let n_d = rng.random_range(2..=4);
        let supply: Vec<f64> = (0..n_s).map(|_| rng.random_range(20..=60) as f64).collect();
        let total_s: f64 = supply.iter().sum();
        let rho = rng.random_range(0.94..0.97);
        let w = shares(rng, n_d, 0.35);
        let demand: Vec<f64> = w
            .iter()
            .map(|s| (s * rho * total_s).round().max(1.0))
            .collect();
        let total_d: f64 = demand.iter().sum();
        let top = demand.iter().cloned().fold(0.0, f64::max);
        // the smallest over-allocation factor must already break the balance
        if total_d > total_s || total_d - top + (top * 1.2).round() <= total_s {
            continue;
        }
        let mut m = LpModel::new(ObjectiveSense::Minimize);
        for j in 0..n_s {
            m.variables.push(Variable::nonneg(
                format!("s[{j}]"),
                rng.random_range(2..=9) as f64,
            ));
        }
        for k in 0..n_d {
            m.variables.push(Variable::nonneg(format!("d[{k}]"), 0.0));
        }
        for (j, s) in supply.iter().enumerate() {
            m.constraints.push(Constraint::new(
                format!("s{j}_cap"),
                [(format!("s[{j}]"), 1.0)],
                Sense::Le,
                *s,
            ));
        }
        for (k, d) in demand.iter().enumerate() {
            m.constraints.push(Constraint::new(
                format!("d{k}_min"),
                [(format!("d[{k}]"), 1.0)],
                Sense::Ge,
                *d,
            ));
        }
        let mut terms: IndexMap<String, f64> = IndexMap::new();
        for j in 0..n_s {
            terms.insert(format!("s[{j}]"), 1.0);
        }
        for k in 0..n_d {
            terms.insert(format!("d[{k}]"), -1.0);
        }
        m.constraints.push(Constraint {
            name: "flow_balance".into(),
            terms,
            sense: Sense::Eq,
            rhs: 0.0,
        });
        return m.with_description(format!(
            "A distributor ships goods from {n_s} suppliers to {n_d} customers. Each supplier \
             has a shipping capacity, each customer has a minimum order that must be met, and \
             total supply shipped must equal total demand served. Minimise the total \
             procurement cost."
        ));
    }
}

fn network(rng: &mut StreamRng) -> LpModel {
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    for region in 1..=2 {
        let n_src = rng.random_range(2..=3);
        let n_snk = rng.random_range(3..=4);
        let supply: Vec<f64> = (0..n_src)
            .map(|_| rng.random_range(30..=80) as f64)
            .collect();
        let total_s: f64 = supply.iter().sum();
        let rho = rng.random_range(0.6..0.85);
        let w = shares(rng, n_snk, 0.0);
        let demand: Vec<f64> = w
            .iter()
            .map(|s| (s * rho * total_s).floor().max(1.0))
            .collect();
        let mut balance: IndexMap<String, f64> = IndexMap::new();
        for (j, s) in supply.iter().enumerate() {
            let v = format!("f_r{region}_in{j}");
            m.variables
                .push(Variable::nonneg(v.clone(), rng.random_range(1..=6) as f64));
            m.constraints.push(Constraint::new(
                format!("r{region}_src{j}_cap"),
                [(v.clone(), 1.0)],
                Sense::Le,
                *s,
            ));
            balance.insert(v, 1.0);
        }
        let mut sinks = Vec::new();
        for (k, d) in demand.iter().enumerate() {
            let v = format!("f_r{region}_out{k}");
            m.variables
                .push(Variable::nonneg(v.clone(), rng.random_range(1..=6) as f64));
            sinks.push(Constraint::new(
                format!("r{region}_snk{k}_min"),
                [(v.clone(), 1.0)],
                Sense::Ge,
                *d,
            ));
            balance.insert(v, -1.0);
        }
        m.constraints.push(Constraint {
            name: format!("r{region}_hub_balance"),
            terms: balance,
            sense: Sense::Eq,
            rhs: 0.0,
        });
        m.constraints.extend(sinks);
    }
    m.with_description(
        "Two regional hubs each receive flow from their own sources and forward it to their own \
         sinks. Source arcs are capacity limited, every sink has a minimum delivery, and each \
         hub must conserve flow. Minimise the total arc cost."
            .to_string(),
    )
}

fn assembly(rng: &mut StreamRng) -> LpModel {
    let n = rng.random_range(7..=11);
    let names: Vec<String> = (0..n).map(|i| format!("y[{i}]")).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(30..=90) as f64).collect();
    let mins: Vec<f64> = (0..n).map(|_| rng.random_range(3..=15) as f64).collect();
    let mut m = LpModel::new(ObjectiveSense::Minimize);
    for i in 0..n {
        m.variables.push(var(
            names[i].clone(),
            upper[i],
            rng.random_range(1..=9) as f64,
        ));
        m.constraints.push(Constraint::new(
            format!("min_{i}"),
            [(names[i].clone(), 1.0)],
            Sense::Ge,
            mins[i],
        ));
    }
    let slack = rng.random_range(5..=20) as f64;
    m.constraints.push(Constraint::new(
        "total_min",
        names.iter().map(|v| (v.clone(), 1.0)),
        Sense::Ge,
        mins.iter().sum::<f64>() + slack,
    ));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut cols = idx[..3].to_vec();
    cols.sort_unstable();
    let terms: Vec<(String, f64)> = cols
        .iter()
        .map(|&i| (names[i].clone(), rng.random_range(1..=3) as f64))
        .collect();
    let full: f64 = terms
        .iter()
        .zip(&cols)
        .map(|((_, a), &i)| a * upper[i])
        .sum();
    let floor: f64 = terms
        .iter()
        .zip(&cols)
        .map(|((_, a), &i)| a * mins[i])
        .sum();
    let rhs = (floor + (full - floor) * rng.random_range(0.7..0.95)).ceil();
    m.constraints
        .push(Constraint::new("labour", terms, Sense::Le, rhs));
    m.with_description(format!(
        "An assembly line builds {n} components y[0]..y[{}]. Each component has a line \
         capacity and a minimum build quantity, the total build must exceed the sum of the \
         minimums by a safety margin, and three components share a limited labour pool. \
         Minimise the total build cost.",
        n - 1
    ))
}
