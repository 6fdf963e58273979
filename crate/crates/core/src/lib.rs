//! Solver-in-the-loop toolkit for debugging infeasible linear programs and
//! for measuring newsvendor decision bias.

pub mod agent;
pub mod bias;
pub mod env;
pub mod eval;
pub mod fixtures;
pub mod lp;
pub mod rng;
pub mod saboteur;
pub mod solver;
