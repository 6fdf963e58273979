//! Reference computations that share no code path with the implementations
//! they check. Only test suites depend on this crate.

pub mod feasibility;
pub mod newsvendor;
pub mod normal;
pub mod random_lp;
pub mod reward;
