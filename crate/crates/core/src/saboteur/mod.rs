//! Controlled infeasibility injection, four-phase validation, and benchmark
//! emission.

mod generate;
mod inject;
mod pool;
mod queries;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpModel, ModelEdit};
use crate::solver::IisReport;

pub use generate::{
    assign_difficulty, generate_benchmark, instance_difficulty, read_benchmark, write_benchmark,
    GenerationError, Shortfall,
};
pub use inject::{inject, InjectFailure, Injection};
pub use pool::{generate_pool, pool_model, PoolFamily};
pub use validate::{validate, ValidationReport};

/// Version of the benchmark JSONL record layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
}

/// Difficulty label attached to an error type in the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeDifficulty {
    Easy,
    Medium,
    Hard,
    Expert,
}

impl ErrorType {
    pub const ALL: [ErrorType; 9] = [
        ErrorType::A,
        ErrorType::B,
        ErrorType::C,
        ErrorType::D,
        ErrorType::E,
        ErrorType::F,
        ErrorType::G,
        ErrorType::H,
        ErrorType::I,
    ];

    pub fn code(self) -> char {
        match self {
            ErrorType::A => 'A',
            ErrorType::B => 'B',
            ErrorType::C => 'C',
            ErrorType::D => 'D',
            ErrorType::E => 'E',
            ErrorType::F => 'F',
            ErrorType::G => 'G',
            ErrorType::H => 'H',
            ErrorType::I => 'I',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::A => "Direction Flip",
            ErrorType::B => "RHS Miscalculation",
            ErrorType::C => "Upper Bound Conflict",
            ErrorType::D => "Lower Bound Conflict",
            ErrorType::E => "Resource Over-allocation",
            ErrorType::F => "Capacity Violation",
            ErrorType::G => "Flow Imbalance",
            ErrorType::H => "Multi-constraint Conflict",
            ErrorType::I => "Composite Error",
        }
    }

    /// Intended IIS size, inclusive.
    pub fn target_iis_range(self) -> (usize, usize) {
        match self {
            ErrorType::A => (2, 3),
            ErrorType::B => (3, 5),
            ErrorType::C => (2, 3),
            ErrorType::D => (2, 4),
            ErrorType::E => (5, 8),
            ErrorType::F => (5, 7),
            ErrorType::G => (6, 10),
            ErrorType::H => (8, 12),
            ErrorType::I => (10, 15),
        }
    }

    pub fn difficulty(self) -> TypeDifficulty {
        match self {
            ErrorType::A | ErrorType::C | ErrorType::D => TypeDifficulty::Easy,
            ErrorType::B => TypeDifficulty::Medium,
            ErrorType::E | ErrorType::F | ErrorType::G => TypeDifficulty::Hard,
            ErrorType::H | ErrorType::I => TypeDifficulty::Expert,
        }
    }

    /// Types whose constraint names are randomised.
    pub fn uses_random_names(self) -> bool {
        matches!(self, ErrorType::G | ErrorType::H | ErrorType::I)
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for ErrorType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorType::ALL
            .into_iter()
            .find(|t| s.len() == 1 && s.starts_with(t.code()))
            .ok_or_else(|| format!("unknown error type `{s}` (expected A..I)"))
    }
}

/// Evaluation tier derived from the realised IIS size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Easy,
    Hard,
    Expert,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Easy, Tier::Hard, Tier::Expert];
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Easy => "Easy",
            Tier::Hard => "Hard",
            Tier::Expert => "Expert",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub key_constraints: Vec<String>,
    pub fix: Vec<ModelEdit>,
    pub iis_gt: IisReport,
    pub original_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub schema_version: u32,
    pub id: String,
    pub error_type: ErrorType,
    pub original: LpModel,
    pub sabotaged: LpModel,
    pub ground_truth: GroundTruth,
    /// Type F: the tightened bound behind the symptom row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_cause: Option<String>,
    /// Type G: the conflict exposed once the primary fix is applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<GroundTruth>,
    pub difficulty: Tier,
}

impl BenchmarkInstance {
    pub fn problem_nl(&self) -> &str {
        self.sabotaged.description.as_deref().unwrap_or("")
    }

    /// Primary fix followed by the cascade fix, if any.
    pub fn full_fix(&self) -> Vec<ModelEdit> {
        let mut edits = self.ground_truth.fix.clone();
        if let Some(c) = &self.cascade {
            edits.extend(c.fix.iter().cloned());
        }
        edits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SabotageConfig {
    /// Lower end of the over-allocation factor range for Type E.
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub num_candidates: usize,
    pub max_regenerations: usize,
    pub rng_seed: u64,
}

impl Default for SabotageConfig {
    fn default() -> Self {
        SabotageConfig {
            alpha_min: 1.2,
            alpha_max: 1.5,
            num_candidates: 10,
            max_regenerations: 3,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("alpha range must satisfy 1 < alpha_min <= alpha_max")]
    Alpha,
    #[error("num_candidates must be at least 1")]
    Candidates,
}

impl SabotageConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        if !(self.alpha_min > 1.0 && self.alpha_min <= self.alpha_max) {
            return Err(ConfigError::Alpha);
        }
        if self.num_candidates == 0 {
            return Err(ConfigError::Candidates);
        }
        Ok(())
    }
}
