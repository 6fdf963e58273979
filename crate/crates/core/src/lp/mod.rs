//! LP data model, canonical JSON form, and edit primitives.
//!
//! The JSON layout is:
//!
//! ```json
//! {
//!   "objective_sense": "MIN",
//!   "variables": [{"name": "x", "lower": 0.0, "upper": "+inf", "obj_coeff": 1.0}],
//!   "constraints": [{"name": "c1", "terms": {"x": 1.0}, "sense": "GE", "rhs": 10.0}],
//!   "description": "optional text"
//! }
//! ```
//!
//! Infinite bounds are the strings `"-inf"` and `"+inf"`. Floats are written
//! in shortest round-trip form, so `parse_model(serialize_model(m)) == m`.

mod edit;
mod model;

use thiserror::Error;

pub use edit::{apply_edit, apply_edits, ModelEdit};
pub use model::extended_real;
pub use model::{
    bound_name, parse_bound_name, BoundSide, Constraint, LpModel, ObjectiveSense, Sense, Variable,
    LOWER_BOUND_SUFFIX, UPPER_BOUND_SUFFIX,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("cannot flip equality constraint `{0}`")]
    FlipOnEquality(String),
}

/// Parses the canonical JSON form and checks the model invariants.
pub fn parse_model(text: &str) -> Result<LpModel, LpError> {
    let model: LpModel = serde_json::from_str(text).map_err(|e| LpError::Schema(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

/// Canonical single-line JSON. Structurally equal models give identical bytes.
pub fn serialize_model(model: &LpModel) -> String {
    serde_json::to_string(model).expect("LpModel serialization is infallible")
}

/// Multi-line variant of [`serialize_model`] for files meant to be read by people.
pub fn serialize_model_pretty(model: &LpModel) -> String {
    serde_json::to_string_pretty(model).expect("LpModel serialization is infallible")
}
