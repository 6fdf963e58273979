use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::model::{parse_bound_name, BoundSide, LpModel, Sense};
use super::LpError;

/// A single change to a model.
///
/// Row-targeting edits also accept the implicit bound names `<var>__lb` and
/// `<var>__ub`: `Relax` shifts the bound by `delta`, `Drop` removes it, and
/// `SetRhs` sets it. `Rewrite` and `Flip` only apply to rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum ModelEdit {
    /// Adds `delta` to the right-hand side, whatever the sense.
    Relax {
        target: String,
        delta: f64,
    },
    Drop {
        target: String,
    },
    Rewrite {
        target: String,
        terms: IndexMap<String, f64>,
        sense: Sense,
        rhs: f64,
    },
    Flip {
        target: String,
    },
    SetRhs {
        target: String,
        value: f64,
    },
    SetBound {
        variable: String,
        side: BoundSide,
        value: f64,
    },
}

impl ModelEdit {
    /// The constraint (or implicit bound constraint) the edit acts on.
    pub fn target(&self) -> String {
        match self {
            ModelEdit::Relax { target, .. }
            | ModelEdit::Drop { target }
            | ModelEdit::Rewrite { target, .. }
            | ModelEdit::Flip { target }
            | ModelEdit::SetRhs { target, .. } => target.clone(),
            ModelEdit::SetBound { variable, side, .. } => super::bound_name(variable, *side),
        }
    }
}

/// Applies `edit` to a copy of `model`; the input is left untouched.
pub fn apply_edit(model: &LpModel, edit: &ModelEdit) -> Result<LpModel, LpError> {
    let mut out = model.clone();
    apply_in_place(&mut out, edit)?;
    out.validate()?;
    Ok(out)
}

/// Applies a sequence of edits, stopping at the first failure.
pub fn apply_edits<'a>(
    model: &LpModel,
    edits: impl IntoIterator<Item = &'a ModelEdit>,
) -> Result<LpModel, LpError> {
    let mut out = model.clone();
    for edit in edits {
        apply_in_place(&mut out, edit)?;
    }
    out.validate()?;
    Ok(out)
}

fn apply_in_place(model: &mut LpModel, edit: &ModelEdit) -> Result<(), LpError> {
    match edit {
        ModelEdit::SetBound {
            variable,
            side,
            value,
        } => {
            let var = model
                .variables
                .iter_mut()
                .find(|v| &v.name == variable)
                .ok_or_else(|| LpError::UnknownTarget(variable.clone()))?;
            var.set_bound(*side, *value);
            check_bounds(model, variable)
        }
        _ => {
            let target = edit.target();
            if let Some(idx) = model.constraint_index(&target) {
                apply_to_row(model, idx, edit)
            } else if let Some((var, side)) = parse_bound_name(&target) {
                apply_to_bound(model, var, side, edit)
            } else {
                Err(LpError::UnknownTarget(target))
            }
        }
    }
}

fn apply_to_row(model: &mut LpModel, idx: usize, edit: &ModelEdit) -> Result<(), LpError> {
    match edit {
        ModelEdit::Relax { delta, .. } => {
            model.constraints[idx].rhs += delta;
        }
        ModelEdit::Drop { .. } => {
            model.constraints.remove(idx);
        }
        ModelEdit::Rewrite {
            terms, sense, rhs, ..
        } => {
            let row = &mut model.constraints[idx];
            row.terms = terms.clone();
            row.sense = *sense;
            row.rhs = *rhs;
        }
        ModelEdit::Flip { target } => {
            let row = &mut model.constraints[idx];
            row.sense = row
                .sense
                .flipped()
                .ok_or_else(|| LpError::FlipOnEquality(target.clone()))?;
        }
        ModelEdit::SetRhs { value, .. } => {
            model.constraints[idx].rhs = *value;
        }
        ModelEdit::SetBound { .. } => unreachable!("handled by caller"),
    }
    Ok(())
}

fn apply_to_bound(
    model: &mut LpModel,
    var_name: &str,
    side: BoundSide,
    edit: &ModelEdit,
) -> Result<(), LpError> {
    let unknown = || LpError::UnknownTarget(edit.target());
    let var = model
        .variables
        .iter_mut()
        .find(|v| v.name == var_name)
        .ok_or_else(unknown)?;
    let current = var.bound(side);
    if !current.is_finite() {
        return Err(unknown());
    }
    let new_value = match edit {
        ModelEdit::Relax { delta, .. } => current + delta,
        ModelEdit::Drop { .. } => match side {
            BoundSide::Lower => f64::NEG_INFINITY,
            BoundSide::Upper => f64::INFINITY,
        },
        ModelEdit::SetRhs { value, .. } => *value,
        ModelEdit::Rewrite { .. } | ModelEdit::Flip { .. } => return Err(unknown()),
        ModelEdit::SetBound { .. } => unreachable!("handled by caller"),
    };
    var.set_bound(side, new_value);
    check_bounds(model, var_name)
}

fn check_bounds(model: &LpModel, var_name: &str) -> Result<(), LpError> {
    let var = model.variable(var_name).expect("variable exists");
    if var.lower > var.upper || var.lower.is_nan() || var.upper.is_nan() {
        return Err(LpError::Invariant(format!(
            "edit leaves `{}` with lower bound {} above upper bound {}",
            var.name, var.lower, var.upper
        )));
    }
    Ok(())
}
