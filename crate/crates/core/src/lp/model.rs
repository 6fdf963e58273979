use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::LpError;

/// Suffix of the implicit constraint standing for a variable's lower bound.
pub const LOWER_BOUND_SUFFIX: &str = "__lb";
/// Suffix of the implicit constraint standing for a variable's upper bound.
pub const UPPER_BOUND_SUFFIX: &str = "__ub";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveSense {
    #[serde(rename = "MIN")]
    Minimize,
    #[serde(rename = "MAX")]
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "LE")]
    Le,
    #[serde(rename = "GE")]
    Ge,
    #[serde(rename = "EQ")]
    Eq,
}

impl Sense {
    /// GE becomes LE and vice versa; EQ has no flip.
    pub fn flipped(self) -> Option<Sense> {
        match self {
            Sense::Le => Some(Sense::Ge),
            Sense::Ge => Some(Sense::Le),
            Sense::Eq => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundSide {
    #[serde(rename = "lb")]
    Lower,
    #[serde(rename = "ub")]
    Upper,
}

impl BoundSide {
    pub fn suffix(self) -> &'static str {
        match self {
            BoundSide::Lower => LOWER_BOUND_SUFFIX,
            BoundSide::Upper => UPPER_BOUND_SUFFIX,
        }
    }
}

/// Name of the implicit constraint for one side of a variable's bounds.
pub fn bound_name(variable: &str, side: BoundSide) -> String {
    format!("{variable}{}", side.suffix())
}

/// Splits `x__lb` / `x__ub` into the variable name and the bound side.
pub fn parse_bound_name(name: &str) -> Option<(&str, BoundSide)> {
    if let Some(var) = name.strip_suffix(LOWER_BOUND_SUFFIX) {
        Some((var, BoundSide::Lower))
    } else {
        name.strip_suffix(UPPER_BOUND_SUFFIX)
            .map(|var| (var, BoundSide::Upper))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variable {
    pub name: String,
    #[serde(with = "extended_real")]
    pub lower: f64,
    #[serde(with = "extended_real")]
    pub upper: f64,
    pub obj_coeff: f64,
}

impl Variable {
    /// A nonnegative variable with no upper bound.
    pub fn nonneg(name: impl Into<String>, obj_coeff: f64) -> Self {
        Variable {
            name: name.into(),
            lower: 0.0,
            upper: f64::INFINITY,
            obj_coeff,
        }
    }

    pub fn bounded(name: impl Into<String>, lower: f64, upper: f64, obj_coeff: f64) -> Self {
        Variable {
            name: name.into(),
            lower,
            upper,
            obj_coeff,
        }
    }

    pub fn bound(&self, side: BoundSide) -> f64 {
        match side {
            BoundSide::Lower => self.lower,
            BoundSide::Upper => self.upper,
        }
    }

    pub fn set_bound(&mut self, side: BoundSide, value: f64) {
        match side {
            BoundSide::Lower => self.lower = value,
            BoundSide::Upper => self.upper = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub name: String,
    pub terms: IndexMap<String, f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new<N, I, S>(name: N, terms: I, sense: Sense, rhs: f64) -> Self
    where
        N: Into<String>,
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Constraint {
            name: name.into(),
            terms: terms.into_iter().map(|(v, a)| (v.into(), a)).collect(),
            sense,
            rhs,
        }
    }

    /// Left-hand side value at `value_of(var)`.
    pub fn activity(&self, mut value_of: impl FnMut(&str) -> f64) -> f64 {
        self.terms.iter().map(|(v, a)| a * value_of(v)).sum()
    }

    pub fn is_satisfied_by(&self, activity: f64, tol: f64) -> bool {
        match self.sense {
            Sense::Le => activity <= self.rhs + tol,
            Sense::Ge => activity >= self.rhs - tol,
            Sense::Eq => (activity - self.rhs).abs() <= tol,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name)?;
        for (i, (var, coeff)) in self.terms.iter().enumerate() {
            let (sign, mag) = if *coeff < 0.0 {
                ("-", -coeff)
            } else {
                ("+", *coeff)
            };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1.0 {
                write!(f, "{var}")?;
            } else {
                write!(f, "{mag} {var}")?;
            }
        }
        write!(f, " {} {}", self.sense.symbol(), self.rhs)
    }
}

/// A linear program: objective, variables with bounds, and linear rows.
///
/// Variable and constraint order is significant: it fixes the solver's
/// pivoting order and the IIS deletion order, and it is preserved through
/// serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpModel {
    pub objective_sense: ObjectiveSense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub description: Option<String>,
}

impl LpModel {
    pub fn new(objective_sense: ObjectiveSense) -> Self {
        LpModel {
            objective_sense,
            variables: Vec::new(),
            constraints: Vec::new(),
            description: None,
        }
    }

    pub fn with_description(mut self, text: impl Into<String>) -> Self {
        self.description = Some(text.into());
        self
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn constraint_index(&self, name: &str) -> Option<usize> {
        self.constraints.iter().position(|c| c.name == name)
    }

    /// True if `name` is a row or the implicit constraint of a finite bound.
    pub fn has_target(&self, name: &str) -> bool {
        if self.constraint(name).is_some() {
            return true;
        }
        match parse_bound_name(name) {
            Some((var, side)) => self
                .variable(var)
                .is_some_and(|v| v.bound(side).is_finite()),
            None => false,
        }
    }

    /// Objective value at a point given in variable order.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, x)| v.obj_coeff * x)
            .sum()
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), LpError> {
        let mut var_names = HashSet::new();
        for v in &self.variables {
            if v.name.is_empty() {
                return Err(LpError::Invariant("empty variable name".into()));
            }
            if !var_names.insert(v.name.as_str()) {
                return Err(LpError::Invariant(format!(
                    "duplicate variable `{}`",
                    v.name
                )));
            }
            if v.lower.is_nan() || v.upper.is_nan() || !v.obj_coeff.is_finite() {
                return Err(LpError::Invariant(format!(
                    "non-numeric data on variable `{}`",
                    v.name
                )));
            }
            if v.lower > v.upper {
                return Err(LpError::Invariant(format!(
                    "variable `{}` has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::Invariant(format!(
                    "variable `{}` has an empty domain",
                    v.name
                )));
            }
        }
        let mut row_names = HashSet::new();
        for c in &self.constraints {
            if c.name.is_empty() {
                return Err(LpError::Invariant("empty constraint name".into()));
            }
            if !row_names.insert(c.name.as_str()) {
                return Err(LpError::Invariant(format!(
                    "duplicate constraint `{}`",
                    c.name
                )));
            }
            if parse_bound_name(&c.name).is_some_and(|(var, _)| var_names.contains(var)) {
                return Err(LpError::Invariant(format!(
                    "constraint `{}` shadows an implicit bound constraint",
                    c.name
                )));
            }
            if !c.rhs.is_finite() {
                return Err(LpError::Invariant(format!(
                    "constraint `{}` has non-finite rhs",
                    c.name
                )));
            }
            if !c.terms.values().any(|a| *a != 0.0) {
                return Err(LpError::Invariant(format!(
                    "constraint `{}` has no nonzero coefficient",
                    c.name
                )));
            }
            for (var, coeff) in &c.terms {
                if !coeff.is_finite() {
                    return Err(LpError::Invariant(format!(
                        "constraint `{}` has a non-finite coefficient on `{var}`",
                        c.name
                    )));
                }
                if !var_names.contains(var.as_str()) {
                    return Err(LpError::Invariant(format!(
                        "constraint `{}` references unknown variable `{var}`",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `±inf` travel as the strings `"-inf"` / `"+inf"`; everything else is a JSON number.
pub mod extended_real {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *value == f64::INFINITY {
            s.serialize_str("+inf")
        } else if *value == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct ExtendedReal;

        impl Visitor<'_> for ExtendedReal {
            type Value = f64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"-inf\", \"+inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "+inf" | "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        d.deserialize_any(ExtendedReal)
    }
}
