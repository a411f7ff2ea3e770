//! Closed-form scalar sequences evaluated in the log domain.
//!
//! These carry every sequence a certificate needs: `N(m)`, `φ`, `τ`, `θ`
//! and `β`. Monotonicity and the lower bound are checked pointwise on the
//! window because table forms admit no symbolic check.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;

/// Slack allowed in pointwise monotonicity and lower-bound checks (log units).
const SHAPE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SequenceForm {
    /// `κ`
    Constant {
        #[serde(with = "decimal")]
        value: f64,
    },
    /// `b^m`
    Geometric {
        #[serde(with = "decimal")]
        base: f64,
    },
    /// `e^{αm}`
    ExpLinear {
        #[serde(with = "decimal")]
        alpha: f64,
    },
    /// `e^{αm²}`
    ExpQuadratic {
        #[serde(with = "decimal")]
        alpha: f64,
    },
    /// Explicit values `ln s(m)` for `m = 0, 1, ...`.
    Table {
        #[serde(with = "decimal::vec")]
        log_values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// `scale * form(m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    #[serde(flatten)]
    pub form: SequenceForm,
    #[serde(with = "decimal", default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
}

/// Shape a sequence must have on the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceRole {
    /// Nondecreasing with values in `[1, ∞)`.
    AtLeastOne,
    /// Nondecreasing and positive.
    Positive,
}

impl SequenceSpec {
    pub fn new(form: SequenceForm) -> Self {
        SequenceSpec { form, scale: 1.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(SequenceForm::Constant { value })
    }

    pub fn geometric(base: f64) -> Self {
        Self::new(SequenceForm::Geometric { base })
    }

    pub fn exp_linear(alpha: f64) -> Self {
        Self::new(SequenceForm::ExpLinear { alpha })
    }

    pub fn exp_quadratic(alpha: f64) -> Self {
        Self::new(SequenceForm::ExpQuadratic { alpha })
    }

    pub fn table(log_values: Vec<f64>) -> Self {
        Self::new(SequenceForm::Table { log_values })
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self
    }

    /// `ln s(m)`. Panics past the end of a table; callers tabulate first.
    pub fn log_at(&self, m: usize) -> f64 {
        let mf = m as f64;
        let base = match &self.form {
            SequenceForm::Constant { value } => value.ln(),
            SequenceForm::Geometric { base } => {
                if m == 0 {
                    0.0
                } else {
                    mf * base.ln()
                }
            }
            SequenceForm::ExpLinear { alpha } => alpha * mf,
            SequenceForm::ExpQuadratic { alpha } => alpha * mf * mf,
            SequenceForm::Table { log_values } => log_values[m],
        };
        base + self.scale.ln()
    }

    pub fn at(&self, m: usize) -> LogMagnitude {
        LogMagnitude::from_log(self.log_at(m))
    }

    /// Number of points available, `None` for closed forms.
    pub fn table_len(&self) -> Option<usize> {
        match &self.form {
            SequenceForm::Table { log_values } => Some(log_values.len()),
            _ => None,
        }
    }

    /// Values `ln s(0..=window)`, validated against `role`.
    pub fn tabulate(&self, name: &str, window: usize, role: SequenceRole) -> Result<Vec<f64>> {
        let bad = |reason: String| Error::InvalidSequence {
            name: name.to_string(),
            reason,
        };
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(bad(format!("scale {} must be positive", self.scale)));
        }
        match &self.form {
            SequenceForm::Constant { value } if !(*value > 0.0) => {
                return Err(bad(format!("constant {value} must be positive")))
            }
            SequenceForm::Geometric { base } if !(*base > 0.0) => {
                return Err(bad(format!("base {base} must be positive")))
            }
            SequenceForm::Table { log_values } if log_values.len() <= window => {
                return Err(Error::TableTooShort {
                    len: log_values.len(),
                    needed: window + 1,
                })
            }
            _ => {}
        }
        let values: Vec<f64> = (0..=window).map(|m| self.log_at(m)).collect();
        for (m, v) in values.iter().enumerate() {
            if v.is_nan() || *v == f64::INFINITY {
                return Err(bad(format!("value at {m} is not finite")));
            }
            match role {
                SequenceRole::AtLeastOne if *v < -SHAPE_TOLERANCE => {
                    return Err(bad(format!("value at {m} is below 1 (ln = {v})")));
                }
                SequenceRole::Positive if *v == f64::NEG_INFINITY => {
                    return Err(bad(format!("value at {m} is zero")));
                }
                _ => {}
            }
            if m > 0 && *v < values[m - 1] - SHAPE_TOLERANCE {
                return Err(bad(format!("decreases between {} and {m}", m - 1)));
            }
        }
        Ok(values)
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale != 1.0 {
            write!(f, "{}*", self.scale)?;
        }
        match &self.form {
            SequenceForm::Constant { value } => write!(f, "constant({value})"),
            SequenceForm::Geometric { base } => write!(f, "geometric({base})"),
            SequenceForm::ExpLinear { alpha } => write!(f, "exp_linear({alpha})"),
            SequenceForm::ExpQuadratic { alpha } => write!(f, "exp_quadratic({alpha})"),
            SequenceForm::Table { log_values } => write!(f, "table[{}]", log_values.len()),
        }
    }
}

/// Parses `[scale*]form(arg)` where form is one of `constant`, `geometric`,
/// `exp_linear`, `exp_quadratic`. `table(...)` is resolved by the caller.
pub fn parse_closed_form(text: &str) -> Result<SequenceSpec> {
    let text = text.trim();
    let (scale, body) = match text.split_once('*') {
        Some((s, rest)) => (
            decimal::parse(s).map_err(Error::Parse)?,
            rest.trim(),
        ),
        None => (1.0, text),
    };
    let (name, arg) = body
        .strip_suffix(')')
        .and_then(|b| b.split_once('('))
        .ok_or_else(|| Error::Parse(format!("expected form(arg), got {text:?}")))?;
    let value = || decimal::parse(arg).map_err(Error::Parse);
    let form = match name.trim() {
        "constant" => SequenceForm::Constant { value: value()? },
        "geometric" => SequenceForm::Geometric { base: value()? },
        "exp_linear" => SequenceForm::ExpLinear { alpha: value()? },
        "exp_quadratic" => SequenceForm::ExpQuadratic { alpha: value()? },
        other => return Err(Error::Parse(format!("unknown sequence form {other:?}"))),
    };
    Ok(SequenceSpec { form, scale })
}

/// Parses a sequence value: a bare number (constant), a closed form, or
/// `table(path)` resolved through `load_table`.
pub fn parse_sequence<F>(text: &str, load_table: F) -> Result<SequenceSpec>
where
    F: Fn(&str) -> Result<SequenceSpec>,
{
    let text = text.trim();
    if let Some(path) = text.strip_prefix("table(").and_then(|t| t.strip_suffix(')')) {
        return load_table(path.trim());
    }
    if let Ok(v) = decimal::parse(text) {
        return Ok(SequenceSpec::constant(v));
    }
    parse_closed_form(text)
}

/// Reads a table sequence from CSV with columns `m,log_value`.
pub fn read_table_csv<R: std::io::Read>(reader: R) -> Result<SequenceSpec> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut values: Vec<(usize, f64)> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let m: usize = row
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad index in row {row:?}")))?;
        let v = decimal::parse(row.get(1).unwrap_or("")).map_err(Error::Parse)?;
        values.push((m, v));
    }
    values.sort_by_key(|(m, _)| *m);
    for (expected, (m, _)) in values.iter().enumerate() {
        if *m != expected {
            return Err(Error::Parse(format!("table index {expected} missing")));
        }
    }
    Ok(SequenceSpec::table(values.into_iter().map(|(_, v)| v).collect()))
}

/// Writes `m,log_value` rows.
pub fn write_table_csv<W: std::io::Write>(writer: W, log_values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["m", "log_value"])?;
    for (m, v) in log_values.iter().enumerate() {
        w.write_record([m.to_string(), decimal::format(*v)])?;
    }
    w.flush()?;
    Ok(())
}
