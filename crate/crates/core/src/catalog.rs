//! Built-in scalar systems `x_{n+1} = A(n) x_n` with closed-form transitions.
//!
//! | name        | A(n)                                     | transition 𝒜(m,n)        |
//! |-------------|------------------------------------------|--------------------------|
//! | `example25` | `c * b^{-n}` (n even), `c * b^{n+1}` (odd) | `c^{m-n} a_{mn}` (case table) |
//! | `example28` | `(n+3)/(n+2)`                            | `(m+2)/(n+2)`            |
//! | `example29` | `e^{-1}`                                 | `e^{n-m}`                |
//! | `constant`  | `c`                                      | `c^{m-n}`                |
//! | `identity`  | `1`                                      | `1`                      |
//!
//! For `example25` the factor `a_{mn}` is `b^{m-n}` (m, n even), `b^m`
//! (m even, n odd), `b^{-n}` (m odd, n even) and `1` (m, n odd).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExampleId {
    /// Switching system that is NPIS for `c > 1` but never UPIS.
    Example25 { b: f64, c: f64 },
    /// `u(n) = n + 2`: transitions blow up yet the system is not UPIS.
    Example28,
    /// `u(n) = e^{-n}`: uniformly contracting, still NPIS.
    Example29,
    Constant { c: f64 },
    Identity,
}

pub const EXAMPLE_NAMES: [&str; 5] = ["example25", "example28", "example29", "constant", "identity"];

impl ExampleId {
    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::Example25 { .. } => "example25",
            ExampleId::Example28 => "example28",
            ExampleId::Example29 => "example29",
            ExampleId::Constant { .. } => "constant",
            ExampleId::Identity => "identity",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        match *self {
            ExampleId::Example25 { b, c } => {
                out.insert("b".to_string(), b);
                out.insert("c".to_string(), c);
            }
            ExampleId::Constant { c } => {
                out.insert("c".to_string(), c);
            }
            _ => {}
        }
        out
    }

    /// Resolves a formula name plus parameters; rejects unknown or missing keys.
    pub fn from_parts(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "example25" => &["b", "c"],
            "constant" => &["c"],
            "example28" | "example29" | "identity" => &[],
            _ => return Err(Error::UnknownFormula(name.to_string())),
        };
        if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidSystem(format!(
                "{name} takes no parameter {extra:?}"
            )));
        }
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::InvalidSystem(format!("{name} requires parameter {key}")))
        };
        let id = match name {
            "example25" => ExampleId::Example25 {
                b: get("b")?,
                c: get("c")?,
            },
            "constant" => ExampleId::Constant { c: get("c")? },
            "example28" => ExampleId::Example28,
            "example29" => ExampleId::Example29,
            _ => ExampleId::Identity,
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ExampleId::Example25 { b, c } => {
                if !(b >= 2.0 && b.is_finite()) {
                    return Err(Error::param("b", b, "b >= 2"));
                }
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::param("c", c, "c > 0"));
                }
            }
            ExampleId::Constant { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::param("c", c, "c > 0"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `ln |A(k)|`.
    pub fn log_step(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            ExampleId::Example25 { b, c } => {
                let a = if k % 2 == 0 { -kf * b.ln() } else { (kf + 1.0) * b.ln() };
                c.ln() + a
            }
            ExampleId::Example28 => (kf + 3.0).ln() - (kf + 2.0).ln(),
            ExampleId::Example29 => -1.0,
            ExampleId::Constant { c } => c.ln(),
            ExampleId::Identity => 0.0,
        }
    }

    /// `ln |𝒜(m,n)|` from the closed form, `m >= n`.
    pub fn log_transition(&self, m: usize, n: usize) -> f64 {
        debug_assert!(m >= n);
        if m == n {
            return 0.0;
        }
        let k = (m - n) as f64;
        match *self {
            ExampleId::Example25 { b, c } => {
                let lb = b.ln();
                let a = match (m % 2 == 0, n % 2 == 0) {
                    (true, true) => k * lb,
                    (true, false) => m as f64 * lb,
                    (false, true) => -(n as f64) * lb,
                    (false, false) => 0.0,
                };
                k * c.ln() + a
            }
            ExampleId::Example28 => (m as f64 + 2.0).ln() - (n as f64 + 2.0).ln(),
            ExampleId::Example29 => -k,
            ExampleId::Constant { c } => k * c.ln(),
            ExampleId::Identity => 0.0,
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// A scalar-formula system spec for a catalog entry.
pub fn make_example(id: ExampleId, horizon: usize) -> Result<SystemSpec> {
    id.validate()?;
    let spec = SystemSpec::ScalarFormula {
        formula: id.name().to_string(),
        params: id.params(),
        horizon,
    };
    spec.validate()?;
    Ok(spec)
}
