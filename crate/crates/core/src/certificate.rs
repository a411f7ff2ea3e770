//! Instability certificates: concrete parameters claimed to satisfy one of
//! the defining inequalities.
//!
//! JSON documents carry a `kind` discriminator and decimal-string reals:
//!
//! ```json
//! {"kind":"npis","N":{"form":"geometric","base":"2"},"r":"0.25"}
//! ```
//!
//! The inline form used on the command line is `kind:key=value,...`, for
//! example `npis:N=geometric(2),r=0.25` or `sum-upis:p=1,d=1.5,D=4`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::sequence::{parse_sequence, SequenceRole, SequenceSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `‖𝒜(n,p)x‖ <= N r^{m-n} ‖𝒜(m,p)x‖`
    Upis {
        #[serde(rename = "N", with = "decimal")]
        big_n: f64,
        #[serde(with = "decimal")]
        r: f64,
    },
    /// `‖𝒜(n,p)x‖ <= N(m) r^{m-n} ‖𝒜(m,p)x‖`
    Npis {
        #[serde(rename = "N")]
        big_n: SequenceSpec,
        #[serde(with = "decimal")]
        r: f64,
    },
    /// `‖𝒜(n,p)x‖ <= N r^{m-n} s^n ‖𝒜(m,p)x‖`, `s >= 1`
    Pis {
        #[serde(rename = "N", with = "decimal")]
        big_n: f64,
        #[serde(with = "decimal")]
        r: f64,
        #[serde(with = "decimal")]
        s: f64,
    },
    /// As PIS with `s < 1/r`.
    Spis {
        #[serde(rename = "N", with = "decimal")]
        big_n: f64,
        #[serde(with = "decimal")]
        r: f64,
        #[serde(with = "decimal")]
        s: f64,
    },
    /// `τ(m-n)‖x‖ <= φ(m)‖𝒜(m,n)x‖`
    PhiTau { phi: SequenceSpec, tau: SequenceSpec },
    Sum(SumCriterion),
    Lyapunov(LyapunovCertificate),
}

/// Weighted power-sum bound
/// `Σ_{k=n}^{m} d^{p(m-k)} ‖𝒜(k,n)x‖^p <= B(m)^p ‖𝒜(m,n)x‖^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumCriterion {
    #[serde(with = "decimal")]
    pub p: f64,
    #[serde(with = "decimal")]
    pub d: f64,
    pub bound: SumBound,
}

/// The right-hand bound `B(m)` of a [`SumCriterion`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SumBound {
    /// `B(m) = θ(m)`
    Npis { theta: SequenceSpec },
    /// `B(m) = D`
    Upis {
        #[serde(rename = "D", with = "decimal")]
        big_d: f64,
    },
    /// `B(m) = D c^m`, `c ∈ (1, d)`
    Pis {
        #[serde(rename = "D", with = "decimal")]
        big_d: f64,
        #[serde(with = "decimal")]
        c: f64,
    },
    /// `B(m) = D c^m`, `c > 1`, `c² < d`
    Spis {
        #[serde(rename = "D", with = "decimal")]
        big_d: f64,
        #[serde(with = "decimal")]
        c: f64,
    },
}

/// Where the Lyapunov sequence comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovSource {
    /// `L(m,n,x) = Σ_{k=n}^{m} d^{m-k} ‖𝒜(k,n)x‖`
    Canonical {
        #[serde(with = "decimal")]
        d: f64,
    },
    /// CSV with columns `m,n,vector_id,log_value`.
    Table { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCertificate {
    #[serde(with = "decimal")]
    pub a: f64,
    pub beta: SequenceSpec,
    pub sequence: LyapunovSource,
}

fn require(name: &str, value: f64, ok: bool, constraint: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, value, constraint))
    }
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    require("r", r, r > 0.0 && r < 1.0, "r in (0,1)")
}

pub(crate) fn check_big_n(n: f64) -> Result<()> {
    require("N", n, n >= 1.0, "N >= 1")
}

fn check_s(s: f64, r: f64, strong: bool) -> Result<()> {
    require("s", s, s >= 1.0, "s >= 1")?;
    if strong {
        require("s", s, s * r < 1.0, "s in [1, 1/r)")?;
    }
    Ok(())
}

impl SumCriterion {
    pub fn validate(&self, window: usize) -> Result<()> {
        require("p", self.p, self.p > 0.0, "p > 0")?;
        require("d", self.d, self.d > 1.0, "d > 1")?;
        match &self.bound {
            SumBound::Npis { theta } => {
                theta.tabulate("theta", window, SequenceRole::AtLeastOne)?;
            }
            SumBound::Upis { big_d } => require("D", *big_d, *big_d >= 1.0, "D >= 1")?,
            SumBound::Pis { big_d, c } => {
                require("D", *big_d, *big_d >= 1.0, "D >= 1")?;
                require("c", *c, *c > 1.0 && *c < self.d, "c in (1, d)")?;
            }
            SumBound::Spis { big_d, c } => {
                require("D", *big_d, *big_d >= 1.0, "D >= 1")?;
                require("c", *c, *c > 1.0 && c * c < self.d, "c > 1 with c^2 < d")?;
            }
        }
        Ok(())
    }

    /// `ln B(0..=window)`.
    pub fn log_bounds(&self, window: usize) -> Result<Vec<f64>> {
        Ok(match &self.bound {
            SumBound::Npis { theta } => theta.tabulate("theta", window, SequenceRole::AtLeastOne)?,
            SumBound::Upis { big_d } => vec![big_d.ln(); window + 1],
            SumBound::Pis { big_d, c } | SumBound::Spis { big_d, c } => (0..=window)
                .map(|m| big_d.ln() + m as f64 * c.ln())
                .collect(),
        })
    }
}

impl LyapunovCertificate {
    pub fn validate(&self, window: usize) -> Result<()> {
        require("a", self.a, self.a > 1.0, "a > 1")?;
        if let LyapunovSource::Canonical { d } = self.sequence {
            require("d", d, d > self.a, "d > a")?;
        }
        self.beta.tabulate("beta", window, SequenceRole::AtLeastOne)?;
        Ok(())
    }
}

impl Certificate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Certificate::Upis { .. } => "upis",
            Certificate::Npis { .. } => "npis",
            Certificate::Pis { .. } => "pis",
            Certificate::Spis { .. } => "spis",
            Certificate::PhiTau { .. } => "phi_tau",
            Certificate::Sum(_) => "sum",
            Certificate::Lyapunov(_) => "lyapunov",
        }
    }

    /// Checks every parameter range and sequence shape on `[0, window]`.
    pub fn validate(&self, window: usize) -> Result<()> {
        match self {
            Certificate::Upis { big_n, r } => {
                check_big_n(*big_n)?;
                check_rate(*r)
            }
            Certificate::Npis { big_n, r } => {
                check_rate(*r)?;
                big_n.tabulate("N", window, SequenceRole::AtLeastOne).map(|_| ())
            }
            Certificate::Pis { big_n, r, s } => {
                check_big_n(*big_n)?;
                check_rate(*r)?;
                check_s(*s, *r, false)
            }
            Certificate::Spis { big_n, r, s } => {
                check_big_n(*big_n)?;
                check_rate(*r)?;
                check_s(*s, *r, true)
            }
            Certificate::PhiTau { phi, tau } => {
                phi.tabulate("phi", window, SequenceRole::AtLeastOne)?;
                tau.tabulate("tau", window, SequenceRole::AtLeastOne)?;
                Ok(())
            }
            Certificate::Sum(sc) => sc.validate(window),
            Certificate::Lyapunov(lc) => lc.validate(window),
        }
    }

    /// Parses the inline mini-syntax. `load_table` resolves `table(path)`.
    pub fn parse_inline<F>(text: &str, load_table: F) -> Result<Self>
    where
        F: Fn(&str) -> Result<SequenceSpec>,
    {
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected kind:key=value,..., got {text:?}")))?;
        let fields = Fields::parse(body)?;
        let real = |k: &str| fields.real(k);
        let seq = |k: &str| fields.sequence(k, &load_table);
        let cert = match kind.trim() {
            "upis" => Certificate::Upis {
                big_n: real("N")?,
                r: real("r")?,
            },
            "npis" => Certificate::Npis {
                big_n: seq("N")?,
                r: real("r")?,
            },
            "pis" => Certificate::Pis {
                big_n: real("N")?,
                r: real("r")?,
                s: real("s")?,
            },
            "spis" => Certificate::Spis {
                big_n: real("N")?,
                r: real("r")?,
                s: real("s")?,
            },
            "phitau" | "phi_tau" => Certificate::PhiTau {
                phi: seq("phi")?,
                tau: seq("tau")?,
            },
            "sum-npis" | "sum-upis" | "sum-pis" | "sum-spis" => {
                let bound = match &kind.trim()[4..] {
                    "npis" => SumBound::Npis { theta: seq("theta")? },
                    "upis" => SumBound::Upis { big_d: real("D")? },
                    "pis" => SumBound::Pis {
                        big_d: real("D")?,
                        c: real("c")?,
                    },
                    _ => SumBound::Spis {
                        big_d: real("D")?,
                        c: real("c")?,
                    },
                };
                Certificate::Sum(SumCriterion {
                    p: real("p")?,
                    d: real("d")?,
                    bound,
                })
            }
            "lyapunov" => {
                let sequence = match fields.get("table") {
                    Some(path) => LyapunovSource::Table {
                        path: path.to_string(),
                    },
                    None => LyapunovSource::Canonical { d: real("d")? },
                };
                Certificate::Lyapunov(LyapunovCertificate {
                    a: real("a")?,
                    beta: seq("beta")?,
                    sequence,
                })
            }
            other => return Err(Error::Parse(format!("unknown certificate kind {other:?}"))),
        };
        fields.ensure_all_used()?;
        Ok(cert)
    }
}

struct Fields {
    entries: Vec<(String, String)>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl Fields {
    fn parse(body: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        let bytes = body.as_bytes();
        let mut push = |piece: &str| -> Result<()> {
            let piece = piece.trim();
            if piece.is_empty() {
                return Ok(());
            }
            let (k, v) = piece
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {piece:?}")))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
            Ok(())
        };
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b',' if depth == 0 => {
                    push(&body[start..i])?;
                    start = i + 1;
                }
                _ => {}
            }
        }
        push(&body[start..])?;
        let used = std::cell::RefCell::new(vec![false; entries.len()]);
        Ok(Fields { entries, used })
    }

    fn get(&self, key: &str) -> Option<&str> {
        let idx = self.entries.iter().position(|(k, _)| k == key)?;
        self.used.borrow_mut()[idx] = true;
        Some(&self.entries[idx].1)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("missing field {key}")))
    }

    fn real(&self, key: &str) -> Result<f64> {
        decimal::parse(self.require(key)?).map_err(Error::Parse)
    }

    fn sequence<F>(&self, key: &str, load_table: &F) -> Result<SequenceSpec>
    where
        F: Fn(&str) -> Result<SequenceSpec>,
    {
        parse_sequence(self.require(key)?, load_table)
    }

    fn ensure_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().zip(used.iter()).find(|(_, u)| !**u) {
            Some(((k, _), _)) => Err(Error::Parse(format!("unexpected field {k}"))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Upis { big_n, r } => write!(f, "UPIS{{N={big_n}, r={r}}}"),
            Certificate::Npis { big_n, r } => write!(f, "NPIS{{N={big_n}, r={r}}}"),
            Certificate::Pis { big_n, r, s } => write!(f, "PIS{{N={big_n}, r={r}, s={s}}}"),
            Certificate::Spis { big_n, r, s } => write!(f, "SPIS{{N={big_n}, r={r}, s={s}}}"),
            Certificate::PhiTau { phi, tau } => write!(f, "PhiTau{{phi={phi}, tau={tau}}}"),
            Certificate::Sum(sc) => {
                write!(f, "Sum{{p={}, d={}, ", sc.p, sc.d)?;
                match &sc.bound {
                    SumBound::Npis { theta } => write!(f, "theta={theta}}}"),
                    SumBound::Upis { big_d } => write!(f, "D={big_d}}}"),
                    SumBound::Pis { big_d, c } => write!(f, "pis D={big_d}, c={c}}}"),
                    SumBound::Spis { big_d, c } => write!(f, "spis D={big_d}, c={c}}}"),
                }
            }
            Certificate::Lyapunov(lc) => {
                write!(f, "Lyapunov{{a={}, beta={}, ", lc.a, lc.beta)?;
                match &lc.sequence {
                    LyapunovSource::Canonical { d } => write!(f, "canonical d={d}}}"),
                    LyapunovSource::Table { path } => write!(f, "table {path}}}"),
                }
            }
        }
    }
}
