//! Verification reports and the margin/witness accumulator shared by every
//! sweep.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decimal;

/// Margins at or above `-EPSILON` (log units) count as satisfied.
pub const EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("PASS-on-window"),
            Verdict::Fail => f.write_str("FAIL"),
        }
    }
}

/// Location of one inequality instance. Ordered lexicographically by
/// `(m, n, p, vector)`; `None` sorts first.
///
/// Pair checks leave `p` empty. `vector` is empty when the supremum over x
/// was computed exactly rather than sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Witness {
    pub m: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vector: Option<usize>,
}

impl Witness {
    pub fn triple(m: usize, n: usize, p: usize, vector: Option<usize>) -> Self {
        Witness {
            m,
            n,
            p: Some(p),
            vector,
        }
    }

    pub fn pair(m: usize, n: usize, vector: usize) -> Self {
        Witness {
            m,
            n,
            p: None,
            vector: Some(vector),
        }
    }

    /// `(m, n, p)` with a missing p read as 0.
    pub fn indices(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.p.unwrap_or(0))
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p {
            Some(p) => write!(f, "(m={}, n={}, p={})", self.m, self.n, p)?,
            None => write!(f, "(m={}, n={})", self.m, self.n)?,
        }
        match self.vector {
            Some(v) => write!(f, " x#{v}"),
            None => write!(f, " sup_x"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub window: usize,
    pub triples_checked: u64,
    /// Minimum over all checks of `ln RHS - ln LHS`.
    #[serde(with = "decimal")]
    pub worst_margin: f64,
    pub worst_at: Option<Witness>,
    /// Lexicographically smallest check with margin below `-EPSILON`.
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Aligned human-readable rendering.
    pub fn to_text(&self, title: &str) -> String {
        let mut out = String::new();
        let row = |k: &str, v: String| format!("  {k:<16}{v}\n");
        out.push_str(&format!("{title}\n"));
        out.push_str(&row("verdict", self.verdict.to_string()));
        out.push_str(&row("window", format!("M = {}", self.window)));
        out.push_str(&row("checks", self.triples_checked.to_string()));
        out.push_str(&row("worst margin", format!("{:.6e}", self.worst_margin + 0.0)));
        if let Some(w) = self.worst_at {
            out.push_str(&row("worst at", w.to_string()));
        }
        if let Some(w) = self.witness {
            out.push_str(&row("witness", w.to_string()));
        }
        for note in &self.notes {
            out.push_str(&row("note", note.clone()));
        }
        out
    }
}

/// Running reduction of a sweep. Merging is associative and commutative,
/// so any parallel schedule produces the same result.
#[derive(Clone, Debug, Default)]
pub(crate) struct SweepOutcome {
    pub checked: u64,
    pub worst: Option<(f64, Witness)>,
    pub first_violation: Option<Witness>,
}

impl SweepOutcome {
    pub fn record(&mut self, at: Witness, margin: f64) {
        debug_assert!(!margin.is_nan(), "NaN margin at {at}");
        self.checked += 1;
        match self.worst {
            Some((w, key)) if w < margin || (w == margin && key <= at) => {}
            _ => self.worst = Some((margin, at)),
        }
        if margin < -EPSILON && self.first_violation.is_none_or(|f| at < f) {
            self.first_violation = Some(at);
        }
    }

    pub fn merge(mut self, other: SweepOutcome) -> SweepOutcome {
        self.checked += other.checked;
        if let Some((margin, at)) = other.worst {
            match self.worst {
                Some((w, key)) if w < margin || (w == margin && key <= at) => {}
                _ => self.worst = Some((margin, at)),
            }
        }
        if let Some(at) = other.first_violation {
            if self.first_violation.is_none_or(|f| at < f) {
                self.first_violation = Some(at);
            }
        }
        self
    }

    pub fn into_report(self, window: usize, notes: Vec<String>) -> VerificationReport {
        let worst_margin = self.worst.map_or(f64::INFINITY, |(m, _)| m);
        VerificationReport {
            verdict: if self.first_violation.is_some() {
                Verdict::Fail
            } else {
                Verdict::Pass
            },
            window,
            triples_checked: self.checked,
            worst_margin,
            worst_at: self.worst.map(|(_, w)| w),
            witness: self.first_violation,
            notes,
        }
    }
}
