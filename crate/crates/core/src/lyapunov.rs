//! Lyapunov sequences: the canonical construction from a rate `d`, user
//! tables, and the checks linking them to nonuniform instability.

use std::collections::BTreeMap;
use std::path::Path;

use crate::certificate::{check_rate, LyapunovSource};
use crate::decimal;
use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::report::{VerificationReport, Witness};
use crate::sequence::{SequenceRole, SequenceSpec};
use crate::system::System;
use crate::verify::{pair_sweep, sum_statistic_unchecked, weighted_sums};

/// Values `ln L(m,n,x)` keyed by `(m, n, vector_id)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LyapunovTable {
    values: BTreeMap<(usize, usize, usize), f64>,
}

impl LyapunovTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, m: usize, n: usize, vector: usize, log_value: f64) {
        self.values.insert((m, n, vector), log_value);
    }

    pub fn get(&self, m: usize, n: usize, vector: usize) -> Option<f64> {
        self.values.get(&(m, n, vector)).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Reads CSV with columns `m,n,vector_id,log_value`.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut table = LyapunovTable::new();
        for row in rdr.records() {
            let row = row?;
            let index = |i: usize| -> Result<usize> {
                row.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad index column {i} in {row:?}")))
            };
            let (m, n, v) = (index(0)?, index(1)?, index(2)?);
            if n > m {
                return Err(Error::Parse(format!("row with n={n} > m={m}")));
            }
            let value = decimal::parse(row.get(3).unwrap_or("")).map_err(Error::Parse)?;
            if value == f64::INFINITY {
                return Err(Error::Parse(format!("infinite value at ({m},{n},{v})")));
            }
            table.insert(m, n, v, value);
        }
        Ok(table)
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["m", "n", "vector_id", "log_value"])?;
        for (&(m, n, v), &value) in &self.values {
            w.write_record([
                m.to_string(),
                n.to_string(),
                v.to_string(),
                decimal::format(value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LyapunovSequence {
    /// `L(m,n,x) = Σ_{k=n}^{m} d^{m-k} ‖𝒜(k,n)x‖`
    Canonical { d: f64 },
    Table(LyapunovTable),
}

impl LyapunovSequence {
    pub fn canonical(d: f64) -> Result<Self> {
        if !(d > 1.0 && d.is_finite()) {
            return Err(Error::param("d", d, "d > 1"));
        }
        Ok(LyapunovSequence::Canonical { d })
    }

    /// Resolves a certificate source; table paths are read relative to the
    /// working directory.
    pub fn from_source(source: &LyapunovSource) -> Result<Self> {
        match source {
            LyapunovSource::Canonical { d } => Self::canonical(*d),
            LyapunovSource::Table { path } => {
                Ok(LyapunovSequence::Table(LyapunovTable::read_path(Path::new(path))?))
            }
        }
    }

    /// `L(m,n,x)` for `m = n..=n+norms.len()-1`, where `norms` is the
    /// trajectory of `(n, x)`.
    fn along(&self, n: usize, vector: usize, norms: &[LogMagnitude]) -> Result<Vec<LogMagnitude>> {
        match self {
            LyapunovSequence::Canonical { d } => Ok(weighted_sums(norms, 1.0, d.ln())),
            LyapunovSequence::Table(t) => (0..norms.len())
                .map(|j| {
                    let m = n + j;
                    t.get(m, n, vector)
                        .map(LogMagnitude::from_log)
                        .ok_or(Error::MissingLyapunovEntry { m, n, vector })
                })
                .collect(),
        }
    }

    /// Tabulates the sequence for every `(m, n, x)` on the window.
    pub fn to_table(&self, system: &System, window: usize) -> Result<LyapunovTable> {
        system.check_window(window)?;
        let (_, rows) = pair_sweep(system, window, |n, v, norms, _| {
            Ok((n, v, self.along(n, v, norms)?))
        })?;
        let mut table = LyapunovTable::new();
        for (n, v, values) in rows {
            for (j, value) in values.into_iter().enumerate() {
                table.insert(n + j, n, v, value.ln());
            }
        }
        Ok(table)
    }
}

/// `Σ_{k=n}^{m} d^{m-k} ‖𝒜(k,n)x‖`, summed term by term.
pub fn canonical_lyapunov(
    system: &System,
    d: f64,
    m: usize,
    n: usize,
    vector: usize,
) -> Result<LogMagnitude> {
    if !(d > 1.0 && d.is_finite()) {
        return Err(Error::param("d", d, "d > 1"));
    }
    sum_statistic_unchecked(system, 1.0, d, m, n, vector)
}

fn check_a(a: f64) -> Result<()> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::param("a", a, "a > 1"))
    }
}

fn unit_norm(system: &System, vector: usize) -> LogMagnitude {
    let x = system.vectors().get(vector).expect("vector id in range");
    LogMagnitude::from_value(system.norm().of(x.as_slice()))
}

/// Checks `L(n,n,x) = ‖x‖` and `L(m,n,x) - a L(m-1,n,x) >= ‖𝒜(m,n)x‖`
/// for `n < m <= window`.
///
/// The boundary equality contributes margin `-|ln L(n,n,x) - ln ‖x‖|`.
pub fn verify_lyapunov_definition(
    system: &System,
    lyapunov: &LyapunovSequence,
    a: f64,
    window: usize,
) -> Result<VerificationReport> {
    check_a(a)?;
    system.check_window(window)?;
    let ln_a = LogMagnitude::from_log(a.ln());
    let (outcome, _) = pair_sweep(system, window, |n, v, norms, out| {
        let values = lyapunov.along(n, v, norms)?;
        let x = unit_norm(system, v);
        let boundary = -(values[0].ln() - x.ln()).abs();
        out.record(Witness::pair(n, n, v), if boundary.is_nan() { 0.0 } else { boundary });
        for j in 1..values.len() {
            let lhs = (ln_a * values[j - 1]).add(norms[j]);
            out.record(Witness::pair(n + j, n, v), values[j].margin_over(lhs));
        }
        Ok(())
    })?;
    Ok(outcome.into_report(window, system.gain_notes_for_pairs()))
}

/// Checks `L(m,n,x) <= β(m) ‖𝒜(m,n)x‖` for `n <= m <= window`.
pub fn verify_lyapunov_bound(
    system: &System,
    lyapunov: &LyapunovSequence,
    beta: &SequenceSpec,
    window: usize,
) -> Result<VerificationReport> {
    system.check_window(window)?;
    let beta = beta.tabulate("beta", window, SequenceRole::AtLeastOne)?;
    let (outcome, _) = pair_sweep(system, window, |n, v, norms, out| {
        let values = lyapunov.along(n, v, norms)?;
        for (j, (value, state)) in values.iter().zip(norms).enumerate() {
            let m = n + j;
            let rhs = LogMagnitude::from_log(beta[m]) * *state;
            out.record(Witness::pair(m, n, v), rhs.margin_over(*value));
        }
        Ok(())
    })?;
    Ok(outcome.into_report(window, system.gain_notes_for_pairs()))
}

/// Checks the telescoped form of the definition,
/// `Σ_{j=n}^{m} a^{m-j} ‖𝒜(j,n)x‖ <= L(m,n,x)`, in one sweep.
pub fn verify_telescoped_lower_bound(
    system: &System,
    lyapunov: &LyapunovSequence,
    a: f64,
    window: usize,
) -> Result<VerificationReport> {
    check_a(a)?;
    system.check_window(window)?;
    let ln_a = a.ln();
    let (outcome, _) = pair_sweep(system, window, |n, v, norms, out| {
        let values = lyapunov.along(n, v, norms)?;
        let chain = weighted_sums(norms, 1.0, ln_a);
        for (j, (value, lower)) in values.iter().zip(&chain).enumerate() {
            out.record(Witness::pair(n + j, n, v), value.margin_over(*lower));
        }
        Ok(())
    })?;
    Ok(outcome.into_report(window, system.gain_notes_for_pairs()))
}

/// The φ/τ pair implied by a Lyapunov sequence with rate `a` and bound `β`:
/// `φ = β`, `τ(k) = a^k`.
pub fn lyapunov_to_npis(a: f64, beta: &SequenceSpec) -> Result<(SequenceSpec, SequenceSpec)> {
    check_a(a)?;
    Ok((beta.clone(), SequenceSpec::geometric(a)))
}

/// Default rates for an NPIS rate r: `d = (1 + 1/r)/2`, `a = (1 + d)/2`.
pub fn default_rates(r: f64) -> Result<(f64, f64)> {
    check_rate(r)?;
    let d = (1.0 + 1.0 / r) / 2.0;
    Ok((d, (1.0 + d) / 2.0))
}

/// `β(m) = N(m) / (1 - d r)` for the canonical sequence built from NPIS{N, r}.
pub fn npis_beta(big_n: &SequenceSpec, r: f64, d: f64) -> Result<SequenceSpec> {
    check_rate(r)?;
    if !(d > 1.0 && d * r < 1.0) {
        return Err(Error::param("d", d, "d in (1, 1/r)"));
    }
    Ok(big_n.clone().scaled(1.0 / (1.0 - d * r)))
}

/// Checks `Σ_{k=n}^{m} ‖𝒜(k,n)x‖ <= θ(m) ‖𝒜(m,n)x‖` for `n <= m <= window`.
pub fn verify_unweighted_sum(
    system: &System,
    theta: &SequenceSpec,
    window: usize,
) -> Result<VerificationReport> {
    system.check_window(window)?;
    let theta = theta.tabulate("theta", window, SequenceRole::AtLeastOne)?;
    let (outcome, _) = pair_sweep(system, window, |n, v, norms, out| {
        let sums = weighted_sums(norms, 1.0, 0.0);
        for (j, (sum, state)) in sums.iter().zip(norms).enumerate() {
            let m = n + j;
            let rhs = LogMagnitude::from_log(theta[m]) * *state;
            out.record(Witness::pair(m, n, v), rhs.margin_over(*sum));
        }
        Ok(())
    })?;
    Ok(outcome.into_report(window, system.gain_notes_for_pairs()))
}
