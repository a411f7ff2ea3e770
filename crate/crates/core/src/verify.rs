//! Window verification of instability certificates and their equivalent
//! characterizations, plus the converters between them.
//!
//! Every check is an inequality `LHS <= RHS` evaluated in the log domain;
//! the report keeps the worst margin `ln RHS - ln LHS` and the
//! lexicographically first violating index. A PASS only means that no
//! violation exists up to the window and over the test vectors.

use rayon::prelude::*;

use crate::certificate::{check_rate, Certificate, SumBound, SumCriterion};
use crate::error::{Error, Result};
use crate::logmag::{log_add_exp, LogMagnitude};
use crate::report::{SweepOutcome, VerificationReport, Witness};
use crate::sequence::{SequenceRole, SequenceSpec};
use crate::system::System;

/// Sweeps all triples `p <= n <= m <= window`, checking
/// `gain(m,n,p) <= exp(log_coef(m, n))`.
pub(crate) fn triple_sweep<F>(system: &System, window: usize, log_coef: F) -> SweepOutcome
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    (0..=window)
        .into_par_iter()
        .map(|m| {
            let mut out = SweepOutcome::default();
            for n in 0..=m {
                let rhs = LogMagnitude::from_log(log_coef(m, n));
                system.visit_gains(m, n, |p, v, gain, _| {
                    out.record(Witness::triple(m, n, p, v), rhs.margin_over(gain));
                });
            }
            out
        })
        .reduce(SweepOutcome::default, SweepOutcome::merge)
}

/// Runs `check` on every trajectory `(n, x)`: the norms `‖𝒜(m,n)x‖` for
/// `m = n..=window`. Per-trajectory results come back in `(n, x)` order.
pub(crate) fn pair_sweep<T, F>(
    system: &System,
    window: usize,
    check: F,
) -> Result<(SweepOutcome, Vec<T>)>
where
    T: Send,
    F: Fn(usize, usize, &[LogMagnitude], &mut SweepOutcome) -> Result<T> + Sync,
{
    let nv = system.vector_count();
    let results: Vec<Result<(SweepOutcome, T)>> = (0..(window + 1) * nv)
        .into_par_iter()
        .map(|idx| {
            let (n, v) = (idx / nv, idx % nv);
            let norms = system.trajectory(n, v, window);
            let mut out = SweepOutcome::default();
            let extra = check(n, v, &norms, &mut out)?;
            Ok((out, extra))
        })
        .collect();
    let mut total = SweepOutcome::default();
    let mut extras = Vec::with_capacity(results.len());
    for r in results {
        let (out, extra) = r?;
        total = total.merge(out);
        extras.push(extra);
    }
    Ok((total, extras))
}

fn unit_norm(system: &System, vector: usize) -> LogMagnitude {
    let x = system.vectors().get(vector).expect("vector id in range");
    LogMagnitude::from_value(system.norm().of(x.as_slice()))
}

/// Checks one of the four triple-form certificates on `[0, window]`.
pub fn verify_certificate(
    system: &System,
    cert: &Certificate,
    window: usize,
) -> Result<VerificationReport> {
    system.check_window(window)?;
    cert.validate(window)?;
    let notes = system.gain_notes();
    let outcome = match cert {
        Certificate::Upis { big_n, r } => {
            let (ln_n, ln_r) = (big_n.ln(), r.ln());
            triple_sweep(system, window, |m, n| ln_n + (m - n) as f64 * ln_r)
        }
        Certificate::Npis { big_n, r } => {
            let ln_big_n = big_n.tabulate("N", window, SequenceRole::AtLeastOne)?;
            let ln_r = r.ln();
            triple_sweep(system, window, |m, n| ln_big_n[m] + (m - n) as f64 * ln_r)
        }
        Certificate::Pis { big_n, r, s } | Certificate::Spis { big_n, r, s } => {
            let (ln_n, ln_r, ln_s) = (big_n.ln(), r.ln(), s.ln());
            // s^n uses the middle index n
            triple_sweep(system, window, |m, n| {
                ln_n + (m - n) as f64 * ln_r + n as f64 * ln_s
            })
        }
        Certificate::PhiTau { .. } => return Err(Error::WrongCertificateKind("phi_tau")),
        Certificate::Sum(_) => return Err(Error::WrongCertificateKind("sum")),
        Certificate::Lyapunov(_) => return Err(Error::WrongCertificateKind("lyapunov")),
    };
    Ok(outcome.into_report(window, notes))
}

/// One refuted grid point.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Refutation {
    #[serde(rename = "N", with = "crate::decimal")]
    pub big_n: f64,
    #[serde(with = "crate::decimal")]
    pub r: f64,
    pub witness: Witness,
    #[serde(with = "crate::decimal")]
    pub margin: f64,
}

/// Tries every `UPIS{N, r}` on the grid and returns those that fail with
/// their first witness. Evidence against uniform instability, not proof.
pub fn refute_uniform(
    system: &System,
    n_grid: &[f64],
    r_grid: &[f64],
    window: usize,
) -> Result<Vec<Refutation>> {
    if n_grid.is_empty() || r_grid.is_empty() {
        return Err(Error::Parse("refutation grids must be nonempty".into()));
    }
    let mut out = Vec::new();
    for &big_n in n_grid {
        for &r in r_grid {
            let cert = Certificate::Upis { big_n, r };
            let report = verify_certificate(system, &cert, window)?;
            if let Some(witness) = report.witness {
                out.push(Refutation {
                    big_n,
                    r,
                    witness,
                    margin: report.worst_margin,
                });
            }
        }
    }
    Ok(out)
}

/// Checks `τ(m-n)‖x‖ <= φ(m)‖𝒜(m,n)x‖` for `n <= m <= window`.
pub fn verify_phi_tau(
    system: &System,
    phi: &SequenceSpec,
    tau: &SequenceSpec,
    window: usize,
) -> Result<VerificationReport> {
    system.check_window(window)?;
    let phi = phi.tabulate("phi", window, SequenceRole::AtLeastOne)?;
    let tau = tau.tabulate("tau", window, SequenceRole::AtLeastOne)?;
    let (outcome, _) = pair_sweep(system, window, |n, v, norms, out| {
        let x = unit_norm(system, v);
        for (j, state) in norms.iter().enumerate() {
            let m = n + j;
            let lhs = LogMagnitude::from_log(tau[j]) * x;
            let rhs = LogMagnitude::from_log(phi[m]) * *state;
            out.record(Witness::pair(m, n, v), rhs.margin_over(lhs));
        }
        Ok(())
    })?;
    Ok(outcome.into_report(window, system.gain_notes_for_pairs()))
}

/// NPIS{N, r} as the pair `φ = N`, `τ(k) = r^{-k}`.
pub fn npis_to_phi_tau(cert: &Certificate) -> Result<(SequenceSpec, SequenceSpec)> {
    match cert {
        Certificate::Npis { big_n, r } => {
            check_rate(*r)?;
            Ok((big_n.clone(), SequenceSpec::geometric(1.0 / r)))
        }
        other => Err(Error::WrongCertificateKind(other.kind_name())),
    }
}

/// Builds an NPIS certificate from a φ/τ pair by chaining steps of length c.
///
/// c is the smallest integer in `[1, window]` with `τ(c) > 1`,
/// `r = τ(c)^{-1/c}` and `N(m) = φ(m)^{⌊m/c⌋+1} / (τ(0) r^{c-1})`, clamped
/// to at least 1 and tabulated on the window.
pub fn phi_tau_to_npis(
    phi: &SequenceSpec,
    tau: &SequenceSpec,
    window: usize,
) -> Result<Certificate> {
    let ln_phi = phi.tabulate("phi", window, SequenceRole::AtLeastOne)?;
    let ln_tau = tau.tabulate("tau", window, SequenceRole::AtLeastOne)?;
    let c = (1..=window)
        .find(|&c| ln_tau[c] > 0.0)
        .ok_or(Error::NoGrowth { window })?;
    let ln_r = -ln_tau[c] / c as f64;
    let log_values: Vec<f64> = (0..=window)
        .map(|m| {
            let blocks = (m / c + 1) as f64;
            (blocks * ln_phi[m] - ln_tau[0] - (c - 1) as f64 * ln_r).max(0.0)
        })
        .collect();
    Ok(Certificate::Npis {
        big_n: SequenceSpec::table(log_values),
        r: ln_r.exp(),
    })
}

/// Checks `φ(m)‖x‖ <= ‖𝒜(m+n,n)x‖` for `m + n <= window`.
///
/// Witnesses report the elapsed step count as `m` and the start as `n`.
pub fn verify_upis_phi(
    system: &System,
    phi: &SequenceSpec,
    window: usize,
) -> Result<VerificationReport> {
    system.check_window(window)?;
    let phi = phi.tabulate("phi", window, SequenceRole::Positive)?;
    if phi[window] <= phi[0] {
        return Err(Error::InvalidSequence {
            name: "phi".into(),
            reason: format!("no growth on the window: phi({window}) <= phi(0)"),
        });
    }
    let (outcome, _) = pair_sweep(system, window, |n, v, norms, out| {
        let x = unit_norm(system, v);
        for (shift, state) in norms.iter().enumerate() {
            let lhs = LogMagnitude::from_log(phi[shift]) * x;
            out.record(Witness::pair(shift, n, v), state.margin_over(lhs));
        }
        Ok(())
    })?;
    let mut notes = system.gain_notes_for_pairs();
    notes.push("witness m is the number of elapsed steps".into());
    Ok(outcome.into_report(window, notes))
}

/// `S(m) = Σ_{k=n}^{m} d^{p(m-k)} ‖𝒜(k,n)x‖^p` for every m along a
/// trajectory, by the recurrence `S(m) = d^p S(m-1) + ‖𝒜(m,n)x‖^p`.
pub(crate) fn weighted_sums(norms: &[LogMagnitude], p: f64, ln_d: f64) -> Vec<LogMagnitude> {
    let step = p * ln_d;
    let mut acc = f64::NEG_INFINITY;
    norms
        .iter()
        .map(|state| {
            let term = state.ln() * p;
            acc = log_add_exp(acc + step, term);
            LogMagnitude::from_log(acc)
        })
        .collect()
}

fn check_p_d(p: f64, d: f64, allow_unit_d: bool) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param("p", p, "p > 0"));
    }
    let ok = if allow_unit_d { d >= 1.0 } else { d > 1.0 };
    if !(ok && d.is_finite()) {
        return Err(Error::param("d", d, "d > 1"));
    }
    Ok(())
}

/// `Σ_{k=n}^{m} d^{p(m-k)} ‖𝒜(k,n)x‖^p`, summed term by term with log-sum-exp.
pub fn sum_statistic(
    system: &System,
    p: f64,
    d: f64,
    m: usize,
    n: usize,
    vector: usize,
) -> Result<LogMagnitude> {
    check_p_d(p, d, false)?;
    sum_statistic_unchecked(system, p, d, m, n, vector)
}

pub(crate) fn sum_statistic_unchecked(
    system: &System,
    p: f64,
    d: f64,
    m: usize,
    n: usize,
    vector: usize,
) -> Result<LogMagnitude> {
    let ln_d = d.ln();
    let mut total = LogMagnitude::ZERO;
    for k in n..=m {
        let state = system.state_norm(k, n, vector)?;
        total = total.add(LogMagnitude::from_log((m - k) as f64 * p * ln_d) * state.powf(p));
    }
    Ok(total)
}

/// Result of a sum-criterion check.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SumReport {
    pub report: VerificationReport,
    /// Per m, the smallest bound value `B(m)` that would satisfy the
    /// inequality: `max_{n,x} (S / ‖𝒜(m,n)x‖^p)^{1/p}`.
    pub min_bound: Vec<LogMagnitude>,
}

/// Checks a weighted power-sum criterion on `[0, window]`.
pub fn verify_sum_criterion(
    system: &System,
    cert: &SumCriterion,
    window: usize,
) -> Result<SumReport> {
    system.check_window(window)?;
    cert.validate(window)?;
    let ln_bound = cert.log_bounds(window)?;
    let (p, ln_d) = (cert.p, cert.d.ln());
    let (outcome, per_trajectory) = pair_sweep(system, window, |n, v, norms, out| {
        let sums = weighted_sums(norms, p, ln_d);
        let mut needed = Vec::with_capacity(norms.len());
        for (j, (state, sum)) in norms.iter().zip(&sums).enumerate() {
            let m = n + j;
            let end = state.powf(p);
            let rhs = LogMagnitude::from_log(ln_bound[m] * p) * end;
            out.record(Witness::pair(m, n, v), rhs.margin_over(*sum));
            needed.push((m, (*sum / end).powf(1.0 / p)));
        }
        Ok(needed)
    })?;
    let mut min_bound = vec![LogMagnitude::ZERO; window + 1];
    for (m, need) in per_trajectory.into_iter().flatten() {
        min_bound[m] = min_bound[m].max(need);
    }
    Ok(SumReport {
        report: outcome.into_report(window, system.gain_notes_for_pairs()),
        min_bound,
    })
}

/// The certificate a passing sum criterion implies:
/// npis → NPIS{θ, 1/d}, upis → UPIS{D, 1/d}, pis → PIS{D, c/d, c},
/// spis → SPIS{D, c/d, c}.
pub fn sum_to_certificate(cert: &SumCriterion) -> Result<Certificate> {
    let d = cert.d;
    let out = match &cert.bound {
        SumBound::Npis { theta } => Certificate::Npis {
            big_n: theta.clone(),
            r: 1.0 / d,
        },
        SumBound::Upis { big_d } => Certificate::Upis {
            big_n: *big_d,
            r: 1.0 / d,
        },
        SumBound::Pis { big_d, c } => Certificate::Pis {
            big_n: *big_d,
            r: c / d,
            s: *c,
        },
        SumBound::Spis { big_d, c } => Certificate::Spis {
            big_n: *big_d,
            r: c / d,
            s: *c,
        },
    };
    Ok(out)
}

impl System {
    pub(crate) fn gain_notes_for_pairs(&self) -> Vec<String> {
        if self.is_scalar() {
            Vec::new()
        } else {
            vec![format!(
                "quantifier over x checked on {} test vectors",
                self.vector_count()
            )]
        }
    }
}
