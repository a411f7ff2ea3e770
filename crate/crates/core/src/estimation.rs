//! Best-feasible constants fitted to finite-window growth data.
//!
//! Every estimate is a uniform bound over the data it was fitted to, so the
//! resulting certificate passes on the same window (up to a relative slack
//! of `SLACK`). Nothing here says anything about longer windows.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{check_rate, Certificate};
use crate::decimal;
use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::report::Witness;
use crate::sequence::SequenceSpec;
use crate::system::System;

/// Relative slack applied when turning an estimate into a certificate.
pub const SLACK: f64 = 1e-6;
/// `r̂` above `1 - DECAY_CUT` counts as no decay on the window.
pub const DECAY_CUT: f64 = 1e-3;
/// SPIS admissibility requires `ŝ < 1/r - SPIS_MARGIN`.
pub const SPIS_MARGIN: f64 = 1e-6;
pub const DEFAULT_K_MIN: usize = 5;

/// Largest gain over `p` and test vectors for every pair `n <= m <= window`,
/// with the lexicographically first triple attaining it.
struct PairMaxima {
    rows: Vec<Vec<(LogMagnitude, Witness)>>,
}

impl PairMaxima {
    fn compute(system: &System, window: usize) -> Self {
        let rows = (0..=window)
            .into_par_iter()
            .map(|m| {
                (0..=m)
                    .map(|n| {
                        let mut best: Option<(LogMagnitude, Witness)> = None;
                        system.visit_gains(m, n, |p, v, gain, _| {
                            if best.is_none_or(|(g, _)| gain > g) {
                                best = Some((gain, Witness::triple(m, n, p, v)));
                            }
                        });
                        best.expect("at least one gain per pair")
                    })
                    .collect()
            })
            .collect();
        PairMaxima { rows }
    }

    fn get(&self, m: usize, n: usize) -> (LogMagnitude, Witness) {
        self.rows[m][n]
    }
}

/// `g(k)`: the largest gain over all triples with `m - n = k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub window: usize,
    pub g: Vec<LogMagnitude>,
    pub argmax: Vec<Witness>,
    /// False when some gains are sampled lower bounds.
    pub exact: bool,
}

pub fn growth_profile(system: &System, window: usize) -> Result<GrowthProfile> {
    system.check_window(window)?;
    let pairs = PairMaxima::compute(system, window);
    let mut g = vec![LogMagnitude::ZERO; window + 1];
    let mut argmax: Vec<Option<Witness>> = vec![None; window + 1];
    for m in 0..=window {
        for n in 0..=m {
            let (gain, at) = pairs.get(m, n);
            let k = m - n;
            let better = match argmax[k] {
                None => true,
                Some(prev) => gain > g[k] || (gain == g[k] && at < prev),
            };
            if better {
                g[k] = gain;
                argmax[k] = Some(at);
            }
        }
    }
    Ok(GrowthProfile {
        window,
        g,
        argmax: argmax.into_iter().map(|w| w.expect("every k is attained")).collect(),
        exact: system.gains_exact(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InfeasibleReason {
    /// `r̂ >= 1 - DECAY_CUT`.
    NoDecay,
    /// `g(k) = 0` for every `k >= k_min`, so no positive rate is pinned down.
    DegenerateProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum UpisEstimate {
    Feasible {
        #[serde(rename = "N", with = "decimal")]
        big_n: f64,
        #[serde(with = "decimal")]
        r: f64,
    },
    Infeasible {
        reason: InfeasibleReason,
        #[serde(rename = "r_hat", with = "decimal")]
        r: f64,
    },
}

impl UpisEstimate {
    /// The estimate bumped by `SLACK`, with r kept below 1.
    pub fn certificate(&self) -> Option<Certificate> {
        match *self {
            UpisEstimate::Feasible { big_n, r } => Some(Certificate::Upis {
                big_n: big_n * (1.0 + SLACK),
                r: (r * (1.0 + SLACK)).min(1.0 - f64::EPSILON),
            }),
            UpisEstimate::Infeasible { .. } => None,
        }
    }
}

/// `r̂ = max_{k >= k_min} g(k)^{1/k}`, `N̂ = max_k g(k) r̂^{-k}`.
pub fn estimate_upis(profile: &GrowthProfile, k_min: usize) -> Result<UpisEstimate> {
    let needed = k_min + 2;
    if profile.window < needed || k_min == 0 {
        return Err(Error::WindowTooSmall {
            window: profile.window,
            needed: needed.max(3),
        });
    }
    let ln_r = (k_min..=profile.window)
        .map(|k| profile.g[k].ln() / k as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    if ln_r == f64::NEG_INFINITY {
        return Ok(UpisEstimate::Infeasible {
            reason: InfeasibleReason::DegenerateProfile,
            r: 0.0,
        });
    }
    let r = ln_r.exp();
    if r >= 1.0 - DECAY_CUT {
        return Ok(UpisEstimate::Infeasible {
            reason: InfeasibleReason::NoDecay,
            r,
        });
    }
    let ln_n = profile
        .g
        .iter()
        .enumerate()
        .map(|(k, g)| g.ln() - k as f64 * ln_r)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(UpisEstimate::Feasible {
        big_n: ln_n.exp(),
        r,
    })
}

fn unbounded(m: usize) -> Error {
    Error::InvalidSequence {
        name: "N".into(),
        reason: format!("gain is unbounded at m = {m}; no finite envelope"),
    }
}

/// Smallest nondecreasing `N̂(m) >= 1` with `gain(m,n,p) <= N̂(m) r^{m-n}`
/// on the window, as a table.
pub fn estimate_npis_envelope(system: &System, r: f64, window: usize) -> Result<SequenceSpec> {
    check_rate(r)?;
    system.check_window(window)?;
    let pairs = PairMaxima::compute(system, window);
    Ok(SequenceSpec::table(npis_envelope_logs(&pairs, r.ln(), window)?))
}

fn npis_envelope_logs(pairs: &PairMaxima, ln_r: f64, window: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(window + 1);
    let mut running = 0.0f64;
    for m in 0..=window {
        for n in 0..=m {
            let need = pairs.get(m, n).0.ln() - (m - n) as f64 * ln_r;
            if need == f64::INFINITY {
                return Err(unbounded(m));
            }
            running = running.max(need);
        }
        out.push(running);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Pis,
    Spis,
}

/// One r of a feasibility scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityRow {
    #[serde(with = "decimal")]
    pub r: f64,
    /// Minimal `s >= 1` given `N̂`; infinite when no s works.
    #[serde(with = "decimal")]
    pub s_hat: f64,
    #[serde(rename = "N_hat", with = "decimal")]
    pub big_n: f64,
    pub admissible: bool,
}

impl FeasibilityRow {
    /// PIS (or SPIS) certificate bumped by `SLACK`, when admissible.
    pub fn certificate(&self, kind: ScanKind) -> Option<Certificate> {
        if !self.admissible {
            return None;
        }
        let big_n = self.big_n * (1.0 + SLACK);
        let s = self.s_hat * (1.0 + SLACK);
        Some(match kind {
            ScanKind::Pis => Certificate::Pis { big_n, r: self.r, s },
            ScanKind::Spis => Certificate::Spis {
                big_n,
                r: self.r,
                s: s.min(self.s_hat + SPIS_MARGIN / 2.0),
            },
        })
    }
}

/// For each r, `N̂₀ = max(1, max_m gain(m,0,0) r^{-m})` and
/// `ŝ = exp(max_{n >= 1} max(0, (ln gain - (m-n) ln r - ln N̂₀) / n))`.
///
/// PIS is admissible when ŝ is finite, SPIS when `ŝ < 1/r - SPIS_MARGIN`.
pub fn feasibility_scan(
    system: &System,
    kind: ScanKind,
    r_grid: &[f64],
    window: usize,
) -> Result<Vec<FeasibilityRow>> {
    system.check_window(window)?;
    for &r in r_grid {
        check_rate(r)?;
    }
    let pairs = PairMaxima::compute(system, window);
    let rows = r_grid
        .iter()
        .map(|&r| {
            let ln_r = r.ln();
            let ln_n = (0..=window)
                .map(|m| pairs.get(m, 0).0.ln() - m as f64 * ln_r)
                .fold(0.0f64, f64::max);
            let mut ln_s = 0.0f64;
            for m in 1..=window {
                for n in 1..=m {
                    let excess = pairs.get(m, n).0.ln() - (m - n) as f64 * ln_r - ln_n;
                    ln_s = ln_s.max(excess / n as f64);
                }
            }
            let s_hat = ln_s.exp();
            let admissible = ln_n.is_finite()
                && s_hat.is_finite()
                && match kind {
                    ScanKind::Pis => true,
                    ScanKind::Spis => s_hat < 1.0 / r - SPIS_MARGIN,
                };
            FeasibilityRow {
                r,
                s_hat,
                big_n: ln_n.exp(),
                admissible,
            }
        })
        .collect();
    Ok(rows)
}

/// Writes `k,log_g,m,n,p` rows.
pub fn write_profile_csv<W: std::io::Write>(writer: W, profile: &GrowthProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "log_g", "m", "n", "p"])?;
    for (k, (g, at)) in profile.g.iter().zip(&profile.argmax).enumerate() {
        let (m, n, p) = at.indices();
        w.write_record([
            k.to_string(),
            decimal::format(g.ln()),
            m.to_string(),
            n.to_string(),
            p.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `r,s_hat,N_hat,admissible` rows.
pub fn write_scan_csv<W: std::io::Write>(writer: W, rows: &[FeasibilityRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["r", "s_hat", "N_hat", "admissible"])?;
    for row in rows {
        w.write_record([
            decimal::format(row.r),
            decimal::format(row.s_hat),
            decimal::format(row.big_n),
            row.admissible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
