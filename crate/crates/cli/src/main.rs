//! `powinst`: finite-window power-instability analysis from the command line.
//!
//! Exit codes: 0 on PASS or a completed analysis, 1 on a FAIL verdict,
//! 2 on malformed input.

mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use powinst::catalog::EXAMPLE_NAMES;
use powinst::estimation::{
    estimate_npis_envelope, estimate_upis, feasibility_scan, growth_profile, write_profile_csv,
    write_scan_csv, ScanKind, DECAY_CUT, SLACK, SPIS_MARGIN,
};
use powinst::lyapunov::{
    default_rates, lyapunov_to_npis, npis_beta, verify_lyapunov_bound,
    verify_lyapunov_definition,
};
use powinst::verify::{
    refute_uniform, sum_to_certificate, verify_certificate, verify_phi_tau,
    verify_sum_criterion, verify_upis_phi,
};
use powinst::{
    build_system, Certificate, ExampleId, LyapunovSequence, System,
    VerificationReport,
};

use output::{report_csv, report_text, Digests, Envelope, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Analysis(#[from] powinst::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "powinst",
    version,
    about = "Finite-window power-instability analysis of x(n+1) = A(n) x(n)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Catalog system name (see `powinst catalog`)
    #[arg(long, conflicts_with = "system")]
    example: Option<String>,
    /// Catalog parameter, repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// SystemSpec JSON file
    #[arg(long, value_name = "FILE")]
    system: Option<PathBuf>,
    /// Largest index M checked
    #[arg(long, default_value_t = 40)]
    window: usize,
    /// Overrides the test-vector seed of a matrix system
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: POWINST_THREADS or all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a certificate or characterization on the window
    Verify {
        #[command(flatten)]
        common: Common,
        /// Inline `kind:key=value,...` or a certificate JSON file
        #[arg(long, required_unless_present = "phi")]
        cert: Option<String>,
        /// Check the uniform growth form φ(m)‖x‖ <= ‖𝒜(m+n,n)x‖ instead
        #[arg(long, conflicts_with = "cert")]
        phi: Option<String>,
    },
    /// Search a grid of UPIS constants for violations
    Refute {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,100,1000000")]
        n_grid: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
        )]
        r_grid: Vec<f64>,
    },
    /// Fit instability constants to the window's growth data
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: EstimateKind,
        /// Rate for the npis envelope
        #[arg(long)]
        r: Option<f64>,
        /// Rates for pis/spis scans
        #[arg(long, value_delimiter = ',')]
        r_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = powinst::estimation::DEFAULT_K_MIN)]
        k_min: usize,
    },
    /// Check a Lyapunov sequence, or build one from an NPIS certificate
    Lyapunov {
        #[command(flatten)]
        common: Common,
        /// `lyapunov:a=..,beta=..,d=..` (or `table=FILE`) or a JSON file
        #[arg(long, required_unless_present = "from_npis")]
        cert: Option<String>,
        /// NPIS certificate to build the canonical sequence from
        #[arg(long, conflicts_with = "cert")]
        from_npis: Option<String>,
        /// Write the sequence values as CSV (m,n,vector_id,log_value)
        #[arg(long, value_name = "FILE")]
        export: Option<PathBuf>,
    },
    /// Check a weighted power-sum criterion and the certificate it implies
    Sum {
        #[command(flatten)]
        common: Common,
        /// `sum-npis:p=..,d=..,theta=..` and friends, or a JSON file
        #[arg(long)]
        cert: String,
    },
    /// Growth profile g(k): largest gain with m - n = k
    Profile {
        #[command(flatten)]
        common: Common,
    },
    /// List catalog systems, or print one as SystemSpec JSON
    Catalog {
        #[arg(long)]
        example: Option<String>,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long, default_value_t = 40)]
        window: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimateKind {
    Upis,
    Npis,
    Pis,
    Spis,
}

/// What a command produced: text for stdout and the exit status.
struct Emitted {
    text: String,
    failed: bool,
}

struct Session {
    system: System,
    window: usize,
    format: Format,
    digests: Digests,
}

impl Session {
    fn open(common: &Common) -> Result<Self, CliError> {
        configure_threads(common.threads)?;
        let spec = inputs::load_system(
            common.example.as_deref(),
            &common.params,
            common.system.as_deref(),
            common.window,
            common.seed,
        )?;
        let system = build_system(spec.clone())?;
        system.check_window(common.window)?;
        let mut digests = Digests::default();
        digests.add("system", &spec)?;
        Ok(Session {
            system,
            window: common.window,
            format: common.format,
            digests,
        })
    }

    fn reports(
        self,
        command: &'static str,
        checks: Vec<(&'static str, VerificationReport)>,
        extra: Option<serde_json::Value>,
    ) -> Result<Emitted, CliError> {
        let failed = checks.iter().any(|(_, r)| !r.passed());
        let rows: Vec<(&str, &VerificationReport)> =
            checks.iter().map(|(n, r)| (*n, r)).collect();
        let text = match self.format {
            Format::Text => report_text(&rows),
            Format::Csv => report_csv(&rows),
            Format::Json => {
                #[derive(Serialize)]
                struct Single<'a> {
                    check: &'a str,
                    #[serde(flatten)]
                    report: serde_json::Value,
                    #[serde(flatten, skip_serializing_if = "Option::is_none")]
                    extra: Option<serde_json::Value>,
                }
                #[derive(Serialize)]
                struct Many<'a> {
                    verdict: &'static str,
                    checks: Vec<Single<'a>>,
                    #[serde(flatten, skip_serializing_if = "Option::is_none")]
                    extra: Option<serde_json::Value>,
                }
                // the envelope already carries the window
                let strip = |r: &VerificationReport| -> Result<serde_json::Value, CliError> {
                    let mut v = serde_json::to_value(r)?;
                    if let Some(map) = v.as_object_mut() {
                        map.remove("window");
                    }
                    Ok(v)
                };
                if let [(check, report)] = rows.as_slice() {
                    let body = Single {
                        check,
                        report: strip(report)?,
                        extra,
                    };
                    Envelope::new(command, self.digests, self.window, body).to_json()?
                } else {
                    let body = Many {
                        verdict: if failed { "FAIL" } else { "PASS" },
                        checks: rows
                            .iter()
                            .map(|(check, report)| {
                                Ok(Single {
                                    check,
                                    report: strip(report)?,
                                    extra: None,
                                })
                            })
                            .collect::<Result<_, CliError>>()?,
                        extra,
                    };
                    Envelope::new(command, self.digests, self.window, body).to_json()?
                }
            }
        };
        Ok(Emitted { text, failed })
    }

    fn document<T: Serialize>(
        self,
        command: &'static str,
        body: T,
        csv: impl FnOnce() -> Result<String, CliError>,
        text: impl FnOnce() -> String,
    ) -> Result<Emitted, CliError> {
        let text = match self.format {
            Format::Json => Envelope::new(command, self.digests, self.window, body).to_json()?,
            Format::Csv => csv()?,
            Format::Text => text(),
        };
        Ok(Emitted {
            text,
            failed: false,
        })
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("POWINST_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                CliError::Usage(format!("POWINST_THREADS must be a count, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> powinst::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn run_verify(common: Common, cert: Option<String>, phi: Option<String>) -> Result<Emitted, CliError> {
    let mut s = Session::open(&common)?;
    if let Some(phi) = phi {
        let phi = inputs::load_sequence(&phi)?;
        s.digests.add("phi", &phi)?;
        let report = verify_upis_phi(&s.system, &phi, s.window)?;
        return s.reports("verify", vec![("upis_phi", report)], None);
    }
    let cert = inputs::load_certificate(cert.as_deref().expect("clap requires --cert"))?;
    s.digests.add("certificate", &cert)?;
    let window = s.window;
    match &cert {
        Certificate::PhiTau { phi, tau } => {
            let report = verify_phi_tau(&s.system, phi, tau, window)?;
            s.reports("verify", vec![("phi_tau", report)], None)
        }
        Certificate::Sum(crit) => {
            let sum = verify_sum_criterion(&s.system, crit, window)?;
            s.reports("verify", vec![("sum", sum.report)], None)
        }
        Certificate::Lyapunov(_) => lyapunov_checks(s, &cert),
        _ => {
            let report = verify_certificate(&s.system, &cert, window)?;
            s.reports("verify", vec![(cert.kind_name(), report)], None)
        }
    }
}

fn run_refute(common: Common, n_grid: Vec<f64>, r_grid: Vec<f64>) -> Result<Emitted, CliError> {
    let mut s = Session::open(&common)?;
    s.digests.add("n_grid", &n_grid)?;
    s.digests.add("r_grid", &r_grid)?;
    let found = refute_uniform(&s.system, &n_grid, &r_grid, s.window)?;
    #[derive(Serialize)]
    struct Body<'a> {
        grid_points: usize,
        refuted: usize,
        witnesses: &'a [powinst::verify::Refutation],
    }
    let body = Body {
        grid_points: n_grid.len() * r_grid.len(),
        refuted: found.len(),
        witnesses: &found,
    };
    let csv = || {
        let mut out = String::from("N,r,m,n,p,margin\n");
        for f in &found {
            let (m, n, p) = f.witness.indices();
            out.push_str(&format!(
                "{},{},{m},{n},{p},{}\n",
                powinst::decimal::format(f.big_n),
                powinst::decimal::format(f.r),
                powinst::decimal::format(f.margin)
            ));
        }
        Ok(out)
    };
    let text = || {
        let mut out = format!(
            "UPIS refutation on window M = {}: {} of {} grid points refuted\n",
            common.window,
            found.len(),
            n_grid.len() * r_grid.len()
        );
        for f in &found {
            out.push_str(&format!("  N={:<10} r={:<6} witness {}\n", f.big_n, f.r, f.witness));
        }
        out
    };
    s.document("refute", body, csv, text)
}

fn run_estimate(
    common: Common,
    kind: EstimateKind,
    r: Option<f64>,
    r_grid: Option<Vec<f64>>,
    k_min: usize,
) -> Result<Emitted, CliError> {
    let s = Session::open(&common)?;
    let window = s.window;
    #[derive(Serialize)]
    struct Provenance {
        window: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        k_min: Option<usize>,
        tolerance: f64,
        flags: Vec<String>,
    }
    let mut flags = Vec::new();
    if !s.system.gains_exact() {
        flags.push("sampled gains: estimates are lower bounds over the test vectors".to_string());
    }
    match kind {
        EstimateKind::Upis => {
            let profile = growth_profile(&s.system, window)?;
            let estimate = estimate_upis(&profile, k_min)?;
            flags.push(format!("feasible only if r_hat <= 1 - {DECAY_CUT}"));
            #[derive(Serialize)]
            struct Body {
                #[serde(flatten)]
                estimate: powinst::UpisEstimate,
                #[serde(skip_serializing_if = "Option::is_none")]
                certificate: Option<Certificate>,
                provenance: Provenance,
            }
            let certificate = match estimate {
                powinst::UpisEstimate::Feasible { big_n, r } => {
                    Some(Certificate::Upis { big_n, r })
                }
                _ => None,
            };
            let text = format!("{}\n", serde_json::to_string(&estimate)?);
            let body = Body {
                estimate,
                certificate,
                provenance: Provenance {
                    window,
                    k_min: Some(k_min),
                    tolerance: SLACK,
                    flags,
                },
            };
            s.document(
                "estimate",
                body,
                || csv_string(|w| write_profile_csv(w, &profile)),
                || text,
            )
        }
        EstimateKind::Npis => {
            let r = r.ok_or_else(|| CliError::Usage("--kind npis needs --r".into()))?;
            let big_n = estimate_npis_envelope(&s.system, r, window)?;
            let certificate = Certificate::Npis {
                big_n: big_n.clone(),
                r,
            };
            let logs: Vec<f64> = (0..=window).map(|m| big_n.log_at(m)).collect();
            #[derive(Serialize)]
            struct Body {
                status: &'static str,
                certificate: Certificate,
                provenance: Provenance,
            }
            let text = logs
                .iter()
                .enumerate()
                .map(|(m, v)| format!("  N_hat({m}) = exp({v})\n"))
                .collect::<String>();
            let body = Body {
                status: "feasible",
                certificate,
                provenance: Provenance {
                    window,
                    k_min: None,
                    tolerance: SLACK,
                    flags,
                },
            };
            s.document(
                "estimate",
                body,
                || csv_string(|w| powinst::sequence::write_table_csv(w, &logs)),
                || text,
            )
        }
        EstimateKind::Pis | EstimateKind::Spis => {
            let scan_kind = if kind == EstimateKind::Pis {
                ScanKind::Pis
            } else {
                ScanKind::Spis
            };
            let grid = r_grid
                .or(r.map(|r| vec![r]))
                .unwrap_or_else(|| (1..100).map(|i| i as f64 / 100.0).collect());
            let rows = feasibility_scan(&s.system, scan_kind, &grid, window)?;
            if scan_kind == ScanKind::Spis {
                flags.push(format!("admissible only if s_hat < 1/r - {SPIS_MARGIN}"));
            }
            #[derive(Serialize)]
            struct Body<'a> {
                kind: ScanKind,
                admissible: usize,
                rows: &'a [powinst::estimation::FeasibilityRow],
                provenance: Provenance,
            }
            let admissible = rows.iter().filter(|r| r.admissible).count();
            let text = || {
                let mut out = format!("{admissible} of {} rates admissible\n", rows.len());
                for r in &rows {
                    out.push_str(&format!(
                        "  r={:<6} s_hat={:<12.6} N_hat={:<12.6} {}\n",
                        r.r,
                        r.s_hat,
                        r.big_n,
                        if r.admissible { "admissible" } else { "-" }
                    ));
                }
                out
            };
            let text = text();
            let body = Body {
                kind: scan_kind,
                admissible,
                rows: &rows,
                provenance: Provenance {
                    window,
                    k_min: None,
                    tolerance: SLACK,
                    flags,
                },
            };
            s.document("estimate", body, || csv_string(|w| write_scan_csv(w, &rows)), || text)
        }
    }
}

/// Definition, bound and the implied φ/τ check for a Lyapunov certificate.
fn lyapunov_checks(s: Session, cert: &Certificate) -> Result<Emitted, CliError> {
    let Certificate::Lyapunov(lc) = cert else {
        return Err(CliError::Usage(format!(
            "expected a lyapunov certificate, got {}",
            cert.kind_name()
        )));
    };
    lc.validate(s.window)?;
    let l = LyapunovSequence::from_source(&lc.sequence)?;
    let window = s.window;
    let definition = verify_lyapunov_definition(&s.system, &l, lc.a, window)?;
    let bound = verify_lyapunov_bound(&s.system, &l, &lc.beta, window)?;
    let (phi, tau) = lyapunov_to_npis(lc.a, &lc.beta)?;
    let phi_tau = verify_phi_tau(&s.system, &phi, &tau, window)?;
    s.reports(
        "lyapunov",
        vec![
            ("definition", definition),
            ("bound", bound),
            ("phi_tau", phi_tau),
        ],
        None,
    )
}

fn run_lyapunov(
    common: Common,
    cert: Option<String>,
    from_npis: Option<String>,
    export: Option<PathBuf>,
) -> Result<Emitted, CliError> {
    let mut s = Session::open(&common)?;
    let cert = match (cert, from_npis) {
        (Some(text), _) => inputs::load_certificate(&text)?,
        (None, Some(text)) => {
            let npis = inputs::load_certificate(&text)?;
            s.digests.add("npis", &npis)?;
            let Certificate::Npis { big_n, r } = &npis else {
                return Err(CliError::Usage("--from-npis needs an npis certificate".into()));
            };
            let (d, a) = default_rates(*r)?;
            Certificate::Lyapunov(powinst::LyapunovCertificate {
                a,
                beta: npis_beta(big_n, *r, d)?,
                sequence: powinst::LyapunovSource::Canonical { d },
            })
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    s.digests.add("certificate", &cert)?;
    if let (Some(path), Certificate::Lyapunov(lc)) = (&export, &cert) {
        let table = LyapunovSequence::from_source(&lc.sequence)?.to_table(&s.system, s.window)?;
        let file = std::fs::File::create(path).map_err(|e| CliError::Read(path.clone(), e))?;
        table.write_csv(file)?;
    }
    let json_cert = serde_json::to_value(&cert)?;
    let emitted = lyapunov_checks(s, &cert)?;
    if common.format == Format::Json {
        // attach the certificate that was checked
        let mut doc: serde_json::Value = serde_json::from_str(&emitted.text)?;
        doc["certificate"] = json_cert;
        return Ok(Emitted {
            text: serde_json::to_string_pretty(&doc)? + "\n",
            failed: emitted.failed,
        });
    }
    Ok(emitted)
}

fn run_sum(common: Common, cert: String) -> Result<Emitted, CliError> {
    let mut s = Session::open(&common)?;
    let cert = inputs::load_certificate(&cert)?;
    s.digests.add("certificate", &cert)?;
    let Certificate::Sum(crit) = &cert else {
        return Err(CliError::Usage(format!(
            "expected a sum-* certificate, got {}",
            cert.kind_name()
        )));
    };
    let window = s.window;
    let sum = verify_sum_criterion(&s.system, crit, window)?;
    let implied = sum_to_certificate(crit)?;
    let implied_report = verify_certificate(&s.system, &implied, window)?;
    let min_bound: Vec<String> = sum
        .min_bound
        .iter()
        .map(|b| powinst::decimal::format(b.value()))
        .collect();
    let extra = serde_json::json!({
        "implied_certificate": implied,
        "min_bound": min_bound,
    });
    s.reports(
        "sum",
        vec![("sum", sum.report), (implied.kind_name(), implied_report)],
        Some(extra),
    )
}

fn run_profile(common: Common) -> Result<Emitted, CliError> {
    let s = Session::open(&common)?;
    let profile = growth_profile(&s.system, s.window)?;
    let text = profile
        .g
        .iter()
        .zip(&profile.argmax)
        .enumerate()
        .map(|(k, (g, at))| format!("  g({k}) = exp({}) at {at}\n", g.ln()))
        .collect::<String>();
    let csv = || csv_string(|w| write_profile_csv(w, &profile));
    s.document("profile", &profile, csv, || text)
}

fn run_catalog(example: Option<String>, params: Vec<String>, window: usize) -> Result<Emitted, CliError> {
    let Some(name) = example else {
        let mut text = String::new();
        for name in EXAMPLE_NAMES {
            let keys = match name {
                "example25" => "b>=2 c>0",
                "constant" => "c>0",
                _ => "",
            };
            text.push_str(&format!("{name:<10} {keys}\n"));
        }
        return Ok(Emitted {
            text,
            failed: false,
        });
    };
    let id = ExampleId::from_parts(&name, &inputs::parse_params(&params)?)?;
    let spec = powinst::make_example(id, window.max(1))?;
    Ok(Emitted {
        text: serde_json::to_string_pretty(&spec)? + "\n",
        failed: false,
    })
}

fn run(cli: Cli) -> Result<Emitted, CliError> {
    match cli.command {
        Command::Verify { common, cert, phi } => run_verify(common, cert, phi),
        Command::Refute {
            common,
            n_grid,
            r_grid,
        } => run_refute(common, n_grid, r_grid),
        Command::Estimate {
            common,
            kind,
            r,
            r_grid,
            k_min,
        } => run_estimate(common, kind, r, r_grid, k_min),
        Command::Lyapunov {
            common,
            cert,
            from_npis,
            export,
        } => run_lyapunov(common, cert, from_npis, export),
        Command::Sum { common, cert } => run_sum(common, cert),
        Command::Profile { common } => run_profile(common),
        Command::Catalog {
            example,
            params,
            window,
        } => run_catalog(example, params, window),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
