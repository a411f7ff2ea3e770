//! Report envelopes and rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use powinst::VerificationReport;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

/// Common header for every JSON document the tool writes. No timestamp,
/// so identical inputs give byte-identical output.
#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    tool: Tool,
    command: &'static str,
    inputs: BTreeMap<String, String>,
    window: usize,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &'static str, inputs: Digests, window: usize, body: T) -> Self {
        Envelope {
            tool: Tool {
                name: "powinst",
                version: env!("CARGO_PKG_VERSION"),
            },
            command,
            inputs: inputs.0,
            window,
            body,
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// `sha256:<hex>` digests of the canonical serialization of each input.
#[derive(Default)]
pub struct Digests(BTreeMap<String, String>);

impl Digests {
    pub fn add<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let bytes = serde_json::to_vec(value)?;
        self.add_bytes(name, &bytes);
        Ok(())
    }

    pub fn add_bytes(&mut self, name: &str, bytes: &[u8]) {
        let digest = Sha256::digest(bytes);
        self.0
            .insert(name.to_string(), format!("sha256:{}", hex::encode(digest)));
    }
}

pub fn report_csv(rows: &[(&str, &VerificationReport)]) -> String {
    let mut out = String::from("check,verdict,window,checks,worst_margin,m,n,p,vector\n");
    for (name, r) in rows {
        let (m, n, p, v) = match r.witness {
            Some(w) => (
                w.m.to_string(),
                w.n.to_string(),
                w.p.map(|p| p.to_string()).unwrap_or_default(),
                w.vector.map(|v| v.to_string()).unwrap_or_default(),
            ),
            None => Default::default(),
        };
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{name},{verdict},{},{},{},{m},{n},{p},{v}",
            r.window,
            r.triples_checked,
            powinst::decimal::format(r.worst_margin)
        );
    }
    out
}

pub fn report_text(rows: &[(&str, &VerificationReport)]) -> String {
    rows.iter()
        .map(|(name, r)| r.to_text(name))
        .collect::<Vec<_>>()
        .join("\n")
}
