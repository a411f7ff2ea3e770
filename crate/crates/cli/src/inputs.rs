//! Resolving systems, certificates and sequences from command-line values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use powinst::sequence::{parse_sequence, read_table_csv};
use powinst::{Certificate, ExampleId, SequenceSpec, SystemSpec};

use crate::CliError;

/// System from a catalog name plus `key=value` parameters, or a JSON file.
pub fn load_system(
    example: Option<&str>,
    params: &[String],
    file: Option<&Path>,
    window: usize,
    seed: Option<u64>,
) -> Result<SystemSpec, CliError> {
    let mut spec = match (example, file) {
        (Some(name), None) => {
            let params = parse_params(params)?;
            let id = ExampleId::from_parts(name, &params)?;
            // a zero window still needs one step
            powinst::make_example(id, window.max(1))?
        }
        (None, Some(path)) => {
            if !params.is_empty() {
                return Err(CliError::Usage("--param only applies to --example".into()));
            }
            serde_json::from_str(&read_text(path)?)?
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --example or --system".into(),
            ))
        }
    };
    if let (Some(new_seed), SystemSpec::MatrixTable { seed, .. }) = (seed, &mut spec) {
        *seed = new_seed;
    }
    Ok(spec)
}

pub fn parse_params(params: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got {p:?}")))?;
        let value = powinst::decimal::parse(v).map_err(CliError::Usage)?;
        if out.insert(k.trim().to_string(), value).is_some() {
            return Err(CliError::Usage(format!("parameter {k} given twice")));
        }
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Read(path.to_path_buf(), e))
}

pub fn load_table(path: &str) -> powinst::Result<SequenceSpec> {
    read_table_csv(std::fs::File::open(path)?)
}

/// A certificate given inline (`kind:key=value,...`) or as a JSON file path.
pub fn load_certificate(text: &str) -> Result<Certificate, CliError> {
    let path = PathBuf::from(text);
    if !text.contains(':') || path.is_file() {
        return Ok(serde_json::from_str(&read_text(&path)?)?);
    }
    Ok(Certificate::parse_inline(text, load_table)?)
}

pub fn load_sequence(text: &str) -> Result<SequenceSpec, CliError> {
    Ok(parse_sequence(text, load_table)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        let p = parse_params(&["b=2".into(), "c=1.5".into()]).unwrap();
        assert_eq!(p["b"], 2.0);
        assert_eq!(p["c"], 1.5);
        assert!(parse_params(&["b".into()]).is_err());
        assert!(parse_params(&["b=1".into(), "b=2".into()]).is_err());
    }

    #[test]
    fn exactly_one_system_source() {
        assert!(load_system(None, &[], None, 10, None).is_err());
        let spec = load_system(Some("constant"), &["c=2".into()], None, 10, None).unwrap();
        assert_eq!(spec.horizon(), 10);
        assert!(load_system(Some("constant"), &[], None, 10, None).is_err());
    }

    #[test]
    fn inline_certificates() {
        let c = load_certificate("npis:N=geometric(2),r=0.25").unwrap();
        assert_eq!(c.kind_name(), "npis");
        assert!(load_certificate("npis:N=geometric(2)").is_err());
    }
}
