use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::commands::Command;
use crate::output::Output;

pub const SCHEMA_VERSION: u32 = 1;
/// Relative tolerance for replaying results that involve floating point.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub command: Command,
    pub code_version: String,
    pub threads: usize,
    pub budget: Option<u64>,
    pub wall_time_s: f64,
    /// SHA-256 of the compact JSON result.
    pub output_digest: String,
    /// 0 for exact results.
    pub tolerance: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn result_digest(result: &Value) -> String {
    sha256_hex(serde_json::to_string(result).expect("JSON values serialise").as_bytes())
}

impl RunManifest {
    pub fn new(command: &Command, threads: usize, budget: Option<u64>, wall_time_s: f64, output: &Output) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            subcommand: command.name().to_string(),
            command: command.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            budget,
            wall_time_s,
            output_digest: result_digest(&output.result),
            tolerance: if output.exact { 0.0 } else { FLOAT_TOLERANCE },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifests serialise")
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Writes `manifest.json`, `result.json` and, for tabular output, `table.csv`.
pub fn write_artifacts(dir: &Path, manifest: &RunManifest, output: &Output) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let digest = manifest.digest();
    fs::write(dir.join("manifest.json"), manifest.to_json() + "\n")?;
    let result = json!({ "manifest_digest": digest, "subcommand": manifest.subcommand, "result": output.result });
    fs::write(dir.join("result.json"), serde_json::to_string_pretty(&result)? + "\n")?;
    if let Some(table) = &output.table {
        let mut buf = format!("# manifest_digest={digest}\n").into_bytes();
        table.write_csv(&mut buf).map_err(std::io::Error::other)?;
        fs::write(dir.join("table.csv"), buf)?;
    }
    Ok(())
}

/// First place where two results differ beyond `tol` (relative, for numbers).
pub fn compare(expected: &Value, actual: &Value, tol: f64, path: &str) -> Option<String> {
    match (expected, actual) {
        (Value::Number(a), Value::Number(b)) if tol > 0.0 => {
            let (a, b) = (a.as_f64()?, b.as_f64()?);
            let scale = a.abs().max(b.abs()).max(1e-300);
            ((a - b).abs() > tol * scale).then(|| format!("{path}: {a} vs {b}"))
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path}: lengths {} vs {}", a.len(), b.len()));
            }
            a.iter().zip(b).enumerate().find_map(|(i, (x, y))| compare(x, y, tol, &format!("{path}[{i}]")))
        }
        (Value::Object(a), Value::Object(b)) => {
            if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
                return Some(format!("{path}: keys differ"));
            }
            a.iter().find_map(|(k, x)| compare(x, &b[k], tol, &format!("{path}.{k}")))
        }
        _ => (expected != actual).then(|| format!("{path}: {expected} vs {actual}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_respects_tolerance() {
        let a = json!({"x": [1.0, 2.0], "s": "1/8"});
        let b = json!({"x": [1.0, 2.0 + 1e-12], "s": "1/8"});
        assert!(compare(&a, &b, 1e-9, "r").is_none());
        assert!(compare(&a, &b, 0.0, "r").is_some());
        assert!(compare(&a, &json!({"x": [1.0, 2.0], "s": "1/7"}), 1e-9, "r").is_some());
    }
}
