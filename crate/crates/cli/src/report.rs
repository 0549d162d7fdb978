//! Report writers. Every output is deterministic for a fixed config and
//! seed: fixed column orders, fixed float formatting, no timestamps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Hash of the canonical config serialization, stamped into every report.
pub fn config_hash(canonical_config: &str) -> String {
    let digest = Sha256::digest(canonical_config.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        write!(out, "{byte:02x}").expect("infallible");
    }
    out
}

/// Fixed-precision float field; keeps report bytes stable across runs.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// A delimited-text report with a provenance header comment.
pub struct Table {
    lines: Vec<String>,
}

impl Table {
    pub fn new(seed: u64, hash: &str, columns: &[&str]) -> Self {
        Table {
            lines: vec![
                format!("# seed={seed} config_hash={hash}"),
                columns.join(","),
            ],
        }
    }

    pub fn push_row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn write_to(&self, path: &Path) -> CliResult<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// Line-buffered JSON-lines diagnostics stream.
pub struct Diagnostics {
    path: PathBuf,
    file: fs::File,
}

impl Diagnostics {
    pub fn create(dir: &Path) -> CliResult<Self> {
        let path = dir.join("diagnostics.jsonl");
        let file = fs::File::create(&path)?;
        Ok(Diagnostics { path, file })
    }

    pub fn emit(&mut self, record: &serde_json::Value) -> CliResult<()> {
        serde_json::to_writer(&mut self.file, record)
            .map_err(|e| crate::error::CliError::input(e.to_string()))?;
        self.file.write_all(b"\n")?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Create the output directory if needed.
pub fn ensure_output_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash("seed = 1\n");
        let b = config_hash("seed = 1\n");
        let c = config_hash("seed = 2\n");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn float_fields_are_fixed_width() {
        assert_eq!(fmt_f64(1.0), "1.000000");
        assert_eq!(fmt_f64(0.3333333333333), "0.333333");
        assert_eq!(fmt_f64(f64::NAN), "NA");
    }
}
