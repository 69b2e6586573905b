//! JSON run reports and atomic file writes.
//!
//! A report is a pure function of (command, inputs, seed); the only field
//! allowed to vary between identical runs is `timing_seconds`.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const REPORT_SCHEMA: &str = "snmf-report/1";

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub metrics: Value,
    pub timing_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, config: Value, seed: u64, metrics: Value, timing_seconds: f64) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            config,
            seed,
            metrics,
            timing_seconds,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }
}

/// Write to a temp file in the target directory, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp.{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => Path::new(&format!(".out.tmp.{}", std::process::id())).to_path_buf(),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn report_serializes_full_precision() {
        let r = RunReport::new(
            "fit",
            json!({"alpha": 0.1}),
            7,
            json!({"auc": 1.0 / 3.0}),
            0.0,
        );
        let text = serde_json::to_string(&r).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["metrics"]["auc"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(back["schema"], REPORT_SCHEMA);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }
}
