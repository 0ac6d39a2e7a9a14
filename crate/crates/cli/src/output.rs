//! Artifact writers: CSV files carry a header row and one provenance
//! comment line with the config hash; JSON reports embed the hash as a
//! field. No timestamps, so reruns are byte-identical.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub struct OutDir {
    dir: PathBuf,
    hash: String,
}

impl OutDir {
    pub fn new(dir: &Path, hash: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), hash: hash.to_string() })
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<csv::Writer<File>, CliError> {
        let path = self.dir.join(name);
        let mut file = File::create(&path)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        writeln!(file, "# config_hash={}", self.hash)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(w)
    }

    pub fn json<T: Serialize>(&self, name: &str, report: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let value = serde_json::json!({
            "config_hash": self.hash,
            "report": report,
        });
        let text = serde_json::to_string_pretty(&value)
            .map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
    }
}

/// Fixed-format float for CSV bodies: repeatable shortest representation.
pub fn fmt(x: f64) -> String {
    format!("{x:.12}")
}
