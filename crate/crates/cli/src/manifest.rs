use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub tool_version: &'static str,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, parameters: Value, seed: Option<u64>) -> Self {
        Self {
            subcommand,
            parameters,
            seed,
            inputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn digest_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }
}

pub fn write_report(path: Option<&Path>, manifest: &RunManifest, body: Value) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let mut report = serde_json::json!({ "manifest": manifest });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, body) {
        dst.extend(src);
    }
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
