//! Run manifest: every command records what it ran, with which parameters
//! and seeds, and which files it produced.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

pub struct ManifestBuilder {
    command: String,
    parameters: serde_json::Map<String, serde_json::Value>,
    seeds: Vec<u64>,
    outputs: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            parameters: serde_json::Map::new(),
            seeds: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(
            key.to_string(),
            serde_json::to_value(value).expect("parameter serializable"),
        );
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seeds.push(seed);
        self
    }

    /// Register a produced file; it must exist by the time `write` runs.
    pub fn output(&mut self, path: &str) -> &mut Self {
        self.outputs.push(path.to_string());
        self
    }

    /// Write the manifest JSON to `path`, checking the recorded outputs
    /// exist.
    pub fn write(&self, path: &str) -> Result<(), CliError> {
        for out in &self.outputs {
            if !Path::new(out).exists() {
                return Err(CliError::runtime(format!(
                    "declared output {out} was not written"
                )));
            }
        }
        let manifest = RunManifest {
            command: self.command.clone(),
            parameters: serde_json::Value::Object(self.parameters.clone()),
            seeds: self.seeds.clone(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs.clone(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        maelens::io::write_json(path, &manifest)?;
        Ok(())
    }
}
