//! Per-run manifest written next to every command's outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::io::{self, DataError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub config: BTreeMap<String, String>,
    pub input_digests: BTreeMap<String, String>,
    pub seed: u64,
    pub tem_id: String,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
}

/// Wall-clock phase timer.
pub struct Timings {
    start: Instant,
    phases: BTreeMap<String, u64>,
}

impl Default for Timings {
    fn default() -> Self {
        Self::new()
    }
}

impl Timings {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
            phases: BTreeMap::new(),
        }
    }

    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.phases.entry(name.into()).or_default() += t.elapsed().as_millis() as u64;
        out
    }

    pub fn finish(mut self) -> BTreeMap<String, u64> {
        self.phases.insert("total".into(), self.start.elapsed().as_millis() as u64);
        self.phases
    }
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), DataError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        io::write_bytes(&dir.join(MANIFEST_FILE), json.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self, DataError> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = io::read_bytes(&path)?;
        serde_json::from_slice(&bytes).map_err(|e| DataError::MalformedRow {
            path,
            line: e.line() as u64,
            reason: e.to_string(),
        })
    }
}
