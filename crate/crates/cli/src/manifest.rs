use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(role: &'static str, path: &Path, content: &[u8]) -> Self {
        Self { role, path: path.display().to_string(), bytes: content.len(), sha256: hex::encode(Sha256::digest(content)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: f64,
}

/// Provenance record written next to every output. Two runs with the same
/// inputs and flags differ only in `timings`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: Vec<InputDigest>,
    pub config: RunConfig,
    pub open_set_count: usize,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            inputs: Vec::new(),
            config,
            open_set_count: 0,
            timings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// The manifest as JSON with timings stripped, for comparisons.
    pub fn without_timings(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        v.as_object_mut().unwrap().remove("timings");
        v
    }
}

/// Records wall-clock time per named stage.
pub struct Stopwatch {
    last: Instant,
    timings: Vec<StageTiming>,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self { last: Instant::now(), timings: Vec::new() }
    }

    pub fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push(StageTiming { stage, millis: (now - self.last).as_secs_f64() * 1e3 });
        self.last = now;
    }

    pub fn finish(self) -> Vec<StageTiming> {
        self.timings
    }
}
