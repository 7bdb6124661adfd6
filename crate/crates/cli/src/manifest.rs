//! Deterministic run manifests: config echo, per-stage wall times, and
//! SHA-256 digests of every emitted artifact.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const ARTIFACT_VERSION: &str = "1";

/// Convention constants frozen by the implementation and recorded with
/// every run so artifacts are self-describing.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    /// Global edge-orientation sign: v(I12, K) < 0.
    pub s0: i8,
    /// Orientation constant of the Berry link-variable sum.
    pub berry_sign: f64,
    /// Orientation constant of the valley magnetic-moment formula.
    pub moment_sign: f64,
    pub valley_partition: &'static str,
    pub coherence_length: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            s0: 1,
            berry_sign: valleon_core::topology::BERRY_SIGN,
            moment_sign: valleon_core::topology::MOMENT_SIGN_CONV,
            valley_partition: "nearest-BZ-corner over 9 torus images; ties split evenly",
            coherence_length: "c times the 1/e half-width of the fitted Gaussian",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    pub conventions: Conventions,
    /// Stage name -> wall time in milliseconds.
    pub wall_time_ms: BTreeMap<String, f64>,
    /// File name -> SHA-256 hex digest.
    pub digests: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            artifact_version: ARTIFACT_VERSION,
            seed: config.seed,
            config: config.clone(),
            conventions: Conventions::default(),
            wall_time_ms: BTreeMap::new(),
            digests: BTreeMap::new(),
        }
    }

    pub fn record_file(&mut self, name: &str, contents: &[u8]) {
        self.digests.insert(name.to_string(), sha256_hex(contents));
    }

    pub fn record_time(&mut self, stage: &str, ms: f64) {
        self.wall_time_ms.insert(stage.to_string(), ms);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}
