use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to a run's artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// SHA-256 of the resolved config (overrides applied), as TOML.
    pub config_digest: String,
    pub master_seed: u64,
    pub replications: usize,
    pub n_grid: Vec<usize>,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(resolved_config: &str, master_seed: u64, replications: usize, n_grid: Vec<usize>) -> Self {
        RunManifest {
            tool: "cvlab",
            version: env!("CARGO_PKG_VERSION"),
            config_digest: digest(resolved_config),
            master_seed,
            replications,
            n_grid,
            artifacts: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn finish(&mut self, elapsed: Duration) {
        self.wall_clock_seconds = elapsed.as_secs_f64();
    }
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
