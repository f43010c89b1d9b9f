//! Run configuration and its identifying hash.

use std::path::PathBuf;

use feasmass::experiments::GridSpec;
use feasmass::Precision;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub instance: Option<PathBuf>,
    pub synthetic_n: Option<usize>,
    pub grid: GridSpec,
    pub shots: u64,
    pub seed: u64,
    pub depth: usize,
    pub normalized_mixer: bool,
    pub precision: Precision,
    pub betas: Vec<f64>,
    pub gamma: Option<f64>,
    pub thresholds: Vec<f64>,
    pub lattice: Option<usize>,
    pub method: String,
}

impl RunConfig {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig {
            command: "grid".into(),
            instance: None,
            synthetic_n: Some(3),
            grid: "10x10".parse().unwrap(),
            shots: 0,
            seed: 1,
            depth: 1,
            normalized_mixer: true,
            precision: Precision::F64,
            betas: vec![0.7],
            gamma: None,
            thresholds: vec![],
            lattice: None,
            method: "generic".into(),
        }
    }

    #[test]
    fn hash_tracks_config() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
