//! `--config` file: every field optional, flags override.

use std::path::Path;

use fddet_core::augment::MixParams;
use fddet_core::cgpc::CgpcConfig;
use fddet_core::sslsim::{EmaConfig, Scenario};
use fddet_core::synth::SynthSpec;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub train_fraction: Option<f64>,
    pub mix: Option<MixParams>,
    pub cgpc: Option<CgpcConfig>,
    pub ema: Option<EmaConfig>,
    pub scenario: Option<Scenario>,
    pub synth: Option<SynthSpec>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }
}
