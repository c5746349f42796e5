pub mod calibrate;
pub mod run;
pub mod validate;
pub mod wigner;

use std::path::PathBuf;

use crate::artifacts::sha256_hex;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub strict: bool,
}

impl Globals {
    /// Loads the config and applies command-line overrides.
    pub fn load(&self) -> CliResult<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    pub fn out_dir(&self, cfg: Option<&RunConfig>) -> PathBuf {
        match (&self.out, cfg) {
            (Some(p), _) => p.clone(),
            (None, Some(c)) => PathBuf::from(&c.output_dir),
            (None, None) => PathBuf::from("out"),
        }
    }
}

/// Hash of the effective config in its canonical serialisation.
pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(cfg.to_json().as_bytes())
}
