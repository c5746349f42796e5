//! Wavefunction files: the grid description plus real and imaginary parts.

use std::path::Path;

use num_complex::Complex64;
use rotor_core::dynamics::{AngularGrid, RotorState};
use serde::{Deserialize, Serialize};

use crate::config::PeriodConfig;
use crate::error::{CliError, CliResult};

pub const FINAL_STATE: &str = "final_state.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n_points: usize,
    pub period: PeriodConfig,
    pub time_rotor: f64,
    /// Tight-trap frequency in rotor units, for squeezing diagnostics.
    pub omega_ref: f64,
    pub atom_number: u64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl StateFile {
    pub fn from_state(state: &RotorState, omega_ref: f64, atom_number: u64) -> Self {
        let grid = state.grid();
        Self {
            n_points: grid.n_points(),
            period: match grid.period() {
                rotor_core::dynamics::Period::Pi => PeriodConfig::Pi,
                rotor_core::dynamics::Period::TwoPi => PeriodConfig::TwoPi,
            },
            time_rotor: state.time,
            omega_ref,
            atom_number,
            re: state.amplitudes().iter().map(|z| z.re).collect(),
            im: state.amplitudes().iter().map(|z| z.im).collect(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_state(&self) -> CliResult<RotorState> {
        if self.re.len() != self.n_points || self.im.len() != self.n_points {
            return Err(CliError::Config(format!(
                "state file declares {} points but holds {} and {} values",
                self.n_points,
                self.re.len(),
                self.im.len()
            )));
        }
        let period = match self.period {
            PeriodConfig::Pi => rotor_core::dynamics::Period::Pi,
            PeriodConfig::TwoPi => rotor_core::dynamics::Period::TwoPi,
        };
        let grid = AngularGrid::new(self.n_points, period)?;
        let amps = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| Complex64::new(*r, *i))
            .collect();
        Ok(RotorState::new(grid, amps, self.time_rotor)?)
    }
}
