use std::sync::Arc;

use num_complex::Complex64;

use super::grid::AngularGrid;
use super::propagator::{energy, PotentialSamples};
use super::state::RotorState;
use crate::error::{Result, RotorError};

/// Knobs for imaginary-time relaxation.
#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    /// Absolute energy tolerance in rotor units.
    pub tol: f64,
    /// Upper bound on the total number of imaginary-time steps.
    pub max_steps: usize,
    /// Steps between energy checks.
    pub block: usize,
}

impl GroundStateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_steps: 2_000_000,
            block: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub state: RotorState,
    pub energy: f64,
    pub steps: usize,
}

/// Curvature of the sampled potential at its minimum, by central differences.
fn curvature_at_minimum(grid: &AngularGrid, v: &[f64]) -> (usize, f64) {
    let n = v.len();
    let (imin, _) =
        v.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc },
        );
    let h = grid.spacing();
    let c = (v[(imin + 1) % n] - 2.0 * v[imin] + v[(imin + n - 1) % n]) / (h * h);
    (imin, c)
}

/// Imaginary-time split-operator relaxation to the lowest eigenstate.
///
/// The state is renormalised after every step. The step size is halved each
/// time the energy stalls, and the search stops once the stalled energies of
/// two successive step sizes agree within `tol`.
pub fn ground_state(
    grid: &Arc<AngularGrid>,
    potential: &PotentialSamples,
    options: GroundStateOptions,
) -> Result<GroundState> {
    if !(options.tol > 0.0) {
        return Err(RotorError::InvalidParameter(
            "tolerance must be positive".into(),
        ));
    }
    let v = potential.values();
    let vmin = potential.min();
    let (_, curv) = curvature_at_minimum(grid, v);

    // exp(-(V - Vmin)/ω) is the exact ground state of a harmonic well
    let omega = if curv > 0.0 { curv.sqrt() } else { 0.0 };
    let start: Vec<Complex64> = if omega > 0.0 {
        v.iter()
            .map(|x| Complex64::new((-(x - vmin) / omega).exp(), 0.0))
            .collect()
    } else {
        vec![Complex64::new(1.0, 0.0); grid.n_points()]
    };
    let mut state = RotorState::new(grid.clone(), start, 0.0)?;

    let mut dtau = if omega > 0.0 { 0.5 / omega } else { 0.5 };
    let mut steps = 0usize;
    let mut last_level: Option<f64> = None;
    let mut e_prev = energy(&state, potential);
    let mut last_change;

    loop {
        let kinetic: Vec<f64> = grid
            .wavenumbers()
            .iter()
            .map(|k| (-0.5 * k * k * dtau).exp())
            .collect();
        let half: Vec<f64> = v.iter().map(|x| (-0.5 * (x - vmin) * dtau).exp()).collect();

        // relax at this step size until the energy stalls
        let level_energy = loop {
            for _ in 0..options.block {
                let psi = state.amplitudes_mut();
                for (z, h) in psi.iter_mut().zip(&half) {
                    *z *= h;
                }
                grid.fft(psi);
                for (z, k) in psi.iter_mut().zip(&kinetic) {
                    *z *= k;
                }
                grid.ifft(psi);
                for (z, h) in psi.iter_mut().zip(&half) {
                    *z *= h;
                }
                state.normalize();
            }
            steps += options.block;
            let e = energy(&state, potential);
            last_change = (e - e_prev).abs();
            e_prev = e;
            if last_change < 0.1 * options.tol {
                break e;
            }
            if steps >= options.max_steps {
                return Err(RotorError::NotConverged {
                    what: "imaginary-time ground state",
                    iterations: steps,
                    last_change,
                });
            }
        };

        if let Some(prev) = last_level {
            if (prev - level_energy).abs() < options.tol {
                return Ok(GroundState {
                    energy: level_energy,
                    state,
                    steps,
                });
            }
        }
        last_level = Some(level_energy);
        dtau *= 0.5;
        if steps >= options.max_steps || dtau < 1e-300 {
            return Err(RotorError::NotConverged {
                what: "imaginary-time ground state",
                iterations: steps,
                last_change,
            });
        }
    }
}
