use std::sync::Arc;

use num_complex::Complex64;

use super::grid::AngularGrid;
use super::state::RotorState;
use crate::error::{Result, RotorError};

/// Potential energy sampled on the grid, in rotor energy units (already
/// multiplied by `β`).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSamples {
    values: Vec<f64>,
}

impl PotentialSamples {
    pub fn from_energies(grid: &AngularGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(RotorError::InvalidParameter(format!(
                "expected {} potential samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        Ok(Self { values })
    }

    /// Samples `beta * shape(θ)`.
    pub fn from_shape(grid: &AngularGrid, beta: f64, shape: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.thetas().iter().map(|&t| beta * shape(t)).collect(),
        }
    }

    pub fn zeros(grid: &AngularGrid) -> Self {
        Self {
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Symmetric split-operator propagator: half potential kick, exact kinetic
/// drift in the angular-momentum basis, half potential kick.
pub struct SplitStep {
    grid: Arc<AngularGrid>,
    dt: f64,
    kinetic: Vec<Complex64>,
}

impl SplitStep {
    pub fn new(grid: Arc<AngularGrid>, dt: f64) -> Self {
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0, -0.5 * k * k * dt))
            .collect();
        Self { grid, dt, kinetic }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    /// `exp(-i V dt / 2)` for the given potential.
    pub fn half_kick(&self, potential: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); potential.len()];
        self.fill_half_kick(potential, &mut out);
        out
    }

    pub fn fill_half_kick(&self, potential: &[f64], out: &mut [Complex64]) {
        let h = -0.5 * self.dt;
        for (o, v) in out.iter_mut().zip(potential) {
            *o = Complex64::from_polar(1.0, h * v);
        }
    }

    /// Advances amplitudes in place using a precomputed half kick.
    pub fn apply(&self, psi: &mut [Complex64], half_kick: &[Complex64]) {
        for (z, k) in psi.iter_mut().zip(half_kick) {
            *z *= k;
        }
        self.grid.fft(psi);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.grid.ifft(psi);
        for (z, k) in psi.iter_mut().zip(half_kick) {
            *z *= k;
        }
    }
}

/// Default step in rotor units: `min(0.05/ω₁, 2π/(50 ε_max))`, with `ω₁` the
/// tight-trap frequency (rotor units) and `ε_max` the largest kinetic
/// eigenvalue on the grid.
pub fn default_dt(grid: &AngularGrid, omega_tight: f64) -> f64 {
    let kinetic = std::f64::consts::TAU / (50.0 * grid.max_kinetic());
    if omega_tight > 0.0 {
        (0.05 / omega_tight).min(kinetic)
    } else {
        kinetic
    }
}

/// One split-operator step of length `dt` (rotor units) under a static
/// potential.
pub fn step(state: &RotorState, potential: &PotentialSamples, dt: f64) -> RotorState {
    let stepper = SplitStep::new(state.grid().clone(), dt);
    let kick = stepper.half_kick(potential.values());
    let mut next = state.clone();
    stepper.apply(next.amplitudes_mut(), &kick);
    next.time += dt;
    next
}

/// Applies `L = -i d/dθ` spectrally.
pub fn apply_angular_momentum(grid: &AngularGrid, psi: &[Complex64]) -> Vec<Complex64> {
    let mut buf = psi.to_vec();
    grid.fft(&mut buf);
    for (z, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *z *= k;
    }
    grid.ifft(&mut buf);
    buf
}

/// Applies `H = L²/2 + V` spectrally.
pub fn apply_hamiltonian(
    grid: &AngularGrid,
    potential: &PotentialSamples,
    psi: &[Complex64],
) -> Vec<Complex64> {
    let mut buf = psi.to_vec();
    grid.fft(&mut buf);
    for (z, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *z *= 0.5 * k * k;
    }
    grid.ifft(&mut buf);
    for ((o, z), v) in buf.iter_mut().zip(psi).zip(potential.values()) {
        *o += z * v;
    }
    buf
}

/// Kinetic and potential expectation values.
pub fn energy_parts(state: &RotorState, potential: &PotentialSamples) -> (f64, f64) {
    let grid = state.grid();
    let kinetic: f64 = state
        .momentum_distribution()
        .iter()
        .zip(grid.wavenumbers())
        .map(|(p, k)| 0.5 * k * k * p)
        .sum();
    let pot: f64 = state
        .amplitudes()
        .iter()
        .zip(potential.values())
        .map(|(z, v)| z.norm_sqr() * v)
        .sum::<f64>()
        * grid.spacing();
    (kinetic, pot)
}

/// `⟨H⟩` for `H = L²/2 + V`.
pub fn energy(state: &RotorState, potential: &PotentialSamples) -> f64 {
    let (k, v) = energy_parts(state, potential);
    k + v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::grid::Period;

    #[test]
    fn free_plane_wave_picks_up_phase() {
        let g = AngularGrid::new(64, Period::Pi).unwrap();
        let v = PotentialSamples::zeros(&g);
        let psi0 = RotorState::plane_wave(g.clone(), 3).unwrap();
        let dt = 0.013;
        let mut psi = psi0.clone();
        for _ in 0..100 {
            psi = step(&psi, &v, dt);
        }
        let eps = 0.5 * 36.0;
        let overlap = psi0.inner(&psi);
        let expected = Complex64::from_polar(1.0, -eps * dt * 100.0);
        assert!((overlap - expected).norm() < 1e-11);
    }

    #[test]
    fn step_is_unitary() {
        let g = AngularGrid::new(128, Period::Pi).unwrap();
        let v = PotentialSamples::from_shape(&g, 50.0, |t| t.sin().powi(2));
        let psi = RotorState::gaussian(g, 0.3, 0.1, 6.0).unwrap();
        let next = step(&psi, &v, 0.01);
        assert!((next.norm_squared() - 1.0).abs() < 1e-12);
        assert!((next.time - 0.01).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_matches_energy() {
        let g = AngularGrid::new(128, Period::Pi).unwrap();
        let v = PotentialSamples::from_shape(&g, 30.0, |t| t.sin().powi(2));
        let psi = RotorState::gaussian(g.clone(), 0.2, 0.15, 2.0).unwrap();
        let hpsi = apply_hamiltonian(&g, &v, psi.amplitudes());
        let e: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(&hpsi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * g.spacing();
        assert!((e.re - energy(&psi, &v)).abs() < 1e-10);
        assert!(e.im.abs() < 1e-10);
    }
}
