use std::sync::Arc;

use num_complex::Complex64;

use super::grid::AngularGrid;
use crate::error::{Result, RotorError};

/// Rotor wavefunction sampled on an [`AngularGrid`], normalised so that
/// `Σ|ψ|² Δθ = 1`.
#[derive(Debug, Clone)]
pub struct RotorState {
    grid: Arc<AngularGrid>,
    amplitudes: Vec<Complex64>,
    /// Time stamp in rotor units.
    pub time: f64,
}

impl RotorState {
    /// Wraps raw amplitudes and normalises them.
    pub fn new(grid: Arc<AngularGrid>, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(RotorError::InvalidParameter(format!(
                "expected {} amplitudes, got {}",
                grid.n_points(),
                amplitudes.len()
            )));
        }
        let mut state = Self {
            grid,
            amplitudes,
            time,
        };
        let norm = state.norm_squared();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(RotorError::InvalidParameter(
                "wavefunction has zero or non-finite norm".into(),
            ));
        }
        state.scale(1.0 / norm.sqrt());
        Ok(state)
    }

    pub fn from_fn(grid: Arc<AngularGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amps = grid.thetas().iter().map(|&t| f(t)).collect();
        Self::new(grid, amps, 0.0)
    }

    /// Normalised periodic Gaussian `exp(-(θ-θ0)²/(4σ²) + i l0 θ)`.
    ///
    /// The envelope is summed over neighbouring periods so the state stays
    /// smooth across the domain edge. `l0` must be a lattice wavenumber for
    /// the result to be exactly periodic.
    pub fn gaussian(grid: Arc<AngularGrid>, center: f64, sigma: f64, l0: f64) -> Result<Self> {
        let length = grid.length();
        let images = (2.0 + 8.0 * sigma / length).ceil() as i32;
        Self::from_fn(grid, move |t| {
            let env: f64 = (-images..=images)
                .map(|m| {
                    let d = t - center + m as f64 * length;
                    (-d * d / (4.0 * sigma * sigma)).exp()
                })
                .sum();
            env * Complex64::from_polar(1.0, l0 * t)
        })
    }

    /// Angular-momentum eigenstate with wavenumber index `m`, i.e.
    /// `exp(i m (2π/L) θ)`.
    pub fn plane_wave(grid: Arc<AngularGrid>, m: i64) -> Result<Self> {
        let k = m as f64 * 2.0 * std::f64::consts::PI / grid.length();
        Self::from_fn(grid, move |t| Complex64::from_polar(1.0, k * t))
    }

    pub fn uniform(grid: Arc<AngularGrid>) -> Result<Self> {
        Self::from_fn(grid, |_| Complex64::new(1.0, 0.0))
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_squared();
        self.scale(1.0 / n.sqrt());
    }

    fn scale(&mut self, s: f64) {
        self.amplitudes.iter_mut().for_each(|z| *z *= s);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &RotorState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.spacing()
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &RotorState) -> f64 {
        self.inner(other).norm()
    }

    /// L² distance `‖ψ − φ‖`.
    pub fn distance(&self, other: &RotorState) -> f64 {
        let s: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.grid.spacing()).sqrt()
    }

    /// `|ψ(θ)|²` on the grid.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Probabilities of the angular-momentum eigenstates, in FFT order; they
    /// sum to one.
    pub fn momentum_distribution(&self) -> Vec<f64> {
        let mut buf = self.amplitudes.clone();
        self.grid.fft(&mut buf);
        let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
        buf.iter().map(|z| z.norm_sqr() / total).collect()
    }

    /// Norms of the even and odd parts under θ → −θ.
    pub fn parity_norms(&self) -> (f64, f64) {
        let h = self.grid.spacing();
        let (mut even, mut odd) = (0.0, 0.0);
        for (j, z) in self.amplitudes.iter().enumerate() {
            let m = self.amplitudes[self.grid.mirror_index(j)];
            even += (0.5 * (z + m)).norm_sqr();
            odd += (0.5 * (z - m)).norm_sqr();
        }
        ((even * h).sqrt(), (odd * h).sqrt())
    }

    /// Probability carried by the outer `fraction` of the angular-momentum
    /// lattice; a resolution diagnostic.
    pub fn momentum_edge_population(&self, fraction: f64) -> f64 {
        let ks = self.grid.wavenumbers();
        let kmax = ks.iter().fold(0.0f64, |a, k| a.max(k.abs()));
        self.momentum_distribution()
            .iter()
            .zip(ks)
            .filter(|(_, k)| k.abs() > (1.0 - fraction) * kmax)
            .map(|(p, _)| p)
            .sum()
    }
}
