use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, RotorError};

/// Fundamental domain of the rotor angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Period {
    /// `[-π/2, π/2)`, the period of `V(θ)`.
    #[default]
    Pi,
    /// `[-π, π)`.
    TwoPi,
}

impl Period {
    pub fn length(self) -> f64 {
        match self {
            Period::Pi => PI,
            Period::TwoPi => 2.0 * PI,
        }
    }
}

/// Uniform periodic grid in θ together with its conjugate angular-momentum
/// lattice, in FFT order.
pub struct AngularGrid {
    n_points: usize,
    period: Period,
    thetas: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for AngularGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularGrid")
            .field("n_points", &self.n_points)
            .field("period", &self.period)
            .finish()
    }
}

impl AngularGrid {
    pub fn new(n_points: usize, period: Period) -> Result<Arc<Self>> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(RotorError::InvalidParameter(format!(
                "grid size must be a power of two >= 8, got {n_points}"
            )));
        }
        let length = period.length();
        let spacing = length / n_points as f64;
        let thetas = (0..n_points)
            .map(|j| -length / 2.0 + j as f64 * spacing)
            .collect();
        let unit = 2.0 * PI / length;
        let half = n_points as i64 / 2;
        let wavenumbers = (0..n_points as i64)
            .map(|m| {
                let m = if m < half { m } else { m - n_points as i64 };
                m as f64 * unit
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n_points,
            period,
            thetas,
            wavenumbers,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        }))
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn length(&self) -> f64 {
        self.period.length()
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Angular-momentum eigenvalues (units of ħ) in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest kinetic eigenvalue `l²/2` resolved by the grid.
    pub fn max_kinetic(&self) -> f64 {
        self.wavenumbers
            .iter()
            .map(|k| 0.5 * k * k)
            .fold(0.0, f64::max)
    }

    /// Unnormalised forward transform in place.
    pub fn fft(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Inverse transform in place, including the `1/n` factor.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let scale = 1.0 / self.n_points as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Samples `f` on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.thetas.iter().map(|&t| f(t)).collect()
    }

    /// Index of the grid point mirrored through θ = 0.
    pub fn mirror_index(&self, j: usize) -> usize {
        // θ_j = -L/2 + j h, so -θ_j = θ_{n - j} (mod n)
        (self.n_points - j) % self.n_points
    }

    /// Wraps an angle into `[center - L/2, center + L/2)`.
    pub fn wrap_around(&self, theta: f64, center: f64) -> f64 {
        let length = self.length();
        let shifted = (theta - center + length / 2.0).rem_euclid(length);
        shifted - length / 2.0 + center
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_layout() {
        let g = AngularGrid::new(8, Period::Pi).unwrap();
        assert!((g.thetas()[0] + PI / 2.0).abs() < 1e-15);
        assert!((g.spacing() - PI / 8.0).abs() < 1e-15);
        let ks: Vec<f64> = g.wavenumbers().to_vec();
        assert_eq!(ks, vec![0.0, 2.0, 4.0, 6.0, -8.0, -6.0, -4.0, -2.0]);
        assert_eq!(g.max_kinetic(), 32.0);

        let g2 = AngularGrid::new(8, Period::TwoPi).unwrap();
        assert_eq!(g2.wavenumbers()[1], 1.0);
    }

    #[test]
    fn rejects_odd_sizes() {
        assert!(AngularGrid::new(100, Period::Pi).is_err());
        assert!(AngularGrid::new(4, Period::Pi).is_err());
    }

    #[test]
    fn mirror_and_wrap() {
        let g = AngularGrid::new(16, Period::Pi).unwrap();
        for j in 0..16 {
            let m = g.mirror_index(j);
            let a = g.wrap_around(-g.thetas()[j], 0.0);
            assert!((g.thetas()[m] - a).abs() < 1e-12);
        }
        assert!((g.wrap_around(3.0, 0.0) - (3.0 - PI)).abs() < 1e-15);
        assert!((g.wrap_around(1.4, 1.2) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn fft_roundtrip() {
        let g = AngularGrid::new(32, Period::Pi).unwrap();
        let orig: Vec<Complex64> = (0..32)
            .map(|j| Complex64::new((j as f64).sin(), (j as f64 * 0.3).cos()))
            .collect();
        let mut data = orig.clone();
        g.fft(&mut data);
        g.ifft(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
