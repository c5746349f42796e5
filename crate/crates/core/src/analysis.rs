//! Observables: moments and squeezing diagnostics, line Wigner maps,
//! potential fluctuations and the cavity-output g2.
//!
//! # g2 to second order in δV
//!
//! With the field slaved to the rotor, `a(V) = η / (κ/2 + i(Δ + U0 V))`.
//! Expanding around `⟨V⟩` gives `a ≈ α + γ δV` with
//! `α = η / (κ/2 + iΔ')`, `γ = -i η U0 / (κ/2 + iΔ')²` and `Δ' = Δ + U0⟨V⟩`.
//! For a coherent carrier the normally ordered moments reduce to those of
//! the classical intensity `I = |a|²`, and
//!
//! ```text
//! I = |α|² + 2 Re(α*γ) δV + O(δV²)
//! g2 − 1 = (⟨I²⟩ − ⟨I⟩²) / ⟨I⟩² = 4 (Re α*γ)² ⟨δV²⟩ / |α|⁴ + O(δV³)
//! ```
//!
//! Since `α*γ = U0 η² (−Δ' − iκ/2) / |κ/2 + iΔ'|⁴` this becomes
//! `g2 − 1 = 4 U0² Δ'² ⟨δV²⟩ / (κ²/4 + Δ'²)²`, independent of η and never
//! negative. The overall sign of γ drops out because it enters squared.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::dynamics::{apply_angular_momentum, RotorState, Trajectory};
use crate::error::{Result, RotorError};
use crate::model::{bare_potential, DrivePoint, RotorConstants, SystemParams};
use crate::protocol::DriveSchedule;

/// Symmetric 2×2 covariance in zero-point-scaled phase-space coordinates
/// `X = θ sqrt(ω)`, `P = L / sqrt(ω)` for a reference frequency `ω` (rotor
/// units). The reference ground state has `xx = pp = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceCovariance {
    pub xx: f64,
    pub xp: f64,
    pub pp: f64,
}

impl PhaseSpaceCovariance {
    pub fn vacuum() -> Self {
        Self {
            xx: 0.5,
            xp: 0.0,
            pp: 0.5,
        }
    }

    /// Scales raw `(θ, L)` moments by a reference frequency.
    pub fn from_moments(var_theta: f64, covar: f64, var_l: f64, omega_ref: f64) -> Self {
        Self {
            xx: var_theta * omega_ref,
            xp: covar,
            pp: var_l / omega_ref,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.xx * self.pp - self.xp * self.xp
    }

    /// Variance along the minor axis of the covariance ellipse.
    pub fn minor_variance(&self) -> f64 {
        // det / major avoids cancellation for strongly squeezed ellipses
        let major = self.major_variance();
        if major > 0.0 {
            self.determinant() / major
        } else {
            0.0
        }
    }

    pub fn major_variance(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.pp);
        let half = (0.25 * (self.xx - self.pp).powi(2) + self.xp * self.xp).sqrt();
        mean + half
    }

    /// Orientation of the minor axis in `[0, π)`, zero along X and measured
    /// so that free evolution in the reference trap advances it at the trap
    /// frequency.
    pub fn squeeze_angle(&self) -> f64 {
        let major = 0.5 * (2.0 * self.xp).atan2(self.xx - self.pp);
        (-(major + FRAC_PI_2)).rem_euclid(PI)
    }

    /// Evolves through a harmonic trap of frequency `ratio · ω_ref` for a
    /// phase `ratio · ω_ref · t`.
    pub fn harmonic_evolution(&self, ratio: f64, phase: f64) -> Self {
        let (s, c) = phase.sin_cos();
        let m = [[c, s / ratio], [-ratio * s, c]];
        let a = [[self.xx, self.xp], [self.xp, self.pp]];
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                *o = (0..2)
                    .flat_map(|k| (0..2).map(move |l| (k, l)))
                    .map(|(k, l)| m[i][k] * a[k][l] * m[j][l])
                    .sum();
            }
        }
        Self {
            xx: out[0][0],
            xp: 0.5 * (out[0][1] + out[1][0]),
            pp: out[1][1],
        }
    }
}

/// First and second moments of `(θ, L)` in rotor units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub mean_theta: f64,
    pub var_theta: f64,
    pub mean_l: f64,
    pub var_l: f64,
    pub covar_theta_l: f64,
    /// Minor-axis orientation of the scaled covariance, see
    /// [`PhaseSpaceCovariance::squeeze_angle`].
    pub squeeze_angle: f64,
    /// Minor-axis variance over the reference zero-point variance.
    pub min_variance_ratio: f64,
    /// Reference frequency used for scaling.
    pub omega_ref: f64,
    /// Set when the angular spread is a sizeable fraction of the domain.
    pub delocalized: bool,
}

impl MomentReport {
    pub fn covariance(&self) -> PhaseSpaceCovariance {
        PhaseSpaceCovariance::from_moments(
            self.var_theta,
            self.covar_theta_l,
            self.var_l,
            self.omega_ref,
        )
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.var_theta * self.var_l - self.covar_theta_l * self.covar_theta_l
    }
}

/// Circular mean of the density, mapped back into the domain.
fn circular_mean(state: &RotorState) -> f64 {
    let grid = state.grid();
    let k = 2.0 * PI / grid.length();
    let (mut s, mut c) = (0.0, 0.0);
    for (t, z) in grid.thetas().iter().zip(state.amplitudes()) {
        let p = z.norm_sqr();
        s += p * (k * t).sin();
        c += p * (k * t).cos();
    }
    s.atan2(c) / k
}

/// Moments of a normalised state. Angles are measured on a branch cut
/// centred on the circular mean, so localised states anywhere on the circle
/// get meaningful variances. `omega_ref` (rotor units) sets the zero-point
/// scale for the squeezing diagnostics.
pub fn moments(state: &RotorState, omega_ref: f64) -> MomentReport {
    let grid = state.grid();
    let h = grid.spacing();
    let center = circular_mean(state);
    let psi = state.amplitudes();

    let shifted: Vec<f64> = grid
        .thetas()
        .iter()
        .map(|&t| grid.wrap_around(t, center))
        .collect();
    let mut mean_theta = 0.0;
    for (t, z) in shifted.iter().zip(psi) {
        mean_theta += t * z.norm_sqr();
    }
    mean_theta *= h;
    let mut var_theta = 0.0;
    for (t, z) in shifted.iter().zip(psi) {
        var_theta += (t - mean_theta).powi(2) * z.norm_sqr();
    }
    var_theta *= h;

    let pk = state.momentum_distribution();
    let mean_l: f64 = pk.iter().zip(grid.wavenumbers()).map(|(p, k)| p * k).sum();
    let var_l: f64 = pk
        .iter()
        .zip(grid.wavenumbers())
        .map(|(p, k)| p * (k - mean_l).powi(2))
        .sum();

    // ½⟨{θ−⟨θ⟩, L−⟨L⟩}⟩ = Re⟨ψ|(θ−⟨θ⟩) L|ψ⟩ − 0
    let lpsi = apply_angular_momentum(grid, psi);
    let covar_theta_l = shifted
        .iter()
        .zip(psi)
        .zip(&lpsi)
        .map(|((t, z), lz)| (t - mean_theta) * (z.conj() * lz).re)
        .sum::<f64>()
        * h;

    let delocalized = var_theta.sqrt() > grid.length() / 8.0;
    if delocalized {
        log::warn!(
            "angular spread {:.3} rad is large against the domain {:.3} rad; moments degrade",
            var_theta.sqrt(),
            grid.length()
        );
    }
    let cov = PhaseSpaceCovariance::from_moments(var_theta, covar_theta_l, var_l, omega_ref);
    MomentReport {
        mean_theta: grid.wrap_around(mean_theta, 0.0),
        var_theta,
        mean_l,
        var_l,
        covar_theta_l,
        squeeze_angle: cov.squeeze_angle(),
        min_variance_ratio: cov.minor_variance() / 0.5,
        omega_ref,
        delocalized,
    }
}

/// `⟨V²⟩ − ⟨V⟩²` of the bare potential, together with `⟨V⟩`.
pub fn potential_moments(state: &RotorState, constants: &RotorConstants) -> (f64, f64) {
    let grid = state.grid();
    let h = grid.spacing();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (t, z) in grid.thetas().iter().zip(state.amplitudes()) {
        let p = z.norm_sqr();
        let v = bare_potential(*t, constants);
        m1 += p * v;
        m2 += p * v * v;
    }
    m1 *= h;
    m2 *= h;
    (m1, (m2 - m1 * m1).max(0.0))
}

/// `⟨δV²⟩` of the bare potential.
pub fn potential_variance(state: &RotorState, constants: &RotorConstants) -> f64 {
    potential_moments(state, constants).1
}

/// Line Wigner distribution on a rectangular `(θ, L)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub thetas: Vec<f64>,
    pub ls: Vec<f64>,
    /// `values[i][j] = W(thetas[i], ls[j])`.
    pub values: Vec<Vec<f64>>,
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = 0.5 * (x[i + 1] - x[i]);
        w[i] += d;
        w[i + 1] += d;
    }
    w
}

impl WignerMap {
    pub fn integral(&self) -> f64 {
        let wt = trapezoid_weights(&self.thetas);
        let wl = trapezoid_weights(&self.ls);
        self.values
            .iter()
            .zip(&wt)
            .map(|(row, a)| a * row.iter().zip(&wl).map(|(v, b)| v * b).sum::<f64>())
            .sum()
    }

    /// `2π ∫∫ W²`, equal to one for pure states.
    pub fn purity(&self) -> f64 {
        let wt = trapezoid_weights(&self.thetas);
        let wl = trapezoid_weights(&self.ls);
        2.0 * PI
            * self
                .values
                .iter()
                .zip(&wt)
                .map(|(row, a)| a * row.iter().zip(&wl).map(|(v, b)| v * v * b).sum::<f64>())
                .sum::<f64>()
    }

    /// `∫ W dL` at each θ.
    pub fn theta_marginal(&self) -> Vec<f64> {
        let wl = trapezoid_weights(&self.ls);
        self.values
            .iter()
            .map(|row| row.iter().zip(&wl).map(|(v, b)| v * b).sum())
            .collect()
    }

    /// `∫ W dθ` at each L.
    pub fn l_marginal(&self) -> Vec<f64> {
        let wt = trapezoid_weights(&self.thetas);
        (0..self.ls.len())
            .map(|j| self.values.iter().zip(&wt).map(|(row, a)| row[j] * a).sum())
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Covariance `(Var θ, Cov, Var L)` of the map.
    pub fn covariance(&self) -> (f64, f64, f64) {
        let wt = trapezoid_weights(&self.thetas);
        let wl = trapezoid_weights(&self.ls);
        let mut m = [0.0f64; 6]; // 1, θ, L, θ², θL, L²
        for ((row, t), a) in self.values.iter().zip(&self.thetas).zip(&wt) {
            for ((v, l), b) in row.iter().zip(&self.ls).zip(&wl) {
                let w = v * a * b;
                m[0] += w;
                m[1] += w * t;
                m[2] += w * l;
                m[3] += w * t * t;
                m[4] += w * t * l;
                m[5] += w * l * l;
            }
        }
        let (mt, ml) = (m[1] / m[0], m[2] / m[0]);
        (
            m[3] / m[0] - mt * mt,
            m[4] / m[0] - mt * ml,
            m[5] / m[0] - ml * ml,
        )
    }
}

/// Probability outside `|θ − ⟨θ⟩| < period/4`.
pub fn outside_probability(state: &RotorState) -> f64 {
    let grid = state.grid();
    let center = circular_mean(state);
    let quarter = grid.length() / 4.0;
    grid.thetas()
        .iter()
        .zip(state.amplitudes())
        .filter(|(t, _)| (grid.wrap_around(**t, center) - center).abs() >= quarter)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        * grid.spacing()
}

/// Band-limited interpolation onto a grid twice as fine.
fn refine(state: &RotorState) -> Vec<Complex64> {
    let grid = state.grid();
    let n = grid.n_points();
    let mut spec = state.amplitudes().to_vec();
    grid.fft(&mut spec);
    let m = 2 * n;
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for i in 0..half {
        padded[i] = spec[i];
        padded[m - half + i] = spec[half + i];
    }
    // split the Nyquist bin symmetrically
    padded[half] = 0.5 * spec[half];
    padded[m - half] = 0.5 * spec[half];
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut padded);
    // rustfft is unnormalised; the forward pass already carried n
    let s = 1.0 / n as f64;
    padded.iter_mut().for_each(|z| *z *= s);
    padded
}

/// Line Wigner function
/// `W(θ, L) = (1/π) ∫ ψ*(θ + y) ψ(θ − y) e^{2iLy} dy`.
///
/// θ values are snapped to the nearest point of the doubled grid; the
/// returned map carries the snapped values. The `y` integral is cut at a
/// quarter period, which is exact for states satisfying the localisation
/// precondition.
pub fn wigner(state: &RotorState, theta_values: &[f64], l_values: &[f64]) -> Result<WignerMap> {
    let outside = outside_probability(state);
    if outside > 1e-6 {
        return Err(RotorError::NotLocalized { outside });
    }
    let grid = state.grid();
    let fine = refine(state);
    let m = fine.len();
    let hf = grid.length() / m as f64;
    let t0 = grid.thetas()[0];
    let kmax = m / 4;

    let mut thetas = Vec::with_capacity(theta_values.len());
    let mut values = Vec::with_capacity(theta_values.len());
    let mut f = vec![Complex64::new(0.0, 0.0); kmax];
    for &theta in theta_values {
        let j = (((theta - t0) / hf).round() as i64).rem_euclid(m as i64) as usize;
        let snapped = grid.wrap_around(t0 + j as f64 * hf, theta);
        thetas.push(snapped);
        // f_k = ψ*(θ + k h) ψ(θ − k h) for 0 ≤ k < m/4; negative k are conjugates
        for (k, fk) in f.iter_mut().enumerate() {
            let a = fine[(j + k) % m];
            let b = fine[(j + m - k) % m];
            *fk = a.conj() * b;
        }
        let row = l_values
            .iter()
            .map(|&l| {
                let rot = Complex64::from_polar(1.0, 2.0 * l * hf);
                let mut phase = rot;
                let mut acc = f[0].re;
                for fk in &f[1..] {
                    acc += 2.0 * (fk * phase).re;
                    phase *= rot;
                }
                acc * hf / PI
            })
            .collect();
        values.push(row);
    }
    Ok(WignerMap {
        thetas,
        ls: l_values.to_vec(),
        values,
    })
}

/// Uniform axis of `n` points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Wigner map on a window of `±extent` standard deviations around the
/// state's mean in both directions.
pub fn wigner_auto(
    state: &RotorState,
    extent: f64,
    n_theta: usize,
    n_l: usize,
) -> Result<WignerMap> {
    let mr = moments(state, 1.0);
    let quarter = state.grid().length() / 4.0;
    let wt = (extent * mr.var_theta.sqrt()).min(quarter);
    let wl = extent * mr.var_l.sqrt();
    wigner(
        state,
        &linspace(mr.mean_theta - wt, mr.mean_theta + wt, n_theta),
        &linspace(mr.mean_l - wl, mr.mean_l + wl, n_l),
    )
}

/// Default floor on the coherent photon number for g2 evaluation.
pub const PHOTON_FLOOR: f64 = 1e-6;

/// g2 of the cavity output for given rotor potential statistics.
pub fn g2_value(
    mean_v: f64,
    var_v: f64,
    drive: DrivePoint,
    params: &SystemParams,
    floor: f64,
) -> Result<(f64, f64)> {
    let shifted = drive.delta + params.u0 * mean_v;
    let lorentz = params.kappa * params.kappa / 4.0 + shifted * shifted;
    let photons = drive.eta * drive.eta / lorentz;
    if !(photons >= floor) {
        return Err(RotorError::PhotonFloor(photons));
    }
    let g2 = 1.0 + 4.0 * params.u0 * params.u0 * shifted * shifted * var_v / (lorentz * lorentz);
    Ok((g2, photons))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct G2Series {
    /// Seconds.
    pub times: Vec<f64>,
    pub g2_values: Vec<f64>,
    pub mean_photon_numbers: Vec<f64>,
}

impl G2Series {
    /// Half the peak-to-peak swing over samples at or after `t_from`.
    pub fn amplitude_from(&self, t_from: f64) -> OscillationAmplitude {
        let tail: Vec<f64> = self
            .times
            .iter()
            .zip(&self.g2_values)
            .filter(|(t, _)| **t >= t_from)
            .map(|(_, g)| *g)
            .collect();
        OscillationAmplitude::of(&tail)
    }
}

/// Oscillation size of a signal around its baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationAmplitude {
    pub peak_to_peak: f64,
    /// Half the peak-to-peak swing.
    pub zero_to_peak: f64,
    /// Largest excursion above one.
    pub max_excess: f64,
}

impl OscillationAmplitude {
    pub fn of(values: &[f64]) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self {
                peak_to_peak: 0.0,
                zero_to_peak: 0.0,
                max_excess: 0.0,
            };
        }
        Self {
            peak_to_peak: hi - lo,
            zero_to_peak: 0.5 * (hi - lo),
            max_excess: hi - 1.0,
        }
    }
}

/// g2 along a trajectory, with the drive read from the schedule at each
/// sample time and `⟨V⟩`, `⟨δV²⟩` from the recorded samples.
pub fn g2_series(
    trajectory: &Trajectory,
    schedule: &DriveSchedule,
    params: &SystemParams,
) -> Result<G2Series> {
    let mut out = G2Series::default();
    for s in &trajectory.samples {
        let drive = schedule.drive_at(s.time);
        let (g2, n) = g2_value(s.mean_v, s.var_v, drive, params, PHOTON_FLOOR)?;
        out.times.push(s.time);
        out.g2_values.push(g2);
        out.mean_photon_numbers.push(n);
    }
    Ok(out)
}
