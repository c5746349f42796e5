//! Photon-intensity noise, shot-to-shot atom-number fluctuations and
//! ensembles of independent trajectories.
//!
//! Trajectory `i` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `i`: first the atom number, then the unit Ornstein–Uhlenbeck path.
//! Results are gathered in index order and reduced sequentially, so the
//! statistics do not depend on how trajectories were scheduled.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::analysis::{MomentReport, PhaseSpaceCovariance};
use crate::dynamics::{
    evolve_planned, ground_state, AngularGrid, GroundStateOptions, IntensityNoise, Observers,
    PhotonRefresh, RotorModel, RotorState, Trajectory,
};
use crate::error::{Result, RotorError};
use crate::exec::Execution;
use crate::model::SystemParams;
use crate::protocol::DriveSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtomNumberDistribution {
    #[default]
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub photon_noise_enabled: bool,
    pub atom_number_sigma_rel: f64,
    pub atom_distribution: AtomNumberDistribution,
    pub photon_refresh: PhotonRefresh,
    pub seed: u64,
    pub n_trajectories: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            photon_noise_enabled: true,
            atom_number_sigma_rel: 0.05,
            atom_distribution: AtomNumberDistribution::Gaussian,
            photon_refresh: PhotonRefresh::Segment,
            seed: 0,
            n_trajectories: 1,
        }
    }
}

impl NoiseConfig {
    /// One trajectory without any noise.
    pub fn quiet(seed: u64) -> Self {
        Self {
            photon_noise_enabled: false,
            atom_number_sigma_rel: 0.0,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atom_number_sigma_rel >= 0.0 && self.atom_number_sigma_rel < 0.5) {
            return Err(RotorError::InvalidParameter(format!(
                "atom number sigma must lie in [0, 0.5), got {}",
                self.atom_number_sigma_rel
            )));
        }
        if self.n_trajectories < 1 {
            return Err(RotorError::InvalidParameter(
                "need at least one trajectory".into(),
            ));
        }
        Ok(())
    }

    fn atom_noise(&self) -> bool {
        self.atom_number_sigma_rel > 0.0
            || self.atom_distribution == AtomNumberDistribution::Poisson
    }
}

/// Random generator of trajectory `index`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Multiplicative intensity factors on the cavity term.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPath {
    pub factors: Vec<f64>,
    /// Step in seconds.
    pub dt: f64,
    /// `1/κ` in seconds.
    pub correlation_time: f64,
}

/// Stationary unit Ornstein–Uhlenbeck samples with correlation rate `kappa`
/// at the given step lengths (seconds). The update is the exact transition
/// density, so any step length is faithful.
pub fn sample_unit_ou<R: Rng + ?Sized>(dts: &[f64], kappa: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(dts.len());
    let mut z: f64 = rng.sample(StandardNormal);
    let mut cached = (f64::NAN, 0.0, 0.0);
    for &dt in dts {
        if dt != cached.0 {
            let a = (-kappa * dt).exp();
            cached = (dt, a, (1.0 - a * a).max(0.0).sqrt());
        }
        let xi: f64 = rng.sample(StandardNormal);
        z = cached.1 * z + cached.2 * xi;
        out.push(z);
    }
    out
}

/// Intensity factors `max(0, 1 + z/sqrt(n̄))` with `z` a stationary unit OU
/// process of correlation time `1/κ`.
pub fn sample_intensity_path<R: Rng + ?Sized>(
    n_steps: usize,
    dt: f64,
    kappa: f64,
    mean_photons: f64,
    rng: &mut R,
) -> Result<IntensityPath> {
    if !(mean_photons > 0.0) {
        return Err(RotorError::InvalidParameter(format!(
            "mean photon number must be positive, got {mean_photons}"
        )));
    }
    if !(dt > 0.0) || !(kappa > 0.0) {
        return Err(RotorError::InvalidParameter(
            "dt and kappa must be positive".into(),
        ));
    }
    if dt * kappa > 1.0 {
        log::warn!(
            "noise step {dt:e} s exceeds the correlation time {:e} s",
            1.0 / kappa
        );
    }
    let scale = 1.0 / mean_photons.sqrt();
    let z = sample_unit_ou(&vec![dt; n_steps], kappa, rng);
    Ok(IntensityPath {
        factors: z.iter().map(|x| (1.0 + scale * x).max(0.0)).collect(),
        dt,
        correlation_time: 1.0 / kappa,
    })
}

/// Gaussian shot-to-shot atom number, rounded and floored at one.
pub fn sample_atom_number<R: Rng + ?Sized>(
    nominal: u64,
    sigma_rel: f64,
    rng: &mut R,
) -> Result<u64> {
    sample_atom_number_with(nominal, sigma_rel, AtomNumberDistribution::Gaussian, rng)
}

pub fn sample_atom_number_with<R: Rng + ?Sized>(
    nominal: u64,
    sigma_rel: f64,
    distribution: AtomNumberDistribution,
    rng: &mut R,
) -> Result<u64> {
    if !(0.0..0.5).contains(&sigma_rel) {
        return Err(RotorError::InvalidParameter(format!(
            "relative sigma must lie in [0, 0.5), got {sigma_rel}"
        )));
    }
    match distribution {
        AtomNumberDistribution::Gaussian => {
            if sigma_rel == 0.0 {
                return Ok(nominal);
            }
            let z: f64 = rng.sample(StandardNormal);
            let n = nominal as f64 * (1.0 + sigma_rel * z);
            Ok(n.round().max(1.0) as u64)
        }
        AtomNumberDistribution::Poisson => {
            let p = Poisson::new(nominal as f64)
                .map_err(|e| RotorError::InvalidParameter(format!("poisson: {e}")))?;
            Ok((p.sample(rng) as u64).max(1))
        }
    }
}

/// Everything one trajectory of an ensemble needs besides its noise draw.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    /// Nominal parameters; the protocol timing is built from these.
    pub params: SystemParams,
    pub grid: Arc<AngularGrid>,
    pub schedule: DriveSchedule,
    /// Largest step in rotor units of the nominal parameters.
    pub dt: f64,
    pub observers: Observers,
    /// Energy tolerance for the initial ground state (rotor units).
    pub ground_tol: f64,
    /// Start every trajectory from this state instead of its own ground state.
    pub initial_state: Option<RotorState>,
    pub keep_trajectories: bool,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub index: usize,
    pub atom_number: u64,
    pub trajectory: Trajectory,
}

/// Runs trajectory `index` of the ensemble.
pub fn run_trajectory(
    spec: &EnsembleSpec,
    noise: &NoiseConfig,
    index: usize,
) -> Result<TrajectoryRun> {
    let mut rng = trajectory_rng(noise.seed, index);
    let nominal = spec.params.atom_number;
    let atom_number = if noise.atom_noise() {
        sample_atom_number_with(
            nominal,
            noise.atom_number_sigma_rel,
            noise.atom_distribution,
            &mut rng,
        )?
    } else {
        nominal
    };
    let params = spec.params.with_atom_number(atom_number);
    let model = RotorModel::new(params, spec.grid.clone())?;
    let nominal_t0 = crate::model::derive_constants(&spec.params)?.t0;
    let plan = spec.schedule.step_plan(spec.dt * nominal_t0)?;

    let state = match &spec.initial_state {
        Some(s) => s.clone(),
        None => {
            let v = model.potential(spec.schedule.initial_drive(), 1.0)?;
            ground_state(
                &spec.grid,
                &v,
                GroundStateOptions::with_tol(spec.ground_tol),
            )?
            .state
        }
    };
    let intensity = if noise.photon_noise_enabled {
        let dts: Vec<f64> = plan
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.dt, p.steps))
            .collect();
        Some(IntensityNoise::ShotNoise {
            unit: sample_unit_ou(&dts, params.kappa, &mut rng),
            refresh: noise.photon_refresh,
        })
    } else {
        None
    };
    let trajectory = evolve_planned(
        &state,
        &model,
        &spec.schedule,
        intensity.as_ref(),
        &plan,
        1.0,
        &spec.observers,
    )?;
    Ok(TrajectoryRun {
        index,
        atom_number,
        trajectory,
    })
}

/// Quantities averaged across trajectories at each sample.
pub const SUMMARY_FIELDS: [&str; 8] = [
    "mean_theta",
    "var_theta",
    "mean_l",
    "var_l",
    "covar",
    "min_variance_ratio",
    "mean_v",
    "var_v",
];

fn summary_values(m: &MomentReport, mean_v: f64, var_v: f64) -> [f64; 8] {
    [
        m.mean_theta,
        m.var_theta,
        m.mean_l,
        m.var_l,
        m.covar_theta_l,
        m.min_variance_ratio,
        mean_v,
        var_v,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    /// Seconds.
    pub time: f64,
    pub mean: [f64; 8],
    pub stderr: [f64; 8],
    /// Covariance of the mixture of all trajectories (spread of the means
    /// included), scaled by the reference frequency.
    pub mixture: PhaseSpaceCovariance,
}

impl SampleStats {
    pub fn field(&self, name: &str) -> Option<(f64, f64)> {
        SUMMARY_FIELDS
            .iter()
            .position(|f| *f == name)
            .map(|i| (self.mean[i], self.stderr[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub samples: Vec<SampleStats>,
    pub n_ok: usize,
    pub failures: Vec<TrajectoryFailure>,
    pub atom_numbers: Vec<u64>,
    /// Final-state moments of every successful trajectory, in index order.
    pub final_moments: Vec<MomentReport>,
    pub warnings: Vec<String>,
    pub trajectories: Vec<TrajectoryRun>,
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs all trajectories and reduces them in index order.
pub fn run_ensemble(
    spec: &EnsembleSpec,
    noise: &NoiseConfig,
    execution: Execution,
) -> Result<EnsembleStats> {
    noise.validate()?;
    spec.params.validate()?;
    let results = execution.map(noise.n_trajectories, |i| run_trajectory(spec, noise, i));

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => {
                log::warn!("trajectory {index} failed: {e}");
                failures.push(TrajectoryFailure {
                    index,
                    error: e.to_string(),
                })
            }
        }
    }

    let mut warnings = Vec::new();
    for run in &runs {
        for w in &run.trajectory.warnings {
            warnings.push(format!("trajectory {}: {w}", run.index));
        }
    }

    let n_samples = runs
        .iter()
        .map(|r| r.trajectory.samples.len())
        .min()
        .unwrap_or(0);
    if runs.iter().any(|r| r.trajectory.samples.len() != n_samples) {
        warnings.push("trajectories recorded different sample counts; statistics truncated".into());
    }
    let omega_ref = spec.observers.omega_ref;
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let rows: Vec<[f64; 8]> = runs
            .iter()
            .map(|r| {
                let x = &r.trajectory.samples[s];
                summary_values(&x.moments, x.mean_v, x.var_v)
            })
            .collect();
        let mut mean = [0.0; 8];
        let mut stderr = [0.0; 8];
        for f in 0..8 {
            let col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            let (m, e) = mean_and_stderr(&col);
            mean[f] = m;
            stderr[f] = e;
        }
        // law of total covariance over the trajectory mixture
        let n = rows.len() as f64;
        let pop = |a: usize, b: usize| {
            rows.iter()
                .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                .sum::<f64>()
                / n
        };
        let mixture = PhaseSpaceCovariance::from_moments(
            mean[1] + pop(0, 0),
            mean[4] + pop(0, 2),
            mean[3] + pop(2, 2),
            omega_ref,
        );
        samples.push(SampleStats {
            time: runs[0].trajectory.samples[s].time,
            mean,
            stderr,
            mixture,
        });
    }

    let final_moments = runs
        .iter()
        .map(|r| crate::analysis::moments(&r.trajectory.final_state, omega_ref))
        .collect();
    let atom_numbers = runs.iter().map(|r| r.atom_number).collect();
    Ok(EnsembleStats {
        samples,
        n_ok: runs.len(),
        failures,
        atom_numbers,
        final_moments,
        warnings,
        trajectories: if spec.keep_trajectories {
            runs
        } else {
            Vec::new()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_noise_is_exactly_one() {
        let mut rng = trajectory_rng(1, 0);
        let p = sample_intensity_path(100, 1e-8, 1e6, f64::INFINITY, &mut rng).unwrap();
        assert!(p.factors.iter().all(|&f| f == 1.0));
        assert!(sample_intensity_path(10, 1e-8, 1e6, 0.0, &mut rng).is_err());
    }

    #[test]
    fn atom_number_edge_cases() {
        let mut rng = trajectory_rng(3, 2);
        assert_eq!(sample_atom_number(10_000, 0.0, &mut rng).unwrap(), 10_000);
        assert!(sample_atom_number(10, 0.6, &mut rng).is_err());
        for _ in 0..100 {
            assert!(sample_atom_number(1, 0.49, &mut rng).unwrap() >= 1);
        }
        let a: Vec<u64> = (0..5)
            .map(|_| sample_atom_number(1000, 0.1, &mut trajectory_rng(9, 4)).unwrap())
            .collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn streams_differ() {
        let x: f64 = trajectory_rng(5, 0).sample(StandardNormal);
        let y: f64 = trajectory_rng(5, 1).sample(StandardNormal);
        assert_ne!(x, y);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, e) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((e - 1.0).abs() < 1e-15);
    }
}
