//! Run configuration: one JSON document, unit suffixes on every physical
//! key, unknown keys rejected.
//!
//! Frequencies ending in `_hz` are ordinary frequencies; rates and energies
//! are converted as `ω = 2π f` and `E = 2πħ f`. Times ending in `_us` are
//! microseconds. Keys ending in `_rotor` are in rotor units (time `t0`,
//! energy `c2/N`).

use std::f64::consts::TAU;
use std::path::Path;
use std::sync::Arc;

use rotor_core::calibration::{back_solve, Calibration, CalibrationTargets, EnergyScale};
use rotor_core::dynamics::{
    default_dt, AngularGrid, Period, PhotonRefresh, RotorModel, SnapshotAt,
};
use rotor_core::model::{derive_constants, DrivePoint, SystemParams, HBAR};
use rotor_core::protocol::{
    dimensionless_harmonic_frequency, harmonic_frequency, make_squeeze_schedule, DriveSchedule,
    RampShape, Segment, SqueezeProtocolSpec,
};
use rotor_core::stochastic::{AtomNumberDistribution, NoiseConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    /// Target trap frequencies. Without explicit `c2_hz`, `q_hz` and `u0_hz`
    /// these also fix the microscopic parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drives: Option<DrivesConfig>,
    pub grid: GridConfig,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub observers: ObserverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> String {
    "out".into()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub atom_number: u64,
    pub kappa_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_hz: Option<f64>,
    #[serde(default = "yes")]
    pub chi2_enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsConfig {
    pub omega_tight_hz: f64,
    pub omega_wide_hz: f64,
    /// `U0 N / κ`; only used when back-solving.
    #[serde(default = "default_depth")]
    pub depth: f64,
    #[serde(default)]
    pub energy_scale: EnergyScaleConfig,
}

fn default_depth() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyScaleConfig {
    ChiRatio(f64),
    /// Tight-trap frequency in rotor units.
    TightStiffnessRotor(f64),
}

impl Default for EnergyScaleConfig {
    fn default() -> Self {
        EnergyScaleConfig::ChiRatio(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesConfig {
    pub tight: DriveConfig,
    pub wide: DriveConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub eta_hz: f64,
    pub delta_hz: f64,
}

impl DriveConfig {
    pub fn to_drive(self) -> DrivePoint {
        DrivePoint::new(TAU * self.eta_hz, TAU * self.delta_hz)
    }

    pub fn from_drive(d: DrivePoint) -> Self {
        Self {
            eta_hz: d.eta / TAU,
            delta_hz: d.delta / TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PeriodConfig {
    #[default]
    Pi,
    TwoPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    #[serde(default)]
    pub period: PeriodConfig,
    /// Largest step; the default rule applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_rotor: Option<f64>,
    #[serde(default = "default_ground_tol")]
    pub ground_tol_rotor: f64,
}

fn default_ground_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolConfig {
    Squeeze(SqueezeConfig),
    Segments(Vec<SegmentConfig>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeConfig {
    pub n_cycles: usize,
    #[serde(default)]
    pub switch_time_us: f64,
    #[serde(default)]
    pub prep_time_us: f64,
    /// Tight hold after the last cycle, in tight-trap periods.
    #[serde(default)]
    pub post_hold_periods: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeConfig {
    Hold,
    Linear,
    Smoothstep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedDrive {
    Tight,
    Wide,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriveRef {
    Named(NamedDrive),
    Explicit(DriveConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub duration_us: f64,
    pub shape: ShapeConfig,
    pub from: DriveRef,
    /// Ramp end point; ignored for holds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<DriveRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistributionConfig {
    #[default]
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RefreshConfig {
    #[default]
    Segment,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub photon_noise: bool,
    #[serde(default)]
    pub atom_number_sigma_rel: f64,
    #[serde(default)]
    pub atom_distribution: DistributionConfig,
    #[serde(default)]
    pub photon_refresh: RefreshConfig,
    #[serde(default = "one")]
    pub n_trajectories: usize,
}

fn one() -> usize {
    1
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            photon_noise: false,
            atom_number_sigma_rel: 0.0,
            atom_distribution: DistributionConfig::Gaussian,
            photon_refresh: RefreshConfig::Segment,
            n_trajectories: 1,
        }
    }
}

impl NoiseSection {
    pub fn is_ensemble(&self) -> bool {
        self.n_trajectories > 1
            || self.photon_noise
            || self.atom_number_sigma_rel > 0.0
            || self.atom_distribution == DistributionConfig::Poisson
    }

    pub fn to_noise(&self, seed: u64) -> NoiseConfig {
        NoiseConfig {
            photon_noise_enabled: self.photon_noise,
            atom_number_sigma_rel: self.atom_number_sigma_rel,
            atom_distribution: match self.atom_distribution {
                DistributionConfig::Gaussian => AtomNumberDistribution::Gaussian,
                DistributionConfig::Poisson => AtomNumberDistribution::Poisson,
            },
            photon_refresh: match self.photon_refresh {
                RefreshConfig::Segment => PhotonRefresh::Segment,
                RefreshConfig::Step => PhotonRefresh::Step,
            },
            seed,
            n_trajectories: self.n_trajectories,
        }
    }
}

/// Named points of a squeeze protocol at which Wigner maps are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerEvent {
    Start,
    /// End of the first wide hold: the state right after the first squeeze.
    AfterFirstSwitch,
    /// End of the last tight hold of the cycles.
    AfterLastCycle,
    End,
}

impl WignerEvent {
    pub fn label(self) -> &'static str {
        match self {
            WignerEvent::Start => "start",
            WignerEvent::AfterFirstSwitch => "after_first_switch",
            WignerEvent::AfterLastCycle => "after_last_cycle",
            WignerEvent::End => "end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    /// Moment and g2 sample every this many steps; zero disables the time
    /// series.
    #[serde(default)]
    pub moments_stride: usize,
    #[serde(default)]
    pub wigner_events: Vec<WignerEvent>,
    #[serde(default)]
    pub wigner_times_us: Vec<f64>,
    #[serde(default = "default_wigner_points")]
    pub wigner_n_theta: usize,
    #[serde(default = "default_wigner_points")]
    pub wigner_n_l: usize,
    /// Half-width of the Wigner window in standard deviations.
    #[serde(default = "default_extent")]
    pub wigner_extent: f64,
}

fn default_wigner_points() -> usize {
    121
}

fn default_extent() -> f64 {
    5.0
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            moments_stride: 0,
            wigner_events: Vec::new(),
            wigner_times_us: Vec::new(),
            wigner_n_theta: default_wigner_points(),
            wigner_n_l: default_wigner_points(),
            wigner_extent: default_extent(),
        }
    }
}

/// Tolerances for the `validate` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default = "default_oracle_n")]
    pub oracle_max_n: u32,
    #[serde(default = "default_conservation_steps")]
    pub conservation_steps: usize,
    #[serde(default = "default_norm_tol")]
    pub norm_tol: f64,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    /// Largest acceptable final-state error at the configured step.
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_squeeze_tol")]
    pub squeeze_tol: f64,
}

fn default_oracle_n() -> u32 {
    40
}
fn default_conservation_steps() -> usize {
    20_000
}
fn default_norm_tol() -> f64 {
    1e-10
}
fn default_energy_tol() -> f64 {
    1e-6
}
fn default_convergence_tol() -> f64 {
    1e-6
}
fn default_squeeze_tol() -> f64 {
    0.02
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            oracle_max_n: default_oracle_n(),
            conservation_steps: default_conservation_steps(),
            norm_tol: default_norm_tol(),
            energy_tol: default_energy_tol(),
            convergence_tol: default_convergence_tol(),
            squeeze_tol: default_squeeze_tol(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that do not need any physics.
    pub fn check(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let s = &self.system;
        if s.atom_number < 1 {
            return bad("system.atom_number must be at least 1");
        }
        if !(s.kappa_hz > 0.0) {
            return bad("system.kappa_hz must be positive");
        }
        let given = [s.c2_hz, s.q_hz, s.u0_hz]
            .iter()
            .filter(|x| x.is_some())
            .count();
        if given != 0 && given != 3 {
            return bad("give all of system.c2_hz, q_hz and u0_hz, or none of them");
        }
        if given == 0 && self.targets.is_none() {
            return bad("without c2_hz, q_hz and u0_hz the targets section is required");
        }
        if given == 3 && self.drives.is_none() && self.targets.is_none() {
            return bad("explicit system parameters need drives or targets");
        }
        if let Some(v) = s.c2_hz {
            if !(v > 0.0) {
                return bad("system.c2_hz must be positive");
            }
        }
        if let Some(v) = s.u0_hz {
            if !v.is_finite() {
                return bad("system.u0_hz must be finite");
            }
        }
        if let Some(v) = s.q_hz {
            if !v.is_finite() {
                return bad("system.q_hz must be finite");
            }
        }
        if let Some(t) = &self.targets {
            if !(t.omega_tight_hz > t.omega_wide_hz && t.omega_wide_hz > 0.0) {
                return bad("targets need omega_tight_hz > omega_wide_hz > 0");
            }
        }
        if let Some(g) = self.grid.dt_rotor {
            if !(g > 0.0) {
                return bad("grid.dt_rotor must be positive");
            }
        }
        match &self.protocol {
            ProtocolConfig::Squeeze(p) => {
                if p.n_cycles < 1 {
                    return bad("protocol.squeeze.n_cycles must be at least 1");
                }
                if !(p.switch_time_us >= 0.0 && p.prep_time_us >= 0.0 && p.post_hold_periods >= 0.0)
                {
                    return bad("protocol times must be non-negative");
                }
            }
            ProtocolConfig::Segments(segs) => {
                if segs.is_empty() {
                    return bad("protocol.segments is empty");
                }
                for s in segs {
                    if !(s.duration_us >= 0.0) {
                        return bad("segment durations must be non-negative");
                    }
                    if s.shape != ShapeConfig::Hold && s.to.is_none() {
                        return bad("ramp segments need a `to` drive");
                    }
                }
                if !self
                    .observers
                    .wigner_events
                    .iter()
                    .all(|e| matches!(e, WignerEvent::Start | WignerEvent::End))
                {
                    return bad(
                        "only start and end Wigner events are defined for segment protocols",
                    );
                }
            }
        }
        if self.noise.n_trajectories < 1 {
            return bad("noise.n_trajectories must be at least 1");
        }
        if !(0.0..0.5).contains(&self.noise.atom_number_sigma_rel) {
            return bad("noise.atom_number_sigma_rel must lie in [0, 0.5)");
        }
        let o = &self.observers;
        if o.wigner_n_theta < 2 || o.wigner_n_l < 2 || !(o.wigner_extent > 0.0) {
            return bad("Wigner grids need at least 2 points per axis and a positive extent");
        }
        if o.wigner_times_us.iter().any(|t| !(*t >= 0.0)) {
            return bad("observers.wigner_times_us must be non-negative");
        }
        Ok(())
    }

    pub fn period(&self) -> Period {
        match self.grid.period {
            PeriodConfig::Pi => Period::Pi,
            PeriodConfig::TwoPi => Period::TwoPi,
        }
    }

    pub fn explicit_params(&self) -> Option<SystemParams> {
        let s = &self.system;
        Some(SystemParams {
            atom_number: s.atom_number,
            c2: TAU * HBAR * s.c2_hz?,
            q: TAU * HBAR * s.q_hz?,
            u0: TAU * s.u0_hz?,
            kappa: TAU * s.kappa_hz,
            hbar: HBAR,
            chi2_enabled: s.chi2_enabled,
        })
    }

    /// Microscopic parameters and the two drives. Back-solves from the
    /// targets when the system section leaves the parameters open; with
    /// explicit parameters but no drives, the pump rate is the one that puts
    /// the tight target at zero detuning.
    pub fn calibration(&self) -> CliResult<Calibration> {
        match (self.explicit_params(), &self.drives) {
            (None, _) => {
                let t = self.targets.expect("checked");
                Ok(back_solve(&CalibrationTargets {
                    omega_tight: TAU * t.omega_tight_hz,
                    omega_wide: TAU * t.omega_wide_hz,
                    atom_number: self.system.atom_number,
                    kappa: TAU * self.system.kappa_hz,
                    depth: t.depth,
                    scale: match t.energy_scale {
                        EnergyScaleConfig::ChiRatio(r) => EnergyScale::ChiRatio(r),
                        EnergyScaleConfig::TightStiffnessRotor(w) => EnergyScale::TightStiffness(w),
                    },
                })?)
            }
            (Some(params), Some(d)) => {
                explicit_calibration(params, d.tight.to_drive(), d.wide.to_drive())
            }
            (Some(params), None) => {
                let t = self.targets.expect("checked");
                let drives = crate::commands::calibrate::solve_drives(&params, None, &t)?;
                explicit_calibration(params, drives.0, drives.1)
            }
        }
    }

    /// The config with every derived quantity written out: microscopic
    /// parameters and both drives.
    pub fn with_calibration(&self, c: &Calibration) -> RunConfig {
        let mut out = self.clone();
        out.system.c2_hz = Some(c.params.c2 / (TAU * HBAR));
        out.system.q_hz = Some(c.params.q / (TAU * HBAR));
        out.system.u0_hz = Some(c.params.u0 / TAU);
        out.drives = Some(DrivesConfig {
            tight: DriveConfig::from_drive(c.drive_tight),
            wide: DriveConfig::from_drive(c.drive_wide),
        });
        out
    }
}

pub fn explicit_calibration(
    params: SystemParams,
    tight: DrivePoint,
    wide: DrivePoint,
) -> CliResult<Calibration> {
    let constants = derive_constants(&params)?;
    Ok(Calibration {
        params,
        constants,
        drive_tight: tight,
        drive_wide: wide,
        achieved_tight: harmonic_frequency(tight, &constants, &params)?,
        achieved_wide: harmonic_frequency(wide, &constants, &params)?,
    })
}

/// Everything a run needs, resolved from the config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub calibration: Calibration,
    pub grid: Arc<AngularGrid>,
    pub model: RotorModel,
    /// Rotor units.
    pub dt: f64,
    /// Tight-trap frequency in rotor units, the squeezing reference.
    pub omega_ref: f64,
    pub schedule: DriveSchedule,
    pub squeeze: Option<SqueezeProtocolSpec>,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        let calibration = cfg.calibration()?;
        Self::with_calibration(cfg, calibration)
    }

    pub fn with_calibration(cfg: &RunConfig, calibration: Calibration) -> CliResult<Self> {
        let c = &calibration;
        let grid = AngularGrid::new(cfg.grid.n_points, cfg.period())?;
        let model = RotorModel::new(c.params, grid.clone())?;
        let omega_ref = dimensionless_harmonic_frequency(c.drive_tight, &c.constants, &c.params)?;
        let dt = cfg
            .grid
            .dt_rotor
            .unwrap_or_else(|| default_dt(&grid, omega_ref));
        let mut warnings = Vec::new();
        let (schedule, squeeze) = match &cfg.protocol {
            ProtocolConfig::Squeeze(p) => {
                let spec = SqueezeProtocolSpec {
                    n_cycles: p.n_cycles,
                    omega_tight: c.achieved_tight,
                    omega_wide: c.achieved_wide,
                    switch_time: p.switch_time_us * 1e-6,
                    drive_tight: c.drive_tight,
                    drive_wide: c.drive_wide,
                    prep_time: p.prep_time_us * 1e-6,
                };
                warnings.extend(spec.warnings());
                let mut s = make_squeeze_schedule(&spec)?;
                if p.post_hold_periods > 0.0 {
                    s.push(Segment::hold(
                        c.drive_tight,
                        p.post_hold_periods * TAU / c.achieved_tight,
                    ));
                }
                (s, Some(spec))
            }
            ProtocolConfig::Segments(segs) => {
                let resolve = |r: DriveRef| match r {
                    DriveRef::Named(NamedDrive::Tight) => c.drive_tight,
                    DriveRef::Named(NamedDrive::Wide) => c.drive_wide,
                    DriveRef::Named(NamedDrive::Off) => DrivePoint::off(),
                    DriveRef::Explicit(d) => d.to_drive(),
                };
                let list = segs
                    .iter()
                    .map(|s| {
                        let d = s.duration_us * 1e-6;
                        match s.shape {
                            ShapeConfig::Hold => Segment::hold(resolve(s.from), d),
                            ShapeConfig::Linear => Segment::ramp(
                                resolve(s.from),
                                resolve(s.to.expect("checked")),
                                d,
                                RampShape::Linear,
                            ),
                            ShapeConfig::Smoothstep => Segment::ramp(
                                resolve(s.from),
                                resolve(s.to.expect("checked")),
                                d,
                                RampShape::Smoothstep,
                            ),
                        }
                    })
                    .collect();
                (DriveSchedule::new(list)?, None)
            }
        };
        let total_us = schedule.total_duration() * 1e6;
        if let Some(t) = cfg
            .observers
            .wigner_times_us
            .iter()
            .find(|t| **t > total_us * (1.0 + 1e-12))
        {
            return Err(CliError::Config(format!(
                "Wigner time {t} us lies beyond the schedule end at {total_us} us"
            )));
        }
        Ok(Self {
            calibration,
            grid,
            model,
            dt,
            omega_ref,
            schedule,
            squeeze,
            warnings,
        })
    }

    /// Snapshot requests with file labels, in config order.
    pub fn snapshot_requests(&self, cfg: &RunConfig) -> Vec<(String, SnapshotAt)> {
        let mut out = Vec::new();
        let prep = self
            .squeeze
            .map(|s| usize::from(s.prep_time > 0.0))
            .unwrap_or(0);
        for e in &cfg.observers.wigner_events {
            let at = match e {
                WignerEvent::Start => SnapshotAt::Start,
                WignerEvent::End => SnapshotAt::End,
                WignerEvent::AfterFirstSwitch => SnapshotAt::SegmentEnd(prep + 1),
                WignerEvent::AfterLastCycle => {
                    let n = self.squeeze.map(|s| s.n_cycles).unwrap_or(1);
                    SnapshotAt::SegmentEnd(prep + 4 * n - 1)
                }
            };
            out.push((e.label().to_string(), at));
        }
        for t in &cfg.observers.wigner_times_us {
            out.push((format!("t{t}us"), SnapshotAt::Time(t * 1e-6)));
        }
        out
    }
}
