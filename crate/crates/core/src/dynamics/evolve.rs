use std::sync::Arc;

use num_complex::Complex64;

use super::grid::AngularGrid;
use super::propagator::{PotentialSamples, SplitStep};
use super::state::RotorState;
use crate::analysis::{moments, potential_moments, MomentReport};
use crate::error::{Result, RotorError};
use crate::model::{
    bare_potential, derive_constants, steady_photon_number, DrivePoint, EffectivePotential,
    RotorConstants, SystemParams,
};
use crate::protocol::{DriveSchedule, RampShape, SegmentSteps};

/// Parameters, derived constants and grid bundled with the bare potential
/// sampled once.
#[derive(Debug, Clone)]
pub struct RotorModel {
    params: SystemParams,
    constants: RotorConstants,
    grid: Arc<AngularGrid>,
    bare: Vec<f64>,
}

impl RotorModel {
    pub fn new(params: SystemParams, grid: Arc<AngularGrid>) -> Result<Self> {
        let constants = derive_constants(&params)?;
        let bare = grid.sample(|t| bare_potential(t, &constants));
        Ok(Self {
            params,
            constants,
            grid,
            bare,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn constants(&self) -> &RotorConstants {
        &self.constants
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    /// Bare `V(θ)` on the grid (no `β`).
    pub fn bare_samples(&self) -> &[f64] {
        &self.bare
    }

    /// `β V` and `β A atan(...)` on the grid, so that the potential with an
    /// intensity factor `f` is `base + f · cavity`.
    pub fn split_potential(&self, drive: DrivePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        let beta = self.constants.beta;
        let base: Vec<f64> = self.bare.iter().map(|v| beta * v).collect();
        if drive.eta == 0.0 {
            return Ok((base, vec![0.0; self.bare.len()]));
        }
        let field = EffectivePotential::new(&self.constants, &self.params, drive)?;
        let w = beta * field.cavity_weight();
        let cavity = self
            .bare
            .iter()
            .map(|&v| w * field.cavity_shape(v))
            .collect();
        Ok((base, cavity))
    }

    /// `β V_eff` on the grid with the cavity term scaled by `intensity`.
    pub fn potential(&self, drive: DrivePoint, intensity: f64) -> Result<PotentialSamples> {
        let (base, cavity) = self.split_potential(drive)?;
        let v = base
            .iter()
            .zip(&cavity)
            .map(|(b, c)| b + intensity * c)
            .collect();
        PotentialSamples::from_energies(&self.grid, v)
    }

    /// `⟨V⟩` of the bare potential.
    pub fn mean_bare(&self, state: &RotorState) -> f64 {
        state
            .amplitudes()
            .iter()
            .zip(&self.bare)
            .map(|(z, v)| z.norm_sqr() * v)
            .sum::<f64>()
            * self.grid.spacing()
    }
}

/// When the photon number that sets the shot-noise strength is refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhotonRefresh {
    #[default]
    Segment,
    Step,
}

/// Intensity fluctuations applied to the cavity term, one value per step.
#[derive(Debug, Clone, PartialEq)]
pub enum IntensityNoise {
    /// Fixed multiplicative factors.
    Factors(Vec<f64>),
    /// A unit-variance process `z`; the factor is `max(0, 1 + z/sqrt(n̄))`
    /// with `n̄` the steady photon number at the current `⟨V⟩`.
    ShotNoise {
        unit: Vec<f64>,
        refresh: PhotonRefresh,
    },
}

impl IntensityNoise {
    fn len(&self) -> usize {
        match self {
            IntensityNoise::Factors(f) => f.len(),
            IntensityNoise::ShotNoise { unit, .. } => unit.len(),
        }
    }
}

/// Which states to keep during an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnapshotAt {
    Start,
    /// After segment `i` has completed.
    SegmentEnd(usize),
    /// First step boundary at or after this time (seconds).
    Time(f64),
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observers {
    /// Record a sample every `stride` steps (plus start and end); zero
    /// disables sampling.
    pub stride: usize,
    /// Reference frequency for squeezing diagnostics (rotor units).
    pub omega_ref: f64,
    pub snapshots: Vec<SnapshotAt>,
}

impl Observers {
    pub fn none() -> Self {
        Self {
            stride: 0,
            omega_ref: 1.0,
            snapshots: Vec::new(),
        }
    }

    pub fn every(stride: usize, omega_ref: f64) -> Self {
        Self {
            stride,
            omega_ref,
            snapshots: Vec::new(),
        }
    }

    pub fn with_snapshots(mut self, snapshots: Vec<SnapshotAt>) -> Self {
        self.snapshots = snapshots;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Seconds since the start of the schedule.
    pub time: f64,
    pub step: usize,
    pub drive: DrivePoint,
    /// Intensity factor used for the step that ended here.
    pub intensity: f64,
    pub moments: MomentReport,
    /// `⟨V⟩` of the bare potential.
    pub mean_v: f64,
    /// `⟨δV²⟩` of the bare potential.
    pub var_v: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub at: SnapshotAt,
    pub state: RotorState,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: RotorState,
    pub steps: usize,
    pub warnings: Vec<String>,
}

/// Population in the outer 10% of the momentum lattice that triggers a
/// resolution warning.
pub const EDGE_WARNING: f64 = 1e-8;

/// Evolves `state` through `schedule` with steps no longer than `dt` (rotor
/// units). Each segment is cut into equal steps; the potential is evaluated
/// at the midpoint of every step. A negative `dt` propagates backwards in
/// time, which together with [`DriveSchedule::reversed`] undoes a forward
/// run. Sample times are always measured along the schedule.
pub fn evolve(
    state: &RotorState,
    model: &RotorModel,
    schedule: &DriveSchedule,
    noise: Option<&IntensityNoise>,
    dt: f64,
    observers: &Observers,
) -> Result<Trajectory> {
    if !(dt != 0.0) || !dt.is_finite() {
        return Err(RotorError::InvalidParameter(format!(
            "time step must be non-zero, got {dt}"
        )));
    }
    let plan = schedule.step_plan(model.constants().to_seconds(dt.abs()))?;
    evolve_planned(state, model, schedule, noise, &plan, dt.signum(), observers)
}

/// [`evolve`] with an explicit step plan. `direction` is `±1`.
pub fn evolve_planned(
    state: &RotorState,
    model: &RotorModel,
    schedule: &DriveSchedule,
    noise: Option<&IntensityNoise>,
    plan: &[SegmentSteps],
    direction: f64,
    observers: &Observers,
) -> Result<Trajectory> {
    if state.grid().n_points() != model.grid().n_points()
        || state.grid().period() != model.grid().period()
    {
        return Err(RotorError::InvalidParameter(
            "state and model use different grids".into(),
        ));
    }
    let total: usize = plan.iter().map(|p| p.steps).sum();
    if let Some(n) = noise {
        if n.len() != total {
            return Err(RotorError::NoiseLengthMismatch {
                expected: total,
                got: n.len(),
            });
        }
    }
    let constants = *model.constants();
    let params = *model.params();
    let grid = model.grid().clone();
    let n = grid.n_points();
    let segments = schedule.segments();

    let mut psi = state.clone();
    let start_time = psi.time;
    let mut rec = Recorder::new(observers, &constants);
    let mut t = 0.0f64;
    let mut step_index = 0usize;
    let mut intensity = 1.0;
    rec.sample(&psi, t, step_index, schedule.initial_drive(), intensity);
    rec.snapshot_start(&psi);

    let mut potential = vec![0.0; n];
    let mut kick = vec![Complex64::new(0.0, 0.0); n];

    for sp in plan {
        let seg = &segments[sp.segment];
        let t_seg = t;
        if sp.steps > 0 {
            let stepper = SplitStep::new(
                grid.clone(),
                direction * constants.to_dimensionless_time(sp.dt),
            );
            let constant = seg.shape == RampShape::Constant;
            // a hold keeps one pair of potential parts for the whole segment
            let mut parts = if constant {
                Some(model.split_potential(seg.start)?)
            } else {
                None
            };
            let mut photons = match noise {
                Some(IntensityNoise::ShotNoise { .. }) => {
                    steady_photon_number(model.mean_bare(&psi), seg.drive_at(0.5 * sp.dt), &params)
                }
                _ => 0.0,
            };
            let mut kick_valid = false;
            for k in 0..sp.steps {
                let offset = (k as f64 + 0.5) * sp.dt;
                let drive = seg.drive_at(offset);
                intensity = match noise {
                    None => 1.0,
                    Some(IntensityNoise::Factors(f)) => f[step_index],
                    Some(IntensityNoise::ShotNoise { unit, refresh }) => {
                        if *refresh == PhotonRefresh::Step && k > 0 {
                            photons = steady_photon_number(model.mean_bare(&psi), drive, &params);
                        }
                        shot_factor(unit[step_index], photons)
                    }
                };
                if !constant {
                    parts = Some(model.split_potential(drive)?);
                    kick_valid = false;
                }
                if !kick_valid || noise.is_some() {
                    let (base, cavity) = parts.as_ref().expect("potential parts set");
                    for ((p, b), c) in potential.iter_mut().zip(base).zip(cavity) {
                        *p = b + intensity * c;
                    }
                    stepper.fill_half_kick(&potential, &mut kick);
                    kick_valid = true;
                }
                stepper.apply(psi.amplitudes_mut(), &kick);
                step_index += 1;
                t = t_seg + (k as f64 + 1.0) * sp.dt;
                psi.time = start_time + direction * constants.to_dimensionless_time(t);
                rec.after_step(&psi, t, step_index, drive, intensity, total);
            }
        }
        // snap to the exact boundary to avoid drift in the bookkeeping
        t = t_seg + seg.duration;
        rec.segment_end(&psi, sp.segment, t);
    }

    if rec.last_sampled != Some(step_index) {
        rec.force_sample(&psi, t, step_index, schedule.final_drive(), intensity);
    }
    rec.snapshot_end(&psi);

    let mut warnings = rec.warnings;
    let edge = psi.momentum_edge_population(0.1);
    if edge > EDGE_WARNING {
        warnings.push(format!(
            "final state has {edge:.2e} probability in the outer 10% of the angular-momentum grid; increase n_points"
        ));
    }
    Ok(Trajectory {
        samples: rec.samples,
        snapshots: rec.snapshots,
        final_state: psi,
        steps: step_index,
        warnings,
    })
}

/// `max(0, 1 + z/sqrt(n̄))`; without photons the cavity term vanishes anyway.
pub fn shot_factor(z: f64, photons: f64) -> f64 {
    if photons > 0.0 {
        (1.0 + z / photons.sqrt()).max(0.0)
    } else {
        1.0
    }
}

struct Recorder<'a> {
    observers: &'a Observers,
    constants: RotorConstants,
    samples: Vec<Sample>,
    snapshots: Vec<Snapshot>,
    pending_times: Vec<(usize, f64)>,
    last_sampled: Option<usize>,
    warnings: Vec<String>,
    warned_delocalized: bool,
}

impl<'a> Recorder<'a> {
    fn new(observers: &'a Observers, constants: &RotorConstants) -> Self {
        let pending_times = observers
            .snapshots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                SnapshotAt::Time(t) => Some((i, *t)),
                _ => None,
            })
            .collect();
        Self {
            observers,
            constants: *constants,
            samples: Vec::new(),
            snapshots: Vec::new(),
            pending_times,
            last_sampled: None,
            warnings: Vec::new(),
            warned_delocalized: false,
        }
    }

    fn sample(&mut self, psi: &RotorState, t: f64, step: usize, drive: DrivePoint, intensity: f64) {
        if self.observers.stride > 0 {
            self.force_sample(psi, t, step, drive, intensity);
        }
    }

    fn force_sample(
        &mut self,
        psi: &RotorState,
        t: f64,
        step: usize,
        drive: DrivePoint,
        intensity: f64,
    ) {
        if self.observers.stride == 0 {
            return;
        }
        let m = moments(psi, self.observers.omega_ref);
        if m.delocalized && !self.warned_delocalized {
            self.warned_delocalized = true;
            self.warnings.push(format!(
                "angular spread reached {:.3} rad at t = {:.3e} s; moments are unreliable from here",
                m.var_theta.sqrt(),
                t
            ));
        }
        let (mean_v, var_v) = potential_moments(psi, &self.constants);
        self.samples.push(Sample {
            time: t,
            step,
            drive,
            intensity,
            moments: m,
            mean_v,
            var_v,
        });
        self.last_sampled = Some(step);
    }

    fn after_step(
        &mut self,
        psi: &RotorState,
        t: f64,
        step: usize,
        drive: DrivePoint,
        intensity: f64,
        total: usize,
    ) {
        let stride = self.observers.stride;
        if stride > 0 && (step.is_multiple_of(stride) || step == total) {
            self.force_sample(psi, t, step, drive, intensity);
        }
        if !self.pending_times.is_empty() {
            let tol = 1e-12 * t.max(1e-12);
            let mut due = Vec::new();
            self.pending_times.retain(|&(i, target)| {
                if t + tol >= target {
                    due.push(i);
                    false
                } else {
                    true
                }
            });
            for i in due {
                self.snapshots.push(Snapshot {
                    at: self.observers.snapshots[i],
                    state: psi.clone(),
                });
            }
        }
    }

    fn snapshot_start(&mut self, psi: &RotorState) {
        let mut due = Vec::new();
        for s in &self.observers.snapshots {
            match s {
                SnapshotAt::Start => due.push(*s),
                SnapshotAt::Time(t) if *t <= 0.0 => due.push(*s),
                _ => {}
            }
        }
        self.pending_times.retain(|&(_, t)| t > 0.0);
        for at in due {
            self.snapshots.push(Snapshot {
                at,
                state: psi.clone(),
            });
        }
    }

    fn segment_end(&mut self, psi: &RotorState, segment: usize, _t: f64) {
        for s in &self.observers.snapshots {
            if *s == SnapshotAt::SegmentEnd(segment) {
                self.snapshots.push(Snapshot {
                    at: *s,
                    state: psi.clone(),
                });
            }
        }
    }

    fn snapshot_end(&mut self, psi: &RotorState) {
        // times beyond the end land on the final state
        let late: Vec<usize> = self.pending_times.drain(..).map(|(i, _)| i).collect();
        for i in late {
            self.snapshots.push(Snapshot {
                at: self.observers.snapshots[i],
                state: psi.clone(),
            });
        }
        for s in &self.observers.snapshots {
            if *s == SnapshotAt::End {
                self.snapshots.push(Snapshot {
                    at: *s,
                    state: psi.clone(),
                });
            }
        }
    }
}
