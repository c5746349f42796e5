//! Drive schedules: holds, ramps, diabatic switches and the multi-cycle
//! squeezing protocol.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::analysis::PhaseSpaceCovariance;
use crate::dynamics::{stationary_states, AngularGrid, PotentialSamples, RotorState};
use crate::error::{Result, RotorError};
use crate::model::{
    bare_potential_second_derivative, DrivePoint, EffectivePotential, RotorConstants, SystemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampShape {
    Constant,
    Linear,
    /// `3s² − 2s³`
    Smoothstep,
}

impl RampShape {
    fn progress(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            RampShape::Constant => 0.0,
            RampShape::Linear => s,
            RampShape::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Duration in seconds.
    pub duration: f64,
    pub shape: RampShape,
    pub start: DrivePoint,
    pub end: DrivePoint,
}

impl Segment {
    pub fn hold(drive: DrivePoint, duration: f64) -> Self {
        Self {
            duration,
            shape: RampShape::Constant,
            start: drive,
            end: drive,
        }
    }

    pub fn ramp(from: DrivePoint, to: DrivePoint, duration: f64, shape: RampShape) -> Self {
        Self {
            duration,
            shape,
            start: from,
            end: to,
        }
    }

    pub fn drive_at(&self, offset: f64) -> DrivePoint {
        if self.shape == RampShape::Constant {
            return self.start;
        }
        let s = if self.duration > 0.0 {
            offset / self.duration
        } else {
            1.0
        };
        self.start.lerp(&self.end, self.shape.progress(s))
    }

    /// Drive the segment leaves behind.
    pub fn final_drive(&self) -> DrivePoint {
        match self.shape {
            RampShape::Constant => self.start,
            _ => self.end,
        }
    }

    fn reversed(&self) -> Segment {
        match self.shape {
            RampShape::Constant => *self,
            _ => Segment {
                start: self.end,
                end: self.start,
                ..*self
            },
        }
    }
}

/// How a segment is cut into steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSteps {
    pub segment: usize,
    pub steps: usize,
    /// Step length in seconds, `duration / steps`.
    pub dt: f64,
}

/// Piecewise program of pump rate and detuning. Times are in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriveSchedule {
    segments: Vec<Segment>,
    initial: Option<DrivePoint>,
}

impl DriveSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration >= 0.0) || !s.duration.is_finite() {
                return Err(RotorError::Schedule(format!(
                    "segment {i} has invalid duration {}",
                    s.duration
                )));
            }
            if s.start.eta < 0.0 || s.end.eta < 0.0 {
                return Err(RotorError::Schedule(format!(
                    "segment {i} has negative pump rate"
                )));
            }
        }
        Ok(Self {
            segments,
            initial: None,
        })
    }

    /// A schedule that holds one drive for `duration` seconds.
    pub fn constant(drive: DrivePoint, duration: f64) -> Result<Self> {
        Self::new(vec![Segment::hold(drive, duration)])
    }

    /// Sets the drive reported before the first segment (and for empty
    /// schedules).
    pub fn with_initial(mut self, drive: DrivePoint) -> Self {
        self.initial = Some(drive);
        self
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn push(&mut self, segment: Segment) {
        self.segments.push(segment);
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn initial_drive(&self) -> DrivePoint {
        self.initial
            .or_else(|| self.segments.first().map(|s| s.start))
            .unwrap_or_default()
    }

    pub fn final_drive(&self) -> DrivePoint {
        self.segments
            .last()
            .map(|s| s.final_drive())
            .unwrap_or_else(|| self.initial_drive())
    }

    /// Drive at time `t` (seconds). Times past the end return the final drive.
    pub fn drive_at(&self, t: f64) -> DrivePoint {
        if t <= 0.0 {
            return self.initial_drive();
        }
        let mut start = 0.0;
        for s in &self.segments {
            if t < start + s.duration {
                return s.drive_at(t - start);
            }
            start += s.duration;
        }
        self.final_drive()
    }

    /// Start times of the segments.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let b = t;
                t += s.duration;
                b
            })
            .collect()
    }

    /// Splits every segment into the fewest equal steps no longer than
    /// `max_dt` seconds. Zero-length segments get no steps.
    pub fn step_plan(&self, max_dt: f64) -> Result<Vec<SegmentSteps>> {
        if !(max_dt > 0.0) {
            return Err(RotorError::Schedule(format!(
                "step must be positive, got {max_dt}"
            )));
        }
        Ok(self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let steps = if s.duration > 0.0 {
                    // tolerate round-off when the duration is a multiple of dt
                    (s.duration / max_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
                } else {
                    0
                };
                SegmentSteps {
                    segment: i,
                    steps,
                    dt: if steps > 0 {
                        s.duration / steps as f64
                    } else {
                        0.0
                    },
                }
            })
            .collect())
    }

    pub fn total_steps(&self, max_dt: f64) -> Result<usize> {
        Ok(self.step_plan(max_dt)?.iter().map(|p| p.steps).sum())
    }

    /// The same program played backwards.
    pub fn reversed(&self) -> DriveSchedule {
        DriveSchedule {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
            initial: Some(self.final_drive()),
        }
    }

    /// Appends another schedule.
    pub fn then(mut self, other: &DriveSchedule) -> DriveSchedule {
        self.segments.extend_from_slice(&other.segments);
        self
    }
}

/// Harmonic frequency (rad/s) of the effective potential around θ = 0,
/// `ω = sqrt(q V_eff''(0) / I)`.
pub fn harmonic_frequency(
    drive: DrivePoint,
    constants: &RotorConstants,
    params: &SystemParams,
) -> Result<f64> {
    let curvature = effective_curvature(drive, constants, params)?;
    Ok((params.q * curvature / constants.inertia).sqrt())
}

/// Same as [`harmonic_frequency`] in rotor units, `sqrt(β V_eff''(0))`.
pub fn dimensionless_harmonic_frequency(
    drive: DrivePoint,
    constants: &RotorConstants,
    params: &SystemParams,
) -> Result<f64> {
    let curvature = effective_curvature(drive, constants, params)?;
    Ok((constants.beta * curvature).sqrt())
}

fn effective_curvature(
    drive: DrivePoint,
    constants: &RotorConstants,
    params: &SystemParams,
) -> Result<f64> {
    let curvature = if drive.eta == 0.0 {
        bare_potential_second_derivative(0.0, constants)
    } else {
        EffectivePotential::new(constants, params, drive)?.second_derivative(0.0)
    };
    if !(curvature > 0.0) || !(params.q > 0.0) {
        return Err(RotorError::NonPositiveCurvature(params.q * curvature));
    }
    Ok(curvature)
}

/// Parameters of the bang-bang squeezing protocol. Frequencies in rad/s,
/// times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeProtocolSpec {
    pub n_cycles: usize,
    pub omega_tight: f64,
    pub omega_wide: f64,
    pub switch_time: f64,
    pub drive_tight: DrivePoint,
    pub drive_wide: DrivePoint,
    /// Tight hold before the first cycle; zero when the state is prepared
    /// externally.
    pub prep_time: f64,
}

impl SqueezeProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_wide > 0.0) || !(self.omega_tight > self.omega_wide) {
            return Err(RotorError::InvalidParameter(format!(
                "need omega_tight > omega_wide > 0, got {} and {}",
                self.omega_tight, self.omega_wide
            )));
        }
        if !(self.switch_time >= 0.0) || !(self.prep_time >= 0.0) {
            return Err(RotorError::InvalidParameter(
                "switch and prep times must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Non-fatal concerns about the time-scale separation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.switch_time * self.omega_tight > 0.5 {
            out.push(format!(
                "switch time {:.3e} s is not short against 1/omega_tight = {:.3e} s; switches will not be diabatic",
                self.switch_time,
                1.0 / self.omega_tight
            ));
        }
        out
    }

    pub fn hold_wide(&self) -> f64 {
        FRAC_PI_2 / self.omega_wide
    }

    pub fn hold_tight(&self) -> f64 {
        FRAC_PI_2 / self.omega_tight
    }
}

/// Builds `[prep] + n × (switch→wide, hold π/2ω₂, switch→tight, hold π/2ω₁)`.
pub fn make_squeeze_schedule(spec: &SqueezeProtocolSpec) -> Result<DriveSchedule> {
    spec.validate()?;
    let mut segments = Vec::with_capacity(4 * spec.n_cycles + 1);
    if spec.prep_time > 0.0 {
        segments.push(Segment::hold(spec.drive_tight, spec.prep_time));
    }
    for _ in 0..spec.n_cycles {
        segments.push(Segment::ramp(
            spec.drive_tight,
            spec.drive_wide,
            spec.switch_time,
            RampShape::Smoothstep,
        ));
        segments.push(Segment::hold(spec.drive_wide, spec.hold_wide()));
        segments.push(Segment::ramp(
            spec.drive_wide,
            spec.drive_tight,
            spec.switch_time,
            RampShape::Smoothstep,
        ));
        segments.push(Segment::hold(spec.drive_tight, spec.hold_tight()));
    }
    Ok(DriveSchedule::new(segments)?.with_initial(spec.drive_tight))
}

/// Overlap weights of a state with the lowest eigenstates of a new
/// potential.
#[derive(Debug, Clone, PartialEq)]
pub struct DiabaticityReport {
    /// `|⟨ψ'_i|ψ⟩|²` for the `k` lowest eigenstates.
    pub weights: Vec<f64>,
    /// `1 − Σ weights`.
    pub residual: f64,
}

pub fn diabaticity_report(
    state_before: &RotorState,
    potential_after: &PotentialSamples,
    k: usize,
) -> Result<DiabaticityReport> {
    if k < 2 {
        return Err(RotorError::InvalidParameter(
            "need at least two eigenstates".into(),
        ));
    }
    let grid: &Arc<AngularGrid> = state_before.grid();
    let pairs = stationary_states(grid, potential_after, k)?;
    let weights: Vec<f64> = pairs
        .iter()
        .map(|p| p.state.inner(state_before).norm_sqr())
        .collect();
    let residual = 1.0 - weights.iter().sum::<f64>();
    Ok(DiabaticityReport { weights, residual })
}

/// Predicted Gaussian covariances through the ideal protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclePrediction {
    /// After the wide hold, just before switching back.
    pub mid: PhaseSpaceCovariance,
    /// After the tight hold that closes the cycle.
    pub end: PhaseSpaceCovariance,
}

/// Propagates the tight-trap ground-state covariance through instantaneous
/// frequency jumps and quarter-period harmonic holds.
///
/// Coordinates are scaled by the tight-trap zero-point widths,
/// `X = θ sqrt(Iω₁/ħ)` and `P = L / sqrt(ħIω₁)`, so the ground state has
/// `Var X = Var P = 1/2`.
pub fn gaussian_covariance_oracle(spec: &SqueezeProtocolSpec) -> Result<Vec<CyclePrediction>> {
    spec.validate()?;
    let ratio = spec.omega_wide / spec.omega_tight;
    let mut cov = PhaseSpaceCovariance::vacuum();
    let mut out = Vec::with_capacity(spec.n_cycles);
    for _ in 0..spec.n_cycles {
        cov = cov.harmonic_evolution(ratio, FRAC_PI_2);
        let mid = cov;
        cov = cov.harmonic_evolution(1.0, FRAC_PI_2);
        out.push(CyclePrediction { mid, end: cov });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n_cycles: usize) -> SqueezeProtocolSpec {
        SqueezeProtocolSpec {
            n_cycles,
            omega_tight: 2.0 * PI * 43e3,
            omega_wide: 2.0 * PI * 7e3,
            switch_time: 1e-6,
            drive_tight: DrivePoint::new(1.0, 0.0),
            drive_wide: DrivePoint::new(1.0, -5.0),
            prep_time: 0.0,
        }
    }

    #[test]
    fn single_cycle_layout() {
        let s = make_squeeze_schedule(&spec(1)).unwrap();
        let segs = s.segments();
        assert_eq!(segs.len(), 4);
        assert_eq!(segs[0].shape, RampShape::Smoothstep);
        assert!((segs[1].duration - PI / (2.0 * 2.0 * PI * 7e3)).abs() < 1e-18);
        assert!((segs[3].duration - PI / (2.0 * 2.0 * PI * 43e3)).abs() < 1e-18);
        let sum: f64 = segs.iter().map(|x| x.duration).sum();
        assert_eq!(s.total_duration(), sum);
    }

    #[test]
    fn zero_cycles_is_empty() {
        let s = make_squeeze_schedule(&spec(0)).unwrap();
        assert!(s.segments().is_empty());
        assert_eq!(s.total_duration(), 0.0);
        assert_eq!(s.drive_at(1.0), spec(0).drive_tight);
    }

    #[test]
    fn five_cycles_take_about_200_us() {
        let s = make_squeeze_schedule(&spec(5)).unwrap();
        let t = s.total_duration();
        assert!(t > 150e-6 && t < 250e-6, "{t}");
    }

    #[test]
    fn rejects_inverted_frequencies() {
        let mut bad = spec(1);
        bad.omega_wide = bad.omega_tight * 2.0;
        assert!(make_squeeze_schedule(&bad).is_err());
    }

    #[test]
    fn drive_interpolation() {
        let a = DrivePoint::new(1.0, 0.0);
        let b = DrivePoint::new(3.0, -4.0);
        let s = DriveSchedule::new(vec![
            Segment::hold(a, 1.0),
            Segment::ramp(a, b, 2.0, RampShape::Linear),
            Segment::ramp(b, a, 2.0, RampShape::Smoothstep),
        ])
        .unwrap();
        assert_eq!(s.drive_at(0.5), a);
        assert_eq!(s.drive_at(2.0), DrivePoint::new(2.0, -2.0));
        assert_eq!(s.drive_at(4.0), DrivePoint::new(2.0, -2.0));
        assert_eq!(s.drive_at(10.0), a);
        let r = s.reversed();
        assert_eq!(r.drive_at(0.0), a);
        assert_eq!(r.drive_at(1.0), DrivePoint::new(2.0, -2.0));
        assert_eq!(r.total_duration(), s.total_duration());
    }

    #[test]
    fn step_plan_is_exact_for_multiples() {
        let s = DriveSchedule::constant(DrivePoint::off(), 1e-3).unwrap();
        let plan = s.step_plan(1e-5).unwrap();
        assert_eq!(plan[0].steps, 100);
        let s = DriveSchedule::new(vec![Segment::hold(DrivePoint::off(), 1.05e-3)]).unwrap();
        let plan = s.step_plan(1e-4).unwrap();
        assert_eq!(plan[0].steps, 11);
        assert!(plan[0].dt <= 1e-4);
    }

    #[test]
    fn oracle_without_contrast_is_static() {
        // equal frequencies fail validation, so step the covariance directly
        let mut cov = PhaseSpaceCovariance::vacuum();
        for _ in 0..3 {
            cov = cov
                .harmonic_evolution(1.0, FRAC_PI_2)
                .harmonic_evolution(1.0, FRAC_PI_2);
        }
        let v = PhaseSpaceCovariance::vacuum();
        assert!(
            (cov.xx - v.xx).abs() < 1e-14 && (cov.pp - v.pp).abs() < 1e-14 && cov.xp.abs() < 1e-14
        );
    }

    #[test]
    fn oracle_scales_by_frequency_ratio_squared() {
        let sp = spec(3);
        let r = (sp.omega_wide / sp.omega_tight).powi(2);
        let cycles = gaussian_covariance_oracle(&sp).unwrap();
        for (n, c) in cycles.iter().enumerate() {
            let want = 0.5 * r.powi(n as i32 + 1);
            assert!((c.end.xx - want).abs() < 1e-12 * want.max(1e-300) + 1e-15);
            assert!((c.end.determinant() - 0.25).abs() < 1e-9);
            assert!((c.mid.determinant() - 0.25).abs() < 1e-9);
        }
    }
}
