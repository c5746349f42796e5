//! Ready-made set-ups: the full-scale reference run and a
//! harmonic-regime variant where the Gaussian picture holds.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::calibration::{back_solve, Calibration, CalibrationTargets, EnergyScale};
use crate::dynamics::{
    default_dt, ground_state, AngularGrid, GroundStateOptions, Period, RotorModel, RotorState,
};
use crate::error::Result;
use crate::protocol::{
    dimensionless_harmonic_frequency, make_squeeze_schedule, DriveSchedule, Segment,
    SqueezeProtocolSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub calibration: Calibration,
    pub n_points: usize,
    pub period: Period,
    /// Step in rotor units; `None` uses [`default_dt`].
    pub dt: Option<f64>,
    pub n_cycles: usize,
    /// Seconds.
    pub switch_time: f64,
    /// Tight hold appended after the last cycle, in tight-trap periods.
    pub post_hold_periods: f64,
    /// Ground-state energy tolerance (rotor units).
    pub ground_tol: f64,
}

impl Scenario {
    /// 43 kHz / 7 kHz at depth 20, five cycles with 1 µs switches, followed
    /// by four tight periods for reading out `g2`.
    pub fn reference() -> Result<Self> {
        Ok(Self {
            calibration: back_solve(&CalibrationTargets::reference_defaults())?,
            n_points: 8192,
            period: Period::Pi,
            dt: Some(1e-6),
            n_cycles: 5,
            switch_time: 1e-6,
            post_hold_periods: 4.0,
            ground_tol: 1e-6,
        })
    }

    /// Tight trap of 4000 in rotor units, wide trap at 0.75 of it, instant
    /// switches and three cycles on 1024 points. Zero-point widths stay well
    /// inside the quadratic part of both traps.
    pub fn harmonic() -> Result<Self> {
        let mut targets = CalibrationTargets::reference_defaults();
        targets.omega_wide = 0.75 * targets.omega_tight;
        targets.scale = EnergyScale::TightStiffness(4000.0);
        Ok(Self {
            calibration: back_solve(&targets)?,
            n_points: 1024,
            period: Period::Pi,
            dt: None,
            n_cycles: 3,
            switch_time: 0.0,
            post_hold_periods: 0.0,
            ground_tol: 1e-10,
        })
    }

    pub fn grid(&self) -> Result<Arc<AngularGrid>> {
        AngularGrid::new(self.n_points, self.period)
    }

    pub fn model(&self) -> Result<RotorModel> {
        RotorModel::new(self.calibration.params, self.grid()?)
    }

    /// Tight-trap frequency in rotor units.
    pub fn omega_tight(&self) -> Result<f64> {
        let c = &self.calibration;
        dimensionless_harmonic_frequency(c.drive_tight, &c.constants, &c.params)
    }

    pub fn dt(&self) -> Result<f64> {
        match self.dt {
            Some(dt) => Ok(dt),
            None => Ok(default_dt(&*self.grid()?, self.omega_tight()?)),
        }
    }

    pub fn protocol(&self) -> SqueezeProtocolSpec {
        let c = &self.calibration;
        SqueezeProtocolSpec {
            n_cycles: self.n_cycles,
            omega_tight: c.achieved_tight,
            omega_wide: c.achieved_wide,
            switch_time: self.switch_time,
            drive_tight: c.drive_tight,
            drive_wide: c.drive_wide,
            prep_time: 0.0,
        }
    }

    /// Seconds.
    pub fn post_hold(&self) -> f64 {
        self.post_hold_periods * TAU / self.calibration.achieved_tight
    }

    /// The squeezing cycles followed by the post hold, if any.
    pub fn schedule(&self) -> Result<DriveSchedule> {
        let mut s = make_squeeze_schedule(&self.protocol())?;
        if self.post_hold_periods > 0.0 {
            s.push(Segment::hold(
                self.calibration.drive_tight,
                self.post_hold(),
            ));
        }
        Ok(s)
    }

    /// Ground state of the tight trap.
    pub fn ground_state(&self, model: &RotorModel) -> Result<RotorState> {
        let v = model.potential(self.calibration.drive_tight, 1.0)?;
        Ok(ground_state(
            model.grid(),
            &v,
            GroundStateOptions::with_tol(self.ground_tol),
        )?
        .state)
    }
}
