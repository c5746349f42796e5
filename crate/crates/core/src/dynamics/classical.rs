use crate::error::Result;
use crate::model::{EffectivePotential, RotorConstants, SystemParams};
use crate::protocol::DriveSchedule;

/// Classical rotor phase-space point in rotor units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPoint {
    pub theta: f64,
    pub l_theta: f64,
}

impl ClassicalPoint {
    pub fn new(theta: f64, l_theta: f64) -> Self {
        Self { theta, l_theta }
    }
}

fn force(
    theta: f64,
    time: f64,
    schedule: &DriveSchedule,
    constants: &RotorConstants,
    params: &SystemParams,
) -> Result<f64> {
    let drive = schedule.drive_at(constants.to_seconds(time));
    let field = EffectivePotential::new(constants, params, drive)?;
    Ok(-constants.beta * field.derivative(theta))
}

/// Integrates `θ'' = -β V_eff'(θ)` with velocity Verlet.
///
/// `dt` is in rotor units; the schedule is read in seconds. The returned
/// series holds `steps + 1` points starting with `start`.
pub fn ehrenfest_reference(
    start: ClassicalPoint,
    schedule: &DriveSchedule,
    constants: &RotorConstants,
    params: &SystemParams,
    dt: f64,
    steps: usize,
) -> Result<Vec<ClassicalPoint>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = start;
    let mut t = 0.0;
    let mut f = force(p.theta, t, schedule, constants, params)?;
    out.push(p);
    for _ in 0..steps {
        p.l_theta += 0.5 * dt * f;
        p.theta += dt * p.l_theta;
        t += dt;
        f = force(p.theta, t, schedule, constants, params)?;
        p.l_theta += 0.5 * dt * f;
        out.push(p);
    }
    Ok(out)
}

/// Classical energy `l²/2 + β V_eff(θ)` for a fixed drive.
pub fn classical_energy(point: ClassicalPoint, field: &EffectivePotential, beta: f64) -> f64 {
    0.5 * point.l_theta * point.l_theta + beta * field.value(point.theta)
}
