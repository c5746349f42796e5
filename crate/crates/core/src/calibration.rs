//! Back-solving unstated microscopic parameters from target trap
//! frequencies, and root-finding on the detuning for a fixed pump.

use crate::error::{Result, RotorError};
use crate::model::{derive_constants, DrivePoint, RotorConstants, SystemParams, HBAR};
use crate::protocol::harmonic_frequency;

/// How the overall energy scale is pinned down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyScale {
    /// Fixes `χ2/χ1`.
    ChiRatio(f64),
    /// Fixes the tight-trap frequency in rotor units, `ω1 · t0`.
    TightStiffness(f64),
}

impl Default for EnergyScale {
    fn default() -> Self {
        EnergyScale::ChiRatio(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets {
    /// rad/s
    pub omega_tight: f64,
    /// rad/s
    pub omega_wide: f64,
    pub atom_number: u64,
    /// rad/s
    pub kappa: f64,
    /// `U0 N / κ`
    pub depth: f64,
    pub scale: EnergyScale,
}

impl CalibrationTargets {
    pub fn reference_defaults() -> Self {
        use std::f64::consts::TAU;
        Self {
            omega_tight: TAU * 43e3,
            omega_wide: TAU * 7e3,
            atom_number: 10_000,
            kappa: TAU * 1e6,
            depth: 20.0,
            scale: EnergyScale::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub params: SystemParams,
    pub constants: RotorConstants,
    pub drive_tight: DrivePoint,
    pub drive_wide: DrivePoint,
    /// rad/s
    pub achieved_tight: f64,
    /// rad/s
    pub achieved_wide: f64,
}

/// Chooses `c2`, `q`, `U0` and `η` so that the drive `(η, 0)` gives
/// `omega_tight` and `(η, −U0 N)` gives `omega_wide`.
///
/// Around θ = 0 the harmonic frequency obeys `ω² = B (1 + g / (κ²/4 + Δ²))`
/// with `B` the bare value and `g = ħη²U0/q`, so two targets fix `B` and `g`.
pub fn back_solve(targets: &CalibrationTargets) -> Result<Calibration> {
    let t = targets;
    let bad = |m: String| Err(RotorError::InvalidParameter(m));
    if !(t.omega_tight > t.omega_wide && t.omega_wide > 0.0) {
        return bad(format!(
            "need omega_tight > omega_wide > 0, got {} and {}",
            t.omega_tight, t.omega_wide
        ));
    }
    if t.atom_number < 1 || !(t.kappa > 0.0) || !(t.depth > 0.0) {
        return bad("atom number, kappa and depth must be positive".into());
    }
    let n = t.atom_number as f64;
    let hbar = HBAR;
    let u0 = t.depth * t.kappa / n;
    let delta_wide = -u0 * n;
    let lor = |d: f64| 1.0 / (t.kappa * t.kappa / 4.0 + d * d);
    let (l1, l2) = (lor(0.0), lor(delta_wide));
    let r = (t.omega_tight / t.omega_wide).powi(2);
    let denom = l1 - r * l2;
    if !(denom > 0.0) {
        return bad(format!(
            "frequency ratio {:.3} exceeds what depth {} can provide ({:.3})",
            r.sqrt(),
            t.depth,
            (l1 / l2).sqrt()
        ));
    }
    let g = (r - 1.0) / denom;
    let b = t.omega_tight.powi(2) / (1.0 + g * l1);

    let chi1 = n + 1.5;
    let (c2, q) = match t.scale {
        EnergyScale::ChiRatio(rho) => {
            if !(rho > 0.0) {
                return bad("chi ratio must be positive".into());
            }
            let c2 = n * hbar * b.sqrt() / (4.0 * chi1 * (rho * (1.0 + 4.0 * rho)).sqrt());
            (c2, 8.0 * rho * chi1 * c2 / n)
        }
        EnergyScale::TightStiffness(w1) => {
            if !(w1 > 0.0) {
                return bad("tight stiffness must be positive".into());
            }
            let c2 = n * hbar * t.omega_tight / w1;
            // B N ħ² = 2 q c2 χ1 + q² N
            let q = (-c2 * chi1 + ((c2 * chi1).powi(2) + n * n * b * hbar * hbar).sqrt()) / n;
            (c2, q)
        }
    };
    let eta = (g * q / (hbar * u0)).sqrt();
    let params = SystemParams {
        atom_number: t.atom_number,
        c2,
        q,
        u0,
        kappa: t.kappa,
        hbar,
        chi2_enabled: true,
    };
    let constants = derive_constants(&params)?;
    let drive_tight = DrivePoint::new(eta, 0.0);
    let drive_wide = DrivePoint::new(eta, delta_wide);
    Ok(Calibration {
        achieved_tight: harmonic_frequency(drive_tight, &constants, &params)?,
        achieved_wide: harmonic_frequency(drive_wide, &constants, &params)?,
        params,
        constants,
        drive_tight,
        drive_wide,
    })
}

/// Attainable harmonic frequencies for a fixed pump rate: the bare value
/// (far detuned) up to the resonant value at `Δ = 0`.
pub fn attainable_range(
    eta: f64,
    constants: &RotorConstants,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let lo = harmonic_frequency(DrivePoint::new(0.0, 0.0), constants, params)?;
    let hi = harmonic_frequency(DrivePoint::new(eta, 0.0), constants, params)?;
    Ok((lo, hi))
}

/// Finds `Δ ≤ 0` such that the drive `(η, Δ)` has harmonic frequency
/// `target`, by bracketing and bisection (relative tolerance `rel_tol` on Δ).
pub fn solve_detuning(
    target: f64,
    eta: f64,
    constants: &RotorConstants,
    params: &SystemParams,
    rel_tol: f64,
) -> Result<DrivePoint> {
    let (lo, hi) = attainable_range(eta, constants, params)?;
    let unreachable = Err(RotorError::Unreachable {
        target,
        min: lo,
        max: hi,
    });
    if target > hi * (1.0 + 1e-12) || target <= lo {
        return unreachable;
    }
    if target >= hi {
        return Ok(DrivePoint::new(eta, 0.0));
    }
    let f =
        |d: f64| harmonic_frequency(DrivePoint::new(eta, d), constants, params).map(|w| w - target);
    // ω decreases with |Δ|; grow the bracket until it drops below target
    let mut near = 0.0;
    let mut far = -params.kappa.max(1e-300);
    let mut expansions = 0;
    while f(far)? > 0.0 {
        near = far;
        far *= 2.0;
        expansions += 1;
        if expansions > 2000 || !far.is_finite() {
            return unreachable;
        }
    }
    let mut iterations = 0;
    while (near - far).abs() > rel_tol * far.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (near + far);
        if f(mid)? > 0.0 {
            near = mid;
        } else {
            far = mid;
        }
        iterations += 1;
        if iterations > 10_000 {
            return Err(RotorError::NotConverged {
                what: "detuning bisection",
                iterations,
                last_change: (near - far).abs(),
            });
        }
    }
    Ok(DrivePoint::new(eta, 0.5 * (near + far)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steady_photon_number;
    use crate::protocol::dimensionless_harmonic_frequency;

    #[test]
    fn reference_targets_are_met() {
        let t = CalibrationTargets::reference_defaults();
        let c = back_solve(&t).unwrap();
        assert!((c.achieved_tight / t.omega_tight - 1.0).abs() < 1e-9);
        assert!((c.achieved_wide / t.omega_wide - 1.0).abs() < 1e-9);
        assert!((c.constants.chi2 / c.constants.chi1 - 1e-3).abs() < 1e-12);
        assert!((c.params.u0 * 1e4 / c.params.kappa - 20.0).abs() < 1e-12);
        let n = steady_photon_number(0.0, c.drive_tight, &c.params);
        assert!(n > 0.0 && n < 1000.0, "{n}");
    }

    #[test]
    fn stiffness_scale_is_honoured() {
        let mut t = CalibrationTargets::reference_defaults();
        t.scale = EnergyScale::TightStiffness(4000.0);
        let c = back_solve(&t).unwrap();
        let w = dimensionless_harmonic_frequency(c.drive_tight, &c.constants, &c.params).unwrap();
        assert!((w / 4000.0 - 1.0).abs() < 1e-9);
        assert!((c.achieved_wide / t.omega_wide - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detuning_root_recovers_wide_drive() {
        let c = back_solve(&CalibrationTargets::reference_defaults()).unwrap();
        let d = solve_detuning(
            c.achieved_wide,
            c.drive_wide.eta,
            &c.constants,
            &c.params,
            1e-12,
        )
        .unwrap();
        assert!((d.delta / c.drive_wide.delta - 1.0).abs() < 1e-6);
        let d = solve_detuning(
            c.achieved_tight,
            c.drive_tight.eta,
            &c.constants,
            &c.params,
            1e-12,
        )
        .unwrap();
        assert!(d.delta.abs() <= 1e-6 * c.params.kappa);
    }

    #[test]
    fn unreachable_targets_report_range() {
        let c = back_solve(&CalibrationTargets::reference_defaults()).unwrap();
        let err = solve_detuning(
            2.0 * c.achieved_tight,
            c.drive_tight.eta,
            &c.constants,
            &c.params,
            1e-12,
        );
        match err {
            Err(RotorError::Unreachable { min, max, .. }) => {
                assert!(min < max && (max / c.achieved_tight - 1.0).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_excessive_ratio() {
        let mut t = CalibrationTargets::reference_defaults();
        t.depth = 1.0;
        t.omega_wide = t.omega_tight / 10.0;
        assert!(back_solve(&t).is_err());
    }
}
