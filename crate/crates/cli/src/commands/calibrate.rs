//! `calibrate`: resolve microscopic parameters and drives, report what they
//! achieve, and write the fully explicit config.

use std::f64::consts::TAU;

use rotor_core::calibration::{attainable_range, solve_detuning};
use rotor_core::model::{
    classify_regime, derive_constants, steady_photon_number, DrivePoint, RegimeReport,
    RegimeThresholds, SystemParams, HBAR,
};
use rotor_core::protocol::{dimensionless_harmonic_frequency, harmonic_frequency};
use rotor_core::RotorError;
use serde::Serialize;

use super::{config_hash, Globals};
use crate::artifacts::{Artifacts, RunInfo};
use crate::config::{
    explicit_calibration, DriveConfig, DrivesConfig, Resolved, RunConfig, TargetsConfig,
};
use crate::error::{CliError, CliResult};

pub const REPORT: &str = "calibration_report.json";
pub const DERIVED: &str = "derived_config.json";

const DETUNING_TOL: f64 = 1e-12;

/// Drives hitting both targets for fixed microscopic parameters. The pump
/// rate is `eta` when given; otherwise it is the one that puts the tight
/// target exactly on resonance.
pub fn solve_drives(
    params: &SystemParams,
    eta: Option<f64>,
    t: &TargetsConfig,
) -> CliResult<(DrivePoint, DrivePoint)> {
    let constants = derive_constants(params)?;
    let (wt, ww) = (TAU * t.omega_tight_hz, TAU * t.omega_wide_hz);
    let eta = match eta {
        Some(e) => e,
        None => {
            // ω² = B (1 + g / (κ²/4)) at Δ = 0, with g = ħ η² U0 / q
            let bare = harmonic_frequency(DrivePoint::off(), &constants, params)?;
            let g = (wt * wt / (bare * bare) - 1.0) * params.kappa * params.kappa / 4.0;
            let e2 = g * params.q / (params.hbar * params.u0);
            if !(e2 > 0.0) {
                return Err(unreachable_message(wt, bare, bare));
            }
            e2.sqrt()
        }
    };
    let solve = |w: f64| {
        solve_detuning(w, eta, &constants, params, DETUNING_TOL).map_err(|e| match e {
            RotorError::Unreachable { target, min, max } => unreachable_message(target, min, max),
            other => other.into(),
        })
    };
    Ok((solve(wt)?, solve(ww)?))
}

fn unreachable_message(target: f64, min: f64, max: f64) -> CliError {
    CliError::Config(format!(
        "target {:.4} kHz is unreachable with this pump; attainable range is {:.4} to {:.4} kHz",
        target / TAU / 1e3,
        min / TAU / 1e3,
        max / TAU / 1e3
    ))
}

#[derive(Debug, Serialize)]
struct SystemReport {
    atom_number: u64,
    c2_hz: f64,
    q_hz: f64,
    u0_hz: f64,
    kappa_hz: f64,
    c2_joule: f64,
    q_joule: f64,
    chi2_enabled: bool,
}

#[derive(Debug, Serialize)]
struct TargetCheck {
    target_hz: f64,
    achieved_hz: f64,
    relative_error: f64,
}

#[derive(Debug, Serialize)]
struct RotorReport {
    chi1: f64,
    chi2: f64,
    chi_ratio: f64,
    beta: f64,
    t0_seconds: f64,
    omega_tight_rotor: f64,
    omega_wide_rotor: f64,
    depth: f64,
}

#[derive(Debug, Serialize)]
struct RegimeSummary {
    depth_ratio: f64,
    resonance_overlap: bool,
    classification: String,
}

impl From<RegimeReport> for RegimeSummary {
    fn from(r: RegimeReport) -> Self {
        Self {
            depth_ratio: r.depth_ratio,
            resonance_overlap: r.resonance_overlap,
            classification: format!("{:?}", r.classification).to_lowercase(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CalibrationReport {
    /// How the drives were obtained.
    source: &'static str,
    system: SystemReport,
    drives: DrivesConfig,
    achieved_tight_hz: f64,
    achieved_wide_hz: f64,
    tight: Option<TargetCheck>,
    wide: Option<TargetCheck>,
    /// Harmonic frequencies reachable with the tight pump rate, far detuned
    /// to resonant.
    attainable_hz: [f64; 2],
    photons_tight: f64,
    photons_wide: f64,
    rotor: RotorReport,
    regime_tight: RegimeSummary,
    regime_wide: RegimeSummary,
    protocol_duration_us: f64,
    warnings: Vec<String>,
}

/// Resolves the config the way `calibrate` does: with explicit parameters
/// and targets, the detunings are re-solved.
pub fn calibrate(
    cfg: &RunConfig,
) -> CliResult<(&'static str, rotor_core::calibration::Calibration)> {
    let explicit = cfg.system.c2_hz.is_some();
    match (explicit, &cfg.targets, &cfg.drives) {
        (true, Some(t), drives) => {
            let params = cfg.explicit_params().expect("explicit system");
            let eta = drives.map(|d| d.tight.to_drive().eta);
            let (tight, wide) = solve_drives(&params, eta, t)?;
            Ok((
                "solved_detunings",
                explicit_calibration(params, tight, wide)?,
            ))
        }
        (true, None, _) => Ok(("explicit", cfg.calibration()?)),
        (false, _, _) => Ok(("back_solved", cfg.calibration()?)),
    }
}

pub fn run(g: &Globals) -> CliResult<()> {
    let cfg = g.load()?;
    let mut art = Artifacts::create(&g.out_dir(Some(&cfg)))?;
    let (source, cal) = art.time("calibrate", || calibrate(&cfg))?;
    let resolved = Resolved::with_calibration(&cfg, cal)?;
    for w in &resolved.warnings {
        art.warn(w.clone());
    }

    let p = &cal.params;
    let c = &cal.constants;
    let check = |target_hz: f64, achieved: f64| TargetCheck {
        target_hz,
        achieved_hz: achieved / TAU,
        relative_error: achieved / TAU / target_hz - 1.0,
    };
    let (lo, hi) = attainable_range(cal.drive_tight.eta, c, p)?;
    let report = CalibrationReport {
        source,
        system: SystemReport {
            atom_number: p.atom_number,
            c2_hz: p.c2 / (TAU * HBAR),
            q_hz: p.q / (TAU * HBAR),
            u0_hz: p.u0 / TAU,
            kappa_hz: p.kappa / TAU,
            c2_joule: p.c2,
            q_joule: p.q,
            chi2_enabled: p.chi2_enabled,
        },
        drives: DrivesConfig {
            tight: DriveConfig::from_drive(cal.drive_tight),
            wide: DriveConfig::from_drive(cal.drive_wide),
        },
        achieved_tight_hz: cal.achieved_tight / TAU,
        achieved_wide_hz: cal.achieved_wide / TAU,
        tight: cfg
            .targets
            .map(|t| check(t.omega_tight_hz, cal.achieved_tight)),
        wide: cfg
            .targets
            .map(|t| check(t.omega_wide_hz, cal.achieved_wide)),
        attainable_hz: [lo / TAU, hi / TAU],
        photons_tight: steady_photon_number(0.0, cal.drive_tight, p),
        photons_wide: steady_photon_number(0.0, cal.drive_wide, p),
        rotor: RotorReport {
            chi1: c.chi1,
            chi2: c.chi2,
            chi_ratio: c.chi2 / c.chi1,
            beta: c.beta,
            t0_seconds: c.t0,
            omega_tight_rotor: dimensionless_harmonic_frequency(cal.drive_tight, c, p)?,
            omega_wide_rotor: dimensionless_harmonic_frequency(cal.drive_wide, c, p)?,
            depth: p.u0 * p.n() / p.kappa,
        },
        regime_tight: classify_regime(cal.drive_tight, c, p, RegimeThresholds::default()).into(),
        regime_wide: classify_regime(cal.drive_wide, c, p, RegimeThresholds::default()).into(),
        protocol_duration_us: resolved.schedule.total_duration() * 1e6,
        warnings: art.warnings().to_vec(),
    };
    art.write_json(REPORT, &report)?;
    let derived = cfg.with_calibration(&cal);
    let mut text = derived.to_json();
    text.push('\n');
    art.write_text(DERIVED, &text)?;
    let strict_fail = g.strict && !art.warnings().is_empty();
    art.finish(RunInfo {
        command: "calibrate".into(),
        config_sha256: Some(config_hash(&cfg)),
        seed: None,
        workers: None,
    })?;
    if strict_fail {
        return Err(CliError::Numerical("warnings raised under --strict".into()));
    }
    Ok(())
}
