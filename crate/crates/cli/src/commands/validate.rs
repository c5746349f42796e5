//! `validate`: numerical self-checks on the configured grid and step.

use rotor_core::analysis::{g2_value, moments, PHOTON_FLOOR};
use rotor_core::dynamics::{
    energy, evolve_planned, ground_state, AngularGrid, GroundStateOptions, Observers, RotorModel,
    RotorState, SnapshotAt, SplitStep, Trajectory,
};
use rotor_core::model::steady_photon_number;
use rotor_core::oracle::{
    compare_with_rotor, exact_spectrum, total_spin_levels, CompareOptions, FockBasis,
};
use rotor_core::protocol::{
    gaussian_covariance_oracle, make_squeeze_schedule, DriveSchedule, SegmentSteps,
};
use serde::Serialize;
use serde_json::json;

use super::{config_hash, Globals};
use crate::artifacts::{Artifacts, RunInfo};
use crate::config::{Resolved, RunConfig, ValidationConfig};
use crate::error::{CliError, CliResult};

pub const REPORT: &str = "validation_report.json";

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Pass condition, in words.
    pub limit: String,
    pub passed: bool,
}

fn check(name: impl Into<String>, value: f64, limit: f64) -> Check {
    Check {
        name: name.into(),
        value,
        limit: format!("<= {limit:e}"),
        passed: value <= limit,
    }
}

fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Check {
    Check {
        name: name.into(),
        value,
        limit: format!("in [{lo}, {hi}]"),
        passed: (lo..=hi).contains(&value),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Diagnostics that are reported but not judged.
    pub info: serde_json::Value,
}

impl Suite {
    fn new(name: &'static str, checks: Vec<Check>, info: serde_json::Value) -> Self {
        Self {
            name,
            passed: checks.iter().all(|c| c.passed),
            checks,
            info,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub n_points: usize,
    pub dt_rotor: f64,
    pub tolerances: ValidationConfig,
    pub suites: Vec<Suite>,
}

pub fn run(g: &Globals) -> CliResult<()> {
    let cfg = g.load()?;
    let mut art = Artifacts::create(&g.out_dir(Some(&cfg)))?;
    let resolved = art.time("resolve", || Resolved::new(&cfg))?;
    for w in &resolved.warnings {
        art.warn(w.clone());
    }
    let report = art.time("validate", || validate(&cfg, &resolved))?;
    art.write_json(REPORT, &report)?;
    art.finish(RunInfo {
        command: "validate".into(),
        config_sha256: Some(config_hash(&cfg)),
        seed: None,
        workers: None,
    })?;
    if !report.passed {
        let failed: Vec<String> = report
            .suites
            .iter()
            .flat_map(|s| {
                s.checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(move |c| format!("{}/{}", s.name, c.name))
            })
            .collect();
        return Err(CliError::Validation(failed.join(", ")));
    }
    Ok(())
}

pub fn validate(cfg: &RunConfig, r: &Resolved) -> CliResult<ValidationReport> {
    let tol = cfg.validation.unwrap_or_default();
    let ground = tight_ground_state(cfg, r, &r.model)?;
    let suites = vec![
        oracle_suite(&tol)?,
        conservation_suite(&tol, r, &ground)?,
        convergence_suite(&tol, r, &ground)?,
        g2_suite(r, &ground)?,
        grid_suite(cfg, r, &ground)?,
    ];
    Ok(ValidationReport {
        passed: suites.iter().all(|s| s.passed),
        n_points: r.grid.n_points(),
        dt_rotor: r.dt,
        tolerances: tol,
        suites,
    })
}

fn tight_ground_state(cfg: &RunConfig, r: &Resolved, model: &RotorModel) -> CliResult<RotorState> {
    let v = model.potential(r.calibration.drive_tight, 1.0)?;
    Ok(ground_state(
        model.grid(),
        &v,
        GroundStateOptions::with_tol(cfg.grid.ground_tol_rotor),
    )?
    .state)
}

/// Small exactly solvable cases of the spin-1 Hamiltonian.
fn oracle_suite(tol: &ValidationConfig) -> CliResult<Suite> {
    let mut checks = Vec::new();
    let (c2, q) = (1.0, 0.3);
    let one = exact_spectrum(1, c2, q, 0)?;
    checks.push(check("single_atom", (one[0] - (2.0 * c2 - q)).abs(), 1e-12));
    let two = exact_spectrum(2, c2, 0.0, 0)?;
    let err = two
        .iter()
        .zip([0.0, 3.0 * c2])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(check("two_atoms", err, 1e-12));
    let mut dim_err = 0.0f64;
    let mut level_err = 0.0f64;
    for n in 1..=tol.oracle_max_n {
        for lz in -2i64..=2 {
            if lz.unsigned_abs() > n as u64 {
                continue;
            }
            let want = (n as i64 - lz.abs()) / 2 + 1;
            dim_err = dim_err.max((FockBasis::sector(n, lz).dim() as f64 - want as f64).abs());
        }
        if n % 4 == 0 || n == tol.oracle_max_n {
            let e = exact_spectrum(n, 1.0, 0.0, 0)?;
            let w = total_spin_levels(n, 1.0, 0);
            let scale = w.last().copied().unwrap_or(1.0).max(1.0);
            let d = e
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale;
            level_err = level_err.max(if e.len() == w.len() { d } else { f64::INFINITY });
        }
    }
    checks.push(check("sector_dimensions", dim_err, 0.0));
    checks.push(check("zero_q_multiplets", level_err, 1e-10));
    let ns: Vec<u32> = [10, 20, 40]
        .into_iter()
        .filter(|n| *n <= tol.oracle_max_n)
        .collect();
    let info = if ns.is_empty() {
        json!({})
    } else {
        let cmp = compare_with_rotor(&ns, 1.0, 0.1, CompareOptions::default())?;
        json!({
            "rotor_comparison_q_over_c2": 0.1,
            "rotor_comparison": cmp.iter().map(|c| {
                let b = c.best();
                json!({
                    "n": c.n,
                    "best_convention": format!("{:?}", b.convention),
                    "best_even_only": b.even_only,
                    "relative_gap_deviations": b.relative_deviations,
                })
            }).collect::<Vec<_>>(),
        })
    };
    Ok(Suite::new("oracle", checks, info))
}

/// Norm and energy of a kicked ground state in the static tight trap.
fn conservation_suite(
    tol: &ValidationConfig,
    r: &Resolved,
    ground: &RotorState,
) -> CliResult<Suite> {
    let grid = &r.grid;
    let pot = r.model.potential(r.calibration.drive_tight, 1.0)?;
    let sd_l = moments(ground, 1.0).var_l.sqrt();
    // a lattice wavenumber near two momentum widths
    let spacing = grid.wavenumbers()[1];
    let kick = ((2.0 * sd_l / spacing).round().max(1.0)) * spacing;
    let kicked = RotorState::from_fn(grid.clone(), |t| {
        let (s, c) = (kick * t).sin_cos();
        num_complex::Complex64::new(c, s)
    })?;
    let amps: Vec<_> = ground
        .amplitudes()
        .iter()
        .zip(kicked.amplitudes())
        .map(|(a, b)| a * b)
        .collect();
    let start = RotorState::new(grid.clone(), amps, 0.0)?;
    let e0 = energy(&start, &pot);
    let h = grid.spacing();
    let stepper = SplitStep::new(grid.clone(), r.dt);
    let half = stepper.half_kick(pot.values());
    let mut psi = start.amplitudes().to_vec();
    let (mut norm_drift, mut energy_drift) = (0.0f64, 0.0f64);
    let every = (tol.conservation_steps / 200).max(1);
    for i in 1..=tol.conservation_steps {
        stepper.apply(&mut psi, &half);
        if i % every == 0 || i == tol.conservation_steps {
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * h;
            norm_drift = norm_drift.max((norm - 1.0).abs());
            let s = RotorState::new(grid.clone(), psi.clone(), 0.0)?;
            energy_drift = energy_drift.max(((energy(&s, &pot) - e0) / e0).abs());
        }
    }
    Ok(Suite::new(
        "conservation",
        vec![
            check("norm_drift", norm_drift, tol.norm_tol),
            check("relative_energy_drift", energy_drift, tol.energy_tol),
        ],
        json!({ "steps": tol.conservation_steps, "kick": kick, "initial_energy": e0 }),
    ))
}

fn scaled(plan: &[SegmentSteps], k: usize) -> Vec<SegmentSteps> {
    plan.iter()
        .map(|p| SegmentSteps {
            segment: p.segment,
            steps: p.steps * k,
            dt: p.dt / k as f64,
        })
        .collect()
}

/// The first squeeze cycle, or the whole schedule for segment protocols.
fn first_cycle(r: &Resolved) -> CliResult<(DriveSchedule, Option<usize>)> {
    match r.squeeze {
        Some(mut spec) => {
            spec.n_cycles = 1;
            Ok((
                make_squeeze_schedule(&spec)?,
                Some(usize::from(spec.prep_time > 0.0)),
            ))
        }
        None => Ok((r.schedule.clone(), None)),
    }
}

/// Time order of the splitting on one cycle, plus the Gaussian prediction
/// for the squeezing in harmonic traps.
fn convergence_suite(
    tol: &ValidationConfig,
    r: &Resolved,
    ground: &RotorState,
) -> CliResult<Suite> {
    let (schedule, prep) = first_cycle(r)?;
    let plan = schedule.step_plan(r.dt * r.calibration.constants.t0)?;
    let snaps = prep
        .map(|p| vec![SnapshotAt::SegmentEnd(p + 1), SnapshotAt::SegmentEnd(p + 3)])
        .unwrap_or_default();
    let observers = Observers::every(0, r.omega_ref).with_snapshots(snaps);
    let go = |k: usize| -> CliResult<Trajectory> {
        Ok(evolve_planned(
            ground,
            &r.model,
            &schedule,
            None,
            &scaled(&plan, k),
            1.0,
            &observers,
        )?)
    };
    let coarse = go(1)?;
    let (half, fine) = (go(2)?, go(8)?);
    let e1 = coarse.final_state.distance(&fine.final_state);
    let e2 = half.final_state.distance(&fine.final_state);
    let ratio = e1 / e2;
    let mut checks = vec![
        check("error_at_dt", e1, tol.convergence_tol),
        within("halving_ratio", ratio, 3.5, 4.5),
    ];
    let mut info = json!({
        "steps": plan.iter().map(|p| p.steps).sum::<usize>(),
        "error_at_half_dt": e2,
    });
    if let (Some(spec), Some(_)) = (r.squeeze, prep) {
        let mut spec = spec;
        spec.n_cycles = 1;
        let pred = gaussian_covariance_oracle(&spec)?[0];
        let got: Vec<f64> = coarse
            .snapshots
            .iter()
            .map(|s| moments(&s.state, r.omega_ref).min_variance_ratio)
            .collect();
        let want = [
            pred.mid.minor_variance() / 0.5,
            pred.end.minor_variance() / 0.5,
        ];
        let dev = got
            .iter()
            .zip(want)
            .map(|(g, w)| (g / w - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(check("squeezing_vs_gaussian", dev, tol.squeeze_tol));
        info["squeezing"] = json!({ "simulated": got, "gaussian": want });
        if spec.switch_time > 0.0 {
            info["squeezing_note"] =
                json!("the Gaussian prediction assumes instantaneous switches");
        }
    }
    Ok(Suite::new("convergence", checks, info))
}

/// g2 is one without fluctuations and grows with them.
fn g2_suite(r: &Resolved, ground: &RotorState) -> CliResult<Suite> {
    let p = &r.calibration.params;
    let d = r.calibration.drive_tight;
    let (mean_v, var_v) = rotor_core::analysis::potential_moments(ground, &r.calibration.constants);
    let mut checks = Vec::new();
    let (g0, n0) = g2_value(mean_v, 0.0, d, p, PHOTON_FLOOR)?;
    checks.push(check("coherent_limit", (g0 - 1.0).abs(), 0.0));
    checks.push(check(
        "photon_number",
        (n0 / steady_photon_number(mean_v, d, p) - 1.0).abs(),
        1e-12,
    ));
    let mut prev = g0;
    let mut worst = 0.0f64;
    for k in 1..=20 {
        let (g, _) = g2_value(mean_v, var_v * k as f64 / 4.0, d, p, PHOTON_FLOOR)?;
        worst = worst.max(prev - g);
        prev = g;
    }
    checks.push(check("monotone_in_variance", worst, 0.0));
    Ok(Suite::new(
        "g2",
        checks,
        json!({ "ground_mean_v": mean_v, "ground_var_v": var_v, "ground_g2": g2_value(mean_v, var_v, d, p, PHOTON_FLOOR)?.0 }),
    ))
}

/// Ground-state moments on the configured grid and on one twice as fine.
fn grid_suite(cfg: &RunConfig, r: &Resolved, ground: &RotorState) -> CliResult<Suite> {
    let fine_grid = AngularGrid::new(2 * r.grid.n_points(), r.grid.period())?;
    let fine_model = RotorModel::new(r.calibration.params, fine_grid)?;
    let fine = tight_ground_state(cfg, r, &fine_model)?;
    let a = moments(ground, r.omega_ref);
    let b = moments(&fine, r.omega_ref);
    let rel = |x: f64, y: f64| (x / y - 1.0).abs();
    let edge = ground.momentum_edge_population(0.1);
    Ok(Suite::new(
        "grid",
        vec![
            check("var_theta_change", rel(a.var_theta, b.var_theta), 1e-6),
            check("var_l_change", rel(a.var_l, b.var_l), 1e-6),
            check(
                "momentum_edge_population",
                edge,
                rotor_core::dynamics::EDGE_WARNING,
            ),
        ],
        json!({ "n_points_fine": 2 * r.grid.n_points() }),
    ))
}
