//! `run`: evolve one trajectory or a noisy ensemble and write the time
//! series, Wigner maps and final state.

use rotor_core::analysis::{g2_value, MomentReport, PhaseSpaceCovariance, PHOTON_FLOOR};
use rotor_core::dynamics::Observers;
use rotor_core::exec::Execution;
use rotor_core::model::{steady_photon_number, DrivePoint};
use rotor_core::stochastic::{
    mean_and_stderr, run_ensemble, EnsembleSpec, EnsembleStats, TrajectoryRun, SUMMARY_FIELDS,
};
use rotor_core::RotorError;
use serde::Serialize;

use super::wigner::{mixture_wigner, write_map};
use super::{config_hash, Globals};
use crate::artifacts::{csv, Artifacts, RunInfo};
use crate::config::{Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::state_io::{StateFile, FINAL_STATE};

pub const TIMESERIES: &str = "timeseries.csv";
pub const TIMESERIES_HEADER: [&str; 9] = [
    "time",
    "mean_theta",
    "var_theta",
    "mean_l",
    "var_l",
    "covar",
    "squeeze_angle",
    "n_photons",
    "g2",
];

/// Moments of the trajectory mixture at one sample.
#[derive(Debug, Clone, Copy)]
struct MixRow {
    time: f64,
    drive: DrivePoint,
    mean_theta: f64,
    var_theta: f64,
    mean_l: f64,
    var_l: f64,
    covar: f64,
    mean_v: f64,
    var_v: f64,
}

/// Mixture moments by the law of total variance. For a single trajectory
/// these are its own moments.
fn mixture_rows(runs: &[TrajectoryRun]) -> Vec<MixRow> {
    let n_samples = runs
        .iter()
        .map(|r| r.trajectory.samples.len())
        .min()
        .unwrap_or(0);
    let n = runs.len() as f64;
    (0..n_samples)
        .map(|s| {
            let xs: Vec<_> = runs.iter().map(|r| r.trajectory.samples[s]).collect();
            let avg = |f: &dyn Fn(&rotor_core::dynamics::Sample) -> f64| {
                xs.iter().map(f).sum::<f64>() / n
            };
            let mt = avg(&|x| x.moments.mean_theta);
            let ml = avg(&|x| x.moments.mean_l);
            let mv = avg(&|x| x.mean_v);
            MixRow {
                time: xs[0].time,
                drive: xs[0].drive,
                mean_theta: mt,
                mean_l: ml,
                mean_v: mv,
                var_theta: avg(&|x| x.moments.var_theta + (x.moments.mean_theta - mt).powi(2)),
                var_l: avg(&|x| x.moments.var_l + (x.moments.mean_l - ml).powi(2)),
                covar: avg(&|x| {
                    x.moments.covar_theta_l + (x.moments.mean_theta - mt) * (x.moments.mean_l - ml)
                }),
                var_v: avg(&|x| x.var_v + (x.mean_v - mv).powi(2)),
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FieldStat {
    name: &'static str,
    mean: f64,
    stderr: f64,
}

#[derive(Debug, Serialize)]
struct Failure {
    index: usize,
    error: String,
}

#[derive(Debug, Serialize)]
struct EnsembleSummary {
    n_trajectories: usize,
    n_ok: usize,
    failures: Vec<Failure>,
    atom_number_mean: f64,
    atom_number_sd: f64,
    atom_number_min: u64,
    atom_number_max: u64,
    /// Per-trajectory final moments, averaged.
    final_fields: Vec<FieldStat>,
    /// Fraction of trajectories whose final minor variance is below the
    /// zero-point value.
    fraction_below_zero_point: f64,
    /// Minor variance of the final mixture over its zero-point value.
    final_mixture_min_variance_ratio: f64,
}

type Field = fn(&MomentReport) -> f64;

fn summary(stats: &EnsembleStats, n_traj: usize, omega_ref: f64) -> EnsembleSummary {
    let atoms: Vec<f64> = stats.atom_numbers.iter().map(|a| *a as f64).collect();
    let (am, ae) = mean_and_stderr(&atoms);
    let fm = &stats.final_moments;
    let take = |f: Field| {
        let v: Vec<f64> = fm.iter().map(f).collect();
        mean_and_stderr(&v)
    };
    let fields: [(&'static str, Field); 6] = [
        ("mean_theta", |m| m.mean_theta),
        ("var_theta", |m| m.var_theta),
        ("mean_l", |m| m.mean_l),
        ("var_l", |m| m.var_l),
        ("covar", |m| m.covar_theta_l),
        ("min_variance_ratio", |m| m.min_variance_ratio),
    ];
    let final_fields = fields
        .iter()
        .map(|(name, f)| {
            let (mean, stderr) = take(*f);
            FieldStat { name, mean, stderr }
        })
        .collect();
    let n = fm.len() as f64;
    let mt = fm.iter().map(|m| m.mean_theta).sum::<f64>() / n;
    let ml = fm.iter().map(|m| m.mean_l).sum::<f64>() / n;
    let mix = PhaseSpaceCovariance::from_moments(
        fm.iter()
            .map(|m| m.var_theta + (m.mean_theta - mt).powi(2))
            .sum::<f64>()
            / n,
        fm.iter()
            .map(|m| m.covar_theta_l + (m.mean_theta - mt) * (m.mean_l - ml))
            .sum::<f64>()
            / n,
        fm.iter()
            .map(|m| m.var_l + (m.mean_l - ml).powi(2))
            .sum::<f64>()
            / n,
        omega_ref,
    );
    EnsembleSummary {
        n_trajectories: n_traj,
        n_ok: stats.n_ok,
        failures: stats
            .failures
            .iter()
            .map(|f| Failure {
                index: f.index,
                error: f.error.clone(),
            })
            .collect(),
        atom_number_mean: am,
        atom_number_sd: ae * (atoms.len() as f64).sqrt(),
        atom_number_min: stats.atom_numbers.iter().copied().min().unwrap_or(0),
        atom_number_max: stats.atom_numbers.iter().copied().max().unwrap_or(0),
        final_fields,
        fraction_below_zero_point: fm.iter().filter(|m| m.min_variance_ratio < 1.0).count() as f64
            / n,
        final_mixture_min_variance_ratio: mix.minor_variance() / 0.5,
    }
}

pub fn run(g: &Globals) -> CliResult<()> {
    let cfg = g.load()?;
    let mut art = Artifacts::create(&g.out_dir(Some(&cfg)))?;
    let resolved = art.time("resolve", || Resolved::new(&cfg))?;
    let workers = execute(&cfg, &resolved, g, &mut art)?;
    let strict_fail = g.strict && !art.warnings().is_empty();
    let n_warn = art.warnings().len();
    art.finish(RunInfo {
        command: "run".into(),
        config_sha256: Some(config_hash(&cfg)),
        seed: Some(cfg.seed),
        workers,
    })?;
    if strict_fail {
        return Err(CliError::Numerical(format!(
            "{n_warn} warning(s) raised under --strict"
        )));
    }
    Ok(())
}

fn execute(
    cfg: &RunConfig,
    resolved: &Resolved,
    g: &Globals,
    art: &mut Artifacts,
) -> CliResult<Option<usize>> {
    for w in &resolved.warnings {
        art.warn(w.clone());
    }
    let cal = &resolved.calibration;
    let requests = resolved.snapshot_requests(cfg);
    let observers = Observers::every(cfg.observers.moments_stride, resolved.omega_ref)
        .with_snapshots(requests.iter().map(|r| r.1).collect());
    let spec = EnsembleSpec {
        params: cal.params,
        grid: resolved.grid.clone(),
        schedule: resolved.schedule.clone(),
        dt: resolved.dt,
        observers,
        ground_tol: cfg.grid.ground_tol_rotor,
        initial_state: None,
        keep_trajectories: true,
    };
    let ensemble = cfg.noise.is_ensemble();
    let noise = cfg.noise.to_noise(cfg.seed);
    let (execution, workers) = if noise.n_trajectories > 1 {
        (Execution::with_workers(g.workers), g.workers)
    } else {
        (Execution::Sequential, Some(1))
    };
    let stats = art.time("evolve", || run_ensemble(&spec, &noise, execution))?;
    for w in &stats.warnings {
        art.warn(w.clone());
    }
    for f in &stats.failures {
        art.warn(format!("trajectory {} failed: {}", f.index, f.error));
    }
    if stats.n_ok == 0 {
        return Err(CliError::Numerical("every trajectory failed".into()));
    }
    let runs = &stats.trajectories;

    if cfg.observers.moments_stride > 0 {
        let rows = mixture_rows(runs);
        let mut floor_hits = 0usize;
        let lines = rows.iter().map(|r| {
            let cov = PhaseSpaceCovariance::from_moments(
                r.var_theta,
                r.covar,
                r.var_l,
                resolved.omega_ref,
            );
            let (n_ph, g2) = match g2_value(r.mean_v, r.var_v, r.drive, &cal.params, PHOTON_FLOOR) {
                Ok((g2, n)) => (n, g2),
                Err(RotorError::PhotonFloor(_)) => {
                    floor_hits += 1;
                    (
                        steady_photon_number(r.mean_v, r.drive, &cal.params),
                        f64::NAN,
                    )
                }
                Err(e) => return Err(CliError::from(e)),
            };
            Ok(vec![
                r.time * 1e6,
                r.mean_theta,
                r.var_theta,
                r.mean_l,
                r.var_l,
                r.covar,
                cov.squeeze_angle(),
                n_ph,
                g2,
            ])
        });
        let lines: Vec<Vec<f64>> = lines.collect::<CliResult<_>>()?;
        art.write_text(TIMESERIES, &csv(&TIMESERIES_HEADER, lines))?;
        if floor_hits > 0 {
            log::info!("{floor_hits} samples below the photon floor; g2 written as NaN there");
        }
        if ensemble {
            let mut header = vec!["time"];
            header.extend(SUMMARY_FIELDS.iter().copied());
            let se = stats.samples.iter().map(|s| {
                let mut row = vec![s.time * 1e6];
                row.extend(s.stderr);
                row
            });
            art.write_text("ensemble_stderr.csv", &csv(&header, se))?;
        }
    }
    if ensemble {
        art.write_json(
            "ensemble_summary.json",
            &summary(&stats, noise.n_trajectories, resolved.omega_ref),
        )?;
    }

    for (label, at) in &requests {
        let states: Vec<_> = runs
            .iter()
            .filter_map(|r| {
                r.trajectory
                    .snapshots
                    .iter()
                    .find(|s| s.at == *at)
                    .map(|s| &s.state)
            })
            .collect();
        if states.is_empty() {
            art.warn(format!("no snapshot was taken for Wigner map `{label}`"));
            continue;
        }
        let o = &cfg.observers;
        let map = art.time("wigner", || {
            mixture_wigner(&states, o.wigner_extent, o.wigner_n_theta, o.wigner_n_l)
        });
        match map {
            Ok(m) => write_map(art, label, &m)?,
            Err(e @ RotorError::NotLocalized { .. }) => {
                art.warn(format!("Wigner map `{label}` skipped: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let first = &runs[0];
    art.write_json(
        FINAL_STATE,
        &StateFile::from_state(
            &first.trajectory.final_state,
            resolved.omega_ref,
            first.atom_number,
        ),
    )?;
    Ok(workers)
}
