//! Wigner maps of single states or of trajectory mixtures, and the
//! `wigner` subcommand that maps a saved state file.

use std::path::PathBuf;

use rotor_core::analysis::{linspace, moments, wigner, WignerMap};
use rotor_core::dynamics::RotorState;
use rotor_core::{Result, RotorError};
use serde::Serialize;

use super::Globals;
use crate::artifacts::{column, num, sha256_hex, Artifacts, RunInfo};
use crate::error::{CliError, CliResult};
use crate::state_io::StateFile;

/// Wigner function of the equal-weight mixture of `states`, on a window of
/// `±extent` standard deviations of the mixture around its mean.
pub fn mixture_wigner(
    states: &[&RotorState],
    extent: f64,
    n_theta: usize,
    n_l: usize,
) -> Result<WignerMap> {
    let first = states
        .first()
        .ok_or_else(|| RotorError::InvalidParameter("no states to map".into()))?;
    let m: Vec<_> = states.iter().map(|s| moments(s, 1.0)).collect();
    let n = m.len() as f64;
    let mean_t = m.iter().map(|x| x.mean_theta).sum::<f64>() / n;
    let mean_l = m.iter().map(|x| x.mean_l).sum::<f64>() / n;
    let var_t = m
        .iter()
        .map(|x| x.var_theta + (x.mean_theta - mean_t).powi(2))
        .sum::<f64>()
        / n;
    let var_l = m
        .iter()
        .map(|x| x.var_l + (x.mean_l - mean_l).powi(2))
        .sum::<f64>()
        / n;
    let quarter = first.grid().length() / 4.0;
    let wt = (extent * var_t.sqrt()).min(quarter);
    let wl = extent * var_l.sqrt();
    let thetas = linspace(mean_t - wt, mean_t + wt, n_theta);
    let ls = linspace(mean_l - wl, mean_l + wl, n_l);
    let mut acc = wigner(first, &thetas, &ls)?;
    for s in &states[1..] {
        let w = wigner(s, &acc.thetas, &ls)?;
        for (row, add) in acc.values.iter_mut().zip(&w.values) {
            row.iter_mut().zip(add).for_each(|(a, b)| *a += b);
        }
    }
    for row in acc.values.iter_mut() {
        row.iter_mut().for_each(|a| *a /= n);
    }
    Ok(acc)
}

/// Writes `wigner_<label>.csv` (rows θ, columns L) with `_theta.csv` and
/// `_l.csv` axis files.
pub fn write_map(art: &mut Artifacts, label: &str, map: &WignerMap) -> CliResult<()> {
    let body: String = map
        .values
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
            cells.join(",") + "\n"
        })
        .collect();
    art.write_text(&format!("wigner_{label}.csv"), &body)?;
    art.write_text(&format!("wigner_{label}_theta.csv"), &column(&map.thetas))?;
    art.write_text(&format!("wigner_{label}_l.csv"), &column(&map.ls))
}

#[derive(Debug, Clone)]
pub struct WignerArgs {
    pub state: PathBuf,
    pub n_theta: usize,
    pub n_l: usize,
    pub extent: f64,
    pub label: String,
}

#[derive(Debug, Serialize)]
struct MapSummary {
    integral: f64,
    purity: f64,
    min_value: f64,
    var_theta: f64,
    covar: f64,
    var_l: f64,
}

pub fn run(g: &Globals, args: &WignerArgs) -> CliResult<()> {
    if args.n_theta < 2 || args.n_l < 2 || !(args.extent > 0.0) {
        return Err(CliError::Config(
            "Wigner grids need at least 2 points per axis and a positive extent".into(),
        ));
    }
    let file = StateFile::load(&args.state)?;
    let state = file.to_state()?;
    let mut art = Artifacts::create(&g.out_dir(None))?;
    let map = art.time("wigner", || {
        mixture_wigner(&[&state], args.extent, args.n_theta, args.n_l)
    })?;
    write_map(&mut art, &args.label, &map)?;
    let (xx, xp, pp) = map.covariance();
    art.write_json(
        &format!("wigner_{}_summary.json", args.label),
        &MapSummary {
            integral: map.integral(),
            purity: map.purity(),
            min_value: map.min_value(),
            var_theta: xx,
            covar: xp,
            var_l: pp,
        },
    )?;
    let bytes = std::fs::read(&args.state)?;
    art.finish(RunInfo {
        command: "wigner".into(),
        config_sha256: Some(sha256_hex(&bytes)),
        seed: None,
        workers: None,
    })?;
    Ok(())
}
