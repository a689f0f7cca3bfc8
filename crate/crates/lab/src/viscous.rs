//! The viscous model seen through the auxiliary family: the time-dependent
//! level `N_t` and parameter `beta_t`, and the rescaled deviations along
//! `nu_N = 2^(-4N/3)`.

use serde::{Deserialize, Serialize};
use shellrg_core::model::wavenumber;
use shellrg_core::{ShellState, Trajectory};

use crate::deviation::{deviations, DeviationSeries};
use crate::error::LabError;
use crate::family::{limit_reference, run_levels, Family, RunSpec};

/// `nu_N = k_N^(-4/3)`.
pub fn viscosity_for_level(level: usize) -> f64 {
    (-4.0 * level as f64 / 3.0).exp2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BridgeSeries {
    pub nu: f64,
    pub times: Vec<f64>,
    /// `N_t`; zero when no shell satisfies the bound.
    pub levels: Vec<usize>,
    /// `beta_t = nu k_{N_t} / |u_{N_t}|`, NaN when flagged.
    pub betas: Vec<f64>,
    /// The same ratio one shell deeper, when that shell exists.
    pub next_betas: Vec<Option<f64>>,
    pub flagged: Vec<bool>,
}

impl BridgeSeries {
    /// `beta_t <= 1` and the next shell exceeds 1 at every unflagged record.
    pub fn maximality_holds(&self) -> bool {
        self.betas
            .iter()
            .zip(&self.next_betas)
            .zip(&self.flagged)
            .all(|((b, next), flag)| *flag || (*b <= 1.0 && next.map_or(true, |x| x > 1.0)))
    }
}

fn ratio(state: &ShellState, nu: f64, n: usize) -> f64 {
    let r = state.amplitude(n).norm();
    if r == 0.0 {
        f64::INFINITY
    } else {
        nu * wavenumber(n as i32) / r
    }
}

/// `(N_t, beta_t, next ratio)` for one state: the largest shell with
/// `nu k_N / |u_N| <= 1`. Shells with zero amplitude never qualify.
pub fn bridge_from_state(state: &ShellState, nu: f64) -> Option<(usize, f64, Option<f64>)> {
    let m = state.len();
    let level = (1..=m).rev().find(|&n| ratio(state, nu, n) <= 1.0)?;
    let next = (level < m).then(|| ratio(state, nu, level + 1));
    Some((level, ratio(state, nu, level), next))
}

pub fn viscous_bridge(traj: &Trajectory, nu: f64, times: &[f64]) -> Result<BridgeSeries, LabError> {
    let mut out = BridgeSeries {
        nu,
        times: times.to_vec(),
        levels: Vec::with_capacity(times.len()),
        betas: Vec::with_capacity(times.len()),
        next_betas: Vec::with_capacity(times.len()),
        flagged: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let state = traj.sample(t)?;
        match bridge_from_state(&state, nu) {
            Some((level, beta, next)) => {
                out.levels.push(level);
                out.betas.push(beta);
                out.next_betas.push(next);
                out.flagged.push(false);
            }
            None => {
                out.levels.push(0);
                out.betas.push(f64::NAN);
                out.next_betas.push(None);
                out.flagged.push(true);
            }
        }
    }
    Ok(out)
}

/// Deviations of the viscous runs `nu_N` from a much less viscous reference,
/// divided by `rho^N`. `spec.family` must be the viscous family.
pub fn viscous_rescaled_deviation(
    spec: &RunSpec,
    levels: &[usize],
    reference_level: usize,
    shells: &[usize],
    times: &[f64],
    rho: f64,
    workers: usize,
) -> Result<Vec<DeviationSeries>, LabError> {
    if !matches!(spec.family, Family::Viscous { .. }) {
        return Err(LabError::Invalid("rescaled viscous deviations need the viscous family".into()));
    }
    let reference = limit_reference(spec, reference_level, levels)?;
    let runs = run_levels(spec, levels, workers);
    let mut completed = Vec::with_capacity(levels.len());
    for (&level, run) in levels.iter().zip(runs) {
        completed.push((level, crate::family::require_completed(level, run?)?));
    }
    let pairs: Vec<(usize, &Trajectory)> = completed.iter().map(|(l, t)| (*l, t)).collect();
    let series = deviations(&pairs, &spec.family.label(), &reference, shells, times)?;
    Ok(series.iter().map(|s| s.rescaled(rho)).collect())
}
