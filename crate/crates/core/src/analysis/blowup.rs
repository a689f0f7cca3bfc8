use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::integrator::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BlowupOptions {
    /// Fraction of the global maximum that marks the crossing.
    pub theta: f64,
    /// Shell to watch; defaults to the regularization level.
    pub shell: Option<usize>,
    /// Uniform scan points added to the accepted step times.
    pub scan_points: usize,
    /// Bisection stops once the bracket is this narrow.
    pub time_tolerance: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        BlowupOptions {
            theta: 0.05,
            shell: None,
            scan_points: 4000,
            time_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlowupEstimate {
    pub time: f64,
    /// Scan interval that contained the first crossing.
    pub bracket: (f64, f64),
    pub shell: usize,
    pub peak_amplitude: f64,
    pub peak_time: f64,
    /// Where `d|u|/dt` of the watched shell is largest; a cross-check only.
    pub steepest_time: f64,
}

/// First time the watched shell's modulus reaches `theta` times its maximum
/// over the whole run, refined by bisection on the dense output. A shell
/// that starts at or above the threshold is not blowing up.
pub fn detect_blowup(traj: &Trajectory, opts: &BlowupOptions) -> Result<BlowupEstimate, AnalysisError> {
    let (start, end) = (traj.t_start(), traj.t_end());
    let none = || AnalysisError::NoBlowup { start, end };
    if !(opts.theta > 0.0 && opts.theta < 1.0) {
        return Err(AnalysisError::Degenerate(format!("theta must lie in (0, 1), got {}", opts.theta)));
    }
    let shell = opts.shell.unwrap_or_else(|| traj.problem.reg.level()).max(1);
    if shell > traj.shells() || end <= start {
        return Err(none());
    }

    let mut grid: Vec<f64> = traj.times().to_vec();
    let points = opts.scan_points.max(2);
    grid.extend((0..=points).map(|k| start + (end - start) * k as f64 / points as f64));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let modulus = |t: f64| traj.shell(shell, t).map(|z| z.norm());
    let values = grid.iter().map(|&t| modulus(t)).collect::<Result<Vec<_>, _>>()?;
    let (peak_index, peak) = values
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    if !(peak > 0.0) {
        return Err(none());
    }
    let threshold = opts.theta * peak;
    if values[0] >= threshold {
        return Err(none());
    }
    let first = values.iter().position(|&v| v >= threshold).ok_or_else(none)?;
    let bracket = (grid[first - 1], grid[first]);

    let (mut lo, mut hi) = bracket;
    while hi - lo > opts.time_tolerance * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modulus(mid)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut steepest = (start, f64::NEG_INFINITY);
    for &t in &grid {
        let z = traj.shell(shell, t)?;
        let r = z.norm();
        if r == 0.0 {
            continue;
        }
        let dz = traj.sample_derivative(t)?[shell - 1];
        let rate = (z.conj() * dz).re / r;
        if rate > steepest.1 {
            steepest = (t, rate);
        }
    }

    Ok(BlowupEstimate {
        time: 0.5 * (lo + hi),
        bracket,
        shell,
        peak_amplitude: peak,
        peak_time: grid[peak_index],
        steepest_time: steepest.0,
    })
}
