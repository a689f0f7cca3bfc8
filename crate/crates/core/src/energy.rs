//! Energy budget of the truncated models.
//!
//! For every coupling the ideal power `Re sum_{n=1..M} k_n conj(u_n) f_n`
//! telescopes to a boundary term once `u_n = 0` beyond `M`:
//!
//! * dyadic: `k_1 u_1 b_0^2`
//! * Gledzer: `k_1 b_0 (9/40 u_1 b_{-1} + u_2 u_1 - u_1^2)`
//! * Sabra: `-k_1 (Im(conj(u_1) b_0 b_{-1}) / 4 + Im(conj(u_2) u_1 b_0))`
//!
//! so `dE/dt = 2 flux - 2 dissipation` holds exactly for all three.

use num_complex::Complex64;

use crate::integrator::{IntegrateError, Trajectory};
use crate::model::{
    dyadic_coupling, gledzer_coupling, sabra_coupling, wavenumber, Coupling, ModelSpec,
};
use crate::regularization::RegularizationSpec;
use crate::state::ShellState;
use crate::system::Problem;

pub use crate::state::energy;

/// Boundary term of the telescoped ideal power. `boundary` is `[b_{-1}, b_0]`
/// (the first entry is ignored for the dyadic model).
pub fn boundary_flux(model: ModelSpec, boundary: [Complex64; 2], state: &ShellState) -> f64 {
    let k1 = wavenumber(1);
    let [bm1, b0] = boundary;
    let u1 = state.amplitude(1);
    let u2 = state.amplitude(2);
    match model.coupling {
        Coupling::Dyadic => k1 * u1.re * b0.re * b0.re,
        Coupling::Gledzer => {
            k1 * b0.re * ((9.0 / 40.0) * u1.re * bm1.re + u2.re * u1.re - u1.re * u1.re)
        }
        Coupling::Sabra => {
            -k1 * ((u1.conj() * b0 * bm1).im / 4.0 + (u2.conj() * u1 * b0).im)
        }
    }
}

/// `Re sum k_n conj(u_n) f_n` summed term by term.
pub fn ideal_power(model: ModelSpec, boundary: [Complex64; 2], state: &ShellState) -> f64 {
    let m = state.len();
    let at = |i: isize| -> Complex64 {
        match i {
            -1 => boundary[0],
            0 => boundary[1],
            i if i >= 1 => state.amplitude(i as usize),
            _ => Complex64::new(0.0, 0.0),
        }
    };
    (1..=m as isize)
        .map(|n| {
            let f = match model.coupling {
                Coupling::Dyadic => {
                    Complex64::from(dyadic_coupling(at(n - 1).re, at(n).re, at(n + 1).re))
                }
                Coupling::Gledzer => Complex64::from(gledzer_coupling([
                    at(n - 2).re,
                    at(n - 1).re,
                    at(n).re,
                    at(n + 1).re,
                    at(n + 2).re,
                ])),
                Coupling::Sabra => {
                    sabra_coupling([at(n - 2), at(n - 1), at(n), at(n + 1), at(n + 2)])
                }
            };
            wavenumber(n as i32) * (at(n).conj() * f).re
        })
        .sum()
}

/// `sum k_n (q_n |u_n|^3 + l_n |u_n|^2)` for the problem's damping.
pub fn dissipation(problem: &Problem, boundary: [Complex64; 2], state: &ShellState) -> f64 {
    let reg = &problem.reg;
    let aux_amp = match reg {
        RegularizationSpec::Auxiliary { n, .. } if *n == 0 => boundary[1].norm(),
        RegularizationSpec::Auxiliary { n, .. } => state.amplitude(*n).norm(),
        _ => 0.0,
    };
    (1..=state.len())
        .map(|m| {
            let k = wavenumber(m as i32);
            let r = state.amplitude(m).norm();
            let (q, l) = match reg {
                RegularizationSpec::CanonicalCutoff { .. } => (reg.cutoff_coefficient(m), 0.0),
                RegularizationSpec::Auxiliary { n, beta } => {
                    (0.0, beta * aux_amp * k / wavenumber(*n as i32))
                }
                RegularizationSpec::Viscous { nu } => (0.0, nu * k),
            };
            k * (q * r * r * r + l * r * r)
        })
        .sum()
}

fn boundary_pair(problem: &Problem, t: f64) -> Result<[Complex64; 2], IntegrateError> {
    let values = problem.bc.values(t)?;
    Ok(match values.as_slice() {
        [b0] => [Complex64::new(0.0, 0.0), *b0],
        [bm1, b0] => [*bm1, *b0],
        _ => unreachable!("boundary arity validated with the problem"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyResidual {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `dE/dt - 2 flux + 2 dissipation` from the dense output.
    pub residual: Vec<f64>,
    /// Whether the balance is an exact identity of the truncated system (it
    /// is for all three couplings; kept so consumers can tell).
    pub exact_identity: bool,
}

impl EnergyResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_energy(&self) -> f64 {
        self.energy.iter().cloned().fold(0.0, f64::max)
    }
}

/// Evaluates the energy balance on the trajectory's dense output.
pub fn energy_balance_residual(traj: &Trajectory, times: &[f64]) -> Result<EnergyResidual, IntegrateError> {
    let problem = &traj.problem;
    let mut energies = Vec::with_capacity(times.len());
    let mut residual = Vec::with_capacity(times.len());
    for &t in times {
        let y = traj.sample_flat(t)?;
        let dy = traj.sample_derivative_flat(t)?;
        let state = problem.to_state(y.clone())?;
        let de_dt: f64 = 2.0 * y.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>();
        let b = boundary_pair(problem, t)?;
        let flux = boundary_flux(problem.model, b, &state);
        let diss = dissipation(problem, b, &state);
        energies.push(state.energy());
        residual.push(de_dt - 2.0 * flux + 2.0 * diss);
    }
    Ok(EnergyResidual {
        times: times.to_vec(),
        energy: energies,
        residual,
        exact_identity: true,
    })
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Integrated form of the balance at every stored step time:
/// `E(t_k) - E(t_0) - int_{t_0}^{t_k} (2 flux - 2 dissipation)`.
///
/// Unlike [`energy_balance_residual`] this never differentiates the dense
/// output, so the low-order start-up steps of the stiff method do not
/// pollute it. Each step is integrated with 5-point Gauss-Legendre.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDrift {
    pub times: Vec<f64>,
    pub drift: Vec<f64>,
    pub max_energy: f64,
}

impl EnergyDrift {
    pub fn max_abs(&self) -> f64 {
        self.drift.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn energy_balance_drift(traj: &Trajectory) -> Result<EnergyDrift, IntegrateError> {
    let problem = &traj.problem;
    let times = traj.times();
    let power = |t: f64| -> Result<f64, IntegrateError> {
        let state = problem.to_state(traj.sample_flat(t)?)?;
        let b = boundary_pair(problem, t)?;
        Ok(2.0 * boundary_flux(problem.model, b, &state) - 2.0 * dissipation(problem, b, &state))
    };
    let e0 = traj.stored_state(0).energy();
    let mut max_energy = e0;
    let mut drift = vec![0.0];
    let mut integral = 0.0;
    for k in 1..times.len() {
        let (a, b) = (times[k - 1], times[k]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            integral += w * half * power(mid + half * x)?;
        }
        let e = traj.stored_state(k).energy();
        max_energy = max_energy.max(e);
        drift.push(e - e0 - integral);
    }
    Ok(EnergyDrift {
        times: times.to_vec(),
        drift,
        max_energy,
    })
}

/// `(t, ||u(t)||, ||u(0)|| + k_1 int_0^t b_0^2)` for a dyadic run.
pub fn energy_bound(traj: &Trajectory, times: &[f64]) -> Result<Vec<(f64, f64, f64)>, IntegrateError> {
    let t0 = traj.t_start();
    let norm0 = traj.sample(t0)?.norm();
    let b0_sq = |t: f64| -> Result<f64, IntegrateError> {
        let b = traj.problem.bc.b0(t)?;
        Ok(b.norm_sqr())
    };
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    let mut last = t0;
    for &t in times {
        if t < last {
            return Err(IntegrateError::OutOfRange {
                t,
                start: last,
                end: traj.t_end(),
            });
        }
        // composite Simpson on a fine grid between consecutive sample times
        let pieces = (((t - last) / 1e-3).ceil() as usize).max(1) * 2;
        let h = (t - last) / pieces as f64;
        if pieces > 0 && t > last {
            let mut acc = b0_sq(last)? + b0_sq(t)?;
            for k in 1..pieces {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * b0_sq(last + k as f64 * h)?;
            }
            integral += acc * h / 3.0;
        }
        last = t;
        let norm = traj.sample(t)?.norm();
        out.push((t, norm, norm0 + wavenumber(1) * integral));
    }
    Ok(out)
}
