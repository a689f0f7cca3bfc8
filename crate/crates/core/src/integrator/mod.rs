//! Adaptive time integration with dense output.

mod bdf;
mod config;
mod dopri;
mod radau;
mod trajectory;

use thiserror::Error;

pub use config::{Method, SolverConfig};
pub use trajectory::{Interpolant, SolverStats, Status, Trajectory};

use crate::error::ShellError;
use crate::state::ShellState;
use crate::system::{OdeSystem, Problem};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IntegrateError {
    #[error(transparent)]
    Shell(#[from] ShellError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid time span [{start}, {end}]")]
    InvalidSpan { start: f64, end: f64 },
    #[error("boundary data does not cover [{start}, {end}]")]
    BoundaryCoverage { start: f64, end: f64 },
    #[error("t = {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepFailure {
    StepTooSmall,
}

pub(crate) trait Stepper<S: OdeSystem> {
    fn time(&self) -> f64;
    fn state(&self) -> &[f64];
    fn step(&mut self, sys: &S, t_end: f64) -> Result<Interpolant, StepFailure>;
}

pub(crate) fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Starting step from the Hairer-Norsett-Wanner heuristic.
#[allow(clippy::too_many_arguments)]
pub(crate) fn initial_step<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    max_step: f64,
    error_order: i32,
    rtol: f64,
    atol: f64,
) -> f64 {
    let n = y0.len();
    let interval = t_end - t0;
    let scale: Vec<f64> = y0.iter().map(|y| atol + rtol * y.abs()).collect();
    let d0 = rms(&y0.iter().zip(&scale).map(|(y, s)| y / s).collect::<Vec<_>>());
    let d1 = rms(&f0.iter().zip(&scale).map(|(f, s)| f / s).collect::<Vec<_>>());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(interval);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let d2 = rms(
        &f1.iter()
            .zip(f0)
            .zip(&scale)
            .map(|((a, b), s)| (a - b) / s)
            .collect::<Vec<_>>(),
    ) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (error_order as f64 + 1.0))
    };
    let h = (100.0 * h0).min(h1).min(interval).min(max_step);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6f64.min(interval)
    }
}

/// Raw output of [`solve`].
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub segments: Vec<Interpolant>,
    pub status: Status,
    pub stats: SolverStats,
    pub message: Option<String>,
}

/// Integrates any [`OdeSystem`] from `t0` to `t_end`. `amplitude` maps a
/// state to the quantity compared against the blowup guard.
pub fn solve<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: Vec<f64>,
    t_end: f64,
    cfg: &SolverConfig,
    amplitude: impl Fn(&[f64]) -> f64,
) -> Solution {
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);
    let mut times = vec![t0];
    let mut states = y0.clone();
    let mut segments = Vec::new();
    let mut message = None;
    let mut status = Status::Completed;
    let mut stats = SolverStats::default();

    // `$fallback`: stop quietly on step underflow so another method can
    // take over from the last accepted state.
    macro_rules! drive {
        ($stepper:expr, $fallback:expr) => {{
            let mut stepper = $stepper;
            let mut underflow = false;
            while Stepper::<S>::time(&stepper) < t_end {
                if segments.len() >= cfg.max_steps {
                    status = Status::AbortedBudget {
                        last_good_time: Stepper::<S>::time(&stepper),
                    };
                    message = Some(format!("step budget of {} exhausted", cfg.max_steps));
                    break;
                }
                let last_good = Stepper::<S>::time(&stepper);
                match stepper.step(sys, t_end) {
                    Ok(interp) => {
                        let y = Stepper::<S>::state(&stepper);
                        let peak = amplitude(y);
                        if !peak.is_finite() || y.iter().any(|v| !v.is_finite()) {
                            status = Status::AbortedNonfinite { last_good_time: last_good };
                            message = Some("non-finite state".into());
                            break;
                        }
                        if peak > cfg.blowup_guard {
                            status = Status::AbortedNonfinite { last_good_time: last_good };
                            message = Some(format!(
                                "amplitude {peak:e} exceeded blowup guard {:e}",
                                cfg.blowup_guard
                            ));
                            break;
                        }
                        times.push(Stepper::<S>::time(&stepper));
                        states.extend_from_slice(y);
                        segments.push(interp);
                    }
                    Err(StepFailure::StepTooSmall) if $fallback => {
                        underflow = true;
                        break;
                    }
                    Err(StepFailure::StepTooSmall) => {
                        status = Status::AbortedNonfinite { last_good_time: last_good };
                        message = Some(format!("step size underflow at t = {last_good}"));
                        break;
                    }
                }
            }
            (stepper, underflow)
        }};
    }

    match cfg.method {
        Method::ExplicitAdaptive => {
            let (s, _) = drive!(
                dopri::Dopri5::new(sys, t0, y0, t_end, cfg.rtol, cfg.atol, max_step, cfg.initial_step),
                false
            );
            stats.rhs_evals = s.rhs_evals;
            stats.rejected = s.rejected;
        }
        Method::StiffAdaptive => {
            let (s, underflow) = drive!(
                bdf::Bdf::new(sys, t0, y0, t_end, cfg.rtol, cfg.atol, max_step, cfg.initial_step),
                true
            );
            stats.rhs_evals = s.rhs_evals;
            stats.rejected = s.rejected;
            stats.jacobian_evals = s.jac_evals;
            stats.lu_decompositions = s.lu_decomps;
            if underflow {
                let restart = Stepper::<S>::time(&s);
                let before = segments.len();
                let y = Stepper::<S>::state(&s).to_vec();
                let (r, _) = drive!(
                    radau::Radau::new(sys, restart, y, t_end, cfg.rtol, cfg.atol, max_step, None),
                    false
                );
                stats.rhs_evals += r.rhs_evals;
                stats.rejected += r.rejected;
                stats.jacobian_evals += r.jac_evals;
                stats.lu_decompositions += r.lu_decomps;
                stats.fallback_steps = segments.len() - before;
            }
        }
    }
    stats.steps = segments.len();
    Solution {
        times,
        states,
        segments,
        status,
        stats,
        message,
    }
}

/// Integrates `problem` from `ic` at `t0` up to `t_end`.
pub fn integrate(
    problem: &Problem,
    ic: &ShellState,
    t0: f64,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate()?;
    problem.check_state(ic)?;
    if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
        return Err(IntegrateError::InvalidSpan { start: t0, end: t_end });
    }
    if !problem.bc.covers(t0, t_end) {
        return Err(IntegrateError::BoundaryCoverage { start: t0, end: t_end });
    }
    let kind = problem.kind();
    let amplitude = |y: &[f64]| -> f64 {
        match kind {
            crate::model::ScalarKind::Real => y.iter().fold(0.0, |m, v| m.max(v.abs())),
            crate::model::ScalarKind::Complex => y
                .chunks_exact(2)
                .fold(0.0, |m, c| m.max(c[0].hypot(c[1]))),
        }
    };
    let sol = solve(problem, t0, ic.as_flat().to_vec(), t_end, cfg, amplitude);
    Ok(Trajectory {
        problem: problem.clone(),
        dim: problem.dim(),
        times: sol.times,
        states: sol.states,
        segments: sol.segments,
        status: sol.status,
        stats: sol.stats,
        message: sol.message,
    })
}
