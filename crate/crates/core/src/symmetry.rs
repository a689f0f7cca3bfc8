//! Ideal symmetries acting on initial data, boundary data and solutions.

use num_complex::Complex64;

use crate::boundary::{BoundaryFn, BoundarySpec};
use crate::error::ShellError;
use crate::integrator::{IntegrateError, Trajectory};
use crate::model::{ModelSpec, LAMBDA};
use crate::state::ShellState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symmetry {
    /// `u(t) -> alpha u(alpha t)`.
    TimeScale { alpha: f64 },
    /// `u_n -> lambda u_{n+1}`: the first shell becomes a boundary.
    SpaceShift,
    /// Sabra only: `u_n -> exp(i F_n) u_n` with `F_n = F_{n-1} + F_{n-2}`.
    Phase { seed_m1: f64, seed_0: f64 },
}

/// `F_{-1}, F_0, F_1, ..., F_last`.
pub fn fibonacci_phases(seed_m1: f64, seed_0: f64, last: usize) -> Vec<f64> {
    let mut out = vec![seed_m1, seed_0];
    for _ in 1..=last {
        let k = out.len();
        out.push(out[k - 1] + out[k - 2]);
    }
    out
}

fn check(sym: Symmetry, model: ModelSpec) -> Result<(), ShellError> {
    match sym {
        Symmetry::TimeScale { alpha } if !(alpha > 0.0 && alpha.is_finite()) => Err(
            ShellError::InvalidParameter(format!("time-scale factor must be positive, got {alpha}")),
        ),
        Symmetry::Phase { .. } if !model.is_complex() => Err(ShellError::PhaseOnRealModel),
        _ => Ok(()),
    }
}

/// Transforms a state (initial condition or sample) shell by shell.
pub fn transform_state(sym: Symmetry, model: ModelSpec, state: &ShellState) -> Result<ShellState, ShellError> {
    check(sym, model)?;
    let amps = state.amplitudes();
    let out: Vec<Complex64> = match sym {
        Symmetry::TimeScale { alpha } => amps.iter().map(|z| z * alpha).collect(),
        Symmetry::SpaceShift => {
            if amps.len() < 2 {
                return Err(ShellError::EmptyState);
            }
            amps[1..].iter().map(|z| z * LAMBDA).collect()
        }
        Symmetry::Phase { seed_m1, seed_0 } => {
            let phases = fibonacci_phases(seed_m1, seed_0, amps.len());
            amps.iter()
                .enumerate()
                .map(|(i, z)| z * Complex64::from_polar(1.0, phases[i + 2]))
                .collect()
        }
    };
    if model.is_complex() {
        ShellState::complex(&out)
    } else {
        ShellState::real(out.iter().map(|z| z.re).collect())
    }
}

/// Initial condition under the symmetry; identical to [`transform_state`].
pub fn transform_ic(sym: Symmetry, model: ModelSpec, ic: &ShellState) -> Result<ShellState, ShellError> {
    transform_state(sym, model, ic)
}

/// Boundary functions under the symmetry. The space shift needs the solution
/// whose first shell becomes the new innermost boundary; it is tabulated
/// with `refine` knots per accepted step.
pub fn transform_bc(
    sym: Symmetry,
    model: ModelSpec,
    bc: &BoundarySpec,
    source: Option<&Trajectory>,
    refine: usize,
) -> Result<BoundarySpec, IntegrateError> {
    check(sym, model)?;
    let label = format!("{}|{:?}", bc.label, sym);
    let functions = match sym {
        Symmetry::TimeScale { alpha } => bc
            .functions
            .iter()
            .map(|f| f.clone().scaled(Complex64::from(alpha), alpha))
            .collect(),
        Symmetry::SpaceShift => {
            let traj = source.ok_or_else(|| {
                ShellError::InvalidParameter("space shift of a boundary needs the source solution".into())
            })?;
            let u1 = BoundaryFn::Tabulated(std::sync::Arc::new(traj.tabulate_shell(1, LAMBDA, refine)?));
            match model.boundary_arity() {
                1 => vec![u1],
                _ => {
                    let b0 = bc.functions.last().cloned().ok_or(ShellError::BoundaryArity {
                        expected: 2,
                        got: 0,
                    })?;
                    vec![b0.scaled(Complex64::from(LAMBDA), 1.0), u1]
                }
            }
        }
        Symmetry::Phase { seed_m1, seed_0 } => {
            let seeds = [seed_m1, seed_0];
            bc.functions
                .iter()
                .zip(seeds)
                .map(|(f, phase)| f.clone().scaled(Complex64::from_polar(1.0, phase), 1.0))
                .collect()
        }
    };
    Ok(BoundarySpec::new(label, functions))
}

/// Transformed solution sampled at `t`: `alpha u(alpha t)`, `lambda u_{n+1}(t)`
/// or `exp(i F_n) u_n(t)`.
pub fn transform_sample(sym: Symmetry, traj: &Trajectory, t: f64) -> Result<ShellState, IntegrateError> {
    let model = traj.problem.model;
    check(sym, model)?;
    let source_time = match sym {
        Symmetry::TimeScale { alpha } => alpha * t,
        _ => t,
    };
    let state = traj.sample(source_time)?;
    Ok(transform_state(sym, model, &state)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::builtin_bc;
    use crate::initial::builtin_ic;

    #[test]
    fn fibonacci_recurrence() {
        assert_eq!(fibonacci_phases(1.0, 1.0, 4), vec![1.0, 1.0, 2.0, 3.0, 5.0, 8.0]);
    }

    #[test]
    fn identities() {
        let ic = builtin_ic("IC2", ModelSpec::SABRA, 6).unwrap();
        let same = transform_ic(Symmetry::TimeScale { alpha: 1.0 }, ModelSpec::SABRA, &ic).unwrap();
        assert_eq!(same, ic);
        let zero = Symmetry::Phase {
            seed_m1: 0.0,
            seed_0: 0.0,
        };
        assert_eq!(transform_ic(zero, ModelSpec::SABRA, &ic).unwrap(), ic);
        let bc = builtin_bc("sabra-default").unwrap();
        let tbc = transform_bc(zero, ModelSpec::SABRA, &bc, None, 1).unwrap();
        assert_eq!(tbc.values(0.4).unwrap(), bc.values(0.4).unwrap());
    }

    #[test]
    fn time_scale_doubles_initial_data() {
        let ic = builtin_ic("IC2", ModelSpec::DYADIC, 4).unwrap();
        let scaled = transform_ic(Symmetry::TimeScale { alpha: 2.0 }, ModelSpec::DYADIC, &ic).unwrap();
        for n in 1..=4 {
            assert_eq!(scaled.amplitude(n), ic.amplitude(n) * 2.0);
        }
        let bc = builtin_bc("dyadic-default").unwrap();
        let tbc = transform_bc(Symmetry::TimeScale { alpha: 2.0 }, ModelSpec::DYADIC, &bc, None, 1).unwrap();
        assert!((tbc.b0(0.3).unwrap().re - 2.0 * (2.0 - 0.6f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn space_shift_drops_first_shell() {
        let ic = builtin_ic("IC2", ModelSpec::DYADIC, 4).unwrap();
        let shifted = transform_ic(Symmetry::SpaceShift, ModelSpec::DYADIC, &ic).unwrap();
        assert_eq!(shifted.len(), 3);
        assert_eq!(shifted.amplitude(1), ic.amplitude(2) * 2.0);
    }

    #[test]
    fn phase_on_real_model_rejected() {
        let ic = builtin_ic("IC1", ModelSpec::GLEDZER, 4).unwrap();
        let sym = Symmetry::Phase {
            seed_m1: 0.3,
            seed_0: 0.1,
        };
        assert_eq!(
            transform_ic(sym, ModelSpec::GLEDZER, &ic),
            Err(ShellError::PhaseOnRealModel)
        );
        assert!(transform_ic(Symmetry::TimeScale { alpha: 0.0 }, ModelSpec::DYADIC, &ic).is_err());
    }
}
