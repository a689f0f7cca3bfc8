//! Direct check that pushing a cutoff one shell deeper is the same as
//! feeding the coarser model its own first shell as a boundary.

use serde::{Deserialize, Serialize};
use shellrg_core::symmetry::{transform_bc, transform_ic, Symmetry};
use shellrg_core::{integrate, BoundarySpec, InitialData, ModelSpec, Problem, RegularizationSpec, SolverConfig, LAMBDA};

use crate::error::LabError;
use crate::family::require_completed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RgCheck {
    /// `max |u_{n+1}(t) - u~_n(t) / lambda|` over shells and sample times.
    pub discrepancy: f64,
    pub worst_shell: usize,
    pub worst_time: f64,
    pub samples: usize,
}

/// Integrates the `(N+1, J)` model, then the `(N, J)` model started from
/// `lambda a_{n+1}` with boundary `lambda u_1(t)` (and `lambda b_0` for
/// two-sided stencils), and compares the two. `refine` is the number of
/// boundary knots per accepted step of the finer run.
#[allow(clippy::too_many_arguments)]
pub fn verify_rg_relation(
    model: ModelSpec,
    j: usize,
    level: usize,
    ic: &InitialData,
    bc: &BoundarySpec,
    t_end: f64,
    solver: &SolverConfig,
    refine: usize,
) -> Result<RgCheck, LabError> {
    let fine = Problem::new(model, RegularizationSpec::canonical(level + 1, j), bc.clone())?;
    let fine_ic = ic.build(model, fine.shells())?;
    let fine_run = require_completed(level + 1, integrate(&fine, &fine_ic, 0.0, t_end, solver)?)?;

    let shifted_bc = transform_bc(Symmetry::SpaceShift, model, bc, Some(&fine_run), refine)?;
    let coarse = Problem::new(model, RegularizationSpec::canonical(level, j), shifted_bc)?;
    let coarse_ic = transform_ic(Symmetry::SpaceShift, model, &fine_ic)?;
    let coarse_run = require_completed(level, integrate(&coarse, &coarse_ic, 0.0, t_end, solver)?)?;

    let mut times: Vec<f64> = fine_run.times().to_vec();
    times.extend_from_slice(coarse_run.times());
    times.extend((0..=200).map(|k| t_end * k as f64 / 200.0));
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut check = RgCheck {
        discrepancy: 0.0,
        worst_shell: 1,
        worst_time: 0.0,
        samples: times.len(),
    };
    for &t in &times {
        let u = fine_run.sample(t)?;
        let v = coarse_run.sample(t)?;
        for n in 1..=coarse.shells() {
            let gap = (u.amplitude(n + 1) - v.amplitude(n) / LAMBDA).norm();
            if gap > check.discrepancy {
                check.discrepancy = gap;
                check.worst_shell = n;
                check.worst_time = t;
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zero_data_gives_zero_discrepancy() {
        for model in [ModelSpec::DYADIC, ModelSpec::GLEDZER, ModelSpec::SABRA] {
            let zeros = vec![Complex64::new(0.0, 0.0); model.boundary_arity()];
            let bc = BoundarySpec::constant(&zeros);
            let check = verify_rg_relation(
                model,
                2,
                3,
                &InitialData::Literal(vec![]),
                &bc,
                0.5,
                &SolverConfig::default(),
                4,
            )
            .unwrap();
            assert_eq!(check.discrepancy, 0.0);
        }
    }
}
