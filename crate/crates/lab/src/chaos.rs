//! Growth of tiny cutoff perturbations with the level.
//!
//! The unperturbed and perturbed problems are integrated as one stacked
//! system so both share every step; the separation then reflects the
//! dynamics rather than two independent error histories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use shellrg_core::integrator::solve;
use shellrg_core::linalg::BandMatrix;
use shellrg_core::{
    BoundarySpec, InitialData, ModelSpec, OdeSystem, Problem, RegularizationSpec, SolverConfig, Status,
};

use crate::error::LabError;
use crate::pool::par_map;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosConfig {
    pub model: ModelSpec,
    pub j: usize,
    pub eps: f64,
    pub levels: Vec<usize>,
    pub ic: InitialData,
    pub bc: BoundarySpec,
    pub t_star: f64,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChaosPoint {
    pub level: usize,
    /// `(sum_n |delta u_n(t*)|^2)^(1/2)`.
    pub separation: f64,
    /// Below ten times the absolute tolerance.
    pub tolerance_limited: bool,
    pub status: Status,
    pub message: Option<String>,
}

struct PairSystem {
    base: Problem,
    perturbed: Problem,
    half: usize,
}

impl OdeSystem for PairSystem {
    fn dim(&self) -> usize {
        2 * self.half
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let (a, b) = y.split_at(self.half);
        let (da, db) = dy.split_at_mut(self.half);
        self.base.rhs_flat(t, a, da);
        self.perturbed.rhs_flat(t, b, db);
    }

    // The blocks are decoupled, so stacking keeps the single-system band.
    fn bandwidth(&self) -> (usize, usize) {
        self.base.bandwidth()
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut BandMatrix) {
        let (kl, ku) = self.base.bandwidth();
        for (offset, problem) in [(0, &self.base), (self.half, &self.perturbed)] {
            let mut block = BandMatrix::zeros(self.half, kl, ku);
            problem.jacobian_flat(t, &y[offset..offset + self.half], &mut block);
            for i in 0..self.half {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(self.half) {
                    let v = block.get(i, j);
                    if v != 0.0 {
                        jac.set(offset + i, offset + j, v);
                    }
                }
            }
        }
    }
}

fn separation_at(cfg: &ChaosConfig, level: usize) -> Result<ChaosPoint, LabError> {
    let reg = |eps: f64| RegularizationSpec::CanonicalCutoff {
        n: level,
        j: cfg.j,
        coeffs: Vec::new(),
        eps,
    };
    let base = Problem::new(cfg.model, reg(0.0), cfg.bc.clone())?;
    let perturbed = Problem::new(cfg.model, reg(cfg.eps), cfg.bc.clone())?;
    let ic = cfg.ic.build(cfg.model, base.shells())?;
    let half = base.dim();
    let mut y0 = ic.as_flat().to_vec();
    y0.extend_from_slice(ic.as_flat());
    let pair = PairSystem { base, perturbed, half };
    let peak = |y: &[f64]| y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sol = solve(&pair, 0.0, y0, cfg.t_star, &cfg.solver, peak);
    let end = &sol.states[sol.states.len() - 2 * half..];
    let separation = if sol.status.is_completed() {
        end[..half]
            .iter()
            .zip(&end[half..])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    } else {
        f64::NAN
    };
    Ok(ChaosPoint {
        level,
        separation,
        tolerance_limited: separation < 10.0 * cfg.solver.atol,
        status: sol.status,
        message: sol.message,
    })
}

/// Separation at `t_star` between the cutoff models with coefficients 1 and
/// `1 + eps`, for each level.
pub fn chaos_growth(cfg: &ChaosConfig, workers: usize) -> Result<Vec<ChaosPoint>, LabError> {
    if !(cfg.eps >= 0.0 && cfg.eps.is_finite()) {
        return Err(LabError::Invalid(format!("eps must be non-negative, got {}", cfg.eps)));
    }
    if !(cfg.t_star > 0.0) {
        return Err(LabError::Invalid("probe time must be positive".into()));
    }
    cfg.solver.validate()?;
    par_map(workers, &cfg.levels, |&level| separation_at(cfg, level))
        .into_iter()
        .map(|r| r.map_err(LabError::WorkerPanic).and_then(|x| x))
        .collect()
}

/// Energy norm of the difference of two amplitude lists.
pub fn separation_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
