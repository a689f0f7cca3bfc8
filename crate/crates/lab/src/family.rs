//! One-parameter families of regularizations indexed by a level `N`.

use serde::{Deserialize, Serialize};
use shellrg_core::{
    integrate, BoundarySpec, InitialData, ModelSpec, Problem, RegularizationSpec, SolverConfig,
    Trajectory,
};

use crate::error::LabError;
use crate::pool::par_map;
use crate::viscous::viscosity_for_level;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// Cutoff on shells `N+1..N+J`.
    Canonical {
        j: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        coeffs: Vec<f64>,
        #[serde(default)]
        eps: f64,
    },
    /// Auxiliary eddy viscosity anchored at shell `N`.
    Auxiliary {
        beta: f64,
        /// Overrides the default truncation.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shells: Option<usize>,
    },
    /// Viscosity `2^(-4N/3)`.
    Viscous {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shells: Option<usize>,
    },
}

impl Family {
    pub fn canonical(j: usize) -> Self {
        Family::Canonical {
            j,
            coeffs: Vec::new(),
            eps: 0.0,
        }
    }

    pub fn regularization(&self, level: usize) -> RegularizationSpec {
        match self {
            Family::Canonical { j, coeffs, eps } => RegularizationSpec::CanonicalCutoff {
                n: level,
                j: *j,
                coeffs: coeffs.clone(),
                eps: *eps,
            },
            Family::Auxiliary { beta, .. } => RegularizationSpec::Auxiliary { n: level, beta: *beta },
            Family::Viscous { .. } => RegularizationSpec::Viscous {
                nu: viscosity_for_level(level),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Canonical { j, eps, .. } if *eps != 0.0 => format!("J={j},eps={eps:e}"),
            Family::Canonical { j, .. } => format!("J={j}"),
            Family::Auxiliary { beta, .. } => format!("beta={beta}"),
            Family::Viscous { .. } => "viscous".into(),
        }
    }

    fn shells(&self) -> Option<usize> {
        match self {
            Family::Canonical { .. } => None,
            Family::Auxiliary { shells, .. } | Family::Viscous { shells } => *shells,
        }
    }
}

/// Everything shared by the runs of one experiment except the level.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub model: ModelSpec,
    pub family: Family,
    pub ic: InitialData,
    pub bc: BoundarySpec,
    pub t_end: f64,
    pub solver: SolverConfig,
}

impl RunSpec {
    pub fn problem(&self, level: usize) -> Result<Problem, LabError> {
        let reg = self.family.regularization(level);
        let problem = match self.family.shells() {
            Some(m) => Problem::with_shells(self.model, reg, self.bc.clone(), m)?,
            None => Problem::new(self.model, reg, self.bc.clone())?,
        };
        Ok(problem)
    }

    /// Integrates level `level` on `[0, t_end]`; the trajectory carries its
    /// own status.
    pub fn run(&self, level: usize) -> Result<Trajectory, LabError> {
        let problem = self.problem(level)?;
        let ic = self.ic.build(self.model, problem.shells())?;
        Ok(integrate(&problem, &ic, 0.0, self.t_end, &self.solver)?)
    }

    /// Like [`RunSpec::run`] but an early stop is an error.
    pub fn run_completed(&self, level: usize) -> Result<Trajectory, LabError> {
        let traj = self.run(level)?;
        require_completed(level, traj)
    }
}

pub(crate) fn require_completed(level: usize, traj: Trajectory) -> Result<Trajectory, LabError> {
    if traj.status.is_completed() {
        return Ok(traj);
    }
    let last_good_time = match traj.status {
        shellrg_core::Status::AbortedNonfinite { last_good_time }
        | shellrg_core::Status::AbortedBudget { last_good_time } => last_good_time,
        shellrg_core::Status::Completed => traj.t_end(),
    };
    Err(LabError::RunAborted {
        level,
        status: traj.status.name(),
        last_good_time,
        message: traj.message.clone().unwrap_or_default(),
    })
}

/// Runs every level in parallel; results come back in `levels` order.
pub fn run_levels(spec: &RunSpec, levels: &[usize], workers: usize) -> Vec<Result<Trajectory, LabError>> {
    par_map(workers, levels, |&level| spec.run(level))
        .into_iter()
        .map(|r| r.map_err(LabError::WorkerPanic).and_then(|x| x))
        .collect()
}

/// High-level run standing in for the limiting solution.
#[derive(Debug, Clone)]
pub struct Reference {
    pub level: usize,
    pub family: Family,
    pub trajectory: Trajectory,
}

/// Runs the reference level after checking it lies beyond every level that
/// will be compared against it.
pub fn limit_reference(spec: &RunSpec, reference_level: usize, consumer_levels: &[usize]) -> Result<Reference, LabError> {
    if let Some(&consumer) = consumer_levels.iter().max() {
        if reference_level <= consumer {
            return Err(LabError::ReferenceLevel {
                reference: reference_level,
                consumer,
            });
        }
    }
    let trajectory = spec.run_completed(reference_level)?;
    Ok(Reference {
        level: reference_level,
        family: spec.family.clone(),
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use shellrg_core::{builtin_bc, BuiltinIc};

    fn spec() -> RunSpec {
        RunSpec {
            model: ModelSpec::DYADIC,
            family: Family::canonical(1),
            ic: InitialData::Builtin(BuiltinIc::Ic2),
            bc: builtin_bc("dyadic-default").unwrap(),
            t_end: 0.5,
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn reference_must_lie_beyond_consumers() {
        let err = limit_reference(&spec(), 10, &[8, 10]).unwrap_err();
        assert_eq!(err, LabError::ReferenceLevel { reference: 10, consumer: 10 });
        let ok = limit_reference(&spec(), 11, &[8, 10]).unwrap();
        assert_eq!(ok.level, 11);
        assert_eq!(ok.trajectory.shells(), 12);
    }

    #[test]
    fn levels_keep_order() {
        let out = run_levels(&spec(), &[5, 2, 7], 3);
        let shells: Vec<usize> = out.iter().map(|r| r.as_ref().unwrap().shells()).collect();
        assert_eq!(shells, vec![6, 3, 8]);
    }

    #[test]
    fn aborted_run_is_reported() {
        let mut s = spec();
        s.solver.max_steps = 3;
        assert!(matches!(s.run_completed(8), Err(LabError::RunAborted { level: 8, .. })));
    }

    #[test]
    fn family_regularizations() {
        assert_eq!(Family::canonical(2).regularization(4).default_truncation(), 6);
        let visc = Family::Viscous { shells: None }.regularization(30);
        assert_eq!(visc.level(), 30);
        let aux = Family::Auxiliary { beta: 1.0, shells: Some(40) };
        let mut s = spec();
        s.family = aux;
        assert_eq!(s.problem(15).unwrap().shells(), 40);
    }
}
