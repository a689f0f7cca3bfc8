//! Random canonical cutoffs: point clouds of low-shell observables.

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use shellrg_core::{
    integrate, BoundarySpec, InitialData, ModelSpec, Problem, RegularizationSpec, SolverConfig, Status,
};

use crate::error::LabError;
use crate::pool::par_map;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub model: ModelSpec,
    pub levels: Vec<usize>,
    pub samples: usize,
    /// Inclusive range of the cutoff coefficients.
    pub coeff_range: (f64, f64),
    pub j: usize,
    pub ic: InitialData,
    pub bc: BoundarySpec,
    pub t_star: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeRecord {
    pub seed: u64,
    pub level: usize,
    pub sample: usize,
    pub coeffs: Vec<f64>,
    pub status: Status,
    /// `(u_1, u_2)` at the probe time.
    pub observables: Option<[Complex64; 2]>,
    pub endpoint: Option<Vec<Complex64>>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorCloud {
    pub records: Vec<ProbeRecord>,
}

impl AttractorCloud {
    /// `(Re u_1, Re u_2)` of the completed records at the given levels.
    pub fn points(&self, levels: &[usize]) -> Vec<[f64; 2]> {
        self.records
            .iter()
            .filter(|r| levels.contains(&r.level))
            .filter_map(|r| r.observables.map(|[a, b]| [a.re, b.re]))
            .collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ProbeRecord> {
        self.records.iter().filter(|r| r.observables.is_none())
    }
}

/// Each `(level, sample)` pair reads its own ChaCha stream, so a draw never
/// depends on scheduling or on which other pairs were requested.
pub fn draw_coefficients(seed: u64, level: usize, sample: usize, count: usize, range: (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 32) | sample as u64);
    let dist = Uniform::new_inclusive(range.0, range.1);
    (0..count).map(|_| dist.sample(&mut rng)).collect()
}

fn probe_one(cfg: &ProbeConfig, level: usize, sample: usize) -> ProbeRecord {
    let coeffs = draw_coefficients(cfg.seed, level, sample, cfg.j, cfg.coeff_range);
    let mut record = ProbeRecord {
        seed: cfg.seed,
        level,
        sample,
        coeffs: coeffs.clone(),
        status: Status::AbortedNonfinite { last_good_time: 0.0 },
        observables: None,
        endpoint: None,
        message: None,
    };
    let reg = RegularizationSpec::CanonicalCutoff {
        n: level,
        j: cfg.j,
        coeffs,
        eps: 0.0,
    };
    let outcome = Problem::new(cfg.model, reg, cfg.bc.clone())
        .map_err(LabError::from)
        .and_then(|problem| {
            let ic = cfg.ic.build(cfg.model, problem.shells())?;
            Ok(integrate(&problem, &ic, 0.0, cfg.t_star, &cfg.solver)?)
        });
    match outcome {
        Ok(traj) => {
            record.status = traj.status;
            record.message = traj.message.clone();
            if traj.status.is_completed() {
                let end = traj.final_state();
                record.observables = Some([end.amplitude(1), end.amplitude(2)]);
                record.endpoint = Some(end.amplitudes());
            }
        }
        Err(e) => record.message = Some(e.to_string()),
    }
    record
}

/// Integrates every `(level, sample)` draw to `t_star`. Aborted runs stay in
/// the cloud with their status and no observables.
pub fn attractor_probe(cfg: &ProbeConfig, workers: usize) -> Result<AttractorCloud, LabError> {
    if cfg.j == 0 || cfg.levels.is_empty() || cfg.samples == 0 {
        return Err(LabError::Invalid("probe needs J >= 1, levels and samples".into()));
    }
    let (lo, hi) = cfg.coeff_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0) {
        return Err(LabError::Invalid(format!("bad coefficient range [{lo}, {hi}]")));
    }
    if !(cfg.t_star > 0.0) {
        return Err(LabError::Invalid("probe time must be positive".into()));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .levels
        .iter()
        .flat_map(|&level| (0..cfg.samples).map(move |s| (level, s)))
        .collect();
    let records = par_map(workers, &jobs, |&(level, sample)| probe_one(cfg, level, sample))
        .into_iter()
        .zip(&jobs)
        .map(|(r, &(level, sample))| {
            r.unwrap_or_else(|panic| ProbeRecord {
                seed: cfg.seed,
                level,
                sample,
                coeffs: draw_coefficients(cfg.seed, level, sample, cfg.j, cfg.coeff_range),
                status: Status::AbortedNonfinite { last_good_time: 0.0 },
                observables: None,
                endpoint: None,
                message: Some(format!("worker panicked: {panic}")),
            })
        })
        .collect();
    Ok(AttractorCloud { records })
}

/// Symmetric Hausdorff distance between two planar point sets.
pub fn hausdorff_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let dist = |p: &[f64; 2], q: &[f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Largest pairwise distance.
pub fn diameter(points: &[[f64; 2]]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use shellrg_core::{builtin_bc, BuiltinIc};

    fn config(range: (f64, f64)) -> ProbeConfig {
        ProbeConfig {
            model: ModelSpec::GLEDZER,
            levels: vec![6, 8],
            samples: 3,
            coeff_range: range,
            j: 3,
            ic: InitialData::Builtin(BuiltinIc::Ic2),
            bc: builtin_bc("gledzer-swapped").unwrap(),
            t_star: 0.3,
            seed: 11,
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn draws_are_reproducible_and_independent() {
        let a = draw_coefficients(5, 30, 2, 3, (0.0, 3.0));
        assert_eq!(a, draw_coefficients(5, 30, 2, 3, (0.0, 3.0)));
        assert_ne!(a, draw_coefficients(5, 30, 3, 3, (0.0, 3.0)));
        assert_ne!(a, draw_coefficients(6, 30, 2, 3, (0.0, 3.0)));
        assert!(a.iter().all(|c| (0.0..=3.0).contains(c)));
    }

    #[test]
    fn same_seed_same_cloud() {
        let cfg = config((0.0, 3.0));
        let a = attractor_probe(&cfg, 1).unwrap();
        let b = attractor_probe(&cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 6);
        assert_eq!(a.points(&[6]).len(), 3);
    }

    #[test]
    fn collapsed_range_is_deterministic() {
        let cloud = attractor_probe(&config((1.0, 1.0)), 2).unwrap();
        for level in [6, 8] {
            let pts = cloud.points(&[level]);
            assert!(pts.iter().all(|p| p == &pts[0]));
        }
    }

    #[test]
    fn aborted_runs_are_kept() {
        let mut cfg = config((0.0, 3.0));
        cfg.solver.max_steps = 2;
        let cloud = attractor_probe(&cfg, 2).unwrap();
        assert_eq!(cloud.records.len(), 6);
        assert_eq!(cloud.failures().count(), 6);
        assert!(cloud.points(&[6, 8]).is_empty());
    }

    #[test]
    fn distances() {
        let a = [[0.0, 0.0], [1.0, 0.0]];
        let b = [[0.0, 0.0], [0.0, 2.0]];
        assert_eq!(hausdorff_distance(&a, &b), 2.0);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        assert!((diameter(&[[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]]) - 5.0).abs() < 1e-15);
    }
}
