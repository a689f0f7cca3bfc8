//! Deviations from the limiting solution and their geometric scaling in the
//! level.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use shellrg_core::Trajectory;

use crate::error::LabError;
use crate::family::Reference;

/// `u_n^(N)(t) - u_n^ref(t)` for one shell and one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeviationSeries {
    pub shell: usize,
    pub level: usize,
    /// Regularization family the level belongs to.
    pub label: String,
    pub reference_level: usize,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl DeviationSeries {
    /// Divides by `rho^level`.
    pub fn rescaled(&self, rho: f64) -> DeviationSeries {
        let factor = rho.powi(self.level as i32);
        DeviationSeries {
            values: self.values.iter().map(|v| v / factor).collect(),
            ..self.clone()
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `sup_t |self - other|`; the two must share sample times.
    pub fn sup_distance(&self, other: &DeviationSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Samples every run against the reference at the shared `times`.
pub fn deviations(
    runs: &[(usize, &Trajectory)],
    label: &str,
    reference: &Reference,
    shells: &[usize],
    times: &[f64],
) -> Result<Vec<DeviationSeries>, LabError> {
    let base = &reference.trajectory;
    let mut out = Vec::with_capacity(runs.len() * shells.len());
    for &(level, traj) in runs {
        if traj.problem.model != base.problem.model {
            return Err(LabError::Provenance(format!(
                "level {level} uses model {} but the reference uses {}",
                traj.problem.model.name(),
                base.problem.model.name()
            )));
        }
        if traj.problem.bc.label != base.problem.bc.label {
            return Err(LabError::Provenance(format!(
                "level {level} uses boundary {} but the reference uses {}",
                traj.problem.bc.label, base.problem.bc.label
            )));
        }
        let mut samples = Vec::with_capacity(times.len());
        for &t in times {
            samples.push((traj.sample(t)?, base.sample(t)?));
        }
        for &shell in shells {
            let values = samples
                .iter()
                .map(|(run, limit)| run.amplitude(shell) - limit.amplitude(shell))
                .collect();
            out.push(DeviationSeries {
                shell,
                level,
                label: label.to_string(),
                reference_level: reference.level,
                times: times.to_vec(),
                values,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenvalueEstimate {
    pub rho: f64,
    /// Median absolute deviation of all ratios around `rho`.
    pub dispersion: f64,
    /// `(N, median of delta^(N+1) / delta^(N), probes used)`.
    pub per_level: Vec<(usize, f64, usize)>,
    pub probes_used: usize,
    pub probes_discarded: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median over probes of `delta^(N+1) / delta^(N)`. Probes where either
/// value is below `100 atol` are discarded.
pub fn estimate_eigenvalue(series: &[DeviationSeries], atol: f64) -> Result<EigenvalueEstimate, LabError> {
    let mut sorted: Vec<&DeviationSeries> = series.iter().collect();
    sorted.sort_by_key(|s| s.level);
    if sorted.len() < 3 {
        return Err(LabError::TooFewLevels {
            needed: 3,
            got: sorted.len(),
        });
    }
    for w in sorted.windows(2) {
        if w[1].level != w[0].level + 1 {
            return Err(LabError::Invalid(format!(
                "levels {} and {} are not consecutive",
                w[0].level, w[1].level
            )));
        }
        if w[1].shell != w[0].shell || w[1].times != w[0].times {
            return Err(LabError::Provenance("series differ in shell or sample times".into()));
        }
    }
    let floor = 100.0 * atol;
    let mut all = Vec::new();
    let mut per_level = Vec::new();
    let mut discarded = 0;
    for w in sorted.windows(2) {
        let mut ratios: Vec<f64> = Vec::new();
        for (a, b) in w[0].values.iter().zip(&w[1].values) {
            if a.norm() < floor || b.norm() < floor {
                discarded += 1;
            } else {
                ratios.push((b / a).re);
            }
        }
        if !ratios.is_empty() {
            all.extend_from_slice(&ratios);
            let count = ratios.len();
            per_level.push((w[0].level, median(&mut ratios), count));
        }
    }
    if all.is_empty() {
        return Err(LabError::NoUsableProbes { floor });
    }
    let rho = median(&mut all.clone());
    let mut spread: Vec<f64> = all.iter().map(|r| (r - rho).abs()).collect();
    Ok(EigenvalueEstimate {
        rho,
        dispersion: median(&mut spread),
        per_level,
        probes_used: all.len(),
        probes_discarded: discarded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrefactorFit {
    pub label: String,
    /// Prefactor relative to the first family.
    pub c: f64,
    /// `||y - c x|| / ||y||` over all matched samples.
    pub relative_residual: f64,
    pub levels: Vec<usize>,
}

/// Least-squares prefactors of each family's `delta / rho^N` against the
/// first family's, which is normalized to `c = 1`. Series are matched by
/// `(level, shell)`.
pub fn fit_prefactors(groups: &[(String, Vec<DeviationSeries>)], rho: f64) -> Result<Vec<PrefactorFit>, LabError> {
    let Some((_, base)) = groups.first() else {
        return Err(LabError::Invalid("no deviation groups".into()));
    };
    let mut out = Vec::with_capacity(groups.len());
    for (label, group) in groups {
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        let mut pairs = Vec::new();
        let mut levels = Vec::new();
        for s in group {
            let Some(b) = base.iter().find(|b| b.level == s.level && b.shell == s.shell) else {
                continue;
            };
            if b.times != s.times {
                return Err(LabError::Provenance(format!("{label}: sample times differ at level {}", s.level)));
            }
            let x = b.rescaled(rho);
            let y = s.rescaled(rho);
            for (a, c) in x.values.iter().zip(&y.values) {
                xy += (a.conj() * c).re;
                xx += a.norm_sqr();
                yy += c.norm_sqr();
                pairs.push((*a, *c));
            }
            if !levels.contains(&s.level) {
                levels.push(s.level);
            }
        }
        if !(xx > 1e-300) || pairs.is_empty() {
            return Err(LabError::DegenerateShape);
        }
        let c = xy / xx;
        let resid: f64 = pairs.iter().map(|(a, b)| (b - a * c).norm_sqr()).sum();
        levels.sort_unstable();
        out.push(PrefactorFit {
            label: label.clone(),
            c,
            relative_residual: if yy > 0.0 { (resid / yy).sqrt() } else { 0.0 },
            levels,
        });
    }
    Ok(out)
}
