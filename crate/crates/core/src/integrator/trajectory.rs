use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IntegrateError;
use crate::boundary::BoundaryTable;
use crate::model::ScalarKind;
use crate::state::{slots, ShellState};
use crate::system::Problem;

/// Per-step interpolation data between stored states `y_k` and `y_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Interpolant {
    /// `y(t) = y_k + h Q [x, x^2, x^3, x^4]`, `x = (t - t_k) / h`; `q` is
    /// stored component-major.
    Quartic { q: Vec<f64> },
    /// Backward-difference polynomial anchored at `t_{k+1}`: `y_{k+1}` plus
    /// `sum_j D_j prod_{i<j} (t - t_{k+1} + i h) / ((i + 1) h)`.
    Differences { h: f64, order: usize, diffs: Vec<f64> },
}

impl Interpolant {
    fn eval(
        &self,
        (t0, t1): (f64, f64),
        (y0, y1): (&[f64], &[f64]),
        t: f64,
        out: &mut [f64],
        mut dout: Option<&mut [f64]>,
    ) {
        let n = y0.len();
        match self {
            Interpolant::Quartic { q } => {
                let h = t1 - t0;
                let x = (t - t0) / h;
                let p = [x, x * x, x * x * x, x * x * x * x];
                let dp = [1.0, 2.0 * x, 3.0 * x * x, 4.0 * x * x * x];
                for i in 0..n {
                    let row = &q[4 * i..4 * i + 4];
                    out[i] = y0[i] + h * (0..4).map(|c| row[c] * p[c]).sum::<f64>();
                    if let Some(d) = dout.as_deref_mut() {
                        d[i] = (0..4).map(|c| row[c] * dp[c]).sum();
                    }
                }
            }
            Interpolant::Differences { h, order, diffs } => {
                let mut p = vec![0.0; *order];
                let mut dp = vec![0.0; *order];
                let (mut acc, mut dacc) = (1.0, 0.0);
                for j in 0..*order {
                    let denom = h * (j as f64 + 1.0);
                    let x = (t - (t1 - h * j as f64)) / denom;
                    dacc = dacc * x + acc / denom;
                    acc *= x;
                    p[j] = acc;
                    dp[j] = dacc;
                }
                for i in 0..n {
                    let mut v = y1[i];
                    let mut dv = 0.0;
                    for j in 0..*order {
                        let dj = diffs[j * n + i];
                        v += dj * p[j];
                        dv += dj * dp[j];
                    }
                    out[i] = v;
                    if let Some(d) = dout.as_deref_mut() {
                        d[i] = dv;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Status {
    Completed,
    AbortedNonfinite {
        #[serde(rename = "lastGoodTime")]
        last_good_time: f64,
    },
    AbortedBudget {
        #[serde(rename = "lastGoodTime")]
        last_good_time: f64,
    },
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::AbortedNonfinite { .. } => "aborted-nonfinite",
            Status::AbortedBudget { .. } => "aborted-budget",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jacobian_evals: usize,
    pub lu_decompositions: usize,
    /// Steps taken by the fifth-order implicit fallback after the stiff
    /// multistep method underflowed.
    #[serde(default)]
    pub fallback_steps: usize,
}

/// Dense-output solution of one regularized problem.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub problem: Problem,
    pub(crate) dim: usize,
    pub(crate) times: Vec<f64>,
    pub(crate) states: Vec<f64>,
    pub(crate) segments: Vec<Interpolant>,
    pub status: Status,
    pub stats: SolverStats,
    /// Why the run stopped early, if it did.
    pub message: Option<String>,
}

impl Trajectory {
    pub fn kind(&self) -> ScalarKind {
        self.problem.kind()
    }

    pub fn shells(&self) -> usize {
        self.dim / slots(self.kind())
    }

    /// Accepted step times `t_0 < t_1 < ...`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn step_count(&self) -> usize {
        self.segments.len()
    }

    pub fn stored_flat(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn stored_state(&self, k: usize) -> ShellState {
        ShellState::from_flat(self.kind(), self.stored_flat(k).to_vec())
            .expect("stored states are finite")
    }

    pub fn final_state(&self) -> ShellState {
        self.stored_state(self.times.len() - 1)
    }

    /// Segment index containing `t` and whether `t` is a stored step time.
    fn segment(&self, t: f64) -> Result<(usize, Option<usize>), IntegrateError> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(IntegrateError::OutOfRange { t, start, end });
        }
        let last_segment = self.segments.len().saturating_sub(1);
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => Ok((k.saturating_sub(1).min(last_segment), Some(k))),
            Err(p) => Ok(((p - 1).min(last_segment), None)),
        }
    }

    fn eval_flat(&self, t: f64, out: &mut [f64], dout: Option<&mut [f64]>) -> Result<(), IntegrateError> {
        let (seg, stored) = self.segment(t)?;
        if self.segments.is_empty() {
            out.copy_from_slice(self.stored_flat(0));
            if let Some(d) = dout {
                d.iter_mut().for_each(|v| *v = 0.0);
            }
            return Ok(());
        }
        let span = (self.times[seg], self.times[seg + 1]);
        let ys = (self.stored_flat(seg), self.stored_flat(seg + 1));
        self.segments[seg].eval(span, ys, t, out, dout);
        if let Some(k) = stored {
            out.copy_from_slice(self.stored_flat(k));
        }
        Ok(())
    }

    pub fn sample_flat(&self, t: f64) -> Result<Vec<f64>, IntegrateError> {
        let mut out = vec![0.0; self.dim];
        self.eval_flat(t, &mut out, None)?;
        Ok(out)
    }

    pub fn sample_derivative_flat(&self, t: f64) -> Result<Vec<f64>, IntegrateError> {
        let mut out = vec![0.0; self.dim];
        let mut dout = vec![0.0; self.dim];
        self.eval_flat(t, &mut out, Some(&mut dout))?;
        Ok(dout)
    }

    /// Interpolated state; exact stored state at accepted step times.
    pub fn sample(&self, t: f64) -> Result<ShellState, IntegrateError> {
        Ok(ShellState::from_flat(self.kind(), self.sample_flat(t)?)?)
    }

    pub fn sample_derivative(&self, t: f64) -> Result<Vec<Complex64>, IntegrateError> {
        let d = self.sample_derivative_flat(t)?;
        Ok(to_amplitudes(self.kind(), &d))
    }

    /// Amplitude of shell `n` (1-based) at time `t`.
    pub fn shell(&self, n: usize, t: f64) -> Result<Complex64, IntegrateError> {
        let flat = self.sample_flat(t)?;
        Ok(to_amplitudes(self.kind(), &flat)
            .get(n.wrapping_sub(1))
            .copied()
            .unwrap_or_default())
    }

    /// Cubic Hermite table of `scale * u_n(t)` with `refine` knots per step.
    pub fn tabulate_shell(&self, n: usize, scale: f64, refine: usize) -> Result<BoundaryTable, IntegrateError> {
        let refine = refine.max(1);
        let mut times = Vec::with_capacity(self.segments.len() * refine + 1);
        for w in self.times.windows(2) {
            for r in 0..refine {
                times.push(w[0] + (w[1] - w[0]) * r as f64 / refine as f64);
            }
        }
        times.push(self.t_end());
        let mut values = Vec::with_capacity(times.len());
        let mut slopes = Vec::with_capacity(times.len());
        let mut out = vec![0.0; self.dim];
        let mut dout = vec![0.0; self.dim];
        for &t in &times {
            self.eval_flat(t, &mut out, Some(&mut dout))?;
            values.push(to_amplitudes(self.kind(), &out)[n - 1] * scale);
            slopes.push(to_amplitudes(self.kind(), &dout)[n - 1] * scale);
        }
        Ok(BoundaryTable::new(times, values, slopes)?)
    }
}

pub(crate) fn to_amplitudes(kind: ScalarKind, flat: &[f64]) -> Vec<Complex64> {
    match kind {
        ScalarKind::Real => flat.iter().map(|&x| Complex64::from(x)).collect(),
        ScalarKind::Complex => flat
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect(),
    }
}
