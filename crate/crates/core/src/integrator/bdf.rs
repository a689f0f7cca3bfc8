//! Variable-order numerical differentiation formulas (orders 1..=5) in the
//! backward-difference form of Shampine and Reichelt, with a simplified
//! Newton iteration on a banded iteration matrix.

use super::dopri::next_up;
use super::trajectory::Interpolant;
use super::{initial_step, rms, StepFailure, Stepper};
use crate::linalg::{BandMatrix, LuFactors};
use crate::system::OdeSystem;

const MAX_ORDER: usize = 5;
const NEWTON_MAXITER: usize = 4;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const KAPPA: [f64; 6] = [0.0, -0.1850, -1.0 / 9.0, -0.0823, -0.0415, 0.0];

struct Coefficients {
    gamma: [f64; 6],
    alpha: [f64; 6],
    error_const: [f64; 6],
}

fn coefficients() -> Coefficients {
    let mut gamma = [0.0; 6];
    for k in 1..6 {
        gamma[k] = gamma[k - 1] + 1.0 / k as f64;
    }
    let mut alpha = [0.0; 6];
    let mut error_const = [0.0; 6];
    for k in 0..6 {
        alpha[k] = (1.0 - KAPPA[k]) * gamma[k];
        error_const[k] = KAPPA[k] * gamma[k] + 1.0 / (k as f64 + 1.0);
    }
    Coefficients {
        gamma,
        alpha,
        error_const,
    }
}

/// Matrix that rescales the difference table for a step ratio `factor`.
fn compute_r(order: usize, factor: f64) -> Vec<Vec<f64>> {
    let size = order + 1;
    let mut m = vec![vec![0.0; size]; size];
    for j in 0..size {
        m[0][j] = 1.0;
    }
    for i in 1..size {
        for j in 1..size {
            m[i][j] = (i as f64 - 1.0 - factor * j as f64) / i as f64;
        }
    }
    for i in 1..size {
        for j in 0..size {
            m[i][j] *= m[i - 1][j];
        }
    }
    m
}

fn change_d(d: &mut [Vec<f64>], order: usize, factor: f64) {
    let r = compute_r(order, factor);
    let u = compute_r(order, 1.0);
    let size = order + 1;
    let mut ru = vec![vec![0.0; size]; size];
    for i in 0..size {
        for j in 0..size {
            ru[i][j] = (0..size).map(|k| r[i][k] * u[k][j]).sum();
        }
    }
    let n = d[0].len();
    let mut out = vec![vec![0.0; n]; size];
    for (j, row) in out.iter_mut().enumerate() {
        for (i, ru_row) in ru.iter().enumerate() {
            let w = ru_row[j];
            if w != 0.0 {
                for (o, x) in row.iter_mut().zip(&d[i]) {
                    *o += w * x;
                }
            }
        }
    }
    for (j, row) in out.into_iter().enumerate() {
        d[j] = row;
    }
}

pub(crate) struct Bdf {
    t: f64,
    y: Vec<f64>,
    h_abs: f64,
    d: Vec<Vec<f64>>,
    order: usize,
    n_equal_steps: usize,
    jac: BandMatrix,
    lu: Option<LuFactors>,
    jac_current: bool,
    newton_tol: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
    coeffs: Coefficients,
    pub(crate) rhs_evals: usize,
    pub(crate) jac_evals: usize,
    pub(crate) lu_decomps: usize,
    pub(crate) rejected: usize,
}

impl Bdf {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new<S: OdeSystem>(
        sys: &S,
        t0: f64,
        y0: Vec<f64>,
        t_end: f64,
        rtol: f64,
        atol: f64,
        max_step: f64,
        first_step: Option<f64>,
    ) -> Self {
        let n = y0.len();
        let mut f = vec![0.0; n];
        sys.rhs(t0, &y0, &mut f);
        let mut rhs_evals = 1;
        let h_abs = match first_step {
            Some(h) => h.min(t_end - t0),
            None => {
                rhs_evals += 1;
                initial_step(sys, t0, &y0, &f, t_end, max_step, 1, rtol, atol)
            }
        };
        let (kl, ku) = sys.bandwidth();
        let mut jac = BandMatrix::zeros(n, kl, ku);
        sys.jacobian(t0, &y0, &mut jac);
        let mut d = vec![vec![0.0; n]; MAX_ORDER + 3];
        d[0].copy_from_slice(&y0);
        for (di, fi) in d[1].iter_mut().zip(&f) {
            *di = fi * h_abs;
        }
        Bdf {
            t: t0,
            y: y0,
            h_abs,
            d,
            order: 1,
            n_equal_steps: 0,
            jac,
            lu: None,
            jac_current: false,
            newton_tol: (10.0 * f64::EPSILON / rtol).max(0.03f64.min(rtol.sqrt())),
            rtol,
            atol,
            max_step,
            coeffs: coefficients(),
            rhs_evals,
            jac_evals: 1,
            lu_decomps: 0,
            rejected: 0,
        }
    }

    fn factor(&mut self, c: f64) -> bool {
        self.lu_decomps += 1;
        match self.jac.shifted(1.0, c).lu() {
            Ok(lu) => {
                self.lu = Some(lu);
                true
            }
            Err(_) => {
                self.lu = None;
                false
            }
        }
    }

    /// Simplified Newton iteration; returns `(converged, iterations, y, d)`.
    fn solve_system<S: OdeSystem>(
        &mut self,
        sys: &S,
        t_new: f64,
        y_predict: &[f64],
        c: f64,
        psi: &[f64],
        scale: &[f64],
    ) -> (bool, usize, Vec<f64>, Vec<f64>) {
        let n = y_predict.len();
        let mut y = y_predict.to_vec();
        let mut d = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut dy = vec![0.0; n];
        let mut scaled = vec![0.0; n];
        let mut dy_norm_old: Option<f64> = None;
        let mut converged = false;
        let mut iterations = 0;
        let lu = self.lu.take().expect("factorized iteration matrix");
        for k in 0..NEWTON_MAXITER {
            iterations = k + 1;
            sys.rhs(t_new, &y, &mut f);
            self.rhs_evals += 1;
            if f.iter().any(|v| !v.is_finite()) {
                break;
            }
            for i in 0..n {
                dy[i] = c * f[i] - psi[i] - d[i];
            }
            lu.solve(&mut dy);
            for i in 0..n {
                scaled[i] = dy[i] / scale[i];
            }
            let dy_norm = rms(&scaled);
            if !dy_norm.is_finite() {
                break;
            }
            let rate = dy_norm_old.map(|old| dy_norm / old);
            if let Some(rate) = rate {
                if rate >= 1.0
                    || rate.powi((NEWTON_MAXITER - k) as i32) / (1.0 - rate) * dy_norm > self.newton_tol
                {
                    break;
                }
            }
            for i in 0..n {
                y[i] += dy[i];
                d[i] += dy[i];
            }
            if dy_norm == 0.0
                || rate.is_some_and(|rate| rate / (1.0 - rate) * dy_norm < self.newton_tol)
            {
                converged = true;
                break;
            }
            dy_norm_old = Some(dy_norm);
        }
        self.lu = Some(lu);
        (converged, iterations, y, d)
    }
}

impl<S: OdeSystem> Stepper<S> for Bdf {
    fn time(&self) -> f64 {
        self.t
    }

    fn state(&self) -> &[f64] {
        &self.y
    }

    fn step(&mut self, sys: &S, t_end: f64) -> Result<Interpolant, StepFailure> {
        let n = self.y.len();
        let t = self.t;
        let min_step = 10.0 * (next_up(t) - t);
        let mut h_abs;
        if self.h_abs > self.max_step {
            h_abs = self.max_step;
            change_d(&mut self.d, self.order, self.max_step / self.h_abs);
            self.n_equal_steps = 0;
        } else if self.h_abs < min_step {
            h_abs = min_step;
            change_d(&mut self.d, self.order, min_step / self.h_abs);
            self.n_equal_steps = 0;
        } else {
            h_abs = self.h_abs;
        }
        let order = self.order;
        let (y_new, d_corr, error_norm, safety, scale, t_new) = loop {
            if h_abs < min_step {
                return Err(StepFailure::StepTooSmall);
            }
            let mut t_new = t + h_abs;
            if t_new > t_end {
                t_new = t_end;
                change_d(&mut self.d, order, (t_new - t) / h_abs);
                self.n_equal_steps = 0;
                self.lu = None;
            }
            let h = t_new - t;
            h_abs = h;
            let mut y_predict = vec![0.0; n];
            for row in &self.d[..=order] {
                for (p, x) in y_predict.iter_mut().zip(row) {
                    *p += x;
                }
            }
            let scale: Vec<f64> = y_predict.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
            let mut psi = vec![0.0; n];
            for j in 1..=order {
                let g = self.coeffs.gamma[j];
                for (p, x) in psi.iter_mut().zip(&self.d[j]) {
                    *p += g * x;
                }
            }
            let alpha = self.coeffs.alpha[order];
            psi.iter_mut().for_each(|p| *p /= alpha);
            let c = h / alpha;

            let mut outcome = None;
            loop {
                if self.lu.is_none() && !self.factor(c) {
                    if self.jac_current {
                        break;
                    }
                    self.refresh_jacobian(sys, t_new, &y_predict);
                    continue;
                }
                let (converged, iterations, y, d) =
                    self.solve_system(sys, t_new, &y_predict, c, &psi, &scale);
                if converged {
                    outcome = Some((iterations, y, d));
                    break;
                }
                if self.jac_current {
                    break;
                }
                self.refresh_jacobian(sys, t_new, &y_predict);
            }
            let Some((iterations, y_new, d_corr)) = outcome else {
                self.rejected += 1;
                h_abs *= 0.5;
                change_d(&mut self.d, order, 0.5);
                self.n_equal_steps = 0;
                self.lu = None;
                continue;
            };
            let safety = 0.9 * (2 * NEWTON_MAXITER + 1) as f64 / (2 * NEWTON_MAXITER + iterations) as f64;
            let scale: Vec<f64> = y_new.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
            let err: Vec<f64> = d_corr
                .iter()
                .zip(&scale)
                .map(|(di, s)| self.coeffs.error_const[order] * di / s)
                .collect();
            let error_norm = rms(&err);
            if error_norm > 1.0 || !error_norm.is_finite() {
                self.rejected += 1;
                let factor = if error_norm.is_finite() {
                    MIN_FACTOR.max(safety * error_norm.powf(-1.0 / (order as f64 + 1.0)))
                } else {
                    MIN_FACTOR
                };
                h_abs *= factor;
                change_d(&mut self.d, order, factor);
                self.n_equal_steps = 0;
                continue;
            }
            break (y_new, d_corr, error_norm, safety, scale, t_new);
        };

        self.n_equal_steps += 1;
        self.t = t_new;
        self.y = y_new;
        self.h_abs = h_abs;
        for i in 0..n {
            self.d[order + 2][i] = d_corr[i] - self.d[order + 1][i];
            self.d[order + 1][i] = d_corr[i];
        }
        for j in (0..=order).rev() {
            let (lo, hi) = self.d.split_at_mut(j + 1);
            for (a, b) in lo[j].iter_mut().zip(&hi[0]) {
                *a += b;
            }
        }

        if self.n_equal_steps >= order + 1 {
            let norm_of = |row: &[f64], k: usize| -> f64 {
                let v: Vec<f64> = row
                    .iter()
                    .zip(&scale)
                    .map(|(x, s)| self.coeffs.error_const[k] * x / s)
                    .collect();
                rms(&v)
            };
            let error_m = if order > 1 {
                norm_of(&self.d[order], order - 1)
            } else {
                f64::INFINITY
            };
            let error_p = if order < MAX_ORDER {
                norm_of(&self.d[order + 2], order + 1)
            } else {
                f64::INFINITY
            };
            let norms = [error_m, error_norm, error_p];
            let mut best = 0;
            let mut factors = [0.0; 3];
            for (i, e) in norms.iter().enumerate() {
                let p = -1.0 / (order + i) as f64;
                factors[i] = if *e == 0.0 { f64::INFINITY } else { e.powf(p) };
                if factors[i] > factors[best] {
                    best = i;
                }
            }
            let new_order = order + best - 1;
            let factor = MAX_FACTOR.min(safety * factors[best]);
            self.order = new_order;
            self.h_abs *= factor;
            change_d(&mut self.d, new_order, factor);
            self.n_equal_steps = 0;
            self.lu = None;
        }
        // the Jacobian gets refreshed only after a Newton failure
        self.jac_current = false;

        let h = self.h_abs;
        let mut diffs = Vec::with_capacity(self.order * n);
        for row in &self.d[1..=self.order] {
            diffs.extend_from_slice(row);
        }
        Ok(Interpolant::Differences {
            h,
            order: self.order,
            diffs,
        })
    }
}

impl Bdf {
    fn refresh_jacobian<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[f64]) {
        self.jac.clear();
        sys.jacobian(t, y, &mut self.jac);
        self.jac_evals += 1;
        self.jac_current = true;
        self.lu = None;
    }
}
