//! Three-stage Radau IIA (order 5) with the Hairer-Wanner transformation
//! of the collocation system into one real and one complex banded solve.
//!
//! The stiff driver falls back to it when the multistep method's step size
//! underflows: near a singular event the multistep order collapses to 1 and
//! tight tolerances then ask for steps at the resolution of `t` itself,
//! while this fixed fifth-order scheme keeps steps several orders larger.

use num_complex::Complex64;

use super::dopri::next_up;
use super::trajectory::Interpolant;
use super::{initial_step, rms, StepFailure, Stepper};
use crate::linalg::{BandMatrix, LuFactors};
use crate::system::OdeSystem;

const NEWTON_MAXITER: usize = 6;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

const T: [[f64; 3]; 3] = [
    [0.094_438_762_488_975_24, -0.141_255_295_020_954_21, 0.030_029_194_105_147_42],
    [0.250_213_122_965_333_32, 0.204_129_352_293_799_94, -0.382_942_112_757_261_92],
    [1.0, 1.0, 0.0],
];
const TI: [[f64; 3]; 3] = [
    [4.178_718_591_551_904_28, 0.327_682_820_761_062_37, 0.523_376_445_499_449_51],
    [-4.178_718_591_551_904_28, -0.327_682_820_761_062_37, 0.476_623_554_500_550_44],
    [0.502_872_634_945_786_82, -2.571_926_949_855_605_22, 0.596_039_204_828_224_92],
];

struct Tableau {
    c: [f64; 3],
    e: [f64; 3],
    mu_real: f64,
    mu_complex: Complex64,
    p: [[f64; 3]; 3],
}

fn tableau() -> Tableau {
    let s6 = 6f64.sqrt();
    Tableau {
        c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
        e: [(-13.0 - 7.0 * s6) / 3.0, (-13.0 + 7.0 * s6) / 3.0, -1.0 / 3.0],
        mu_real: 3.0 + 3f64.powf(2.0 / 3.0) - 3f64.powf(1.0 / 3.0),
        mu_complex: Complex64::new(
            3.0 + 0.5 * (3f64.powf(1.0 / 3.0) - 3f64.powf(2.0 / 3.0)),
            -0.5 * (3f64.powf(5.0 / 6.0) + 3f64.powf(7.0 / 6.0)),
        ),
        p: [
            [13.0 / 3.0 + 7.0 * s6 / 3.0, -23.0 / 3.0 - 22.0 * s6 / 3.0, 10.0 / 3.0 + 5.0 * s6],
            [13.0 / 3.0 - 7.0 * s6 / 3.0, -23.0 / 3.0 + 22.0 * s6 / 3.0, 10.0 / 3.0 - 5.0 * s6],
            [1.0 / 3.0, -8.0 / 3.0, 10.0 / 3.0],
        ],
    }
}

/// `mu I - J` for complex `mu`, stored as a real matrix of twice the size
/// with real and imaginary parts interleaved.
fn complex_shift(jac: &BandMatrix, mu: Complex64) -> BandMatrix {
    let n = jac.dim();
    let (kl, ku) = (jac.lower(), jac.upper());
    let mut out = BandMatrix::zeros(2 * n, 2 * kl + 1, 2 * ku + 1);
    for i in 0..n {
        for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
            let re = if i == j { mu.re } else { 0.0 } - jac.get(i, j);
            out.set(2 * i, 2 * j, re);
            out.set(2 * i + 1, 2 * j + 1, re);
        }
        out.set(2 * i, 2 * i + 1, -mu.im);
        out.set(2 * i + 1, 2 * i, mu.im);
    }
    out
}

/// Collocation polynomial of the last accepted step, used to predict the
/// stages of the next one.
struct LastStep {
    t_old: f64,
    h: f64,
    y_old: Vec<f64>,
    /// `q[k][i]` multiplies `x^(k+1)`.
    q: [Vec<f64>; 3],
}

impl LastStep {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let x = (t - self.t_old) / self.h;
        let p = [x, x * x, x * x * x];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.y_old[i] + (0..3).map(|k| self.q[k][i] * p[k]).sum::<f64>();
        }
    }
}

pub(crate) struct Radau {
    t: f64,
    y: Vec<f64>,
    f: Vec<f64>,
    h_abs: f64,
    h_abs_old: Option<f64>,
    error_norm_old: Option<f64>,
    jac: BandMatrix,
    lu_real: Option<LuFactors>,
    lu_complex: Option<LuFactors>,
    jac_current: bool,
    newton_tol: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
    tab: Tableau,
    last: Option<LastStep>,
    pub(crate) rhs_evals: usize,
    pub(crate) jac_evals: usize,
    pub(crate) lu_decomps: usize,
    pub(crate) rejected: usize,
}

fn predict_factor(h_abs: f64, h_abs_old: Option<f64>, error_norm: f64, error_norm_old: Option<f64>) -> f64 {
    let multiplier = match (h_abs_old, error_norm_old) {
        (Some(h_old), Some(e_old)) if error_norm != 0.0 => h_abs / h_old * (e_old / error_norm).powf(0.25),
        _ => 1.0,
    };
    if error_norm == 0.0 {
        f64::INFINITY
    } else {
        multiplier.min(1.0) * error_norm.powf(-0.25)
    }
}

impl Radau {
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
                initial_step(sys, t0, &y0, &f, t_end, max_step, 3, rtol, atol)
            }
        };
        let (kl, ku) = sys.bandwidth();
        let mut jac = BandMatrix::zeros(n, kl, ku);
        sys.jacobian(t0, &y0, &mut jac);
        Radau {
            t: t0,
            y: y0,
            f,
            h_abs,
            h_abs_old: None,
            error_norm_old: None,
            jac,
            lu_real: None,
            lu_complex: None,
            jac_current: true,
            newton_tol: (10.0 * f64::EPSILON / rtol).max(0.03f64.min(rtol.sqrt())),
            rtol,
            atol,
            max_step,
            tab: tableau(),
            last: None,
            rhs_evals,
            jac_evals: 1,
            lu_decomps: 0,
            rejected: 0,
        }
    }

    fn factor(&mut self, h: f64) -> bool {
        self.lu_decomps += 2;
        let real = self.jac.shifted(self.tab.mu_real / h, 1.0).lu();
        let complex = complex_shift(&self.jac, self.tab.mu_complex / h).lu();
        match (real, complex) {
            (Ok(r), Ok(c)) => {
                self.lu_real = Some(r);
                self.lu_complex = Some(c);
                true
            }
            _ => {
                self.lu_real = None;
                self.lu_complex = None;
                false
            }
        }
    }

    fn refresh_jacobian<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[f64]) {
        self.jac.clear();
        sys.jacobian(t, y, &mut self.jac);
        self.jac_evals += 1;
        self.jac_current = true;
        self.lu_real = None;
        self.lu_complex = None;
    }

    /// Simplified Newton iteration on the transformed stage increments;
    /// returns `(converged, iterations, Z, rate)`.
    fn solve_collocation<S: OdeSystem>(
        &mut self,
        sys: &S,
        h: f64,
        z0: [Vec<f64>; 3],
        scale: &[f64],
    ) -> (bool, usize, [Vec<f64>; 3], f64) {
        let n = self.y.len();
        let lu_real = self.lu_real.as_ref().expect("factorized real matrix");
        let lu_complex = self.lu_complex.as_ref().expect("factorized complex matrix");
        let m_real = self.tab.mu_real / h;
        let m_complex = self.tab.mu_complex / h;
        let mut w: [Vec<f64>; 3] = std::array::from_fn(|r| {
            (0..n).map(|i| (0..3).map(|k| TI[r][k] * z0[k][i]).sum()).collect()
        });
        let mut z = z0;
        let mut f: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        let mut stage = vec![0.0; n];
        let mut dw_real = vec![0.0; n];
        let mut dw_complex = vec![0.0; 2 * n];
        let mut scaled = vec![0.0; 3 * n];
        let mut dw_norm_old: Option<f64> = None;
        let mut rate = f64::NAN;
        let mut iterations = 0;
        for k in 0..NEWTON_MAXITER {
            iterations = k + 1;
            for s in 0..3 {
                for i in 0..n {
                    stage[i] = self.y[i] + z[s][i];
                }
                sys.rhs(self.t + h * self.tab.c[s], &stage, &mut f[s]);
                self.rhs_evals += 1;
            }
            if f.iter().any(|row| row.iter().any(|v| !v.is_finite())) {
                return (false, iterations, z, rate);
            }
            for i in 0..n {
                let fr: f64 = (0..3).map(|s| TI[0][s] * f[s][i]).sum();
                let fc = Complex64::new(
                    (0..3).map(|s| TI[1][s] * f[s][i]).sum(),
                    (0..3).map(|s| TI[2][s] * f[s][i]).sum(),
                );
                dw_real[i] = fr - m_real * w[0][i];
                let rhs = fc - m_complex * Complex64::new(w[1][i], w[2][i]);
                dw_complex[2 * i] = rhs.re;
                dw_complex[2 * i + 1] = rhs.im;
            }
            lu_real.solve(&mut dw_real);
            lu_complex.solve(&mut dw_complex);
            for i in 0..n {
                scaled[i] = dw_real[i] / scale[i];
                scaled[n + i] = dw_complex[2 * i] / scale[i];
                scaled[2 * n + i] = dw_complex[2 * i + 1] / scale[i];
            }
            let dw_norm = rms(&scaled);
            if !dw_norm.is_finite() {
                return (false, iterations, z, rate);
            }
            if let Some(old) = dw_norm_old {
                rate = dw_norm / old;
                if rate >= 1.0
                    || rate.powi((NEWTON_MAXITER - k) as i32) / (1.0 - rate) * dw_norm > self.newton_tol
                {
                    return (false, iterations, z, rate);
                }
            }
            for i in 0..n {
                w[0][i] += dw_real[i];
                w[1][i] += dw_complex[2 * i];
                w[2][i] += dw_complex[2 * i + 1];
            }
            for (s, row) in z.iter_mut().enumerate() {
                for i in 0..n {
                    row[i] = (0..3).map(|r| T[s][r] * w[r][i]).sum();
                }
            }
            if dw_norm == 0.0 || (dw_norm_old.is_some() && rate / (1.0 - rate) * dw_norm < self.newton_tol) {
                return (true, iterations, z, rate);
            }
            dw_norm_old = Some(dw_norm);
        }
        (false, iterations, z, rate)
    }
}

impl<S: OdeSystem> Stepper<S> for Radau {
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
        let (mut h_abs, h_abs_old, error_norm_old) = if self.h_abs > self.max_step {
            (self.max_step, None, None)
        } else if self.h_abs < min_step {
            (min_step, None, None)
        } else {
            (self.h_abs, self.h_abs_old, self.error_norm_old)
        };
        let mut rejected = false;
        let (h, t_new, z, error_norm, safety, iterations, rate) = loop {
            if h_abs < min_step {
                return Err(StepFailure::StepTooSmall);
            }
            let t_new = (t + h_abs).min(t_end);
            let h = t_new - t;
            h_abs = h;
            let z0: [Vec<f64>; 3] = match &self.last {
                None => std::array::from_fn(|_| vec![0.0; n]),
                Some(last) => std::array::from_fn(|s| {
                    let mut row = vec![0.0; n];
                    last.eval(t + h * self.tab.c[s], &mut row);
                    row.iter_mut().zip(&self.y).for_each(|(r, y)| *r -= y);
                    row
                }),
            };
            let scale: Vec<f64> = self.y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();

            let mut outcome = None;
            loop {
                if (self.lu_real.is_none() || self.lu_complex.is_none()) && !self.factor(h) {
                    if self.jac_current {
                        break;
                    }
                    let y = self.y.clone();
                    self.refresh_jacobian(sys, t, &y);
                    continue;
                }
                let (converged, iterations, z, rate) = self.solve_collocation(sys, h, z0.clone(), &scale);
                if converged {
                    outcome = Some((iterations, z, rate));
                    break;
                }
                if self.jac_current {
                    break;
                }
                let y = self.y.clone();
                self.refresh_jacobian(sys, t, &y);
            }
            let Some((iterations, z, rate)) = outcome else {
                self.rejected += 1;
                h_abs *= 0.5;
                self.lu_real = None;
                self.lu_complex = None;
                continue;
            };

            let y_new: Vec<f64> = self.y.iter().zip(&z[2]).map(|(y, dz)| y + dz).collect();
            let ze: Vec<f64> = (0..n)
                .map(|i| (0..3).map(|s| z[s][i] * self.tab.e[s]).sum::<f64>() / h)
                .collect();
            let lu_real = self.lu_real.as_ref().expect("factorized real matrix");
            let mut error: Vec<f64> = self.f.iter().zip(&ze).map(|(f, e)| f + e).collect();
            lu_real.solve(&mut error);
            let scale: Vec<f64> = self
                .y
                .iter()
                .zip(&y_new)
                .map(|(a, b)| self.atol + self.rtol * a.abs().max(b.abs()))
                .collect();
            let norm_of = |err: &[f64]| rms(&err.iter().zip(&scale).map(|(e, s)| e / s).collect::<Vec<_>>());
            let mut error_norm = norm_of(&error);
            let safety = 0.9 * (2 * NEWTON_MAXITER + 1) as f64 / (2 * NEWTON_MAXITER + iterations) as f64;
            if rejected && error_norm > 1.0 {
                let probe: Vec<f64> = self.y.iter().zip(&error).map(|(y, e)| y + e).collect();
                let mut refined = vec![0.0; n];
                sys.rhs(t, &probe, &mut refined);
                self.rhs_evals += 1;
                refined.iter_mut().zip(&ze).for_each(|(r, e)| *r += e);
                lu_real.solve(&mut refined);
                error = refined;
                error_norm = norm_of(&error);
            }
            if error_norm > 1.0 || !error_norm.is_finite() {
                self.rejected += 1;
                let factor = if error_norm.is_finite() {
                    predict_factor(h_abs, h_abs_old, error_norm, error_norm_old)
                } else {
                    0.0
                };
                h_abs *= MIN_FACTOR.max(safety * factor);
                self.lu_real = None;
                self.lu_complex = None;
                rejected = true;
                continue;
            }
            break (h, t_new, z, error_norm, safety, iterations, rate);
        };

        let recompute_jac = iterations > 2 && rate > 1e-3;
        let mut factor = MAX_FACTOR.min(safety * predict_factor(h_abs, h_abs_old, error_norm, error_norm_old));
        if !recompute_jac && factor < 1.2 {
            factor = 1.0;
        } else {
            self.lu_real = None;
            self.lu_complex = None;
        }
        let y_new: Vec<f64> = self.y.iter().zip(&z[2]).map(|(y, dz)| y + dz).collect();
        let mut f_new = vec![0.0; n];
        sys.rhs(t_new, &y_new, &mut f_new);
        self.rhs_evals += 1;
        if recompute_jac {
            self.refresh_jacobian(sys, t_new, &y_new);
            self.lu_real = None;
            self.lu_complex = None;
        } else {
            self.jac_current = false;
        }

        self.h_abs_old = Some(self.h_abs);
        self.error_norm_old = Some(error_norm);
        self.h_abs = h_abs * factor;

        let q: [Vec<f64>; 3] = std::array::from_fn(|k| {
            (0..n).map(|i| (0..3).map(|s| z[s][i] * self.tab.p[s][k]).sum()).collect()
        });
        let y_old = std::mem::replace(&mut self.y, y_new);
        self.t = t_new;
        self.f = f_new;

        let mut packed = vec![0.0; 4 * n];
        for i in 0..n {
            for k in 0..3 {
                packed[4 * i + k] = q[k][i] / h;
            }
        }
        self.last = Some(LastStep { t_old: t, h, y_old, q });
        Ok(Interpolant::Quartic { q: packed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_shift_matches_complex_arithmetic() {
        let mut jac = BandMatrix::zeros(3, 1, 1);
        let entries = [(0, 0, 1.0), (0, 1, -2.0), (1, 0, 0.5), (1, 1, 3.0), (1, 2, 4.0), (2, 1, -1.0), (2, 2, 2.0)];
        for (i, j, v) in entries {
            jac.set(i, j, v);
        }
        let mu = Complex64::new(1.5, -0.7);
        let x = [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25), Complex64::new(3.0, -1.0)];
        let mut expected = [Complex64::new(0.0, 0.0); 3];
        for (i, e) in expected.iter_mut().enumerate() {
            *e = mu * x[i];
            for (j, xj) in x.iter().enumerate() {
                *e -= jac.get(i, j) * xj;
            }
        }
        let flat: Vec<f64> = x.iter().flat_map(|z| [z.re, z.im]).collect();
        let mut out = vec![0.0; 6];
        complex_shift(&jac, mu).mul_vec(&flat, &mut out);
        for i in 0..3 {
            assert!((out[2 * i] - expected[i].re).abs() < 1e-15);
            assert!((out[2 * i + 1] - expected[i].im).abs() < 1e-15);
        }
        let mut solved = out.clone();
        complex_shift(&jac, mu).lu().unwrap().solve(&mut solved);
        for (a, b) in solved.iter().zip(&flat) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn stiff_linear_decay() {
        struct Decay;
        impl OdeSystem for Decay {
            fn dim(&self) -> usize {
                2
            }
            fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
                dy[0] = -y[0];
                dy[1] = -1e8 * (y[1] - y[0].cos());
            }
            fn bandwidth(&self) -> (usize, usize) {
                (1, 1)
            }
            fn jacobian(&self, _t: f64, y: &[f64], jac: &mut BandMatrix) {
                jac.set(0, 0, -1.0);
                jac.set(1, 0, -1e8 * y[0].sin());
                jac.set(1, 1, -1e8);
            }
        }
        let mut s = Radau::new(&Decay, 0.0, vec![1.0, 1.0], 2.0, 1e-10, 1e-12, f64::INFINITY, None);
        while Stepper::<Decay>::time(&s) < 2.0 {
            Stepper::<Decay>::step(&mut s, &Decay, 2.0).unwrap();
        }
        assert!((s.y[0] - (-2.0f64).exp()).abs() < 1e-9);
        assert!((s.y[1] - (-2.0f64).exp().cos()).abs() < 1e-7);
        assert!(s.rhs_evals < 5000);
    }

    // Reference values from scipy.integrate.solve_ivp(method="Radau") with
    // the same analytic Jacobian.
    #[test]
    fn matches_reference_implementation() {
        use crate::{builtin_bc, BuiltinIc, InitialData, ModelSpec, Problem, RegularizationSpec};
        let problem = Problem::new(
            ModelSpec::DYADIC,
            RegularizationSpec::canonical(6, 1),
            builtin_bc("dyadic-default").unwrap(),
        )
        .unwrap();
        let y0 = InitialData::Builtin(BuiltinIc::Ic2).build(ModelSpec::DYADIC, 7).unwrap();
        let mut s = Radau::new(&problem, 0.0, y0.as_flat().to_vec(), 1.0, 1e-8, 1e-10, f64::INFINITY, None);
        let mut steps = 0;
        while Stepper::<Problem>::time(&s) < 1.0 {
            Stepper::<Problem>::step(&mut s, &problem, 1.0).unwrap();
            steps += 1;
        }
        let expected = [
            1.0920333006907887,
            0.826146991245189,
            0.6461340608027412,
            0.4905537008277848,
            0.40682710781478604,
            0.286505132974273,
            0.2842273813073528,
        ];
        assert_eq!(steps, 264);
        assert_eq!(s.jac_evals, 13);
        for (a, b) in s.y.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
