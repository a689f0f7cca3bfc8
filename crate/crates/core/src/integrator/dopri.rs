//! Dormand-Prince 5(4) with the Hairer PI controller and the quartic
//! continuous extension (Shampine's optimal `c_6` coefficients).

use super::trajectory::Interpolant;
use super::{initial_step, rms, StepFailure, Stepper};
use crate::system::OdeSystem;

const C: [f64; 6] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    -71.0 / 57600.0,
    0.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
];
const P: [[f64; 4]; 7] = [
    [
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ],
    [0.0, 0.0, 0.0, 0.0],
    [
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ],
    [
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ],
    [
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ],
    [
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ],
    [
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ],
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
/// Step ratio bounds: shrink at most 5x, grow at most 10x.
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

pub(crate) struct Dopri5 {
    t: f64,
    y: Vec<f64>,
    f: Vec<f64>,
    h_abs: f64,
    err_old: f64,
    k: Vec<Vec<f64>>,
    rtol: f64,
    atol: f64,
    max_step: f64,
    pub(crate) rhs_evals: usize,
    pub(crate) rejected: usize,
}

impl Dopri5 {
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
                initial_step(sys, t0, &y0, &f, t_end, max_step, 4, rtol, atol)
            }
        };
        Dopri5 {
            t: t0,
            y: y0,
            f,
            h_abs,
            err_old: 1e-4,
            k: vec![vec![0.0; n]; 7],
            rtol,
            atol,
            max_step,
            rhs_evals,
            rejected: 0,
        }
    }
}

impl<S: OdeSystem> Stepper<S> for Dopri5 {
    fn time(&self) -> f64 {
        self.t
    }

    fn state(&self) -> &[f64] {
        &self.y
    }

    fn step(&mut self, sys: &S, t_end: f64) -> Result<Interpolant, StepFailure> {
        let n = self.y.len();
        let min_step = 10.0 * (next_up(self.t) - self.t);
        let mut h_abs = self.h_abs.min(self.max_step).max(min_step);
        let mut rejected_here = false;
        let mut ytmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];
        loop {
            if h_abs < min_step {
                return Err(StepFailure::StepTooSmall);
            }
            let mut t_new = self.t + h_abs;
            if t_new > t_end {
                t_new = t_end;
            }
            let h = t_new - self.t;
            self.k[0].copy_from_slice(&self.f);
            for s in 1..6 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, a) in A[s][..s].iter().enumerate() {
                        acc += a * self.k[j][i];
                    }
                    ytmp[i] = self.y[i] + h * acc;
                }
                sys.rhs(self.t + C[s] * h, &ytmp, &mut self.k[s]);
            }
            for i in 0..n {
                let mut acc = 0.0;
                for (j, b) in B.iter().enumerate() {
                    acc += b * self.k[j][i];
                }
                y_new[i] = self.y[i] + h * acc;
            }
            sys.rhs(t_new, &y_new, &mut self.k[6]);
            self.rhs_evals += 6;
            for i in 0..n {
                let mut acc = 0.0;
                for (j, e) in E.iter().enumerate() {
                    acc += e * self.k[j][i];
                }
                let scale = self.atol + self.rtol * self.y[i].abs().max(y_new[i].abs());
                err[i] = h * acc / scale;
            }
            let err_norm = rms(&err);
            if err_norm <= 1.0 {
                let fac11 = err_norm.powf(ALPHA);
                let mut fac = fac11 / self.err_old.powf(BETA) / SAFETY;
                fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_next = h_abs / fac;
                if rejected_here {
                    h_next = h_next.min(h_abs);
                }
                self.err_old = err_norm.max(1e-4);
                let mut q = vec![0.0; 4 * n];
                for i in 0..n {
                    for (c, qc) in q[4 * i..4 * i + 4].iter_mut().enumerate() {
                        *qc = (0..7).map(|j| self.k[j][i] * P[j][c]).sum();
                    }
                }
                self.t = t_new;
                std::mem::swap(&mut self.y, &mut y_new);
                self.f.copy_from_slice(&self.k[6]);
                self.h_abs = h_next;
                return Ok(Interpolant::Quartic { q });
            }
            // NaN error norms land here too and shrink the step
            self.rejected += 1;
            rejected_here = true;
            let fac11 = if err_norm.is_finite() {
                err_norm.powf(ALPHA)
            } else {
                f64::INFINITY
            };
            h_abs /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}

pub(crate) fn next_up(t: f64) -> f64 {
    let bits = t.to_bits();
    if t >= 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}
