//! Regularized right-hand sides and their Jacobians.

use num_complex::Complex64;

use crate::boundary::BoundarySpec;
use crate::error::ShellError;
use crate::linalg::BandMatrix;
use crate::model::{
    dyadic_coupling, dyadic_gradient, gledzer_coupling, gledzer_gradient, sabra_coupling,
    sabra_wirtinger, wavenumber, Coupling, ModelSpec, ScalarKind,
};
use crate::regularization::RegularizationSpec;
use crate::state::{slots, ShellState};

/// A first-order system `y' = f(t, y)` on a flat real vector.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Lower and upper bandwidth of the Jacobian.
    fn bandwidth(&self) -> (usize, usize) {
        let n = self.dim().saturating_sub(1);
        (n, n)
    }

    /// Fills `jac` (already zeroed) with `df/dy`. The default uses central
    /// differences.
    fn jacobian(&self, t: f64, y: &[f64], jac: &mut BandMatrix) {
        let n = self.dim();
        let mut yp = y.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = 1e-7 * (1.0 + y[j].abs());
            yp[j] = y[j] + h;
            self.rhs(t, &yp, &mut fp);
            yp[j] = y[j] - h;
            self.rhs(t, &yp, &mut fm);
            yp[j] = y[j];
            for i in 0..n {
                let v = (fp[i] - fm[i]) / (2.0 * h);
                if v != 0.0 {
                    jac.set(i, j, v);
                }
            }
        }
    }
}

/// A regularized initial-boundary value problem without its initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub model: ModelSpec,
    pub reg: RegularizationSpec,
    pub bc: BoundarySpec,
    shells: usize,
}

impl Problem {
    /// Uses the regularization's default truncation.
    pub fn new(model: ModelSpec, reg: RegularizationSpec, bc: BoundarySpec) -> Result<Self, ShellError> {
        let shells = reg.default_truncation();
        Self::with_shells(model, reg, bc, shells)
    }

    pub fn with_shells(
        model: ModelSpec,
        reg: RegularizationSpec,
        bc: BoundarySpec,
        shells: usize,
    ) -> Result<Self, ShellError> {
        reg.validate()?;
        if bc.arity() != model.boundary_arity() {
            return Err(ShellError::BoundaryArity {
                expected: model.boundary_arity(),
                got: bc.arity(),
            });
        }
        if !model.is_complex() && !bc.functions.iter().all(|f| f.is_real()) {
            return Err(ShellError::ComplexInRealModel(model.name()));
        }
        if shells == 0 {
            return Err(ShellError::EmptyState);
        }
        match &reg {
            RegularizationSpec::CanonicalCutoff { n, j, .. } if shells != n + j => {
                return Err(ShellError::ShellCount {
                    expected: n + j,
                    got: shells,
                })
            }
            RegularizationSpec::Auxiliary { n, .. } if shells < *n => {
                return Err(ShellError::ShellCount {
                    expected: *n,
                    got: shells,
                })
            }
            _ => {}
        }
        Ok(Problem {
            model,
            reg,
            bc,
            shells,
        })
    }

    /// Shell count `M`.
    pub fn shells(&self) -> usize {
        self.shells
    }

    pub fn kind(&self) -> ScalarKind {
        self.model.scalar_kind()
    }

    pub fn check_state(&self, state: &ShellState) -> Result<(), ShellError> {
        if state.kind() != self.kind() {
            return Err(ShellError::KindMismatch(self.model.name()));
        }
        if state.len() != self.shells {
            return Err(ShellError::ShellCount {
                expected: self.shells,
                got: state.len(),
            });
        }
        Ok(())
    }

    /// Damping `d_m(u) = q_m |u| u + l_m u` inside `du_m/dt = k_m (f_m - d_m)`;
    /// returns `(q_m, l_m)` with the auxiliary amplitude already inserted.
    #[inline]
    fn damping(&self, m: usize, aux_amplitude: f64) -> (f64, f64) {
        match &self.reg {
            RegularizationSpec::CanonicalCutoff { .. } => (self.reg.cutoff_coefficient(m), 0.0),
            RegularizationSpec::Auxiliary { n, beta } => (
                0.0,
                beta * aux_amplitude * wavenumber(m as i32) / wavenumber(*n as i32),
            ),
            RegularizationSpec::Viscous { nu } => (0.0, nu * wavenumber(m as i32)),
        }
    }

    fn aux_level(&self) -> Option<(usize, f64)> {
        match &self.reg {
            RegularizationSpec::Auxiliary { n, beta } => Some((*n, *beta)),
            _ => None,
        }
    }

    /// Boundary values in shell order, or `None` if the boundary cannot be
    /// evaluated at `t`.
    fn boundary(&self, t: f64) -> Option<[Complex64; 2]> {
        let values = self.bc.values(t).ok()?;
        let zero = Complex64::new(0.0, 0.0);
        Some(match values.as_slice() {
            [b0] => [zero, *b0],
            [bm1, b0] => [*bm1, *b0],
            _ => return None,
        })
    }

    /// Flat right-hand side. An unevaluable boundary yields NaN so the
    /// integrator aborts with a non-finite state.
    pub fn rhs_flat(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let Some(b) = self.boundary(t) else {
            dy.iter_mut().for_each(|v| *v = f64::NAN);
            return;
        };
        match self.kind() {
            ScalarKind::Real => self.rhs_real(b, y, dy),
            ScalarKind::Complex => self.rhs_complex(b, y, dy),
        }
    }

    fn rhs_real(&self, b: [Complex64; 2], y: &[f64], dy: &mut [f64]) {
        let m_total = self.shells;
        // ext[2 + m - 1] = u_m, ext[0] = b_{-1}, ext[1] = b_0, two trailing zeros
        let mut ext = vec![0.0; m_total + 4];
        ext[0] = b[0].re;
        ext[1] = b[1].re;
        ext[2..2 + m_total].copy_from_slice(y);
        let aux = self.aux_level().map_or(0.0, |(n, _)| ext[1 + n].abs());
        for m in 1..=m_total {
            let c = m + 1;
            let f = match self.model.coupling {
                Coupling::Dyadic => dyadic_coupling(ext[c - 1], ext[c], ext[c + 1]),
                _ => gledzer_coupling([ext[c - 2], ext[c - 1], ext[c], ext[c + 1], ext[c + 2]]),
            };
            let u = ext[c];
            let (q, l) = self.damping(m, aux);
            dy[m - 1] = wavenumber(m as i32) * (f - q * u.abs() * u - l * u);
        }
    }

    fn rhs_complex(&self, b: [Complex64; 2], y: &[f64], dy: &mut [f64]) {
        let m_total = self.shells;
        let zero = Complex64::new(0.0, 0.0);
        let mut ext = vec![zero; m_total + 4];
        ext[0] = b[0];
        ext[1] = b[1];
        for m in 0..m_total {
            ext[2 + m] = Complex64::new(y[2 * m], y[2 * m + 1]);
        }
        let aux = self.aux_level().map_or(0.0, |(n, _)| ext[1 + n].norm());
        for m in 1..=m_total {
            let c = m + 1;
            let f = sabra_coupling([ext[c - 2], ext[c - 1], ext[c], ext[c + 1], ext[c + 2]]);
            let u = ext[c];
            let (q, l) = self.damping(m, aux);
            let v = (f - u * (q * u.norm() + l)) * wavenumber(m as i32);
            dy[2 * m - 2] = v.re;
            dy[2 * m - 1] = v.im;
        }
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        let dim = self.dim();
        if self.aux_level().is_some() {
            return (dim - 1, dim - 1);
        }
        let w = match self.kind() {
            ScalarKind::Real => self.model.boundary_arity(),
            ScalarKind::Complex => 2 * self.model.boundary_arity() + 1,
        };
        (w, w)
    }

    pub fn dim(&self) -> usize {
        self.shells * slots(self.kind())
    }

    /// Analytic Jacobian of [`Problem::rhs_flat`]; `jac` must be zeroed.
    pub fn jacobian_flat(&self, t: f64, y: &[f64], jac: &mut BandMatrix) {
        let Some(b) = self.boundary(t) else {
            return;
        };
        match self.kind() {
            ScalarKind::Real => self.jacobian_real(b, y, jac),
            ScalarKind::Complex => self.jacobian_complex(b, y, jac),
        }
    }

    fn jacobian_real(&self, b: [Complex64; 2], y: &[f64], jac: &mut BandMatrix) {
        let m_total = self.shells;
        let mut ext = vec![0.0; m_total + 4];
        ext[0] = b[0].re;
        ext[1] = b[1].re;
        ext[2..2 + m_total].copy_from_slice(y);
        let aux = self.aux_level();
        let aux_amp = aux.map_or(0.0, |(n, _)| ext[1 + n].abs());
        let half = self.model.boundary_arity();
        for m in 1..=m_total {
            let c = m + 1;
            let k = wavenumber(m as i32);
            let row = m - 1;
            let mut put = |shell: isize, v: f64| {
                if shell >= 1 && shell as usize <= m_total && v != 0.0 {
                    jac.add(row, shell as usize - 1, k * v);
                }
            };
            match self.model.coupling {
                Coupling::Dyadic => {
                    let g = dyadic_gradient([ext[c - 1], ext[c], ext[c + 1]]);
                    for (offset, gv) in g.iter().enumerate() {
                        put(m as isize + offset as isize - half as isize, *gv);
                    }
                }
                _ => {
                    let g = gledzer_gradient([ext[c - 2], ext[c - 1], ext[c], ext[c + 1], ext[c + 2]]);
                    for (offset, gv) in g.iter().enumerate() {
                        put(m as isize + offset as isize - half as isize, *gv);
                    }
                }
            }
            let u = ext[c];
            let (q, l) = self.damping(m, aux_amp);
            put(m as isize, -(2.0 * q * u.abs() + l));
            if let Some((n, beta)) = aux {
                if n >= 1 {
                    let un = ext[1 + n];
                    let sign = if un > 0.0 { 1.0 } else if un < 0.0 { -1.0 } else { 0.0 };
                    put(n as isize, -beta * k / wavenumber(n as i32) * u * sign);
                }
            }
        }
    }

    fn jacobian_complex(&self, b: [Complex64; 2], y: &[f64], jac: &mut BandMatrix) {
        let m_total = self.shells;
        let zero = Complex64::new(0.0, 0.0);
        let mut ext = vec![zero; m_total + 4];
        ext[0] = b[0];
        ext[1] = b[1];
        for m in 0..m_total {
            ext[2 + m] = Complex64::new(y[2 * m], y[2 * m + 1]);
        }
        let aux = self.aux_level();
        let aux_amp = aux.map_or(0.0, |(n, _)| ext[1 + n].norm());
        for m in 1..=m_total {
            let c = m + 1;
            let k = wavenumber(m as i32);
            let mut put = |shell: isize, a: Complex64, bb: Complex64| {
                if shell < 1 || shell as usize > m_total {
                    return;
                }
                let (r, col) = (2 * (m - 1), 2 * (shell as usize - 1));
                let sum = (a + bb) * k;
                let diff = (a - bb) * k;
                jac.add(r, col, sum.re);
                jac.add(r, col + 1, -diff.im);
                jac.add(r + 1, col, sum.im);
                jac.add(r + 1, col + 1, diff.re);
            };
            let w = sabra_wirtinger([ext[c - 2], ext[c - 1], ext[c], ext[c + 1], ext[c + 2]]);
            for (offset, (a, bb)) in w.iter().enumerate() {
                put(m as isize + offset as isize - 2, *a, *bb);
            }
            let u = ext[c];
            let (q, l) = self.damping(m, aux_amp);
            let r = u.norm();
            let mut a = Complex64::from(-l);
            let mut bb = zero;
            if q != 0.0 && r > 0.0 {
                a -= q * 1.5 * r;
                bb -= u * u * (q / (2.0 * r));
            }
            put(m as isize, a, bb);
            if let Some((n, beta)) = aux {
                let un = ext[1 + n];
                let rn = un.norm();
                if n >= 1 && rn > 0.0 {
                    let s = beta * k / wavenumber(n as i32) / (2.0 * rn);
                    put(n as isize, -u * un.conj() * s, -u * un * s);
                }
            }
        }
    }

    pub fn to_state(&self, flat: Vec<f64>) -> Result<ShellState, ShellError> {
        ShellState::from_flat(self.kind(), flat)
    }
}

impl OdeSystem for Problem {
    fn dim(&self) -> usize {
        Problem::dim(self)
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.rhs_flat(t, y, dy)
    }

    fn bandwidth(&self) -> (usize, usize) {
        Problem::bandwidth(self)
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut BandMatrix) {
        self.jacobian_flat(t, y, jac)
    }
}

/// `du/dt` for shells `1..=M` of the regularized model.
pub fn rhs(
    model: ModelSpec,
    reg: &RegularizationSpec,
    bc: &BoundarySpec,
    t: f64,
    state: &ShellState,
) -> Result<Vec<Complex64>, ShellError> {
    let problem = Problem::with_shells(model, reg.clone(), bc.clone(), state.len())?;
    problem.check_state(state)?;
    problem.bc.values(t)?;
    let mut dy = vec![0.0; problem.dim()];
    problem.rhs_flat(t, state.as_flat(), &mut dy);
    let out = problem.to_state(dy)?;
    Ok(out.amplitudes())
}
