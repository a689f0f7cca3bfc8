//! Ideal couplings of the dyadic, Gledzer and Sabra shell models.
//!
//! Stencil windows are ordered from the largest scale to the smallest:
//! `(u[n-1], u[n], u[n+1])` for the dyadic model and
//! `(u[n-2], u[n-1], u[n], u[n+1], u[n+2])` for the two five-point models.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ShellError;

/// Inter-shell ratio; wavenumbers are `k_n = 2^n`.
pub const LAMBDA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Dyadic,
    Gledzer,
    Sabra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Real,
    Complex,
}

/// Which ideal model is integrated. The ratio is fixed to [`LAMBDA`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelSpec {
    pub coupling: Coupling,
}

impl ModelSpec {
    pub const DYADIC: ModelSpec = ModelSpec {
        coupling: Coupling::Dyadic,
    };
    pub const GLEDZER: ModelSpec = ModelSpec {
        coupling: Coupling::Gledzer,
    };
    pub const SABRA: ModelSpec = ModelSpec {
        coupling: Coupling::Sabra,
    };

    pub fn new(coupling: Coupling) -> Self {
        ModelSpec { coupling }
    }

    pub fn lambda(&self) -> f64 {
        LAMBDA
    }

    pub fn name(&self) -> &'static str {
        match self.coupling {
            Coupling::Dyadic => "dyadic",
            Coupling::Gledzer => "gledzer",
            Coupling::Sabra => "sabra",
        }
    }

    /// Number of boundary shells (`u_0`, or `u_{-1}` and `u_0`).
    pub fn boundary_arity(&self) -> usize {
        match self.coupling {
            Coupling::Dyadic => 1,
            Coupling::Gledzer | Coupling::Sabra => 2,
        }
    }

    pub fn stencil_width(&self) -> usize {
        2 * self.boundary_arity() + 1
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        match self.coupling {
            Coupling::Sabra => ScalarKind::Complex,
            _ => ScalarKind::Real,
        }
    }

    pub fn is_complex(&self) -> bool {
        self.scalar_kind() == ScalarKind::Complex
    }
}

/// `k_n = 2^n`, valid for negative `n` too.
#[inline]
pub fn wavenumber(n: i32) -> f64 {
    LAMBDA.powi(n)
}

#[inline]
pub fn dyadic_coupling(prev: f64, cur: f64, next: f64) -> f64 {
    prev * prev - LAMBDA * cur * next
}

/// Partial derivatives of [`dyadic_coupling`] with respect to the window.
#[inline]
pub fn dyadic_gradient(w: [f64; 3]) -> [f64; 3] {
    [2.0 * w[0], -LAMBDA * w[2], -LAMBDA * w[1]]
}

#[inline]
pub fn gledzer_coupling(w: [f64; 5]) -> f64 {
    let [m2, m1, cur, p1, p2] = w;
    (9.0 / 40.0) * m1 * m2 + (11.0 / 20.0) * p1 * m1 - 2.0 * p2 * p1 + 2.0 * p1 * p1 - cur * m1
}

#[inline]
pub fn gledzer_gradient(w: [f64; 5]) -> [f64; 5] {
    let [m2, m1, cur, p1, p2] = w;
    [
        (9.0 / 40.0) * m1,
        (9.0 / 40.0) * m2 + (11.0 / 20.0) * p1 - cur,
        -m1,
        (11.0 / 20.0) * m1 - 2.0 * p2 + 4.0 * p1,
        -2.0 * p1,
    ]
}

#[inline]
pub fn sabra_coupling(w: [Complex64; 5]) -> Complex64 {
    let [m2, m1, _, p1, p2] = w;
    let inner = m1 * m2 * 0.25 - p1 * m1.conj() * 0.5 + p2 * p1.conj() * 2.0;
    Complex64::new(-inner.im, inner.re)
}

/// Wirtinger derivatives of [`sabra_coupling`]: entry `j` holds
/// `(df/dz_j, df/dconj(z_j))`.
pub fn sabra_wirtinger(w: [Complex64; 5]) -> [(Complex64, Complex64); 5] {
    let i = Complex64::i();
    let [m2, m1, _, p1, p2] = w;
    let zero = Complex64::new(0.0, 0.0);
    [
        (i * m1 * 0.25, zero),
        (i * m2 * 0.25, -i * p1 * 0.5),
        (zero, zero),
        (-i * m1.conj() * 0.5, i * p2 * 2.0),
        (i * p1.conj() * 2.0, zero),
    ]
}

/// Evaluates the ideal coupling `f_n` on a stencil window.
pub fn coupling(model: ModelSpec, window: &[Complex64]) -> Result<Complex64, ShellError> {
    let width = model.stencil_width();
    if window.len() != width {
        return Err(ShellError::StencilLength {
            model: model.name(),
            expected: width,
            got: window.len(),
        });
    }
    if !model.is_complex() && window.iter().any(|z| z.im != 0.0) {
        return Err(ShellError::ComplexInRealModel(model.name()));
    }
    let value = match model.coupling {
        Coupling::Dyadic => {
            Complex64::from(dyadic_coupling(window[0].re, window[1].re, window[2].re))
        }
        Coupling::Gledzer => {
            let w = [
                window[0].re,
                window[1].re,
                window[2].re,
                window[3].re,
                window[4].re,
            ];
            Complex64::from(gledzer_coupling(w))
        }
        Coupling::Sabra => sabra_coupling([window[0], window[1], window[2], window[3], window[4]]),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::from(x)).collect()
    }

    #[test]
    fn dyadic_examples() {
        let zero = coupling(ModelSpec::DYADIC, &real(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));
        let ones = coupling(ModelSpec::DYADIC, &real(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(ones.re, -1.0);
    }

    #[test]
    fn gledzer_all_ones() {
        let v = coupling(ModelSpec::GLEDZER, &real(&[1.0; 5])).unwrap();
        assert!((v.re + 9.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn sabra_all_ones() {
        let v = coupling(ModelSpec::SABRA, &real(&[1.0; 5])).unwrap();
        assert!(v.re.abs() < 1e-15);
        assert!((v.im - 1.75).abs() < 1e-15);
    }

    #[test]
    fn contract_violations() {
        assert!(matches!(
            coupling(ModelSpec::DYADIC, &real(&[1.0; 5])),
            Err(ShellError::StencilLength { expected: 3, got: 5, .. })
        ));
        let mut w = real(&[1.0; 5]);
        w[2] = Complex64::new(1.0, 0.5);
        assert!(matches!(
            coupling(ModelSpec::GLEDZER, &w),
            Err(ShellError::ComplexInRealModel(_))
        ));
        assert!(coupling(ModelSpec::SABRA, &w).is_ok());
    }

    #[test]
    fn model_metadata() {
        assert_eq!(ModelSpec::DYADIC.boundary_arity(), 1);
        assert_eq!(ModelSpec::GLEDZER.stencil_width(), 5);
        assert_eq!(ModelSpec::SABRA.lambda(), 2.0);
        assert_eq!(wavenumber(-1), 0.5);
        assert_eq!(wavenumber(10), 1024.0);
    }

    fn numeric_gradient(f: impl Fn(&[f64]) -> f64, w: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..w.len())
            .map(|j| {
                let mut a = w.to_vec();
                let mut b = w.to_vec();
                a[j] += h;
                b[j] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn homogeneity_dyadic(w in prop::array::uniform3(-3.0f64..3.0), c in -4.0f64..4.0) {
            let base = dyadic_coupling(w[0], w[1], w[2]);
            let scaled = dyadic_coupling(c * w[0], c * w[1], c * w[2]);
            prop_assert!((scaled - c * c * base).abs() <= 1e-13 * (1.0 + scaled.abs()));
        }

        #[test]
        fn homogeneity_gledzer(w in prop::array::uniform5(-3.0f64..3.0), c in -4.0f64..4.0) {
            let base = gledzer_coupling(w);
            let scaled = gledzer_coupling(w.map(|x| c * x));
            prop_assert!((scaled - c * c * base).abs() <= 1e-13 * (1.0 + scaled.abs()));
        }

        #[test]
        fn homogeneity_sabra(
            re in prop::array::uniform5(-3.0f64..3.0),
            im in prop::array::uniform5(-3.0f64..3.0),
            c in -4.0f64..4.0,
        ) {
            let w: [Complex64; 5] = std::array::from_fn(|j| Complex64::new(re[j], im[j]));
            let base = sabra_coupling(w);
            let scaled = sabra_coupling(w.map(|z| z * c));
            prop_assert!((scaled - base * (c * c)).norm() <= 1e-13 * (1.0 + scaled.norm()));
        }

        #[test]
        fn real_gradients_match_finite_differences(w in prop::array::uniform5(-2.0f64..2.0)) {
            let g = gledzer_gradient(w);
            let fd = numeric_gradient(|v| gledzer_coupling([v[0], v[1], v[2], v[3], v[4]]), &w);
            for j in 0..5 {
                prop_assert!((g[j] - fd[j]).abs() < 1e-7);
            }
            let d = dyadic_gradient([w[0], w[1], w[2]]);
            let fd = numeric_gradient(|v| dyadic_coupling(v[0], v[1], v[2]), &w[..3]);
            for j in 0..3 {
                prop_assert!((d[j] - fd[j]).abs() < 1e-7);
            }
        }

        #[test]
        fn sabra_wirtinger_matches_finite_differences(
            re in prop::array::uniform5(-2.0f64..2.0),
            im in prop::array::uniform5(-2.0f64..2.0),
        ) {
            let w: [Complex64; 5] = std::array::from_fn(|j| Complex64::new(re[j], im[j]));
            let d = sabra_wirtinger(w);
            let h = 1e-6;
            for j in 0..5 {
                for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                    let mut a = w;
                    let mut b = w;
                    a[j] += dir * h;
                    b[j] -= dir * h;
                    let fd = (sabra_coupling(a) - sabra_coupling(b)) / (2.0 * h);
                    let (dz, dzc) = d[j];
                    let predicted = dz * dir + dzc * dir.conj();
                    prop_assert!((fd - predicted).norm() < 1e-7);
                }
            }
        }
    }
}
