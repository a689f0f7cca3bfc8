//! Time-dependent boundary shells `u_0(t)` (and `u_{-1}(t)` for five-point models).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::ShellError;

/// Cubic Hermite table built from values and derivatives at increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    times: Vec<f64>,
    values: Vec<Complex64>,
    derivatives: Vec<Complex64>,
}

impl BoundaryTable {
    pub fn new(
        times: Vec<f64>,
        values: Vec<Complex64>,
        derivatives: Vec<Complex64>,
    ) -> Result<Self, ShellError> {
        if times.len() < 2 || values.len() != times.len() || derivatives.len() != times.len() {
            return Err(ShellError::InvalidParameter(
                "boundary table needs at least two knots with matching values and derivatives".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ShellError::InvalidParameter(
                "boundary table knots must be strictly increasing".into(),
            ));
        }
        Ok(BoundaryTable {
            times,
            values,
            derivatives,
        })
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn slack(&self) -> f64 {
        1e-9 * (1.0 + self.end().abs().max(self.start().abs()))
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        t0 >= self.start() - self.slack() && t1 <= self.end() + self.slack()
    }

    pub fn eval(&self, t: f64) -> Result<(Complex64, Complex64), ShellError> {
        if !self.covers(t, t) {
            return Err(ShellError::BoundaryRange {
                start: self.start(),
                end: self.end(),
                t,
            });
        }
        let last = self.times.len() - 2;
        let k = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            p => (p - 1).min(last),
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.derivatives[k] * h, self.derivatives[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = y0 * h00 + d0 * h10 + y1 * h01 + d1 * h11;
        let dh00 = 6.0 * s2 - 6.0 * s;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let slope = (y0 * dh00 + d0 * dh10 + y1 * dh01 + d1 * dh11) / h;
        Ok((value, slope))
    }
}

/// One boundary function `b(t)` together with its derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryFn {
    /// `mean + cos_coeff cos(omega t) + sin_coeff sin(omega t)`.
    Harmonic {
        mean: Complex64,
        cos_coeff: Complex64,
        sin_coeff: Complex64,
        omega: f64,
    },
    Tabulated(Arc<BoundaryTable>),
    /// `scale * inner(time_scale * t)`.
    Scaled {
        inner: Box<BoundaryFn>,
        scale: Complex64,
        time_scale: f64,
    },
}

impl BoundaryFn {
    pub fn constant(v: Complex64) -> Self {
        BoundaryFn::Harmonic {
            mean: v,
            cos_coeff: Complex64::new(0.0, 0.0),
            sin_coeff: Complex64::new(0.0, 0.0),
            omega: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> Result<(Complex64, Complex64), ShellError> {
        match self {
            BoundaryFn::Harmonic {
                mean,
                cos_coeff,
                sin_coeff,
                omega,
            } => {
                let (s, c) = (omega * t).sin_cos();
                let value = mean + cos_coeff * c + sin_coeff * s;
                let slope = (sin_coeff * c - cos_coeff * s) * *omega;
                Ok((value, slope))
            }
            BoundaryFn::Tabulated(table) => table.eval(t),
            BoundaryFn::Scaled {
                inner,
                scale,
                time_scale,
            } => {
                let (v, d) = inner.eval(time_scale * t)?;
                Ok((scale * v, scale * d * *time_scale))
            }
        }
    }

    pub fn value(&self, t: f64) -> Result<Complex64, ShellError> {
        self.eval(t).map(|(v, _)| v)
    }

    pub fn derivative(&self, t: f64) -> Result<Complex64, ShellError> {
        self.eval(t).map(|(_, d)| d)
    }

    pub fn is_real(&self) -> bool {
        match self {
            BoundaryFn::Harmonic {
                mean,
                cos_coeff,
                sin_coeff,
                ..
            } => mean.im == 0.0 && cos_coeff.im == 0.0 && sin_coeff.im == 0.0,
            BoundaryFn::Tabulated(table) => table.values.iter().all(|z| z.im == 0.0)
                && table.derivatives.iter().all(|z| z.im == 0.0),
            BoundaryFn::Scaled { inner, scale, .. } => scale.im == 0.0 && inner.is_real(),
        }
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            BoundaryFn::Harmonic { .. } => true,
            BoundaryFn::Tabulated(table) => table.covers(t0, t1),
            BoundaryFn::Scaled {
                inner, time_scale, ..
            } => {
                let (a, b) = (time_scale * t0, time_scale * t1);
                inner.covers(a.min(b), a.max(b))
            }
        }
    }

    pub fn scaled(self, scale: Complex64, time_scale: f64) -> Self {
        BoundaryFn::Scaled {
            inner: Box::new(self),
            scale,
            time_scale,
        }
    }
}

/// Boundary functions ordered from the outermost shell inwards:
/// `[b_0]` for the dyadic model, `[b_{-1}, b_0]` for Gledzer and Sabra.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub label: String,
    pub functions: Vec<BoundaryFn>,
}

impl BoundarySpec {
    pub fn new(label: impl Into<String>, functions: Vec<BoundaryFn>) -> Self {
        BoundarySpec {
            label: label.into(),
            functions,
        }
    }

    pub fn constant(values: &[Complex64]) -> Self {
        let label = format!(
            "const({})",
            values
                .iter()
                .map(|z| if z.im == 0.0 {
                    format!("{}", z.re)
                } else {
                    format!("{}{:+}i", z.re, z.im)
                })
                .collect::<Vec<_>>()
                .join(",")
        );
        BoundarySpec::new(label, values.iter().map(|&v| BoundaryFn::constant(v)).collect())
    }

    pub fn tabulated(tables: Vec<BoundaryTable>) -> Self {
        BoundarySpec::new(
            "tabulated",
            tables
                .into_iter()
                .map(|t| BoundaryFn::Tabulated(Arc::new(t)))
                .collect(),
        )
    }

    pub fn arity(&self) -> usize {
        self.functions.len()
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        self.functions.iter().all(|f| f.covers(t0, t1))
    }

    /// Values in shell order; for arity 2 `[b_{-1}, b_0]`.
    pub fn values(&self, t: f64) -> Result<Vec<Complex64>, ShellError> {
        self.functions.iter().map(|f| f.value(t)).collect()
    }

    /// The innermost boundary `b_0(t)`.
    pub fn b0(&self, t: f64) -> Result<Complex64, ShellError> {
        self.functions
            .last()
            .ok_or(ShellError::BoundaryArity {
                expected: 1,
                got: 0,
            })?
            .value(t)
    }
}

/// Resolves a named boundary: `dyadic-default`, `gledzer-default`,
/// `gledzer-swapped`, `sabra-default` or `const(v, ...)`.
pub fn builtin_bc(name: &str) -> Result<BoundarySpec, ShellError> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let two_plus_sin = BoundaryFn::Harmonic {
        mean: Complex64::new(2.0, 0.0),
        cos_coeff: zero,
        sin_coeff: one,
        omega: 1.0,
    };
    let trimmed = name.trim();
    let functions = match trimmed {
        "dyadic-default" => vec![BoundaryFn::Harmonic {
            mean: Complex64::new(2.0, 0.0),
            cos_coeff: -one,
            sin_coeff: zero,
            omega: 1.0,
        }],
        "gledzer-default" => vec![BoundaryFn::constant(one), two_plus_sin],
        "gledzer-swapped" => vec![two_plus_sin, BoundaryFn::constant(one)],
        "sabra-default" => vec![
            BoundaryFn::constant(Complex64::new(0.5, 0.0)),
            BoundaryFn::Harmonic {
                mean: zero,
                cos_coeff: one,
                sin_coeff: -Complex64::i(),
                omega: 1.0,
            },
        ],
        other => {
            let inner = other
                .strip_prefix("const(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| ShellError::UnknownBoundary(other.to_string()))?;
            let values = inner
                .split(',')
                .map(|s| s.trim().parse::<f64>().map(Complex64::from))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| ShellError::UnknownBoundary(other.to_string()))?;
            if values.is_empty() || values.len() > 2 {
                return Err(ShellError::UnknownBoundary(other.to_string()));
            }
            return Ok(BoundarySpec::new(trimmed, values.into_iter().map(BoundaryFn::constant).collect()));
        }
    };
    Ok(BoundarySpec::new(trimmed, functions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn builtin_values() {
        let d = builtin_bc("dyadic-default").unwrap();
        assert_eq!(d.values(0.0).unwrap(), vec![Complex64::from(1.0)]);
        let g = builtin_bc("gledzer-default").unwrap();
        assert_eq!(
            g.values(0.0).unwrap(),
            vec![Complex64::from(1.0), Complex64::from(2.0)]
        );
        let s = builtin_bc("sabra-default").unwrap();
        let v = s.values(PI).unwrap();
        assert!((v[0] - Complex64::from(0.5)).norm() < 1e-15);
        assert!((v[1] - Complex64::from(-1.0)).norm() < 1e-15);
        let c = builtin_bc("const(1, 2.5)").unwrap();
        assert_eq!(c.arity(), 2);
        assert_eq!(c.b0(3.0).unwrap(), Complex64::from(2.5));
        assert!(builtin_bc("nope").is_err());
        assert!(builtin_bc("const(a)").is_err());
    }

    #[test]
    fn harmonic_derivatives() {
        let s = builtin_bc("sabra-default").unwrap();
        let t = 0.7;
        let h = 1e-6;
        let fd = (s.functions[1].value(t + h).unwrap() - s.functions[1].value(t - h).unwrap()) / (2.0 * h);
        assert!((fd - s.functions[1].derivative(t).unwrap()).norm() < 1e-9);
        let exact = Complex64::new(0.0, -t).exp();
        assert!((s.functions[1].value(t).unwrap() - exact).norm() < 1e-15);
    }

    #[test]
    fn table_interpolates_cubics_exactly() {
        let f = |t: f64| t * t * t - 2.0 * t + 1.0;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let times: Vec<f64> = (0..6).map(|k| 0.3 * k as f64).collect();
        let table = BoundaryTable::new(
            times.clone(),
            times.iter().map(|&t| Complex64::from(f(t))).collect(),
            times.iter().map(|&t| Complex64::from(df(t))).collect(),
        )
        .unwrap();
        for &t in &[0.0, 0.11, 0.3, 0.77, 1.5] {
            let (v, d) = table.eval(t).unwrap();
            assert!((v.re - f(t)).abs() < 1e-13);
            assert!((d.re - df(t)).abs() < 1e-12);
        }
        assert!(matches!(
            table.eval(2.0),
            Err(ShellError::BoundaryRange { .. })
        ));
        assert!(!BoundarySpec::tabulated(vec![table]).covers(0.0, 1.6));
    }

    #[test]
    fn scaled_chain_rule() {
        let base = builtin_bc("dyadic-default").unwrap().functions[0].clone();
        let scaled = base.clone().scaled(Complex64::from(2.0), 2.0);
        let (v, d) = scaled.eval(0.4).unwrap();
        assert!((v.re - 2.0 * (2.0 - 0.8f64.cos())).abs() < 1e-15);
        assert!((d.re - 4.0 * 0.8f64.sin()).abs() < 1e-15);
    }
}
