use num_complex::Complex64;

use crate::error::ShellError;
use crate::model::ModelSpec;
use crate::state::ShellState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinIc {
    /// `|a_n| = 2^(-k_n)`: super-exponentially small scales.
    Ic1,
    /// `|a_n| = k_n^(-1/4)`, times `2 - sin n` for the real models.
    Ic2,
}

impl std::str::FromStr for BuiltinIc {
    type Err = ShellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ic1" => Ok(BuiltinIc::Ic1),
            "ic2" => Ok(BuiltinIc::Ic2),
            _ => Err(ShellError::UnknownInitialCondition(s.to_string())),
        }
    }
}

impl std::fmt::Display for BuiltinIc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BuiltinIc::Ic1 => "IC1",
            BuiltinIc::Ic2 => "IC2",
        })
    }
}

/// Initial data that can be laid out on any number of shells.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Builtin(BuiltinIc),
    /// Amplitudes `a_1, a_2, ...`; missing shells are zero, extra ones are
    /// dropped.
    Literal(Vec<Complex64>),
    /// The same amplitude on every shell.
    Uniform(Complex64),
}

impl InitialData {
    pub fn build(&self, model: ModelSpec, shells: usize) -> Result<ShellState, ShellError> {
        match self {
            InitialData::Builtin(which) => initial_condition(*which, model, shells),
            InitialData::Literal(_) | InitialData::Uniform(_) => {
                if shells == 0 {
                    return Err(ShellError::EmptyState);
                }
                let padded = match self {
                    InitialData::Literal(values) => {
                        let mut padded = values.clone();
                        padded.resize(shells, Complex64::new(0.0, 0.0));
                        padded
                    }
                    InitialData::Uniform(v) => vec![*v; shells],
                    InitialData::Builtin(_) => unreachable!(),
                };
                if model.is_complex() {
                    ShellState::complex(&padded)
                } else if padded.iter().any(|z| z.im != 0.0) {
                    Err(ShellError::ComplexInRealModel(model.name()))
                } else {
                    ShellState::real(padded.iter().map(|z| z.re).collect())
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialData::Builtin(which) => which.to_string(),
            InitialData::Literal(values) => format!("literal[{}]", values.len()),
            InitialData::Uniform(v) if v.im == 0.0 => format!("uniform({})", v.re),
            InitialData::Uniform(v) => format!("uniform({}, {})", v.re, v.im),
        }
    }
}

/// Builds the named initial condition on `shells` shells.
pub fn builtin_ic(name: &str, model: ModelSpec, shells: usize) -> Result<ShellState, ShellError> {
    let which: BuiltinIc = name.parse()?;
    initial_condition(which, model, shells)
}

pub fn initial_condition(
    which: BuiltinIc,
    model: ModelSpec,
    shells: usize,
) -> Result<ShellState, ShellError> {
    if shells == 0 {
        return Err(ShellError::EmptyState);
    }
    let modulus = |n: usize| -> f64 {
        let nf = n as f64;
        match which {
            BuiltinIc::Ic1 => (-(2f64.powi(n as i32))).exp2(),
            BuiltinIc::Ic2 => (-nf / 4.0).exp2(),
        }
    };
    if model.is_complex() {
        let values: Vec<Complex64> = (1..=shells)
            .map(|n| Complex64::from_polar(modulus(n), (n as f64).sqrt()))
            .collect();
        ShellState::complex(&values)
    } else {
        let values = (1..=shells)
            .map(|n| match which {
                BuiltinIc::Ic1 => modulus(n),
                BuiltinIc::Ic2 => modulus(n) * (2.0 - (n as f64).sin()),
            })
            .collect();
        ShellState::real(values)
    }
}
