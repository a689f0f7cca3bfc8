use num_complex::Complex64;

use crate::error::ShellError;
use crate::model::ScalarKind;

/// Shell amplitudes `u_1..u_M`.
///
/// Complex states are stored interleaved (`re, im, re, im, ...`) so the
/// integrators can treat every state as a flat real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellState {
    kind: ScalarKind,
    data: Vec<f64>,
}

impl ShellState {
    pub fn real(values: Vec<f64>) -> Result<Self, ShellError> {
        Self::from_flat(ScalarKind::Real, values)
    }

    pub fn complex(values: &[Complex64]) -> Result<Self, ShellError> {
        let data = values.iter().flat_map(|z| [z.re, z.im]).collect();
        Self::from_flat(ScalarKind::Complex, data)
    }

    pub fn zeros(kind: ScalarKind, shells: usize) -> Result<Self, ShellError> {
        Self::from_flat(kind, vec![0.0; shells * slots(kind)])
    }

    /// Builds a state from the flat real layout used by the integrators.
    pub fn from_flat(kind: ScalarKind, data: Vec<f64>) -> Result<Self, ShellError> {
        if data.is_empty() {
            return Err(ShellError::EmptyState);
        }
        if data.len() % slots(kind) != 0 {
            return Err(ShellError::InvalidParameter(format!(
                "complex state needs an even number of entries, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(ShellError::NonFinite(pos / slots(kind) + 1));
        }
        Ok(ShellState { kind, data })
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    /// Shell count `M`.
    pub fn len(&self) -> usize {
        self.data.len() / slots(self.kind)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Amplitude of shell `n` (1-based); shells beyond `M` read as zero.
    pub fn amplitude(&self, n: usize) -> Complex64 {
        if n == 0 || n > self.len() {
            return Complex64::new(0.0, 0.0);
        }
        match self.kind {
            ScalarKind::Real => Complex64::from(self.data[n - 1]),
            ScalarKind::Complex => Complex64::new(self.data[2 * n - 2], self.data[2 * n - 1]),
        }
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        (1..=self.len()).map(|n| self.amplitude(n)).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// `E = sum |u_n|^2`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Largest `|u_n|`.
    pub fn max_modulus(&self) -> f64 {
        (1..=self.len())
            .map(|n| self.amplitude(n).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn slots(kind: ScalarKind) -> usize {
    match kind {
        ScalarKind::Real => 1,
        ScalarKind::Complex => 2,
    }
}

/// Energy `sum |u_n|^2` of a state.
pub fn energy(state: &ShellState) -> f64 {
    state.energy()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        assert_eq!(ShellState::real(vec![3.0, 4.0]).unwrap().energy(), 25.0);
        assert_eq!(ShellState::zeros(ScalarKind::Real, 4).unwrap().energy(), 0.0);
        let z = ShellState::complex(&[Complex64::new(1.0, 2.0)]).unwrap();
        assert_eq!(z.energy(), 5.0);
        assert_eq!(z.len(), 1);
    }

    #[test]
    fn rejects_invalid_states() {
        assert_eq!(ShellState::real(vec![]), Err(ShellError::EmptyState));
        assert_eq!(
            ShellState::real(vec![1.0, f64::NAN]),
            Err(ShellError::NonFinite(2))
        );
        assert!(ShellState::from_flat(ScalarKind::Complex, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn amplitude_indexing() {
        let s = ShellState::complex(&[Complex64::new(1.0, 2.0), Complex64::new(3.0, -1.0)]).unwrap();
        assert_eq!(s.amplitude(2), Complex64::new(3.0, -1.0));
        assert_eq!(s.amplitude(3), Complex64::new(0.0, 0.0));
        assert_eq!(s.amplitudes().len(), 2);
    }
}
