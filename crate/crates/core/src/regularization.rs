use serde::{Deserialize, Serialize};

use crate::error::ShellError;

/// How the small scales are regularized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegularizationSpec {
    /// Ideal shells `1..=n`, dissipative shells `n+1..=n+j` with
    /// `-(1 + eps) c_n |u_n| u_n`, and nothing beyond.
    CanonicalCutoff {
        n: usize,
        j: usize,
        /// Per dissipative shell; empty means all ones.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        coeffs: Vec<f64>,
        #[serde(default)]
        eps: f64,
    },
    /// `-beta (|u_n| / k_n) k_m^2 u_m` on every shell `m`.
    Auxiliary { n: usize, beta: f64 },
    /// `-nu k_m^2 u_m` on every shell `m`.
    Viscous { nu: f64 },
}

impl RegularizationSpec {
    pub fn canonical(n: usize, j: usize) -> Self {
        RegularizationSpec::CanonicalCutoff {
            n,
            j,
            coeffs: Vec::new(),
            eps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ShellError> {
        let bad = |msg: String| Err(ShellError::InvalidParameter(msg));
        match self {
            RegularizationSpec::CanonicalCutoff { j, coeffs, eps, .. } => {
                if *j == 0 {
                    return bad("canonical cutoff needs at least one dissipative shell".into());
                }
                if !coeffs.is_empty() && coeffs.len() != *j {
                    return bad(format!(
                        "expected {j} dissipative coefficients, got {}",
                        coeffs.len()
                    ));
                }
                if coeffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                    return bad("dissipative coefficients must be positive".into());
                }
                if !(eps.is_finite() && *eps >= 0.0) {
                    return bad(format!("perturbation eps must be >= 0, got {eps}"));
                }
            }
            RegularizationSpec::Auxiliary { beta, .. } => {
                if !(beta.is_finite() && *beta > 0.0) {
                    return bad(format!("beta must be positive, got {beta}"));
                }
            }
            RegularizationSpec::Viscous { nu } => {
                if !(nu.is_finite() && *nu > 0.0) {
                    return bad(format!("viscosity must be positive, got {nu}"));
                }
            }
        }
        Ok(())
    }

    /// Level at which the regularization acts: `N` for the canonical and
    /// auxiliary variants, the Kolmogorov-like level `(3/4) log2(1/nu)`
    /// (rounded) for the viscous one.
    pub fn level(&self) -> usize {
        match self {
            RegularizationSpec::CanonicalCutoff { n, .. } | RegularizationSpec::Auxiliary { n, .. } => {
                *n
            }
            RegularizationSpec::Viscous { nu } => (0.75 * (-nu.log2())).round().max(0.0) as usize,
        }
    }

    /// Shell count used when the caller does not choose one.
    pub fn default_truncation(&self) -> usize {
        match self {
            RegularizationSpec::CanonicalCutoff { n, j, .. } => n + j,
            _ => {
                let level = self.level();
                level + (10.0 + level as f64 / 3.0).ceil() as usize
            }
        }
    }

    /// `(1 + eps) c_m` for canonical dissipative shell `m` (1-based), else 0.
    pub fn cutoff_coefficient(&self, m: usize) -> f64 {
        match self {
            RegularizationSpec::CanonicalCutoff { n, j, coeffs, eps } if m > *n && m <= n + j => {
                let c = if coeffs.is_empty() { 1.0 } else { coeffs[m - n - 1] };
                (1.0 + eps) * c
            }
            _ => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RegularizationSpec::CanonicalCutoff { n, j, eps, .. } if *eps == 0.0 => {
                format!("cutoff(N={n},J={j})")
            }
            RegularizationSpec::CanonicalCutoff { n, j, eps, .. } => {
                format!("cutoff(N={n},J={j},eps={eps:e})")
            }
            RegularizationSpec::Auxiliary { n, beta } => format!("auxiliary(N={n},beta={beta})"),
            RegularizationSpec::Viscous { nu } => format!("viscous(nu={nu:e})"),
        }
    }
}
