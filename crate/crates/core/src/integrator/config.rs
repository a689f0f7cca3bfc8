use serde::{Deserialize, Serialize};

use super::IntegrateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Dormand-Prince 5(4) with PI step control and quartic dense output.
    ExplicitAdaptive,
    /// Variable-order (1..=5) numerical differentiation formulas with a
    /// banded Newton solve.
    #[default]
    StiffAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Any `|u_n|` above this aborts the run.
    pub blowup_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::StiffAdaptive,
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
            initial_step: None,
            max_steps: 2_000_000,
            blowup_guard: 1e12,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |msg: String| Err(IntegrateError::InvalidConfig(msg));
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return bad(format!("rtol must be positive, got {}", self.rtol));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return bad(format!("atol must be positive, got {}", self.atol));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad(format!("maxStep must be positive, got {h}"));
            }
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("initialStep must be positive, got {h}"));
            }
        }
        if self.max_steps == 0 {
            return bad("maxSteps must be at least 1".into());
        }
        if !(self.blowup_guard > 0.0) {
            return bad(format!("blowupGuard must be positive, got {}", self.blowup_guard));
        }
        Ok(())
    }
}
