//! Experiment configuration: JSON with camelCase keys, unknown keys
//! rejected, kind-dependent defaults filled in by [`ExperimentConfig::resolve`].

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use shellrg_core::{builtin_bc, BoundarySpec, BuiltinIc, Coupling, InitialData, ModelSpec, SolverConfig};
use shellrg_lab::Family;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SingleRun,
    RgConvergence,
    Eigenmode,
    RgVerify,
    ViscousBridge,
    ViscousRescaled,
    AttractorProbe,
    ChaosGrowth,
    StationaryCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SingleRun => "single-run",
            ExperimentKind::RgConvergence => "rg-convergence",
            ExperimentKind::Eigenmode => "eigenmode",
            ExperimentKind::RgVerify => "rg-verify",
            ExperimentKind::ViscousBridge => "viscous-bridge",
            ExperimentKind::ViscousRescaled => "viscous-rescaled",
            ExperimentKind::AttractorProbe => "attractor-probe",
            ExperimentKind::ChaosGrowth => "chaos-growth",
            ExperimentKind::StationaryCheck => "stationary-check",
        }
    }

    fn default_levels(&self) -> Vec<usize> {
        match self {
            ExperimentKind::SingleRun => vec![20],
            ExperimentKind::RgConvergence | ExperimentKind::Eigenmode => (10..=20).collect(),
            ExperimentKind::RgVerify => vec![3],
            ExperimentKind::ViscousBridge => Vec::new(),
            ExperimentKind::ViscousRescaled => (16..=26).collect(),
            ExperimentKind::AttractorProbe => vec![24, 30],
            ExperimentKind::ChaosGrowth => (6..=13).collect(),
            ExperimentKind::StationaryCheck => (0..=8).collect(),
        }
    }

    fn uses_reference(&self) -> bool {
        matches!(
            self,
            ExperimentKind::RgConvergence | ExperimentKind::Eigenmode | ExperimentKind::ViscousRescaled
        )
    }
}

/// One initial amplitude: a bare number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(x) => Complex64::from(x),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// `"IC1"`, `"IC2"`, `"uniform(0.5)"`, or a list of amplitudes `a_1, a_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IcSpec {
    Named(String),
    Literal(Vec<Amplitude>),
}

impl IcSpec {
    pub fn named(name: &str) -> Self {
        IcSpec::Named(name.to_string())
    }

    pub fn initial_data(&self) -> Result<InitialData, ConfigError> {
        match self {
            IcSpec::Literal(values) => Ok(InitialData::Literal(values.iter().map(|a| a.value()).collect())),
            IcSpec::Named(name) => {
                if let Some(inner) = name.trim().strip_prefix("uniform(").and_then(|s| s.strip_suffix(')')) {
                    let parts: Vec<f64> = inner
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| invalid("ic", format!("cannot parse {name:?}")))?;
                    return match parts[..] {
                        [re] => Ok(InitialData::Uniform(Complex64::from(re))),
                        [re, im] => Ok(InitialData::Uniform(Complex64::new(re, im))),
                        _ => Err(invalid("ic", format!("cannot parse {name:?}"))),
                    };
                }
                name.parse::<BuiltinIc>()
                    .map(InitialData::Builtin)
                    .map_err(|_| invalid("ic", format!("expected IC1, IC2, uniform(v) or a list, got {name:?}")))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Grid {
    /// Empty means the kind's default family.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<Family>,
    /// Empty means the kind's default levels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_level: Option<usize>,
    /// Viscosities for `viscous-bridge`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub viscosities: Vec<f64>,
}

/// Knobs used by only some kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Params {
    /// Random cutoffs per level for `attractor-probe`.
    pub samples: usize,
    pub coeff_range: [f64; 2],
    /// Relative perturbation of the cutoff for `chaos-growth`.
    pub eps: f64,
    /// Boundary knots per accepted step for `rg-verify`.
    pub refine: usize,
    /// Rescaling ratio; estimated from the data when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Pass mark for `stationary-check` residuals and `rg-verify` discrepancies.
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            samples: 100,
            coeff_range: [0.0, 3.0],
            eps: 1e-13,
            refine: 4,
            rho: None,
            tolerance: 1e-6,
        }
    }
}

fn default_model() -> ModelSpec {
    ModelSpec::DYADIC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<IcSpec>,
    /// Builtin boundary name or `const(v, ...)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_span: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Shells whose deviations are written.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shells: Vec<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub params: Params,
}

/// Parses and validates a config; the result has every default applied.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.resolve()
}

impl ExperimentConfig {
    /// A config of the given kind with nothing set.
    pub fn new(kind: ExperimentKind, model: ModelSpec) -> Self {
        ExperimentConfig {
            kind,
            model,
            grid: Grid::default(),
            ic: None,
            bc: None,
            t_span: None,
            sample_times: None,
            dt: None,
            shells: Vec::new(),
            solver: SolverConfig::default(),
            seed: 0,
            out_dir: None,
            workers: None,
            params: Params::default(),
        }
    }

    /// Fills kind-dependent defaults and checks the result. Resolving twice
    /// is the same as resolving once.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let kind = self.kind;
        if self.grid.families.is_empty() {
            self.grid.families = match kind {
                ExperimentKind::ViscousRescaled => vec![Family::Viscous { shells: None }],
                ExperimentKind::ViscousBridge => Vec::new(),
                _ => vec![Family::canonical(1)],
            };
        }
        if self.grid.levels.is_empty() {
            self.grid.levels = kind.default_levels();
        }
        if kind == ExperimentKind::ViscousBridge && self.grid.viscosities.is_empty() {
            self.grid.viscosities = vec![1e-6, 1e-7, 1e-8];
        }
        if kind.uses_reference() && self.grid.reference_level.is_none() {
            let top = self.grid.levels.iter().copied().max().unwrap_or(0);
            self.grid.reference_level = Some(2 * top + 10);
        }
        if self.ic.is_none() {
            self.ic = Some(match kind {
                ExperimentKind::StationaryCheck => IcSpec::named("uniform(0.5)"),
                _ => IcSpec::named("IC2"),
            });
        }
        if self.bc.is_none() {
            self.bc = Some(match (kind, self.model.coupling) {
                (ExperimentKind::StationaryCheck, _) => "const(1)".into(),
                (_, Coupling::Dyadic) => "dyadic-default".into(),
                (_, Coupling::Gledzer) => "gledzer-default".into(),
                (_, Coupling::Sabra) => "sabra-default".into(),
            });
        }
        if self.t_span.is_none() {
            self.t_span = Some(match kind {
                ExperimentKind::StationaryCheck => [0.0, 60.0],
                _ => [0.0, 1.0],
            });
        }
        if self.shells.is_empty() {
            self.shells = vec![1];
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind;
        let [t0, t1] = self.t_span();
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(invalid("tSpan", format!("need t0 < t1, got [{t0}, {t1}]")));
        }
        if self.sample_times.is_some() && self.dt.is_some() {
            return Err(invalid("dt", "give either sampleTimes or dt, not both"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(times) = &self.sample_times {
            if times.is_empty() || times.iter().any(|&t| !(t >= t0 && t <= t1)) {
                return Err(invalid("sampleTimes", "every sample time must lie in tSpan"));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("sampleTimes", "must be strictly increasing"));
            }
        }
        self.solver
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        let bc = self.boundary()?;
        if bc.arity() != self.model.boundary_arity() {
            return Err(invalid(
                "bc",
                format!(
                    "{} needs {} boundary functions, {:?} has {}",
                    self.model.name(),
                    self.model.boundary_arity(),
                    self.bc_name(),
                    bc.arity()
                ),
            ));
        }
        self.initial_data()?;
        if self.shells.contains(&0) {
            return Err(invalid("shells", "shells are numbered from 1"));
        }
        for family in &self.grid.families {
            for &level in &self.grid.levels {
                family
                    .regularization(level)
                    .validate()
                    .map_err(|e| invalid("grid.families", e.to_string()))?;
            }
        }
        if let Some(reference) = self.grid.reference_level {
            if let Some(&top) = self.grid.levels.iter().max() {
                if reference <= top {
                    return Err(invalid(
                        "grid.referenceLevel",
                        format!("must exceed every level (largest {top}), got {reference}"),
                    ));
                }
            }
        }
        if self.grid.viscosities.iter().any(|nu| !(nu.is_finite() && *nu > 0.0)) {
            return Err(invalid("grid.viscosities", "viscosities must be positive"));
        }
        if self.grid.levels.is_empty() && kind != ExperimentKind::ViscousBridge {
            return Err(invalid("grid.levels", "no levels"));
        }
        let canonical_only = || {
            if self.grid.families.iter().all(|f| matches!(f, Family::Canonical { .. })) {
                Ok(())
            } else {
                Err(invalid("grid.families", format!("{} needs canonical families", kind.name())))
            }
        };
        let single_family = || {
            if self.grid.families.len() == 1 {
                Ok(())
            } else {
                Err(invalid("grid.families", format!("{} takes exactly one family", kind.name())))
            }
        };
        match kind {
            ExperimentKind::ChaosGrowth => {
                if self.model != ModelSpec::SABRA {
                    return Err(invalid("model", "chaos-growth runs on the sabra model"));
                }
                canonical_only()?;
                single_family()?;
                if !(self.params.eps > 0.0 && self.params.eps.is_finite()) {
                    return Err(invalid("params.eps", "must be positive"));
                }
            }
            ExperimentKind::AttractorProbe => {
                canonical_only()?;
                single_family()?;
                let [lo, hi] = self.params.coeff_range;
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(invalid("params.coeffRange", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
                }
                if self.params.samples == 0 {
                    return Err(invalid("params.samples", "must be positive"));
                }
            }
            ExperimentKind::RgVerify => {
                canonical_only()?;
                if self.params.refine == 0 {
                    return Err(invalid("params.refine", "must be positive"));
                }
            }
            ExperimentKind::StationaryCheck => {
                if self.model != ModelSpec::DYADIC {
                    return Err(invalid("model", "stationary-check runs on the dyadic model"));
                }
                if self.grid.families != [Family::canonical(1)] {
                    return Err(invalid("grid.families", "stationary-check uses the J = 1 cutoff family"));
                }
                if self.bc_name() != "const(1)" {
                    return Err(invalid("bc", "stationary-check needs the constant boundary const(1)"));
                }
            }
            ExperimentKind::ViscousRescaled => {
                if !self.grid.families.iter().all(|f| matches!(f, Family::Viscous { .. })) || self.grid.families.len() != 1 {
                    return Err(invalid("grid.families", "viscous-rescaled takes exactly one viscous family"));
                }
            }
            ExperimentKind::ViscousBridge => {
                if !self.grid.families.is_empty() {
                    return Err(invalid("grid.families", "viscous-bridge is set by grid.viscosities"));
                }
            }
            ExperimentKind::RgConvergence | ExperimentKind::Eigenmode => {
                let mut levels = self.grid.levels.clone();
                levels.sort_unstable();
                levels.dedup();
                if levels.len() < 3 || levels.windows(2).any(|w| w[1] != w[0] + 1) {
                    return Err(invalid("grid.levels", "need at least three consecutive levels"));
                }
            }
            ExperimentKind::SingleRun => {}
        }
        if let Some(0) = self.workers {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(())
    }

    pub fn t_span(&self) -> [f64; 2] {
        self.t_span.unwrap_or([0.0, 1.0])
    }

    pub fn bc_name(&self) -> &str {
        self.bc.as_deref().unwrap_or("")
    }

    pub fn boundary(&self) -> Result<BoundarySpec, ConfigError> {
        builtin_bc(self.bc_name()).map_err(|e| invalid("bc", e.to_string()))
    }

    pub fn initial_data(&self) -> Result<InitialData, ConfigError> {
        self.ic.as_ref().unwrap_or(&IcSpec::named("IC2")).initial_data()
    }

    /// `sampleTimes` as given, else `t0, t0 + dt, ...` up to `t1`, else 101
    /// uniform points.
    pub fn times(&self) -> Vec<f64> {
        let [t0, t1] = self.t_span();
        if let Some(times) = &self.sample_times {
            return times.clone();
        }
        let count = match self.dt {
            Some(dt) => ((t1 - t0) / dt * (1.0 + 1e-12)).floor() as usize,
            None => 100,
        };
        let step = self.dt.unwrap_or((t1 - t0) / 100.0);
        let mut times: Vec<f64> = (0..=count).map(|k| t0 + k as f64 * step).collect();
        if let Some(last) = times.last_mut() {
            if (t1 - *last).abs() <= 1e-12 * (t1 - t0) {
                *last = t1;
            } else {
                times.push(t1);
            }
        }
        times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(r#"{"kind": "single-run", "model": "dyadic"}"#).unwrap();
        assert_eq!(cfg.solver.rtol, 1e-10);
        assert_eq!(cfg.grid.families, vec![Family::canonical(1)]);
        assert_eq!(cfg.grid.levels, vec![20]);
        assert_eq!(cfg.bc.as_deref(), Some("dyadic-default"));
        assert_eq!(cfg.times().len(), 101);
        assert_eq!(cfg.clone().resolve().unwrap(), cfg);
    }

    #[test]
    fn chaos_needs_sabra() {
        let err = parse_config(r#"{"kind": "chaos-growth", "model": "dyadic"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { key: "model", .. }), "{err}");
        assert!(parse_config(r#"{"kind": "chaos-growth", "model": "sabra"}"#).is_ok());
    }

    #[test]
    fn schema_errors_name_the_key() {
        let err = parse_config(r#"{"kind": "single-run", "solver": {"rtol": "small"}}"#).unwrap_err();
        assert!(err.to_string().starts_with("solver.rtol"), "{err}");
        let err = parse_config(r#"{"kind": "single-run", "grid": {"levelz": [3]}}"#).unwrap_err();
        assert!(err.to_string().contains("levelz"), "{err}");
        let err = parse_config(r#"{"kind": "single-run", "extra": 1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err = parse_config(r#"{"kind": "no-such-kind"}"#).unwrap_err();
        assert!(err.to_string().starts_with("kind"), "{err}");
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            (r#"{"kind": "single-run", "model": "gledzer", "bc": "dyadic-default"}"#, "bc"),
            (r#"{"kind": "single-run", "tSpan": [1, 0]}"#, "tSpan"),
            (r#"{"kind": "single-run", "dt": 0.1, "sampleTimes": [0.5]}"#, "dt"),
            (r#"{"kind": "single-run", "sampleTimes": [2.0]}"#, "sampleTimes"),
            (r#"{"kind": "single-run", "ic": "IC3"}"#, "ic"),
            (r#"{"kind": "eigenmode", "grid": {"levels": [3, 5, 7]}}"#, "grid.levels"),
            (r#"{"kind": "eigenmode", "grid": {"levels": [3, 4, 5], "referenceLevel": 5}}"#, "grid.referenceLevel"),
            (r#"{"kind": "stationary-check", "bc": "dyadic-default"}"#, "bc"),
            (r#"{"kind": "attractor-probe", "params": {"coeffRange": [2, 1]}}"#, "params.coeffRange"),
            (r#"{"kind": "single-run", "grid": {"families": [{"type": "canonical", "j": 0}]}}"#, "grid.families"),
        ];
        for (text, key) in cases {
            match parse_config(text) {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn initial_data_forms() {
        let ic = |s: &str| serde_json::from_str::<IcSpec>(s).unwrap().initial_data().unwrap();
        assert_eq!(ic(r#""ic1""#), InitialData::Builtin(BuiltinIc::Ic1));
        assert_eq!(ic(r#""uniform(0.5)""#), InitialData::Uniform(Complex64::from(0.5)));
        assert_eq!(
            ic(r#"[1, [0.5, -2]]"#),
            InitialData::Literal(vec![Complex64::from(1.0), Complex64::new(0.5, -2.0)])
        );
    }

    #[test]
    fn dt_grid_ends_at_t1() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::SingleRun, ModelSpec::DYADIC);
        cfg.t_span = Some([0.0, 1.0]);
        cfg.dt = Some(0.1);
        let times = cfg.times();
        assert_eq!(times.len(), 11);
        assert_eq!(times[10], 1.0);
        cfg.dt = Some(0.3);
        assert_eq!(cfg.times(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }
}
