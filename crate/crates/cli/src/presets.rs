//! Named experiment bundles that regenerate the data behind each published
//! figure, at desk scale where the original sizes are out of reach.

use shellrg_core::{Method, ModelSpec, SolverConfig};
use shellrg_lab::Family;

use crate::config::{ExperimentConfig, ExperimentKind, IcSpec};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// `(subdirectory, config)` pairs, run in order.
    pub parts: fn() -> Vec<(&'static str, ExperimentConfig)>,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1-dyadic-convergence",
        description: "Dyadic cutoffs J = 1, 2, 3 at N = 10..20 against N = 40, both initial \
                      conditions, b_0 = 2 - cos t: deviation series, eigenvalue estimate, \
                      prefactors and the collapsed eigenmode on shells 1..4.",
        parts: fig1,
    },
    Preset {
        name: "fig2-auxiliary-viscous",
        description: "IC2 on the dyadic model: the canonical and auxiliary N = 20 runs, auxiliary \
                      beta = 1 eigenmode deviations at N = 15..22 (26 in the original; reduced for \
                      run time), and the bridge level N_t and beta_t for nu = 1e-6 .. 1e-10.",
        parts: fig2,
    },
    Preset {
        name: "fig3-viscous-rescaled",
        description: "Viscous runs with nu_N = 2^(-4N/3), N = 16..26, IC1, deviations from \
                      N = 50 divided by (-1/2)^N on shell 1.",
        parts: fig3,
    },
    Preset {
        name: "fig4-5-gledzer-attractor",
        description: "Gledzer J = 3 with b_(-1) = 2 + sin t, b_0 = 1 and IC2: trajectories for \
                      N = 20..34 (30..50 in the original) to t = 0.5, and 100 random-cutoff probes \
                      at N = 24 and 30 (40..80 in the original) with coefficients in [0, 3].",
        parts: fig4_5,
    },
    Preset {
        name: "fig6-sabra-chaos",
        description: "Sabra J = 2 separation growth under a relative cutoff perturbation: \
                      eps = 1e-13 for N = 1..15 with IC1 at t = 3 and IC2 at t = 1, plus the \
                      eps = 1e-9 desk mode for IC2, N = 6..13.",
        parts: fig6,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

fn base(kind: ExperimentKind, model: ModelSpec, ic: &str, t_end: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, model);
    cfg.ic = Some(IcSpec::named(ic));
    cfg.t_span = Some([0.0, t_end]);
    cfg
}

fn resolved(cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.resolve().expect("presets are valid")
}

fn fig1() -> Vec<(&'static str, ExperimentConfig)> {
    ["IC1", "IC2"]
        .into_iter()
        .zip(["ic1", "ic2"])
        .map(|(ic, dir)| {
            let mut cfg = base(ExperimentKind::Eigenmode, ModelSpec::DYADIC, ic, 3.0);
            cfg.bc = Some("dyadic-default".into());
            cfg.grid.families = (1..=3).map(Family::canonical).collect();
            cfg.grid.levels = (10..=20).collect();
            cfg.grid.reference_level = Some(40);
            cfg.shells = vec![1, 2, 3, 4];
            cfg.dt = Some(0.01);
            cfg.solver = SolverConfig::default().with_tolerances(1e-11, 1e-13);
            (dir, resolved(cfg))
        })
        .collect()
}

fn fig2() -> Vec<(&'static str, ExperimentConfig)> {
    let solver = SolverConfig::default().with_tolerances(1e-11, 1e-13);
    let mut runs = base(ExperimentKind::SingleRun, ModelSpec::DYADIC, "IC2", 3.0);
    runs.grid.families = vec![Family::canonical(1), Family::Auxiliary { beta: 1.0, shells: None }];
    runs.grid.levels = vec![20];
    runs.dt = Some(0.01);
    runs.solver = solver.clone();

    let mut aux = base(ExperimentKind::Eigenmode, ModelSpec::DYADIC, "IC2", 3.0);
    aux.grid.families = vec![Family::Auxiliary { beta: 1.0, shells: None }];
    aux.grid.levels = (15..=22).collect();
    aux.grid.reference_level = Some(54);
    aux.dt = Some(0.01);
    aux.solver = solver.clone();

    let mut bridge = base(ExperimentKind::ViscousBridge, ModelSpec::DYADIC, "IC2", 3.0);
    bridge.grid.viscosities = vec![1e-6, 1e-7, 1e-8, 1e-9, 1e-10];
    bridge.dt = Some(0.01);
    bridge.solver = solver;
    vec![
        ("solutions", resolved(runs)),
        ("auxiliary", resolved(aux)),
        ("bridge", resolved(bridge)),
    ]
}

fn fig3() -> Vec<(&'static str, ExperimentConfig)> {
    let mut cfg = base(ExperimentKind::ViscousRescaled, ModelSpec::DYADIC, "IC1", 3.0);
    cfg.grid.levels = (16..=26).collect();
    cfg.grid.reference_level = Some(50);
    cfg.dt = Some(0.005);
    cfg.solver = SolverConfig::default().with_tolerances(1e-13, 1e-16);
    vec![("rescaled", resolved(cfg))]
}

fn fig4_5() -> Vec<(&'static str, ExperimentConfig)> {
    let solver = SolverConfig::default().with_tolerances(1e-10, 1e-13);
    let mut runs = base(ExperimentKind::SingleRun, ModelSpec::GLEDZER, "IC2", 0.5);
    runs.bc = Some("gledzer-swapped".into());
    runs.grid.families = vec![Family::canonical(3)];
    runs.grid.levels = (20..=34).collect();
    runs.dt = Some(0.005);
    runs.solver = solver.clone();

    let mut probes = base(ExperimentKind::AttractorProbe, ModelSpec::GLEDZER, "IC2", 0.5);
    probes.bc = Some("gledzer-swapped".into());
    probes.grid.families = vec![Family::canonical(3)];
    probes.grid.levels = vec![24, 30];
    probes.params.samples = 100;
    probes.params.coeff_range = [0.0, 3.0];
    probes.seed = 2024;
    probes.solver = solver;
    vec![("trajectories", resolved(runs)), ("cloud", resolved(probes))]
}

fn fig6() -> Vec<(&'static str, ExperimentConfig)> {
    let solver = SolverConfig::default()
        .with_method(Method::ExplicitAdaptive)
        .with_tolerances(1e-12, 1e-14);
    let make = |ic: &str, t_end: f64, eps: f64, levels: std::ops::RangeInclusive<usize>| {
        let mut cfg = base(ExperimentKind::ChaosGrowth, ModelSpec::SABRA, ic, t_end);
        cfg.grid.families = vec![Family::canonical(2)];
        cfg.grid.levels = levels.collect();
        cfg.params.eps = eps;
        cfg.solver = solver.clone();
        resolved(cfg)
    };
    vec![
        ("ic1-eps1e-13", make("IC1", 3.0, 1e-13, 1..=15)),
        ("ic2-eps1e-13", make("IC2", 1.0, 1e-13, 1..=15)),
        ("ic2-eps1e-9", make("IC2", 1.0, 1e-9, 6..=13)),
    ]
}
