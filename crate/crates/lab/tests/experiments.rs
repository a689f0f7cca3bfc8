use proptest::prelude::*;
use shellrg_core::{builtin_bc, BuiltinIc, InitialData, ModelSpec, SolverConfig};
use shellrg_lab::{
    attractor_probe, chaos_growth, deviations, limit_reference, run_levels, verify_rg_relation,
    viscous_bridge, ChaosConfig, Family, ProbeConfig, RunSpec,
};

fn dyadic(j: usize, ic: BuiltinIc, t_end: f64) -> RunSpec {
    RunSpec {
        model: ModelSpec::DYADIC,
        family: Family::canonical(j),
        ic: InitialData::Builtin(ic),
        bc: builtin_bc("dyadic-default").unwrap(),
        t_end,
        solver: SolverConfig::default().with_tolerances(1e-11, 1e-13),
    }
}

fn grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| start + (end - start) * k as f64 / (points - 1) as f64)
        .collect()
}

fn completed(spec: &RunSpec, levels: &[usize]) -> Vec<(usize, shellrg_core::Trajectory)> {
    levels
        .iter()
        .zip(run_levels(spec, levels, 4))
        .map(|(&l, r)| {
            let t = r.unwrap();
            assert!(t.status.is_completed(), "level {l}: {:?}", t.message);
            (l, t)
        })
        .collect()
}

#[test]
fn run_equal_to_reference_has_zero_deviation() {
    let spec = dyadic(1, BuiltinIc::Ic2, 1.0);
    let reference = limit_reference(&spec, 12, &[10]).unwrap();
    let series = deviations(&[(12, &reference.trajectory)], "J=1", &reference, &[1, 2, 5], &grid(0.0, 1.0, 21)).unwrap();
    assert_eq!(series.len(), 3);
    assert!(series.iter().all(|s| s.sup_norm() == 0.0));
}

#[test]
fn mismatched_provenance_is_rejected() {
    let spec = dyadic(1, BuiltinIc::Ic2, 0.5);
    let reference = limit_reference(&spec, 12, &[6]).unwrap();
    let other = RunSpec {
        bc: builtin_bc("const(1)").unwrap(),
        ..spec.clone()
    };
    let run = other.run_completed(6).unwrap();
    assert!(deviations(&[(6, &run)], "J=1", &reference, &[1], &[0.25]).is_err());
}

#[test]
fn deviations_alternate_in_sign_after_blowup() {
    let spec = dyadic(1, BuiltinIc::Ic2, 3.0);
    let levels: Vec<usize> = (10..=16).collect();
    let reference = limit_reference(&spec, 34, &levels).unwrap();
    let runs = completed(&spec, &levels);
    let pairs: Vec<_> = runs.iter().map(|(l, t)| (*l, t)).collect();
    for t in [1.5, 2.0, 2.5, 3.0] {
        let series = deviations(&pairs, "J=1", &reference, &[1], &[t]).unwrap();
        for w in series.windows(2) {
            let (a, b) = (w[0].values[0].re, w[1].values[0].re);
            assert!(a * b < 0.0, "t={t}, N={}: {a} then {b}", w[0].level);
        }
    }
}

#[test]
fn eigenmode_vanishes_before_blowup() {
    let spec = dyadic(1, BuiltinIc::Ic1, 2.0);
    let reference = limit_reference(&spec, 40, &[16]).unwrap();
    let run = spec.run_completed(16).unwrap();
    let times = grid(0.0, 2.0, 401);
    let shells: Vec<usize> = (1..=10).collect();
    let series = deviations(&[(16, &run)], "J=1", &reference, &shells, &times).unwrap();
    let norm_at = |k: usize| series.iter().map(|s| s.values[k].norm_sqr()).sum::<f64>().sqrt();
    let (mut before, mut peak) = (0.0f64, 0.0f64);
    for (k, &t) in times.iter().enumerate() {
        if t < 0.55 {
            before = before.max(norm_at(k));
        } else {
            peak = peak.max(norm_at(k));
        }
    }
    assert!(peak > 0.0);
    assert!(before < 1e-3 * peak, "pre-blowup {before:e} vs peak {peak:e}");
}

#[test]
fn doubling_the_reference_barely_moves_deviations() {
    let spec = dyadic(1, BuiltinIc::Ic2, 3.0);
    let times = grid(1.0, 3.0, 41);
    let run = spec.run_completed(10).unwrap();
    let near = limit_reference(&spec, 30, &[10]).unwrap();
    let far = limit_reference(&spec, 60, &[10]).unwrap();
    let a = &deviations(&[(10, &run)], "J=1", &near, &[1], &times).unwrap()[0];
    let b = &deviations(&[(10, &run)], "J=1", &far, &[1], &times).unwrap()[0];
    assert!(a.sup_distance(b) < 0.01 * b.sup_norm(), "{} vs {}", a.sup_distance(b), b.sup_norm());
}

#[test]
fn different_cutoffs_give_proportional_deviations() {
    let times = grid(0.5, 3.0, 101);
    let reference = limit_reference(&dyadic(1, BuiltinIc::Ic2, 3.0), 34, &[16]).unwrap();
    let shapes: Vec<_> = [1, 2]
        .iter()
        .map(|&j| {
            let run = dyadic(j, BuiltinIc::Ic2, 3.0).run_completed(16).unwrap();
            deviations(&[(16, &run)], "J", &reference, &[1], &times).unwrap().remove(0)
        })
        .collect();
    let (x, y) = (&shapes[0].values, &shapes[1].values);
    let c = x.iter().zip(y).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / x.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let resid = x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((b - a * c).norm()));
    assert!(resid < 0.02 * shapes[1].sup_norm(), "c = {c}, residual {resid:e}");
}

#[test]
fn rg_relation_tracks_solver_tolerance() {
    let bc = builtin_bc("dyadic-default").unwrap();
    let ic = InitialData::Builtin(BuiltinIc::Ic1);
    let check = |rtol: f64| {
        let solver = SolverConfig::default().with_tolerances(rtol, rtol * 1e-2);
        verify_rg_relation(ModelSpec::DYADIC, 1, 3, &ic, &bc, 0.5, &solver, 4).unwrap()
    };
    let loose = check(1e-6);
    let tight = check(1e-7);
    assert!(loose.discrepancy < 1e-4);
    assert!(tight.discrepancy * 5.0 <= loose.discrepancy, "{} vs {}", tight.discrepancy, loose.discrepancy);
}

#[test]
fn rg_relation_examples() {
    let solver = SolverConfig::default().with_tolerances(1e-10, 1e-12);
    let dyadic = verify_rg_relation(
        ModelSpec::DYADIC,
        1,
        3,
        &InitialData::Builtin(BuiltinIc::Ic1),
        &builtin_bc("dyadic-default").unwrap(),
        0.5,
        &solver,
        4,
    )
    .unwrap();
    let gledzer = verify_rg_relation(
        ModelSpec::GLEDZER,
        3,
        3,
        &InitialData::Builtin(BuiltinIc::Ic2),
        &builtin_bc("gledzer-swapped").unwrap(),
        0.5,
        &solver,
        4,
    )
    .unwrap();
    assert!(dyadic.discrepancy < 1e-6);
    assert!(gledzer.discrepancy < 1e-6);
}

#[test]
fn bridge_levels_are_maximal_on_a_real_run() {
    let nu = 1e-7;
    let problem = shellrg_core::Problem::new(
        ModelSpec::DYADIC,
        shellrg_core::RegularizationSpec::Viscous { nu },
        builtin_bc("dyadic-default").unwrap(),
    )
    .unwrap();
    let ic = InitialData::Builtin(BuiltinIc::Ic2).build(ModelSpec::DYADIC, problem.shells()).unwrap();
    let traj = shellrg_core::integrate(&problem, &ic, 0.0, 3.0, &SolverConfig::default()).unwrap();
    let bridge = viscous_bridge(&traj, nu, &grid(0.0, 3.0, 31)).unwrap();
    assert!(bridge.maximality_holds());
    assert!(bridge.flagged.iter().all(|f| !f));
    assert!(bridge.levels.iter().all(|&l| l > 0 && l < problem.shells()));
}

#[test]
fn chaos_growth_is_monotone_at_small_levels() {
    let cfg = ChaosConfig {
        model: ModelSpec::SABRA,
        j: 2,
        eps: 1e-9,
        levels: (6..=10).collect(),
        ic: InitialData::Builtin(BuiltinIc::Ic2),
        bc: builtin_bc("sabra-default").unwrap(),
        t_star: 1.0,
        solver: SolverConfig::default().with_tolerances(1e-12, 1e-14),
    };
    let points = chaos_growth(&cfg, 3).unwrap();
    assert!(points.iter().all(|p| p.status.is_completed()));
    assert!(points.windows(2).all(|w| w[1].separation > w[0].separation));
    assert_eq!(points, chaos_growth(&cfg, 1).unwrap());
}

fn probe(seed: u64) -> ProbeConfig {
    ProbeConfig {
        model: ModelSpec::GLEDZER,
        levels: vec![8, 9],
        samples: 4,
        coeff_range: (0.0, 3.0),
        j: 3,
        ic: InitialData::Builtin(BuiltinIc::Ic2),
        bc: builtin_bc("gledzer-swapped").unwrap(),
        t_star: 0.5,
        seed,
        solver: SolverConfig::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn probe_clouds_are_reproducible(seed in any::<u64>(), workers in 1usize..5) {
        let cfg = probe(seed);
        let a = attractor_probe(&cfg, 1).unwrap();
        let b = attractor_probe(&cfg, workers).unwrap();
        prop_assert_eq!(&a, &b);
        for r in &a.records {
            prop_assert!(r.coeffs.iter().all(|c| (0.0..=3.0).contains(c)));
            prop_assert_eq!(r.seed, seed);
        }
    }
}
