use num_complex::Complex64;
use proptest::prelude::*;
use shellrg_core::analysis::{detect_blowup, stationary_dyadic_state, BlowupOptions};
use shellrg_core::symmetry::{transform_bc, transform_ic, transform_sample, Symmetry};
use shellrg_core::{
    builtin_bc, builtin_ic, integrate, BoundarySpec, Method, ModelSpec, Problem, RegularizationSpec,
    ShellState, SolverConfig, Status, Trajectory,
};

fn default_bc(model: ModelSpec) -> BoundarySpec {
    let name = match model {
        ModelSpec::DYADIC => "dyadic-default",
        ModelSpec::GLEDZER => "gledzer-swapped",
        _ => "sabra-default",
    };
    builtin_bc(name).unwrap()
}

fn run(problem: &Problem, ic: &ShellState, t0: f64, t1: f64, cfg: &SolverConfig) -> Trajectory {
    let traj = integrate(problem, ic, t0, t1, cfg).unwrap();
    assert_eq!(traj.status, Status::Completed, "{:?}", traj.message);
    traj
}

fn canonical(model: ModelSpec, n: usize) -> (Problem, ShellState) {
    let problem = Problem::new(model, RegularizationSpec::canonical(n, 1), default_bc(model)).unwrap();
    let ic = builtin_ic("IC2", model, problem.shells()).unwrap();
    (problem, ic)
}

fn max_diff(a: &ShellState, b: &ShellState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

const MODELS: [ModelSpec; 3] = [ModelSpec::DYADIC, ModelSpec::GLEDZER, ModelSpec::SABRA];

#[test]
fn zero_state_with_zero_forcing_stays_zero() {
    for model in MODELS {
        for method in [Method::StiffAdaptive, Method::ExplicitAdaptive] {
            let zeros = vec![Complex64::new(0.0, 0.0); model.boundary_arity()];
            let problem = Problem::new(model, RegularizationSpec::canonical(4, 2), BoundarySpec::constant(&zeros)).unwrap();
            let ic = ShellState::zeros(model.scalar_kind(), problem.shells()).unwrap();
            let traj = run(&problem, &ic, 0.0, 3.0, &SolverConfig::default().with_method(method));
            assert!(traj.final_state().as_flat().iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn single_shell_matches_closed_form() {
    // du/dt = 2 (1 - u^2)  =>  u = tanh(2 t + atanh(0.3))
    let problem = Problem::new(
        ModelSpec::DYADIC,
        RegularizationSpec::canonical(0, 1),
        BoundarySpec::constant(&[Complex64::from(1.0)]),
    )
    .unwrap();
    let ic = ShellState::real(vec![0.3]).unwrap();
    for method in [Method::StiffAdaptive, Method::ExplicitAdaptive] {
        let traj = run(&problem, &ic, 0.0, 8.0, &SolverConfig::default().with_method(method));
        let mut last = 0.3;
        for k in 0..=80 {
            let t = 0.1 * k as f64;
            let exact = (2.0 * t + 0.3f64.atanh()).tanh();
            let got = traj.shell(1, t).unwrap().re;
            assert!((got - exact).abs() < 1e-8, "{method:?} t={t}: {got} vs {exact}");
            assert!(got >= last - 1e-9);
            last = got;
        }
        assert!((traj.final_state().amplitude(1).re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn stored_states_are_reproduced_exactly() {
    let (problem, ic) = canonical(ModelSpec::SABRA, 8);
    let traj = run(&problem, &ic, 0.0, 1.0, &SolverConfig::default());
    assert_eq!(traj.sample(0.0).unwrap(), ic);
    for k in 0..traj.times().len() {
        let t = traj.times()[k];
        assert_eq!(traj.sample_flat(t).unwrap(), traj.stored_flat(k));
    }
    assert!(traj.sample(1.5).is_err());
    assert!(traj.sample(-0.1).is_err());
}

#[test]
fn derivative_matches_central_differences() {
    for method in [Method::StiffAdaptive, Method::ExplicitAdaptive] {
        let (problem, ic) = canonical(ModelSpec::DYADIC, 6);
        let traj = run(&problem, &ic, 0.0, 1.0, &SolverConfig::default().with_method(method));
        for t in [0.2, 0.45, 0.77] {
            let d = traj.sample_derivative_flat(t).unwrap();
            let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let mut errors = Vec::new();
            for h in [1e-3, 5e-4] {
                let plus = traj.sample_flat(t + h).unwrap();
                let minus = traj.sample_flat(t - h).unwrap();
                let err = plus
                    .iter()
                    .zip(&minus)
                    .zip(&d)
                    .fold(0.0f64, |m, ((p, q), dv)| m.max(((p - q) / (2.0 * h) - dv).abs()));
                errors.push(err / scale);
            }
            // second order: halving h cuts the error about fourfold, unless
            // it is already at round-off level
            assert!(errors[1] < 1e-5, "{method:?} t={t} {errors:?}");
            assert!(errors[1] < 0.4 * errors[0] || errors[1] < 1e-9, "{method:?} t={t} {errors:?}");
        }
    }
}

#[test]
fn dense_output_matches_rhs_at_step_ends() {
    let (problem, ic) = canonical(ModelSpec::GLEDZER, 7);
    let traj = run(&problem, &ic, 0.0, 1.0, &SolverConfig::default());
    for &t in traj.times().iter().skip(1).step_by(7) {
        let y = traj.sample_flat(t).unwrap();
        let d = traj.sample_derivative_flat(t).unwrap();
        let mut f = vec![0.0; y.len()];
        problem.rhs_flat(t, &y, &mut f);
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let err = d.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-4 * scale, "t={t} err={err}");
    }
}

#[test]
fn stiff_and_explicit_agree_on_small_runs() {
    for model in [ModelSpec::DYADIC, ModelSpec::GLEDZER] {
        for n in [3, 6, 10] {
            let (problem, ic) = canonical(model, n);
            let cfg = SolverConfig::default();
            let a = run(&problem, &ic, 0.0, 1.0, &cfg);
            let b = run(&problem, &ic, 0.0, 1.0, &cfg.clone().with_method(Method::ExplicitAdaptive));
            for t in [0.25, 0.5, 1.0] {
                let (x, y) = (a.sample(t).unwrap(), b.sample(t).unwrap());
                let tol = 100.0 * (cfg.atol + cfg.rtol * x.max_modulus());
                assert!(max_diff(&x, &y) < tol, "{} n={n} t={t}: {}", model.name(), max_diff(&x, &y));
            }
        }
    }
}

#[test]
fn tightening_tolerances_converges() {
    // Sabra is chaotic enough at these levels that global error grows far
    // past the local tolerance; it is covered by the explicit case below.
    let cases = [
        (ModelSpec::DYADIC, 10, Method::StiffAdaptive),
        (ModelSpec::DYADIC, 20, Method::ExplicitAdaptive),
        (ModelSpec::GLEDZER, 10, Method::StiffAdaptive),
        (ModelSpec::GLEDZER, 20, Method::ExplicitAdaptive),
        (ModelSpec::SABRA, 6, Method::ExplicitAdaptive),
    ];
    for (model, n, method) in cases {
        let (problem, ic) = canonical(model, n);
        let loose = SolverConfig::default().with_method(method).with_tolerances(1e-8, 1e-10);
        let tight = loose.clone().with_tolerances(5e-9, 5e-11);
        let a = run(&problem, &ic, 0.0, 1.0, &loose).final_state();
        let b = run(&problem, &ic, 0.0, 1.0, &tight).final_state();
        let bound = 10.0 * (loose.atol + loose.rtol * a.max_modulus());
        assert!(max_diff(&a, &b) < bound, "{} {method:?}: {}", model.name(), max_diff(&a, &b));
    }
}

#[test]
fn energy_balance_is_tight() {
    use shellrg_core::energy::{energy_balance_drift, energy_balance_residual};
    for model in MODELS {
        for reg in [
            RegularizationSpec::canonical(2, 1),
            RegularizationSpec::canonical(8, 2),
            RegularizationSpec::Auxiliary { n: 6, beta: 1.0 },
            RegularizationSpec::Viscous { nu: 1e-3 },
        ] {
            let problem = Problem::new(model, reg.clone(), default_bc(model)).unwrap();
            let ic = builtin_ic("IC2", model, problem.shells()).unwrap();
            let cfg = SolverConfig::default().with_tolerances(1e-11, 1e-13);
            let traj = run(&problem, &ic, 0.0, 2.0, &cfg);
            let times: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64).collect();
            let res = energy_balance_residual(&traj, &times).unwrap();
            assert!(res.exact_identity);
            // the rate scale is set by the largest term of the balance
            let scale = 1.0 + res.max_energy() * 2f64.powi(problem.shells() as i32).min(1e6);
            assert!(res.max_abs() < 1e-5 * scale, "{} {}: {}", model.name(), reg.label(), res.max_abs());
            let drift = energy_balance_drift(&traj).unwrap();
            assert!(drift.max_abs() < 1e-7 * drift.max_energy, "{} {}: drift {}", model.name(), reg.label(), drift.max_abs());
        }
    }
}

#[test]
fn dyadic_norm_respects_energy_bound() {
    use shellrg_core::energy::energy_bound;
    for n in [2, 8, 14] {
        let (problem, ic) = canonical(ModelSpec::DYADIC, n);
        let traj = run(&problem, &ic, 0.0, 3.0, &SolverConfig::default());
        let times: Vec<f64> = (1..=30).map(|k| 0.1 * k as f64).collect();
        for (t, norm, bound) in energy_bound(&traj, &times).unwrap() {
            assert!(norm <= bound * (1.0 + 1e-6), "n={n} t={t}: {norm} > {bound}");
        }
    }
}

#[test]
fn closed_form_stationary_state_persists() {
    let bc = BoundarySpec::constant(&[Complex64::from(1.0)]);
    for n in [0, 3, 9] {
        let problem = Problem::new(ModelSpec::DYADIC, RegularizationSpec::canonical(n, 1), bc.clone()).unwrap();
        let ic = stationary_dyadic_state(n);
        let traj = run(&problem, &ic, 0.0, 5.0, &SolverConfig::default());
        assert!(max_diff(&traj.final_state(), &ic) < 1e-9, "n={n}");
    }
}

// Through the blowup at very tight tolerances the multistep order collapses
// and its step underflows; the run must continue with the implicit
// Runge-Kutta fallback and agree with a looser run that never needed it.
#[test]
fn step_underflow_falls_back_and_completes() {
    let reg = RegularizationSpec::Viscous { nu: (-4.0 * 40.0 / 3.0f64).exp2() };
    let problem = Problem::new(ModelSpec::DYADIC, reg, default_bc(ModelSpec::DYADIC)).unwrap();
    let ic = builtin_ic("IC1", ModelSpec::DYADIC, problem.shells()).unwrap();
    let tight = run(&problem, &ic, 0.0, 1.5, &SolverConfig::default().with_tolerances(1e-13, 1e-16));
    let loose = run(&problem, &ic, 0.0, 1.5, &SolverConfig::default().with_tolerances(1e-11, 1e-13));
    assert!(tight.stats.fallback_steps > 0);
    assert_eq!(loose.stats.fallback_steps, 0);
    for k in 0..=30 {
        let t = 0.05 * k as f64;
        let (a, b) = (tight.sample(t).unwrap(), loose.sample(t).unwrap());
        let diff = a.amplitudes().iter().zip(b.amplitudes()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(diff < 1e-8, "t={t}: {diff}");
    }
}

#[test]
fn stiff_method_handles_fine_viscosity() {
    let nu = 2f64.powi(-40);
    let reg = RegularizationSpec::Viscous { nu };
    let problem = Problem::with_shells(ModelSpec::DYADIC, reg, default_bc(ModelSpec::DYADIC), 40).unwrap();
    let ic = builtin_ic("IC2", ModelSpec::DYADIC, 40).unwrap();
    let cfg = SolverConfig::default();
    let short = run(&problem, &ic, 0.0, 1.0, &cfg);
    let long = run(&problem, &ic, 0.0, 2.0, &cfg);
    assert!(long.final_state().as_flat().iter().all(|v| v.is_finite()));
    assert!(
        long.step_count() <= 3 * short.step_count() + 100,
        "{} vs {}",
        long.step_count(),
        short.step_count()
    );
}

#[test]
fn guard_and_budget_abort() {
    let (problem, ic) = canonical(ModelSpec::DYADIC, 10);
    let cfg = SolverConfig {
        blowup_guard: 1.5,
        ..SolverConfig::default()
    };
    let traj = integrate(&problem, &ic, 0.0, 5.0, &cfg).unwrap();
    match traj.status {
        Status::AbortedNonfinite { last_good_time } => {
            assert!(last_good_time < 5.0);
            assert_eq!(last_good_time, traj.t_end());
        }
        other => panic!("expected guard abort, got {other:?}"),
    }
    let cfg = SolverConfig {
        max_steps: 5,
        ..SolverConfig::default()
    };
    let traj = integrate(&problem, &ic, 0.0, 5.0, &cfg).unwrap();
    assert!(matches!(traj.status, Status::AbortedBudget { .. }));
    assert_eq!(traj.step_count(), 5);
}

#[test]
fn rejects_bad_requests() {
    let (problem, ic) = canonical(ModelSpec::DYADIC, 4);
    assert!(integrate(&problem, &ic, 1.0, 1.0, &SolverConfig::default()).is_err());
    let short = ShellState::real(vec![0.1; 3]).unwrap();
    assert!(integrate(&problem, &short, 0.0, 1.0, &SolverConfig::default()).is_err());
    let bad = SolverConfig::default().with_tolerances(-1.0, 1e-12);
    assert!(integrate(&problem, &ic, 0.0, 1.0, &bad).is_err());
}

#[test]
fn blowup_time_stable_under_longer_horizon() {
    let problem = Problem::new(
        ModelSpec::DYADIC,
        RegularizationSpec::canonical(14, 1),
        default_bc(ModelSpec::DYADIC),
    )
    .unwrap();
    let ic = builtin_ic("IC1", ModelSpec::DYADIC, problem.shells()).unwrap();
    let cfg = SolverConfig::default();
    let opts = BlowupOptions::default();
    let short = detect_blowup(&run(&problem, &ic, 0.0, 2.0, &cfg), &opts).unwrap();
    let long = detect_blowup(&run(&problem, &ic, 0.0, 4.0, &cfg), &opts).unwrap();
    assert!(short.time > 0.0 && short.time < 2.0);
    assert!(short.bracket.0 <= short.time && short.time <= short.bracket.1);
    assert!((short.time - long.time).abs() < 1e-3, "{} vs {}", short.time, long.time);
}

#[test]
fn decaying_solution_has_no_blowup() {
    let problem = Problem::new(
        ModelSpec::DYADIC,
        RegularizationSpec::canonical(6, 1),
        BoundarySpec::constant(&[Complex64::from(0.0)]),
    )
    .unwrap();
    let ic = builtin_ic("IC2", ModelSpec::DYADIC, problem.shells()).unwrap();
    let traj = run(&problem, &ic, 0.0, 2.0, &SolverConfig::default());
    assert!(detect_blowup(&traj, &BlowupOptions::default()).is_err());
}

fn split_case(model: ModelSpec, n: usize, split: f64, method: Method) -> Result<(), TestCaseError> {
    let (problem, ic) = canonical(model, n);
    let cfg = SolverConfig::default().with_method(method);
    let whole = run(&problem, &ic, 0.0, 1.0, &cfg);
    let first = run(&problem, &ic, 0.0, split, &cfg);
    let second = run(&problem, &first.final_state(), split, 1.0, &cfg);
    let a = whole.final_state();
    let b = second.final_state();
    let tol = 50.0 * (cfg.atol + cfg.rtol * a.max_modulus());
    prop_assert!(max_diff(&a, &b) < tol, "{} n={} split={}: {}", model.name(), n, split, max_diff(&a, &b));
    Ok(())
}

// Cutoff Sabra runs are chaotic and non-stiff at these levels: the explicit
// method keeps global error well below the symmetry tolerance. The auxiliary
// damping on the long tail is stiff.
fn symmetry_config(model: ModelSpec, reg: &RegularizationSpec) -> SolverConfig {
    let canonical = matches!(reg, RegularizationSpec::CanonicalCutoff { .. });
    let method = if model.is_complex() && canonical {
        Method::ExplicitAdaptive
    } else {
        Method::StiffAdaptive
    };
    SolverConfig::default().with_method(method).with_tolerances(1e-12, 1e-14)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn restart_matches_one_shot(
        model in prop::sample::select(MODELS.to_vec()),
        n in 2usize..12,
        split in 0.05f64..0.95,
        explicit in any::<bool>(),
    ) {
        let method = if explicit { Method::ExplicitAdaptive } else { Method::StiffAdaptive };
        split_case(model, n, split, method)?;
    }

    #[test]
    fn time_scaling_is_a_symmetry(
        model in prop::sample::select(MODELS.to_vec()),
        alpha in prop::sample::select(vec![0.5, 2.0]),
        n in 2usize..10,
        auxiliary in any::<bool>(),
    ) {
        let reg = if auxiliary {
            RegularizationSpec::Auxiliary { n, beta: 1.0 }
        } else {
            RegularizationSpec::canonical(n, 2)
        };
        let bc = default_bc(model);
        let problem = Problem::new(model, reg, bc.clone()).unwrap();
        let ic = builtin_ic("IC2", model, problem.shells()).unwrap();
        let cfg = symmetry_config(model, &problem.reg);
        let base = run(&problem, &ic, 0.0, alpha, &cfg);
        let sym = Symmetry::TimeScale { alpha };
        let tbc = transform_bc(sym, model, &bc, None, 1).unwrap();
        let tproblem = Problem::with_shells(model, problem.reg.clone(), tbc, problem.shells()).unwrap();
        let tic = transform_ic(sym, model, &ic).unwrap();
        let moved = run(&tproblem, &tic, 0.0, 1.0, &cfg);
        for t in [0.3, 0.7, 1.0] {
            let expected = transform_sample(sym, &base, t).unwrap();
            let got = moved.sample(t).unwrap();
            let scale = expected.max_modulus().max(1.0);
            prop_assert!(max_diff(&expected, &got) < 1e-7 * scale, "t={} diff={}", t, max_diff(&expected, &got));
        }
    }

    #[test]
    fn sabra_phase_rotation_is_a_symmetry(
        seed_m1 in -3.0f64..3.0,
        seed_0 in -3.0f64..3.0,
        n in 2usize..10,
    ) {
        let model = ModelSpec::SABRA;
        let (problem, ic) = canonical(model, n);
        let cfg = symmetry_config(model, &problem.reg);
        let base = run(&problem, &ic, 0.0, 1.0, &cfg);
        let sym = Symmetry::Phase { seed_m1, seed_0 };
        let tbc = transform_bc(sym, model, &problem.bc, None, 1).unwrap();
        let tproblem = Problem::with_shells(model, problem.reg.clone(), tbc, problem.shells()).unwrap();
        let moved = run(&tproblem, &transform_ic(sym, model, &ic).unwrap(), 0.0, 1.0, &cfg);
        for t in [0.4, 1.0] {
            let expected = transform_sample(sym, &base, t).unwrap();
            let got = moved.sample(t).unwrap();
            prop_assert!(max_diff(&expected, &got) < 1e-7 * expected.max_modulus().max(1.0));
        }
    }
}
