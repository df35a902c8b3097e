use agg_core::diagnostics::{energy_and_mass, linf_phi_tot};
use agg_core::equilibrium::{constant_equilibrium, Orientation};
use agg_core::grid::{AxisBc, Grid, ScalarBc};
use agg_core::params::Params;
use agg_core::picard::{vstar_seminorm, PicardConfig, Physics, State, Stepper};
use agg_core::scenarios::{build_problem, mode_amplitude, Problem, ScenarioConfig};
use agg_core::solvers::StokesTolerances;
use agg_core::verify::simulate;
use agg_core::Error;

fn small_grid(walls: bool) -> Grid {
    let h = if walls { AxisBc::Wall } else { AxisBc::Periodic };
    Grid::new(&[8.0, 8.0], &[16, 32], &[h]).unwrap()
}

fn params() -> Params {
    Params::new(3.0, 1.0, 0.05, 0.05, 10.0, 1.0, 1.5, 0.05).unwrap()
}

fn problem(bc: ScalarBc, walls: bool, amplitude: f64, orientation: Orientation) -> Problem {
    let cfg = ScenarioConfig::rayleigh_taylor(4.0, 0.7, orientation, amplitude);
    build_problem(&small_grid(walls), &params(), bc, &cfg, None, None).unwrap()
}

#[test]
fn zero_amplitude_gives_zero_state() {
    for bc in [ScalarBc::Neumann0, ScalarBc::Dirichlet0] {
        let pb = problem(bc, bc == ScalarBc::Dirichlet0, 0.0, Orientation::HeavyOnTop);
        assert!(pb.initial.phi.interior().iter().all(|&x| x == 0.0));
        assert_eq!(pb.initial.v.linf_norm(), 0.0);
        assert_eq!(pb.initial.q.linf_norm(), 0.0);
        assert!((pb.delta - (1.0 - pb.eq.psi_linf) / 2.0).abs() <= 1e-15);
        assert!(pb.eq.psi_linf > 0.8, "profile lost its kink: {}", pb.eq.psi_linf);
    }
}

#[test]
fn equilibrium_is_a_fixed_point() {
    for bc in [ScalarBc::Neumann0, ScalarBc::Dirichlet0] {
        let pb = problem(bc, bc == ScalarBc::Dirichlet0, 0.0, Orientation::HeavyOnTop);
        let stepper = Stepper::new(&pb.eq, &pb.phys, PicardConfig::default(), StokesTolerances::default()).unwrap();
        let (next, report) = stepper.picard_solve(&pb.initial, 1e-2).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert!(vstar_seminorm(&next.v, &next.phi) <= 1e-12);
        let mut worst = 0.0f64;
        simulate(&pb, PicardConfig::default(), StokesTolerances::default(), 1e-2, 20, |o| {
            worst = worst.max(vstar_seminorm(&o.state.v, &o.state.phi));
            Ok(())
        })
        .unwrap();
        assert!(worst <= 1e-9, "{worst}");
    }
}

#[test]
fn target_linf_fixes_delta() {
    let mut cfg = ScenarioConfig::rayleigh_taylor(4.0, 0.7, Orientation::HeavyOnTop, 0.0);
    cfg.target_linf = Some(0.9);
    let pb = build_problem(&small_grid(false), &params(), ScalarBc::Neumann0, &cfg, None, None).unwrap();
    assert!((linf_phi_tot(&pb.initial, &pb.eq) - 0.9).abs() <= 1e-12);
    assert!((pb.delta - 0.05).abs() <= 1e-12, "{}", pb.delta);
    assert!((pb.phys.params.delta - pb.delta).abs() == 0.0);
}

#[test]
fn delta_may_only_be_lowered() {
    let cfg = ScenarioConfig::rayleigh_taylor(4.0, 0.7, Orientation::HeavyOnTop, 0.01);
    let g = small_grid(false);
    let natural = build_problem(&g, &params(), ScalarBc::Neumann0, &cfg, None, None).unwrap().delta;
    let lower = build_problem(&g, &params(), ScalarBc::Neumann0, &cfg, Some(natural / 2.0), None).unwrap();
    assert_eq!(lower.delta, natural / 2.0);
    let err = build_problem(&g, &params(), ScalarBc::Neumann0, &cfg, Some(natural * 1.5), None).unwrap_err();
    assert!(matches!(err, Error::InvalidParams(_)), "{err}");
}

#[test]
fn oversized_seed_is_rejected() {
    let cfg = ScenarioConfig::rayleigh_taylor(4.0, 0.7, Orientation::HeavyOnTop, 1.5);
    let err = build_problem(&small_grid(false), &params(), ScalarBc::Neumann0, &cfg, None, None).unwrap_err();
    assert!(matches!(err, Error::Scenario(_)), "{err}");
}

#[test]
fn neumann_seed_is_mean_free() {
    let pb = problem(ScalarBc::Neumann0, false, 0.05, Orientation::HeavyOnTop);
    assert!(pb.initial.phi.mean().abs() <= 1e-15);
    let w = problem(ScalarBc::Neumann0, true, 0.05, Orientation::HeavyOnTop);
    assert!(w.initial.phi.mean().abs() <= 1e-15);
    assert!((mode_amplitude(&pb.initial.phi, &pb.shape) - 0.05).abs() <= 1e-14);
}

#[test]
fn constant_state_energy_and_mass() {
    let g = small_grid(false);
    let p = params();
    let phys = Physics::new(&p).unwrap();
    for c in [-0.4, 0.0, 0.25] {
        let eq = constant_equilibrium(&g, &p, &phys.pot, ScalarBc::Neumann0, c).unwrap();
        let em = energy_and_mass(&State::zero(&g, ScalarBc::Neumann0), &eq, &phys);
        let vol = g.volume();
        assert!((em.mass - c * vol).abs() <= 1e-13 * vol);
        assert!((em.e_free - vol * phys.pot.value(c)).abs() <= 1e-13 * vol);
        assert_eq!(em.e_kin, 0.0);
    }
}

#[test]
fn converged_steps_satisfy_the_step_equations() {
    for (bc, walls) in [(ScalarBc::Neumann0, false), (ScalarBc::Dirichlet0, true)] {
        let pb = problem(bc, walls, 0.05, Orientation::HeavyOnTop);
        let cfg = PicardConfig::default();
        let stepper = Stepper::new(&pb.eq, &pb.phys, cfg, StokesTolerances::default()).unwrap();
        let mut state = pb.initial.clone();
        for _ in 0..3 {
            let (next, report) = stepper.picard_solve(&state, 2e-3).unwrap();
            assert!(report.converged);
            assert!(report.ratios.iter().all(|&r| r < 1.0), "{:?}", report.ratios);
            let res = stepper.step_residual(&state, &next, 2e-3).unwrap();
            assert!(res.phase <= 10.0 * cfg.tol, "phase {}", res.phase);
            assert!(res.momentum <= 10.0 * cfg.tol, "momentum {}", res.momentum);
            state = next;
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let run = || {
        let pb = problem(ScalarBc::Neumann0, false, 0.05, Orientation::HeavyOnTop);
        let mut records = Vec::new();
        let last = simulate(&pb, PicardConfig::default(), StokesTolerances::default(), 2e-3, 5, |o| {
            records.push(o.record);
            Ok(())
        })
        .unwrap();
        (records, last.phi.values.data, last.v.comps)
    };
    let a = run();
    let b = run();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
}

#[test]
fn moving_runs_keep_mass_and_divergence() {
    let pb = problem(ScalarBc::Neumann0, false, 0.05, Orientation::HeavyOnTop);
    let em0 = energy_and_mass(&pb.initial, &pb.eq, &pb.phys);
    let mut worst_div = 0.0f64;
    let mut worst_mass = 0.0f64;
    simulate(&pb, PicardConfig::default(), StokesTolerances::default(), 2e-3, 10, |o| {
        worst_div = worst_div.max(o.record.max_div);
        worst_mass = worst_mass.max((o.record.mass - em0.mass).abs() / em0.abs_mass);
        Ok(())
    })
    .unwrap();
    assert!(worst_div <= 1e-8, "{worst_div}");
    assert!(worst_mass <= 1e-10, "{worst_mass}");
}

#[test]
fn linf_guard_aborts_with_step_context() {
    let pb = problem(ScalarBc::Neumann0, false, 0.05, Orientation::HeavyOnTop);
    let stepper = Stepper::new(&pb.eq, &pb.phys, PicardConfig::default(), StokesTolerances::default()).unwrap();
    let cfg = agg_core::picard::TimeConfig { dt: 2e-3, steps: 200, delta: pb.delta, amplitude_ramp: Some(1.5) };
    let mut seen = 0;
    let err = agg_core::picard::time_integrate(pb.initial.clone(), &stepper, &cfg, |_| {
        seen += 1;
        Ok(())
    })
    .unwrap_err();
    match &err {
        Error::AtStep { step, .. } => assert_eq!(*step, seen),
        other => panic!("{other}"),
    }
    assert!(matches!(err.root(), Error::LinfExcursion { .. }));
}
