use nlbn_core::chain::{
    equivalence_check, lift_to_system, solve_system_mpa, system_residual, ChainFunctional, SystemState,
};
use nlbn_core::energy::{energy_scalar, ProblemConfig};
use nlbn_core::solver::{solve_nehari, SolveConfig};
use nlbn_core::spectral::{build_box_basis, SpectralField};
use proptest::prelude::*;

fn config(n: usize, frac: f64, m: u32) -> SolveConfig {
    let b = build_box_basis(&[1.0, 1.0], &[n, n]).unwrap();
    let threshold = b.lambda1().powi(m as i32 + 1);
    SolveConfig::new(ProblemConfig::new(&b, frac * threshold, 3.0, m).unwrap())
}

#[test]
fn lifted_scalar_solutions_solve_the_system() {
    for m in 1..=3 {
        let cfg = config(16, 0.5, m);
        let scalar = solve_nehari(&cfg).unwrap();
        assert!(scalar.converged);
        let report = equivalence_check(&scalar.state, &cfg.problem, scalar.grad_tol).unwrap();
        assert!(report.pass, "m = {m}: {:?}", report.residuals);
        assert_eq!(report.residuals.len(), m as usize + 1);
        // The v-equations hold exactly by construction.
        for r in &report.residuals[1..] {
            assert!(*r < 1e-12);
        }
        let lifted = lift_to_system(&scalar.state, &cfg.problem).unwrap();
        let j = ChainFunctional::new(&cfg.problem).unwrap().value(&lifted).unwrap();
        let f = energy_scalar(&scalar.state, &cfg.problem).energy;
        assert!((j - f).abs() < 1e-10 * f.abs());
        // Positivity carries over to every component.
        for v in &lifted.v {
            assert!(v.min_interior() > 0.0);
        }
    }
}

#[test]
fn system_descent_reproduces_the_scalar_level() {
    for m in 1..=3 {
        let cfg = config(16, 0.5, m);
        let scalar = solve_nehari(&cfg).unwrap();
        let system = solve_system_mpa(&cfg).unwrap();
        assert!(system.converged, "m = {m}");
        assert!((system.level - scalar.energy_level).abs() < 1e-3 * scalar.energy_level);
        let diff = system.state.u.sub(&scalar.state).h1_norm() / scalar.state.h1_norm();
        assert!(diff < 1e-3, "m = {m}: {diff}");
        assert!(system.state.u.min_interior() > 0.0);
        for v in &system.state.v {
            assert!(v.min_interior() > 0.0);
        }
    }
}

#[test]
fn residual_edge_cases() {
    let cfg = config(8, 0.5, 2).problem;
    let zero = SystemState::zeros(&cfg);
    assert!(system_residual(&zero, &cfg).unwrap().iter().all(|r| *r == 0.0));

    let (_, phi) = nlbn_core::spectral::first_eigenpair(&cfg.basis);
    let mut lifted = lift_to_system(&phi, &cfg).unwrap();
    assert!(system_residual(&lifted, &cfg).unwrap()[1..].iter().all(|r| *r < 1e-12));
    lifted.v[0] = lifted.v[0].scaled(2.0);
    assert!(system_residual(&lifted, &cfg).unwrap()[1] > 1e-3);

    let raw = (0..cfg.basis.len()).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
    let junk = SpectralField::from_coeffs(&cfg.basis, raw).unwrap();
    let report = equivalence_check(&junk, &cfg, 1e-8).unwrap();
    assert!(!report.pass);
    assert!(report.residuals[0] > 1e-3);

    assert!(SystemState::new(phi.clone(), vec![phi.clone()], &cfg).is_err());
    assert!(lift_to_system(&phi, &cfg.with_gamma(0.0)).is_err());
}

#[test]
fn coupling_vanishes_like_sqrt_gamma() {
    // m = 1: v = √γ(-Δ)^{-1}u, so ‖v‖/√γ tends to a constant as γ → 0.
    let base = config(12, 0.0, 1);
    let t = base.problem.threshold();
    let ratios: Vec<f64> = [1e-6, 1e-5, 1e-4]
        .iter()
        .map(|f| {
            let cfg = base.with_gamma(f * t);
            let system = solve_system_mpa(&cfg).unwrap();
            assert!(system.converged);
            system.state.v[0].l2_norm() / cfg.problem.gamma.sqrt()
        })
        .collect();
    assert!((ratios[0] - ratios[2]).abs() < 1e-3 * ratios[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chain_identity_reproduces_the_scalar_equation(
        raw in prop::collection::vec(-1.0f64..1.0, 36),
        frac in 0.05f64..0.95,
        m in 1u32..4,
    ) {
        // The u-equation residual of a lift equals the scalar residual in H^{-1}.
        let cfg = config(6, frac, m).problem;
        let u = SpectralField::from_coeffs(&cfg.basis, raw).unwrap();
        let lifted = lift_to_system(&u, &cfg).unwrap();
        let res = system_residual(&lifted, &cfg).unwrap();
        let scalar = energy_scalar(&u, &cfg).gradient_norm;
        prop_assert!((res[0] - scalar).abs() < 1e-10 * (1.0 + scalar));
        for r in &res[1..] {
            prop_assert!(*r < 1e-10 * (1.0 + scalar));
        }
    }

    #[test]
    fn chain_gradient_vanishes_in_v_at_any_lift(raw in prop::collection::vec(-1.0f64..1.0, 36), m in 1u32..4) {
        let cfg = config(6, 0.4, m).problem;
        let u = SpectralField::from_coeffs(&cfg.basis, raw).unwrap();
        let lifted = lift_to_system(&u, &cfg).unwrap();
        let g = ChainFunctional::new(&cfg).unwrap().riesz_gradient(&lifted).unwrap();
        for v in &g.v {
            prop_assert!(v.h1_norm() < 1e-10 * (1.0 + u.h1_norm()));
        }
    }
}
