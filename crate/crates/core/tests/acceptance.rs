//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nlbn_core::bubble::{
    bubble_grad_defect, bubble_l2_asymptotics, cube_lambda1, default_epsilon_grid, dimension_window, integrate_radial,
    level_gap, pairing_asymptotics, unit_sphere_area, BubbleSpec, RadialGrid, WindowMode,
};
use nlbn_core::chain::{equivalence_check, solve_system_mpa};
use nlbn_core::energy::{energy_scalar, rayleigh_quotient_nonlocal, riesz_gradient, ProblemConfig};
use nlbn_core::solver::{
    evolve_cahn_hilliard, solve_mountain_pass_path, solve_nehari, threshold_scan, FlowMode, FlowParams, ScanStatus,
    SolveConfig,
};
use nlbn_core::spectral::{build_box_basis, first_eigenpair, navier_first_eigenvalue, BoxBasis, SpectralField};
use proptest::prelude::RngExt;
use proptest::test_runner::{RngAlgorithm, TestRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn square(n: usize) -> Arc<BoxBasis> {
    build_box_basis(&[1.0, 1.0], &[n, n]).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn rng() -> TestRng {
    TestRng::deterministic_rng(RngAlgorithm::ChaCha)
}

fn random_field(basis: &Arc<BoxBasis>, rng: &mut TestRng, decay: bool) -> SpectralField {
    let coeffs = (0..basis.len())
        .map(|i| {
            let c: f64 = rng.random_range(-1.0..1.0);
            if decay {
                let k2: usize = basis.multi_index(i).iter().map(|k| k * k).sum();
                c / (1.0 + k2 as f64)
            } else {
                c
            }
        })
        .collect();
    SpectralField::from_coeffs(basis, coeffs).unwrap()
}

fn half_threshold(n: usize, m: u32) -> SolveConfig {
    let b = square(n);
    let gamma = 0.5 * b.lambda1().powi(m as i32 + 1);
    SolveConfig::new(ProblemConfig::new(&b, gamma, 3.0, m).unwrap())
}

fn eigenvalue_threshold() -> Outcome {
    let b = square(16);
    let l1 = b.lambda1();
    let e1 = rel(l1, 2.0 * PI * PI);
    let e2 = rel(navier_first_eigenvalue(&b, 2).unwrap(), 4.0 * PI.powi(4));
    let cfg = ProblemConfig::new(&b, 0.0, 3.0, 1).unwrap();
    let (_, phi) = first_eigenpair(&b);
    let mut rng = rng();
    // Half the fields are generic, half are small perturbations of φ₁.
    let min_rq = (0..100)
        .map(|i| {
            let mut u = random_field(&b, &mut rng, false);
            if i % 2 == 1 {
                u = u.scaled(1e-3);
                u.axpy(1.0, &phi);
            }
            rayleigh_quotient_nonlocal(&u, &cfg).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    let at_phi = rayleigh_quotient_nonlocal(&phi, &cfg).unwrap();
    let target = l1 * l1;
    Outcome {
        pass: e1 < 1e-12 && e2 < 1e-12 && min_rq >= target - 1e-9 && rel(at_phi, target) < 1e-12,
        detail: format!(
            "rel err λ₁ {e1:.1e}, λ₁² {e2:.1e}; min RQ − λ₁² = {:.3e} over 100 fields; RQ(φ₁) rel err {:.1e}",
            min_rq - target,
            rel(at_phi, target)
        ),
    }
}

fn nonexistence_boundary() -> Outcome {
    let base = half_threshold(32, 1);
    let t = base.problem.threshold();
    let fracs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1];
    let grid: Vec<f64> = fracs.iter().map(|f| f * t).collect();
    let rows = threshold_scan(&base, &grid).unwrap();
    let mut solved = 0;
    let mut violations = 0;
    let mut pass = true;
    for (row, frac) in rows.iter().zip(fracs) {
        match (&row.status, frac < 1.0) {
            (ScanStatus::Solved { converged: true, positivity_ok: true, .. }, true) => solved += 1,
            (ScanStatus::ThresholdViolation { .. }, false) => violations += 1,
            _ => pass = false,
        }
    }
    Outcome {
        pass,
        detail: format!("{solved}/9 positive certified solutions below λ₁², {violations}/2 threshold violations"),
    }
}

fn solver_cross_validation() -> Outcome {
    let cfg = half_threshold(32, 1);
    let nehari = solve_nehari(&cfg).unwrap();
    let path = solve_mountain_pass_path(&cfg).unwrap();
    let (_, phi) = first_eigenpair(&cfg.problem.basis);
    let mut params = FlowParams::new(1e-3, 100_000);
    params.mode = FlowMode::NehariNormalized;
    let flow = evolve_cahn_hilliard(&phi.scaled(0.1), &cfg.problem, &params).unwrap();
    let e_flow = energy_scalar(&flow.final_state, &cfg.problem).energy;
    let levels = [nehari.energy_level, path.outcome.energy_level, e_flow];
    let spread = levels.iter().map(|l| rel(*l, nehari.energy_level)).fold(0.0, f64::max);
    let residuals = [nehari.residual, path.outcome.residual, flow.residual];
    let max_res = residuals.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: nehari.converged && path.outcome.converged && flow.converged && spread < 1e-3 && max_res < 1e-6,
        detail: format!(
            "levels nehari {:.10} path {:.10} flow {:.10}; max rel spread {spread:.1e}; max residual {max_res:.1e}",
            levels[0], levels[1], levels[2]
        ),
    }
}

fn l2_asymptotics() -> Outcome {
    let eps = default_epsilon_grid();
    let n3 = bubble_l2_asymptotics(3, 1.0, &eps).unwrap().power;
    let n4 = bubble_l2_asymptotics(4, 1.0, &eps).unwrap();
    let n4_log = n4.log_model.unwrap();
    let n5 = bubble_l2_asymptotics(5, 1.0, &eps).unwrap().power;
    Outcome {
        pass: (n3.slope - 1.0).abs() <= 0.05
            && (n4_log.slope - 2.0).abs() <= 0.05
            && n4_log.residual < n4.power.residual
            && (n5.slope - 2.0).abs() <= 0.05,
        detail: format!(
            "slopes N=3 {:.4}, N=4 log model {:.4} (rms {:.1e} vs plain {:.1e}), N=5 {:.4}",
            n3.slope, n4_log.slope, n4_log.residual, n4.power.residual, n5.slope
        ),
    }
}

fn gradient_defect() -> Outcome {
    let eps = default_epsilon_grid();
    let s5 = bubble_grad_defect(5, 1.0, &eps).unwrap().slope;
    let s7 = bubble_grad_defect(7, 1.0, &eps).unwrap().slope;
    Outcome {
        pass: (s5 - 3.0).abs() <= 0.15 && (s7 - 5.0).abs() <= 0.15,
        detail: format!("slopes N=5 {s5:.4} (want 3), N=7 {s7:.4} (want 5)"),
    }
}

fn dimension_threshold() -> Outcome {
    let eps = default_epsilon_grid();
    let tol = 0.2;
    let s: Vec<f64> = [6usize, 7, 8].iter().map(|&n| pairing_asymptotics(n, 1.0, &eps).unwrap().slope).collect();
    let high_ok = [(7.0, s[1]), (8.0, s[2])].iter().all(|&(n, sl)| (sl - 4.0).abs() <= tol && sl < n - 2.0);
    let marginal_ok = (s[0] - 4.0).abs() <= tol;
    Outcome {
        pass: high_ok && marginal_ok,
        detail: format!("F(ε) slopes N=6 {:.4} (N−2 = 4), N=7 {:.4}, N=8 {:.4}; tolerance ±{tol}", s[0], s[1], s[2]),
    }
}

fn level_gap_check() -> Outcome {
    let l1 = cube_lambda1(7, 1.0);
    let gamma = 0.5 * l1 * l1;
    let at = level_gap(gamma, &BubbleSpec::new(7, 1e-3, 1.0).unwrap()).unwrap();
    let eps = default_epsilon_grid();
    let zero_fails = eps
        .iter()
        .map(|&e| level_gap(0.0, &BubbleSpec::new(7, e, 1.0).unwrap()).unwrap())
        .filter(|r| !r.gap_ok)
        .count();
    Outcome {
        pass: at.gap_ok && zero_fails == eps.len(),
        detail: format!(
            "N=7 ε=1e-3 γ=0.5λ₁(cube)²: gap {:.3e}, gap_ok {}; γ=0: gap_ok false at {zero_fails}/{} ε",
            at.gap,
            at.gap_ok,
            eps.len()
        ),
    }
}

fn window_arithmetic() -> Outcome {
    let mut pass = true;
    for n in 3..=6 {
        pass &= !dimension_window(n, WindowMode::Scalar).unwrap().feasible;
        pass &= !dimension_window(n, WindowMode::System).unwrap().feasible;
    }
    for n in 7..=20 {
        let nf = n as f64;
        let w = dimension_window(n, WindowMode::Scalar).unwrap();
        pass &= w.feasible && w.interval == Some((1.0 + nf / (nf - 4.0), nf / 2.0 + 1.0));
    }
    pass &= dimension_window(7, WindowMode::System).unwrap().interval == Some((2.0, 3.0));
    Outcome { pass, detail: "scalar infeasible N≤6, μ-window exact for N=7..20; system (2,3) at N=7".into() }
}

fn system_equivalence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in 1..=3 {
        let cfg = half_threshold(32, m);
        let scalar = solve_nehari(&cfg).unwrap();
        let report = equivalence_check(&scalar.state, &cfg.problem, scalar.grad_tol).unwrap();
        let system = solve_system_mpa(&cfg).unwrap();
        let dl = rel(system.level, scalar.energy_level);
        pass &= scalar.converged && system.converged && report.pass && report.max_residual < 1e-6 && dl < 1e-3;
        parts.push(format!("m={m}: lift residual {:.1e}, level diff {dl:.1e}", report.max_residual));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn property_suites() -> Outcome {
    let b = square(8);
    let l1 = b.lambda1();
    let cfg = ProblemConfig::new(&b, 0.5 * l1 * l1, 3.0, 1).unwrap();
    let mut rng = rng();

    let delta = 1e-4;
    let mut fd_err: f64 = 0.0;
    for _ in 0..20 {
        let u = random_field(&b, &mut rng, true);
        let h = random_field(&b, &mut rng, true);
        let mut plus = u.clone();
        plus.axpy(delta, &h);
        let mut minus = u.clone();
        minus.axpy(-delta, &h);
        let fd = (energy_scalar(&plus, &cfg).energy - energy_scalar(&minus, &cfg).energy) / (2.0 * delta);
        let exact = riesz_gradient(&u, &cfg).h1_inner(&h);
        fd_err = fd_err.max((fd - exact).abs() / exact.abs());
    }

    let mut round_trip: f64 = 0.0;
    let mut semigroup: f64 = 0.0;
    for _ in 0..20 {
        let u = random_field(&b, &mut rng, false);
        let back = u.to_grid().to_spectral();
        for (x, y) in back.coeffs().iter().zip(u.coeffs()) {
            round_trip = round_trip.max((x - y).abs());
        }
        let s: f64 = rng.random_range(-2.0..2.0);
        let t: f64 = rng.random_range(-2.0..2.0);
        for (s, t) in [(s, t), (1.0, -1.0), (2.0, -3.0)] {
            let two = u.apply_power(s).apply_power(t);
            let one = u.apply_power(s + t);
            for (x, y) in two.coeffs().iter().zip(one.coeffs()) {
                semigroup = semigroup.max((x - y).abs() / y.abs());
            }
        }
    }

    let mut quad: f64 = 0.0;
    for n in [3usize, 5, 7, 9] {
        let spec = BubbleSpec::new(n, 1e-3, 1.0).unwrap();
        let layout = spec.layout();
        let f = |r: f64| spec.talenti_slope_at(r).powi(2);
        let plain = |refine: usize| {
            let g = RadialGrid::new(&layout, refine).unwrap();
            g.radii.iter().zip(&g.weights).map(|(&r, &w)| w * f(r) * r.powi(n as i32 - 1)).sum::<f64>()
        };
        let adaptive = integrate_radial(n, f, &layout, 1e-10).unwrap();
        let omega = unit_sphere_area(n);
        for refine in [1, 2, 4] {
            quad = quad.max(rel(omega * plain(refine), adaptive));
        }
    }

    // Coefficient-wise exactness is read as agreement to a few rounding errors.
    let semigroup_tol = 8.0 * f64::EPSILON;
    Outcome {
        pass: fd_err < 1e-6 && round_trip < 1e-12 && semigroup <= semigroup_tol && quad < 1e-6,
        detail: format!(
            "FD rel err {fd_err:.1e}; round trip {round_trip:.1e}; semigroup {semigroup:.1e} (≤ {semigroup_tol:.1e}); quadrature refinement {quad:.1e}"
        ),
    }
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("eigenvalue threshold", Duration::from_secs(1), eigenvalue_threshold),
        ("nonexistence boundary", Duration::from_secs(120), nonexistence_boundary),
        ("solver cross-validation", Duration::from_secs(300), solver_cross_validation),
        ("bubble L2 asymptotics", Duration::from_secs(60), l2_asymptotics),
        ("gradient defect", Duration::from_secs(60), gradient_defect),
        ("dimension threshold", Duration::from_secs(120), dimension_threshold),
        ("level gap", Duration::from_secs(60), level_gap_check),
        ("window arithmetic", Duration::from_secs(1), window_arithmetic),
        ("system equivalence", Duration::from_secs(300), system_equivalence),
        ("property suites", Duration::from_secs(60), property_suites),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed < *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<24} {}  [{:.2}s / {}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            outcome.detail
        );
    }
    println!("acceptance: {}/10 passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
