use std::fmt::Write as _;

use nlbn_core::bubble::{
    bubble_grad_defect, bubble_l2_asymptotics, cube_lambda1, default_epsilon_grid, dimension_window, level_gap,
    pairing_asymptotics, BubbleSpec, LineFit, WindowMode,
};
use nlbn_core::chain::{equivalence_check, solve_system_mpa};
use nlbn_core::energy::{energy_scalar, ProblemConfig};
use nlbn_core::solver::{
    evolve_cahn_hilliard, levels_nonincreasing, positivity_certificate, scan_entry, solve_mountain_pass_path,
    solve_nehari, FlowMode, FlowParams, ScanStatus, SeedSpec, SolveConfig, SolveOutcome, Tolerance,
};
use nlbn_core::spectral::{build_box_basis, first_eigenpair, navier_first_eigenvalue};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::pool::{par_map, worker_count};
use crate::CliError;

/// Rendered artifact plus an optional failure that still produced output.
#[derive(Debug)]
pub struct Output {
    pub body: String,
    pub status: Option<CliError>,
    /// Observations reported on stderr.
    pub notes: Vec<String>,
}

impl Output {
    fn ok(body: String) -> Self {
        Output { body, status: None, notes: Vec::new() }
    }
}

const BOX_KEYS: &[&str] = &["lengths", "modes", "m"];
const PROBLEM_KEYS: &[&str] = &["lengths", "modes", "m", "p", "gamma", "gamma_fraction"];
const SOLVER_KEYS: &[&str] =
    &["max_iters", "grad_tol", "grad_tol_abs", "seed_amplitude", "seed_sharpness", "allow_critical"];

fn f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn dispatch(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    match cfg.subcommand.as_str() {
        "eig" => eig(cfg),
        "solve" => solve(cfg),
        "scan-gamma" => scan_gamma(cfg),
        "bubble-scan" => bubble_scan(cfg),
        "level-check" => level_check(cfg),
        "window" => window(cfg),
        "system-check" => system_check(cfg),
        "flow" => flow(cfg),
        other => Err(CliError::Config(format!("unknown subcommand {other:?}"))),
    }
}

fn build_basis(
    cfg: &ExperimentConfig,
    default_modes: usize,
) -> Result<std::sync::Arc<nlbn_core::spectral::BoxBasis>, CliError> {
    let lengths = cfg.get_list::<f64>("lengths")?.unwrap_or_else(|| vec![1.0, 1.0]);
    let mut modes = cfg.get_list::<usize>("modes")?.unwrap_or_else(|| vec![default_modes]);
    if modes.len() == 1 && lengths.len() > 1 {
        modes = vec![modes[0]; lengths.len()];
    }
    Ok(build_box_basis(&lengths, &modes)?)
}

fn build_problem(cfg: &ExperimentConfig) -> Result<ProblemConfig, CliError> {
    let basis = build_basis(cfg, 32)?;
    let p = cfg.get_or("p", 3.0)?;
    let m = cfg.get_or("m", 1u32)?;
    let problem = ProblemConfig::new(&basis, 0.0, p, m)?;
    let gamma = resolve_gamma(cfg, problem.threshold())?;
    Ok(problem.with_gamma(gamma))
}

fn resolve_gamma(cfg: &ExperimentConfig, threshold: f64) -> Result<f64, CliError> {
    match (cfg.get::<f64>("gamma")?, cfg.get::<f64>("gamma_fraction")?) {
        (Some(_), Some(_)) => Err(CliError::Config("set only one of gamma and gamma_fraction".into())),
        (Some(g), None) => Ok(g),
        (None, Some(frac)) => Ok(frac * threshold),
        (None, None) => Ok(0.0),
    }
}

fn build_solve_config(cfg: &ExperimentConfig, problem: ProblemConfig) -> Result<SolveConfig, CliError> {
    let mut sc = SolveConfig::new(problem);
    sc.max_iters = cfg.get_or("max_iters", sc.max_iters)?;
    sc.grad_tol = match (cfg.get::<f64>("grad_tol")?, cfg.get::<f64>("grad_tol_abs")?) {
        (Some(_), Some(_)) => return Err(CliError::Config("set only one of grad_tol and grad_tol_abs".into())),
        (Some(r), None) => Tolerance::RelativeToSeed(r),
        (None, Some(a)) => Tolerance::Absolute(a),
        (None, None) => sc.grad_tol,
    };
    sc.seed =
        SeedSpec::Bump { amplitude: cfg.get_or("seed_amplitude", 1.0)?, sharpness: cfg.get_or("seed_sharpness", 2.0)? };
    sc.allow_critical = cfg.get_or("allow_critical", false)?;
    Ok(sc)
}

fn eig(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(BOX_KEYS)?;
    let basis = build_basis(cfg, 1)?;
    let m = cfg.get_or("m", 1u32)?;
    if m < 1 {
        return Err(CliError::Config("m must be at least 1".into()));
    }
    let threshold = navier_first_eigenvalue(&basis, m + 1)?;
    Ok(Output::ok(format!("lambda1,m,threshold\n{},{m},{}\n", f(basis.lambda1()), f(threshold))))
}

fn outcome_json(out: &SolveOutcome, problem: &ProblemConfig, method: &str) -> Value {
    let cert = positivity_certificate(&out.state, problem).ok();
    json!({
        "method": method,
        "gamma": problem.gamma,
        "threshold": problem.threshold(),
        "p": problem.p,
        "m": problem.m,
        "modes": problem.basis.modes(),
        "lengths": problem.basis.lengths(),
        "converged": out.converged,
        "energy_level": out.energy_level,
        "residual": out.residual,
        "grad_tol": out.grad_tol,
        "min_interior_value": out.min_interior_value,
        "iterations": out.iterations,
        "positivity_lhs": cert.map(|c| c.lhs),
        "positivity_rhs": cert.map(|c| c.rhs),
        "positivity_ok": cert.map(|c| c.ok).unwrap_or(false),
        "level_trace": out.level_trace,
        "max_amplitude_trace": out.concentration_diag.iter().map(|c| c.0).collect::<Vec<_>>(),
        "ipr_trace": out.concentration_diag.iter().map(|c| c.1).collect::<Vec<_>>(),
    })
}

fn json_body(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

fn solve(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(&[PROBLEM_KEYS, SOLVER_KEYS, &["method"]].concat())?;
    let problem = build_problem(cfg)?;
    let sc = build_solve_config(cfg, problem.clone())?;
    let method = cfg.get_or("method", "nehari".to_string())?;
    let (out, mut value) = match method.as_str() {
        "nehari" => {
            let out = solve_nehari(&sc)?;
            let v = outcome_json(&out, &problem, "nehari");
            (out, v)
        }
        "path" => {
            let po = solve_mountain_pass_path(&sc)?;
            let mut v = outcome_json(&po.outcome, &problem, "path");
            v["endpoint_energy"] = json!(po.endpoint_energy);
            v["path_max_index"] = json!(po.max_index);
            v["path_nodes"] = json!(po.nodes);
            (po.outcome, v)
        }
        other => return Err(CliError::Config(format!("method must be nehari or path, got {other:?}"))),
    };
    value["subcommand"] = json!("solve");
    let status = (!out.converged)
        .then(|| CliError::NonConvergence(format!("residual {:e} after {} iterations", out.residual, out.iterations)));
    Ok(Output { body: json_body(&value), status, notes: Vec::new() })
}

fn scan_gamma(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(&[&["lengths", "modes", "m", "p", "gammas", "gamma_fractions", "workers"], SOLVER_KEYS].concat())?;
    let problem = build_problem(cfg)?;
    let threshold = problem.threshold();
    let mut gammas = match (cfg.get_list::<f64>("gammas")?, cfg.get_list::<f64>("gamma_fractions")?) {
        (Some(_), Some(_)) => return Err(CliError::Config("set only one of gammas and gamma_fractions".into())),
        (Some(g), None) => g,
        (None, Some(fr)) => fr.into_iter().map(|x| x * threshold).collect(),
        (None, None) => return Err(CliError::Config("scan-gamma needs gammas or gamma_fractions".into())),
    };
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(CliError::Config("gamma values must be finite".into()));
    }
    gammas.sort_by(f64::total_cmp);
    let sc = build_solve_config(cfg, problem)?;
    let workers = worker_count(cfg.get("workers")?)?;
    let rows = par_map(&gammas, workers, |&g| scan_entry(&sc, g));

    let mut body = String::from("gamma,converged,level,residual,positivity_ok,iterations\n");
    let mut status = None;
    for row in &rows {
        let line = match &row.status {
            ScanStatus::Solved { converged, level, residual, positivity_ok, iterations } => {
                if !converged && status.is_none() {
                    status = Some(CliError::NonConvergence(format!("gamma = {} did not converge", row.gamma)));
                }
                format!("{},{converged},{},{},{positivity_ok},{iterations}", f(row.gamma), f(*level), f(*residual))
            }
            ScanStatus::ThresholdViolation { .. } => {
                format!("{},threshold-violation,nan,nan,false,0", f(row.gamma))
            }
            ScanStatus::Failed(e) => {
                if status.is_none() {
                    status = Some(CliError::from(e.clone()));
                }
                format!("{},failed,nan,nan,false,0", f(row.gamma))
            }
        };
        body.push_str(&line);
        body.push('\n');
    }
    let notes = match levels_nonincreasing(&rows) {
        Some(monotone) => vec![format!("observed level nonincreasing in gamma over converged rows: {monotone}")],
        None => Vec::new(),
    };
    Ok(Output { body, status, notes })
}

fn epsilons(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    let mut eps = cfg.get_list::<f64>("epsilons")?.unwrap_or_else(default_epsilon_grid);
    if eps.iter().any(|e| !e.is_finite() || *e <= 0.0) {
        return Err(CliError::Config("epsilons must be positive".into()));
    }
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    Ok(eps)
}

fn dimensions(cfg: &ExperimentConfig, default: &[usize]) -> Result<Vec<usize>, CliError> {
    let mut dims = cfg.get_list::<usize>("N")?.unwrap_or_else(|| default.to_vec());
    if dims.iter().any(|&n| n < 3) {
        return Err(CliError::Config("N must be at least 3".into()));
    }
    dims.sort_unstable();
    dims.dedup();
    Ok(dims)
}

fn bubble_scan(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(&["N", "R", "epsilons", "quantities", "workers"])?;
    let dims = dimensions(cfg, &[3, 4, 5, 7])?;
    let radius: f64 = cfg.get_or("R", 1.0)?;
    let eps = epsilons(cfg)?;
    let mut quantities = cfg
        .get_list::<String>("quantities")?
        .unwrap_or_else(|| vec!["l2".into(), "grad_defect".into(), "pairing".into()]);
    quantities.sort();
    quantities.dedup();
    if let Some(q) = quantities.iter().find(|q| !["l2", "grad_defect", "pairing"].contains(&q.as_str())) {
        return Err(CliError::Config(format!("unknown quantity {q:?}; use l2, grad_defect or pairing")));
    }
    let jobs: Vec<(usize, String)> =
        dims.iter().flat_map(|&n| quantities.iter().map(move |q| (n, q.clone()))).collect();
    let workers = worker_count(cfg.get("workers")?)?;
    let results = par_map(&jobs, workers, |(n, q)| -> Result<Vec<(String, LineFit, f64)>, CliError> {
        let n = *n;
        let nf = n as f64;
        Ok(match q.as_str() {
            "l2" => {
                let fit = bubble_l2_asymptotics(n, radius, &eps)?;
                let expected = if n == 3 { 1.0 } else { 2.0 };
                let mut rows = vec![("power".to_string(), fit.power, expected)];
                if let Some(log) = fit.log_model {
                    rows.push(("power_log".to_string(), log, expected));
                }
                rows
            }
            "grad_defect" => vec![("power".to_string(), bubble_grad_defect(n, radius, &eps)?, nf - 2.0)],
            _ => vec![("power".to_string(), pairing_asymptotics(n, radius, &eps)?, (nf - 2.0).min(4.0))],
        })
    });
    let mut body = String::from("N,quantity,model,slope,intercept,residual,expected_slope\n");
    for ((n, q), res) in jobs.iter().zip(results) {
        for (model, fit, expected) in res? {
            writeln!(body, "{n},{q},{model},{},{},{},{}", f(fit.slope), f(fit.intercept), f(fit.residual), f(expected))
                .expect("writing to a string");
        }
    }
    Ok(Output::ok(body))
}

fn level_check(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(&["N", "R", "epsilons", "gamma", "gamma_scale", "workers"])?;
    let dims = dimensions(cfg, &[7])?;
    let radius: f64 = cfg.get_or("R", 1.0)?;
    let eps = epsilons(cfg)?;
    let gamma_abs = cfg.get::<f64>("gamma")?;
    let scale = cfg.get::<f64>("gamma_scale")?;
    if gamma_abs.is_some() && scale.is_some() {
        return Err(CliError::Config("set only one of gamma and gamma_scale".into()));
    }
    let jobs: Vec<(usize, f64)> = dims.iter().flat_map(|&n| eps.iter().map(move |&e| (n, e))).collect();
    let workers = worker_count(cfg.get("workers")?)?;
    let results = par_map(&jobs, workers, |&(n, e)| {
        let l1 = cube_lambda1(n, radius);
        let gamma = gamma_abs.unwrap_or(scale.unwrap_or(0.5) * l1 * l1);
        level_gap(gamma, &BubbleSpec::new(n, e, radius)?)
    });
    let mut body = String::from("N,epsilon,SN_eps,F_eps,t_eps,g_at_t,c_star,gap_ok\n");
    for ((n, e), r) in jobs.iter().zip(results) {
        let r = r?;
        writeln!(
            body,
            "{n},{},{},{},{},{},{},{}",
            f(*e),
            f(r.sn_eps),
            f(r.f_eps),
            f(r.t_eps),
            f(r.g_at_t),
            f(r.c_star),
            r.gap_ok
        )
        .expect("writing to a string");
    }
    Ok(Output::ok(body))
}

fn window(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(&["N", "mode"])?;
    let dims = dimensions(cfg, &[3, 4, 5, 6, 7, 8, 9, 10])?;
    let mode_name = cfg.get_or("mode", "scalar".to_string())?;
    let mode = match mode_name.as_str() {
        "scalar" => WindowMode::Scalar,
        "system" => WindowMode::System,
        other => return Err(CliError::Config(format!("mode must be scalar or system, got {other:?}"))),
    };
    let mut body = String::from("N,mode,feasible,lower,upper\n");
    for n in dims {
        let w = dimension_window(n, mode)?;
        let (lo, hi) = w.interval.unwrap_or((f64::NAN, f64::NAN));
        writeln!(body, "{n},{mode_name},{},{},{}", w.feasible, f(lo), f(hi)).expect("writing to a string");
    }
    Ok(Output::ok(body))
}

fn system_check(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(&[PROBLEM_KEYS, SOLVER_KEYS].concat())?;
    let problem = build_problem(cfg)?;
    let sc = build_solve_config(cfg, problem.clone())?;
    let scalar = solve_nehari(&sc)?;
    let report = equivalence_check(&scalar.state, &problem, scalar.grad_tol)?;
    let system = solve_system_mpa(&sc)?;
    let value = json!({
        "subcommand": "system-check",
        "m": problem.m,
        "gamma": problem.gamma,
        "p": problem.p,
        "scalar_converged": scalar.converged,
        "scalar_level": scalar.energy_level,
        "scalar_residual": scalar.residual,
        "grad_tol": scalar.grad_tol,
        "lift_residuals": report.residuals,
        "lift_max_residual": report.max_residual,
        "equivalence_pass": report.pass,
        "system_converged": system.converged,
        "system_level": system.level,
        "system_residuals": system.residuals,
        "system_iterations": system.iterations,
        "level_relative_difference": (system.level - scalar.energy_level).abs() / scalar.energy_level.abs(),
    });
    let status = if !(scalar.converged && system.converged) {
        Some(CliError::NonConvergence("scalar or system solve did not converge".into()))
    } else if !report.pass {
        Some(CliError::NonConvergence(format!("lifted residual {:e} above 10·grad_tol", report.max_residual)))
    } else {
        None
    };
    Ok(Output { body: json_body(&value), status, notes: Vec::new() })
}

fn flow(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    cfg.check_keys(
        &[PROBLEM_KEYS, &["dt", "steps", "flow_mode", "init_amplitude", "tol", "stabilization", "record_every"]]
            .concat(),
    )?;
    let problem = build_problem(cfg)?;
    let mut params = FlowParams::new(cfg.get_or("dt", 1e-3)?, cfg.get_or("steps", 100_000usize)?);
    params.mode = match cfg.get_or("flow_mode", "nehari".to_string())?.as_str() {
        "plain" => FlowMode::Plain,
        "nehari" => FlowMode::NehariNormalized,
        other => return Err(CliError::Config(format!("flow_mode must be plain or nehari, got {other:?}"))),
    };
    params.tol = cfg.get_or("tol", 1e-12)?;
    params.stabilization = cfg.get("stabilization")?;
    params.record_every = cfg.get_or("record_every", 0usize)?;
    let (_, phi) = first_eigenpair(&problem.basis);
    let u0 = phi.scaled(cfg.get_or("init_amplitude", 0.1)?);
    let tr = evolve_cahn_hilliard(&u0, &problem, &params)?;
    let final_energy = energy_scalar(&tr.final_state, &problem).energy;
    let value = json!({
        "subcommand": "flow",
        "gamma": problem.gamma,
        "p": problem.p,
        "dt": params.dt,
        "steps_taken": tr.steps_taken,
        "converged": tr.converged,
        "last_increment": tr.last_increment,
        "final_energy": final_energy,
        "final_l2_norm": tr.final_state.l2_norm(),
        "residual": tr.residual,
        "fourth_order_residual": tr.fourth_order_residual,
        "times": tr.times,
        "energies": tr.energies,
    });
    let status = (!tr.converged)
        .then(|| CliError::NonConvergence(format!("increment {:e} after {} steps", tr.last_increment, tr.steps_taken)));
    Ok(Output { body: json_body(&value), status, notes: Vec::new() })
}
