use alloc::vec::Vec;

use super::ray::{nehari_descent, DescentParams, RayProblem};
use super::{concentration_of, residual_dual_norm, SolveConfig, SolveOutcome};
use crate::energy::{nehari_scale_and_level, nonlinear_terms, ProblemConfig};
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// `F⁺` in sine coefficients with the H₀¹ metric.
pub(crate) struct ScalarRay<'a> {
    pub cfg: &'a ProblemConfig,
}

impl ScalarRay<'_> {
    pub(crate) fn field(&self, w: &[f64]) -> SpectralField {
        SpectralField::from_coeffs(&self.cfg.basis, w.to_vec()).expect("coefficient count matches basis")
    }
}

impl RayProblem for ScalarRay<'_> {
    fn len(&self) -> usize {
        self.cfg.basis.len()
    }

    fn exponent(&self) -> f64 {
        self.cfg.p
    }

    fn quadratic(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let mut q = 0.0;
        for ((g, a), &l) in grad.iter_mut().zip(w).zip(self.cfg.basis.eigenvalues()) {
            let s = self.cfg.quadratic_symbol(l);
            q += a * a * s;
            *g = a * s / l;
        }
        q
    }

    fn power(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let terms = nonlinear_terms(&self.field(w), self.cfg);
        for ((g, n), &l) in grad.iter_mut().zip(terms.projected.coeffs()).zip(self.cfg.basis.eigenvalues()) {
            *g = n / l;
        }
        terms.integral
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(self.cfg.basis.eigenvalues()).map(|((x, y), l)| x * y * l).sum()
    }

    fn concentration(&self, w: &[f64]) -> (f64, f64) {
        concentration_of(&self.field(w))
    }
}

pub(crate) fn threshold_error(err: Error, cfg: &ProblemConfig) -> Error {
    match err {
        Error::SupercriticalDirection { .. } => {
            Error::ThresholdViolation { gamma: cfg.gamma, threshold: cfg.threshold() }
        }
        other => other,
    }
}

/// Minimizes `u ↦ max_t F(tu⁺)` from the configured seed.
///
/// Returns a non-converged outcome, not an error, when the iteration cap is
/// hit or the line search stalls.
pub fn solve_nehari(cfg: &SolveConfig) -> Result<SolveOutcome> {
    cfg.check()?;
    let problem = cfg.problem.clone().with_positive_part();
    let seed = cfg.seed.build(&problem.basis)?;
    let (t, _) = nehari_scale_and_level(&seed, &problem).map_err(|e| threshold_error(e, &problem))?;
    let grad_tol = cfg.absolute_tolerance(&seed.scaled(t));
    let prob = ScalarRay { cfg: &problem };
    let params = DescentParams { max_iters: cfg.max_iters, grad_tol, step: cfg.step_rule };
    let result = nehari_descent(&prob, seed.into_coeffs(), &params).map_err(|e| threshold_error(e, &problem))?;
    let state = prob.field(&result.w);
    Ok(finish(
        state,
        &cfg.problem,
        result.level,
        result.iterations,
        result.converged,
        grad_tol,
        result.concentration,
        result.level_trace,
    ))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    state: SpectralField,
    problem: &ProblemConfig,
    level: f64,
    iterations: usize,
    converged: bool,
    grad_tol: f64,
    concentration_diag: Vec<(f64, f64)>,
    level_trace: Vec<f64>,
) -> SolveOutcome {
    // A positive discrete solution of F⁺ solves the full equation as well;
    // the residual is measured against the full nonlinearity.
    let residual = residual_dual_norm(&state, problem);
    SolveOutcome {
        min_interior_value: state.min_interior(),
        energy_level: level,
        residual,
        iterations,
        converged,
        grad_tol,
        concentration_diag,
        level_trace,
        state,
    }
}
