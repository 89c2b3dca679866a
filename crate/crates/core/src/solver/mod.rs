//! Positive mountain-pass solutions of `-Δu = γ(-Δ)^{-m}u + |u|^{p-1}u`.
//!
//! [`solve_nehari`] is the primary method: descent on the closed-form ray
//! level `u ↦ max_t F(tu⁺)`. [`solve_mountain_pass_path`] is an independent
//! path-based cross-check, and [`evolve_cahn_hilliard`] integrates the
//! fourth-order parabolic flow whose steady states solve the same problem.

mod flow;
pub(crate) mod nehari;
mod path;
pub(crate) mod ray;
mod scan;

use alloc::{sync::Arc, vec::Vec};
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use crate::energy::{nonlinear_terms, riesz_gradient, ProblemConfig};
use crate::spectral::{BoxBasis, GridField, SpectralField};
use crate::{Error, Result};

pub use flow::{evolve_cahn_hilliard, FlowMode, FlowParams, FlowTrajectory};
pub use nehari::solve_nehari;
pub use path::{solve_mountain_pass_path, PathOutcome};
pub use scan::{levels_nonincreasing, scan_entry, threshold_scan, ScanRow, ScanStatus};

/// Backtracking line search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Consecutive step reductions tolerated before giving up.
    pub max_backtracks: usize,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule { initial_step: 0.5, shrink: 0.5, sufficient_decrease: 1e-4, max_backtracks: 50 }
    }
}

/// Initial direction of the descent.
#[derive(Debug, Clone)]
pub enum SeedSpec {
    /// `amplitude · ∏_i sin(π x_i / L_i)^sharpness`, projected onto the basis.
    Bump {
        amplitude: f64,
        sharpness: f64,
    },
    Explicit(SpectralField),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Bump { amplitude: 1.0, sharpness: 2.0 }
    }
}

impl SeedSpec {
    pub fn build(&self, basis: &Arc<BoxBasis>) -> Result<SpectralField> {
        match self {
            SeedSpec::Bump { amplitude, sharpness } => {
                if !(*amplitude > 0.0 && *sharpness > 0.0) {
                    return Err(Error::InvalidConfiguration("seed amplitude and sharpness must be positive".into()));
                }
                let lengths = basis.lengths().to_vec();
                let g = GridField::from_fn(basis, |x| {
                    amplitude
                        * x.iter()
                            .zip(&lengths)
                            .map(|(xi, l)| (core::f64::consts::PI * xi / l).sin().powf(*sharpness))
                            .product::<f64>()
                });
                Ok(g.to_spectral())
            }
            SeedSpec::Explicit(f) => {
                if !f.basis().same_as(basis) {
                    return Err(Error::ShapeMismatch { expected: basis.len(), found: f.basis().len() });
                }
                Ok(f.clone())
            }
        }
    }
}

/// Stopping tolerance on the H₀¹ norm of the Riesz gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Multiple of the H₀¹ norm of the seed after scaling it onto the Nehari manifold.
    RelativeToSeed(f64),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    pub seed: SeedSpec,
    pub max_iters: usize,
    pub grad_tol: Tolerance,
    pub step_rule: StepRule,
    /// Permit `p ≥ 2* − 1` in `d ≥ 3`; convergence is then not guaranteed.
    pub allow_critical: bool,
}

impl SolveConfig {
    pub fn new(problem: ProblemConfig) -> Self {
        SolveConfig {
            problem,
            seed: SeedSpec::default(),
            max_iters: 10_000,
            grad_tol: Tolerance::RelativeToSeed(1e-8),
            step_rule: StepRule::default(),
            allow_critical: false,
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        SolveConfig { problem: self.problem.with_gamma(gamma), ..self.clone() }
    }

    pub(crate) fn check(&self) -> Result<()> {
        self.problem.validate()?;
        if self.max_iters < 1 {
            return Err(Error::InvalidConfiguration("max_iters must be at least 1".into()));
        }
        match self.grad_tol {
            Tolerance::Absolute(t) | Tolerance::RelativeToSeed(t) if t > 0.0 => {}
            _ => return Err(Error::InvalidConfiguration("grad_tol must be positive".into())),
        }
        let threshold = self.problem.threshold();
        if self.problem.gamma >= threshold {
            return Err(Error::ThresholdViolation { gamma: self.problem.gamma, threshold });
        }
        if !self.problem.subcritical_safe() && !self.allow_critical {
            return Err(Error::InvalidConfiguration(alloc::format!(
                "p = {} is not below 2* - 1 in dimension {}; set allow_critical to run anyway",
                self.problem.p,
                self.problem.basis.dim()
            )));
        }
        Ok(())
    }

    /// Absolute tolerance for a seed already scaled onto the Nehari manifold.
    pub(crate) fn absolute_tolerance(&self, nehari_seed: &SpectralField) -> f64 {
        match self.grad_tol {
            Tolerance::Absolute(t) => t,
            Tolerance::RelativeToSeed(t) => t * nehari_seed.h1_norm(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub state: SpectralField,
    /// `F(state)`, the candidate mountain-pass level.
    pub energy_level: f64,
    /// `‖F'(state)‖` in the H₀¹ dual norm.
    pub residual: f64,
    /// Minimum over the refined interior grid.
    pub min_interior_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Absolute gradient tolerance that was applied.
    pub grad_tol: f64,
    /// Per-iteration (max amplitude, inverse participation ratio).
    pub concentration_diag: Vec<(f64, f64)>,
    /// Per-iteration level of the iterate.
    pub level_trace: Vec<f64>,
}

/// `‖F'(u)‖_{H^{-1}}`, the H₀¹ norm of the Riesz gradient.
pub fn residual_dual_norm(u: &SpectralField, cfg: &ProblemConfig) -> f64 {
    riesz_gradient(u, cfg).h1_norm()
}

/// Test of the equation against `φ₁`:
/// `λ₁∫uφ₁ = γλ₁^{-m}∫uφ₁ + ∫|u|^{p-1}uφ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityCertificate {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs > γλ₁^{-m}∫uφ₁`; for `∫uφ₁ > 0` this is exactly `γ < λ₁^{m+1}`.
    pub ok: bool,
}

pub fn positivity_certificate(u: &SpectralField, cfg: &ProblemConfig) -> Result<PositivityCertificate> {
    let samples = u.sample_refined();
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if min < -1e-10 * scale {
        return Err(Error::InvalidArgument(alloc::format!(
            "positivity certificate needs u >= 0, interior minimum is {min}"
        )));
    }
    let l1 = cfg.basis.lambda1();
    let overlap = u.coeffs()[0];
    let lhs = l1 * overlap;
    let linear = cfg.gamma * l1.powi(-(cfg.m as i32)) * overlap;
    let nonlinear = nonlinear_terms(u, cfg).projected.coeffs()[0];
    Ok(PositivityCertificate { lhs, rhs: linear + nonlinear, ok: lhs > linear })
}

/// (max amplitude, `∫u⁴ / (∫u²)²`) from refined samples.
pub(crate) fn concentration_of(u: &SpectralField) -> (f64, f64) {
    let samples = u.sample_refined();
    let w = u.basis().refined_cell_volume();
    let max = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let l2 = u.dot(u);
    let l4: f64 = w * samples.iter().map(|v| v.powi(4)).sum::<f64>();
    (max, if l2 > 0.0 { l4 / (l2 * l2) } else { 0.0 })
}
