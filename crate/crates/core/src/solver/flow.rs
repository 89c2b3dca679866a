//! Semi-implicit spectral stepping of
//! `∂u/∂t + (-Δ)²u = γu + (-Δ)(|u|^{p-1}u)`.
//!
//! With a stabilisation constant `S ≥ 0` the step is
//!
//! ```text
//! (1 + dt(λ² − γ + Sλ)) û⁺ = û + dt λ (N̂(u) + S û),
//! ```
//!
//! whose fixed points are exactly the steady states. In
//! [`FlowMode::NehariNormalized`] each step is followed by the rescaling
//! `u ↦ t*u` onto the Nehari manifold, which turns the mountain-pass
//! solution from a saddle of the flow into an attractor.

use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use crate::energy::{energy_scalar, nehari_scale_and_level, nonlinear_terms, ProblemConfig};
use crate::spectral::SpectralField;
use crate::{Error, Result};

use super::residual_dual_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    Plain,
    NehariNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub dt: f64,
    pub steps: usize,
    pub mode: FlowMode,
    /// Stop when `‖u_{n+1} − u_n‖ ≤ tol · max(‖u_n‖, 1)` in L².
    pub tol: f64,
    /// `None` picks `S = p·max|u|^{p-1}` from the current state at each step.
    pub stabilization: Option<f64>,
    /// Keep every `record_every`-th state in the trajectory (0 keeps only the ends).
    pub record_every: usize,
}

impl FlowParams {
    pub fn new(dt: f64, steps: usize) -> Self {
        FlowParams { dt, steps, mode: FlowMode::Plain, tol: 1e-12, stabilization: None, record_every: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub states: Vec<SpectralField>,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub final_state: SpectralField,
    pub steps_taken: usize,
    pub converged: bool,
    /// Last successive-difference ratio.
    pub last_increment: f64,
    /// `‖(-Δ)((-Δ)u − N(u)) − γu‖_{H^{-3}}`, the dual norm of the fourth-order residual.
    pub fourth_order_residual: f64,
    /// `‖F'(u)‖_{H^{-1}}` after applying `(-Δ)^{-1}`.
    pub residual: f64,
}

/// Fourth-order residual `(-Δ)((-Δ)u − N(u)) − γu`, measured in `H^{-3}`
/// so that it equals the `H^{-1}` norm of its `(-Δ)^{-1}` image.
fn fourth_order_residual(u: &SpectralField, cfg: &ProblemConfig) -> f64 {
    let n = nonlinear_terms(u, cfg).projected;
    u.coeffs()
        .iter()
        .zip(n.coeffs())
        .zip(cfg.basis.eigenvalues())
        .map(|((a, nk), &l)| {
            let r = l * (l * a - nk) - cfg.gamma * a;
            r * r / (l * l * l)
        })
        .sum::<f64>()
        .sqrt()
}

pub fn evolve_cahn_hilliard(u0: &SpectralField, cfg: &ProblemConfig, params: &FlowParams) -> Result<FlowTrajectory> {
    cfg.validate()?;
    if cfg.m != 1 {
        return Err(Error::InvalidArgument("the fourth-order flow is defined for m = 1 only".into()));
    }
    if !u0.basis().same_as(&cfg.basis) {
        return Err(Error::ShapeMismatch { expected: cfg.basis.len(), found: u0.basis().len() });
    }
    if !(params.dt > 0.0 && params.dt.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("dt must be positive, got {}", params.dt)));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidArgument("flow tolerance must be positive".into()));
    }
    if matches!(params.stabilization, Some(s) if !(s >= 0.0)) {
        return Err(Error::InvalidArgument("stabilization must be nonnegative".into()));
    }
    let lambdas = cfg.basis.eigenvalues();
    let p = cfg.p;
    let normalize = |u: SpectralField| -> SpectralField {
        if params.mode == FlowMode::NehariNormalized {
            if let Ok((t, _)) = nehari_scale_and_level(&u, cfg) {
                return u.scaled(t);
            }
        }
        u
    };

    let mut u = normalize(u0.clone());
    let mut states = Vec::new();
    let mut times = Vec::new();
    let mut energies = Vec::new();
    let mut record = |u: &SpectralField, t: f64| {
        states.push(u.clone());
        times.push(t);
        energies.push(energy_scalar(u, cfg).energy);
    };
    record(&u, 0.0);

    let mut converged = false;
    let mut last_increment = f64::INFINITY;
    let mut steps_taken = 0;
    while steps_taken < params.steps {
        let terms = nonlinear_terms(&u, cfg);
        let s = params.stabilization.unwrap_or_else(|| {
            let amp = u.sample_refined().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            p * amp.powf(p - 1.0)
        });
        let next: Vec<f64> = u
            .coeffs()
            .iter()
            .zip(terms.projected.coeffs())
            .zip(lambdas)
            .map(|((a, n), &l)| {
                let rhs = a + params.dt * l * (n + s * a);
                rhs / (1.0 + params.dt * (l * l - cfg.gamma + s * l))
            })
            .collect();
        let next = normalize(SpectralField::from_coeffs(&cfg.basis, next)?);
        steps_taken += 1;
        let norm = next.l2_norm();
        if !(norm <= 1e8) {
            return Err(Error::UnstableStep { step: steps_taken, norm });
        }
        let diff = next.sub(&u).l2_norm();
        last_increment = diff / u.l2_norm().max(1.0);
        u = next;
        if params.record_every > 0 && steps_taken % params.record_every == 0 {
            record(&u, steps_taken as f64 * params.dt);
        }
        if last_increment <= params.tol {
            converged = true;
            break;
        }
    }
    if params.record_every == 0 || steps_taken % params.record_every != 0 {
        record(&u, steps_taken as f64 * params.dt);
    }
    Ok(FlowTrajectory {
        fourth_order_residual: fourth_order_residual(&u, cfg),
        residual: residual_dual_norm(&u, cfg),
        states,
        times,
        energies,
        final_state: u,
        steps_taken,
        converged,
        last_increment,
    })
}
