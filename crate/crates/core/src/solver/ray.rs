//! Descent on the Nehari ray level `ℓ(w) = max_t F(tw)`.
//!
//! For `F(w) = Q(w)/2 − P(w)/(p+1)` with `Q` quadratic and `P` homogeneous of
//! degree `p + 1`, the ray maximum is
//!
//! ```text
//! ℓ(w) = (1/2 − 1/(p+1)) · Q^{(p+1)/(p-1)} · P^{-2/(p-1)},
//! ```
//!
//! which is invariant under `w ↦ sw`. Iterates are kept on the Nehari
//! manifold `Q = P`, where the Riesz gradient of `ℓ` is parallel to the
//! Riesz gradient of `F`.

use alloc::{vec, vec::Vec};
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use super::StepRule;
use crate::energy::ray_scale_and_level;
use crate::Result;

/// A functional `Q/2 − P/(p+1)` on a flat coefficient vector with a metric.
pub(crate) trait RayProblem {
    fn len(&self) -> usize;
    fn exponent(&self) -> f64;
    /// Returns `Q(w)` and writes the Riesz representative of `Q'(w)/2`.
    fn quadratic(&self, w: &[f64], grad: &mut [f64]) -> f64;
    /// Returns `P(w)` and writes the Riesz representative of `P'(w)/(p+1)`.
    fn power(&self, w: &[f64], grad: &mut [f64]) -> f64;
    fn inner(&self, a: &[f64], b: &[f64]) -> f64;
    /// (max amplitude, inverse participation ratio) of the principal component.
    fn concentration(&self, w: &[f64]) -> (f64, f64);
}

pub(crate) struct DescentParams {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step: StepRule,
}

pub(crate) struct DescentResult {
    pub w: Vec<f64>,
    pub level: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub level_trace: Vec<f64>,
    pub concentration: Vec<(f64, f64)>,
}

/// Level rise, in units of the Armijo slack, tolerated by the gradient-norm
/// fallback. Summation noise in the level grows with the grid size.
const ROUNDOFF_LEVEL_RISE: f64 = 1e3;

struct RayPoint {
    w: Vec<f64>,
    level: f64,
    q: f64,
    /// Riesz gradient of F at the Nehari-scaled point.
    grad: Vec<f64>,
}

fn nehari_point<P: RayProblem>(prob: &P, mut w: Vec<f64>) -> Result<RayPoint> {
    let n = prob.len();
    let p = prob.exponent();
    let mut qg = vec![0.0; n];
    let mut ng = vec![0.0; n];
    let q = prob.quadratic(&w, &mut qg);
    let pw = prob.power(&w, &mut ng);
    let (t, level) = ray_scale_and_level(q, pw, p)?;
    let tp = t.powf(p);
    let mut grad = vec![0.0; n];
    for i in 0..n {
        w[i] *= t;
        grad[i] = t * qg[i] - tp * ng[i];
    }
    Ok(RayPoint { w, level, q: t * t * q, grad })
}

pub(crate) fn nehari_descent<P: RayProblem>(prob: &P, w0: Vec<f64>, params: &DescentParams) -> Result<DescentResult> {
    let p = prob.exponent();
    let mut point = nehari_point(prob, w0)?;
    let mut step = params.step.initial_step;
    let max_step = params.step.initial_step * 2.0;
    let mut level_trace = vec![point.level];
    let mut concentration = vec![prob.concentration(&point.w)];
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = prob.inner(&point.grad, &point.grad).sqrt();

    while iterations < params.max_iters {
        if residual < params.grad_tol {
            converged = true;
            break;
        }
        // dℓ/dα along −grad at α = 0, with ∇ℓ = 2(p+1)/(p−1) · ℓ/Q · ∇F on the manifold.
        let slope = -2.0 * (p + 1.0) / (p - 1.0) * point.level / point.q * residual * residual;
        let slack = 8.0 * f64::EPSILON * point.level.abs();
        let mut failures = 0;
        let accepted = loop {
            let trial: Vec<f64> = point.w.iter().zip(&point.grad).map(|(w, g)| w - step * g).collect();
            let candidate = nehari_point(prob, trial)?;
            let decrease = params.step.sufficient_decrease * step * slope;
            if candidate.level <= point.level + decrease + slack {
                break Some(candidate);
            }
            // Below round-off the level no longer resolves the Armijo decrease;
            // fall back to a decrease of the gradient norm.
            if -decrease < slack
                && candidate.level <= point.level + ROUNDOFF_LEVEL_RISE * slack
                && prob.inner(&candidate.grad, &candidate.grad).sqrt() < residual
            {
                break Some(candidate);
            }
            step *= params.step.shrink;
            failures += 1;
            if failures >= params.step.max_backtracks {
                break None;
            }
        };
        iterations += 1;
        let Some(candidate) = accepted else {
            break;
        };
        if failures == 0 {
            step = (step * 2.0).min(max_step);
        }
        point = candidate;
        residual = prob.inner(&point.grad, &point.grad).sqrt();
        level_trace.push(point.level);
        concentration.push(prob.concentration(&point.w));
    }
    if !converged && residual < params.grad_tol {
        converged = true;
    }
    Ok(DescentResult { w: point.w, level: point.level, residual, iterations, converged, level_trace, concentration })
}
