//! Climbing-string mountain-pass search.
//!
//! A polygonal path from `0` to an endpoint `û` with `F(û) < 0` is deformed
//! as follows. The highest interior node climbs along the reflected
//! gradient `−g + 2⟨g, τ⟩τ`, where `τ` is the unit H₀¹ tangent. Nodes on
//! the uphill side descend along the normal component of `−g` and are
//! redistributed to equal arclength. Nodes on the downhill side are placed
//! on the ray through the climbing node, past the zero crossing of `F`. The iteration stops when
//! the gradient at the climbing node is below tolerance.

use alloc::{vec, vec::Vec};
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use super::nehari::{finish, threshold_error};
use super::{concentration_of, SolveConfig, SolveOutcome};
use crate::energy::{gradient_from_terms, nehari_scale_and_level, nonlinear_terms, quadratic_part, ProblemConfig};
use crate::spectral::SpectralField;
use crate::{Error, Result};

const PATH_NODES: usize = 16;

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub outcome: SolveOutcome,
    /// Path endpoint with `F(û) < 0`.
    pub endpoint: SpectralField,
    pub endpoint_energy: f64,
    /// Index of the path maximum among `0..=nodes`.
    pub max_index: usize,
    pub nodes: usize,
}

fn energy_and_gradient(u: &SpectralField, cfg: &ProblemConfig) -> (f64, SpectralField) {
    let terms = nonlinear_terms(u, cfg);
    let f = 0.5 * quadratic_part(u, cfg) - terms.integral / (cfg.p + 1.0);
    (f, gradient_from_terms(u, cfg, &terms.projected))
}

fn unit_tangent(prev: &SpectralField, next: &SpectralField) -> SpectralField {
    let d = next.sub(prev);
    let n = d.h1_norm();
    if n > 0.0 {
        d.scaled(1.0 / n)
    } else {
        d
    }
}

/// Redistributes `path[lo..=hi]` to equal H₀¹ arclength, keeping both ends.
fn reparametrize(path: &mut [SpectralField], lo: usize, hi: usize) {
    if hi < lo + 2 {
        return;
    }
    let len = hi - lo;
    let mut arc = vec![0.0; len + 1];
    for i in 1..=len {
        arc[i] = arc[i - 1] + path[lo + i].sub(&path[lo + i - 1]).h1_norm();
    }
    let total = arc[len];
    if !(total > 0.0) {
        return;
    }
    let old: Vec<SpectralField> = path[lo..=hi].to_vec();
    let mut seg = 0;
    for i in 1..len {
        let s = total * i as f64 / len as f64;
        while seg + 1 < len && arc[seg + 1] < s {
            seg += 1;
        }
        let piece = arc[seg + 1] - arc[seg];
        let theta = if piece > 0.0 { (s - arc[seg]) / piece } else { 0.0 };
        let mut node = old[seg].scaled(1.0 - theta);
        node.axpy(theta, &old[seg + 1]);
        path[lo + i] = node;
    }
}

/// Mountain-pass critical point of `F⁺` by a climbing string.
pub fn solve_mountain_pass_path(cfg: &SolveConfig) -> Result<PathOutcome> {
    cfg.check()?;
    let problem = cfg.problem.clone().with_positive_part();
    let seed = cfg.seed.build(&problem.basis)?;
    let (t, _) = nehari_scale_and_level(&seed, &problem).map_err(|e| threshold_error(e, &problem))?;
    let grad_tol = cfg.absolute_tolerance(&seed.scaled(t));

    let mut scale = 1.0;
    let mut endpoint = seed.clone();
    let mut endpoint_energy = energy_and_gradient(&endpoint, &problem).0;
    let mut doublings = 0;
    while !(endpoint_energy < 0.0) {
        scale *= 2.0;
        endpoint = seed.scaled(scale);
        endpoint_energy = energy_and_gradient(&endpoint, &problem).0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::InvalidArgument("no endpoint with negative energy along the seed ray".into()));
        }
    }
    // One more doubling keeps the endpoint well away from the zero crossing of F.
    endpoint = seed.scaled(2.0 * scale);
    endpoint_energy = energy_and_gradient(&endpoint, &problem).0;

    let n = PATH_NODES;
    let mut path: Vec<SpectralField> = (0..=n).map(|i| endpoint.scaled(i as f64 / n as f64)).collect();
    let mut step = cfg.step_rule.initial_step;
    let mut level_trace = Vec::new();
    let mut concentration = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut best_residual = f64::INFINITY;
    let mut stalls = 0;
    let mut k;

    loop {
        let mut values = vec![0.0; n + 1];
        values[n] = endpoint_energy;
        let mut grads: Vec<SpectralField> = vec![SpectralField::zeros(&problem.basis); n + 1];
        for i in 1..n {
            let (f, g) = energy_and_gradient(&path[i], &problem);
            values[i] = f;
            grads[i] = g;
        }
        k = (1..n).fold(1, |best, i| if values[i] > values[best] { i } else { best });
        let residual = grads[k].h1_norm();
        level_trace.push(values[k]);
        concentration.push(concentration_of(&path[k]));
        if residual < grad_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        if residual < best_residual {
            best_residual = residual;
            stalls = 0;
        } else {
            stalls += 1;
            // Repeated lack of progress: the step overshoots the unstable direction.
            if stalls >= 20 {
                step *= cfg.step_rule.shrink;
                stalls = 0;
                best_residual = residual;
                if step < cfg.step_rule.initial_step * cfg.step_rule.shrink.powi(cfg.step_rule.max_backtracks as i32) {
                    break;
                }
            }
        }
        iterations += 1;

        let tau = unit_tangent(&path[k - 1], &path[k + 1]);
        let gk = &grads[k];
        let along = gk.h1_inner(&tau);
        let mut climb = path[k].clone();
        climb.axpy(-step, gk);
        climb.axpy(2.0 * step * along, &tau);

        for i in 1..k {
            let ti = unit_tangent(&path[i - 1], &path[i + 1]);
            let gi = &grads[i];
            let a = gi.h1_inner(&ti);
            let mut node = path[i].clone();
            node.axpy(-step, gi);
            node.axpy(step * a, &ti);
            path[i] = node;
        }
        path[k] = climb;
        reparametrize(&mut path, 0, k);
        // Downhill nodes follow the ray through the climbing node out to twice
        // the zero crossing of F on that ray.
        let far = match nehari_scale_and_level(&path[k], &problem) {
            Ok((t, _)) => 2.0 * t * ((problem.p + 1.0) / 2.0).powf(1.0 / (problem.p - 1.0)),
            Err(_) => 0.0,
        };
        for i in k + 1..n {
            let theta = (i - k) as f64 / (n - k) as f64;
            path[i] = if far > 1.0 {
                path[k].scaled(1.0 + theta * (far - 1.0))
            } else {
                let mut node = path[k].scaled(1.0 - theta);
                node.axpy(theta, &endpoint);
                node
            };
        }
    }

    let state = path[k].clone();
    let level = level_trace.last().copied().unwrap_or(0.0);
    let outcome = finish(state, &cfg.problem, level, iterations, converged, grad_tol, concentration, level_trace);
    Ok(PathOutcome { outcome, endpoint, endpoint_energy, max_index: k, nodes: n })
}
