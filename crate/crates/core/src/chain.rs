//! The chain system equivalent to `-Δu = γ(-Δ)^{-m}u + |u|^{p-1}u`:
//!
//! ```text
//! -Δu   = c v₁ + |u|^{p-1}u
//! -Δv_i = c v_{i+1}          (1 ≤ i < m)
//! -Δv_m = c u                 with c = γ^{1/(m+1)}.
//! ```
//!
//! Eliminating the `v_i` gives `v_{m-i+1} = c^i(-Δ)^{-i}u`, which is what
//! [`lift_to_system`] computes.
//!
//! The cyclic functional of [`crate::energy::system_energy`] is variational
//! for this system only when `m = 1`. [`ChainFunctional`] is a functional
//! whose critical points are exactly the chain solutions for every `m`:
//!
//! ```text
//! J(u, v) = ½‖∇u‖² − c∫u v₁ + ½ Σ_k v_kᵀ A_k v_k − P(u)/(p+1),
//! A_k = e₁e₁ᵀ/x₁ + λ_k (I − x̂x̂ᵀ),   x_i = c^{m-i} λ_k^{-(m-i+1)},
//! ```
//!
//! where `v_k ∈ ℝ^m` collects the `k`-th sine coefficients of `v₁..v_m`.
//! Each `A_k` is positive definite with `A_k x = e₁`, so the minimiser in `v`
//! is the chain lift and the reduced functional is `F`. For `m = 1`,
//! `A_k = λ_k` and `J` is the cyclic functional.

use alloc::{format, vec, vec::Vec};
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use crate::energy::{nonlinear_terms, ProblemConfig};
use crate::solver::ray::{nehari_descent, DescentParams, RayProblem};
use crate::solver::{concentration_of, SolveConfig};
use crate::spectral::SpectralField;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SystemState {
    pub u: SpectralField,
    /// `v₁ … v_m`.
    pub v: Vec<SpectralField>,
}

impl SystemState {
    pub fn new(u: SpectralField, v: Vec<SpectralField>, cfg: &ProblemConfig) -> Result<Self> {
        let state = SystemState { u, v };
        state.check(cfg)?;
        Ok(state)
    }

    pub fn zeros(cfg: &ProblemConfig) -> Self {
        let z = SpectralField::zeros(&cfg.basis);
        SystemState { u: z.clone(), v: vec![z; cfg.m as usize] }
    }

    /// `[u, v₁, …, v_m]`, the layout of [`crate::energy::system_energy`].
    pub fn components(&self) -> Vec<SpectralField> {
        let mut out = vec![self.u.clone()];
        out.extend(self.v.iter().cloned());
        out
    }

    fn check(&self, cfg: &ProblemConfig) -> Result<()> {
        if self.v.len() != cfg.m as usize {
            return Err(Error::InvalidArgument(format!(
                "system state needs {} v-components, got {}",
                cfg.m,
                self.v.len()
            )));
        }
        for f in core::iter::once(&self.u).chain(&self.v) {
            if !f.basis().same_as(&cfg.basis) {
                return Err(Error::ShapeMismatch { expected: cfg.basis.len(), found: f.basis().len() });
            }
        }
        Ok(())
    }
}

fn coupling(cfg: &ProblemConfig) -> f64 {
    cfg.gamma.powf(1.0 / (cfg.m as f64 + 1.0))
}

/// `v_{m-i+1} = γ^{i/(m+1)} (-Δ)^{-i} u` for `i = 1..m`.
pub fn lift_to_system(u: &SpectralField, cfg: &ProblemConfig) -> Result<SystemState> {
    if !(cfg.gamma > 0.0) {
        return Err(Error::InvalidArgument("the chain lift needs gamma > 0".into()));
    }
    if !u.basis().same_as(&cfg.basis) {
        return Err(Error::ShapeMismatch { expected: cfg.basis.len(), found: u.basis().len() });
    }
    let m = cfg.m as usize;
    let c = coupling(cfg);
    let mut v = vec![SpectralField::zeros(&cfg.basis); m];
    let mut cur = u.clone();
    for i in 1..=m {
        cur = cur.apply_power(-1.0).scaled(c);
        v[m - i] = cur.clone();
    }
    Ok(SystemState { u: u.clone(), v })
}

/// `H^{-1}` norms of the `m + 1` equation residuals, in the order
/// `u, v₁, …, v_m`.
pub fn system_residual(state: &SystemState, cfg: &ProblemConfig) -> Result<Vec<f64>> {
    state.check(cfg)?;
    let m = cfg.m as usize;
    let c = coupling(cfg);
    let lambdas = cfg.basis.eigenvalues();
    let dual =
        |r: &SpectralField| -> f64 { r.coeffs().iter().zip(lambdas).map(|(x, l)| x * x / l).sum::<f64>().sqrt() };
    let mut out = Vec::with_capacity(m + 1);
    let n = nonlinear_terms(&state.u, cfg).projected;
    let mut r0 = state.u.apply_power(1.0);
    r0.axpy(-c, &state.v[0]);
    r0.axpy(-1.0, &n);
    out.push(dual(&r0));
    for i in 0..m {
        let next = if i + 1 < m { &state.v[i + 1] } else { &state.u };
        let mut r = state.v[i].apply_power(1.0);
        r.axpy(-c, next);
        out.push(dual(&r));
    }
    Ok(out)
}

/// Functional whose critical points are the chain solutions; see the module docs.
#[derive(Debug, Clone)]
pub struct ChainFunctional {
    cfg: ProblemConfig,
    c: f64,
    /// Per mode: the chain vector `x`.
    chain: Vec<Vec<f64>>,
}

impl ChainFunctional {
    pub fn new(cfg: &ProblemConfig) -> Result<Self> {
        cfg.validate()?;
        if !(cfg.gamma > 0.0) {
            return Err(Error::InvalidArgument("the chain functional needs gamma > 0".into()));
        }
        let m = cfg.m as usize;
        let c = coupling(cfg);
        let chain = cfg
            .basis
            .eigenvalues()
            .iter()
            .map(|&l| (1..=m).map(|i| c.powi((m - i) as i32) * l.powi(-((m - i + 1) as i32))).collect())
            .collect();
        Ok(ChainFunctional { cfg: cfg.clone(), c, chain })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.cfg
    }

    fn n(&self) -> usize {
        self.cfg.basis.len()
    }

    fn m(&self) -> usize {
        self.cfg.m as usize
    }

    /// `yᵀ A_k z` for the mode-`k` entries of the v-blocks `y`, `z`.
    fn mode_inner(&self, k: usize, y: &[f64], z: &[f64]) -> f64 {
        let n = self.n();
        let x = &self.chain[k];
        let l = self.cfg.basis.eigenvalues()[k];
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let (mut yz, mut xy, mut xz) = (0.0, 0.0, 0.0);
        for i in 0..self.m() {
            let (a, b) = (y[i * n + k], z[i * n + k]);
            yz += a * b;
            xy += x[i] * a;
            xz += x[i] * b;
        }
        y[k] * z[k] / x[0] + l * (yz - xy * xz / xx)
    }

    fn flatten(&self, state: &SystemState) -> Vec<f64> {
        let mut w = state.u.coeffs().to_vec();
        for v in &state.v {
            w.extend_from_slice(v.coeffs());
        }
        w
    }

    fn unflatten(&self, w: &[f64]) -> SystemState {
        let n = self.n();
        let basis = &self.cfg.basis;
        let field = |i: usize| SpectralField::from_coeffs(basis, w[i * n..(i + 1) * n].to_vec()).expect("block size");
        SystemState { u: field(0), v: (1..=self.m()).map(field).collect() }
    }

    fn quadratic_flat(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n();
        let lambdas = self.cfg.basis.eigenvalues();
        let mut q = 0.0;
        for k in 0..n {
            let a = w[k];
            let l = lambdas[k];
            let v1 = w[n + k];
            q += l * a * a - 2.0 * self.c * a * v1;
            grad[k] = a - self.c * v1 / l;
            for i in 0..self.m() {
                grad[(i + 1) * n + k] = w[(i + 1) * n + k] - self.c * a * self.chain[k][i];
            }
        }
        let v = &w[n..];
        for k in 0..n {
            q += self.mode_inner(k, v, v);
        }
        q
    }

    fn power_flat(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n();
        let u = SpectralField::from_coeffs(&self.cfg.basis, w[..n].to_vec()).expect("block size");
        let terms = nonlinear_terms(&u, &self.cfg);
        for ((g, t), l) in grad[..n].iter_mut().zip(terms.projected.coeffs()).zip(self.cfg.basis.eigenvalues()) {
            *g = t / l;
        }
        grad[n..].iter_mut().for_each(|g| *g = 0.0);
        terms.integral
    }

    fn inner_flat(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n();
        let lambdas = self.cfg.basis.eigenvalues();
        let mut s: f64 = (0..n).map(|k| lambdas[k] * a[k] * b[k]).sum();
        for k in 0..n {
            s += self.mode_inner(k, &a[n..], &b[n..]);
        }
        s
    }

    pub fn value(&self, state: &SystemState) -> Result<f64> {
        state.check(&self.cfg)?;
        let w = self.flatten(state);
        let mut scratch = vec![0.0; w.len()];
        let q = self.quadratic_flat(&w, &mut scratch);
        let p = self.power_flat(&w, &mut scratch);
        Ok(0.5 * q - p / (self.cfg.p + 1.0))
    }

    /// Riesz gradient in the metric `H₀¹ ⊕ (⊕_k A_k)`.
    pub fn riesz_gradient(&self, state: &SystemState) -> Result<SystemState> {
        state.check(&self.cfg)?;
        let w = self.flatten(state);
        let mut qg = vec![0.0; w.len()];
        let mut pg = vec![0.0; w.len()];
        self.quadratic_flat(&w, &mut qg);
        self.power_flat(&w, &mut pg);
        let g: Vec<f64> = qg.iter().zip(&pg).map(|(a, b)| a - b).collect();
        Ok(self.unflatten(&g))
    }

    /// Norm of a state in the metric of [`Self::riesz_gradient`].
    pub fn norm(&self, state: &SystemState) -> Result<f64> {
        state.check(&self.cfg)?;
        let w = self.flatten(state);
        Ok(self.inner_flat(&w, &w).sqrt())
    }
}

impl RayProblem for ChainFunctional {
    fn len(&self) -> usize {
        self.n() * (self.m() + 1)
    }

    fn exponent(&self) -> f64 {
        self.cfg.p
    }

    fn quadratic(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        self.quadratic_flat(w, grad)
    }

    fn power(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        self.power_flat(w, grad)
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.inner_flat(a, b)
    }

    fn concentration(&self, w: &[f64]) -> (f64, f64) {
        let u = SpectralField::from_coeffs(&self.cfg.basis, w[..self.n()].to_vec()).expect("block size");
        concentration_of(&u)
    }
}

#[derive(Debug, Clone)]
pub struct SystemOutcome {
    pub state: SystemState,
    /// Value of [`ChainFunctional`] at the state; equals `F(u)` at a lifted solution.
    pub level: f64,
    /// [`system_residual`] of the state.
    pub residuals: Vec<f64>,
    /// Norm of the functional's Riesz gradient.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_tol: f64,
    pub level_trace: Vec<f64>,
}

impl SystemOutcome {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Mountain-pass solution of the chain system by descent on the joint ray
/// level `(u, v) ↦ max_t J(tu, tv)`, starting from `(seed, 0)`.
pub fn solve_system_mpa(cfg: &SolveConfig) -> Result<SystemOutcome> {
    cfg.check()?;
    let problem = cfg.problem.clone().with_positive_part();
    let functional = ChainFunctional::new(&problem)?;
    let seed = cfg.seed.build(&problem.basis)?;
    let mut start = SystemState::zeros(&problem);
    start.u = seed;
    let w0 = functional.flatten(&start);
    let mut scratch = vec![0.0; w0.len()];
    let q = functional.quadratic_flat(&w0, &mut scratch);
    let p = functional.power_flat(&w0, &mut scratch);
    let (t, _) = crate::energy::ray_scale_and_level(q, p, problem.p)
        .map_err(|e| crate::solver::nehari::threshold_error(e, &problem))?;
    let grad_tol = match cfg.grad_tol {
        crate::solver::Tolerance::Absolute(tol) => tol,
        crate::solver::Tolerance::RelativeToSeed(r) => r * t * functional.inner_flat(&w0, &w0).sqrt(),
    };
    let params = DescentParams { max_iters: cfg.max_iters, grad_tol, step: cfg.step_rule };
    let result =
        nehari_descent(&functional, w0, &params).map_err(|e| crate::solver::nehari::threshold_error(e, &problem))?;
    let state = functional.unflatten(&result.w);
    let residuals = system_residual(&state, &cfg.problem)?;
    Ok(SystemOutcome {
        state,
        level: result.level,
        residuals,
        gradient_norm: result.residual,
        iterations: result.iterations,
        converged: result.converged,
        grad_tol,
        level_trace: result.level_trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Lifts `u` and checks every chain equation against `10·grad_tol`.
pub fn equivalence_check(u: &SpectralField, cfg: &ProblemConfig, grad_tol: f64) -> Result<EquivalenceReport> {
    let state = lift_to_system(u, cfg)?;
    let residuals = system_residual(&state, cfg)?;
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(EquivalenceReport { pass: max_residual < 10.0 * grad_tol, residuals, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{riesz_gradient, system_riesz_gradient};
    use crate::spectral::{build_box_basis, first_eigenpair};

    #[test]
    fn lift_of_first_mode() {
        let b = build_box_basis(&[1.0, 1.0], &[5, 5]).unwrap();
        let (l1, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 1.0, 3.0, 2).unwrap();
        let s = lift_to_system(&phi, &cfg).unwrap();
        assert!((s.v[1].coeffs()[0] - 1.0 / l1).abs() < 1e-15);
        assert!((s.v[0].coeffs()[0] - 1.0 / (l1 * l1)).abs() < 1e-15);
        assert!(lift_to_system(&phi, &cfg.with_gamma(0.0)).is_err());
    }

    #[test]
    fn chain_functional_reduces_to_cyclic_for_m1() {
        let b = build_box_basis(&[1.0, 1.0], &[5, 5]).unwrap();
        let cfg = ProblemConfig::new(&b, 30.0, 3.0, 1).unwrap();
        let u = SpectralField::from_coeffs(&b, (0..25).map(|i| ((i * 7) % 11) as f64 * 0.1).collect()).unwrap();
        let v = SpectralField::from_coeffs(&b, (0..25).map(|i| ((i * 3) % 5) as f64 * 0.05).collect()).unwrap();
        let state = SystemState::new(u.clone(), vec![v.clone()], &cfg).unwrap();
        let j = ChainFunctional::new(&cfg).unwrap();
        let cyc = crate::energy::system_energy(&[u, v], &cfg).unwrap();
        assert!((j.value(&state).unwrap() - cyc).abs() < 1e-10 * cyc.abs().max(1.0));
    }

    #[test]
    fn chain_gradient_vanishes_in_v_at_lift() {
        let b = build_box_basis(&[1.0, 2.0], &[5, 4]).unwrap();
        for m in 1..=3u32 {
            let cfg = ProblemConfig::new(&b, 0.3 * b.lambda1().powi(m as i32 + 1), 3.0, m).unwrap();
            let u = SpectralField::from_coeffs(&b, (0..20).map(|i| 1.0 / (1.0 + i as f64)).collect()).unwrap();
            let s = lift_to_system(&u, &cfg).unwrap();
            let g = ChainFunctional::new(&cfg).unwrap().riesz_gradient(&s).unwrap();
            for v in &g.v {
                assert!(v.l2_norm() < 1e-14, "m = {m}");
            }
            let scalar = riesz_gradient(&u, &cfg);
            assert!(g.u.sub(&scalar).h1_norm() < 1e-12 * scalar.h1_norm());
        }
    }

    #[test]
    fn cyclic_functional_is_not_stationary_at_lift_for_m2() {
        let b = build_box_basis(&[1.0, 1.0], &[4, 4]).unwrap();
        let (_, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 0.5 * b.lambda1().powi(3), 3.0, 2).unwrap();
        let s = lift_to_system(&phi, &cfg).unwrap();
        let g = system_riesz_gradient(&s.components(), &cfg).unwrap();
        assert!(g[1].h1_norm() > 1e-3 * s.v[0].h1_norm());
    }
}
