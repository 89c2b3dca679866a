//! Functionals of the nonlocal problem on a box.
//!
//! With `u = Σ a_k φ_k`,
//!
//! ```text
//! Q(u) = Σ a_k² (λ_k − γ λ_k^{-m})            (= ∫|∇u|² − γ ∫|(-Δ)^{-m/2} u|²)
//! P(u) = ∫ |u|^{p+1}                          (refined-grid quadrature)
//! F(u) = Q(u)/2 − P(u)/(p+1)
//! ```
//!
//! Gradients are returned as H₀¹ Riesz representatives, i.e. the field `g`
//! with `⟨g, h⟩_{H₀¹} = F'(u)[h]` for every `h` in the basis span.

use alloc::{format, sync::Arc, vec::Vec};
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use crate::spectral::{BoxBasis, SpectralField};
use crate::{Error, Result};

/// Parameters of `-Δu = γ(-Δ)^{-m}u + |u|^{p-1}u` on a box.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub basis: Arc<BoxBasis>,
    pub gamma: f64,
    pub p: f64,
    pub m: u32,
    /// Evaluate the power term on `u⁺` instead of `u`.
    pub positive_part: bool,
}

impl ProblemConfig {
    pub fn new(basis: &Arc<BoxBasis>, gamma: f64, p: f64, m: u32) -> Result<Self> {
        let cfg = ProblemConfig { basis: basis.clone(), gamma, p, m, positive_part: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_positive_part(mut self) -> Self {
        self.positive_part = true;
        self
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        ProblemConfig { gamma, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfiguration(format!("gamma must be a nonnegative number, got {}", self.gamma)));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::InvalidConfiguration(format!("p must exceed 1, got {}", self.p)));
        }
        if self.m < 1 {
            return Err(Error::InvalidConfiguration("m must be at least 1".into()));
        }
        Ok(())
    }

    /// `λ₁^{m+1}`, the supremum of admissible γ.
    pub fn threshold(&self) -> f64 {
        self.basis.lambda1().powi(self.m as i32 + 1)
    }

    /// Critical exponent `2* = 2d/(d-2)` of the box dimension, if `d ≥ 3`.
    pub fn critical_exponent(&self) -> Option<f64> {
        let d = self.basis.dim() as f64;
        (self.basis.dim() >= 3).then(|| 2.0 * d / (d - 2.0))
    }

    /// `d ≤ 2` or `p < 2* − 1`.
    pub fn subcritical_safe(&self) -> bool {
        match self.critical_exponent() {
            None => true,
            Some(crit) => self.p < crit - 1.0,
        }
    }

    /// Per-mode multiplier `λ_k − γ λ_k^{-m}` of the quadratic form.
    pub(crate) fn quadratic_symbol(&self, lambda: f64) -> f64 {
        lambda - self.gamma * lambda.powi(-(self.m as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub quadratic: f64,
    pub nonlinear: f64,
    pub energy: f64,
    pub gradient_norm: f64,
}

/// `P(u)` together with the projection `Π(|u|^{p-1}u)` (or `Π((u⁺)^p)`).
#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    pub integral: f64,
    pub projected: SpectralField,
}

pub fn nonlinear_terms(u: &SpectralField, cfg: &ProblemConfig) -> NonlinearTerms {
    let basis = u.basis();
    let w = basis.refined_cell_volume();
    let p = cfg.p;
    let mut values = u.sample_refined();
    let mut integral = 0.0;
    for v in values.iter_mut() {
        let x = if cfg.positive_part { v.max(0.0) } else { *v };
        let a = x.abs();
        // |x|^{p-1} x, computed so that integer p stays exact.
        let pow = if p == p.round() && p < 32.0 { a.powi(p as i32 - 1) } else { a.powf(p - 1.0) };
        let n = pow * x;
        integral += n * x;
        *v = n;
    }
    let projected =
        SpectralField::from_coeffs(basis, basis.project_refined(&values)).expect("projection preserves the basis size");
    NonlinearTerms { integral: w * integral, projected }
}

/// `Q(u) = Σ a_k² (λ_k − γλ_k^{-m})`. May be nonpositive when `γ ≥ λ₁^{m+1}`.
pub fn quadratic_part(u: &SpectralField, cfg: &ProblemConfig) -> f64 {
    u.coeffs().iter().zip(cfg.basis.eigenvalues()).map(|(a, &l)| a * a * cfg.quadratic_symbol(l)).sum()
}

/// `P(u) = ∫|u|^{p+1}` on the refined grid.
pub fn nonlinear_part(u: &SpectralField, cfg: &ProblemConfig) -> f64 {
    nonlinear_terms(u, cfg).integral
}

/// H₀¹ Riesz representative of `F'(u)`:
/// `g = u − γ(-Δ)^{-(m+1)}u − (-Δ)^{-1}Π(|u|^{p-1}u)`.
pub fn riesz_gradient(u: &SpectralField, cfg: &ProblemConfig) -> SpectralField {
    let terms = nonlinear_terms(u, cfg);
    gradient_from_terms(u, cfg, &terms.projected)
}

pub(crate) fn gradient_from_terms(u: &SpectralField, cfg: &ProblemConfig, projected: &SpectralField) -> SpectralField {
    let coeffs = u
        .coeffs()
        .iter()
        .zip(projected.coeffs())
        .zip(cfg.basis.eigenvalues())
        .map(|((a, n), &l)| a * cfg.quadratic_symbol(l) / l - n / l)
        .collect();
    SpectralField::from_coeffs(u.basis(), coeffs).expect("same basis")
}

pub fn energy_scalar(u: &SpectralField, cfg: &ProblemConfig) -> EnergyReport {
    let quadratic = quadratic_part(u, cfg);
    let terms = nonlinear_terms(u, cfg);
    let grad = gradient_from_terms(u, cfg, &terms.projected);
    EnergyReport {
        quadratic,
        nonlinear: terms.integral,
        energy: 0.5 * quadratic - terms.integral / (cfg.p + 1.0),
        gradient_norm: grad.h1_norm(),
    }
}

/// `Σ a_k² λ_k / Σ a_k² λ_k^{-m}`; its infimum over the basis span is `λ₁^{m+1}`.
pub fn rayleigh_quotient_nonlocal(u: &SpectralField, cfg: &ProblemConfig) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, &l) in u.coeffs().iter().zip(cfg.basis.eigenvalues()) {
        num += a * a * l;
        den += a * a * l.powi(-(cfg.m as i32));
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("Rayleigh quotient of the zero field".into()));
    }
    Ok(num / den)
}

/// Edges `(a, b)` of the coupling `∫uv₁ + ∫uv_m + Σ∫v_i v_{i+1}` over the
/// component indices `0 = u, i = v_i`. For `m = 1` the edge `(0, 1)`
/// appears twice.
fn coupling_edges(m: usize) -> Vec<(usize, usize)> {
    let mut edges = alloc::vec![(0, 1), (0, m)];
    edges.extend((1..m).map(|i| (i, i + 1)));
    edges
}

fn check_system(fields: &[SpectralField], cfg: &ProblemConfig) -> Result<()> {
    let expected = cfg.m as usize + 1;
    if fields.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "system needs {expected} components (u, v_1..v_m), got {}",
            fields.len()
        )));
    }
    for f in fields {
        if !f.basis().same_as(&cfg.basis) {
            return Err(Error::ShapeMismatch { expected: cfg.basis.len(), found: f.basis().len() });
        }
    }
    Ok(())
}

/// The cyclic-coupling system functional
///
/// ```text
/// J(U) = ½Σ‖∇U_i‖² − γ^{1/(m+1)}/(m+1)·(∫uv₁ + ∫uv_m + Σ∫v_i v_{i+1}) − P(u)/(p+1)
/// ```
///
/// For `m = 1` this is `½‖∇u‖² + ½‖∇v‖² − √γ∫uv − P(u)/(p+1)`, whose
/// critical points solve `-Δu = √γv + |u|^{p-1}u, -Δv = √γu`. For `m ≥ 2`
/// its critical points do not satisfy the chain system of
/// [`crate::chain`]; see [`crate::chain::ChainFunctional`] for the
/// functional that does.
pub fn system_energy(fields: &[SpectralField], cfg: &ProblemConfig) -> Result<f64> {
    check_system(fields, cfg)?;
    let m = cfg.m as usize;
    let c = cfg.gamma.powf(1.0 / (m as f64 + 1.0));
    let kinetic: f64 = fields.iter().map(|f| f.h1_inner(f)).sum();
    let coupling: f64 = coupling_edges(m).iter().map(|&(a, b)| fields[a].dot(&fields[b])).sum();
    let power = nonlinear_part(&fields[0], cfg);
    Ok(0.5 * kinetic - c / (m as f64 + 1.0) * coupling - power / (cfg.p + 1.0))
}

/// H₀¹ Riesz representatives of the partial derivatives of [`system_energy`].
pub fn system_riesz_gradient(fields: &[SpectralField], cfg: &ProblemConfig) -> Result<Vec<SpectralField>> {
    check_system(fields, cfg)?;
    let m = cfg.m as usize;
    let weight = cfg.gamma.powf(1.0 / (m as f64 + 1.0)) / (m as f64 + 1.0);
    // Start from the L² gradient: -Δ U_i − coupling − power term.
    let mut grads: Vec<SpectralField> = fields.iter().map(|f| f.apply_power(1.0)).collect();
    for (a, b) in coupling_edges(m) {
        grads[a].axpy(-weight, &fields[b]);
        grads[b].axpy(-weight, &fields[a]);
    }
    let terms = nonlinear_terms(&fields[0], cfg);
    grads[0].axpy(-1.0, &terms.projected);
    Ok(grads.into_iter().map(|g| g.apply_power(-1.0)).collect())
}

/// Optimal ray scaling `t* = (Q/P)^{1/(p-1)}` and the ray maximum
/// `max_t F(tu) = (1/2 − 1/(p+1)) t*² Q`.
pub fn nehari_scale_and_level(u: &SpectralField, cfg: &ProblemConfig) -> Result<(f64, f64)> {
    let q = quadratic_part(u, cfg);
    let p = nonlinear_part(u, cfg);
    ray_scale_and_level(q, p, cfg.p)
}

pub(crate) fn ray_scale_and_level(q: f64, p_int: f64, p: f64) -> Result<(f64, f64)> {
    if !(q > 0.0) {
        return Err(Error::SupercriticalDirection { quadratic: q });
    }
    if !(p_int > 0.0) {
        return Err(Error::InvalidArgument("power term vanishes along this direction (no ray maximum)".into()));
    }
    let t = (q / p_int).powf(1.0 / (p - 1.0));
    Ok((t, (0.5 - 1.0 / (p + 1.0)) * t * t * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_box_basis, first_eigenpair, GridField};
    use core::f64::consts::PI;

    fn unit_square(n: usize) -> Arc<BoxBasis> {
        build_box_basis(&[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn quadratic_part_on_first_mode() {
        let b = unit_square(6);
        let (l1, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 0.0, 3.0, 1).unwrap();
        assert!((quadratic_part(&phi, &cfg) - 2.0 * PI * PI).abs() < 1e-12);
        let cfg = ProblemConfig::new(&b, l1 * l1, 3.0, 1).unwrap();
        assert!(quadratic_part(&phi, &cfg).abs() < 1e-12);
        let cfg = ProblemConfig::new(&b, l1.powi(3), 3.0, 2).unwrap();
        assert!(quadratic_part(&phi, &cfg).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_problem_config() {
        let b = unit_square(2);
        assert!(ProblemConfig::new(&b, -1.0, 3.0, 1).is_err());
        assert!(ProblemConfig::new(&b, 0.0, 1.0, 1).is_err());
        assert!(ProblemConfig::new(&b, 0.0, 3.0, 0).is_err());
    }

    #[test]
    fn subcritical_flag() {
        let b3 = build_box_basis(&[1.0, 1.0, 1.0], &[2, 2, 2]).unwrap();
        assert!(ProblemConfig::new(&b3, 0.0, 3.0, 1).unwrap().subcritical_safe());
        assert!(!ProblemConfig::new(&b3, 0.0, 5.0, 1).unwrap().subcritical_safe());
        assert!(ProblemConfig::new(&unit_square(2), 0.0, 9.0, 1).unwrap().subcritical_safe());
    }

    #[test]
    fn nonlinear_part_analytic_values() {
        let b = build_box_basis(&[1.0], &[8]).unwrap();
        let cfg = ProblemConfig::new(&b, 0.0, 3.0, 1).unwrap();
        assert_eq!(nonlinear_part(&SpectralField::zeros(&b), &cfg), 0.0);
        // sin(πx) = φ₁/√2.
        let u = GridField::from_fn(&b, |x| (PI * x[0]).sin()).to_spectral();
        assert!((nonlinear_part(&u, &cfg) - 3.0 / 8.0).abs() < 1e-14);

        let cfg = ProblemConfig::new(&b, 0.0, 2.5, 1).unwrap();
        let bump = GridField::from_fn(&b, |x| (PI * x[0]).sin().powi(2)).to_spectral();
        let p1 = nonlinear_part(&bump, &cfg);
        let p2 = nonlinear_part(&bump.scaled(2.0), &cfg);
        assert!((p2 / p1 - 2.0f64.powf(3.5)).abs() < 1e-10 * 2.0f64.powf(3.5));
    }

    #[test]
    fn energy_zero_and_mountain_pass_shape() {
        let b = unit_square(8);
        let (l1, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 0.5 * l1 * l1, 3.0, 1).unwrap();
        let zero = energy_scalar(&SpectralField::zeros(&b), &cfg);
        assert_eq!(zero.energy, 0.0);
        assert_eq!(zero.gradient_norm, 0.0);
        assert!(energy_scalar(&phi.scaled(0.1), &cfg).energy > 0.0);
        assert!(energy_scalar(&phi.scaled(100.0), &cfg).energy < 0.0);
        let r = energy_scalar(&phi.scaled(3.0), &cfg);
        assert!((r.energy - (r.quadratic / 2.0 - r.nonlinear / 4.0)).abs() <= 1e-12 * r.energy.abs());
    }

    #[test]
    fn quadratic_only_gradient_at_first_mode() {
        let b = unit_square(5);
        let (l1, phi) = first_eigenpair(&b);
        for (gamma, m) in [(0.3 * l1 * l1, 1u32), (0.7 * l1.powi(3), 2)] {
            let cfg = ProblemConfig::new(&b, gamma, 3.0, m).unwrap();
            let terms_zero = SpectralField::zeros(&b);
            let g = gradient_from_terms(&phi, &cfg, &terms_zero);
            // Coefficient algebra: g = (1 − γ λ₁^{-(m+1)}) φ₁.
            let expected = 1.0 - gamma / l1.powi(m as i32 + 1);
            assert!((g.coeffs()[0] - expected).abs() < 1e-14);
            assert!(g.coeffs()[1..].iter().all(|a| *a == 0.0));
        }
        let cfg = ProblemConfig::new(&b, l1 * l1, 3.0, 1).unwrap();
        let g = gradient_from_terms(&phi, &cfg, &SpectralField::zeros(&b));
        assert!(g.h1_norm() < 1e-14);
    }

    #[test]
    fn rayleigh_quotient_values() {
        let b = unit_square(4);
        let (l1, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 0.0, 3.0, 1).unwrap();
        assert!((rayleigh_quotient_nonlocal(&phi, &cfg).unwrap() / (l1 * l1) - 1.0).abs() < 1e-14);
        let k = SpectralField::mode(&b, &[2, 3]).unwrap();
        let lk = b.eigenvalue(&[2, 3]).unwrap();
        assert!((rayleigh_quotient_nonlocal(&k, &cfg).unwrap() / (lk * lk) - 1.0).abs() < 1e-14);
        assert!(rayleigh_quotient_nonlocal(&SpectralField::zeros(&b), &cfg).is_err());
    }

    #[test]
    fn nehari_level_closed_forms() {
        let (t, level) = ray_scale_and_level(1.0, 1.0, 3.0).unwrap();
        assert_eq!((t, level), (1.0, 0.25));
        assert!(matches!(ray_scale_and_level(0.0, 1.0, 3.0), Err(Error::SupercriticalDirection { .. })));
        assert!(matches!(ray_scale_and_level(1.0, 0.0, 3.0), Err(Error::InvalidArgument(_))));

        // φ₁ = 2 sin πx sin πy on the unit square: Q = 2π², P = 16·(3/8)² = 9/4,
        // level = Q²/(4P) = 4π⁴/9.
        let b = unit_square(8);
        let (_, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 0.0, 3.0, 1).unwrap();
        assert!((nonlinear_part(&phi, &cfg) - 9.0 / 4.0).abs() < 1e-13);
        let (_, level) = nehari_scale_and_level(&phi, &cfg).unwrap();
        assert!((level / (4.0 * PI.powi(4) / 9.0) - 1.0).abs() < 1e-13);
        let (_, level2) = nehari_scale_and_level(&phi.scaled(2.0), &cfg).unwrap();
        assert!((level2 / level - 1.0).abs() < 1e-13);
    }

    #[test]
    fn system_energy_reductions() {
        let b = unit_square(6);
        let (l1, phi) = first_eigenpair(&b);
        let cfg = ProblemConfig::new(&b, 0.0, 3.0, 1).unwrap();
        let zero = [SpectralField::zeros(&b), SpectralField::zeros(&b)];
        assert_eq!(system_energy(&zero, &cfg).unwrap(), 0.0);

        let u = phi.scaled(2.0);
        let v = SpectralField::mode(&b, &[1, 2]).unwrap().scaled(0.5);
        let j = system_energy(&[u.clone(), v.clone()], &cfg).unwrap();
        let decoupled = 0.5 * u.h1_inner(&u) + 0.5 * v.h1_inner(&v) - nonlinear_part(&u, &cfg) / 4.0;
        assert!((j - decoupled).abs() < 1e-12 * decoupled.abs());

        let cfg = ProblemConfig::new(&b, 0.4 * l1 * l1, 3.0, 1).unwrap();
        assert!(system_energy(core::slice::from_ref(&u), &cfg).is_err());
        // Coupling weight reduces to √γ ∫uv.
        let j = system_energy(&[u.clone(), v.clone()], &cfg).unwrap();
        let direct =
            0.5 * u.h1_inner(&u) + 0.5 * v.h1_inner(&v) - cfg.gamma.sqrt() * u.dot(&v) - nonlinear_part(&u, &cfg) / 4.0;
        assert!((j - direct).abs() < 1e-12 * direct.abs());
    }
}
