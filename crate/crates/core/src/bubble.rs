//! Radial computations with Talenti bubbles in dimension `N ≥ 3`.
//!
//! The bubble is `u_ε(r) = (ε/(ε² + r²))^{(N-2)/2}` and the cut-off bubble
//! is `φ_ε = ψ_R u_ε` with `ψ_R = 1` on `[0, R]`, the linear ramp
//! `(2R − r)/R` on `[R, 2R]` and `0` beyond. Integrals are composite
//! Gauss–Legendre sums of `ω_{N-1} ∫ f(r) r^{N-1} dr` on a grid that is
//! logarithmic near the origin, linear on `[R, 2R]`, and mapped by
//! `r = r_end/s` on the tail.

use alloc::{format, vec, vec::Vec};
use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use crate::{Error, Result};

const GL_ORDER: usize = 12;
const DEFAULT_TOL: f64 = 1e-10;
const MAX_FIT_RESIDUAL: f64 = 0.1;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `Γ(n/2)` for a positive integer `n`.
fn gamma_half(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        // Γ(1/2) = √π, Γ(x + 1) = xΓ(x).
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Area `ω_{N-1} = 2π^{N/2}/Γ(N/2)` of the unit sphere in `ℝ^N`.
pub fn unit_sphere_area(dimension: usize) -> f64 {
    2.0 * PI.powf(dimension as f64 / 2.0) / gamma_half(dimension)
}

/// Panel layout of a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    /// Length scale of the core; the logarithmic panels start at `1e-3·core`.
    pub core: f64,
    /// Increasing radii `b₀ < b₁ < …`; log panels end at `b₀`, linear panels
    /// fill each `[b_i, b_{i+1}]`.
    pub breaks: Vec<f64>,
    /// Continue from the last break to infinity.
    pub tail: bool,
}

impl GridLayout {
    fn validate(&self) -> Result<()> {
        let ok = self.core > 0.0
            && !self.breaks.is_empty()
            && self.breaks[0] > 1e-3 * self.core
            && self.breaks.windows(2).all(|w| w[0] < w[1])
            && self.breaks.iter().all(|b| b.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid radial grid layout {self:?}")))
        }
    }
}

/// Quadrature nodes `r_i` and weights `w_i` with `∫ f dr ≈ Σ w_i f(r_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialGrid {
    /// Builds the grid; `refine` multiplies the number of panels.
    pub fn new(layout: &GridLayout, refine: usize) -> Result<Self> {
        layout.validate()?;
        let refine = refine.max(1);
        let (gx, gw) = gauss_legendre(GL_ORDER);
        let mut radii = Vec::new();
        let mut weights = Vec::new();
        let panel = |a: f64, b: f64, radii: &mut Vec<f64>, weights: &mut Vec<f64>| {
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (x, w) in gx.iter().zip(&gw) {
                radii.push(mid + half * x);
                weights.push(half * w);
            }
        };
        let r0 = 1e-3 * layout.core;
        panel(0.0, r0, &mut radii, &mut weights);
        let b0 = layout.breaks[0];
        let decades = (b0 / r0).log10();
        let n_log = ((6.0 * decades).ceil() as usize).max(1) * refine;
        let ratio = (b0 / r0).powf(1.0 / n_log as f64);
        let mut a = r0;
        for i in 0..n_log {
            let b = if i + 1 == n_log { b0 } else { a * ratio };
            panel(a, b, &mut radii, &mut weights);
            a = b;
        }
        for w in layout.breaks.windows(2) {
            let n_lin = 4 * refine;
            let h = (w[1] - w[0]) / n_lin as f64;
            for i in 0..n_lin {
                panel(w[0] + i as f64 * h, w[0] + (i + 1) as f64 * h, &mut radii, &mut weights);
            }
        }
        if layout.tail {
            // r = r_end / s, dr = r_end / s² ds on s ∈ (0, 1].
            let r_end = *layout.breaks.last().expect("nonempty breaks");
            let n_tail = 8 * refine;
            let mut tail_r = Vec::new();
            let mut tail_w = Vec::new();
            for i in 0..n_tail {
                let (sa, sb) = (i as f64 / n_tail as f64, (i + 1) as f64 / n_tail as f64);
                let (mid, half) = ((sa + sb) / 2.0, (sb - sa) / 2.0);
                for (x, w) in gx.iter().zip(&gw) {
                    let s = mid + half * x;
                    tail_r.push(r_end / s);
                    tail_w.push(half * w * r_end / (s * s));
                }
            }
            // Keep the radii increasing.
            radii.extend(tail_r.into_iter().rev());
            weights.extend(tail_w.into_iter().rev());
        }
        Ok(RadialGrid { radii, weights })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// A radial function `r ↦ f(r)` in `ℝ^N` with its radial derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub dimension: usize,
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl RadialProfile {
    pub fn from_fn(
        dimension: usize,
        grid: RadialGrid,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::InvalidArgument(format!("dimension must be at least 3, got {dimension}")));
        }
        let values = grid.radii.iter().map(|&r| f(r)).collect();
        let slopes = grid.radii.iter().map(|&r| df(r)).collect();
        Ok(RadialProfile { dimension, grid, values, slopes })
    }

    pub fn radii(&self) -> &[f64] {
        &self.grid.radii
    }
}

/// Integrand of [`radial_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialIntegrand {
    /// `|f|^q`.
    Power(f64),
    /// `f` itself.
    Value,
    /// `|f'|²`.
    GradientSquared,
}

/// `ω_{N-1} Σ w_i g(r_i) r_i^{N-1}` with `g` chosen by `integrand`.
pub fn radial_integral(profile: &RadialProfile, integrand: RadialIntegrand) -> f64 {
    let n1 = profile.dimension as i32 - 1;
    let sum: f64 = profile
        .grid
        .radii
        .iter()
        .zip(&profile.grid.weights)
        .zip(profile.values.iter().zip(&profile.slopes))
        .map(|((&r, &w), (&v, &s))| {
            let g = match integrand {
                RadialIntegrand::Power(q) => v.abs().powf(q),
                RadialIntegrand::Value => v,
                RadialIntegrand::GradientSquared => s * s,
            };
            w * g * r.powi(n1)
        })
        .sum();
    unit_sphere_area(profile.dimension) * sum
}

/// Repeats `eval(refine)` with doubling `refine` until two successive values
/// agree to `tol` relative.
fn refined(mut eval: impl FnMut(usize) -> Result<f64>, tol: f64, what: &str) -> Result<f64> {
    let mut prev = eval(1)?;
    let mut refine = 1;
    for _ in 0..5 {
        refine *= 2;
        let cur = eval(refine)?;
        if (cur - prev).abs() <= tol * cur.abs().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure(format!("{what} did not stabilise under grid doubling")))
}

/// `ω_{N-1} ∫ f(r) r^{N-1} dr` over the layout, refined until stable to `tol`.
pub fn integrate_radial(dimension: usize, f: impl Fn(f64) -> f64, layout: &GridLayout, tol: f64) -> Result<f64> {
    if dimension < 1 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let n1 = dimension as i32 - 1;
    let omega = unit_sphere_area(dimension);
    refined(
        |refine| {
            let grid = RadialGrid::new(layout, refine)?;
            Ok(omega * grid.radii.iter().zip(&grid.weights).map(|(&r, &w)| w * f(r) * r.powi(n1)).sum::<f64>())
        },
        tol,
        "radial integral",
    )
}

/// Bubble parameters; the centre is the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleSpec {
    pub dimension: usize,
    pub epsilon: f64,
    /// Inner cut-off radius `R`.
    pub radius: f64,
}

impl BubbleSpec {
    pub fn new(dimension: usize, epsilon: f64, radius: f64) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::InvalidArgument(format!("dimension must be at least 3, got {dimension}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite() && radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument("epsilon and radius must be positive".into()));
        }
        Ok(BubbleSpec { dimension, epsilon, radius })
    }

    /// `ε ≤ R/10`, the regime in which the asymptotics apply.
    pub fn is_well_separated(&self) -> bool {
        self.epsilon <= self.radius / 10.0
    }

    fn half(&self) -> f64 {
        (self.dimension as f64 - 2.0) / 2.0
    }

    pub fn talenti_at(&self, r: f64) -> f64 {
        let e = self.epsilon;
        (e / (e * e + r * r)).powf(self.half())
    }

    pub fn talenti_slope_at(&self, r: f64) -> f64 {
        let e = self.epsilon;
        -(self.dimension as f64 - 2.0) * r * self.talenti_at(r) / (e * e + r * r)
    }

    pub fn cutoff_at(&self, r: f64) -> f64 {
        let big_r = self.radius;
        if r <= big_r {
            1.0
        } else if r < 2.0 * big_r {
            (2.0 * big_r - r) / big_r
        } else {
            0.0
        }
    }

    pub fn cutoff_slope_at(&self, r: f64) -> f64 {
        if r > self.radius && r < 2.0 * self.radius {
            -1.0 / self.radius
        } else {
            0.0
        }
    }

    pub fn cut_bubble_at(&self, r: f64) -> f64 {
        self.cutoff_at(r) * self.talenti_at(r)
    }

    pub fn cut_bubble_slope_at(&self, r: f64) -> f64 {
        self.cutoff_slope_at(r) * self.talenti_at(r) + self.cutoff_at(r) * self.talenti_slope_at(r)
    }

    pub fn layout(&self) -> GridLayout {
        GridLayout { core: self.epsilon, breaks: vec![self.radius, 2.0 * self.radius], tail: true }
    }

    fn critical(&self) -> f64 {
        let n = self.dimension as f64;
        2.0 * n / (n - 2.0)
    }
}

pub fn talenti_bubble(spec: &BubbleSpec) -> Result<RadialProfile> {
    let grid = RadialGrid::new(&spec.layout(), 1)?;
    RadialProfile::from_fn(spec.dimension, grid, |r| spec.talenti_at(r), |r| spec.talenti_slope_at(r))
}

pub fn cutoff_bubble(spec: &BubbleSpec) -> Result<RadialProfile> {
    let grid = RadialGrid::new(&spec.layout(), 1)?;
    RadialProfile::from_fn(spec.dimension, grid, |r| spec.cut_bubble_at(r), |r| spec.cut_bubble_slope_at(r))
}

/// Closed form `S_N = πN(N−2)(Γ(N/2)/Γ(N))^{2/N}`.
pub fn sobolev_constant_closed_form(dimension: usize) -> f64 {
    let n = dimension as f64;
    let gamma_n: f64 = (1..dimension).map(|k| k as f64).product();
    PI * n * (n - 2.0) * (gamma_half(dimension) / gamma_n).powf(2.0 / n)
}

/// `∫|∇u_ε|² / (∫u_ε^{2*})^{2/2*}` over `ℝ^N` by radial quadrature.
pub fn sobolev_quotient(dimension: usize, epsilon: f64) -> Result<f64> {
    let spec = BubbleSpec::new(dimension, epsilon, 1.0f64.max(20.0 * epsilon))?;
    let crit = spec.critical();
    let layout = spec.layout();
    let grad = integrate_radial(dimension, |r| spec.talenti_slope_at(r).powi(2), &layout, DEFAULT_TOL)?;
    let power = integrate_radial(dimension, |r| spec.talenti_at(r).powf(crit), &layout, DEFAULT_TOL)?;
    Ok(grad / power.powf(2.0 / crit))
}

/// Best Sobolev constant, computed as the quotient of `u₁`.
pub fn sobolev_constant(dimension: usize) -> Result<f64> {
    sobolev_quotient(dimension, 1.0)
}

/// Least-squares line `y ≈ slope·x + intercept` with RMS residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("a line fit needs at least two paired points".into()));
    }
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::AsymptoticsNotResolved { residual: f64::INFINITY });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("a line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(LineFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Power-law fit of `values` against `eps` in log-log coordinates.
pub fn fit_power_law(eps: &[f64], values: &[f64]) -> Result<LineFit> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::AsymptoticsNotResolved { residual: f64::INFINITY });
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&lx, &ly)?;
    if fit.residual > MAX_FIT_RESIDUAL {
        return Err(Error::AsymptoticsNotResolved { residual: fit.residual });
    }
    Ok(fit)
}

/// Geometric grid `1e-4 … 1e-2` with 9 points.
pub fn default_epsilon_grid() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect()
}

fn check_sweep(dimension: usize, radius: f64, eps: &[f64]) -> Result<()> {
    BubbleSpec::new(dimension, 1.0, radius)?;
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("epsilon grid needs at least two positive values".into()));
    }
    let (lo, hi) = eps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument("epsilon grid must span at least one decade".into()));
    }
    if hi > radius / 10.0 {
        return Err(Error::InvalidArgument(format!("every epsilon must be at most R/10 = {}", radius / 10.0)));
    }
    Ok(())
}

/// `∫φ_ε²` over the ball `B_{2R}`.
pub fn bubble_l2_norm_squared(spec: &BubbleSpec) -> Result<f64> {
    let layout = GridLayout { core: spec.epsilon, breaks: vec![spec.radius, 2.0 * spec.radius], tail: false };
    integrate_radial(spec.dimension, |r| spec.cut_bubble_at(r).powi(2), &layout, DEFAULT_TOL)
}

/// Fits of `∫φ_ε² ~ Cε^s`, and for `N = 4` of `∫φ_ε² ~ Cε^s|log ε|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Asymptotics {
    pub power: LineFit,
    pub log_model: Option<LineFit>,
}

pub fn bubble_l2_asymptotics(dimension: usize, radius: f64, eps: &[f64]) -> Result<L2Asymptotics> {
    check_sweep(dimension, radius, eps)?;
    let values = eps
        .iter()
        .map(|&e| bubble_l2_norm_squared(&BubbleSpec::new(dimension, e, radius)?))
        .collect::<Result<Vec<f64>>>()?;
    let power = fit_power_law(eps, &values)?;
    let log_model = if dimension == 4 {
        let scaled: Vec<f64> = values.iter().zip(eps).map(|(v, e)| v / e.ln().abs()).collect();
        Some(fit_power_law(eps, &scaled)?)
    } else {
        None
    };
    Ok(L2Asymptotics { power, log_model })
}

/// Gradient and critical-power integrals of the bubble and of the cut-off
/// bubble, arranged to avoid cancellation.
struct BubbleIntegrals {
    /// `∫_{ℝ^N}|∇u_ε|²`.
    grad_u: f64,
    /// `∫_{ℝ^N}u_ε^{2*}`.
    power_u: f64,
    /// `∫|∇u_ε|² − ∫|∇φ_ε|²`, supported in `r > R`.
    grad_loss: f64,
    /// `∫u_ε^{2*} − ∫φ_ε^{2*}`, supported in `r > R`.
    power_loss: f64,
}

fn bubble_integrals(spec: &BubbleSpec) -> Result<BubbleIntegrals> {
    let n = spec.dimension;
    let crit = spec.critical();
    let layout = spec.layout();
    let big_r = spec.radius;
    let grad_u = integrate_radial(n, |r| spec.talenti_slope_at(r).powi(2), &layout, DEFAULT_TOL)?;
    let power_u = integrate_radial(n, |r| spec.talenti_at(r).powf(crit), &layout, DEFAULT_TOL)?;
    let outer = GridLayout { core: big_r, breaks: vec![big_r, 2.0 * big_r], tail: true };
    let grad_loss = integrate_radial(
        n,
        |r| if r > big_r { spec.talenti_slope_at(r).powi(2) - spec.cut_bubble_slope_at(r).powi(2) } else { 0.0 },
        &outer,
        DEFAULT_TOL,
    )?;
    let power_loss = integrate_radial(
        n,
        |r| if r > big_r { spec.talenti_at(r).powf(crit) - spec.cut_bubble_at(r).powf(crit) } else { 0.0 },
        &outer,
        DEFAULT_TOL,
    )?;
    Ok(BubbleIntegrals { grad_u, power_u, grad_loss, power_loss })
}

/// `‖∇φ_ε‖²/‖φ_ε‖²_{2*} − S_N`, nonnegative by the Sobolev inequality.
pub fn grad_defect(spec: &BubbleSpec) -> Result<f64> {
    let b = bubble_integrals(spec)?;
    let crit = spec.critical();
    let s_n = sobolev_constant_closed_form(spec.dimension);
    Ok(s_n * ((-b.grad_loss / b.grad_u).ln_1p() - (2.0 / crit) * (-b.power_loss / b.power_u).ln_1p()).exp_m1())
}

/// Power-law fit of [`grad_defect`] over an ε sweep.
pub fn bubble_grad_defect(dimension: usize, radius: f64, eps: &[f64]) -> Result<LineFit> {
    check_sweep(dimension, radius, eps)?;
    let values =
        eps.iter().map(|&e| grad_defect(&BubbleSpec::new(dimension, e, radius)?)).collect::<Result<Vec<f64>>>()?;
    fit_power_law(eps, &values)
}

/// Second-order conservative finite differences for `-Δv = φ_ε` on `B_{2R}`
/// in `x = ln r`, i.e. `-(e^{(N-2)x} v_x)_x = e^{Nx} φ_ε`, with cells per
/// unit `x` proportional to `k`. Returns `∫φ_ε v` and the minimum of `v`
/// over the interior nodes.
fn pairing_fd(spec: &BubbleSpec, k: usize) -> (f64, f64) {
    let n_dim = spec.dimension as i32;
    let big_r = spec.radius;
    let h = 2f64.ln() / k as f64;
    let x_r = (2.0 * big_r).ln();
    let x_mid = big_r.ln();
    let left = ((x_mid - (1e-3 * spec.epsilon).ln()) / h).ceil() as usize;
    let cells = left + k;
    let x0 = x_mid - left as f64 * h;
    let x = |i: usize| {
        if i == left {
            x_mid
        } else if i == cells {
            x_r
        } else {
            x0 + i as f64 * h
        }
    };
    let phi: Vec<f64> = (0..=cells).map(|i| spec.cut_bubble_at(x(i).exp())).collect();
    let src: Vec<f64> = (0..=cells).map(|i| (n_dim as f64 * x(i)).exp() * phi[i]).collect();
    let d = |face: f64| ((n_dim - 2) as f64 * face).exp();

    // Unknowns v_0 … v_{cells-1}; v_cells = 0.
    let m = cells;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let r_l = x0.exp();
    // Flux through r_L: r^{N-1} v_r = −∫_0^{r_L} φ t^{N-1} dt ≈ −φ(0) r_L^N / N.
    let flux_in = spec.talenti_at(0.0) * r_l.powi(n_dim) / n_dim as f64;
    let dp = d(x0 + 0.5 * h);
    diag[0] = dp / h;
    upper[0] = -dp / h;
    rhs[0] = 0.5 * h * src[0] + flux_in;
    for i in 1..m {
        let dm = d(x(i) - 0.5 * h);
        let dp = d(x(i) + 0.5 * h);
        lower[i] = -dm / (h * h);
        diag[i] = (dm + dp) / (h * h);
        upper[i] = -dp / (h * h);
        rhs[i] = src[i];
    }
    // Thomas algorithm.
    for i in 1..m {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut v = vec![0.0; m + 1];
    v[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        v[i] = (rhs[i] - upper[i] * v[i + 1]) / diag[i];
    }
    let v_min = v[..m].iter().cloned().fold(f64::INFINITY, f64::min);

    // Trapezoid in x for ∫φ v r^N dx, plus the core ball ∫_0^{r_L}.
    let mut integral = 0.0;
    for i in 0..cells {
        integral += 0.5 * h * (src[i] * v[i] + src[i + 1] * v[i + 1]);
    }
    integral += spec.talenti_at(0.0) * v[0] * r_l.powi(n_dim) / n_dim as f64;
    (unit_sphere_area(spec.dimension) * integral, v_min)
}

/// `F(ε) = ∫φ_ε (-Δ)^{-1}φ_ε` with the inverse taken on `B_{2R}`.
pub fn nonlocal_pairing(spec: &BubbleSpec) -> Result<f64> {
    let mut levels = Vec::new();
    for k in [64usize, 128, 256] {
        let (f, v_min) = pairing_fd(spec, k);
        if !(v_min > 0.0) || !f.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "discrete inverse Laplacian lost positivity (min {v_min:e})"
            )));
        }
        levels.push(f);
    }
    let r1 = (4.0 * levels[1] - levels[0]) / 3.0;
    let r2 = (4.0 * levels[2] - levels[1]) / 3.0;
    if (r2 - r1).abs() > 1e-6 * r2.abs() {
        return Err(Error::QuadratureFailure(format!("nonlocal pairing not converged: {r1:e} vs {r2:e}")));
    }
    Ok(r2)
}

/// Power-law fit of [`nonlocal_pairing`] over an ε sweep.
pub fn pairing_asymptotics(dimension: usize, radius: f64, eps: &[f64]) -> Result<LineFit> {
    check_sweep(dimension, radius, eps)?;
    let values =
        eps.iter().map(|&e| nonlocal_pairing(&BubbleSpec::new(dimension, e, radius)?)).collect::<Result<Vec<f64>>>()?;
    fit_power_law(eps, &values)
}

/// First Dirichlet eigenvalue `N(π/(4R))²` of the cube `[−2R, 2R]^N`,
/// the smallest box containing the support of `φ_ε`.
pub fn cube_lambda1(dimension: usize, radius: f64) -> f64 {
    dimension as f64 * (PI / (4.0 * radius)).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelReport {
    /// `‖∇φ_ε‖²` at `‖φ_ε‖_{2*} = 1`.
    pub sn_eps: f64,
    /// `∫φ_ε(-Δ)^{-1}φ_ε` at `‖φ_ε‖_{2*} = 1`.
    pub f_eps: f64,
    pub t_eps: f64,
    pub g_at_t: f64,
    /// `S_N^{N/2}/N`.
    pub c_star: f64,
    /// `sn_eps − S_N − γ f_eps`, computed without cancellation.
    pub gap: f64,
    pub gap_ok: bool,
}

/// Maximum of `g(t) = t²A/2 − t^{2*}/2*` with `A = ‖∇φ_ε‖² − γF(ε)` at unit
/// `L^{2*}` norm, compared with `S_N^{N/2}/N`.
pub fn level_gap(gamma: f64, spec: &BubbleSpec) -> Result<LevelReport> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument("gamma must be nonnegative".into()));
    }
    let n = spec.dimension as f64;
    let crit = spec.critical();
    let s_n = sobolev_constant_closed_form(spec.dimension);
    let b = bubble_integrals(spec)?;
    let defect = grad_defect(spec)?;
    let norm_sq = (b.power_u - b.power_loss).powf(2.0 / crit);
    let f_eps = nonlocal_pairing(spec)? / norm_sq;
    let gap = defect - gamma * f_eps;
    let a = s_n + gap;
    let (t_eps, g_at_t) = if a > 0.0 { (a.powf(1.0 / (crit - 2.0)), a.powf(n / 2.0) / n) } else { (0.0, 0.0) };
    Ok(LevelReport {
        sn_eps: s_n + defect,
        f_eps,
        t_eps,
        g_at_t,
        c_star: s_n.powf(n / 2.0) / n,
        gap,
        gap_ok: gap < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Scalar,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub feasible: bool,
    /// Open interval of admissible exponents (`μ` or `α`), when feasible.
    pub interval: Option<(f64, f64)>,
}

/// Dimension arithmetic of the level estimate.
///
/// Scalar: feasible iff `(N−2)(N−6) > 0` with `N ≥ 7`, and the decay exponent
/// window is `(1 + N/(N−4), N/2 + 1) ∩ (0, N−2)`. System: `α` with
/// `N − |2α − (N−2)| > 6` and `α > 2`, i.e. `(2, N − 4)`.
pub fn dimension_window(dimension: usize, mode: WindowMode) -> Result<Window> {
    if dimension < 3 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 3, got {dimension}")));
    }
    let n = dimension as f64;
    let (lo, hi) = match mode {
        WindowMode::Scalar => {
            if !((n - 2.0) * (n - 6.0) > 0.0 && dimension > 4) {
                return Ok(Window { feasible: false, interval: None });
            }
            ((1.0 + n / (n - 4.0)).max(0.0), (n / 2.0 + 1.0).min(n - 2.0))
        }
        WindowMode::System => (2.0f64.max((n - 2.0 - (n - 6.0)) / 2.0), (n - 2.0 + (n - 6.0)) / 2.0),
    };
    Ok(if lo < hi {
        Window { feasible: true, interval: Some((lo, hi)) }
    } else {
        Window { feasible: false, interval: None }
    })
}
