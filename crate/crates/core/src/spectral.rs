//! Dirichlet eigencalculus on `d`-dimensional boxes `∏ [0, L_i]`.
//!
//! Eigenfunctions are `∏ √(2/L_i) sin(k_i π x_i / L_i)` with eigenvalues
//! `λ_k = Σ (k_i π / L_i)²`. They are orthonormal in L², so coefficient
//! vectors obey Parseval exactly and every power `(-Δ)^s` is a diagonal
//! multiplier.
//!
//! Two uniform grids are attached to a basis. The collocation grid has as
//! many interior nodes per axis as modes, which makes the discrete sine
//! transform exactly invertible. The refined grid has twice as many nodes
//! and is used to evaluate nonlinear terms before projecting them back.

use alloc::{sync::Arc, vec, vec::Vec};
use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when std is linked, as in test builds
use num_traits::Float;

use crate::{Error, Result};

/// Synthesis matrix of one axis: `nodes × modes`, row-major, together with
/// the node spacing used as the quadrature weight of the projection.
#[derive(Debug, Clone)]
struct AxisTransform {
    nodes: usize,
    modes: usize,
    synth: Vec<f64>,
    spacing: f64,
}

impl AxisTransform {
    fn new(length: f64, modes: usize, nodes: usize) -> Self {
        let spacing = length / (nodes + 1) as f64;
        let norm = (2.0 / length).sqrt();
        let mut synth = vec![0.0; nodes * modes];
        for j in 0..nodes {
            let x = (j + 1) as f64 * spacing;
            for k in 0..modes {
                synth[j * modes + k] = norm * ((k + 1) as f64 * PI * x / length).sin();
            }
        }
        AxisTransform { nodes, modes, synth, spacing }
    }
}

/// Box geometry plus the enumerated Laplacian eigenpairs.
#[derive(Debug, Clone)]
pub struct BoxBasis {
    lengths: Vec<f64>,
    modes: Vec<usize>,
    eigenvalues: Vec<f64>,
    collocation: Vec<AxisTransform>,
    refined: Vec<AxisTransform>,
}

/// Builds the basis for the box with the given side lengths and per-axis
/// mode counts.
pub fn build_box_basis(lengths: &[f64], modes: &[usize]) -> Result<Arc<BoxBasis>> {
    BoxBasis::new(lengths, modes).map(Arc::new)
}

impl BoxBasis {
    pub fn new(lengths: &[f64], modes: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() != modes.len() {
            return Err(Error::InvalidConfiguration(alloc::format!(
                "need one mode count per axis ({} lengths, {} mode counts)",
                lengths.len(),
                modes.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidConfiguration(alloc::format!("box lengths must be positive, got {l}")));
        }
        if modes.contains(&0) {
            return Err(Error::InvalidConfiguration("mode counts must be at least 1".into()));
        }

        let total: usize = modes.iter().product();
        let mut eigenvalues = Vec::with_capacity(total);
        let mut index = vec![1usize; modes.len()];
        for _ in 0..total {
            let lambda = index
                .iter()
                .zip(lengths)
                .map(|(&k, &l)| {
                    let w = k as f64 * PI / l;
                    w * w
                })
                .sum();
            eigenvalues.push(lambda);
            // Row-major increment, last axis fastest.
            for axis in (0..modes.len()).rev() {
                if index[axis] < modes[axis] {
                    index[axis] += 1;
                    break;
                }
                index[axis] = 1;
            }
        }

        let collocation = lengths.iter().zip(modes).map(|(&l, &n)| AxisTransform::new(l, n, n)).collect();
        let refined = lengths.iter().zip(modes).map(|(&l, &n)| AxisTransform::new(l, n, 2 * n)).collect();

        Ok(BoxBasis { lengths: lengths.to_vec(), modes: modes.to_vec(), eigenvalues, collocation, refined })
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Number of basis functions (product of the per-axis mode counts).
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in row-major multi-index order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalue of a 1-based multi-index.
    pub fn eigenvalue(&self, index: &[usize]) -> Result<f64> {
        Ok(self.eigenvalues[self.linear_index(index)?])
    }

    /// `λ₁`, attained at the all-ones multi-index (linear index 0).
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dim() {
            return Err(Error::InvalidArgument(alloc::format!(
                "multi-index has {} entries, basis has dimension {}",
                index.len(),
                self.dim()
            )));
        }
        let mut lin = 0;
        for (&k, &n) in index.iter().zip(&self.modes) {
            if k == 0 || k > n {
                return Err(Error::InvalidArgument(alloc::format!("multi-index entry {k} outside 1..={n}")));
            }
            lin = lin * n + (k - 1);
        }
        Ok(lin)
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        let mut index = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            index[axis] = lin % self.modes[axis] + 1;
            lin /= self.modes[axis];
        }
        index
    }

    /// Shape of the collocation grid (equal to the mode counts).
    pub fn grid_shape(&self) -> Vec<usize> {
        self.modes.clone()
    }

    /// Shape of the refined grid used for nonlinear terms.
    pub fn refined_shape(&self) -> Vec<usize> {
        self.refined.iter().map(|t| t.nodes).collect()
    }

    /// Interior node coordinates of the collocation grid along `axis`.
    pub fn grid_nodes(&self, axis: usize) -> Vec<f64> {
        let t = &self.collocation[axis];
        (1..=t.nodes).map(|j| j as f64 * t.spacing).collect()
    }

    /// Interior node coordinates of the refined grid along `axis`.
    pub fn refined_nodes(&self, axis: usize) -> Vec<f64> {
        let t = &self.refined[axis];
        (1..=t.nodes).map(|j| j as f64 * t.spacing).collect()
    }

    /// Volume of one refined-grid cell; the weight of the refined quadrature.
    pub fn refined_cell_volume(&self) -> f64 {
        self.refined.iter().map(|t| t.spacing).product()
    }

    pub fn collocation_cell_volume(&self) -> f64 {
        self.collocation.iter().map(|t| t.spacing).product()
    }

    pub fn same_as(&self, other: &BoxBasis) -> bool {
        self.lengths == other.lengths && self.modes == other.modes
    }

    /// Evaluates coefficients on the refined grid.
    pub fn synthesize_refined(&self, coeffs: &[f64]) -> Vec<f64> {
        synthesize(&self.refined, &self.modes, coeffs)
    }

    /// Projects refined-grid values onto the basis with the refined
    /// trapezoidal quadrature: `c_k = Σ_j w φ_k(x_j) g_j`.
    pub fn project_refined(&self, values: &[f64]) -> Vec<f64> {
        analyze(&self.refined, values)
    }

    fn synthesize_collocation(&self, coeffs: &[f64]) -> Vec<f64> {
        synthesize(&self.collocation, &self.modes, coeffs)
    }

    fn analyze_collocation(&self, values: &[f64]) -> Vec<f64> {
        analyze(&self.collocation, values)
    }
}

fn synthesize(axes: &[AxisTransform], modes: &[usize], coeffs: &[f64]) -> Vec<f64> {
    let mut shape = modes.to_vec();
    let mut data = coeffs.to_vec();
    for (axis, t) in axes.iter().enumerate() {
        data = apply_along_axis(&data, &shape, axis, t.nodes, |j, k| t.synth[j * t.modes + k]);
        shape[axis] = t.nodes;
    }
    data
}

fn analyze(axes: &[AxisTransform], values: &[f64]) -> Vec<f64> {
    let mut shape: Vec<usize> = axes.iter().map(|t| t.nodes).collect();
    let mut data = values.to_vec();
    for (axis, t) in axes.iter().enumerate() {
        data = apply_along_axis(&data, &shape, axis, t.modes, |k, j| t.spacing * t.synth[j * t.modes + k]);
        shape[axis] = t.modes;
    }
    data
}

/// `out[o, j, i] = Σ_k mat(j, k) · data[o, k, i]` where `k` runs along `axis`.
fn apply_along_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    n_out: usize,
    mat: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let n_in = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * n_out * inner];
    for o in 0..outer {
        let src = &data[o * n_in * inner..(o + 1) * n_in * inner];
        let dst = &mut out[o * n_out * inner..(o + 1) * n_out * inner];
        for j in 0..n_out {
            let row = &mut dst[j * inner..(j + 1) * inner];
            for k in 0..n_in {
                let a = mat(j, k);
                if a == 0.0 {
                    continue;
                }
                let col = &src[k * inner..(k + 1) * inner];
                for (r, c) in row.iter_mut().zip(col) {
                    *r += a * c;
                }
            }
        }
    }
    out
}

/// Coefficients of a function in the orthonormal sine basis.
#[derive(Debug, Clone)]
pub struct SpectralField {
    basis: Arc<BoxBasis>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(basis: &Arc<BoxBasis>) -> Self {
        SpectralField { basis: basis.clone(), coeffs: vec![0.0; basis.len()] }
    }

    pub fn from_coeffs(basis: &Arc<BoxBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::ShapeMismatch { expected: basis.len(), found: coeffs.len() });
        }
        Ok(SpectralField { basis: basis.clone(), coeffs })
    }

    /// The single eigenfunction with the given 1-based multi-index.
    pub fn mode(basis: &Arc<BoxBasis>, index: &[usize]) -> Result<Self> {
        let lin = basis.linear_index(index)?;
        let mut f = Self::zeros(basis);
        f.coeffs[lin] = 1.0;
        Ok(f)
    }

    pub fn basis(&self) -> &Arc<BoxBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn check_same_basis(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.basis.len(), found: other.basis.len() })
        }
    }

    /// L² inner product (Parseval).
    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `⟨∇a, ∇b⟩ = Σ λ_k a_k b_k`.
    pub fn h1_inner(&self, other: &SpectralField) -> f64 {
        self.basis.eigenvalues().iter().zip(self.coeffs.iter().zip(&other.coeffs)).map(|(l, (a, b))| l * a * b).sum()
    }

    pub fn h1_norm(&self) -> f64 {
        self.h1_inner(self).sqrt()
    }

    /// `‖f‖_{H^{-1}} = (Σ a_k² / λ_k)^{1/2}`.
    pub fn h_minus1_norm(&self) -> f64 {
        self.basis.eigenvalues().iter().zip(&self.coeffs).map(|(l, a)| a * a / l).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        SpectralField { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|a| s * a).collect() }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// `(-Δ)^s`: multiplies every coefficient by `λ_k^s`.
    pub fn apply_power(&self, s: f64) -> SpectralField {
        let int = s == s.round() && s.abs() < 64.0;
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(a, &l)| if int { a * l.powi(s as i32) } else { a * l.powf(s) })
            .collect();
        SpectralField { basis: self.basis.clone(), coeffs }
    }

    /// Values on the collocation grid.
    pub fn to_grid(&self) -> GridField {
        GridField { basis: self.basis.clone(), values: self.basis.synthesize_collocation(&self.coeffs) }
    }

    /// Values on the refined grid.
    pub fn sample_refined(&self) -> Vec<f64> {
        self.basis.synthesize_refined(&self.coeffs)
    }

    /// Minimum over the refined interior grid.
    pub fn min_interior(&self) -> f64 {
        self.sample_refined().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_interior(&self) -> f64 {
        self.sample_refined().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(-Δ)^s f`.
pub fn apply_power(f: &SpectralField, s: f64) -> SpectralField {
    f.apply_power(s)
}

/// Values on the uniform interior collocation grid. Boundary nodes are not
/// stored: every sine vanishes there.
#[derive(Debug, Clone)]
pub struct GridField {
    basis: Arc<BoxBasis>,
    values: Vec<f64>,
}

impl GridField {
    pub fn from_values(basis: &Arc<BoxBasis>, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::ShapeMismatch { expected: basis.len(), found: values.len() });
        }
        Ok(GridField { basis: basis.clone(), values })
    }

    /// Samples a function of the coordinates at the collocation nodes.
    pub fn from_fn(basis: &Arc<BoxBasis>, f: impl Fn(&[f64]) -> f64) -> Self {
        let nodes: Vec<Vec<f64>> = (0..basis.dim()).map(|a| basis.grid_nodes(a)).collect();
        let mut x = vec![0.0; basis.dim()];
        let values = (0..basis.len())
            .map(|lin| {
                let idx = basis.multi_index(lin);
                for (axis, &k) in idx.iter().enumerate() {
                    x[axis] = nodes[axis][k - 1];
                }
                f(&x)
            })
            .collect();
        GridField { basis: basis.clone(), values }
    }

    pub fn basis(&self) -> &Arc<BoxBasis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField { basis: self.basis.clone(), coeffs: self.basis.analyze_collocation(&self.values) }
    }

    /// Trapezoidal `∫ g²` on the collocation grid, exact for band-limited data.
    pub fn l2_norm_squared(&self) -> f64 {
        self.basis.collocation_cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }
}

pub fn to_spectral(g: &GridField) -> SpectralField {
    g.to_spectral()
}

pub fn from_spectral(f: &SpectralField) -> GridField {
    f.to_grid()
}

/// `λ₁` together with the L²-normalized, positive first eigenfunction.
pub fn first_eigenpair(basis: &Arc<BoxBasis>) -> (f64, SpectralField) {
    let mut phi = SpectralField::zeros(basis);
    phi.coeffs[0] = 1.0;
    (basis.lambda1(), phi)
}

/// First eigenvalue `λ₁^q` of `(-Δ)^q` under Navier conditions.
pub fn navier_first_eigenvalue(basis: &BoxBasis, order: u32) -> Result<f64> {
    if order < 1 {
        return Err(Error::InvalidArgument("Navier order must be at least 1".into()));
    }
    Ok(basis.lambda1().powi(order as i32))
}
