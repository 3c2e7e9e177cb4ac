//! Uniform P1 finite elements on (0, 1) with homogeneous Dirichlet
//! conditions.
//!
//! Only interior nodes carry degrees of freedom: a [`FemFunction`] on a mesh
//! with `n` cells stores `n - 1` nodal values and the boundary values are
//! identically zero.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{SymTridiagonal, Tridiagonal};

/// Gauss–Legendre nodes on the unit interval with weights summing to one.
pub(crate) mod gauss {
    /// Two points, exact through degree 3.
    pub const TWO_POINT: [(f64, f64); 2] = [
        (0.211_324_865_405_187_1, 0.5),
        (0.788_675_134_594_812_9, 0.5),
    ];

    /// Five points, exact through degree 9.
    pub const FIVE_POINT: [(f64, f64); 5] = [
        (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
        (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
        (0.5, 0.284_444_444_444_444_4),
        (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
        (0.953_089_922_969_332, 0.118_463_442_528_094_5),
    ];
}

/// Uniform partition of (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    n_cells: usize,
    h: f64,
}

impl Mesh1D {
    pub fn uniform(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidMesh { n_cells });
        }
        Ok(Self {
            n_cells,
            h: 1.0 / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior nodes, i.e. the FE space dimension.
    pub fn dim(&self) -> usize {
        self.n_cells - 1
    }

    /// Coordinate of global node `j` (0 and `n_cells` are the boundary).
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n_cells as f64
    }

    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.n_cells).map(|j| self.node(j)).collect()
    }

    /// Nodal values of a cell's endpoints, boundary nodes included.
    #[inline]
    fn cell_values(&self, u: &[f64], cell: usize) -> (f64, f64) {
        let left = if cell == 0 { 0.0 } else { u[cell - 1] };
        let right = if cell + 1 == self.n_cells { 0.0 } else { u[cell] };
        (left, right)
    }
}

/// Piecewise-linear function represented by its interior nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct FemFunction {
    coefficients: Vec<f64>,
}

impl FemFunction {
    pub fn zeros(dim: usize) -> Self {
        Self {
            coefficients: vec![0.0; dim],
        }
    }

    pub fn from_vec(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    /// Nodal interpolant of `f` at the interior nodes.
    pub fn interpolate(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(mesh.interior_nodes().into_iter().map(f).collect())
    }

    /// Hat function of interior node `j` (1-based global numbering).
    pub fn hat(mesh: &Mesh1D, j: usize) -> Self {
        assert!(j >= 1 && j < mesh.n_cells(), "hat index out of range");
        let mut u = Self::zeros(mesh.dim());
        u.coefficients[j - 1] = 1.0;
        u
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coefficients
    }

    /// `self - other`
    pub fn sub(&self, other: &FemFunction) -> FemFunction {
        FemFunction::from_vec(
            self.coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scaled(&self, alpha: f64) -> FemFunction {
        FemFunction::from_vec(self.coefficients.iter().map(|v| alpha * v).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for FemFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coefficients[i]
    }
}

impl From<Vec<f64>> for FemFunction {
    fn from(v: Vec<f64>) -> Self {
        Self::from_vec(v)
    }
}

/// Hilbert space used for POD, projections and norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InnerProduct {
    L2,
    H01,
}

impl InnerProduct {
    pub fn name(self) -> &'static str {
        match self {
            InnerProduct::L2 => "L2",
            InnerProduct::H01 => "H01",
        }
    }
}

/// Exact P1 mass and stiffness matrices of a mesh.
#[derive(Debug, Clone)]
pub struct FemOperators {
    mesh: Mesh1D,
    mass: SymTridiagonal,
    stiffness: SymTridiagonal,
}

impl FemOperators {
    pub fn assemble(mesh: &Mesh1D) -> Self {
        let h = mesh.h();
        let n = mesh.dim();
        Self {
            mesh: *mesh,
            mass: SymTridiagonal::toeplitz(n, 4.0 * h / 6.0, h / 6.0),
            stiffness: SymTridiagonal::toeplitz(n, 2.0 / h, -1.0 / h),
        }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn mass(&self) -> &SymTridiagonal {
        &self.mass
    }

    pub fn stiffness(&self) -> &SymTridiagonal {
        &self.stiffness
    }

    /// Gram matrix of the given inner product in the hat basis.
    pub fn gram(&self, kind: InnerProduct) -> &SymTridiagonal {
        match kind {
            InnerProduct::L2 => &self.mass,
            InnerProduct::H01 => &self.stiffness,
        }
    }

    fn check(&self, u: &FemFunction) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(())
    }

    pub fn inner_product(
        &self,
        u: &FemFunction,
        v: &FemFunction,
        kind: InnerProduct,
    ) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.gram(kind).bilinear(u.as_slice(), v.as_slice()))
    }

    pub fn norm(&self, u: &FemFunction, kind: InnerProduct) -> Result<f64> {
        self.check(u)?;
        Ok(self.norm_sq(u.as_slice(), kind).sqrt())
    }

    /// Squared norm; panics on a dimension mismatch, which callers inside the
    /// crate rule out by construction.
    pub(crate) fn norm_sq(&self, u: &[f64], kind: InnerProduct) -> f64 {
        self.gram(kind).bilinear(u, u)
    }

    /// `G u` for the Gram matrix of `kind`.
    pub(crate) fn weighted(&self, u: &[f64], kind: InnerProduct) -> Vec<f64> {
        self.gram(kind).apply(u)
    }
}

/// `N(u)_i = ∫ u u_x φ_i dx`, integrated cell by cell with two-point Gauss
/// quadrature, which is exact for the piecewise quadratic integrand.
pub fn nonlinear_form(u: &FemFunction, mesh: &Mesh1D) -> Vec<f64> {
    let mut out = vec![0.0; mesh.dim()];
    nonlinear_form_into(u.as_slice(), mesh, &mut out);
    out
}

pub(crate) fn nonlinear_form_into(u: &[f64], mesh: &Mesh1D, out: &mut [f64]) {
    let n = mesh.n_cells();
    out.iter_mut().for_each(|v| *v = 0.0);
    for cell in 0..n {
        let (ua, ub) = mesh.cell_values(u, cell);
        // u_x is constant on the cell and the Jacobian h cancels 1/h.
        let jump = ub - ua;
        let (mut to_left, mut to_right) = (0.0, 0.0);
        for &(s, w) in &gauss::TWO_POINT {
            let val = ua * (1.0 - s) + ub * s;
            to_left += w * val * (1.0 - s);
            to_right += w * val * s;
        }
        if cell > 0 {
            out[cell - 1] += jump * to_left;
        }
        if cell + 1 < n {
            out[cell] += jump * to_right;
        }
    }
}

/// Jacobian `∂N/∂u` as a tridiagonal matrix.
pub(crate) fn nonlinear_jacobian(u: &[f64], mesh: &Mesh1D) -> Tridiagonal {
    let n = mesh.n_cells();
    let mut jac = Tridiagonal::zeros(mesh.dim());
    // Per cell: N_a += (ub-ua)(2ua+ub)/6 and N_b += (ub-ua)(ua+2ub)/6.
    for cell in 0..n {
        let (ua, ub) = mesh.cell_values(u, cell);
        let da_da = (ub - 4.0 * ua) / 6.0;
        let da_db = (ua + 2.0 * ub) / 6.0;
        let db_da = -(2.0 * ua + ub) / 6.0;
        let db_db = (4.0 * ub - ua) / 6.0;
        let a = cell.checked_sub(1);
        let b = if cell + 1 < n { Some(cell) } else { None };
        if let Some(a) = a {
            jac.diag[a] += da_da;
            if b.is_some() {
                jac.upper[a] += da_db;
                jac.lower[a] += db_da;
            }
        }
        if let Some(b) = b {
            jac.diag[b] += db_db;
        }
    }
    jac
}

/// Load vector `∫ f φ_i dx` by five-point Gauss quadrature per cell.
pub fn load_vector(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = mesh.n_cells();
    let h = mesh.h();
    let mut out = vec![0.0; mesh.dim()];
    for cell in 0..n {
        let x0 = mesh.node(cell);
        let (mut to_left, mut to_right) = (0.0, 0.0);
        for &(s, w) in &gauss::FIVE_POINT {
            let fx = f(x0 + s * h);
            to_left += w * fx * (1.0 - s);
            to_right += w * fx * s;
        }
        if cell > 0 {
            out[cell - 1] += h * to_left;
        }
        if cell + 1 < n {
            out[cell] += h * to_right;
        }
    }
    out
}

/// `‖u_h − g‖_{L²}` for a continuous function `g`, five-point Gauss per cell.
pub fn l2_error(u: &FemFunction, mesh: &Mesh1D, g: impl Fn(f64) -> f64) -> f64 {
    let h = mesh.h();
    let mut acc = 0.0;
    for cell in 0..mesh.n_cells() {
        let x0 = mesh.node(cell);
        let (ua, ub) = mesh.cell_values(u.as_slice(), cell);
        for &(s, w) in &gauss::FIVE_POINT {
            let e = ua * (1.0 - s) + ub * s - g(x0 + s * h);
            acc += h * w * e * e;
        }
    }
    acc.sqrt()
}
