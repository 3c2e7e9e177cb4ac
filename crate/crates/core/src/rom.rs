//! Crank–Nicolson Galerkin reduced-order model on `X^r`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fem::{FemFunction, FemOperators, InnerProduct};
use crate::fom::{FomConfig, SnapshotSet};
use crate::linalg::norm2;
use crate::pod::PodBasis;
use crate::projection::{combine, reduced_gram, ProjectionKind, Projector};

/// How the initial coefficients `a⁰` are obtained from `u_h⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RomInit {
    /// Orthogonal projection in the basis inner product.
    #[default]
    HProjection,
    Ritz,
}

/// Reduced matrices, the quadratic tensor and the initial coefficients.
#[derive(Debug, Clone)]
pub struct RomOperators {
    r: usize,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    // row i*r + j, column k: ∫ φ_j (φ_k)_x φ_i
    tensor: DMatrix<f64>,
    a0: Vec<f64>,
}

impl RomOperators {
    pub fn r(&self) -> usize {
        self.r
    }

    /// `(M_r)_ij = (φ_j, φ_i)_{L²}`
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// `(S_r)_ij = ((φ_j)_x, (φ_i)_x)_{L²}`
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn a0(&self) -> &[f64] {
        &self.a0
    }

    /// `B[i][j][k] = ∫ φ_j (φ_k)_x φ_i`, zero-based.
    pub fn tensor(&self, i: usize, j: usize, k: usize) -> f64 {
        self.tensor[(i * self.r + j, k)]
    }

    /// `N(a)_i = Σ_jk B_ijk a_j a_k`
    pub fn nonlinear(&self, a: &[f64]) -> Vec<f64> {
        let ta = self.contract_last(a);
        let r = self.r;
        (0..r)
            .map(|i| (0..r).map(|j| ta[i * r + j] * a[j]).sum())
            .collect()
    }

    /// `Σ_i a_i N(a)_i`, zero in exact arithmetic.
    pub fn cubic_form(&self, a: &[f64]) -> f64 {
        self.nonlinear(a).iter().zip(a).map(|(n, x)| n * x).sum()
    }

    fn contract_last(&self, a: &[f64]) -> DVector<f64> {
        &self.tensor * DVector::from_column_slice(a)
    }

    /// `∂N/∂a` at `a`.
    fn nonlinear_jacobian(&self, a: &[f64]) -> DMatrix<f64> {
        let r = self.r;
        let ta = self.contract_last(a);
        DMatrix::from_fn(r, r, |i, l| {
            let second: f64 = (0..r).map(|j| self.tensor[(i * r + j, l)] * a[j]).sum();
            ta[i * r + l] + second
        })
    }

    fn mass_norm_sq(&self, a: &[f64]) -> f64 {
        quad(&self.mass, a)
    }
}

fn quad(m: &DMatrix<f64>, a: &[f64]) -> f64 {
    let v = DVector::from_column_slice(a);
    v.dot(&(m * &v))
}

/// Reduced operators for the first `r` modes. The tensor is exact: per cell
/// `∫ φ_j φ_i` is integrated in closed form against the constant `(φ_k)_x`.
pub fn assemble_rom(
    basis: &PodBasis,
    r: usize,
    ops: &FemOperators,
    u0: &FemFunction,
    init: RomInit,
) -> Result<RomOperators> {
    let proj = match init {
        RomInit::HProjection => ProjectionKind::PodH,
        RomInit::Ritz => ProjectionKind::Ritz,
    };
    let a0 = Projector::new(basis, r, proj, ops)?.coefficients(u0)?;
    let mass = reduced_gram(basis, r, InnerProduct::L2, ops);
    let stiffness = reduced_gram(basis, r, InnerProduct::H01, ops);
    let tensor = assemble_tensor(basis, r, ops);
    Ok(RomOperators {
        r,
        mass,
        stiffness,
        tensor,
        a0,
    })
}

fn assemble_tensor(basis: &PodBasis, r: usize, ops: &FemOperators) -> DMatrix<f64> {
    let n_cells = ops.mesh().n_cells();
    let dim = ops.dim();
    let value = |m: usize, node: usize| -> f64 {
        // node 0 and node n_cells are boundary nodes
        if node == 0 || node > dim {
            0.0
        } else {
            basis.mode(m)[node - 1]
        }
    };
    // pair integrals (r² × cells) and slopes times h (cells × r)
    let mut pairs = DMatrix::<f64>::zeros(r * r, n_cells);
    let mut jumps = DMatrix::<f64>::zeros(n_cells, r);
    let mut left = vec![0.0; r];
    let mut right = vec![0.0; r];
    for c in 0..n_cells {
        for m in 0..r {
            left[m] = value(m, c);
            right[m] = value(m, c + 1);
            jumps[(c, m)] = right[m] - left[m];
        }
        for i in 0..r {
            for j in 0..r {
                pairs[(i * r + j, c)] = (2.0 * left[i] * left[j]
                    + left[i] * right[j]
                    + right[i] * left[j]
                    + 2.0 * right[i] * right[j])
                    / 6.0;
            }
        }
    }
    pairs * jumps
}

/// Parameters of the reduced time stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomConfig {
    pub nu: f64,
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl RomConfig {
    pub fn from_fom(cfg: &FomConfig) -> Self {
        Self {
            nu: cfg.nu,
            dt: cfg.dt,
            newton_tol: cfg.newton_tol,
            newton_max_iter: cfg.newton_max_iter,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.dt > 0.0 && self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "ROM needs positive nu, dt, tolerance and iteration cap (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Reduced coefficients `a⁰ … aᴺ` on the FOM time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RomTrajectory {
    dt: f64,
    coefficients: Vec<Vec<f64>>,
}

impl RomTrajectory {
    pub fn new(dt: f64, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        let r = coefficients.first().map(Vec::len).ok_or(Error::EmptyCollection)?;
        if let Some(bad) = coefficients.iter().find(|a| a.len() != r) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: bad.len(),
            });
        }
        Ok(Self { dt, coefficients })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn r(&self) -> usize {
        self.coefficients[0].len()
    }

    pub fn n_steps(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }
}

/// Newton stepper for `M_r(a − a_prev)/Δt + ν S_r a_mid + N(a_mid) = 0`.
pub struct RomStepper<'a> {
    rom: &'a RomOperators,
    cfg: RomConfig,
    // M_r/Δt + (ν/2) S_r
    linear: DMatrix<f64>,
}

impl<'a> RomStepper<'a> {
    pub fn new(rom: &'a RomOperators, cfg: RomConfig) -> Result<Self> {
        cfg.validate()?;
        let linear = &rom.mass / cfg.dt + &rom.stiffness * (0.5 * cfg.nu);
        Ok(Self { rom, cfg, linear })
    }

    fn residual(&self, a: &[f64], prev: &[f64]) -> Vec<f64> {
        let r = self.rom.r;
        let mid: Vec<f64> = a.iter().zip(prev).map(|(x, y)| 0.5 * (x + y)).collect();
        let diff = DVector::from_iterator(r, a.iter().zip(prev).map(|(x, y)| (x - y) / self.cfg.dt));
        let mid_v = DVector::from_column_slice(&mid);
        let lin = &self.rom.mass * diff + &self.rom.stiffness * mid_v * self.cfg.nu;
        let nl = self.rom.nonlinear(&mid);
        lin.iter().zip(&nl).map(|(x, y)| x + y).collect()
    }

    /// One step from `a_prev`; Newton with the analytic Jacobian. Stops on
    /// residual or relative update below the tolerance.
    pub fn step(&self, prev: &[f64]) -> Result<Vec<f64>> {
        if prev.len() != self.rom.r {
            return Err(Error::DimensionMismatch {
                expected: self.rom.r,
                found: prev.len(),
            });
        }
        let mut a = prev.to_vec();
        let mut last = f64::INFINITY;
        for iter in 0..=self.cfg.newton_max_iter {
            let res = self.residual(&a, prev);
            last = norm2(&res);
            if last <= self.cfg.newton_tol {
                return Ok(a);
            }
            if !last.is_finite() || iter == self.cfg.newton_max_iter {
                break;
            }
            let mid: Vec<f64> = a.iter().zip(prev).map(|(x, y)| 0.5 * (x + y)).collect();
            let jac = &self.linear + self.rom.nonlinear_jacobian(&mid) * 0.5;
            let rhs = -DVector::from_vec(res);
            let delta = jac.lu().solve(&rhs).ok_or(Error::SingularSystem {
                what: "reduced Newton Jacobian",
            })?;
            for (x, d) in a.iter_mut().zip(delta.iter()) {
                *x += d;
            }
            if delta.norm() <= self.cfg.newton_tol * (1.0 + norm2(&a)) {
                return Ok(a);
            }
        }
        Err(Error::NonlinearSolveFailure {
            step: None,
            iterations: self.cfg.newton_max_iter,
            residual: last,
        })
    }
}

pub fn rom_step(prev: &[f64], rom: &RomOperators, cfg: RomConfig) -> Result<Vec<f64>> {
    RomStepper::new(rom, cfg)?.step(prev)
}

/// `n_steps` steps from `a⁰`.
pub fn solve_rom(rom: &RomOperators, cfg: RomConfig, n_steps: usize) -> Result<RomTrajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidConfig("ROM needs at least one time step".into()));
    }
    let stepper = RomStepper::new(rom, cfg)?;
    let mut coefficients = Vec::with_capacity(n_steps + 1);
    coefficients.push(rom.a0.clone());
    for n in 0..n_steps {
        let next = stepper.step(&coefficients[n]).map_err(|e| e.at_step(n + 1))?;
        coefficients.push(next);
    }
    RomTrajectory::new(cfg.dt, coefficients)
}

/// `u_r^n = Σ_i a_i^n φ_i`
pub fn lift(traj: &RomTrajectory, basis: &PodBasis) -> Result<SnapshotSet> {
    if traj.r() > basis.d() {
        return Err(Error::DimensionMismatch {
            expected: basis.d(),
            found: traj.r(),
        });
    }
    SnapshotSet::new(
        traj.dt,
        traj.coefficients.iter().map(|a| combine(basis, a)).collect(),
    )
}

/// Per-step defect of `‖u^{n+1}‖² − ‖uⁿ‖² + 2Δtν‖u_x^{n+1/2}‖² = 0` as
/// `(absolute, relative to ‖uⁿ‖²)`.
pub fn rom_energy_defects(traj: &RomTrajectory, rom: &RomOperators, nu: f64) -> Vec<(f64, f64)> {
    traj.coefficients
        .windows(2)
        .map(|w| {
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(x, y)| 0.5 * (x + y)).collect();
            let e0 = rom.mass_norm_sq(&w[0]);
            let e1 = rom.mass_norm_sq(&w[1]);
            let d = quad(&rom.stiffness, &mid);
            let abs = (e1 - e0 + 2.0 * traj.dt * nu * d).abs();
            (abs, if e0 > 0.0 { abs / e0 } else { abs })
        })
        .collect()
}

/// Outcome of the step-size condition `Δt < 4𝒞ν³/27` with
/// `𝒞 = (max_n ‖u_r^{n+1/2}‖_{L²})⁻⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictionCheck {
    pub max_mid_l2: f64,
    /// `𝒞`, infinite for a zero trajectory.
    pub constant: f64,
    pub strict_limit: f64,
    pub theorem_limit: f64,
    /// `Δt < 4𝒞ν³/27`
    pub strict_satisfied: bool,
    /// `Δt ≤ 2𝒞ν³/27`
    pub theorem_satisfied: bool,
}

/// Advisory only: a violation is logged, never returned as an error.
pub fn timestep_restriction_check(nu: f64, dt: f64, traj: &RomTrajectory, rom: &RomOperators) -> RestrictionCheck {
    let max_mid_l2 = traj
        .coefficients
        .windows(2)
        .map(|w| {
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(x, y)| 0.5 * (x + y)).collect();
            rom.mass_norm_sq(&mid).max(0.0).sqrt()
        })
        .fold(0.0, f64::max);
    let constant = if max_mid_l2 > 0.0 {
        max_mid_l2.powi(-4)
    } else {
        f64::INFINITY
    };
    let nu3 = nu * nu * nu;
    let strict_limit = 4.0 * constant * nu3 / 27.0;
    let theorem_limit = 2.0 * constant * nu3 / 27.0;
    let check = RestrictionCheck {
        max_mid_l2,
        constant,
        strict_limit,
        theorem_limit,
        strict_satisfied: dt < strict_limit,
        theorem_satisfied: dt <= theorem_limit,
    };
    if !check.strict_satisfied {
        log::warn!("time step {dt} exceeds the stability restriction {strict_limit:e} (nu = {nu})");
    }
    check
}
