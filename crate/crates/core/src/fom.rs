//! Crank–Nicolson finite-element solver for
//! `u_t − ν u_xx + u u_x = f` on (0, 1) with `u(0,t) = u(1,t) = 0`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fem::{load_vector, nonlinear_form_into, nonlinear_jacobian, FemFunction, FemOperators, Mesh1D};
use crate::linalg::{norm2, Tridiagonal};

/// Closed-form solutions available for verification runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ManufacturedSolution {
    /// `u(x, t) = e^{−t} sin(πx)`
    DecayingSine,
}

impl ManufacturedSolution {
    pub fn exact(self, x: f64, t: f64) -> f64 {
        match self {
            ManufacturedSolution::DecayingSine => (-t).exp() * (PI * x).sin(),
        }
    }

    /// Source term making [`Self::exact`] solve the viscous Burgers equation.
    pub fn forcing(self, x: f64, t: f64, nu: f64) -> f64 {
        match self {
            ManufacturedSolution::DecayingSine => {
                let e = (-t).exp();
                let (s, c) = (PI * x).sin_cos();
                // u_t − ν u_xx + u u_x
                -e * s + nu * PI * PI * e * s + e * e * PI * s * c
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Forcing {
    Zero,
    Manufactured(ManufacturedSolution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FomConfig {
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub forcing: Forcing,
}

impl FomConfig {
    /// Viscosity 10⁻², Δt = 10⁻³, T = 1, unforced, Newton tolerance 10⁻¹²
    /// with at most 30 iterations.
    pub fn burgers_step() -> Self {
        Self {
            nu: 1e-2,
            dt: 1e-3,
            t_final: 1.0,
            newton_tol: 1e-12,
            newton_max_iter: 30,
            forcing: Forcing::Zero,
        }
    }

    /// Number of time steps `N`, validated so that `N Δt` hits `T`.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.nu > 0.0) || !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "nu, dt and t_final must be positive (got {}, {}, {})",
                self.nu, self.dt, self.t_final
            )));
        }
        if self.dt > self.t_final {
            return Err(Error::InvalidConfig(format!(
                "dt {} exceeds t_final {}",
                self.dt, self.t_final
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "Newton tolerance and iteration cap must be positive".into(),
            ));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() >= 1e-12 * self.t_final {
            return Err(Error::InvalidConfig(format!(
                "t_final {} is not an integer multiple of dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Time-indexed solution snapshots `u⁰ … uᴺ` at `t_n = n Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    dt: f64,
    snapshots: Vec<FemFunction>,
}

impl SnapshotSet {
    pub fn new(dt: f64, snapshots: Vec<FemFunction>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidConfig("empty snapshot set".into()));
        }
        let dim = snapshots[0].len();
        if let Some(bad) = snapshots.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(Self { dt, snapshots })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn snapshots(&self) -> &[FemFunction] {
        &self.snapshots
    }

    /// `N`, the number of time steps.
    pub fn n_steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].len()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.n_steps())
    }

    pub fn get(&self, n: usize) -> Option<&FemFunction> {
        self.snapshots.get(n)
    }
}

/// Nodal interpolant of the step: 1 on (0, 1/2], 0 on (1/2, 1).
pub fn step_initial_condition(mesh: &Mesh1D) -> FemFunction {
    // x_j = j/n ≤ 1/2 ⇔ 2j ≤ n, decided in integers
    let n = mesh.n_cells();
    FemFunction::from_vec(
        (1..n)
            .map(|j| if 2 * j <= n { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// Reusable Crank–Nicolson stepper holding the time-independent pieces.
pub struct CnStepper<'a> {
    cfg: &'a FomConfig,
    ops: &'a FemOperators,
    // M/Δt + (ν/2) S
    linear: Tridiagonal,
}

impl<'a> CnStepper<'a> {
    pub fn new(cfg: &'a FomConfig, ops: &'a FemOperators) -> Self {
        let mut linear = Tridiagonal::zeros(ops.dim());
        linear.add_sym(1.0 / cfg.dt, ops.mass());
        linear.add_sym(0.5 * cfg.nu, ops.stiffness());
        Self { cfg, ops, linear }
    }

    fn forcing_load(&self, t_mid: f64) -> Option<Vec<f64>> {
        match self.cfg.forcing {
            Forcing::Zero => None,
            Forcing::Manufactured(sol) => {
                let nu = self.cfg.nu;
                Some(load_vector(self.ops.mesh(), |x| sol.forcing(x, t_mid, nu)))
            }
        }
    }

    /// Residual `M(u−u_prev)/Δt + ν S u_mid + N(u_mid) − F` at `u_mid`.
    fn residual(&self, u: &[f64], u_prev: &[f64], load: Option<&[f64]>, out: &mut [f64]) {
        let dt = self.cfg.dt;
        let nu = self.cfg.nu;
        let mid: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| 0.5 * (a + b)).collect();
        let diff: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| (a - b) / dt).collect();
        nonlinear_form_into(&mid, self.ops.mesh(), out);
        let m = self.ops.mass().apply(&diff);
        let s = self.ops.stiffness().apply(&mid);
        for i in 0..out.len() {
            out[i] += m[i] + nu * s[i];
            if let Some(f) = load {
                out[i] -= f[i];
            }
        }
    }

    /// One step from `t_n` to `t_n + Δt` by Newton's method with the
    /// analytic tridiagonal Jacobian, starting from `u_prev`. Stops when the
    /// residual or the relative update drops below the tolerance.
    pub fn step(&self, u_prev: &FemFunction, t_n: f64) -> Result<FemFunction> {
        let n = self.ops.dim();
        if u_prev.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u_prev.len(),
            });
        }
        let load = self.forcing_load(t_n + 0.5 * self.cfg.dt);
        let prev = u_prev.as_slice();
        let mut u = prev.to_vec();
        let mut res = alloc::vec![0.0; n];
        let mut last = f64::INFINITY;
        for iter in 0..=self.cfg.newton_max_iter {
            self.residual(&u, prev, load.as_deref(), &mut res);
            last = norm2(&res);
            if last <= self.cfg.newton_tol {
                return Ok(FemFunction::from_vec(u));
            }
            if !last.is_finite() || iter == self.cfg.newton_max_iter {
                break;
            }
            let mid: Vec<f64> = u.iter().zip(prev).map(|(a, b)| 0.5 * (a + b)).collect();
            let mut jac = nonlinear_jacobian(&mid, self.ops.mesh());
            for v in jac
                .diag
                .iter_mut()
                .chain(jac.lower.iter_mut())
                .chain(jac.upper.iter_mut())
            {
                *v *= 0.5;
            }
            for (j, l) in jac.diag.iter_mut().zip(&self.linear.diag) {
                *j += l;
            }
            for (j, l) in jac.lower.iter_mut().zip(&self.linear.lower) {
                *j += l;
            }
            for (j, l) in jac.upper.iter_mut().zip(&self.linear.upper) {
                *j += l;
            }
            let neg: Vec<f64> = res.iter().map(|v| -v).collect();
            let delta = jac.solve(&neg)?;
            for (ui, di) in u.iter_mut().zip(&delta) {
                *ui += di;
            }
            // residual may sit at the rounding floor of M/Δt on fine meshes
            if norm2(&delta) <= self.cfg.newton_tol * (1.0 + norm2(&u)) {
                return Ok(FemFunction::from_vec(u));
            }
        }
        Err(Error::NonlinearSolveFailure {
            step: None,
            iterations: self.cfg.newton_max_iter,
            residual: last,
        })
    }
}

/// One Crank–Nicolson step; see [`CnStepper::step`].
pub fn cn_step(
    u_prev: &FemFunction,
    cfg: &FomConfig,
    ops: &FemOperators,
    t_n: f64,
) -> Result<FemFunction> {
    CnStepper::new(cfg, ops).step(u_prev, t_n)
}

/// Integrates from `u0` to `T`, returning all `N + 1` snapshots.
pub fn solve_fom(cfg: &FomConfig, ops: &FemOperators, u0: &FemFunction) -> Result<SnapshotSet> {
    let n_steps = cfg.n_steps()?;
    if u0.len() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: u0.len(),
        });
    }
    let stepper = CnStepper::new(cfg, ops);
    let mut snaps = Vec::with_capacity(n_steps + 1);
    snaps.push(u0.clone());
    for n in 0..n_steps {
        let t_n = n as f64 * cfg.dt;
        let next = stepper
            .step(&snaps[n], t_n)
            .map_err(|e| e.at_step(n + 1))?;
        snaps.push(next);
    }
    SnapshotSet::new(cfg.dt, snaps)
}

/// Per-step defect of the discrete energy identity
/// `‖uⁿ⁺¹‖² − ‖uⁿ‖² + 2Δtν‖(u^{n+1/2})_x‖² = 0` (unforced case), each
/// divided by `max(‖uⁿ‖², tiny)`. Returns absolute and relative defects.
pub fn energy_balance_defects(snaps: &SnapshotSet, nu: f64, ops: &FemOperators) -> Vec<(f64, f64)> {
    let dt = snaps.dt();
    snaps
        .snapshots()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].as_slice(), w[1].as_slice());
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            let ea = ops.mass().bilinear(a, a);
            let eb = ops.mass().bilinear(b, b);
            let diss = ops.stiffness().bilinear(&mid, &mid);
            let defect = eb - ea + 2.0 * dt * nu * diss;
            (defect.abs(), defect.abs() / ea.max(f64::MIN_POSITIVE))
        })
        .collect()
}
