//! Self-contained verification suites on small meshes.

use std::fmt;
use std::str::FromStr;

use dqrom_core::analysis::uniform_bound_profile;
use dqrom_core::fem::l2_error;
use dqrom_core::fom::{energy_balance_defects, step_initial_condition};
use dqrom_core::pod::NUMERICAL_RANK_CUTOFF;
use dqrom_core::projection::{tail_identity_profile, DeflationTable};
use dqrom_core::rom::rom_energy_defects;
use dqrom_core::{
    assemble_rom, build_dq_collection, solve_fom, solve_rom, FemFunction, FemOperators, FomConfig, Forcing,
    InnerProduct, ManufacturedSolution, Mesh1D, PodBasis, ProjectionKind, RomConfig, RomInit, SnapshotSet,
};
use serde::{Deserialize, Serialize};

use crate::config::Framework;
use crate::error::{LabError, Result};
use crate::experiment::build_basis;

pub const ORTHONORMALITY_TOL: f64 = 1e-8;
pub const POD_IDENTITY_TOL: f64 = 1e-7;
pub const RITZ_IDENTITY_TOL: f64 = 1e-6;
pub const DEFLATION_TOL: f64 = 1e-8;
pub const ENERGY_TOL: f64 = 1e-10;
/// Identity gaps are compared relatively only where both sides exceed this
/// fraction of the `r = 0` energy; below it they sit at rounding level.
pub const RELATIVE_FLOOR: f64 = 1e-16;
/// Absolute gap allowed at every `r`, as a fraction of the `r = 0` energy.
pub const ABSOLUTE_GAP: f64 = 1e-13;
pub const ORDER_RANGE: (f64, f64) = (1.8, 2.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Energy,
    Convergence,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Energy => "energy",
            Suite::Convergence => "convergence",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Suite::Identities, Suite::Energy, Suite::Convergence, Suite::All]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected identities, energy, convergence or all)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn new(suite: Suite, checks: Vec<Check>) -> Self {
        Self {
            suite,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `Err(Verification)` naming the failed checks, if any.
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            let names: Vec<&str> = self.failures().map(|c| c.name.as_str()).collect();
            Err(LabError::Verification(names.join(", ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Scales every eigenvalue by `1 + rel` before the identity checks, as a
    /// negative control.
    pub perturb_eigenvalues: Option<f64>,
}

/// Step-IC Burgers data on a small mesh.
pub struct SmallProblem {
    pub ops: FemOperators,
    pub cfg: FomConfig,
    pub snaps: SnapshotSet,
}

impl SmallProblem {
    /// `n_cells` cells, `n_steps` steps of `Δt = 10⁻³`, `ν = 10⁻²`.
    pub fn new(n_cells: usize, n_steps: usize) -> Result<Self> {
        let mesh = Mesh1D::uniform(n_cells)?;
        let ops = FemOperators::assemble(&mesh);
        let cfg = FomConfig {
            t_final: n_steps as f64 * 1e-3,
            ..FomConfig::burgers_step()
        };
        let snaps = solve_fom(&cfg, &ops, &step_initial_condition(&mesh))?;
        Ok(Self { ops, cfg, snaps })
    }

    /// Basis keeping every numerically positive eigenvalue.
    pub fn full_rank_basis(&self, fw: Framework) -> Result<PodBasis> {
        build_basis(&self.snaps, fw, NUMERICAL_RANK_CUTOFF, &self.ops)
    }
}

/// Gap statistics of `lhs = rhs` over `r = 0..=d`: the largest relative
/// gap among entries above the floor and the largest absolute gap, both
/// with `E = lhs(0)` as the scale.
pub fn identity_gaps(profile: &[(f64, f64)]) -> (f64, f64) {
    let energy = profile.first().map_or(0.0, |p| p.0);
    let mut rel = 0.0_f64;
    let mut abs = 0.0_f64;
    for &(lhs, rhs) in profile {
        let gap = (lhs - rhs).abs();
        abs = abs.max(gap / energy);
        if lhs.max(rhs) >= RELATIVE_FLOOR * energy {
            rel = rel.max(gap / lhs.max(rhs));
        }
    }
    (rel, abs)
}

fn identity_check(name: String, profile: &[(f64, f64)], tol: f64) -> Check {
    let (rel, abs) = identity_gaps(profile);
    let mut c = Check::at_most(name, rel, tol, format!("max relative gap {rel:.3e}, max absolute gap {abs:.3e}·E"));
    c.passed &= abs <= ABSOLUTE_GAP;
    c
}

/// POD orthonormality, projection-error identities, Ritz deflation of the
/// H¹₀ modes and uniform bounds on DQ data.
pub fn identity_checks(problem: &SmallProblem, opts: VerifyOptions) -> Result<Vec<Check>> {
    let ops = &problem.ops;
    let mut checks = Vec::new();
    for fw in Framework::ALL {
        let mut basis = problem.full_rank_basis(fw)?;
        if let Some(rel) = opts.perturb_eigenvalues {
            basis = basis.with_perturbed_eigenvalues(rel);
        }
        let d = basis.d();
        let collection = build_dq_collection(&problem.snaps, fw.use_dq())?;
        checks.push(Check::at_most(
            format!("orthonormality/{fw}"),
            basis.orthonormality_defect(ops),
            ORTHONORMALITY_TOL,
            format!("d = {d}"),
        ));
        let h = fw.inner_product();
        let prof = tail_identity_profile(&collection, &basis, ProjectionKind::PodH, h, ops)?;
        checks.push(identity_check(format!("pod_tail_identity/{fw}"), &prof, POD_IDENTITY_TOL));
        for w in [InnerProduct::L2, InnerProduct::H01] {
            let prof = tail_identity_profile(&collection, &basis, ProjectionKind::Ritz, w, ops)?;
            checks.push(identity_check(
                format!("ritz_tail_identity/{fw}/{}", w.name()),
                &prof,
                RITZ_IDENTITY_TOL,
            ));
        }
        if h == InnerProduct::H01 {
            let table = DeflationTable::new(&basis, ProjectionKind::Ritz, ops)?;
            let mut worst = 0.0_f64;
            for r in 0..d {
                for i in r..d {
                    let l2 = ops.norm(basis.mode(i), InnerProduct::L2)?;
                    worst = worst
                        .max((table.get(i, r, InnerProduct::L2).sqrt() - l2).abs())
                        .max((table.get(i, r, InnerProduct::H01).sqrt() - 1.0).abs());
                }
            }
            checks.push(Check::at_most(
                format!("ritz_deflation/{fw}"),
                worst,
                DEFLATION_TOL,
                "max over r < d, i > r of both deflation identities",
            ));
        }
        if fw.use_dq() {
            checks.push(uniform_bound_check(fw, &problem.snaps, &basis, ops)?);
        }
    }
    Ok(checks)
}

/// Largest excess `(lhs − rhs)/E_W` of the three uniform bounds over
/// `r = 0..=d` and both `W`; must stay within rounding of zero.
pub fn uniform_bound_excess(snaps: &SnapshotSet, basis: &PodBasis, ops: &FemOperators) -> Result<(f64, f64)> {
    let mut excess = f64::NEG_INFINITY;
    let mut ratio = 0.0_f64;
    for w in [InnerProduct::L2, InnerProduct::H01] {
        let rows = uniform_bound_profile(snaps, basis, w, ops)?;
        let scale = [rows[0].pod_h.0, rows[0].pod_w.0, rows[0].ritz_w.0];
        for row in &rows {
            for ((lhs, rhs), e) in [row.pod_h, row.pod_w, row.ritz_w].into_iter().zip(scale) {
                excess = excess.max((lhs - rhs) / e);
                if rhs > 0.0 {
                    ratio = ratio.max(lhs / rhs);
                }
            }
        }
    }
    Ok((excess, ratio))
}

pub fn uniform_bound_check(fw: Framework, snaps: &SnapshotSet, basis: &PodBasis, ops: &FemOperators) -> Result<Check> {
    let (excess, ratio) = uniform_bound_excess(snaps, basis, ops)?;
    Ok(Check::at_most(
        format!("uniform_bounds/{fw}"),
        excess,
        ABSOLUTE_GAP,
        format!("largest lhs/rhs {ratio:.3}"),
    ))
}

/// Largest relative per-step defect of the discrete energy balance for the
/// FOM and for ROMs of the listed dimensions in every framework.
pub fn energy_checks(problem: &SmallProblem, ranks: &[usize]) -> Result<Vec<Check>> {
    let ops = &problem.ops;
    let fom = energy_balance_defects(&problem.snaps, problem.cfg.nu, ops)
        .into_iter()
        .fold(0.0_f64, |m, (_, rel)| m.max(rel));
    let mut checks = vec![Check::at_most("energy/fom", fom, ENERGY_TOL, "max relative per-step defect")];
    let rom_cfg = RomConfig::from_fom(&problem.cfg);
    let u0 = &problem.snaps.snapshots()[0];
    for fw in Framework::ALL {
        let basis = build_basis(&problem.snaps, fw, 1e-12, ops)?;
        let mut worst = 0.0_f64;
        let mut used = Vec::new();
        for &r in ranks {
            let r = r.min(basis.d());
            let rom = assemble_rom(&basis, r, ops, u0, RomInit::HProjection)?;
            let traj = solve_rom(&rom, rom_cfg, problem.snaps.n_steps())?;
            worst = rom_energy_defects(&traj, &rom, problem.cfg.nu)
                .into_iter()
                .fold(worst, |m, (_, rel)| m.max(rel));
            used.push(r);
        }
        checks.push(Check::at_most(
            format!("energy/rom/{fw}"),
            worst,
            ENERGY_TOL,
            format!("r in {used:?}"),
        ));
    }
    Ok(checks)
}

/// `L²` error at the final time of a manufactured run.
pub fn manufactured_error(n_cells: usize, dt: f64, t_final: f64) -> Result<f64> {
    let sol = ManufacturedSolution::DecayingSine;
    let mesh = Mesh1D::uniform(n_cells)?;
    let ops = FemOperators::assemble(&mesh);
    let cfg = FomConfig {
        nu: 0.1,
        dt,
        t_final,
        newton_tol: 1e-12,
        newton_max_iter: 30,
        forcing: Forcing::Manufactured(sol),
    };
    let u0 = FemFunction::interpolate(&mesh, |x| sol.exact(x, 0.0));
    let snaps = solve_fom(&cfg, &ops, &u0)?;
    let last = &snaps.snapshots()[snaps.n_steps()];
    Ok(l2_error(last, &mesh, |x| sol.exact(x, t_final)))
}

/// Observed orders `log₂(e_k / e_{k+1})` of a halving sequence.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

pub const H_LEVELS: [usize; 4] = [16, 32, 64, 128];
pub const H_STUDY_DT: f64 = 1e-3;
pub const DT_LEVELS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
pub const DT_STUDY_CELLS: usize = 2048;
pub const STUDY_T: f64 = 0.4;

pub fn h_study() -> Result<ConvergenceStudy> {
    let errors = H_LEVELS
        .iter()
        .map(|&n| manufactured_error(n, H_STUDY_DT, STUDY_T))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceStudy {
        levels: H_LEVELS.iter().map(|&n| 1.0 / n as f64).collect(),
        orders: observed_orders(&errors),
        errors,
    })
}

pub fn dt_study() -> Result<ConvergenceStudy> {
    let errors = DT_LEVELS
        .iter()
        .map(|&dt| manufactured_error(DT_STUDY_CELLS, dt, STUDY_T))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceStudy {
        levels: DT_LEVELS.to_vec(),
        orders: observed_orders(&errors),
        errors,
    })
}

fn order_check(name: &str, study: &ConvergenceStudy) -> Check {
    let (lo, hi) = ORDER_RANGE;
    let worst = study
        .orders
        .iter()
        .map(|p| (p - 2.0).abs())
        .fold(0.0_f64, f64::max);
    Check {
        name: name.into(),
        passed: study.orders.iter().all(|p| (lo..=hi).contains(p)),
        value: worst,
        tolerance: hi - 2.0,
        detail: format!("orders {:?}, errors {:?}", study.orders, study.errors),
    }
}

pub fn convergence_checks() -> Result<Vec<Check>> {
    Ok(vec![
        order_check("convergence/h", &h_study()?),
        order_check("convergence/dt", &dt_study()?),
    ])
}

pub const IDENTITY_CELLS: usize = 64;
pub const IDENTITY_STEPS: usize = 100;

pub fn run_suite(suite: Suite, opts: VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Identities | Suite::Energy | Suite::All) {
        let problem = SmallProblem::new(IDENTITY_CELLS, IDENTITY_STEPS)?;
        if matches!(suite, Suite::Identities | Suite::All) {
            checks.extend(identity_checks(&problem, opts)?);
        }
        if matches!(suite, Suite::Energy | Suite::All) {
            checks.extend(energy_checks(&problem, &[2, 5, 10, usize::MAX])?);
        }
    }
    if matches!(suite, Suite::Convergence | Suite::All) {
        checks.extend(convergence_checks()?);
    }
    Ok(VerifyReport::new(suite, checks))
}
