use dqrom_core::analysis::{
    default_regression_range, fit_bound_constant, regression_order, sandwich_failures, BoundFit, ErrorReport,
    RegressionPoint, RegressionResult, RhsFamily, SweepAnalysis,
};
use dqrom_core::fom::step_initial_condition;
use dqrom_core::{
    assemble_rom, build_dq_collection, compute_pod, lift, solve_fom, solve_rom, FemOperators, InnerProduct,
    Mesh1D, PodBasis, PodConfig, RomConfig, RomInit, RomTrajectory, SnapshotSet,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Abscissa, ExperimentConfig, Framework, RegressionOptions};
use crate::error::Result;
use crate::formats::{BasisSidecar, SnapshotMeta};

/// Mesh and FE operators of a configuration.
pub struct Discretization {
    pub mesh: Mesh1D,
    pub ops: FemOperators,
}

impl Discretization {
    pub fn new(n_cells: usize) -> Result<Self> {
        let mesh = Mesh1D::uniform(n_cells)?;
        let ops = FemOperators::assemble(&mesh);
        Ok(Self { mesh, ops })
    }
}

pub fn snapshot_meta(cfg: &ExperimentConfig) -> SnapshotMeta {
    SnapshotMeta {
        n_cells: cfg.n_cells,
        dt: cfg.dt,
        nu: cfg.nu,
        t_final: cfg.t_final,
    }
}

/// FOM run from the step initial condition with zero forcing.
pub fn run_fom(cfg: &ExperimentConfig, disc: &Discretization) -> Result<SnapshotSet> {
    cfg.validate()?;
    let u0 = step_initial_condition(&disc.mesh);
    let snaps = solve_fom(&cfg.fom_config(), &disc.ops, &u0)?;
    info!("FOM: {} steps on {} cells", snaps.n_steps(), cfg.n_cells);
    Ok(snaps)
}

pub fn build_basis(snaps: &SnapshotSet, fw: Framework, cutoff: f64, ops: &FemOperators) -> Result<PodBasis> {
    let collection = build_dq_collection(snaps, fw.use_dq())?;
    let pod_cfg = PodConfig {
        eigenvalue_cutoff: cutoff,
        ..PodConfig::new(fw.inner_product(), fw.use_dq())
    };
    let basis = compute_pod(&collection, &pod_cfg, ops)?;
    info!(
        "{fw}: d = {}, λ1 = {:.3e}, {} members, M = {}",
        basis.d(),
        basis.eigenvalues()[0],
        collection.len(),
        collection.weight()
    );
    Ok(basis)
}

pub fn basis_sidecar(fw: Framework, basis: &PodBasis, n_cells: usize, ops: &FemOperators) -> BasisSidecar {
    BasisSidecar {
        framework: fw,
        inner_product: basis.inner_product(),
        use_dq: basis.use_dq(),
        weight_m: basis.weight(),
        cutoff: basis.cutoff(),
        d: basis.d(),
        n_cells,
        eigenvalues: basis.eigenvalues().to_vec(),
        orthonormality_defect: basis.orthonormality_defect(ops),
    }
}

/// Bases for the requested frameworks, built in parallel.
pub fn build_bases(
    snaps: &SnapshotSet,
    frameworks: &[Framework],
    cutoff: f64,
    ops: &FemOperators,
) -> Result<Vec<(Framework, PodBasis)>> {
    frameworks
        .par_iter()
        .map(|&fw| Ok((fw, build_basis(snaps, fw, cutoff, ops)?)))
        .collect()
}

/// Reduced trajectory of dimension `r` started from the H-projection of
/// the first snapshot.
pub fn run_rom(
    cfg: &ExperimentConfig,
    snaps: &SnapshotSet,
    basis: &PodBasis,
    r: usize,
    ops: &FemOperators,
) -> Result<(dqrom_core::RomOperators, RomTrajectory)> {
    let u0 = snaps.get(0).ok_or(dqrom_core::Error::EmptyCollection)?;
    let rom = assemble_rom(basis, r, ops, u0, RomInit::HProjection)?;
    let traj = solve_rom(&rom, RomConfig::from_fom(&cfg.fom_config()), snaps.n_steps())?;
    Ok((rom, traj))
}

/// Results of an `r` sweep for one framework.
#[derive(Debug, Clone)]
pub struct FrameworkSweep {
    pub framework: Framework,
    pub family: RhsFamily,
    pub d: usize,
    pub clamped: Vec<usize>,
    pub reports: Vec<ErrorReport>,
    pub regressions: Vec<(String, RegressionResult)>,
    pub fit: BoundFit,
    pub sandwich_linf_l2: Vec<usize>,
    pub sandwich_natural: Vec<usize>,
}

/// Sidecar of an error CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSidecar {
    pub framework: Framework,
    pub family: RhsFamily,
    pub rhs1: String,
    pub rhs2: String,
    pub d: usize,
    /// Requested ranks above `d`, run at `d` instead.
    pub clamped_ranks: Vec<usize>,
    pub i_u_constant: f64,
    pub regression_abscissa: Abscissa,
    /// Smallest constants making `err ≤ C (phi0_norm + rhs1)` hold.
    pub bound_constant: BoundFit,
    /// Ranks where `rhs2 ≤ err ≤ rhs1` fails.
    pub sandwich_failures_linf_l2: Vec<usize>,
    pub sandwich_failures_natural: Vec<usize>,
}

impl FrameworkSweep {
    pub fn sidecar(&self, cfg: &ExperimentConfig) -> ErrorSidecar {
        let (rhs1, rhs2) = self.family.term_names();
        ErrorSidecar {
            framework: self.framework,
            family: self.family,
            rhs1: rhs1.into(),
            rhs2: rhs2.into(),
            d: self.d,
            clamped_ranks: self.clamped.clone(),
            i_u_constant: cfg.i_u_constant,
            regression_abscissa: cfg.regression.abscissa,
            bound_constant: self.fit,
            sandwich_failures_linf_l2: self.sandwich_linf_l2.clone(),
            sandwich_failures_natural: self.sandwich_natural.clone(),
        }
    }

    pub fn regression(&self, quantity: &str) -> Option<&RegressionResult> {
        self.regressions.iter().find(|(q, _)| q == quantity).map(|(_, fit)| fit)
    }
}

/// Points `(abscissa, error)` for one error column.
pub fn regression_points(reports: &[ErrorReport], abscissa: Abscissa, error: fn(&ErrorReport) -> f64) -> Vec<RegressionPoint> {
    reports
        .iter()
        .map(|rep| RegressionPoint {
            r: rep.r,
            abscissa: match abscissa {
                Abscissa::Tail => rep.tail,
                Abscissa::Rhs => rep.rhs1,
            },
            error: error(rep),
        })
        .collect()
}

/// Fits both error columns over the configured (or default) window.
pub fn regressions(reports: &[ErrorReport], d: usize, opts: &RegressionOptions) -> Vec<(String, RegressionResult)> {
    let columns: [(&str, fn(&ErrorReport) -> f64); 2] =
        [("err_linf_l2", |r| r.err_linf_l2), ("err_natural", |r| r.err_natural)];
    columns
        .into_iter()
        .filter_map(|(name, f)| {
            let points = regression_points(reports, opts.abscissa, f);
            let default = default_regression_range(&points, d)?;
            let range = opts.r_min.unwrap_or(*default.start())..=opts.r_max.unwrap_or(*default.end());
            match regression_order(&points, range) {
                Ok(fit) => Some((name.to_string(), fit)),
                Err(e) => {
                    warn!("no regression for {name}: {e}");
                    None
                }
            }
        })
        .collect()
}

/// ROM runs for every `(framework, r)` pair, fanned out over the rayon
/// pool and gathered in configuration order.
pub fn sweep(
    cfg: &ExperimentConfig,
    snaps: &SnapshotSet,
    bases: &[(Framework, PodBasis)],
    ops: &FemOperators,
) -> Result<Vec<FrameworkSweep>> {
    let analyses: Vec<SweepAnalysis> = bases
        .par_iter()
        .map(|(_, basis)| Ok(SweepAnalysis::new(snaps, basis, InnerProduct::L2, ops)?))
        .collect::<Result<_>>()?;
    let mut ranks = Vec::with_capacity(bases.len());
    for (fw, basis) in bases {
        let (rs, clamped) = cfg.ranks.resolve(basis.d());
        if !clamped.is_empty() {
            warn!("{fw}: d = {}, ranks {clamped:?} clamped to d", basis.d());
        }
        ranks.push((rs, clamped));
    }
    let items: Vec<(usize, usize)> = ranks
        .iter()
        .enumerate()
        .flat_map(|(b, (rs, _))| rs.iter().map(move |&r| (b, r)))
        .collect();
    let reports: Vec<(usize, ErrorReport)> = items
        .par_iter()
        .map(|&(b, r)| {
            let basis = &bases[b].1;
            let (rom, traj) = run_rom(cfg, snaps, basis, r, ops)?;
            let lifted = lift(&traj, basis)?;
            let rep = analyses[b].report(basis, snaps, &rom, &lifted, cfg.nu, cfg.i_u_constant, ops)?;
            Ok((b, rep))
        })
        .collect::<Result<_>>()?;
    Ok(bases
        .iter()
        .zip(ranks)
        .enumerate()
        .map(|(b, ((fw, basis), (_, clamped)))| {
            let reports: Vec<ErrorReport> = reports.iter().filter(|(i, _)| *i == b).map(|(_, rep)| *rep).collect();
            let regressions = regressions(&reports, basis.d(), &cfg.regression);
            info!(
                "{fw}: {} ranks, slopes {:?}",
                reports.len(),
                regressions.iter().map(|(q, f)| (q.as_str(), f.slope)).collect::<Vec<_>>()
            );
            FrameworkSweep {
                framework: *fw,
                family: RhsFamily::of(basis),
                d: basis.d(),
                clamped,
                fit: fit_bound_constant(&reports),
                sandwich_linf_l2: sandwich_failures(&reports, |r| r.err_linf_l2),
                sandwich_natural: sandwich_failures(&reports, |r| r.err_natural),
                regressions,
                reports,
            }
        })
        .collect())
}

/// FOM and lifted ROM profiles at one time, boundary nodes included.
#[derive(Debug, Clone)]
pub struct SolutionProfile {
    pub framework: Framework,
    pub r: usize,
    pub step: usize,
    pub x: Vec<f64>,
    pub u_fom: Vec<f64>,
    pub u_rom: Vec<f64>,
    /// `‖u_h − u_r‖_{L²}` at this time.
    pub l2_error: f64,
}

/// Solved ROM of one `(framework, r)` pair with its requested profiles.
#[derive(Debug, Clone)]
pub struct SolutionRun {
    pub framework: Framework,
    pub r: usize,
    pub trajectory: RomTrajectory,
    pub profiles: Vec<SolutionProfile>,
}

fn with_boundary(inner: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(inner.len() + 2);
    out.push(0.0);
    out.extend_from_slice(inner);
    out.push(0.0);
    out
}

pub fn solutions(
    cfg: &ExperimentConfig,
    snaps: &SnapshotSet,
    bases: &[(Framework, PodBasis)],
    disc: &Discretization,
) -> Result<Vec<SolutionRun>> {
    let steps: Vec<usize> = cfg
        .solutions
        .times
        .iter()
        .map(|t| ((t / cfg.dt).round() as usize).min(snaps.n_steps()))
        .collect();
    let mut items = Vec::new();
    for (b, (fw, basis)) in bases.iter().enumerate() {
        let (rs, clamped) = crate::config::Ranks::List(cfg.solutions.ranks.clone()).resolve(basis.d());
        if !clamped.is_empty() {
            warn!("{fw}: d = {}, solution ranks {clamped:?} clamped to d", basis.d());
        }
        items.extend(rs.into_iter().map(|r| (b, r)));
    }
    let x: Vec<f64> = (0..=cfg.n_cells).map(|j| disc.mesh.node(j)).collect();
    items
        .par_iter()
        .map(|&(b, r)| {
            let (fw, basis) = &bases[b];
            let (_, traj) = run_rom(cfg, snaps, basis, r, &disc.ops)?;
            let lifted = lift(&traj, basis)?;
            let profiles = steps
                .iter()
                .map(|&n| {
                    let (uf, ur) = (&snaps.snapshots()[n], &lifted.snapshots()[n]);
                    SolutionProfile {
                        framework: *fw,
                        r,
                        step: n,
                        x: x.clone(),
                        u_fom: with_boundary(uf.as_slice()),
                        u_rom: with_boundary(ur.as_slice()),
                        l2_error: disc.ops.norm(&uf.sub(ur), InnerProduct::L2).unwrap_or(f64::NAN),
                    }
                })
                .collect();
            Ok(SolutionRun {
                framework: *fw,
                r,
                trajectory: traj,
                profiles,
            })
        })
        .collect()
}
