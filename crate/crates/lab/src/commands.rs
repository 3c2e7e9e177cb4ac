//! The CLI commands as library functions writing into `cfg.output_dir`.

use std::path::Path;

use dqrom_core::{PodBasis, SnapshotSet};
use log::info;

use crate::config::{ExperimentConfig, Framework};
use crate::error::{LabError, Result};
use crate::experiment::{self, basis_sidecar, snapshot_meta, Discretization, FrameworkSweep};
use crate::formats::{self, Layout, SnapshotSidecar, TrajectorySidecar};
use crate::verify::{self, Suite, VerifyOptions, VerifyReport};

fn require(path: &Path, producer: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(LabError::MissingInput {
            path: path.to_path_buf(),
            producer,
        })
    }
}

/// Loads the snapshot file and checks it against the configuration.
pub fn load_snapshots(cfg: &ExperimentConfig, layout: &Layout) -> Result<SnapshotSet> {
    let path = layout.snapshots_csv();
    require(&path, "fom")?;
    let (meta, snaps) = formats::read_snapshots(&path)?;
    if meta != snapshot_meta(cfg) {
        return Err(LabError::Config(format!(
            "{} was written for {meta:?}, configuration asks for {:?}",
            path.display(),
            snapshot_meta(cfg)
        )));
    }
    Ok(snaps)
}

pub fn cmd_fom(cfg: &ExperimentConfig) -> Result<SnapshotSet> {
    let layout = Layout::new(&cfg.output_dir);
    layout.create()?;
    let disc = Discretization::new(cfg.n_cells)?;
    let snaps = experiment::run_fom(cfg, &disc)?;
    let meta = snapshot_meta(cfg);
    formats::write_snapshots(&layout.snapshots_csv(), &meta, &snaps)?;
    formats::write_json(
        &layout.snapshots_json(),
        &SnapshotSidecar {
            meta,
            n_steps: snaps.n_steps(),
            dim: snaps.dim(),
            initial_condition: "step".into(),
            forcing: "zero".into(),
        },
    )?;
    info!("wrote {}", layout.snapshots_csv().display());
    Ok(snaps)
}

pub fn cmd_pod(cfg: &ExperimentConfig) -> Result<Vec<(Framework, PodBasis)>> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let snaps = load_snapshots(cfg, &layout)?;
    let disc = Discretization::new(cfg.n_cells)?;
    let bases = experiment::build_bases(&snaps, &cfg.frameworks, cfg.pod_cutoff, &disc.ops)?;
    for (fw, basis) in &bases {
        let sidecar = basis_sidecar(*fw, basis, cfg.n_cells, &disc.ops);
        formats::write_basis(&layout.basis_csv(*fw), &layout.basis_json(*fw), &sidecar, basis)?;
    }
    Ok(bases)
}

/// Stored bases for the configured frameworks; missing ones are an error.
pub fn load_bases(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<(Framework, PodBasis)>> {
    cfg.frameworks
        .iter()
        .map(|&fw| {
            let path = layout.basis_csv(fw);
            require(&path, "pod")?;
            let (sidecar, basis) = formats::read_basis(&path, &layout.basis_json(fw))?;
            if sidecar.framework != fw || sidecar.n_cells != cfg.n_cells {
                return Err(LabError::format(&path, "basis does not match the configuration"));
            }
            Ok((fw, basis))
        })
        .collect()
}

/// Uses stored bases where present and builds (and stores) the rest.
fn bases_for_sweep(cfg: &ExperimentConfig, layout: &Layout, snaps: &SnapshotSet, disc: &Discretization) -> Result<Vec<(Framework, PodBasis)>> {
    let missing: Vec<Framework> = cfg
        .frameworks
        .iter()
        .copied()
        .filter(|fw| !layout.basis_csv(*fw).exists())
        .collect();
    let built = experiment::build_bases(snaps, &missing, cfg.pod_cutoff, &disc.ops)?;
    for (fw, basis) in &built {
        let sidecar = basis_sidecar(*fw, basis, cfg.n_cells, &disc.ops);
        formats::write_basis(&layout.basis_csv(*fw), &layout.basis_json(*fw), &sidecar, basis)?;
    }
    load_bases(cfg, layout)
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<FrameworkSweep>> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let snaps = load_snapshots(cfg, &layout)?;
    let disc = Discretization::new(cfg.n_cells)?;
    let bases = bases_for_sweep(cfg, &layout, &snaps, &disc)?;
    let sweeps = experiment::sweep(cfg, &snaps, &bases, &disc.ops)?;
    for s in &sweeps {
        formats::write_error_csv(&layout.errors_csv(s.framework), &s.reports)?;
        formats::write_json(&layout.errors_json(s.framework), &s.sidecar(cfg))?;
        formats::write_regression_csv(&layout.regression_csv(s.framework), &s.regressions)?;
    }
    Ok(sweeps)
}

pub fn cmd_solutions(cfg: &ExperimentConfig) -> Result<Vec<experiment::SolutionRun>> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let snaps = load_snapshots(cfg, &layout)?;
    let bases = load_bases(cfg, &layout)?;
    let disc = Discretization::new(cfg.n_cells)?;
    let runs = experiment::solutions(cfg, &snaps, &bases, &disc)?;
    let meta = snapshot_meta(cfg);
    for run in &runs {
        let (fw, r) = (run.framework, run.r);
        formats::write_trajectory(&layout.trajectory_csv(fw, r), &meta, &run.trajectory)?;
        formats::write_json(
            &layout.trajectory_json(fw, r),
            &TrajectorySidecar {
                framework: fw,
                basis: format!("basis_{fw}.csv"),
                r,
                nu: cfg.nu,
                dt: cfg.dt,
                n_steps: run.trajectory.n_steps(),
            },
        )?;
        for p in &run.profiles {
            formats::write_solution_csv(&layout.solution_csv(fw, r, p.step), &p.x, &p.u_fom, &p.u_rom)?;
            info!("{fw} r = {r} step {}: L² error {:.3e}", p.step, p.l2_error);
        }
    }
    Ok(runs)
}

/// Runs a suite and writes its JSON report. A failing suite is returned as
/// [`LabError::Verification`] after the report is written.
pub fn cmd_verify(cfg: &ExperimentConfig, suite: Suite, opts: VerifyOptions) -> Result<VerifyReport> {
    let layout = Layout::new(&cfg.output_dir);
    layout.create()?;
    let report = verify::run_suite(suite, opts)?;
    formats::write_json(&layout.verify_json(suite.name()), &report)?;
    for c in &report.checks {
        info!("{} {}: {:.3e} (tolerance {:.1e})", if c.passed { "pass" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    report.into_result()
}
