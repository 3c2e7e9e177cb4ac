//! On-disk formats. Every number is written with 17 significant digits so
//! that reading a file back reproduces the in-memory values bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dqrom_core::analysis::{ErrorReport, RegressionResult};
use dqrom_core::{FemFunction, InnerProduct, PodBasis, RomTrajectory, SnapshotSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Framework;
use crate::error::{LabError, Result};

pub const ERROR_HEADER: [&str; 13] = [
    "r",
    "err_linf_l2",
    "err_natural",
    "eta_linf_l2",
    "tail",
    "rhs1",
    "rhs2",
    "truly_optimal",
    "optimal_I",
    "optimal_II",
    "s_r_norm",
    "m_r_inv_norm",
    "phi0_norm",
];

pub const REGRESSION_HEADER: [&str; 6] = ["quantity", "slope", "intercept", "r_squared", "r_min", "r_max"];

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// File names inside an output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn create(&self) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| LabError::io(&self.dir, e))
    }

    pub fn snapshots_csv(&self) -> PathBuf {
        self.dir.join("snapshots.csv")
    }

    pub fn snapshots_json(&self) -> PathBuf {
        self.dir.join("snapshots.json")
    }

    pub fn basis_csv(&self, fw: Framework) -> PathBuf {
        self.dir.join(format!("basis_{fw}.csv"))
    }

    pub fn basis_json(&self, fw: Framework) -> PathBuf {
        self.dir.join(format!("basis_{fw}.json"))
    }

    pub fn errors_csv(&self, fw: Framework) -> PathBuf {
        self.dir.join(format!("errors_{fw}.csv"))
    }

    pub fn errors_json(&self, fw: Framework) -> PathBuf {
        self.dir.join(format!("errors_{fw}.json"))
    }

    pub fn regression_csv(&self, fw: Framework) -> PathBuf {
        self.dir.join(format!("regression_{fw}.csv"))
    }

    pub fn trajectory_csv(&self, fw: Framework, r: usize) -> PathBuf {
        self.dir.join(format!("trajectory_{fw}_r{r}.csv"))
    }

    pub fn trajectory_json(&self, fw: Framework, r: usize) -> PathBuf {
        self.dir.join(format!("trajectory_{fw}_r{r}.json"))
    }

    pub fn solution_csv(&self, fw: Framework, r: usize, step: usize) -> PathBuf {
        self.dir.join(format!("solution_{fw}_r{r}_n{step}.csv"))
    }

    pub fn verify_json(&self, suite: &str) -> PathBuf {
        self.dir.join(format!("verify_{suite}.json"))
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> LabError + '_ {
    move |e| LabError::format(path, e.to_string())
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| LabError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| LabError::io(path, e))
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| LabError::format(path, format!("`{field}` is not a number")))
}

fn parse_row(path: &Path, record: &csv::StringRecord) -> Result<Vec<f64>> {
    record.iter().map(|f| parse_f64(path, f)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::format(path, e.to_string()))
}

/// Run parameters stored in the first row of a snapshot or trajectory file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n_cells: usize,
    pub dt: f64,
    pub nu: f64,
    pub t_final: f64,
}

impl SnapshotMeta {
    fn record(&self) -> [String; 4] {
        [
            format!("n_cells={}", self.n_cells),
            format!("dt={}", fmt(self.dt)),
            format!("nu={}", fmt(self.nu)),
            format!("t_final={}", fmt(self.t_final)),
        ]
    }

    fn parse(path: &Path, record: &csv::StringRecord) -> Result<Self> {
        let field = |i: usize, key: &str| -> Result<&str> {
            record
                .get(i)
                .and_then(|f| f.strip_prefix(key))
                .and_then(|f| f.strip_prefix('='))
                .ok_or_else(|| LabError::format(path, format!("metadata field {} must be `{key}=...`", i + 1)))
        };
        let n_cells = field(0, "n_cells")?;
        Ok(Self {
            n_cells: n_cells
                .parse()
                .map_err(|_| LabError::format(path, format!("bad n_cells `{n_cells}`")))?,
            dt: parse_f64(path, field(1, "dt")?)?,
            nu: parse_f64(path, field(2, "nu")?)?,
            t_final: parse_f64(path, field(3, "t_final")?)?,
        })
    }
}

/// Sidecar describing a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    #[serde(flatten)]
    pub meta: SnapshotMeta,
    pub n_steps: usize,
    pub dim: usize,
    pub initial_condition: String,
    pub forcing: String,
}

fn write_matrix(path: &Path, first: &[String], prefix: &str, rows: &[&[f64]]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(first).map_err(&err)?;
    let width = rows.first().map_or(0, |r| r.len());
    w.write_record((1..=width).map(|j| format!("{prefix}_{j}")))
        .map_err(&err)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt(x))).map_err(&err)?;
    }
    finish(path, w)
}

fn read_matrix(path: &Path) -> Result<(csv::StringRecord, Vec<Vec<f64>>)> {
    let mut rd = reader(path)?;
    let mut records = rd.records();
    let err = csv_err(path);
    let first = records
        .next()
        .ok_or_else(|| LabError::format(path, "empty file"))?
        .map_err(&err)?;
    let header = records
        .next()
        .ok_or_else(|| LabError::format(path, "missing column header"))?
        .map_err(&err)?;
    let mut rows = Vec::new();
    for rec in records {
        let row = parse_row(path, &rec.map_err(&err)?)?;
        if row.len() != header.len() {
            return Err(LabError::format(
                path,
                format!("row {} has {} columns, header has {}", rows.len() + 1, row.len(), header.len()),
            ));
        }
        rows.push(row);
    }
    Ok((first, rows))
}

/// Row `n` holds `u_h^n` at the interior nodes.
pub fn write_snapshots(path: &Path, meta: &SnapshotMeta, snaps: &SnapshotSet) -> Result<()> {
    let rows: Vec<&[f64]> = snaps.snapshots().iter().map(|u| u.as_slice()).collect();
    write_matrix(path, &meta.record(), "u", &rows)
}

pub fn read_snapshots(path: &Path) -> Result<(SnapshotMeta, SnapshotSet)> {
    let (first, rows) = read_matrix(path)?;
    let meta = SnapshotMeta::parse(path, &first)?;
    if rows.first().is_some_and(|r| r.len() + 1 != meta.n_cells) {
        return Err(LabError::format(path, format!("{} columns for n_cells = {}", rows[0].len(), meta.n_cells)));
    }
    let snaps = SnapshotSet::new(meta.dt, rows.into_iter().map(FemFunction::from_vec).collect())?;
    Ok((meta, snaps))
}

/// Sidecar of a basis file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSidecar {
    pub framework: Framework,
    pub inner_product: InnerProduct,
    pub use_dq: bool,
    pub weight_m: usize,
    /// Relative eigenvalue cutoff used to determine `d`.
    pub cutoff: f64,
    pub d: usize,
    pub n_cells: usize,
    pub eigenvalues: Vec<f64>,
    pub orthonormality_defect: f64,
}

/// Modes as columns, one row per interior node.
pub fn write_basis(path: &Path, sidecar_path: &Path, sidecar: &BasisSidecar, basis: &PodBasis) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record((1..=basis.d()).map(|i| format!("phi_{i}")))
        .map_err(&err)?;
    for j in 0..basis.dim() {
        w.write_record(basis.modes().iter().map(|m| fmt(m.as_slice()[j])))
            .map_err(&err)?;
    }
    finish(path, w)?;
    write_json(sidecar_path, sidecar)
}

pub fn read_basis(path: &Path, sidecar_path: &Path) -> Result<(BasisSidecar, PodBasis)> {
    let sidecar: BasisSidecar = read_json(sidecar_path)?;
    let mut rd = reader(path)?;
    let err = csv_err(path);
    let mut records = rd.records();
    let header = records
        .next()
        .ok_or_else(|| LabError::format(path, "empty file"))?
        .map_err(&err)?;
    if header.len() != sidecar.d || sidecar.eigenvalues.len() != sidecar.d {
        return Err(LabError::format(
            path,
            format!("{} modes in file, sidecar says d = {}", header.len(), sidecar.d),
        ));
    }
    let mut modes = vec![Vec::new(); sidecar.d];
    for rec in records {
        let row = parse_row(path, &rec.map_err(&err)?)?;
        if row.len() != sidecar.d {
            return Err(LabError::format(path, "ragged basis row"));
        }
        for (m, x) in modes.iter_mut().zip(row) {
            m.push(x);
        }
    }
    let basis = PodBasis::from_parts(
        modes.into_iter().map(FemFunction::from_vec).collect(),
        sidecar.eigenvalues.clone(),
        sidecar.weight_m,
        sidecar.inner_product,
        sidecar.use_dq,
        sidecar.cutoff,
    )?;
    if basis.dim() + 1 != sidecar.n_cells {
        return Err(LabError::format(path, format!("{} rows for n_cells = {}", basis.dim(), sidecar.n_cells)));
    }
    Ok((sidecar, basis))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub framework: Framework,
    /// File name of the basis the coefficients refer to.
    pub basis: String,
    pub r: usize,
    pub nu: f64,
    pub dt: f64,
    pub n_steps: usize,
}

/// Row `n` holds the ROM coefficients `a^n`.
pub fn write_trajectory(path: &Path, meta: &SnapshotMeta, traj: &RomTrajectory) -> Result<()> {
    let rows: Vec<&[f64]> = traj.coefficients().iter().map(|a| a.as_slice()).collect();
    write_matrix(path, &meta.record(), "a", &rows)
}

pub fn read_trajectory(path: &Path) -> Result<(SnapshotMeta, RomTrajectory)> {
    let (first, rows) = read_matrix(path)?;
    let meta = SnapshotMeta::parse(path, &first)?;
    Ok((meta, RomTrajectory::new(meta.dt, rows)?))
}

pub fn write_error_csv(path: &Path, reports: &[ErrorReport]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(ERROR_HEADER).map_err(&err)?;
    for rep in reports {
        let values = [
            rep.err_linf_l2,
            rep.err_natural,
            rep.eta_linf_l2,
            rep.tail,
            rep.rhs1,
            rep.rhs2,
            rep.truly_optimal,
            rep.optimal_i,
            rep.optimal_ii,
            rep.s_r_norm,
            rep.m_r_inv_norm,
            rep.phi0_norm,
        ];
        w.write_record(core::iter::once(rep.r.to_string()).chain(values.iter().map(|&x| fmt(x))))
            .map_err(&err)?;
    }
    finish(path, w)
}

/// Rows of an error CSV keyed by column name, in file order.
pub fn read_error_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rd = reader(path)?;
    let err = csv_err(path);
    let mut records = rd.records();
    let header = records
        .next()
        .ok_or_else(|| LabError::format(path, "empty file"))?
        .map_err(&err)?;
    if header.iter().ne(ERROR_HEADER) {
        return Err(LabError::format(path, "unexpected error CSV header"));
    }
    records
        .map(|rec| parse_row(path, &rec.map_err(&err)?))
        .collect()
}

pub fn write_regression_csv(path: &Path, rows: &[(String, RegressionResult)]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(REGRESSION_HEADER).map_err(&err)?;
    for (quantity, fit) in rows {
        w.write_record([
            quantity.clone(),
            fmt(fit.slope),
            fmt(fit.intercept),
            fmt(fit.r_squared),
            fit.r_min.to_string(),
            fit.r_max.to_string(),
        ])
        .map_err(&err)?;
    }
    finish(path, w)
}

/// `x,u_fom,u_rom` including both boundary nodes.
pub fn write_solution_csv(path: &Path, x: &[f64], u_fom: &[f64], u_rom: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(["x", "u_fom", "u_rom"]).map_err(&err)?;
    for ((x, a), b) in x.iter().zip(u_fom).zip(u_rom) {
        w.write_record([fmt(*x), fmt(*a), fmt(*b)]).map_err(&err)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 0.0, 6.02214076e23] {
            assert_eq!(fmt(x).parse::<f64>().unwrap().to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(fmt(1e-3), "1.0000000000000000e-3");
    }

    #[test]
    fn metadata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let meta = SnapshotMeta {
            n_cells: 4,
            dt: 0.1,
            nu: 0.01,
            t_final: 0.2,
        };
        let snaps = SnapshotSet::new(
            0.1,
            (0..3).map(|n| FemFunction::from_vec(vec![n as f64, 0.5, 1.0 / 7.0])).collect(),
        )
        .unwrap();
        write_snapshots(&path, &meta, &snaps).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n_cells=4,dt=1.0000000000000001e-1,"));
        assert_eq!(text.lines().nth(1), Some("u_1,u_2,u_3"));
        assert!(!text.contains('\r'));
        let (back_meta, back) = read_snapshots(&path).unwrap();
        assert_eq!(back_meta, meta);
        assert_eq!(back.snapshots(), snaps.snapshots());
    }

    #[test]
    fn malformed_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "n_cells=3,dt=0.1,nu=0.1,t_final=0.1\nu_1,u_2\n1,2\n1,x\n").unwrap();
        assert!(matches!(read_snapshots(&path), Err(LabError::Format { .. })));
        std::fs::write(&path, "cells=3\nu_1\n").unwrap();
        assert!(matches!(read_snapshots(&path), Err(LabError::Format { .. })));
        assert!(matches!(read_snapshots(&dir.path().join("none.csv")), Err(LabError::Io { .. })));
    }
}
