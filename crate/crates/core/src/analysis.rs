//! Error norms, bound terms, optimality benchmarks and regression orders
//! for ROM sweeps over `r`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fem::{FemFunction, FemOperators, InnerProduct};
use crate::fom::SnapshotSet;
use crate::linalg::symmetric_extremes;
use crate::pod::PodBasis;
use crate::projection::{combine, DeflationTable, NestedProjection, ProjectionKind, Projector};
use crate::rom::RomOperators;

/// `(max_k ‖e^k‖²_{L²}, max_k ‖e^k‖²_{L²} + νΔt Σ_n ‖e_x^{n+1/2}‖²_{L²})`
/// with `e = u_h − u_r`.
pub fn compute_errors(
    fom: &SnapshotSet,
    rom: &SnapshotSet,
    nu: f64,
    ops: &FemOperators,
) -> Result<(f64, f64)> {
    if fom.n_steps() != rom.n_steps() {
        return Err(Error::GridMismatch {
            reason: format!("{} vs {} time steps", fom.n_steps(), rom.n_steps()),
        });
    }
    if (fom.dt() - rom.dt()).abs() > 1e-12 * fom.dt() {
        return Err(Error::GridMismatch {
            reason: format!("dt {} vs {}", fom.dt(), rom.dt()),
        });
    }
    if fom.dim() != ops.dim() || rom.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: if fom.dim() != ops.dim() { fom.dim() } else { rom.dim() },
        });
    }
    let errs: Vec<Vec<f64>> = fom
        .snapshots()
        .iter()
        .zip(rom.snapshots())
        .map(|(a, b)| a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect())
        .collect();
    let linf = errs
        .iter()
        .map(|e| ops.norm_sq(e, InnerProduct::L2))
        .fold(0.0, f64::max);
    let grad: f64 = errs
        .windows(2)
        .map(|w| {
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            ops.norm_sq(&mid, InnerProduct::H01)
        })
        .sum();
    Ok((linf, linf + nu * fom.dt() * grad))
}

/// `max_k ‖u^k − R_r u^k‖²_{L²}` for every `r = 0..=d`.
pub fn eta_profile(fom: &SnapshotSet, basis: &PodBasis, ops: &FemOperators) -> Result<Vec<f64>> {
    max_error_profile(fom, 0, basis, ProjectionKind::Ritz, InnerProduct::L2, ops)
}

pub fn compute_eta(fom: &SnapshotSet, basis: &PodBasis, r: usize, ops: &FemOperators) -> Result<f64> {
    if r == 0 || r > basis.d() {
        return Err(Error::RankOutOfRange { r, d: basis.d() });
    }
    Ok(eta_profile(fom, basis, ops)?[r])
}

// max over snapshots k >= first of ‖u^k − Q_r u^k‖²_W, every r
fn max_error_profile(
    fom: &SnapshotSet,
    first: usize,
    basis: &PodBasis,
    proj: ProjectionKind,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<Vec<f64>> {
    let nested = NestedProjection::new(basis, proj, ops)?;
    let mut out = vec![0.0_f64; basis.d() + 1];
    for u in &fom.snapshots()[first..] {
        nested.for_each_residual(u.as_slice(), |r, e| out[r] = out[r].max(ops.norm_sq(e, w)));
    }
    Ok(out)
}

/// Which pair of bound terms applies to a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RhsFamily {
    /// noDQ-RHS1 / noDQ-RHS2, either inner product.
    NoDq,
    /// DQ-RHS1 / DQ-RHS2, with Ritz-deflated modes.
    DqL2,
    /// DQ-RHS3 / DQ-RHS4.
    DqH01,
}

impl RhsFamily {
    pub fn of(basis: &PodBasis) -> Self {
        match (basis.use_dq(), basis.inner_product()) {
            (false, _) => RhsFamily::NoDq,
            (true, InnerProduct::L2) => RhsFamily::DqL2,
            (true, InnerProduct::H01) => RhsFamily::DqH01,
        }
    }

    /// Names of the two terms, in (rhs1, rhs2) order.
    pub fn term_names(self) -> (&'static str, &'static str) {
        match self {
            RhsFamily::NoDq => ("noDQ-RHS1", "noDQ-RHS2"),
            RhsFamily::DqL2 => ("DQ-RHS1", "DQ-RHS2"),
            RhsFamily::DqH01 => ("DQ-RHS3", "DQ-RHS4"),
        }
    }
}

/// Bound terms for every `r` of one basis.
#[derive(Debug, Clone)]
pub struct RhsCalculator {
    family: RhsFamily,
    eigenvalues: Vec<f64>,
    // ‖·‖²_{L²} and ‖(·)_x‖²_{L²} of the (possibly Ritz-deflated) modes
    deflation: Option<DeflationTable>,
    mode_l2: Vec<f64>,
    mode_h01: Vec<f64>,
}

impl RhsCalculator {
    pub fn new(basis: &PodBasis, ops: &FemOperators) -> Result<Self> {
        let family = RhsFamily::of(basis);
        let deflation = match family {
            RhsFamily::DqL2 => Some(DeflationTable::new(basis, ProjectionKind::Ritz, ops)?),
            _ => None,
        };
        Ok(Self {
            family,
            eigenvalues: basis.eigenvalues().to_vec(),
            deflation,
            mode_l2: mode_norms(basis, InnerProduct::L2, ops),
            mode_h01: mode_norms(basis, InnerProduct::H01, ops),
        })
    }

    pub fn family(&self) -> RhsFamily {
        self.family
    }

    /// `Σ_{i>r} λ_i ‖ψ_i‖²_{L²}` and `Σ_{i>r} λ_i ‖(ψ_i)_x‖²_{L²}` where
    /// `ψ_i = φ_i − R_r φ_i` for DQ-L2 and `ψ_i = φ_i` otherwise.
    pub fn weighted_tails(&self, r: usize) -> (f64, f64) {
        let d = self.eigenvalues.len();
        let mut l2 = 0.0;
        let mut h01 = 0.0;
        for i in (r..d).rev() {
            let (a, b) = match &self.deflation {
                Some(t) => (t.get(i, r, InnerProduct::L2), t.get(i, r, InnerProduct::H01)),
                None => (self.mode_l2[i], self.mode_h01[i]),
            };
            l2 += self.eigenvalues[i] * a;
            h01 += self.eigenvalues[i] * b;
        }
        (l2, h01)
    }

    /// `(rhs1, rhs2)`: `rhs1` carries the gradient term, both carry
    /// `Δt² + Δt⁴ I(u)`.
    pub fn terms(&self, r: usize, dt: f64, i_u: f64) -> (f64, f64) {
        let (l2, h01) = self.weighted_tails(r);
        let time = dt * dt + dt.powi(4) * i_u;
        (l2 + h01 + time, l2 + time)
    }
}

fn mode_norms(basis: &PodBasis, w: InnerProduct, ops: &FemOperators) -> Vec<f64> {
    basis.modes().iter().map(|m| ops.norm_sq(m.as_slice(), w)).collect()
}

/// `(family, rhs1, rhs2)` for one `r`.
pub fn compute_rhs_terms(
    basis: &PodBasis,
    r: usize,
    dt: f64,
    ops: &FemOperators,
    i_u: f64,
) -> Result<(RhsFamily, f64, f64)> {
    if r > basis.d() {
        return Err(Error::RankOutOfRange { r, d: basis.d() });
    }
    let calc = RhsCalculator::new(basis, ops)?;
    let (a, b) = calc.terms(r, dt, i_u);
    Ok((calc.family(), a, b))
}

/// Truly optimal, optimal-I and optimal-II benchmark tails in `W`.
#[derive(Debug, Clone)]
pub struct OptimalityCalculator {
    w: InnerProduct,
    truly: Vec<f64>,
    eigenvalues: Vec<f64>,
    mode_w: Vec<f64>,
    deflation: DeflationTable,
}

impl OptimalityCalculator {
    /// The truly optimal benchmark takes the maximum over `k = 1..N`.
    pub fn new(fom: &SnapshotSet, basis: &PodBasis, w: InnerProduct, ops: &FemOperators) -> Result<Self> {
        let proj = ProjectionKind::WOrth(w);
        let first = usize::from(fom.n_steps() > 0);
        Ok(Self {
            w,
            truly: max_error_profile(fom, first, basis, proj, w, ops)?,
            eigenvalues: basis.eigenvalues().to_vec(),
            mode_w: mode_norms(basis, w, ops),
            deflation: DeflationTable::new(basis, proj, ops)?,
        })
    }

    pub fn w(&self) -> InnerProduct {
        self.w
    }

    /// `(max_k ‖u^k − Π_r u^k‖²_W, Σ_{i>r} λ_i ‖φ_i‖²_W, Σ_{i>r} λ_i ‖φ_i − Π_r φ_i‖²_W)`
    pub fn benchmarks(&self, r: usize) -> (f64, f64, f64) {
        let d = self.eigenvalues.len();
        let opt_i = (r..d)
            .rev()
            .fold(0.0, |acc, i| acc + self.eigenvalues[i] * self.mode_w[i]);
        let opt_ii = self.deflation.weighted_tail(&self.eigenvalues, r, self.w);
        (self.truly[r], opt_i, opt_ii)
    }
}

pub fn optimality_benchmarks(
    fom: &SnapshotSet,
    basis: &PodBasis,
    r: usize,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<(f64, f64, f64)> {
    if r > basis.d() {
        return Err(Error::RankOutOfRange { r, d: basis.d() });
    }
    Ok(OptimalityCalculator::new(fom, basis, w, ops)?.benchmarks(r))
}

/// `(‖S_r‖₂, ‖M_r⁻¹‖₂)`
pub fn operator_norm_diagnostics(rom: &RomOperators) -> (f64, f64) {
    let (_, s_max) = symmetric_extremes(rom.stiffness());
    let (m_min, _) = symmetric_extremes(rom.mass());
    (s_max, 1.0 / m_min)
}

/// `‖R_r u_h⁰ − u_r⁰‖²_{L²}` for the reduced initial coefficients.
pub fn phi0_norm(basis: &PodBasis, rom: &RomOperators, u0: &FemFunction, ops: &FemOperators) -> Result<f64> {
    let ritz = Projector::new(basis, rom.r(), ProjectionKind::Ritz, ops)?.apply(u0)?;
    let ur0 = combine(basis, rom.a0());
    Ok(ops.norm_sq(ritz.sub(&ur0).as_slice(), InnerProduct::L2))
}

/// Everything per basis that the per-`r` reports share.
#[derive(Debug, Clone)]
pub struct SweepAnalysis {
    eta: Vec<f64>,
    rhs: RhsCalculator,
    optimality: OptimalityCalculator,
}

impl SweepAnalysis {
    /// `w` is the space of the optimality benchmarks.
    pub fn new(fom: &SnapshotSet, basis: &PodBasis, w: InnerProduct, ops: &FemOperators) -> Result<Self> {
        Ok(Self {
            eta: eta_profile(fom, basis, ops)?,
            rhs: RhsCalculator::new(basis, ops)?,
            optimality: OptimalityCalculator::new(fom, basis, w, ops)?,
        })
    }

    pub fn family(&self) -> RhsFamily {
        self.rhs.family()
    }

    /// Report for a solved ROM of dimension `rom.r()` with lifted trajectory
    /// `rom_lifted`.
    #[allow(clippy::too_many_arguments)]
    pub fn report(
        &self,
        basis: &PodBasis,
        fom: &SnapshotSet,
        rom: &RomOperators,
        rom_lifted: &SnapshotSet,
        nu: f64,
        i_u: f64,
        ops: &FemOperators,
    ) -> Result<ErrorReport> {
        let r = rom.r();
        let (err_linf_l2, err_natural) = compute_errors(fom, rom_lifted, nu, ops)?;
        let (rhs1, rhs2) = self.rhs.terms(r, fom.dt(), i_u);
        let (truly_optimal, optimal_i, optimal_ii) = self.optimality.benchmarks(r);
        let (s_r_norm, m_r_inv_norm) = operator_norm_diagnostics(rom);
        let u0 = fom.get(0).ok_or(Error::EmptyCollection)?;
        Ok(ErrorReport {
            r,
            err_linf_l2,
            err_natural,
            eta_linf_l2: self.eta[r],
            tail: basis.tail_sum(r),
            family: self.rhs.family(),
            rhs1,
            rhs2,
            truly_optimal,
            optimal_i,
            optimal_ii,
            s_r_norm,
            m_r_inv_norm,
            phi0_norm: phi0_norm(basis, rom, u0, ops)?,
        })
    }
}

/// One row of an `r` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorReport {
    pub r: usize,
    pub err_linf_l2: f64,
    pub err_natural: f64,
    pub eta_linf_l2: f64,
    /// `Σ_{i>r} λ_i`
    pub tail: f64,
    pub family: RhsFamily,
    pub rhs1: f64,
    pub rhs2: f64,
    pub truly_optimal: f64,
    pub optimal_i: f64,
    pub optimal_ii: f64,
    pub s_r_norm: f64,
    pub m_r_inv_norm: f64,
    /// `‖R_r u_h⁰ − u_r⁰‖²_{L²}`
    pub phi0_norm: f64,
}

impl ErrorReport {
    fn term(&self, family: RhsFamily, first: bool) -> Option<f64> {
        (self.family == family).then_some(if first { self.rhs1 } else { self.rhs2 })
    }

    pub fn rhs_nodq1(&self) -> Option<f64> {
        self.term(RhsFamily::NoDq, true)
    }

    pub fn rhs_nodq2(&self) -> Option<f64> {
        self.term(RhsFamily::NoDq, false)
    }

    pub fn rhs_dq1(&self) -> Option<f64> {
        self.term(RhsFamily::DqL2, true)
    }

    pub fn rhs_dq2(&self) -> Option<f64> {
        self.term(RhsFamily::DqL2, false)
    }

    pub fn rhs_dq3(&self) -> Option<f64> {
        self.term(RhsFamily::DqH01, true)
    }

    pub fn rhs_dq4(&self) -> Option<f64> {
        self.term(RhsFamily::DqH01, false)
    }
}

/// Smallest `C` with `err ≤ C (phi0_norm + rhs1)` over the reports, for
/// both error norms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundFit {
    pub c_linf_l2: f64,
    pub c_natural: f64,
}

pub fn fit_bound_constant(reports: &[ErrorReport]) -> BoundFit {
    let fit = |f: fn(&ErrorReport) -> f64| {
        reports
            .iter()
            .map(|rep| f(rep) / (rep.phi0_norm + rep.rhs1))
            .fold(0.0, f64::max)
    };
    BoundFit {
        c_linf_l2: fit(|r| r.err_linf_l2),
        c_natural: fit(|r| r.err_natural),
    }
}

/// `rhs2 ≤ err ≤ rhs1` conformance of one error column, as the list of
/// nonconforming `r`.
pub fn sandwich_failures(reports: &[ErrorReport], error: fn(&ErrorReport) -> f64) -> Vec<usize> {
    reports
        .iter()
        .filter(|rep| !(rep.rhs2 <= error(rep) && error(rep) <= rep.rhs1))
        .map(|rep| rep.r)
        .collect()
}

/// Rows of the uniform projection bounds, for one `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBoundRow {
    pub r: usize,
    /// `max_k ‖u^k − P_r u^k‖²_H` and `C Σ_{i>r} λ_i`
    pub pod_h: (f64, f64),
    /// `max_k ‖u^k − P_r u^k‖²_W` and `C Σ_{i>r} λ_i ‖φ_i‖²_W`
    pub pod_w: (f64, f64),
    /// `max_k ‖u^k − R_r u^k‖²_W` and `C Σ_{i>r} λ_i ‖φ_i − R_r φ_i‖²_W`
    pub ritz_w: (f64, f64),
}

/// `C = 6 max{1, T²}`
pub fn uniform_bound_constant(t_final: f64) -> f64 {
    6.0 * (t_final * t_final).max(1.0)
}

/// Uniform projection bounds for every `r = 0..=d`, measured in `W`.
pub fn uniform_bound_profile(
    fom: &SnapshotSet,
    basis: &PodBasis,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<Vec<UniformBoundRow>> {
    let c = uniform_bound_constant(fom.t_final());
    let h = basis.inner_product();
    let pod_h = max_error_profile(fom, 0, basis, ProjectionKind::PodH, h, ops)?;
    let pod_w = max_error_profile(fom, 0, basis, ProjectionKind::PodH, w, ops)?;
    let ritz_w = max_error_profile(fom, 0, basis, ProjectionKind::Ritz, w, ops)?;
    let mode_w = mode_norms(basis, w, ops);
    let ritz = DeflationTable::new(basis, ProjectionKind::Ritz, ops)?;
    let l = basis.eigenvalues();
    let d = basis.d();
    Ok((0..=d)
        .map(|r| {
            let tail_w = (r..d).rev().fold(0.0, |acc, i| acc + l[i] * mode_w[i]);
            UniformBoundRow {
                r,
                pod_h: (pod_h[r], c * basis.tail_sum(r)),
                pod_w: (pod_w[r], c * tail_w),
                ritz_w: (ritz_w[r], c * ritz.weighted_tail(l, r, w)),
            }
        })
        .collect())
}

/// Error against abscissa at one `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionPoint {
    pub r: usize,
    pub abscissa: f64,
    pub error: f64,
}

/// Least-squares line through `(log₁₀ abscissa, log₁₀ error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub r_min: usize,
    pub r_max: usize,
    pub n_points: usize,
}

pub fn regression_order(points: &[RegressionPoint], r_range: RangeInclusive<usize>) -> Result<RegressionResult> {
    let used: Vec<&RegressionPoint> = points.iter().filter(|p| r_range.contains(&p.r)).collect();
    if used.len() < 3 {
        return Err(Error::InvalidRegression(format!(
            "need at least 3 points in r = {}..={}, found {}",
            r_range.start(),
            r_range.end(),
            used.len()
        )));
    }
    if let Some(p) = used
        .iter()
        .find(|p| !(p.abscissa > 0.0 && p.error > 0.0 && p.abscissa.is_finite() && p.error.is_finite()))
    {
        return Err(Error::InvalidRegression(format!(
            "non-positive value at r = {} (abscissa {}, error {})",
            p.r, p.abscissa, p.error
        )));
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.abscissa.log10()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.error.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidRegression("abscissa values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        r_min: used.iter().map(|p| p.r).min().unwrap_or(0),
        r_max: used.iter().map(|p| p.r).max().unwrap_or(0),
        n_points: used.len(),
    })
}

/// Errors below this are treated as saturated at solver precision.
pub const SATURATION_FLOOR: f64 = 1e-12;

/// Sweep values from the smallest `r` up to the last `r ≤ d − 2` before the
/// error first drops below [`SATURATION_FLOOR`].
pub fn default_regression_range(points: &[RegressionPoint], d: usize) -> Option<RangeInclusive<usize>> {
    let mut sorted: Vec<&RegressionPoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.r);
    let start = sorted.first()?.r;
    let mut end = None;
    for p in sorted {
        if p.r + 2 > d || p.error < SATURATION_FLOOR {
            break;
        }
        end = Some(p.r);
    }
    end.map(|e| start..=e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Mesh1D;
    use crate::rom::{lift, solve_rom, RomConfig};
    use crate::fom::{solve_fom, step_initial_condition, FomConfig};
    use crate::pod::{build_dq_collection, compute_pod, PodConfig};
    use crate::rom::{assemble_rom, RomInit};

    struct Data {
        ops: FemOperators,
        snaps: SnapshotSet,
        basis: PodBasis,
    }

    fn data(kind: InnerProduct, use_dq: bool) -> Data {
        let mesh = Mesh1D::uniform(40).unwrap();
        let ops = FemOperators::assemble(&mesh);
        let mut cfg = FomConfig::burgers_step();
        cfg.dt = 0.01;
        cfg.t_final = 0.3;
        let snaps = solve_fom(&cfg, &ops, &step_initial_condition(&mesh)).unwrap();
        let coll = build_dq_collection(&snaps, use_dq).unwrap();
        let basis = compute_pod(&coll, &PodConfig::new(kind, use_dq), &ops).unwrap();
        Data { ops, snaps, basis }
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let Data { ops, snaps, .. } = data(InnerProduct::L2, false);
        assert_eq!(compute_errors(&snaps, &snaps, 0.01, &ops).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn constant_mode_shift() {
        let Data { ops, snaps, basis } = data(InnerProduct::L2, false);
        let c = 0.3;
        let nu = 0.01;
        let shift = basis.mode(0).scaled(c);
        let shifted = SnapshotSet::new(
            snaps.dt(),
            snaps.snapshots().iter().map(|u| u.sub(&shift)).collect(),
        )
        .unwrap();
        let (linf, natural) = compute_errors(&snaps, &shifted, nu, &ops).unwrap();
        let grad = ops.norm_sq(basis.mode(0).as_slice(), InnerProduct::H01);
        let n = snaps.n_steps() as f64;
        assert!((linf - c * c).abs() < 1e-12);
        let expect = c * c + nu * snaps.dt() * n * c * c * grad;
        assert!((natural - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let Data { ops, snaps, .. } = data(InnerProduct::L2, false);
        let short = SnapshotSet::new(snaps.dt(), snaps.snapshots()[..3].to_vec()).unwrap();
        assert!(matches!(
            compute_errors(&snaps, &short, 0.01, &ops),
            Err(Error::GridMismatch { .. })
        ));
        let other_dt = SnapshotSet::new(snaps.dt() * 2.0, snaps.snapshots().to_vec()).unwrap();
        assert!(compute_errors(&snaps, &other_dt, 0.01, &ops).is_err());
    }

    #[test]
    fn eta_is_monotone_and_vanishes_at_d() {
        let Data { ops, snaps, basis } = data(InnerProduct::L2, true);
        let eta = eta_profile(&snaps, &basis, &ops).unwrap();
        assert!(eta.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let scale = snaps
            .snapshots()
            .iter()
            .map(|u| ops.norm_sq(u.as_slice(), InnerProduct::L2))
            .fold(0.0, f64::max);
        assert!(eta[basis.d()] <= 1e-10 * scale);
        assert_eq!(compute_eta(&snaps, &basis, 3, &ops).unwrap(), eta[3]);
        assert!(compute_eta(&snaps, &basis, 0, &ops).is_err());
    }

    #[test]
    fn rhs_terms_at_full_rank_are_time_terms() {
        for (kind, dq) in [
            (InnerProduct::L2, false),
            (InnerProduct::L2, true),
            (InnerProduct::H01, true),
        ] {
            let Data { ops, basis, .. } = data(kind, dq);
            let (_, a, b) = compute_rhs_terms(&basis, basis.d(), 1e-3, &ops, 2.0).unwrap();
            let expect = 1e-6 + 1e-12 * 2.0;
            assert!((a - expect).abs() < 1e-20 && (b - expect).abs() < 1e-20);
        }
    }

    #[test]
    fn rhs_families() {
        let Data { ops, basis, .. } = data(InnerProduct::H01, true);
        let calc = RhsCalculator::new(&basis, &ops).unwrap();
        assert_eq!(calc.family(), RhsFamily::DqH01);
        // with unit gradients the first term is Σ λ (1 + ‖φ‖²)
        for r in [1, 4, 9] {
            let (rhs1, rhs2) = calc.terms(r, 1e-3, 0.0);
            let direct: f64 = (r..basis.d())
                .map(|i| basis.eigenvalues()[i] * (1.0 + ops.norm_sq(basis.mode(i).as_slice(), InnerProduct::L2)))
                .sum::<f64>()
                + 1e-6;
            assert!((rhs1 - direct).abs() < 1e-8 * direct);
            assert!(rhs1 >= rhs2);
        }
        let Data { ops, basis, .. } = data(InnerProduct::L2, true);
        let calc = RhsCalculator::new(&basis, &ops).unwrap();
        assert_eq!(calc.family(), RhsFamily::DqL2);
        // Ritz deflation cannot increase the H¹₀ norm
        for r in [1, 4, 9] {
            let (l2, h01) = calc.weighted_tails(r);
            let plain: f64 = (r..basis.d())
                .map(|i| basis.eigenvalues()[i] * ops.norm_sq(basis.mode(i).as_slice(), InnerProduct::H01))
                .sum();
            assert!(h01 <= plain * (1.0 + 1e-12));
            assert!(l2 > 0.0);
        }
    }

    #[test]
    fn optimality_in_basis_product() {
        let Data { ops, snaps, basis } = data(InnerProduct::L2, false);
        let calc = OptimalityCalculator::new(&snaps, &basis, InnerProduct::L2, &ops).unwrap();
        for r in [1, 5, 10] {
            let (_, a, b) = calc.benchmarks(r);
            let tail = basis.tail_sum(r);
            assert!((a - tail).abs() < 1e-10 * tail);
            assert!((b - tail).abs() < 1e-10 * tail);
        }
        let (t, a, b) = calc.benchmarks(basis.d());
        let l1 = basis.eigenvalues()[0];
        assert!(t < 1e-10 * l1 && a == 0.0 && b == 0.0);
    }

    #[test]
    fn optimal_ii_below_optimal_i() {
        let Data { ops, snaps, basis } = data(InnerProduct::L2, true);
        let calc = OptimalityCalculator::new(&snaps, &basis, InnerProduct::H01, &ops).unwrap();
        for r in 0..=basis.d() {
            let (_, a, b) = calc.benchmarks(r);
            assert!(b <= a * (1.0 + 1e-12), "r={r}");
        }
    }

    #[test]
    fn operator_norms() {
        let Data { ops, snaps, basis } = data(InnerProduct::L2, true);
        let u0 = snaps.get(0).unwrap();
        let mut prev = 0.0;
        for r in 1..=8 {
            let rom = assemble_rom(&basis, r, &ops, u0, RomInit::HProjection).unwrap();
            let (s, m_inv) = operator_norm_diagnostics(&rom);
            assert!((m_inv - 1.0).abs() < 1e-6);
            assert!(s >= prev * (1.0 - 1e-12));
            prev = s;
        }
        let Data { ops, snaps, basis } = data(InnerProduct::H01, true);
        let rom = assemble_rom(&basis, 6, &ops, snaps.get(0).unwrap(), RomInit::HProjection).unwrap();
        assert!((operator_norm_diagnostics(&rom).0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_bounds_hold_on_dq_data() {
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            let Data { ops, snaps, basis } = data(kind, true);
            for w in [InnerProduct::L2, InnerProduct::H01] {
                for row in uniform_bound_profile(&snaps, &basis, w, &ops).unwrap().iter().take(basis.d()) {
                    assert!(row.pod_h.0 <= row.pod_h.1, "{row:?}");
                    assert!(row.pod_w.0 <= row.pod_w.1, "{row:?}");
                    assert!(row.ritz_w.0 <= row.ritz_w.1, "{row:?}");
                }
            }
        }
        assert_eq!(uniform_bound_constant(0.5), 6.0);
        assert_eq!(uniform_bound_constant(2.0), 24.0);
    }

    #[test]
    fn power_law_regression_is_exact() {
        let pts: Vec<RegressionPoint> = (1..=10)
            .map(|r| {
                let s = 10f64.powi(-(r as i32));
                RegressionPoint {
                    r,
                    abscissa: s,
                    error: 3.0 * s.powf(1.5),
                }
            })
            .collect();
        let fit = regression_order(&pts, 2..=9).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.log10()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!((fit.r_min, fit.r_max, fit.n_points), (2, 9, 8));
        assert!(regression_order(&pts, 2..=3).is_err());
        let mut bad = pts.clone();
        bad[4].error = 0.0;
        assert!(regression_order(&bad, 1..=10).is_err());
        assert!(regression_order(&bad, 6..=10).is_ok());
    }

    #[test]
    fn default_range_stops_at_saturation() {
        let pts: Vec<RegressionPoint> = (2..=20)
            .map(|r| RegressionPoint {
                r,
                abscissa: 1.0,
                error: 10f64.powi(-(r as i32)),
            })
            .collect();
        assert_eq!(default_regression_range(&pts, 30), Some(2..=12));
        assert_eq!(default_regression_range(&pts, 10), Some(2..=8));
        assert_eq!(default_regression_range(&[], 10), None);
    }

    #[test]
    fn bound_fit_and_sandwich() {
        let rep = |r, err: f64, rhs1, rhs2| ErrorReport {
            r,
            err_linf_l2: err,
            err_natural: 2.0 * err,
            eta_linf_l2: 0.0,
            tail: 0.0,
            family: RhsFamily::NoDq,
            rhs1,
            rhs2,
            truly_optimal: 0.0,
            optimal_i: 0.0,
            optimal_ii: 0.0,
            s_r_norm: 1.0,
            m_r_inv_norm: 1.0,
            phi0_norm: 0.0,
        };
        let reps = [rep(2, 1.0, 2.0, 0.5), rep(3, 3.0, 2.0, 0.5)];
        let fit = fit_bound_constant(&reps);
        assert_eq!(fit.c_linf_l2, 1.5);
        assert_eq!(fit.c_natural, 3.0);
        assert_eq!(sandwich_failures(&reps, |r| r.err_linf_l2), vec![3]);
        assert_eq!(reps[0].rhs_nodq1(), Some(2.0));
        assert_eq!(reps[0].rhs_dq1(), None);
    }

    #[test]
    fn sweep_report_is_consistent() {
        let Data { ops, snaps, basis } = data(InnerProduct::H01, true);
        let sweep = SweepAnalysis::new(&snaps, &basis, InnerProduct::L2, &ops).unwrap();
        let cfg = RomConfig {
            nu: 0.01,
            dt: snaps.dt(),
            newton_tol: 1e-12,
            newton_max_iter: 30,
        };
        let u0 = snaps.get(0).unwrap();
        let rom = assemble_rom(&basis, 6, &ops, u0, RomInit::HProjection).unwrap();
        let traj = solve_rom(&rom, cfg, snaps.n_steps()).unwrap();
        let lifted = lift(&traj, &basis).unwrap();
        let rep = sweep.report(&basis, &snaps, &rom, &lifted, 0.01, 0.0, &ops).unwrap();
        assert_eq!(rep.r, 6);
        assert_eq!(rep.family, RhsFamily::DqH01);
        assert!(rep.err_natural >= rep.err_linf_l2);
        assert!(rep.rhs1 >= rep.rhs2);
        // H¹₀ basis: Ritz and H-projection coincide, so φ_r⁰ vanishes
        assert!(rep.phi0_norm < 1e-20);
        assert!((rep.s_r_norm - 1.0).abs() < 1e-6);
        for v in [rep.err_linf_l2, rep.eta_linf_l2, rep.tail, rep.truly_optimal, rep.optimal_i, rep.optimal_ii] {
            assert!(v >= 0.0);
        }
    }
}
