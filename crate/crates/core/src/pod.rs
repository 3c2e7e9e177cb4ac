//! Proper orthogonal decomposition by the method of snapshots, with or
//! without difference quotients appended to the snapshot collection.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen, SVD};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fem::{FemFunction, FemOperators, InnerProduct};
use crate::fom::SnapshotSet;
use crate::linalg::{axpy, dot, BidiagonalCholesky};

/// How the eigenpairs of the snapshot Gram matrix are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EigenRoute {
    /// Symmetric eigensolve of `K_ab = (y_a, y_b)_H / M`.
    GramEigen,
    /// Thin SVD of `Lᵀ Y / √M` where `G = L Lᵀ` is the Gram matrix of the
    /// inner product. Its left singular vectors are the eigenvectors of `K`
    /// and the squared singular values its eigenvalues, without squaring the
    /// condition number.
    FactorSvd,
}

/// Relative eigenvalue cutoff that keeps every direction the data resolves
/// (`σ_i > ε_mach σ_1`), for checks that need the full positive spectrum.
pub const NUMERICAL_RANK_CUTOFF: f64 = f64::EPSILON * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodConfig {
    pub inner_product: InnerProduct,
    pub use_dq: bool,
    /// Eigenvalues `λ_i ≤ ε λ_1` are treated as zero.
    pub eigenvalue_cutoff: f64,
    pub route: EigenRoute,
}

impl PodConfig {
    pub fn new(inner_product: InnerProduct, use_dq: bool) -> Self {
        Self {
            inner_product,
            use_dq,
            eigenvalue_cutoff: 1e-12,
            route: EigenRoute::FactorSvd,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eigenvalue_cutoff > 0.0 && self.eigenvalue_cutoff < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eigenvalue cutoff must lie in (0, 1), got {}",
                self.eigenvalue_cutoff
            )));
        }
        Ok(())
    }
}

/// Snapshots, optionally followed by their difference quotients, together
/// with the normalization weight `M`.
#[derive(Debug, Clone)]
pub struct SnapshotCollection {
    members: Vec<FemFunction>,
    weight: usize,
    use_dq: bool,
}

impl SnapshotCollection {
    pub fn members(&self) -> &[FemFunction] {
        &self.members
    }

    /// `M`: `N + 1` without difference quotients, `2N + 1` with them.
    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn use_dq(&self) -> bool {
        self.use_dq
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Same members in a different order; used to check order invariance.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            members: order.iter().map(|&i| self.members[i].clone()).collect(),
            weight: self.weight,
            use_dq: self.use_dq,
        }
    }
}

/// `{u⁰…uᴺ}` or `{u⁰…uᴺ} ∪ {∂u¹…∂uᴺ}` with `∂uᵏ = (uᵏ − uᵏ⁻¹)/Δt`.
pub fn build_dq_collection(snaps: &SnapshotSet, use_dq: bool) -> Result<SnapshotCollection> {
    let n = snaps.n_steps();
    if n == 0 {
        return Err(Error::EmptyCollection);
    }
    let mut members: Vec<FemFunction> = snaps.snapshots().to_vec();
    if use_dq {
        let inv_dt = 1.0 / snaps.dt();
        members.extend(
            snaps
                .snapshots()
                .windows(2)
                .map(|w| w[1].sub(&w[0]).scaled(inv_dt)),
        );
    }
    let weight = if use_dq { 2 * n + 1 } else { n + 1 };
    Ok(SnapshotCollection {
        members,
        weight,
        use_dq,
    })
}

/// Diagnostics recorded while building a basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodDiagnostics {
    /// Smallest eigenvalue the solver produced, before the cutoff. Negative
    /// values can only come from rounding in the Gram route.
    pub min_eigenvalue: f64,
    /// Eigenvalues dropped by the cutoff (among those computed).
    pub discarded: usize,
    /// `max |(φ_i, φ_j)_H − δ_ij|` of the reconstructed modes.
    pub reconstruction_defect: f64,
    pub reorthonormalized: bool,
}

/// Orthonormal POD modes and their eigenvalues.
#[derive(Debug, Clone)]
pub struct PodBasis {
    modes: Vec<FemFunction>,
    eigenvalues: Vec<f64>,
    weight: usize,
    inner_product: InnerProduct,
    use_dq: bool,
    cutoff: f64,
    diagnostics: PodDiagnostics,
}

impl PodBasis {
    /// Rebuilds a basis from stored parts (e.g. a basis file). Modes must be
    /// orthonormal in `inner_product` and eigenvalues sorted descending.
    pub fn from_parts(
        modes: Vec<FemFunction>,
        eigenvalues: Vec<f64>,
        weight: usize,
        inner_product: InnerProduct,
        use_dq: bool,
        cutoff: f64,
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if modes.len() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                found: eigenvalues.len(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) || eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidConfig(
                "eigenvalues must be positive and sorted descending".into(),
            ));
        }
        let dim = modes[0].len();
        if let Some(bad) = modes.iter().find(|m| m.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(Self {
            modes,
            eigenvalues,
            weight,
            inner_product,
            use_dq,
            cutoff,
            diagnostics: PodDiagnostics {
                min_eigenvalue: f64::NAN,
                discarded: 0,
                reconstruction_defect: f64::NAN,
                reorthonormalized: false,
            },
        })
    }

    pub fn modes(&self) -> &[FemFunction] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &FemFunction {
        &self.modes[i]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `d`, the number of retained (positive) eigenvalues.
    pub fn d(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.modes[0].len()
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn inner_product(&self) -> InnerProduct {
        self.inner_product
    }

    pub fn use_dq(&self) -> bool {
        self.use_dq
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn diagnostics(&self) -> &PodDiagnostics {
        &self.diagnostics
    }

    pub(crate) fn check_rank(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.d() {
            return Err(Error::RankOutOfRange { r, d: self.d() });
        }
        Ok(())
    }

    /// `Σ_{i>r} λ_i`, summed from the smallest term up.
    pub fn tail_sum(&self, r: usize) -> f64 {
        self.eigenvalues
            .iter()
            .skip(r)
            .rev()
            .fold(0.0, |acc, &l| acc + l)
    }

    /// `max_{i,j} |(φ_i, φ_j)_H − δ_ij|`
    pub fn orthonormality_defect(&self, ops: &FemOperators) -> f64 {
        let weighted: Vec<Vec<f64>> = self
            .modes
            .iter()
            .map(|m| ops.weighted(m.as_slice(), self.inner_product))
            .collect();
        let mut worst: f64 = 0.0;
        for (i, wi) in weighted.iter().enumerate() {
            for (j, mj) in self.modes.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(wi, mj.as_slice()) - target).abs());
            }
        }
        worst
    }

    /// `P_r u = Σ_{i≤r} (u, φ_i)_H φ_i`
    pub fn project(&self, u: &FemFunction, r: usize, ops: &FemOperators) -> Result<FemFunction> {
        self.check_rank(r)?;
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        let wu = ops.weighted(u.as_slice(), self.inner_product);
        let mut out = alloc::vec![0.0; u.len()];
        for mode in &self.modes[..r] {
            axpy(dot(&wu, mode.as_slice()), mode.as_slice(), &mut out);
        }
        Ok(FemFunction::from_vec(out))
    }

    /// Copy with every eigenvalue scaled by `1 + rel`. Only meant for
    /// negative controls of the verification suites.
    pub fn with_perturbed_eigenvalues(&self, rel: f64) -> Self {
        let mut out = self.clone();
        out.eigenvalues.iter_mut().for_each(|l| *l *= 1.0 + rel);
        out
    }
}

fn snapshot_matrix(members: &[FemFunction]) -> DMatrix<f64> {
    let n = members[0].len();
    DMatrix::from_fn(n, members.len(), |i, a| members[a][i])
}

/// Method of snapshots: eigenpairs `(λ_i, v_i)` of the weighted Gram matrix,
/// modes `φ_i = Σ_a v_a^{(i)} y_a / √(M λ_i)`, keeping `λ_i > ε λ_1`.
pub fn compute_pod(
    collection: &SnapshotCollection,
    cfg: &PodConfig,
    ops: &FemOperators,
) -> Result<PodBasis> {
    cfg.validate()?;
    if collection.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if collection.use_dq != cfg.use_dq {
        return Err(Error::InvalidConfig(
            "collection and POD configuration disagree on difference quotients".into(),
        ));
    }
    let n = ops.dim();
    if let Some(bad) = collection.members.iter().find(|m| m.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let weight = collection.weight as f64;
    let y = snapshot_matrix(&collection.members);
    let gram = ops.gram(cfg.inner_product);

    // Eigenvalues (unsorted) and a way to build the mode for eigenvalue `i`.
    enum Vectors {
        // eigenvectors of K over the members
        Members(DMatrix<f64>),
        // right singular vectors `v_i`, with `φ_i = L^{-T} v_i`
        Factor(DMatrix<f64>, BidiagonalCholesky),
    }
    let (values, vectors): (Vec<f64>, Vectors) = match cfg.route {
        EigenRoute::GramEigen => {
            let mut gy = DMatrix::<f64>::zeros(n, y.ncols());
            for (a, col) in y.column_iter().enumerate() {
                let w = gram.apply(col.as_slice());
                gy.column_mut(a).copy_from_slice(&w);
            }
            let mut k = y.transpose() * gy / weight;
            k = (&k + k.transpose()) * 0.5;
            let eig = SymmetricEigen::new(k);
            (
                eig.eigenvalues.iter().copied().collect(),
                Vectors::Members(eig.eigenvectors),
            )
        }
        EigenRoute::FactorSvd => {
            let factor = gram.cholesky()?;
            let scale = 1.0 / weight.sqrt();
            // Zᵀ = U Σ Vᵀ with Z = Lᵀ Y / √M; then Y u_i / √(M λ_i) = L^{-T} v_i
            let mut zt = DMatrix::<f64>::zeros(y.ncols(), n);
            for (a, col) in y.column_iter().enumerate() {
                let w = factor.apply_transpose(col.as_slice());
                for (i, v) in w.into_iter().enumerate() {
                    zt[(a, i)] = v * scale;
                }
            }
            let svd = SVD::new(zt, false, true);
            let v_t = svd.v_t.ok_or(Error::SingularSystem { what: "snapshot SVD" })?;
            (
                svd.singular_values.iter().map(|s| s * s).collect(),
                Vectors::Factor(v_t, factor),
            )
        }
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let lambda_max = values[order[0]];
    let min_eigenvalue = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lambda_max > 0.0) {
        return Err(Error::EmptyBasis);
    }
    let threshold = cfg.eigenvalue_cutoff * lambda_max;
    let kept: Vec<usize> = order.iter().copied().filter(|&i| values[i] > threshold).collect();
    let discarded = values.len() - kept.len();

    let mut modes: Vec<FemFunction> = match vectors {
        Vectors::Members(v) => {
            let mut selected = DMatrix::<f64>::zeros(v.nrows(), kept.len());
            for (c, &i) in kept.iter().enumerate() {
                let s = 1.0 / (weight * values[i]).sqrt();
                selected.set_column(c, &(v.column(i) * s));
            }
            (&y * selected)
                .column_iter()
                .map(|c| FemFunction::from_vec(c.iter().copied().collect()))
                .collect()
        }
        Vectors::Factor(v_t, factor) => kept
            .iter()
            .map(|&i| {
                let mut phi: Vec<f64> = v_t.row(i).iter().copied().collect();
                factor.solve_transpose_in_place(&mut phi);
                FemFunction::from_vec(phi)
            })
            .collect(),
    };
    let eigenvalues: Vec<f64> = kept.iter().map(|&i| values[i]).collect();

    let mut basis = PodBasis {
        modes: Vec::new(),
        eigenvalues,
        weight: collection.weight,
        inner_product: cfg.inner_product,
        use_dq: cfg.use_dq,
        cutoff: cfg.eigenvalue_cutoff,
        diagnostics: PodDiagnostics {
            min_eigenvalue,
            discarded,
            reconstruction_defect: 0.0,
            reorthonormalized: false,
        },
    };
    core::mem::swap(&mut basis.modes, &mut modes);
    let defect = basis.orthonormality_defect(ops);
    basis.diagnostics.reconstruction_defect = defect;
    if defect > 1e-10 {
        gram_schmidt(&mut basis.modes, ops, cfg.inner_product);
        basis.diagnostics.reorthonormalized = true;
        log::debug!(
            "POD modes re-orthonormalized (defect {defect:e}, d = {})",
            basis.d()
        );
    }
    Ok(basis)
}

/// Modified Gram–Schmidt in the given inner product, in place.
pub(crate) fn gram_schmidt(vectors: &mut [FemFunction], ops: &FemOperators, kind: InnerProduct) {
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = rest[0].as_mut_slice();
        for q in done.iter() {
            let wq = ops.weighted(q.as_slice(), kind);
            let c = dot(&wq, v);
            axpy(-c, q.as_slice(), v);
        }
        let nrm = ops.norm_sq(v, kind).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Mesh1D;
    use crate::fom::{solve_fom, step_initial_condition, FomConfig};
    use alloc::vec;

    fn constant_snapshots(mesh: &Mesh1D, n_steps: usize) -> (SnapshotSet, FemFunction) {
        let y = FemFunction::interpolate(mesh, |x| x * (1.0 - x) * (1.0 + x));
        (
            SnapshotSet::new(0.1, vec![y.clone(); n_steps + 1]).unwrap(),
            y,
        )
    }

    fn step_data(n_cells: usize, t_final: f64) -> (FemOperators, SnapshotSet) {
        let mesh = Mesh1D::uniform(n_cells).unwrap();
        let ops = FemOperators::assemble(&mesh);
        let mut cfg = FomConfig::burgers_step();
        cfg.t_final = t_final;
        let snaps = solve_fom(&cfg, &ops, &step_initial_condition(&mesh)).unwrap();
        (ops, snaps)
    }

    #[test]
    fn dq_members_of_constant_data_vanish() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let (snaps, _) = constant_snapshots(&mesh, 2);
        let c = build_dq_collection(&snaps, true).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c.weight(), 5);
        for m in &c.members()[3..] {
            assert!(m.as_slice().iter().all(|&v| v == 0.0));
        }
        let c = build_dq_collection(&snaps, false).unwrap();
        assert_eq!((c.len(), c.weight()), (3, 3));
    }

    #[test]
    fn dq_members_of_linear_data_equal_the_slope() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let y = FemFunction::interpolate(&mesh, |x| (x - 0.3).abs());
        let dt = 0.25;
        let snaps = SnapshotSet::new(dt, (0..5).map(|n| y.scaled(n as f64 * dt)).collect()).unwrap();
        let c = build_dq_collection(&snaps, true).unwrap();
        for m in &c.members()[5..] {
            for (a, b) in m.as_slice().iter().zip(y.as_slice()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_snapshot_has_no_dq() {
        let snaps = SnapshotSet::new(0.1, vec![FemFunction::zeros(3)]).unwrap();
        assert!(matches!(build_dq_collection(&snaps, true), Err(Error::EmptyCollection)));
    }

    #[test]
    fn rank_one_data() {
        let mesh = Mesh1D::uniform(16).unwrap();
        let ops = FemOperators::assemble(&mesh);
        let n_steps = 4;
        let (snaps, y) = constant_snapshots(&mesh, n_steps);
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            let norm_sq = ops.inner_product(&y, &y, kind).unwrap();
            for route in [EigenRoute::GramEigen, EigenRoute::FactorSvd] {
                for use_dq in [false, true] {
                    let mut cfg = PodConfig::new(kind, use_dq);
                    cfg.route = route;
                    let coll = build_dq_collection(&snaps, use_dq).unwrap();
                    let basis = compute_pod(&coll, &cfg, &ops).unwrap();
                    assert_eq!(basis.d(), 1, "{kind:?} {route:?} dq={use_dq}");
                    let expected = if use_dq {
                        (n_steps + 1) as f64 / (2 * n_steps + 1) as f64 * norm_sq
                    } else {
                        norm_sq
                    };
                    assert!((basis.eigenvalues()[0] - expected).abs() < 1e-12 * expected);
                    assert!((basis.tail_sum(0) - expected).abs() < 1e-12 * expected);
                    // mode = ± y/‖y‖
                    let phi = basis.mode(0);
                    let sign = phi[3].signum() * y[3].signum();
                    for (a, b) in phi.as_slice().iter().zip(y.as_slice()) {
                        assert!((a - sign * b / norm_sq.sqrt()).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_collection_is_empty_basis() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let ops = FemOperators::assemble(&mesh);
        let snaps = SnapshotSet::new(0.1, vec![FemFunction::zeros(7); 3]).unwrap();
        let coll = build_dq_collection(&snaps, false).unwrap();
        let cfg = PodConfig::new(InnerProduct::L2, false);
        assert!(matches!(compute_pod(&coll, &cfg, &ops), Err(Error::EmptyBasis)));
    }

    #[test]
    fn cutoff_must_be_a_fraction() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let ops = FemOperators::assemble(&mesh);
        let (snaps, _) = constant_snapshots(&mesh, 2);
        let coll = build_dq_collection(&snaps, false).unwrap();
        let mut cfg = PodConfig::new(InnerProduct::L2, false);
        cfg.eigenvalue_cutoff = 1.5;
        assert!(compute_pod(&coll, &cfg, &ops).is_err());
        cfg.eigenvalue_cutoff = 1e-12;
        cfg.use_dq = true;
        assert!(compute_pod(&coll, &cfg, &ops).is_err());
    }

    #[test]
    fn step_data_bases_are_orthonormal_and_sorted() {
        let (ops, snaps) = step_data(32, 0.05);
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            for use_dq in [false, true] {
                let coll = build_dq_collection(&snaps, use_dq).unwrap();
                let basis = compute_pod(&coll, &PodConfig::new(kind, use_dq), &ops).unwrap();
                assert!(basis.orthonormality_defect(&ops) < 1e-8);
                let l = basis.eigenvalues();
                assert!(l.windows(2).all(|w| w[0] >= w[1]));
                assert!(l.iter().all(|&v| v > basis.cutoff() * l[0]));
                assert_eq!(basis.weight(), if use_dq { 101 } else { 51 });
            }
        }
    }

    #[test]
    fn routes_agree_on_leading_eigenvalues() {
        let (ops, snaps) = step_data(32, 0.05);
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            let coll = build_dq_collection(&snaps, true).unwrap();
            let mut cfg = PodConfig::new(kind, true);
            cfg.route = EigenRoute::GramEigen;
            let a = compute_pod(&coll, &cfg, &ops).unwrap();
            cfg.route = EigenRoute::FactorSvd;
            let b = compute_pod(&coll, &cfg, &ops).unwrap();
            let l1 = a.eigenvalues()[0];
            for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()).take(10) {
                assert!((x - y).abs() < 1e-10 * l1);
            }
            // Gram matrix is PSD up to rounding
            assert!(a.diagnostics().min_eigenvalue > -1e-10 * l1);
        }
    }

    #[test]
    fn full_tail_equals_gram_trace() {
        let (ops, snaps) = step_data(24, 0.04);
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            let coll = build_dq_collection(&snaps, true).unwrap();
            let basis = compute_pod(&coll, &PodConfig::new(kind, true), &ops).unwrap();
            let trace: f64 = coll
                .members()
                .iter()
                .map(|y| ops.inner_product(y, y, kind).unwrap())
                .sum::<f64>()
                / coll.weight() as f64;
            assert!((basis.tail_sum(0) - trace).abs() < 1e-8 * trace);
            assert_eq!(basis.tail_sum(basis.d()), 0.0);
        }
    }

    #[test]
    fn projection_basics() {
        let (ops, snaps) = step_data(24, 0.04);
        let coll = build_dq_collection(&snaps, false).unwrap();
        let basis = compute_pod(&coll, &PodConfig::new(InnerProduct::L2, false), &ops).unwrap();
        // φ_1 projects onto itself
        let p = basis.project(basis.mode(0), 3, &ops).unwrap();
        for (a, b) in p.as_slice().iter().zip(basis.mode(0).as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        // a higher mode is orthogonal to X^3
        let p = basis.project(basis.mode(5), 3, &ops).unwrap();
        assert!(p.max_abs() < 1e-10);
        assert!(matches!(
            basis.project(basis.mode(0), 0, &ops),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(basis.project(basis.mode(0), basis.d() + 1, &ops).is_err());
    }

    #[test]
    fn full_basis_reproduces_collection() {
        let (ops, snaps) = step_data(24, 0.04);
        let coll = build_dq_collection(&snaps, true).unwrap();
        let basis = compute_pod(&coll, &PodConfig::new(InnerProduct::H01, true), &ops).unwrap();
        let d = basis.d();
        let total: f64 = coll
            .members()
            .iter()
            .map(|y| {
                let e = y.sub(&basis.project(y, d, &ops).unwrap());
                ops.inner_product(&e, &e, InnerProduct::H01).unwrap()
            })
            .sum::<f64>()
            / coll.weight() as f64;
        assert!(total <= 1e-10 * basis.eigenvalues()[0], "{total:e}");
    }

    #[test]
    fn member_order_does_not_change_eigenvalues() {
        let (ops, snaps) = step_data(24, 0.03);
        let coll = build_dq_collection(&snaps, true).unwrap();
        let cfg = PodConfig::new(InnerProduct::L2, true);
        let a = compute_pod(&coll, &cfg, &ops).unwrap();
        let order: Vec<usize> = (0..coll.len()).rev().collect();
        let b = compute_pod(&coll.permuted(&order), &cfg, &ops).unwrap();
        assert_eq!(a.d(), b.d());
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((x - y).abs() <= 1e-10 * x.max(1e-10 * a.eigenvalues()[0]));
        }
    }
}
