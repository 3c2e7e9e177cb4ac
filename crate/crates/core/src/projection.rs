//! Projections onto the POD space `X^r = span{φ_1, …, φ_r}` and the
//! projection-error quantities built from them.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fem::{FemFunction, FemOperators, InnerProduct};
use crate::linalg::{axpy, dot, symmetric_extremes};
use crate::pod::{PodBasis, SnapshotCollection};

/// Reduced Gram matrices with a larger spectral condition number are
/// reported as ill-conditioned.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProjectionKind {
    /// `P_r`, orthogonal in the basis inner product.
    PodH,
    /// `R_r`, defined by `((u − R_r u)_x, (φ_i)_x) = 0`.
    Ritz,
    /// `Π_r^W`, orthogonal in `W`.
    WOrth(InnerProduct),
}

impl ProjectionKind {
    /// The inner product in which the projection is orthogonal.
    pub fn orthogonal_in(self, basis: &PodBasis) -> InnerProduct {
        match self {
            ProjectionKind::PodH => basis.inner_product(),
            ProjectionKind::Ritz => InnerProduct::H01,
            ProjectionKind::WOrth(w) => w,
        }
    }
}

/// A projection onto `X^r` with its reduced Gram matrix factored once.
pub struct Projector<'a> {
    basis: &'a PodBasis,
    ops: &'a FemOperators,
    r: usize,
    kind: InnerProduct,
    // None when the modes are orthonormal in `kind`
    factor: Option<Cholesky<f64, Dyn>>,
    condition: f64,
}

impl<'a> Projector<'a> {
    pub fn new(
        basis: &'a PodBasis,
        r: usize,
        proj: ProjectionKind,
        ops: &'a FemOperators,
    ) -> Result<Self> {
        basis.check_rank(r)?;
        if basis.dim() != ops.dim() {
            return Err(Error::DimensionMismatch {
                expected: ops.dim(),
                found: basis.dim(),
            });
        }
        let kind = proj.orthogonal_in(basis);
        if kind == basis.inner_product() {
            return Ok(Self {
                basis,
                ops,
                r,
                kind,
                factor: None,
                condition: 1.0,
            });
        }
        let gram = reduced_gram(basis, r, kind, ops);
        let (lo, hi) = symmetric_extremes(&gram);
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if condition > CONDITION_LIMIT {
            log::warn!(
                "reduced {} Gram at r = {r} has condition number {condition:e}",
                kind.name()
            );
        }
        let factor = Cholesky::new(gram).ok_or(Error::SingularSystem {
            what: "reduced Gram matrix",
        })?;
        Ok(Self {
            basis,
            ops,
            r,
            kind,
            factor: Some(factor),
            condition,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Spectral condition number of the reduced Gram (1 when the modes are
    /// orthonormal in the projection's inner product).
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition > CONDITION_LIMIT
    }

    /// Coefficients of the projection in the first `r` modes.
    pub fn coefficients(&self, u: &FemFunction) -> Result<Vec<f64>> {
        if u.len() != self.ops.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ops.dim(),
                found: u.len(),
            });
        }
        let wu = self.ops.weighted(u.as_slice(), self.kind);
        let rhs: Vec<f64> = self.basis.modes()[..self.r]
            .iter()
            .map(|m| dot(&wu, m.as_slice()))
            .collect();
        Ok(match &self.factor {
            None => rhs,
            Some(f) => f.solve(&DVector::from_vec(rhs)).iter().copied().collect(),
        })
    }

    pub fn apply(&self, u: &FemFunction) -> Result<FemFunction> {
        let c = self.coefficients(u)?;
        Ok(combine(self.basis, &c))
    }
}

/// `Σ_i c_i φ_i` over the first `c.len()` modes.
pub fn combine(basis: &PodBasis, c: &[f64]) -> FemFunction {
    let mut out = vec![0.0; basis.dim()];
    for (ci, m) in c.iter().zip(basis.modes()) {
        axpy(*ci, m.as_slice(), &mut out);
    }
    FemFunction::from_vec(out)
}

/// `G_ij = (φ_j, φ_i)_W` for `i, j < r`.
pub fn reduced_gram(basis: &PodBasis, r: usize, kind: InnerProduct, ops: &FemOperators) -> DMatrix<f64> {
    let weighted: Vec<Vec<f64>> = basis.modes()[..r]
        .iter()
        .map(|m| ops.weighted(m.as_slice(), kind))
        .collect();
    let mut g = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let v = dot(&weighted[i], basis.mode(j).as_slice());
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

pub fn pod_project(u: &FemFunction, basis: &PodBasis, r: usize, ops: &FemOperators) -> Result<FemFunction> {
    basis.project(u, r, ops)
}

pub fn ritz_project(u: &FemFunction, basis: &PodBasis, r: usize, ops: &FemOperators) -> Result<FemFunction> {
    Projector::new(basis, r, ProjectionKind::Ritz, ops)?.apply(u)
}

pub fn w_orth_project(
    u: &FemFunction,
    basis: &PodBasis,
    r: usize,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<FemFunction> {
    Projector::new(basis, r, ProjectionKind::WOrth(w), ops)?.apply(u)
}

/// The modes orthonormalized in an inner product `V`, keeping
/// `span{q_1..q_r} = X^r` for every `r`. Projection residuals for all `r`
/// then follow from one sweep per vector.
#[derive(Debug, Clone)]
pub struct NestedProjection {
    kind: InnerProduct,
    q: Vec<Vec<f64>>,
    wq: Vec<Vec<f64>>,
}

impl NestedProjection {
    /// Orthonormalizes the modes in `proj`'s inner product (modified
    /// Gram–Schmidt, two passes).
    pub fn new(basis: &PodBasis, proj: ProjectionKind, ops: &FemOperators) -> Result<Self> {
        let kind = proj.orthogonal_in(basis);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(basis.d());
        let mut wq: Vec<Vec<f64>> = Vec::with_capacity(basis.d());
        for m in basis.modes() {
            let mut v = m.as_slice().to_vec();
            for _ in 0..2 {
                for (qi, wqi) in q.iter().zip(&wq) {
                    let c = dot(wqi, &v);
                    axpy(-c, qi, &mut v);
                }
            }
            let nrm = ops.norm_sq(&v, kind).sqrt();
            if !(nrm > 0.0) || !nrm.is_finite() {
                return Err(Error::SingularSystem {
                    what: "nested orthonormalization",
                });
            }
            v.iter_mut().for_each(|x| *x /= nrm);
            wq.push(ops.weighted(&v, kind));
            q.push(v);
        }
        Ok(Self { kind, q, wq })
    }

    pub fn d(&self) -> usize {
        self.q.len()
    }

    pub fn kind(&self) -> InnerProduct {
        self.kind
    }

    /// Calls `f(r, v − Q_r v)` for `r = 0..=d`.
    pub fn for_each_residual(&self, v: &[f64], mut f: impl FnMut(usize, &[f64])) {
        let mut e = v.to_vec();
        f(0, &e);
        for (r, (qi, wqi)) in self.q.iter().zip(&self.wq).enumerate() {
            let c = dot(wqi, &e);
            axpy(-c, qi, &mut e);
            f(r + 1, &e);
        }
    }

    /// `(‖v − Q_r v‖²_{L²}, ‖(v − Q_r v)_x‖²_{L²})` for `r = 0..=d`.
    pub fn residual_norms(&self, v: &[f64], ops: &FemOperators) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.d() + 1);
        self.for_each_residual(v, |_, e| {
            out.push((ops.norm_sq(e, InnerProduct::L2), ops.norm_sq(e, InnerProduct::H01)));
        });
        out
    }
}

/// Squared Ritz deflation norms `‖φ_i − R_r φ_i‖²` in L² and H¹₀ for every
/// mode `i` and every `r`.
#[derive(Debug, Clone)]
pub struct DeflationTable {
    d: usize,
    // row i, column r = 0..=d
    l2: Vec<f64>,
    h01: Vec<f64>,
}

impl DeflationTable {
    pub fn new(basis: &PodBasis, proj: ProjectionKind, ops: &FemOperators) -> Result<Self> {
        let nested = NestedProjection::new(basis, proj, ops)?;
        let d = basis.d();
        let mut l2 = Vec::with_capacity(d * (d + 1));
        let mut h01 = Vec::with_capacity(d * (d + 1));
        for m in basis.modes() {
            for (a, b) in nested.residual_norms(m.as_slice(), ops) {
                l2.push(a);
                h01.push(b);
            }
        }
        Ok(Self { d, l2, h01 })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `‖φ_i − Q_r φ_i‖²_W` with `i` zero-based.
    pub fn get(&self, i: usize, r: usize, w: InnerProduct) -> f64 {
        let idx = i * (self.d + 1) + r;
        match w {
            InnerProduct::L2 => self.l2[idx],
            InnerProduct::H01 => self.h01[idx],
        }
    }

    /// `Σ_{i>r} λ_i ‖φ_i − Q_r φ_i‖²_W`, summed from the smallest term up.
    pub fn weighted_tail(&self, eigenvalues: &[f64], r: usize, w: InnerProduct) -> f64 {
        (r..self.d)
            .rev()
            .fold(0.0, |acc, i| acc + eigenvalues[i] * self.get(i, r, w))
    }
}

/// `(‖φ_i − R_r φ_i‖_{L²}, ‖(φ_i − R_r φ_i)_x‖_{L²})` for `i = r+1..=d`.
pub fn ritz_deflation_norms(basis: &PodBasis, r: usize, ops: &FemOperators) -> Result<Vec<(f64, f64)>> {
    if r > basis.d() {
        return Err(Error::RankOutOfRange { r, d: basis.d() });
    }
    let nested = NestedProjection::new(basis, ProjectionKind::Ritz, ops)?;
    Ok(basis.modes()[r..]
        .iter()
        .map(|m| {
            let (a, b) = nested.residual_norms(m.as_slice(), ops)[r];
            (a.sqrt(), b.sqrt())
        })
        .collect())
}

/// `lhs = (1/M) Σ_y ‖y − Q y‖²_W` over the collection and
/// `rhs = Σ_{i>r} λ_i ‖φ_i − Q φ_i‖²_W`.
pub fn projection_error_tail_identity(
    collection: &SnapshotCollection,
    basis: &PodBasis,
    r: usize,
    proj: ProjectionKind,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<(f64, f64)> {
    if r > basis.d() {
        return Err(Error::RankOutOfRange { r, d: basis.d() });
    }
    Ok(tail_identity_profile(collection, basis, proj, w, ops)?[r])
}

/// [`projection_error_tail_identity`] for every `r = 0..=d` at once.
pub fn tail_identity_profile(
    collection: &SnapshotCollection,
    basis: &PodBasis,
    proj: ProjectionKind,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<Vec<(f64, f64)>> {
    check_collection(collection, basis)?;
    let nested = NestedProjection::new(basis, proj, ops)?;
    let d = basis.d();
    let mut lhs = vec![0.0; d + 1];
    for y in collection.members() {
        nested.for_each_residual(y.as_slice(), |r, e| lhs[r] += ops.norm_sq(e, w));
    }
    let inv_m = 1.0 / collection.weight() as f64;
    let table = DeflationTable::new(basis, proj, ops)?;
    Ok((0..=d)
        .map(|r| (lhs[r] * inv_m, table.weighted_tail(basis.eigenvalues(), r, w)))
        .collect())
}

fn check_collection(collection: &SnapshotCollection, basis: &PodBasis) -> Result<()> {
    if collection.weight() != basis.weight() || collection.use_dq() != basis.use_dq() {
        return Err(Error::DimensionMismatch {
            expected: basis.weight(),
            found: collection.weight(),
        });
    }
    Ok(())
}

/// `max_k ‖u^k − Q_r u^k‖²_W` for every `r = 0..=d`.
pub fn max_projection_error_profile(
    snapshots: &[FemFunction],
    basis: &PodBasis,
    proj: ProjectionKind,
    w: InnerProduct,
    ops: &FemOperators,
) -> Result<Vec<f64>> {
    let nested = NestedProjection::new(basis, proj, ops)?;
    let mut out = vec![0.0_f64; basis.d() + 1];
    for u in snapshots {
        nested.for_each_residual(u.as_slice(), |r, e| {
            out[r] = out[r].max(ops.norm_sq(e, w));
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Mesh1D;
    use crate::fom::{solve_fom, step_initial_condition, FomConfig};
    use crate::pod::{build_dq_collection, compute_pod, PodConfig, NUMERICAL_RANK_CUTOFF};

    struct Data {
        ops: FemOperators,
        coll: SnapshotCollection,
        basis: PodBasis,
    }

    fn data(kind: InnerProduct, use_dq: bool) -> Data {
        data_with_cutoff(kind, use_dq, 1e-12)
    }

    fn data_with_cutoff(kind: InnerProduct, use_dq: bool, cutoff: f64) -> Data {
        let mesh = Mesh1D::uniform(32).unwrap();
        let ops = FemOperators::assemble(&mesh);
        let mut cfg = FomConfig::burgers_step();
        cfg.t_final = 0.05;
        let snaps = solve_fom(&cfg, &ops, &step_initial_condition(&mesh)).unwrap();
        let coll = build_dq_collection(&snaps, use_dq).unwrap();
        let mut pc = PodConfig::new(kind, use_dq);
        pc.eigenvalue_cutoff = cutoff;
        let basis = compute_pod(&coll, &pc, &ops).unwrap();
        Data { ops, coll, basis }
    }

    fn close(a: &FemFunction, b: &FemFunction, tol: f64) -> bool {
        a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn ritz_fixes_the_subspace() {
        let Data { ops, basis, .. } = data(InnerProduct::L2, true);
        let u = combine(&basis, &[0.5, -1.0, 2.0]);
        let p = ritz_project(&u, &basis, 5, &ops).unwrap();
        assert!(close(&p, &u, 1e-11));
    }

    #[test]
    fn ritz_kills_higher_h01_modes() {
        let Data { ops, basis, .. } = data(InnerProduct::H01, true);
        let p = ritz_project(basis.mode(7), &basis, 4, &ops).unwrap();
        assert!(p.max_abs() < 1e-10);
    }

    #[test]
    fn ritz_residual_is_h01_orthogonal() {
        let Data { ops, basis, .. } = data(InnerProduct::L2, true);
        let u = FemFunction::interpolate(ops.mesh(), |x| (7.0 * x).sin() * x);
        let e = u.sub(&ritz_project(&u, &basis, 6, &ops).unwrap());
        let scale = ops.norm_sq(u.as_slice(), InnerProduct::H01).sqrt();
        for m in &basis.modes()[..6] {
            let v = ops.inner_product(&e, m, InnerProduct::H01).unwrap();
            assert!(v.abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn w_orth_in_basis_product_is_pod_projection() {
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            let Data { ops, basis, coll } = data(kind, false);
            let u = &coll.members()[3];
            let a = w_orth_project(u, &basis, 6, kind, &ops).unwrap();
            let b = pod_project(u, &basis, 6, &ops).unwrap();
            assert!(close(&a, &b, 1e-12));
        }
    }

    #[test]
    fn zero_projects_to_zero() {
        let Data { ops, basis, .. } = data(InnerProduct::L2, false);
        let z = FemFunction::zeros(ops.dim());
        for p in [
            ProjectionKind::PodH,
            ProjectionKind::Ritz,
            ProjectionKind::WOrth(InnerProduct::H01),
        ] {
            let v = Projector::new(&basis, 4, p, &ops).unwrap().apply(&z).unwrap();
            assert_eq!(v.max_abs(), 0.0);
        }
    }

    #[test]
    fn projections_are_idempotent() {
        let Data { ops, basis, coll } = data(InnerProduct::L2, true);
        for p in [
            ProjectionKind::PodH,
            ProjectionKind::Ritz,
            ProjectionKind::WOrth(InnerProduct::H01),
        ] {
            let q = Projector::new(&basis, 5, p, &ops).unwrap();
            let once = q.apply(&coll.members()[10]).unwrap();
            let twice = q.apply(&once).unwrap();
            assert!(close(&once, &twice, 1e-12 * (1.0 + once.max_abs())), "{p:?}");
        }
    }

    #[test]
    fn rank_is_checked() {
        let Data { ops, basis, .. } = data(InnerProduct::L2, false);
        let u = basis.mode(0).clone();
        assert!(ritz_project(&u, &basis, 0, &ops).is_err());
        assert!(ritz_project(&u, &basis, basis.d() + 1, &ops).is_err());
        assert!(ritz_deflation_norms(&basis, basis.d() + 1, &ops).is_err());
        assert!(ritz_deflation_norms(&basis, basis.d(), &ops).unwrap().is_empty());
    }

    #[test]
    fn nested_residuals_match_direct_projectors() {
        let Data { ops, basis, coll } = data(InnerProduct::L2, true);
        let u = &coll.members()[coll.len() - 1];
        for p in [ProjectionKind::PodH, ProjectionKind::Ritz] {
            let nested = NestedProjection::new(&basis, p, &ops).unwrap();
            let profile = nested.residual_norms(u.as_slice(), &ops);
            for r in [1, 3, 8, basis.d()] {
                let e = u.sub(&Projector::new(&basis, r, p, &ops).unwrap().apply(u).unwrap());
                let direct = ops.norm_sq(e.as_slice(), InnerProduct::H01);
                let scale = ops.norm_sq(u.as_slice(), InnerProduct::H01);
                assert!((profile[r].1 - direct).abs() < 1e-9 * scale, "{p:?} r={r}");
            }
        }
    }

    #[test]
    fn h01_basis_deflation_norms() {
        let Data { ops, basis, .. } = data(InnerProduct::H01, true);
        for r in [1, 5, basis.d() - 1] {
            let norms = ritz_deflation_norms(&basis, r, &ops).unwrap();
            assert_eq!(norms.len(), basis.d() - r);
            for (k, (l2, h1)) in norms.into_iter().enumerate() {
                let phi = basis.mode(r + k);
                let phi_l2 = ops.norm_sq(phi.as_slice(), InnerProduct::L2).sqrt();
                assert!((h1 - 1.0).abs() < 1e-8);
                assert!((l2 - phi_l2).abs() < 1e-10);
            }
        }
    }

    // relative gap where the tail is resolvable, absolute gap everywhere
    fn check_identity(prof: &[(f64, f64)], rel: f64) {
        let energy = prof[0].0;
        for (r, &(lhs, rhs)) in prof.iter().enumerate() {
            let gap = (lhs - rhs).abs();
            assert!(gap <= 1e-13 * energy, "r={r} {lhs:e} {rhs:e}");
            if rhs.max(lhs) >= 1e-16 * energy {
                assert!(gap <= rel * rhs.max(lhs), "r={r} {lhs:e} {rhs:e}");
            }
        }
    }

    #[test]
    fn eigenvalue_tail_identity() {
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            for use_dq in [false, true] {
                let Data { ops, basis, coll } = data_with_cutoff(kind, use_dq, NUMERICAL_RANK_CUTOFF);
                let prof = tail_identity_profile(&coll, &basis, ProjectionKind::PodH, kind, &ops).unwrap();
                for (r, (_, rhs)) in prof.iter().enumerate() {
                    assert!((rhs - basis.tail_sum(r)).abs() <= 1e-12 * basis.tail_sum(0));
                }
                check_identity(&prof, 1e-7);
            }
        }
    }

    #[test]
    fn ritz_tail_identity() {
        for kind in [InnerProduct::L2, InnerProduct::H01] {
            let Data { ops, basis, coll } = data_with_cutoff(kind, true, NUMERICAL_RANK_CUTOFF);
            for w in [InnerProduct::L2, InnerProduct::H01] {
                let prof = tail_identity_profile(&coll, &basis, ProjectionKind::Ritz, w, &ops).unwrap();
                check_identity(&prof, 1e-6);
            }
        }
    }

    #[test]
    fn truncated_spectrum_misses_discarded_energy() {
        // with the default cutoff the identity only holds up to the
        // discarded eigenvalues
        let Data { ops, basis, coll } = data(InnerProduct::H01, true);
        let (lhs, rhs) =
            projection_error_tail_identity(&coll, &basis, basis.d(), ProjectionKind::Ritz, InnerProduct::H01, &ops)
                .unwrap();
        assert_eq!(rhs, 0.0);
        assert!(lhs < 1e-10 * basis.eigenvalues()[0]);
    }

    #[test]
    fn w_orth_is_minimal() {
        let Data { ops, basis, coll } = data(InnerProduct::L2, true);
        for w in [InnerProduct::L2, InnerProduct::H01] {
            let best = max_projection_error_profile(coll.members(), &basis, ProjectionKind::WOrth(w), w, &ops).unwrap();
            for other in [ProjectionKind::PodH, ProjectionKind::Ritz] {
                let q = max_projection_error_profile(coll.members(), &basis, other, w, &ops).unwrap();
                for r in 0..=basis.d() {
                    assert!(best[r] <= q[r] * (1.0 + 1e-9) + 1e-300, "{w:?} {other:?} r={r}");
                }
            }
        }
    }

    #[test]
    fn ritz_differs_from_pod_for_l2_basis() {
        let Data { ops, basis, coll } = data(InnerProduct::L2, false);
        let u = &coll.members()[20];
        let a = ritz_project(u, &basis, 2, &ops).unwrap();
        let b = pod_project(u, &basis, 2, &ops).unwrap();
        assert!(ops.norm_sq(a.sub(&b).as_slice(), InnerProduct::L2) > 1e-12);
    }
}
