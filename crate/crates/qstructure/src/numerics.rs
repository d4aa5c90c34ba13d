//! Tolerance policy and subspace primitives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::{C64, CMat};

/// Numerical thresholds used by every decision in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative spectral-norm threshold for equalities.
    pub eq_tol: f64,
    /// Relative singular-value cutoff for rank and kernel decisions.
    pub rank_tol: f64,
    /// Eigenvalues with `|λ| > 1 - peripheral_band` are peripheral.
    pub peripheral_band: f64,
    /// Eigenvalue threshold used when rounding near-projections.
    pub projector_round: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eq_tol: 1e-8, rank_tol: 1e-9, peripheral_band: 1e-7, projector_round: 0.5 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.eq_tol, self.rank_tol, self.peripheral_band, self.projector_round]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("tolerances must be positive: {self:?}")))
        }
    }

    /// Copy with `eq_tol` replaced and the other thresholds scaled by the same factor.
    pub fn scaled(&self, eq_tol: f64) -> Tolerances {
        let f = eq_tol / self.eq_tol;
        Tolerances {
            eq_tol,
            rank_tol: self.rank_tol * f,
            peripheral_band: self.peripheral_band * f,
            projector_round: self.projector_round,
        }
    }
}

/// A subspace of `D × D` matrices with a Hilbert-Schmidt orthonormal basis.
#[derive(Debug, Clone)]
pub struct MatrixSubspace {
    pub ambient_dim: usize,
    pub basis: Vec<CMat>,
}

impl MatrixSubspace {
    pub fn zero(d: usize) -> Self {
        MatrixSubspace { ambient_dim: d, basis: Vec::new() }
    }

    /// All of `B(C^d)`, spanned by matrix units.
    pub fn full(d: usize) -> Self {
        let mut basis = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                basis.push(linalg::unit(d, d, i, j));
            }
        }
        MatrixSubspace { ambient_dim: d, basis }
    }

    /// Subspace from a `D² × k` matrix with orthonormal columns.
    pub fn from_columns(d: usize, cols: &CMat) -> Self {
        let basis = (0..cols.ncols())
            .map(|k| linalg::unvec(cols.column(k).as_slice(), d))
            .collect();
        MatrixSubspace { ambient_dim: d, basis }
    }

    /// Orthonormal basis of the span of arbitrary matrices.
    pub fn span_of(d: usize, mats: &[CMat], rank_tol: f64) -> Self {
        if mats.is_empty() {
            return Self::zero(d);
        }
        let mut m = CMat::zeros(d * d, mats.len());
        for (k, a) in mats.iter().enumerate() {
            m.column_mut(k).copy_from_slice(a.as_slice());
        }
        Self::from_columns(d, &linalg::range_basis(&m, rank_tol))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Basis as columns of a `D² × k` matrix.
    pub fn columns(&self) -> CMat {
        let d2 = self.ambient_dim * self.ambient_dim;
        let mut m = CMat::zeros(d2, self.basis.len());
        for (k, a) in self.basis.iter().enumerate() {
            m.column_mut(k).copy_from_slice(a.as_slice());
        }
        m
    }

    /// HS-orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.basis {
            out += b * hs_inner_unchecked(b, x);
        }
        out
    }

    /// Relative distance `‖x - P x‖ / ‖x‖` of `x` from the subspace.
    pub fn residual(&self, x: &CMat) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        (x - self.project(x)).norm() / n
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.columns();
        let gram = g.adjoint() * &g;
        (gram - CMat::identity(self.dim(), self.dim())).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Orthogonal complement inside `B(C^D)`.
    pub fn complement(&self, rank_tol: f64) -> MatrixSubspace {
        let d = self.ambient_dim;
        if self.is_empty() {
            return MatrixSubspace::full(d);
        }
        let ker = linalg::null_space(&self.columns().adjoint(), rank_tol);
        MatrixSubspace::from_columns(d, &ker)
    }

    /// Subspace with every basis element replaced by `f(b)`, re-orthonormalized.
    pub fn map(&self, f: impl Fn(&CMat) -> CMat, rank_tol: f64) -> MatrixSubspace {
        let imgs: Vec<CMat> = self.basis.iter().map(f).collect();
        MatrixSubspace::span_of(self.ambient_dim, &imgs, rank_tol)
    }
}

pub fn hs_inner(a: &CMat, b: &CMat) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kernel of a linear map on vectorized `D × D` matrices, given as a
/// `rows × D²` matrix. Singular values at most `rank_tol · ‖L‖₂` count as zero.
pub fn kernel_basis(l: &CMat, d: usize, tol: &Tolerances) -> Result<MatrixSubspace> {
    if l.ncols() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, found: l.ncols() });
    }
    let scale = linalg::spectral_norm(l);
    let ker = linalg::null_space(l, tol.rank_tol * scale);
    Ok(MatrixSubspace::from_columns(d, &ker))
}

/// Shrinks an orthonormal column basis `b` to the kernel of a map, given the
/// images `image = L b`. Singular values of the image at most `cutoff` are
/// treated as zero. The result is again orthonormal.
pub fn restrict_kernel(b: &CMat, image: &CMat, cutoff: f64) -> CMat {
    if b.ncols() == 0 {
        return b.clone();
    }
    let y = linalg::null_space(image, cutoff);
    b * y
}

/// Orthogonal projection with eigenvalues rounded to {0, 1}.
pub fn round_projector(p: &CMat, tol: &Tolerances) -> Result<CMat> {
    let scale = p.norm().max(1.0);
    let herm_defect = (p - p.adjoint()).norm() / scale;
    if herm_defect > tol.eq_tol {
        return Err(Error::NotNearProjection { deviation: herm_defect });
    }
    let band = 10.0 * tol.eq_tol;
    let (vals, vecs) = linalg::eigh(p);
    let mut worst: f64 = 0.0;
    let mut keep = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        let dev = v.abs().min((v - 1.0).abs());
        worst = worst.max(dev);
        if v >= tol.projector_round {
            keep.push(k);
        }
    }
    if worst > band {
        return Err(Error::NotNearProjection { deviation: worst });
    }
    let mut q = CMat::zeros(p.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        q.set_column(j, &vecs.column(k));
    }
    Ok(&q * q.adjoint())
}

/// `‖Π₁ − Π₂‖₂` for the HS-orthogonal projectors onto two subspaces.
pub fn subspace_distance(s1: &MatrixSubspace, s2: &MatrixSubspace) -> Result<f64> {
    if s1.ambient_dim != s2.ambient_dim {
        return Err(Error::DimensionMismatch { expected: s1.ambient_dim, found: s2.ambient_dim });
    }
    match (s1.is_empty(), s2.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(1.0),
        _ => {}
    }
    let b1 = s1.columns();
    let b2 = s2.columns();
    // max(‖(I−Π₁)Π₂‖, ‖(I−Π₂)Π₁‖) equals ‖Π₁ − Π₂‖ and stays accurate for tiny angles
    let r12 = &b2 - &b1 * (b1.adjoint() * &b2);
    let r21 = &b1 - &b2 * (b2.adjoint() * &b1);
    let d = linalg::spectral_norm(&r12).max(linalg::spectral_norm(&r21));
    Ok(d.min(1.0))
}

/// Incrementally grown orthonormal basis of a subspace of `B(C^D)`.
#[derive(Debug, Clone)]
pub struct SpanBuilder {
    shape: (usize, usize),
    cols: CMat,
    cutoff: f64,
    scale: f64,
}

impl SpanBuilder {
    /// Candidates are normalized before use, so `cutoff` is an absolute
    /// threshold on the residual of a unit vector. Candidates shorter than
    /// `cutoff` times the longest candidate seen so far are discarded.
    pub fn new(d: usize, cutoff: f64) -> Self {
        Self::rectangular(d, d, cutoff)
    }

    /// Span builder for `rows × cols` matrices.
    pub fn rectangular(rows: usize, cols: usize, cutoff: f64) -> Self {
        SpanBuilder { shape: (rows, cols), cols: CMat::zeros(rows * cols, 0), cutoff, scale: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.cols.ncols()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.shape.0 * self.shape.1
    }

    /// Only meaningful for square shapes.
    pub fn subspace(&self) -> MatrixSubspace {
        MatrixSubspace::from_columns(self.shape.0, &self.cols)
    }

    pub fn basis(&self) -> Vec<CMat> {
        (0..self.dim()).map(|j| self.unvec(j, &self.cols)).collect()
    }

    fn unvec(&self, j: usize, m: &CMat) -> CMat {
        CMat::from_column_slice(self.shape.0, self.shape.1, m.column(j).as_slice())
    }

    /// Adds the span of `cands`; returns the newly added orthonormal directions.
    pub fn extend(&mut self, cands: &[CMat]) -> Vec<CMat> {
        let d2 = self.shape.0 * self.shape.1;
        let mut added = Vec::new();
        for chunk in cands.chunks(d2.max(1)) {
            if self.is_full() {
                break;
            }
            // candidates that are zero up to rounding would turn into noise once normalized
            self.scale = chunk.iter().map(|m| m.norm()).fold(self.scale, f64::max);
            let floor = self.cutoff * self.scale;
            let usable: Vec<&CMat> = chunk.iter().filter(|m| m.norm() > floor).collect();
            if usable.is_empty() {
                continue;
            }
            let mut c = CMat::zeros(d2, usable.len());
            for (k, m) in usable.iter().enumerate() {
                let n = m.norm();
                for (dst, src) in c.column_mut(k).iter_mut().zip(m.iter()) {
                    *dst = src / n;
                }
            }
            for _ in 0..2 {
                let proj = &self.cols * (self.cols.adjoint() * &c);
                c -= proj;
            }
            let (u, s, _) = linalg::svd(&c);
            let keep = s.iter().take_while(|&&x| x > self.cutoff).count();
            if keep == 0 {
                continue;
            }
            let mut new = u.columns(0, keep).into_owned();
            let proj = &self.cols * (self.cols.adjoint() * &new);
            new -= proj;
            let new = new.qr().q();
            let k0 = self.cols.ncols();
            let mut grown = CMat::zeros(d2, k0 + keep);
            grown.columns_mut(0, k0).copy_from(&self.cols);
            grown.columns_mut(k0, keep).copy_from(&new);
            self.cols = grown;
            for j in 0..keep {
                added.push(self.unvec(j, &new));
            }
        }
        added
    }
}

/// Canonical order on projections: descending rank, then the diagonal
/// compared lexicographically on an 8-digit grid, then all entries.
pub fn projection_order(p: &CMat, q: &CMat) -> std::cmp::Ordering {
    let rank = |m: &CMat| m.trace().re.round() as i64;
    let grid = |x: f64| (x * 1e8).round() as i64;
    rank(q)
        .cmp(&rank(p))
        .then_with(|| {
            let dp: Vec<i64> = (0..p.nrows()).map(|i| grid(p[(i, i)].re)).collect();
            let dq: Vec<i64> = (0..q.nrows()).map(|i| grid(q[(i, i)].re)).collect();
            dp.cmp(&dq)
        })
        .then_with(|| {
            let ep: Vec<(i64, i64)> = p.iter().map(|z| (grid(z.re), grid(z.im))).collect();
            let eq: Vec<(i64, i64)> = q.iter().map(|z| (grid(z.re), grid(z.im))).collect();
            ep.cmp(&eq)
        })
}

/// Relative spectral-norm distance `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂, 1)`.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let scale = linalg::spectral_norm(a).max(linalg::spectral_norm(b)).max(1.0);
    linalg::spectral_norm(&(a - b)) / scale
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, kron};

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    fn pauli_z() -> CMat {
        CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    fn diag(xs: &[f64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.))))
    }

    #[test]
    fn hs_inner_examples() {
        let i2 = identity(2);
        assert_eq!(hs_inner(&i2, &i2).unwrap(), c(2.0, 0.0));
        assert_eq!(hs_inner(&i2, &pauli_x()).unwrap(), c(0.0, 0.0));
        let a = diag(&[1.0, 2.0]);
        assert_eq!(hs_inner(&a, &a).unwrap(), c(5.0, 0.0));
        assert!(matches!(hs_inner(&i2, &identity(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kernel_basis_examples() {
        let tol = Tolerances::default();
        assert_eq!(kernel_basis(&CMat::zeros(4, 4), 2, &tol).unwrap().dim(), 4);
        assert_eq!(kernel_basis(&identity(4), 2, &tol).unwrap().dim(), 0);
        let s = diag(&[1.0, 2.0]);
        let l = kron(&identity(2), &s) - kron(&s.transpose(), &identity(2));
        let k = kernel_basis(&l, 2, &tol).unwrap();
        assert_eq!(k.dim(), 2);
        for b in &k.basis {
            assert!(b[(0, 1)].norm() < 1e-12 && b[(1, 0)].norm() < 1e-12);
        }
        assert!(k.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn round_projector_examples() {
        let tol = Tolerances::default();
        let p = round_projector(&diag(&[1.0000000003, -2e-10]), &tol).unwrap();
        assert!((p - diag(&[1.0, 0.0])).norm() < 1e-14);
        let p = round_projector(&identity(3), &tol).unwrap();
        assert!((p - identity(3)).norm() < 1e-14);
        assert!(matches!(
            round_projector(&diag(&[0.5, 0.5]), &tol),
            Err(Error::NotNearProjection { .. })
        ));
    }

    #[test]
    fn subspace_distance_examples() {
        let tol = Tolerances::default();
        let i = MatrixSubspace::span_of(2, &[identity(2)], tol.rank_tol);
        let x = MatrixSubspace::span_of(2, &[pauli_x()], tol.rank_tol);
        let iz = MatrixSubspace::span_of(2, &[identity(2), pauli_z()], tol.rank_tol);
        assert!(subspace_distance(&i, &i).unwrap() < 1e-14);
        assert!((subspace_distance(&i, &x).unwrap() - 1.0).abs() < 1e-14);
        assert!((subspace_distance(&MatrixSubspace::full(2), &iz).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complement_has_complementary_dimension() {
        let tol = Tolerances::default();
        let iz = MatrixSubspace::span_of(2, &[identity(2), pauli_z()], tol.rank_tol);
        let comp = iz.complement(tol.rank_tol);
        assert_eq!(comp.dim(), 2);
        for a in &comp.basis {
            for b in &iz.basis {
                assert!(hs_inner(a, b).unwrap().norm() < 1e-12);
            }
        }
    }
}
