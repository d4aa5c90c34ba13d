//! Dense complex linear-algebra helpers shared by the analysis modules.
//!
//! Vectorization is column stacking throughout: `vec(X)[c * D + r] = X[(r, c)]`,
//! which is the native storage order of `nalgebra` matrices. With this
//! convention `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};

use crate::{C64, CMat};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Column-stacking vectorization.
pub fn vec_of(x: &CMat) -> DVector<C64> {
    DVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec_of`] for a `d × d` matrix.
pub fn unvec(v: &[C64], d: usize) -> CMat {
    CMat::from_column_slice(d, d, v)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn frob(a: &CMat) -> f64 {
    a.norm()
}

pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

pub fn trace(a: &CMat) -> C64 {
    a.trace()
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Complex Schur form `A = Q T Q*`; returns `(Q, T)`.
///
/// nalgebra's QR iteration can stall on highly structured input, so a capped
/// run is retried on seeded unitary conjugates of `A`.
pub fn schur(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (zeros(0, 0), zeros(0, 0));
    }
    let cap = 200 * n + 1000;
    if let Some(s) = a.clone().try_schur(f64::EPSILON, cap) {
        return s.unpack();
    }
    let mut rng = crate::random::rng(0x5c4u64);
    for _ in 0..8 {
        let v = crate::random::haar_unitary(n, &mut rng);
        let rotated = v.adjoint() * a * &v;
        if let Some(s) = rotated.try_schur(f64::EPSILON, cap) {
            let (q, t) = s.unpack();
            return (v * q, t);
        }
    }
    panic!("Schur decomposition failed to converge ({n}×{n})");
}

pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    let (_, t) = schur(a);
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Single-linkage clustering of complex numbers: two values share a cluster
/// when they are connected by a chain of steps no longer than `thr`.
/// Clusters are returned in order of their smallest member index.
pub fn cluster(values: &[C64], thr: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= thr {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Same as [`cluster`] for real values.
pub fn cluster_real(values: &[f64], thr: f64) -> Vec<Vec<usize>> {
    let zs: Vec<C64> = values.iter().map(|&x| c(x, 0.0)).collect();
    cluster(&zs, thr)
}

/// Thin SVD that also works for wide matrices. Returns `(U, σ, V)` with
/// `A = U diag(σ) V*`, singular values descending.
pub fn svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (zeros(m, 0), Vec::new(), zeros(n, 0));
    }
    // nalgebra's complex SVD is unreliable on rank-deficient input, and so is
    // faer's divide-and-conquer path on clustered spectra; force QR iteration.
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::svd::{self as fsvd, ComputeSvdVectors, SvdParams};
    let f = to_faer(a);
    let k = m.min(n);
    let mut params: SvdParams = faer::Auto::<faer::c64>::auto();
    params.recursion_threshold = usize::MAX;
    let mut s = faer::diag::Diag::<faer::c64>::zeros(k);
    let mut u = faer::Mat::<faer::c64>::zeros(m, k);
    let mut v = faer::Mat::<faer::c64>::zeros(n, k);
    let par = faer::Par::Seq;
    let req = fsvd::svd_scratch::<faer::c64>(
        m,
        n,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::Thin,
        par,
        params.into(),
    );
    let mut buf = MemBuffer::new(req);
    fsvd::svd(
        f.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        par,
        MemStack::new(&mut buf),
        params.into(),
    )
    .expect("SVD failed to converge");
    let sv = s.column_vector();
    let sing = (0..k).map(|i| sv[i].re).collect();
    (from_faer(u.as_ref()), sing, from_faer(v.as_ref()))
}

fn to_faer(a: &CMat) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| faer::c64::new(a[(i, j)].re, a[(i, j)].im))
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c(z.re, z.im)
    })
}

/// Orthonormal basis (as columns) of the null space of `a`, with singular
/// values `≤ cutoff` treated as zero.
pub fn null_space(a: &CMat, cutoff: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return zeros(0, 0);
    }
    if m == 0 {
        return identity(n);
    }
    // the thin SVD only yields min(m, n) right vectors; pad wide inputs
    let padded;
    let a = if m < n {
        let mut p = zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        padded = p;
        &padded
    } else {
        a
    };
    let (_, s, v) = svd(a);
    let cols: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= cutoff).collect();
    let mut out = zeros(n, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &v.column(i));
    }
    out
}

/// Orthonormal basis (as columns) of the column space of `a`, keeping
/// singular values above `rel_tol · σ_max`.
pub fn range_basis(a: &CMat, rel_tol: f64) -> CMat {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return zeros(m, 0);
    }
    let (u, s, _) = svd(a);
    let smax = s.first().cloned().unwrap_or(0.0);
    if smax == 0.0 {
        return zeros(m, 0);
    }
    let keep = s.iter().take_while(|&&x| x > rel_tol * smax).count();
    u.columns(0, keep).into_owned()
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(a: &CMat) -> CMat {
    let (u, _, v) = svd(a);
    u * v.adjoint()
}

/// Function of a Hermitian matrix applied through its eigen-decomposition.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x), 0.0)));
    &vecs * DMatrix::from_diagonal(&d) * vecs.adjoint()
}

pub fn column_projector(b: &CMat) -> CMat {
    b * b.adjoint()
}

/// `tr_R` on `C^{dl} ⊗ C^{dr}` (left factor major in the index order).
pub fn partial_trace_right(m: &CMat, dl: usize, dr: usize) -> CMat {
    let mut out = zeros(dl, dl);
    for a in 0..dl {
        for b in 0..dl {
            let mut s = c(0.0, 0.0);
            for r in 0..dr {
                s += m[(a * dr + r, b * dr + r)];
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// `tr_L` on `C^{dl} ⊗ C^{dr}`.
pub fn partial_trace_left(m: &CMat, dl: usize, dr: usize) -> CMat {
    let mut out = zeros(dr, dr);
    for r in 0..dr {
        for s in 0..dr {
            let mut t = c(0.0, 0.0);
            for a in 0..dl {
                t += m[(a * dr + r, a * dr + s)];
            }
            out[(r, s)] = t;
        }
    }
    out
}

/// Phase `e^{-iθ}` that makes the first entry with modulus above `thr`
/// real and positive (1 if there is none).
pub fn leading_phase<'a>(entries: impl IntoIterator<Item = &'a C64>, thr: f64) -> C64 {
    for z in entries {
        let r = z.norm();
        if r > thr {
            return z.conj() / r;
        }
    }
    c(1.0, 0.0)
}

/// Matrix unit `|i⟩⟨j|` of size `r × c`.
pub fn unit(r: usize, cc: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(r, cc);
    m[(i, j)] = c(1.0, 0.0);
    m
}

pub fn ket_bra(x: &DVector<C64>, y: &DVector<C64>) -> CMat {
    x * y.adjoint()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(a: &CMat) -> f64 {
    eigh(a).0.iter().map(|x| x.abs()).sum()
}
