//! Finite-dimensional *-algebras of matrices: commutants, generated algebras,
//! centers, Wedderburn block structure and conditional expectations.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c};
use crate::numerics::{projection_order, MatrixSubspace, SpanBuilder, Tolerances};
use crate::random;
use crate::{C64, CMat};

/// Number of random redraws before giving up on a separated spectrum.
const MAX_DRAWS: usize = 24;

/// A unital *-subalgebra of `B(C^D)` with an HS-orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorAlgebra {
    pub space: MatrixSubspace,
    pub contains_identity: bool,
    pub star_closed: bool,
}

impl OperatorAlgebra {
    /// Wraps a subspace after checking closure under products and adjoints.
    pub fn from_subspace(space: MatrixSubspace, tol: &Tolerances) -> Result<Self> {
        let alg = Self::trusted(space, tol);
        let defect = alg.closure_defect(0);
        if defect > 100.0 * tol.eq_tol || !alg.contains_identity || !alg.star_closed {
            return Err(Error::NotAlgebra { defect });
        }
        Ok(alg)
    }

    /// Wraps a subspace known to be an algebra; flags are still measured.
    pub fn trusted(space: MatrixSubspace, tol: &Tolerances) -> Self {
        let d = space.ambient_dim;
        let contains_identity = space.residual(&linalg::identity(d)) <= 10.0 * tol.eq_tol;
        let star_closed = space
            .basis
            .iter()
            .all(|b| space.residual(&b.adjoint()) <= 10.0 * tol.eq_tol);
        OperatorAlgebra { space, contains_identity, star_closed }
    }

    pub fn scalars(d: usize) -> Self {
        let b = linalg::identity(d) * c(1.0 / (d as f64).sqrt(), 0.0);
        OperatorAlgebra {
            space: MatrixSubspace { ambient_dim: d, basis: vec![b] },
            contains_identity: true,
            star_closed: true,
        }
    }

    pub fn full(d: usize) -> Self {
        OperatorAlgebra { space: MatrixSubspace::full(d), contains_identity: true, star_closed: true }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim
    }

    pub fn basis(&self) -> &[CMat] {
        &self.space.basis
    }

    /// Random element `Σ g_k b_k` with complex Gaussian coefficients.
    pub fn random_element(&self, rng: &mut impl Rng) -> CMat {
        let d = self.ambient_dim();
        let mut x = CMat::zeros(d, d);
        for b in self.basis() {
            x += b * random::gaussian(rng);
        }
        x
    }

    pub fn random_hermitian(&self, rng: &mut impl Rng) -> CMat {
        linalg::hermitian_part(&self.random_element(rng))
    }

    /// Largest relative residual of sampled products and adjoints outside the span.
    pub fn closure_defect(&self, seed: u64) -> f64 {
        let mut rng = random::rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let x = self.random_element(&mut rng);
            let y = self.random_element(&mut rng);
            worst = worst.max(self.space.residual(&(&x * &y)));
            worst = worst.max(self.space.residual(&x.adjoint()));
        }
        worst
    }

    /// Whether all sampled pairs commute.
    pub fn is_abelian(&self, tol: &Tolerances) -> bool {
        let b = self.basis();
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                let comm = &b[i] * &b[j] - &b[j] * &b[i];
                if comm.norm() > 10.0 * tol.eq_tol {
                    return false;
                }
            }
        }
        true
    }
}

fn check_dims(d: usize, gens: &[CMat]) -> Result<()> {
    for g in gens {
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.nrows() });
        }
    }
    Ok(())
}

/// Orthonormal basis of `span(S ∪ S*)`.
fn star_span(d: usize, gens: &[CMat], tol: &Tolerances) -> MatrixSubspace {
    let mut all = Vec::with_capacity(2 * gens.len());
    for g in gens {
        all.push(g.clone());
        all.push(g.adjoint());
    }
    MatrixSubspace::span_of(d, &all, tol.rank_tol)
}

/// Restricts the orthonormal columns `b` to matrices commuting with every
/// element of `elems`.
///
/// All commutator conditions are imposed jointly: a single element can have a
/// tiny but nonzero commutator with a direction that another element rules
/// out, so restricting one element at a time is ill-conditioned. The stacked
/// system is compressed chunk by chunk into its triangular QR factor.
pub(crate) fn restrict_to_commutant(d: usize, b: CMat, elems: &[CMat], tol: &Tolerances) -> CMat {
    let k = b.ncols();
    if k == 0 || elems.is_empty() {
        return b;
    }
    let xs: Vec<CMat> = (0..k).map(|j| linalg::unvec(b.column(j).as_slice(), d)).collect();
    let d2 = d * d;
    let per_chunk = ((4 * k).max(d2) / d2).max(1);
    let mut r = CMat::zeros(0, k);
    for chunk in elems.chunks(per_chunk) {
        let mut stack = CMat::zeros(r.nrows() + chunk.len() * d2, k);
        stack.view_mut((0, 0), (r.nrows(), k)).copy_from(&r);
        for (c, s) in chunk.iter().enumerate() {
            let row0 = r.nrows() + c * d2;
            for (j, x) in xs.iter().enumerate() {
                let comm = s * x - x * s;
                stack.view_mut((row0, j), (d2, 1)).copy_from_slice(comm.as_slice());
            }
        }
        r = if stack.nrows() > k { stack.qr().r() } else { stack };
    }
    let cutoff = tol.rank_tol * linalg::spectral_norm(&r).max(1.0);
    crate::numerics::restrict_kernel(&b, &r, cutoff)
}

/// `{A : AS = SA, AS* = S*A for all generators S}`.
pub fn commutant(d: usize, gens: &[CMat], tol: &Tolerances) -> Result<OperatorAlgebra> {
    check_dims(d, gens)?;
    let span = star_span(d, gens, tol);
    let b = restrict_to_commutant(d, linalg::identity(d * d), &span.basis, tol);
    Ok(OperatorAlgebra::trusted(MatrixSubspace::from_columns(d, &b), tol))
}

/// Smallest unital *-algebra containing the generators.
pub fn generated_algebra(d: usize, gens: &[CMat], tol: &Tolerances) -> Result<OperatorAlgebra> {
    check_dims(d, gens)?;
    let mut seeds = vec![linalg::identity(d)];
    for g in gens {
        seeds.push(g.clone());
        seeds.push(g.adjoint());
    }
    let mut span = SpanBuilder::new(d, tol.rank_tol);
    let mut frontier = span.extend(&seeds);
    while !frontier.is_empty() && !span.is_full() {
        let basis = span.subspace().basis;
        let mut cands = Vec::with_capacity(2 * frontier.len() * basis.len());
        for f in &frontier {
            for b in &basis {
                cands.push(f * b);
                cands.push(b * f);
            }
        }
        frontier = span.extend(&cands);
    }
    Ok(OperatorAlgebra::trusted(span.subspace(), tol))
}

/// `alg ∩ alg′`.
pub fn center(alg: &OperatorAlgebra, tol: &Tolerances) -> OperatorAlgebra {
    let d = alg.ambient_dim();
    let b = restrict_to_commutant(d, alg.space.columns(), alg.basis(), tol);
    OperatorAlgebra::trusted(MatrixSubspace::from_columns(d, &b), tol)
}

/// Intersection of two subspaces of `B(C^D)`.
pub fn intersect(a: &MatrixSubspace, b: &MatrixSubspace, tol: &Tolerances) -> MatrixSubspace {
    let d = a.ambient_dim;
    if a.is_empty() || b.is_empty() {
        return MatrixSubspace::zero(d);
    }
    let ba = a.columns();
    let bb = b.columns();
    // vectors of span(a) with no component outside span(b)
    let image = &ba - &bb * (bb.adjoint() * &ba);
    let cols = crate::numerics::restrict_kernel(&ba, &image, tol.rank_tol);
    MatrixSubspace::from_columns(d, &cols)
}

/// Wedderburn data: `alg = ⊕_j U_j* (B(C^{n_j}) ⊗ I_{m_j}) U_j`.
#[derive(Debug, Clone)]
pub struct AlgebraStructure {
    pub ambient_dim: usize,
    pub central_projections: Vec<CMat>,
    /// `U_j` as an `(n_j m_j) × D` coisometry with `U_j* U_j = P_j`; row
    /// `k·m_j + a` corresponds to `|k⟩ ⊗ |a⟩`.
    pub block_unitaries: Vec<CMat>,
    pub left_dims: Vec<usize>,
    pub right_dims: Vec<usize>,
}

impl AlgebraStructure {
    pub fn blocks(&self) -> usize {
        self.central_projections.len()
    }

    /// `U_j* (A ⊗ B) U_j`.
    pub fn embed(&self, j: usize, a: &CMat, b: &CMat) -> CMat {
        let u = &self.block_unitaries[j];
        u.adjoint() * linalg::kron(a, b) * u
    }

    /// `U_j X U_j*` restricted to block `j`.
    pub fn compress(&self, j: usize, x: &CMat) -> CMat {
        let u = &self.block_unitaries[j];
        u * x * u.adjoint()
    }

    /// Largest deviation of `U_j (alg P_j) U_j*` from `B(C^n) ⊗ I`, plus the
    /// defects of `Σ P_j = I` and mutual orthogonality.
    pub fn reconstruction_defect(&self, alg: &OperatorAlgebra) -> f64 {
        let d = self.ambient_dim;
        let mut total = CMat::zeros(d, d);
        let mut worst: f64 = 0.0;
        for (j, p) in self.central_projections.iter().enumerate() {
            total += p;
            for (k, q) in self.central_projections.iter().enumerate() {
                if k != j {
                    worst = worst.max((p * q).norm());
                }
            }
            let (n, m) = (self.left_dims[j], self.right_dims[j]);
            for b in alg.basis() {
                let y = self.compress(j, b);
                let a = linalg::partial_trace_right(&y, n, m) / c(m as f64, 0.0);
                let fit = linalg::kron(&a, &linalg::identity(m));
                worst = worst.max((y - fit).norm());
            }
        }
        worst.max((total - linalg::identity(d)).norm())
    }
}

/// Eigen-decomposes a random Hermitian element drawn by `draw`, retrying until
/// exactly `expected` well-separated eigenvalue clusters appear.
fn separated_spectrum(
    expected: usize,
    tol: &Tolerances,
    seed: u64,
    rng: &mut random::SeededRng,
    mut draw: impl FnMut(&mut random::SeededRng) -> CMat,
) -> Result<(Vec<Vec<usize>>, CMat)> {
    for _ in 0..MAX_DRAWS {
        let h = draw(rng);
        let (vals, vecs) = linalg::eigh(&h);
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let groups = linalg::cluster_real(&vals, 10.0 * tol.eq_tol * scale.max(1.0));
        if groups.len() != expected {
            continue;
        }
        // insist on a comfortable gap so the grouping is unambiguous
        let centers: Vec<f64> =
            groups.iter().map(|g| g.iter().map(|&i| vals[i]).sum::<f64>() / g.len() as f64).collect();
        let mut gap = f64::INFINITY;
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                gap = gap.min((centers[i] - centers[j]).abs());
            }
        }
        if gap < 1e-6 * scale {
            continue;
        }
        return Ok((groups, vecs));
    }
    Err(Error::DegenerateRandomElement { seed, attempts: MAX_DRAWS })
}

fn columns_of(vecs: &CMat, idx: &[usize]) -> CMat {
    let mut w = CMat::zeros(vecs.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        w.set_column(k, &vecs.column(i));
    }
    w
}

/// Rephases each column so its first significant entry is real positive.
fn fix_column_phases(w: &mut CMat) {
    for k in 0..w.ncols() {
        let ph = linalg::leading_phase(w.column(k).iter(), 1e-8);
        let col = w.column(k) * ph;
        w.set_column(k, &col);
    }
}

/// Minimal central projections and block unitaries of a unital *-algebra.
pub fn atomic_structure(alg: &OperatorAlgebra, seed: u64, tol: &Tolerances) -> Result<AlgebraStructure> {
    let d = alg.ambient_dim();
    let defect = alg.closure_defect(seed);
    if defect > 100.0 * tol.eq_tol || !alg.contains_identity {
        return Err(Error::NotAlgebra { defect });
    }
    let z = center(alg, tol);
    let mut rng = random::rng(seed);
    let (groups, vecs) =
        separated_spectrum(z.dim(), tol, seed, &mut rng, |r| z.random_hermitian(r))?;

    let mut blocks: Vec<(CMat, CMat)> = groups
        .iter()
        .map(|g| {
            let w = columns_of(&vecs, g);
            (&w * w.adjoint(), w)
        })
        .collect();
    blocks.sort_by(|a, b| projection_order(&a.0, &b.0));

    let mut out = AlgebraStructure {
        ambient_dim: d,
        central_projections: Vec::new(),
        block_unitaries: Vec::new(),
        left_dims: Vec::new(),
        right_dims: Vec::new(),
    };
    for (p, w) in blocks {
        let r = w.ncols();
        let compressed: Vec<CMat> = alg.basis().iter().map(|b| w.adjoint() * b * &w).collect();
        let block = MatrixSubspace::span_of(r, &compressed, tol.rank_tol);
        let n = (block.dim() as f64).sqrt().round() as usize;
        if n == 0 || n * n != block.dim() || r % n != 0 {
            return Err(Error::NotAlgebra { defect: block.dim() as f64 });
        }
        let m = r / n;
        let u_adj = if n == 1 {
            let mut w = w.clone();
            fix_column_phases(&mut w);
            w
        } else {
            let block_alg = OperatorAlgebra::trusted(block, tol);
            factor_units(&block_alg, &w, n, m, tol, seed, &mut rng)?
        };
        out.central_projections.push(p);
        out.block_unitaries.push(u_adj.adjoint());
        out.left_dims.push(n);
        out.right_dims.push(m);
    }
    let defect = out.reconstruction_defect(alg);
    if defect > 100.0 * tol.eq_tol * (d as f64).sqrt() {
        return Err(Error::NotAlgebra { defect });
    }
    Ok(out)
}

/// Builds `U_j*` for a factor block `≅ B(C^n) ⊗ I_m`, given an isometry `w`
/// onto the block and the compressed algebra.
fn factor_units(
    block: &OperatorAlgebra,
    w: &CMat,
    n: usize,
    m: usize,
    tol: &Tolerances,
    seed: u64,
    rng: &mut random::SeededRng,
) -> Result<CMat> {
    let (groups, vecs) = separated_spectrum(n, tol, seed, rng, |r| block.random_hermitian(r))?;
    if groups.iter().any(|g| g.len() != m) {
        return Err(Error::NotAlgebra { defect: 1.0 });
    }
    let mut f: Vec<CMat> = groups.iter().map(|g| columns_of(&vecs, g)).collect();
    // phases of the reference basis, measured in the ambient space
    let mut lifted = w * &f[0];
    fix_column_phases(&mut lifted);
    f[0] = w.adjoint() * lifted;

    for _ in 0..MAX_DRAWS {
        let x = block.random_element(rng);
        let xn = x.norm();
        let ys: Vec<CMat> = (1..n).map(|k| f[0].adjoint() * &x * &f[k]).collect();
        let weak = ys.iter().any(|y| y.norm() / (m as f64).sqrt() < 1e-3 * xn);
        if weak {
            continue;
        }
        let r = w.nrows();
        let mut u_adj = CMat::zeros(r, n * m);
        for k in 0..n {
            let mut fk = if k == 0 { f[0].clone() } else { &f[k] * linalg::polar_unitary(&ys[k - 1]).adjoint() };
            let lifted = w * &fk;
            let ph: C64 = linalg::leading_phase(lifted.column(0).iter(), 1e-8);
            fk *= ph;
            let lifted = w * &fk;
            u_adj.columns_mut(k * m, m).copy_from(&lifted);
        }
        return Ok(u_adj);
    }
    Err(Error::DegenerateRandomElement { seed, attempts: MAX_DRAWS })
}

/// Conditional expectation onto an algebra, in transfer-matrix form.
#[derive(Debug, Clone)]
pub struct ConditionalExpectation {
    pub transfer: CMat,
    pub range: OperatorAlgebra,
    pub structure: AlgebraStructure,
    pub block_states: Vec<CMat>,
}

impl ConditionalExpectation {
    pub fn apply(&self, x: &CMat) -> CMat {
        let d = self.structure.ambient_dim;
        let v = &self.transfer * linalg::vec_of(x);
        linalg::unvec(v.as_slice(), d)
    }

    pub fn apply_pre(&self, rho: &CMat) -> CMat {
        let d = self.structure.ambient_dim;
        let v = self.transfer.adjoint() * linalg::vec_of(rho);
        linalg::unvec(v.as_slice(), d)
    }
}

/// `E(X) = Σ_j U_j* (tr_R[(I ⊗ ρ_j) U_j X U_j*] ⊗ I) U_j`.
pub fn expectation_map(s: &AlgebraStructure, states: &[CMat], x: &CMat) -> CMat {
    let d = s.ambient_dim;
    let mut out = CMat::zeros(d, d);
    for j in 0..s.blocks() {
        let (n, m) = (s.left_dims[j], s.right_dims[j]);
        let y = s.compress(j, x);
        let weighted = linalg::kron(&linalg::identity(n), &states[j]) * y;
        let a = linalg::partial_trace_right(&weighted, n, m);
        out += s.embed(j, &a, &linalg::identity(m));
    }
    out
}

/// Conditional expectation with prescribed faithful block states `ρ_j`.
pub fn expectation_onto(
    alg: &OperatorAlgebra,
    structure: &AlgebraStructure,
    states: &[CMat],
    tol: &Tolerances,
) -> Result<ConditionalExpectation> {
    if states.len() != structure.blocks() {
        return Err(Error::DimensionMismatch { expected: structure.blocks(), found: states.len() });
    }
    for (j, rho) in states.iter().enumerate() {
        let m = structure.right_dims[j];
        if rho.nrows() != m || rho.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: rho.nrows() });
        }
        let min = linalg::eigh(rho).0.first().cloned().unwrap_or(0.0);
        if min < tol.rank_tol {
            return Err(Error::NotFaithful { min_eigenvalue: min });
        }
    }
    let d = structure.ambient_dim;
    let mut t = CMat::zeros(d * d, d * d);
    for jc in 0..d {
        for ir in 0..d {
            let e = linalg::unit(d, d, ir, jc);
            let img = expectation_map(structure, states, &e);
            t.column_mut(jc * d + ir).copy_from_slice(img.as_slice());
        }
    }
    Ok(ConditionalExpectation {
        transfer: t,
        range: alg.clone(),
        structure: structure.clone(),
        block_states: states.to_vec(),
    })
}

/// Reads the block states of a conditional expectation given only its
/// transfer matrix: `E(U_j*(I ⊗ |a⟩⟨b|)U_j) = ρ_j[b, a] P_j`.
pub fn extract_block_states(structure: &AlgebraStructure, transfer: &CMat) -> Vec<CMat> {
    let d = structure.ambient_dim;
    let mut states = Vec::with_capacity(structure.blocks());
    for j in 0..structure.blocks() {
        let (n, m) = (structure.left_dims[j], structure.right_dims[j]);
        let p = &structure.central_projections[j];
        let rank = (n * m) as f64;
        let mut rho = CMat::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                let x = structure.embed(j, &linalg::identity(n), &linalg::unit(m, m, a, b));
                let img = linalg::unvec((transfer * linalg::vec_of(&x)).as_slice(), d);
                rho[(b, a)] = (p * img).trace() / c(rank, 0.0);
            }
        }
        states.push(linalg::hermitian_part(&rho));
    }
    states
}

/// Parametrization of the states invariant under `E_*`:
/// `⊕_j λ_j U_j* (ω_j ⊗ ρ_j) U_j`.
#[derive(Debug, Clone)]
pub struct InvariantFamily {
    pub structure: AlgebraStructure,
    pub block_states: Vec<CMat>,
}

impl InvariantFamily {
    pub fn left_dims(&self) -> &[usize] {
        &self.structure.left_dims
    }

    /// State for weights `λ_j` (summing to one) and states `ω_j` on the left factors.
    pub fn sample(&self, lambdas: &[f64], omegas: &[CMat]) -> Result<CMat> {
        let s = &self.structure;
        if lambdas.len() != s.blocks() || omegas.len() != s.blocks() {
            return Err(Error::DimensionMismatch { expected: s.blocks(), found: lambdas.len() });
        }
        let d = s.ambient_dim;
        let mut out = CMat::zeros(d, d);
        for j in 0..s.blocks() {
            if omegas[j].nrows() != s.left_dims[j] {
                return Err(Error::DimensionMismatch { expected: s.left_dims[j], found: omegas[j].nrows() });
            }
            out += s.embed(j, &omegas[j], &self.block_states[j]) * c(lambdas[j], 0.0);
        }
        Ok(out)
    }

    /// Uniform weights and maximally mixed left states.
    pub fn central_sample(&self) -> CMat {
        let k = self.structure.blocks();
        let lambdas = vec![1.0 / k as f64; k];
        let omegas: Vec<CMat> = self
            .structure
            .left_dims
            .iter()
            .map(|&n| linalg::identity(n) * c(1.0 / n as f64, 0.0))
            .collect();
        self.sample(&lambdas, &omegas).expect("dimensions are consistent")
    }
}

pub fn expectation_invariant_states(e: &ConditionalExpectation) -> InvariantFamily {
    InvariantFamily { structure: e.structure.clone(), block_states: e.block_states.clone() }
}
