//! Periods, cyclic resolutions and the block form of a channel on its
//! decoherence-free algebra.
//!
//! Everything here works in the ambient space `C^D`: cyclic projections,
//! factorization maps and embeddings are `D`-row matrices even when a
//! component only occupies part of the space.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::algebra::{self, AlgebraStructure, ConditionalExpectation, OperatorAlgebra};
use crate::channel::{self, ChannelSpec, KrausMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::numerics::{self, MatrixSubspace, Tolerances};
use crate::structure::{self, PeripheralData};
use crate::{C64, CMat};

pub fn root_of_unity(k: usize, d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// Anchor order: rounded diagonal compared lexicographically, then all entries.
fn anchor_order(p: &CMat, q: &CMat) -> Ordering {
    let grid = |x: f64| (x * 1e8).round() as i64;
    let dp: Vec<i64> = (0..p.nrows()).map(|i| grid(p[(i, i)].re)).collect();
    let dq: Vec<i64> = (0..q.nrows()).map(|i| grid(q[(i, i)].re)).collect();
    dp.cmp(&dq).then_with(|| {
        let ep: Vec<(i64, i64)> = p.iter().map(|z| (grid(z.re), grid(z.im))).collect();
        let eq: Vec<(i64, i64)> = q.iter().map(|z| (grid(z.re), grid(z.im))).collect();
        ep.cmp(&eq)
    })
}

fn cycle_unitary(qs: &[CMat]) -> CMat {
    let d = qs.len();
    let mut u = CMat::zeros(qs[0].nrows(), qs[0].ncols());
    for (j, q) in qs.iter().enumerate() {
        u += q * root_of_unity(j, d);
    }
    u
}

fn numbering_defect(c: &ChannelSpec, qs: &[CMat]) -> f64 {
    let d = qs.len();
    (0..d)
        .map(|m| linalg::spectral_norm(&(c.apply_unchecked(&qs[m]) - &qs[(m + d - 1) % d])))
        .fold(0.0, f64::max)
}

/// Isometry onto the range of a projection.
fn range_isometry(p: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(p);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.5).collect();
    let mut w = CMat::zeros(p.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        w.set_column(j, &vecs.column(k));
    }
    w
}

/// Period and cyclic resolution of one component.
#[derive(Debug, Clone)]
pub struct CycleReport {
    pub period: usize,
    /// `Q_0, …, Q_{d−1}` numbered so that `Φ(Q_m) = Q_{m−1}`.
    pub cyclic_projections: Vec<CMat>,
    /// `Σ_j ω^j Q_j`.
    pub cycle_unitary: CMat,
    /// `max_m ‖Φ(Q_m) − Q_{m−1}‖₂`.
    pub numbering_defect: f64,
}

impl CycleReport {
    pub fn omega(&self) -> C64 {
        root_of_unity(1, self.period)
    }

    pub fn support(&self) -> CMat {
        self.cyclic_projections.iter().fold(CMat::zeros(self.cycle_unitary.nrows(), self.cycle_unitary.ncols()), |a, q| a + q)
    }

    /// Rotates the labels so that `new Q_0 = old Q_k`.
    fn rotated(mut self, k: usize) -> Self {
        self.cyclic_projections.rotate_left(k);
        self.cycle_unitary = cycle_unitary(&self.cyclic_projections);
        self
    }
}

/// Period of an irreducible channel with a faithful invariant state, read off
/// the peripheral spectrum.
pub fn period_irreducible(c: &ChannelSpec, p: &PeripheralData, tol: &Tolerances) -> Result<CycleReport> {
    let d = p.eigenvalues.len();
    if d == 0 {
        return Err(Error::NotRootsOfUnity { order: 0 });
    }
    if let Some(cl) = p.clusters.iter().find(|cl| cl.algebraic > 1 || cl.geometric > 1) {
        return Err(Error::NotSimple { multiplicity: cl.algebraic.max(cl.geometric) });
    }
    let thr = 10.0 * tol.eq_tol;
    let find = |w: C64| p.eigenvalues.iter().position(|z| (z - w).norm() <= thr);
    if (0..d).any(|k| find(root_of_unity(k, d)).is_none()) {
        return Err(Error::NotRootsOfUnity { order: d });
    }
    let dim = c.dim;
    if d == 1 {
        let id = linalg::identity(dim);
        return Ok(CycleReport {
            period: 1,
            numbering_defect: numbering_defect(c, std::slice::from_ref(&id)),
            cyclic_projections: vec![id.clone()],
            cycle_unitary: id,
        });
    }
    let idx = find(root_of_unity(1, d)).expect("checked above");
    let mut u = linalg::polar_unitary(&p.eigenmatrices[idx]);
    // the spectrum of U is a rotated copy of the d-th roots; rotate one point onto 1
    let mu = linalg::eigenvalues(&u)[0];
    u *= mu.conj() / mu.norm();

    let mut powers = vec![linalg::identity(dim)];
    for n in 1..d {
        powers.push(&powers[n - 1] * &u);
    }
    let mut qs = Vec::with_capacity(d);
    for j in 0..d {
        let mut q = CMat::zeros(dim, dim);
        for (n, un) in powers.iter().enumerate() {
            q += un * root_of_unity(j * n % d, d).conj();
        }
        q /= C64::new(d as f64, 0.0);
        let q = numerics::round_projector(&q, tol).map_err(|_| Error::NotRootsOfUnity { order: d })?;
        if q.trace().re < 0.5 {
            return Err(Error::NotRootsOfUnity { order: d });
        }
        qs.push(q);
    }
    let anchor = (0..d).min_by(|&a, &b| anchor_order(&qs[a], &qs[b])).expect("d ≥ 1");
    let report = CycleReport {
        period: d,
        numbering_defect: 0.0,
        cycle_unitary: cycle_unitary(&qs),
        cyclic_projections: qs,
    }
    .rotated(anchor);
    let defect = numbering_defect(c, &report.cyclic_projections);
    if defect > 100.0 * tol.eq_tol {
        return Err(Error::OrbitNotClosed { defect });
    }
    Ok(CycleReport { numbering_defect: defect, ..report })
}

/// One MFNC component.
#[derive(Debug, Clone)]
pub struct MfncComponent {
    /// `Z_i`.
    pub projection: CMat,
    /// Isometry `D × rank(Z_i)` onto the range of `Z_i` (the identity when
    /// there is a single component).
    pub isometry: CMat,
    pub cycle: CycleReport,
    /// `Φ_i` on `B(Z_i H)`, in the coordinates of `isometry`.
    pub channel: ChannelSpec,
}

#[derive(Debug, Clone)]
pub struct MfncDecomposition {
    /// Minimal projections of `Z(F) ∩ Z(N)`.
    pub z_projections: Vec<CMat>,
    pub components: Vec<MfncComponent>,
    /// Wedderburn data of `N` used for the orbits.
    pub n_structure: AlgebraStructure,
}

/// Splits a channel with a faithful invariant state into MFNC components and
/// numbers the cyclic projections of each.
pub fn mfnc_decompose(
    c: &ChannelSpec,
    f: &OperatorAlgebra,
    n: &OperatorAlgebra,
    seed: u64,
    tol: &Tolerances,
) -> Result<MfncDecomposition> {
    let dim = c.dim;
    let zf = algebra::center(f, tol);
    let zn = algebra::center(n, tol);
    let z = OperatorAlgebra::trusted(algebra::intersect(&zf.space, &zn.space, tol), tol);
    let zs = algebra::atomic_structure(&z, seed, tol)?;
    let ns = algebra::atomic_structure(n, seed, tol)?;
    let thr = 100.0 * tol.eq_tol;
    let single = zs.blocks() == 1;

    let mut components = Vec::with_capacity(zs.blocks());
    for zp in &zs.central_projections {
        let members: Vec<usize> = (0..ns.blocks())
            .filter(|&j| {
                let p = &ns.central_projections[j];
                linalg::spectral_norm(&(p - zp * p)) <= thr
            })
            .collect();
        let anchor = *members
            .iter()
            .min_by(|&&a, &&b| anchor_order(&ns.central_projections[a], &ns.central_projections[b]))
            .ok_or(Error::OrbitNotClosed { defect: 1.0 })?;
        let mut orbit = vec![anchor];
        let mut cur = anchor;
        loop {
            let img = c.apply_unchecked(&ns.central_projections[cur]);
            let (best, dist) = members
                .iter()
                .map(|&j| (j, linalg::spectral_norm(&(&img - &ns.central_projections[j]))))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("members is non-empty");
            if dist > thr {
                return Err(Error::OrbitNotClosed { defect: dist });
            }
            if best == anchor {
                break;
            }
            if orbit.contains(&best) {
                return Err(Error::OrbitNotClosed { defect: 1.0 });
            }
            orbit.push(best);
            cur = best;
        }
        if orbit.len() != members.len() {
            return Err(Error::OrbitNotClosed { defect: 1.0 });
        }
        let d = orbit.len();
        // Φᵐ(Q_0) = Q_{d−m}
        let qs: Vec<CMat> = (0..d).map(|k| ns.central_projections[orbit[(d - k) % d]].clone()).collect();
        let defect = numbering_defect(c, &qs);
        let isometry = if single { linalg::identity(dim) } else { range_isometry(zp) };
        let channel = c.compress(&isometry, &format!("{} (component)", c.label))?;
        components.push(MfncComponent {
            projection: zp.clone(),
            isometry,
            cycle: CycleReport {
                period: d,
                cycle_unitary: cycle_unitary(&qs),
                cyclic_projections: qs,
                numbering_defect: defect,
            },
            channel,
        });
    }
    Ok(MfncDecomposition { z_projections: zs.central_projections.clone(), components, n_structure: ns })
}

/// Block form of one MFNC component of period `d`.
#[derive(Debug, Clone)]
pub struct ComponentData {
    pub period: usize,
    pub projection: CMat,
    pub isometry: CMat,
    pub cyclic_projections: Vec<CMat>,
    /// `dim K_m^L`, the same for every `m`.
    pub left_dim: usize,
    /// `dim K_m^R`.
    pub right_dims: Vec<usize>,
    /// `S_m` as `(n r_m) × D` coisometries.
    pub s_maps: Vec<CMat>,
    /// `T_m : K_m^L → K_{m−1}^L`.
    pub t_maps: Vec<CMat>,
    /// `Ξ_m : B(K_m^R) → B(K_{m−1}^R)`.
    pub xi: Vec<KrausMap>,
    /// `ρ_m` on `K_m^R`.
    pub rho: Vec<CMat>,
    /// Worst residual of the `T_m` solves.
    pub isomorphism_residual: f64,
    /// Worst residual of `Φ(S_m*(A⊗B)S_m) = S_{m−1}*(T_mAT_m*⊗Ξ_m(B))S_{m−1}` on matrix units.
    pub reconstruction_defect: f64,
    /// `max_m ‖(Ξ_m)_*(ρ_{m−1}) − ρ_m‖₁`.
    pub state_defect: f64,
    /// Peripheral eigenvalues of each `d`-fold composition starting at `m`.
    pub round_trip_peripheral: Vec<Vec<C64>>,
}

impl ComponentData {
    /// Every round-trip composition has the single peripheral eigenvalue 1.
    pub fn round_trips_ergodic(&self, tol: &Tolerances) -> bool {
        self.round_trip_peripheral
            .iter()
            .all(|ev| ev.len() == 1 && (ev[0] - C64::new(1.0, 0.0)).norm() <= 10.0 * tol.eq_tol)
    }
}

fn prev(m: usize, d: usize) -> usize {
    (m + d - 1) % d
}

/// Unitary `T` from the images `α(E_ab) = T E_ab T*` of matrix units.
fn recover_unitary(images: &[Vec<CMat>]) -> CMat {
    let n = images.len();
    let (_, vecs) = linalg::eigh(&images[0][0]);
    let t0 = vecs.column(n - 1).into_owned();
    let mut t = CMat::zeros(n, n);
    for a in 0..n {
        let col = &images[a][0] * &t0;
        t.set_column(a, &col);
    }
    let mut t = linalg::polar_unitary(&t);
    let ph = linalg::leading_phase(t.column(0).iter(), 1e-8);
    t *= ph;
    t
}

fn peripheral_of(t: &CMat, tol: &Tolerances) -> Vec<C64> {
    linalg::eigenvalues(t).into_iter().filter(|z| z.norm() > 1.0 - tol.peripheral_band).collect()
}

/// Factorizes the action of `Φ` on one MFNC component through the blocks of `N`.
pub fn component_decompose(
    c: &ChannelSpec,
    comp: &MfncComponent,
    e_n: &ConditionalExpectation,
    tol: &Tolerances,
) -> Result<ComponentData> {
    let d = comp.cycle.period;
    let s = &e_n.structure;
    let thr = 100.0 * tol.eq_tol;
    let mut blocks = Vec::with_capacity(d);
    for q in &comp.cycle.cyclic_projections {
        let (j, dist) = (0..s.blocks())
            .map(|j| (j, linalg::spectral_norm(&(q - &s.central_projections[j]))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::OrbitNotClosed { defect: 1.0 })?;
        if dist > thr {
            return Err(Error::OrbitNotClosed { defect: dist });
        }
        blocks.push(j);
    }
    let n = s.left_dims[blocks[0]];
    if blocks.iter().any(|&j| s.left_dims[j] != n) {
        return Err(Error::IsomorphismSolveFailed { residual: f64::INFINITY });
    }
    let s_maps: Vec<CMat> = blocks.iter().map(|&j| s.block_unitaries[j].clone()).collect();
    let right_dims: Vec<usize> = blocks.iter().map(|&j| s.right_dims[j]).collect();
    let rho: Vec<CMat> = blocks.iter().map(|&j| e_n.block_states[j].clone()).collect();

    let mut t_maps = Vec::with_capacity(d);
    let mut xi = Vec::with_capacity(d);
    let mut iso_res: f64 = 0.0;
    let mut rec: f64 = 0.0;
    for m in 0..d {
        let pm = prev(m, d);
        let (sm, sp) = (&s_maps[m], &s_maps[pm]);
        let (rm, rp) = (right_dims[m], right_dims[pm]);
        let lift = |a: &CMat, b: &CMat| c.apply_unchecked(&(sm.adjoint() * linalg::kron(a, b) * sm));
        let down = |x: &CMat| sp * x * sp.adjoint();

        let images: Vec<Vec<CMat>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let y = down(&lift(&linalg::unit(n, n, a, b), &linalg::identity(rm)));
                        linalg::partial_trace_right(&y, n, rp) / C64::new(rp as f64, 0.0)
                    })
                    .collect()
            })
            .collect();
        let t = recover_unitary(&images);
        for a in 0..n {
            for b in 0..n {
                let e = linalg::unit(n, n, a, b);
                let want = sp.adjoint() * linalg::kron(&(&t * &e * t.adjoint()), &linalg::identity(rp)) * sp;
                iso_res = iso_res.max(linalg::spectral_norm(&(lift(&e, &linalg::identity(rm)) - want)));
            }
        }
        if iso_res > thr {
            return Err(Error::IsomorphismSolveFailed { residual: iso_res });
        }

        let xi_map = |b: &CMat| {
            let y = down(&lift(&linalg::identity(n), b));
            linalg::partial_trace_left(&y, n, rp) / C64::new(n as f64, 0.0)
        };
        let choi = channel::choi_of_map(xi_map, rm, rp);
        let mut kraus = channel::kraus_from_choi(&choi, rm, rp, tol)?;
        if kraus.is_empty() {
            kraus.push(CMat::zeros(rm, rp));
        }
        let xm = KrausMap { din: rm, dout: rp, kraus };

        for a in 0..n {
            for b in 0..n {
                let e = linalg::unit(n, n, a, b);
                let te = &t * &e * t.adjoint();
                for x in 0..rm {
                    for y in 0..rm {
                        let f = linalg::unit(rm, rm, x, y);
                        let want = sp.adjoint() * linalg::kron(&te, &xm.apply(&f)) * sp;
                        rec = rec.max(linalg::spectral_norm(&(lift(&e, &f) - want)));
                    }
                }
            }
        }
        t_maps.push(t);
        xi.push(xm);
    }

    let state_defect = (0..d)
        .map(|m| linalg::trace_norm_hermitian(&(xi[m].apply_pre(&rho[prev(m, d)]) - &rho[m])))
        .fold(0.0, f64::max);
    let transfers: Vec<CMat> = xi.iter().map(|x| x.transfer()).collect();
    let round_trip_peripheral = (0..d)
        .map(|m| {
            let mut acc = transfers[m].clone();
            for k in 1..d {
                acc = &transfers[(m + d * k - k) % d] * acc;
            }
            peripheral_of(&acc, tol)
        })
        .collect();

    Ok(ComponentData {
        period: d,
        projection: comp.projection.clone(),
        isometry: comp.isometry.clone(),
        cyclic_projections: comp.cycle.cyclic_projections.clone(),
        left_dim: n,
        right_dims,
        s_maps,
        t_maps,
        xi,
        rho,
        isomorphism_residual: iso_res,
        reconstruction_defect: rec,
        state_defect,
        round_trip_peripheral,
    })
}

/// `(1/n) tr_L` of an `(n·a) × (n·b)` matrix.
fn rect_partial_trace_left(x: &CMat, n: usize, a: usize, b: usize) -> CMat {
    let mut out = CMat::zeros(a, b);
    for k in 0..n {
        out += x.view((k * a, k * b), (a, b));
    }
    out / C64::new(n as f64, 0.0)
}

/// Kraus form of a component assembled from its block data.
#[derive(Debug, Clone)]
pub struct StructuredKraus {
    /// `V_k = Σ_m S_m*(T_m* ⊗ L_{m,k})S_{m−1}`, compressed to the component.
    pub channel: ChannelSpec,
    /// `L_{m,k}` (`r_m × r_{m−1}`), indexed `[m][k]`.
    pub blocks: Vec<Vec<CMat>>,
    /// Relative transfer-matrix distance to the restriction of `Φ`.
    pub residual: f64,
}

/// Structured Kraus operators of one component.
///
/// The `L_{m,k}` are read off a minimal Kraus representation of `Φ` itself:
/// independent Kraus lists for each `Ξ_m` reproduce `Φ` on every `B(K_m)` but
/// not on the blocks `Q_m B(H) Q_n`, `m ≠ n`, whose relative phases they lose.
pub fn structured_kraus(c: &ChannelSpec, cd: &ComponentData, tol: &Tolerances) -> Result<StructuredKraus> {
    let d = cd.period;
    let n = cd.left_dim;
    let w = &cd.isometry;
    let (_, minimal) = c.choi_and_minimal_kraus(tol)?;
    let mut blocks = vec![Vec::new(); d];
    let mut kraus = Vec::with_capacity(minimal.kraus.len());
    let mut residual: f64 = 0.0;
    for vk in &minimal.kraus {
        let mut v = CMat::zeros(c.dim, c.dim);
        for m in 0..d {
            let pm = prev(m, d);
            let (rm, rp) = (cd.right_dims[m], cd.right_dims[pm]);
            let block = &cd.s_maps[m] * vk * cd.s_maps[pm].adjoint();
            let untwisted = linalg::kron(&cd.t_maps[m], &linalg::identity(rm)) * &block;
            let l = rect_partial_trace_left(&untwisted, n, rm, rp);
            let product = linalg::kron(&cd.t_maps[m].adjoint(), &l);
            residual = residual.max(linalg::spectral_norm(&(block - &product)));
            v += cd.s_maps[m].adjoint() * product * &cd.s_maps[pm];
            blocks[m].push(l);
        }
        kraus.push(w.adjoint() * v * w);
    }
    let rebuilt = ChannelSpec::from_kraus_unchecked(kraus, &format!("{} (structured)", c.label))?;
    let target = c.compress(w, &c.label)?;
    residual = residual.max(numerics::rel_diff(&rebuilt.transfer().mat, &target.transfer().mat));
    if residual > 100.0 * tol.eq_tol {
        return Err(Error::ReconstructionMismatch { residual });
    }
    Ok(StructuredKraus { channel: rebuilt, blocks, residual })
}

/// Block data of the fixed-point algebra of one MFNC component.
#[derive(Debug, Clone)]
pub struct FixedBlockData {
    pub period: usize,
    pub left_dim: usize,
    pub right_dims: Vec<usize>,
    /// `T̃_m : K_0^L → K_m^L`.
    pub t_tilde: Vec<CMat>,
    /// `T : K_0^L ⊗ K^R → K`, rows ordered block by block (`m`, then `K_m^L ⊗ K_m^R`).
    pub t_global: CMat,
    /// `S*T` as a `D × (n·R)` isometry, `R = Σ_m r_m`; column `a·R + off_m + b`
    /// is `S_m*(T̃_m e_a ⊗ e_b)`.
    pub embedding: CMat,
    /// Eigenvalue of `T̃_0` for each block `j`.
    pub eigenvalues: Vec<C64>,
    /// `R_j` on `K_0^L`.
    pub spectral_projections: Vec<CMat>,
    /// Isometries onto `L_j = R_j K_0^L`.
    pub eigenspaces: Vec<CMat>,
    /// `σ = (1/d) Σ_m ρ_m ⊗ |m⟩⟨m|` on `K^R`.
    pub sigma: CMat,
    /// `P_j = S*T(R_j ⊗ I)T*S`.
    pub central_projections: Vec<CMat>,
    /// `Ψ_j` on `B(K^R)`.
    pub psi: Vec<ChannelSpec>,
    /// Distance between `F Z_i` and `S*T(⊕_j B(L_j) ⊗ I)T*S`.
    pub f_distance: f64,
    /// Worst mismatch between `P_j` and the minimal central projections of `F Z_i`.
    pub center_defect: f64,
    /// Worst residual of `Φ(S*T(A⊗B)T*S) = S*T(A⊗Ψ_j(B))T*S`.
    pub psi_residual: f64,
    /// Worst deviation of `Ψ_j` from `Ξ_m` (with index shift) on block-diagonal elements.
    pub psi_block_defect: f64,
    /// Distance between `N(Ψ_j)` and `span{I_m^R ⊗ |m⟩⟨m|}`.
    pub psi_dfa_distance: Vec<f64>,
    pub psi_periods: Vec<usize>,
}

impl FixedBlockData {
    fn total_right(&self) -> usize {
        self.right_dims.iter().sum()
    }

    /// `S*T(ω ⊗ σ)T*S` with `ω = Σ_j λ_j ω_j` and `ω_j` a state on `L_j`.
    pub fn invariant_state(&self, lambdas: &[f64], omegas: &[CMat]) -> Result<CMat> {
        let k = self.eigenspaces.len();
        if lambdas.len() != k || omegas.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: lambdas.len() });
        }
        let n = self.left_dim;
        let mut omega = CMat::zeros(n, n);
        for j in 0..k {
            let l = &self.eigenspaces[j];
            if omegas[j].nrows() != l.ncols() || omegas[j].ncols() != l.ncols() {
                return Err(Error::DimensionMismatch { expected: l.ncols(), found: omegas[j].nrows() });
            }
            omega += l * &omegas[j] * l.adjoint() * C64::new(lambdas[j], 0.0);
        }
        Ok(&self.embedding * linalg::kron(&omega, &self.sigma) * self.embedding.adjoint())
    }

    /// Trace distance from `xi` to the parametrized family (0 for members).
    pub fn family_residual(&self, xi: &CMat) -> f64 {
        let n = self.left_dim;
        let y = self.embedding.adjoint() * xi * &self.embedding;
        let raw = linalg::partial_trace_right(&y, n, self.total_right());
        let mut omega = CMat::zeros(n, n);
        for r in &self.spectral_projections {
            omega += r * &raw * r;
        }
        let rebuilt = &self.embedding * linalg::kron(&omega, &self.sigma) * self.embedding.adjoint();
        linalg::trace_norm_hermitian(&linalg::hermitian_part(&(xi - rebuilt)))
    }
}

/// Eigen-decomposition of a unitary (normal) matrix with clustered eigenvalues.
fn unitary_spectral_projections(u: &CMat, thr: f64) -> Vec<(C64, CMat)> {
    let (q, t) = linalg::schur(u);
    let vals: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    linalg::cluster(&vals, thr)
        .into_iter()
        .map(|g| {
            let mean = g.iter().map(|&i| vals[i]).sum::<C64>() / C64::new(g.len() as f64, 0.0);
            let mut l = CMat::zeros(u.nrows(), g.len());
            for (k, &i) in g.iter().enumerate() {
                l.set_column(k, &q.column(i));
            }
            (mean / mean.norm(), l)
        })
        .collect()
}

/// Fixed-point block structure of one MFNC component, with the restricted
/// channels `Ψ_j` and an invariant-state parametrization.
pub fn fixed_multiblock(
    c: &ChannelSpec,
    cd: &ComponentData,
    f: &OperatorAlgebra,
    seed: u64,
    tol: &Tolerances,
) -> Result<FixedBlockData> {
    let d = cd.period;
    let n = cd.left_dim;
    let dim = c.dim;
    let rs = &cd.right_dims;
    let big_r: usize = rs.iter().sum();
    let offs: Vec<usize> = rs.iter().scan(0, |acc, &r| {
        let o = *acc;
        *acc += r;
        Some(o)
    })
    .collect();

    let t_tilde: Vec<CMat> = (0..d)
        .map(|m| {
            let mut acc = cd.t_maps[0].clone();
            for k in (m + 1..d).rev() {
                acc = &cd.t_maps[k] * acc;
            }
            acc
        })
        .collect();

    let mut t_global = CMat::zeros(n * big_r, n * big_r);
    let mut embedding = CMat::zeros(dim, n * big_r);
    for m in 0..d {
        let rm = rs[m];
        for a in 0..n {
            for b in 0..rm {
                let col = a * big_r + offs[m] + b;
                for k in 0..n {
                    t_global[(n * offs[m] + k * rm + b, col)] = t_tilde[m][(k, a)];
                }
                let v = linalg::kron(&t_tilde[m].columns(a, 1).into_owned(), &linalg::unit(rm, 1, b, 0));
                embedding.set_column(col, &(cd.s_maps[m].adjoint() * v).column(0));
            }
        }
    }

    let mut blocks: Vec<(C64, CMat, CMat, CMat)> = unitary_spectral_projections(&t_tilde[0], 10.0 * tol.eq_tol)
        .into_iter()
        .map(|(lambda, l)| {
            let r = &l * l.adjoint();
            let p = &embedding * linalg::kron(&r, &linalg::identity(big_r)) * embedding.adjoint();
            (lambda, l, r, p)
        })
        .collect();
    blocks.sort_by(|a, b| numerics::projection_order(&a.3, &b.3));

    let mut sigma = CMat::zeros(big_r, big_r);
    for m in 0..d {
        sigma.view_mut((offs[m], offs[m]), (rs[m], rs[m])).copy_from(&(&cd.rho[m] / C64::new(d as f64, 0.0)));
    }

    // F restricted to the component against the predicted form
    let w = &cd.isometry;
    let zp = &cd.projection;
    let f_restricted: Vec<CMat> = f.basis().iter().map(|b| zp * b * zp).collect();
    let f_space = MatrixSubspace::span_of(dim, &f_restricted, tol.rank_tol);
    let mut predicted = Vec::new();
    for (_, l, _, _) in &blocks {
        for p in 0..l.ncols() {
            for q in 0..l.ncols() {
                let a = l.column(p) * l.column(q).adjoint();
                predicted.push(&embedding * linalg::kron(&a, &linalg::identity(big_r)) * embedding.adjoint());
            }
        }
    }
    let f_distance = numerics::subspace_distance(&f_space, &MatrixSubspace::span_of(dim, &predicted, tol.rank_tol))?;

    let mut central_projections = Vec::with_capacity(blocks.len());
    for (_, _, _, p) in &blocks {
        central_projections.push(numerics::round_projector(p, tol)?);
    }
    let compressed: Vec<CMat> = f_restricted.iter().map(|b| w.adjoint() * b * w).collect();
    let f_alg = OperatorAlgebra::trusted(MatrixSubspace::span_of(w.ncols(), &compressed, tol.rank_tol), tol);
    let f_struct = algebra::atomic_structure(&f_alg, seed, tol)?;
    let mut center_defect: f64 = if f_struct.blocks() == central_projections.len() { 0.0 } else { 1.0 };
    for p in &central_projections {
        let pc = w.adjoint() * p * w;
        let best = f_struct
            .central_projections
            .iter()
            .map(|q| linalg::spectral_norm(&(&pc - q)))
            .fold(f64::INFINITY, f64::min);
        center_defect = center_defect.max(best);
    }
    if center_defect > 100.0 * tol.eq_tol {
        return Err(Error::CenterMismatch { defect: center_defect });
    }

    let lift = |a: &CMat, b: &CMat| &embedding * linalg::kron(a, b) * embedding.adjoint();
    let mut psi = Vec::with_capacity(blocks.len());
    let mut psi_residual: f64 = 0.0;
    let mut psi_block_defect: f64 = 0.0;
    let mut psi_dfa_distance = Vec::with_capacity(blocks.len());
    let mut psi_periods = Vec::with_capacity(blocks.len());
    let block_units: Vec<CMat> = (0..d)
        .map(|m| {
            let mut e = CMat::zeros(big_r, big_r);
            e.view_mut((offs[m], offs[m]), (rs[m], rs[m])).copy_from(&linalg::identity(rs[m]));
            e
        })
        .collect();
    for (_, l, r, _) in &blocks {
        let lj = l.ncols() as f64;
        let psi_map = |b: &CMat| {
            let y = embedding.adjoint() * c.apply_unchecked(&lift(r, b)) * &embedding;
            let y = linalg::kron(r, &linalg::identity(big_r)) * y;
            linalg::partial_trace_left(&y, n, big_r) / C64::new(lj, 0.0)
        };
        let choi = channel::choi_of_map(psi_map, big_r, big_r);
        let kraus = channel::kraus_from_choi(&choi, big_r, big_r, tol)?;
        // Heisenberg Kraus operators are the adjoints of the `din × dout` Choi factors
        let kraus: Vec<CMat> = if kraus.is_empty() { vec![CMat::zeros(big_r, big_r)] } else { kraus };
        let pj = ChannelSpec::from_kraus_unchecked(kraus, &format!("{} (Psi)", c.label))?;

        for p in 0..l.ncols() {
            for q in 0..l.ncols() {
                let a = l.column(p) * l.column(q).adjoint();
                for x in 0..big_r {
                    for y in 0..big_r {
                        let b = linalg::unit(big_r, big_r, x, y);
                        let got = c.apply_unchecked(&lift(&a, &b));
                        let want = lift(&a, &pj.apply_unchecked(&b));
                        psi_residual = psi_residual.max(linalg::spectral_norm(&(got - want)));
                    }
                }
            }
        }
        for m in 0..d {
            let pm = prev(m, d);
            for x in 0..rs[m] {
                for y in 0..rs[m] {
                    let mut b = CMat::zeros(big_r, big_r);
                    b[(offs[m] + x, offs[m] + y)] = C64::new(1.0, 0.0);
                    let img = cd.xi[m].apply(&linalg::unit(rs[m], rs[m], x, y));
                    let mut want = CMat::zeros(big_r, big_r);
                    want.view_mut((offs[pm], offs[pm]), (rs[pm], rs[pm])).copy_from(&img);
                    psi_block_defect = psi_block_defect.max(linalg::spectral_norm(&(pj.apply_unchecked(&b) - want)));
                }
            }
        }

        let dfa = structure::dfa(&pj, tol)?;
        let expected = MatrixSubspace::span_of(big_r, &block_units, tol.rank_tol);
        psi_dfa_distance.push(numerics::subspace_distance(&dfa.algebra.space, &expected)?);
        let inv = structure::invariant_states(&pj, tol)?;
        let per = structure::peripheral_subalgebra(&pj, &inv, tol)?;
        psi_periods.push(period_irreducible(&pj, &per, tol)?.period);
        psi.push(pj);
    }

    Ok(FixedBlockData {
        period: d,
        left_dim: n,
        right_dims: rs.clone(),
        t_tilde,
        t_global,
        embedding,
        eigenvalues: blocks.iter().map(|b| b.0).collect(),
        eigenspaces: blocks.iter().map(|b| b.1.clone()).collect(),
        spectral_projections: blocks.iter().map(|b| b.2.clone()).collect(),
        sigma,
        central_projections,
        psi,
        f_distance,
        center_defect,
        psi_residual,
        psi_block_defect,
        psi_dfa_distance,
        psi_periods,
    })
}

/// One row of the power table.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub m: usize,
    pub fixed_dim: usize,
    pub gcd: usize,
    /// `dim F(Φᵐ) = 1` exactly when `gcd(m, d) = 1`.
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct PowerTable {
    pub period: usize,
    pub rows: Vec<PowerRow>,
    /// `subspace_distance(F(Φᵈ), span{Q_k})`.
    pub fd_distance: f64,
    /// No `n < d` has `F(Φⁿ) = N`.
    pub d_minimal: bool,
    /// Restriction of `Φᵈ` to each `Q_k B(H) Q_k` has a single peripheral eigenvalue.
    pub restrictions_ergodic: Vec<bool>,
}

impl PowerTable {
    pub fn all_pass(&self, tol: &Tolerances) -> bool {
        self.rows.iter().all(|r| r.pass)
            && self.fd_distance <= 10.0 * tol.eq_tol
            && self.d_minimal
            && self.restrictions_ergodic.iter().all(|&b| b)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn fixed_space_of(t: &CMat, d: usize, tol: &Tolerances) -> Result<MatrixSubspace> {
    let shifted = t - linalg::identity(t.nrows());
    numerics::kernel_basis(&shifted, d, tol)
}

/// Fixed points of the powers `Φᵐ`, `m = 1..=max(m_max, d)`, against the
/// cyclic resolution of an irreducible channel.
pub fn verify_power_fixed_points(
    c: &ChannelSpec,
    report: &CycleReport,
    m_max: usize,
    tol: &Tolerances,
) -> Result<PowerTable> {
    let dim = c.dim;
    let d = report.period;
    let t = c.transfer().mat;
    let n_space = MatrixSubspace::span_of(dim, &report.cyclic_projections, tol.rank_tol);
    let top = m_max.max(d);
    let mut rows = Vec::with_capacity(top);
    let mut power = linalg::identity(dim * dim);
    let mut fd_distance = 1.0;
    let mut d_minimal = true;
    let mut power_d = None;
    for m in 1..=top {
        power = &t * power;
        let fixed = fixed_space_of(&power, dim, tol)?;
        let g = gcd(m, d);
        rows.push(PowerRow { m, fixed_dim: fixed.dim(), gcd: g, pass: (fixed.dim() == 1) == (g == 1) });
        let dist = numerics::subspace_distance(&fixed, &n_space)?;
        if m < d && dist <= 10.0 * tol.eq_tol {
            d_minimal = false;
        }
        if m == d {
            fd_distance = dist;
            power_d = Some(power.clone());
        }
    }
    let power_d = power_d.expect("top ≥ d");
    let restrictions_ergodic = report
        .cyclic_projections
        .iter()
        .map(|q| {
            let w = range_isometry(q);
            let restricted = linalg::kron(&w.transpose(), &w.adjoint()) * &power_d * linalg::kron(&w.conjugate(), &w);
            let per = peripheral_of(&restricted, tol);
            per.len() == 1 && (per[0] - C64::new(1.0, 0.0)).norm() <= 10.0 * tol.eq_tol
        })
        .collect();
    Ok(PowerTable { period: d, rows, fd_distance, d_minimal, restrictions_ergodic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oqrw;
    use crate::random;

    fn analyze(c: &ChannelSpec, tol: &Tolerances) -> (PeripheralData, CycleReport) {
        let inv = structure::invariant_states(c, tol).unwrap();
        let p = structure::peripheral_subalgebra(c, &inv, tol).unwrap();
        let r = period_irreducible(c, &p, tol).unwrap();
        (p, r)
    }

    #[test]
    fn identity_has_period_one() {
        let tol = Tolerances::default();
        let c = ChannelSpec::from_kraus(vec![linalg::identity(2)], &tol).unwrap();
        let inv = structure::invariant_states(&c, &tol).unwrap();
        let p = structure::peripheral_subalgebra(&c, &inv, &tol).unwrap();
        assert!(matches!(period_irreducible(&c, &p, &tol), Err(Error::NotSimple { .. })));
        let f = structure::fixed_points(&c, &tol).algebra(&tol).unwrap();
        let n = structure::dfa(&c, &tol).unwrap().algebra;
        let dec = mfnc_decompose(&c, &f, &n, 0, &tol).unwrap();
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.components[0].cycle.period, 1);
    }

    #[test]
    fn random_mixture_is_aperiodic() {
        let tol = Tolerances::default();
        let c = random::unitary_mixture(3, 2, &mut random::rng(7));
        let (_, r) = analyze(&c, &tol);
        assert_eq!(r.period, 1);
        assert!(numerics::rel_diff(&r.cyclic_projections[0], &linalg::identity(3)) < 1e-12);
    }

    #[test]
    fn pauli_walk_three_cycles() {
        let tol = Tolerances::default();
        let c = oqrw::pauli_walk(3, 0.5, &tol).unwrap().to_channel();
        let (_, r) = analyze(&c, &tol);
        assert_eq!(r.period, 3);
        assert!(r.numbering_defect < 1e-10);
        let u3 = &r.cycle_unitary * &r.cycle_unitary * &r.cycle_unitary;
        assert!(numerics::rel_diff(&u3, &linalg::identity(6)) < 1e-10);
        let table = verify_power_fixed_points(&c, &r, 6, &tol).unwrap();
        assert!(table.all_pass(&tol), "{table:?}");
        let dims: Vec<usize> = table.rows.iter().map(|r| r.fixed_dim).collect();
        assert_eq!(dims, vec![1, 1, 3, 1, 1, 3]);
    }

    #[test]
    fn direct_sum_has_two_components() {
        let tol = Tolerances::default();
        let a = oqrw::pauli_walk(3, 0.5, &tol).unwrap().to_channel();
        let b = oqrw::pauli_walk(3, 0.3, &tol).unwrap().to_channel();
        let c = channel::direct_sum(&a, &b);
        let f = structure::fixed_points(&c, &tol).algebra(&tol).unwrap();
        let n = structure::dfa(&c, &tol).unwrap().algebra;
        let dec = mfnc_decompose(&c, &f, &n, 0, &tol).unwrap();
        assert_eq!(dec.components.len(), 2);
        for comp in &dec.components {
            assert_eq!(comp.cycle.period, 3);
            assert!(comp.cycle.numbering_defect < 1e-10);
            assert!(numerics::rel_diff(&comp.cycle.support(), &comp.projection) < 1e-10);
        }
    }

    #[test]
    fn cyclic_shift_structured_kraus() {
        let tol = Tolerances::default();
        let w = oqrw::cyclic_shift(&oqrw::random_unitaries(3, 2, 5), &tol).unwrap();
        let c = w.to_channel();
        let f = structure::fixed_points(&c, &tol).algebra(&tol).unwrap();
        let inv = structure::invariant_states(&c, &tol).unwrap();
        let p = structure::peripheral_subalgebra(&c, &inv, &tol).unwrap();
        let n = OperatorAlgebra::from_subspace(p.m_r.clone(), &tol).unwrap();
        let dec = mfnc_decompose(&c, &f, &n, 0, &tol).unwrap();
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.components[0].cycle.period, 3);
        let e_n = structure::e_n_expectation(&p, 0, &tol).unwrap();
        let cd = component_decompose(&c, &dec.components[0], &e_n, &tol).unwrap();
        assert_eq!(cd.right_dims, vec![1, 1, 1]);
        assert!(cd.reconstruction_defect < 1e-10);
        assert!(cd.round_trips_ergodic(&tol));
        let sk = structured_kraus(&c, &cd, &tol).unwrap();
        assert_eq!(sk.channel.kraus.len(), 3);
        assert!(sk.residual < 1e-10);
        let fb = fixed_multiblock(&c, &cd, &f, 0, &tol).unwrap();
        assert!(fb.f_distance < 1e-8 && fb.psi_residual < 1e-8 && fb.psi_block_defect < 1e-8);
        assert!(fb.psi_periods.iter().all(|&q| q == 3));
    }
}
