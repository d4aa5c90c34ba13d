//! Fixed points, multiplicative domain, decoherence-free algebra, peripheral
//! spectrum, invariant states and the decoherence spectral gap of a channel.

use crate::algebra::{self, ConditionalExpectation, OperatorAlgebra};
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c};
use crate::numerics::{self, kernel_basis, MatrixSubspace, SpanBuilder, Tolerances};
use crate::random;
use crate::{C64, CMat};

/// Largest `D` for which [`dfa`] also runs the word-commutant cross-check.
pub const WORD_CHECK_MAX_DIM: usize = 12;

/// Fixed points of `Φ`; an algebra whenever a faithful invariant state exists.
#[derive(Debug, Clone)]
pub struct FixedPoints {
    pub space: MatrixSubspace,
    pub is_algebra: bool,
    pub closure_defect: f64,
}

impl FixedPoints {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn algebra(&self, tol: &Tolerances) -> Option<OperatorAlgebra> {
        self.is_algebra.then(|| OperatorAlgebra::trusted(self.space.clone(), tol))
    }
}

pub fn fixed_points(c: &ChannelSpec, tol: &Tolerances) -> FixedPoints {
    let d = c.dim;
    let t = c.transfer().mat - linalg::identity(d * d);
    let space = kernel_basis(&t, d, tol).expect("square transfer matrix");
    let probe = OperatorAlgebra { space: space.clone(), contains_identity: true, star_closed: true };
    let closure_defect = probe.closure_defect(0);
    FixedPoints { is_algebra: closure_defect <= 100.0 * tol.eq_tol, space, closure_defect }
}

/// `{V_k, V_k*}′`, which equals the fixed points under a faithful invariant state.
pub fn fixed_points_commutant(
    c: &ChannelSpec,
    inv: &InvariantStateReport,
    tol: &Tolerances,
) -> Result<OperatorAlgebra> {
    if !inv.faithful {
        return Err(Error::NoFaithfulInvariantState);
    }
    algebra::commutant(c.dim, &c.kraus, tol)
}

fn kraus_pairs(c: &ChannelSpec) -> Vec<CMat> {
    let mut out = Vec::with_capacity(c.kraus.len() * c.kraus.len());
    for a in &c.kraus {
        for b in &c.kraus {
            out.push(a * b.adjoint());
        }
    }
    out
}

/// `{V_j V_k*}′`.
pub fn multiplicative_domain(c: &ChannelSpec, tol: &Tolerances) -> OperatorAlgebra {
    algebra::commutant(c.dim, &kraus_pairs(c), tol).expect("Kraus operators are square")
}

/// `max(‖Φ(A*A) − Φ(A)*Φ(A)‖, ‖Φ(AA*) − Φ(A)Φ(A)*‖) / ‖A‖²`.
pub fn multiplicative_defect(c: &ChannelSpec, a: &CMat) -> f64 {
    let fa = c.apply_unchecked(a);
    let l = c.apply_unchecked(&(a.adjoint() * a)) - fa.adjoint() * &fa;
    let r = c.apply_unchecked(&(a * a.adjoint())) - &fa * fa.adjoint();
    let n = a.norm().powi(2).max(f64::MIN_POSITIVE);
    l.norm().max(r.norm()) / n
}

/// Span of `{V_I V_J* : |I| = |J| = n}`.
pub fn word_span(c: &ChannelSpec, n: usize, tol: &Tolerances) -> MatrixSubspace {
    let d = c.dim;
    let mut current = MatrixSubspace::span_of(d, &kraus_pairs(c), tol.rank_tol);
    for _ in 1..n {
        let mut next = SpanBuilder::new(d, tol.rank_tol);
        let mut cands = Vec::new();
        for x in &current.basis {
            for vi in &c.kraus {
                for vj in &c.kraus {
                    cands.push(vi * x * vj.adjoint());
                }
            }
        }
        next.extend(&cands);
        current = next.subspace();
    }
    current
}

/// `M(Φⁿ)` as the commutant of the length-`n` words.
pub fn multiplicative_domain_power(c: &ChannelSpec, n: usize, tol: &Tolerances) -> OperatorAlgebra {
    let w = word_span(c, n.max(1), tol);
    algebra::commutant(c.dim, &w.basis, tol).expect("square words")
}

/// Result of the decoherence-free algebra computation.
#[derive(Debug, Clone)]
pub struct DfaReport {
    pub algebra: OperatorAlgebra,
    /// `dim N_k` for `N_k = ∩_{n≤k} M(Φⁿ)`, starting at `k = 1`.
    pub chain_dims: Vec<usize>,
    /// Smallest `k` with `N_k = N_{k+1}`.
    pub stabilization_index: usize,
    /// Dimensions of the growing word span (word-commutant route), when run.
    pub word_dims: Option<Vec<usize>>,
    /// Distance between the two routes, when the word route was run.
    pub word_distance: Option<f64>,
}

/// Intersection chain `N_1 = M(Φ)`, `N_{k+1} = {A ∈ M(Φ) : Φ(A) ∈ N_k}`.
pub fn dfa_chain(c: &ChannelSpec, tol: &Tolerances) -> Result<(OperatorAlgebra, Vec<usize>)> {
    let d = c.dim;
    let m = multiplicative_domain(c, tol).space.columns();
    let t = c.transfer().mat;
    let cutoff = tol.rank_tol * linalg::spectral_norm(&t);
    let tm = &t * &m;
    let mut current = m.clone();
    let mut dims = vec![current.ncols()];
    for _ in 0..(d * d) {
        let image = &tm - &current * (current.adjoint() * &tm);
        let next = numerics::restrict_kernel(&m, &image, cutoff);
        let stable = next.ncols() == current.ncols();
        current = next;
        if stable {
            let alg = OperatorAlgebra::trusted(MatrixSubspace::from_columns(d, &current), tol);
            return Ok((alg, dims));
        }
        dims.push(current.ncols());
    }
    Err(Error::NoStabilization { dims })
}

/// Commutant of `U_∞ = Σ_n span{V_I V_J* : |I| = |J| = n}`, grown until the span stops changing.
pub fn dfa_word_commutant(c: &ChannelSpec, tol: &Tolerances) -> Result<(OperatorAlgebra, Vec<usize>)> {
    let d = c.dim;
    let mut span = SpanBuilder::new(d, tol.rank_tol);
    let mut frontier = span.extend(&kraus_pairs(c));
    let mut dims = vec![span.dim()];
    let mut rounds = 0;
    while !frontier.is_empty() && !span.is_full() {
        rounds += 1;
        if rounds > d * d {
            return Err(Error::NoStabilization { dims });
        }
        let mut cands = Vec::with_capacity(frontier.len() * c.kraus.len().pow(2));
        for x in &frontier {
            for vi in &c.kraus {
                let vx = vi * x;
                for vj in &c.kraus {
                    cands.push(&vx * vj.adjoint());
                }
            }
        }
        frontier = span.extend(&cands);
        if !frontier.is_empty() {
            dims.push(span.dim());
        }
    }
    let words = span.subspace();
    Ok((algebra::commutant(d, &words.basis, tol)?, dims))
}

/// Decoherence-free algebra via the intersection chain, cross-checked by the
/// word-commutant route for `D ≤ WORD_CHECK_MAX_DIM`.
pub fn dfa(c: &ChannelSpec, tol: &Tolerances) -> Result<DfaReport> {
    let (alg, chain_dims) = dfa_chain(c, tol)?;
    let stabilization_index = chain_dims.len();
    let (word_dims, word_distance) = if c.dim <= WORD_CHECK_MAX_DIM {
        let (w, dims) = dfa_word_commutant(c, tol)?;
        (Some(dims), Some(numerics::subspace_distance(&alg.space, &w.space)?))
    } else {
        (None, None)
    };
    Ok(DfaReport { algebra: alg, chain_dims, stabilization_index, word_dims, word_distance })
}

/// Spectral data of the preadjoint at eigenvalue one.
#[derive(Debug, Clone)]
pub struct InvariantStateReport {
    /// Basis of `{ρ : Φ_*(ρ) = ρ}`.
    pub basis: MatrixSubspace,
    pub rho_max: CMat,
    pub faithful: bool,
    pub min_eigenvalue: f64,
    /// Spectral projection `E_F` onto the fixed points (transfer form).
    pub e_f_transfer: CMat,
}

/// Spectral projection `R (L*R)⁻¹ L*` onto the eigenvalue-`λ` eigenspace,
/// with right eigenvectors `R` and left eigenvectors `L`.
fn eigen_projection(t: &CMat, lambda: C64, cutoff_extra: f64, tol: &Tolerances) -> (CMat, CMat, CMat) {
    let n = t.nrows();
    let shifted = t - linalg::identity(n) * lambda;
    let scale = linalg::spectral_norm(&shifted).max(1.0);
    let cutoff = tol.rank_tol * scale + cutoff_extra;
    let r = linalg::null_space(&shifted, cutoff);
    let l = linalg::null_space(&shifted.adjoint(), cutoff);
    let proj = if r.ncols() == l.ncols() && r.ncols() > 0 {
        let g = l.adjoint() * &r;
        match g.try_inverse() {
            Some(gi) => &r * gi * l.adjoint(),
            None => CMat::zeros(n, n),
        }
    } else {
        CMat::zeros(n, n)
    };
    (proj, r, l)
}

pub fn invariant_states(c: &ChannelSpec, tol: &Tolerances) -> Result<InvariantStateReport> {
    let d = c.dim;
    let t = c.transfer().mat;
    let (e_f, r, l) = eigen_projection(&t, c64(1.0, 0.0), 0.0, tol);
    if r.ncols() == 0 || r.ncols() != l.ncols() {
        return Err(Error::NoInvariantState);
    }
    let basis = MatrixSubspace::from_columns(d, &l);
    let seed = linalg::identity(d) * c64(1.0 / d as f64, 0.0);
    let raw = linalg::unvec((e_f.adjoint() * linalg::vec_of(&seed)).as_slice(), d);
    let (vals, vecs) = linalg::eigh(&linalg::hermitian_part(&raw));
    let clipped: Vec<f64> = vals.iter().map(|&v| if v <= tol.rank_tol { 0.0 } else { v }).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::NoInvariantState);
    }
    let diag = nalgebra::DVector::from_iterator(d, clipped.iter().map(|&v| c64(v / total, 0.0)));
    let rho = &vecs * CMat::from_diagonal(&diag) * vecs.adjoint();
    let min_eigenvalue = clipped.iter().cloned().fold(f64::INFINITY, f64::min) / total;
    Ok(InvariantStateReport {
        basis,
        faithful: min_eigenvalue > 10.0 * tol.rank_tol,
        min_eigenvalue,
        rho_max: rho,
        e_f_transfer: e_f,
    })
}

fn c64(re: f64, im: f64) -> C64 {
    c(re, im)
}

pub fn is_irreducible(c: &ChannelSpec, inv: &InvariantStateReport, tol: &Tolerances) -> Result<bool> {
    if !inv.faithful {
        return Err(Error::NoFaithfulInvariantState);
    }
    Ok(fixed_points(c, tol).dim() == 1)
}

/// A cluster of numerically equal peripheral eigenvalues.
#[derive(Debug, Clone)]
pub struct PeripheralCluster {
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone)]
pub struct PeripheralData {
    /// One entry per peripheral eigenmatrix (values repeated by multiplicity).
    pub eigenvalues: Vec<C64>,
    pub eigenmatrices: Vec<CMat>,
    pub clusters: Vec<PeripheralCluster>,
    pub e_n_transfer: CMat,
    pub diagonalizable: bool,
    /// Span of the peripheral eigenmatrices.
    pub m_r: MatrixSubspace,
    /// Full spectrum of the transfer matrix.
    pub spectrum: Vec<C64>,
    /// Eigenvalues inside `1 − 100·band < |λ| ≤ 1 − band`, reported as a warning.
    pub near_band: Vec<C64>,
}

impl PeripheralData {
    pub fn apply_e_n(&self, x: &CMat) -> CMat {
        let d = x.nrows();
        linalg::unvec((&self.e_n_transfer * linalg::vec_of(x)).as_slice(), d)
    }

    /// Largest modulus among non-peripheral eigenvalues (0 if there are none).
    pub fn max_nonperipheral(&self, tol: &Tolerances) -> f64 {
        self.spectrum
            .iter()
            .map(|z| z.norm())
            .filter(|&r| r <= 1.0 - tol.peripheral_band)
            .fold(0.0, f64::max)
    }
}

pub fn peripheral_subalgebra(
    c: &ChannelSpec,
    inv: &InvariantStateReport,
    tol: &Tolerances,
) -> Result<PeripheralData> {
    if !inv.faithful {
        return Err(Error::NoFaithfulInvariantState);
    }
    let d = c.dim;
    let t = c.transfer().mat;
    let spectrum = linalg::eigenvalues(&t);
    let periph: Vec<C64> =
        spectrum.iter().cloned().filter(|z| z.norm() > 1.0 - tol.peripheral_band).collect();
    let near_band = spectrum
        .iter()
        .cloned()
        .filter(|z| {
            let r = z.norm();
            r <= 1.0 - tol.peripheral_band && r > 1.0 - 100.0 * tol.peripheral_band
        })
        .collect();
    let groups = linalg::cluster(&periph, 10.0 * tol.eq_tol);
    let mut clusters = Vec::new();
    let mut e_n = CMat::zeros(d * d, d * d);
    let mut eigenvalues = Vec::new();
    let mut eigenmatrices = Vec::new();
    let mut all_right = Vec::new();
    for g in &groups {
        let mean = g.iter().map(|&i| periph[i]).sum::<C64>() / c64(g.len() as f64, 0.0);
        // project onto the unit circle: peripheral eigenvalues of a Schwarz map are unimodular
        let value = mean / mean.norm();
        let spread = g.iter().map(|&i| (periph[i] - value).norm()).fold(0.0, f64::max);
        let (proj, r, l) = eigen_projection(&t, value, 10.0 * spread, tol);
        let geometric = r.ncols();
        if geometric < g.len() || l.ncols() != geometric {
            return Err(Error::PeripheralJordanBlock {
                re: value.re,
                im: value.im,
                algebraic: g.len(),
                geometric,
            });
        }
        e_n += proj;
        for k in 0..geometric {
            eigenvalues.push(value);
            eigenmatrices.push(linalg::unvec(r.column(k).as_slice(), d));
            all_right.push(linalg::unvec(r.column(k).as_slice(), d));
        }
        clusters.push(PeripheralCluster { value, algebraic: g.len(), geometric });
    }
    let m_r = MatrixSubspace::span_of(d, &all_right, tol.rank_tol);
    Ok(PeripheralData {
        eigenvalues,
        eigenmatrices,
        clusters,
        e_n_transfer: e_n,
        diagonalizable: true,
        m_r,
        spectrum,
        near_band,
    })
}

/// `Ker E_N`.
pub fn stable_subspace(p: &PeripheralData, tol: &Tolerances) -> MatrixSubspace {
    let n = p.e_n_transfer.nrows();
    let d = (n as f64).sqrt().round() as usize;
    kernel_basis(&p.e_n_transfer, d, tol).unwrap_or_else(|_| MatrixSubspace::zero(d))
}

/// `E_N` as a conditional expectation onto the (algebra) span of peripheral eigenmatrices.
pub fn e_n_expectation(p: &PeripheralData, seed: u64, tol: &Tolerances) -> Result<ConditionalExpectation> {
    let alg = OperatorAlgebra::from_subspace(p.m_r.clone(), tol)?;
    expectation_from_transfer(&alg, &p.e_n_transfer, seed, tol)
}

/// Wraps a known conditional-expectation transfer matrix with its block data.
pub fn expectation_from_transfer(
    alg: &OperatorAlgebra,
    transfer: &CMat,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConditionalExpectation> {
    let structure = algebra::atomic_structure(alg, seed, tol)?;
    let block_states = algebra::extract_block_states(&structure, transfer);
    Ok(ConditionalExpectation {
        transfer: transfer.clone(),
        range: alg.clone(),
        structure,
        block_states,
    })
}

/// Cross-check of the spectral `E_F` against ergodic averages.
#[derive(Debug, Clone)]
pub struct CesaroReport {
    /// Spectral projection onto the fixed points.
    pub e_f_transfer: CMat,
    /// Relative deviation of the plain Cesàro mean `(1/n)Σ_{k<n} Φᵏ` from `E_F` on the probes.
    pub cesaro_discrepancy: f64,
    pub cesaro_steps: usize,
    /// Same for the smoothly windowed ergodic average.
    pub windowed_discrepancy: f64,
    pub windowed_steps: usize,
    /// `E_F` with block data, when the fixed points form an algebra.
    pub expectation: Option<ConditionalExpectation>,
}

fn bump(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 { 0.0 } else { (-1.0 / (x * (1.0 - x))).exp() }
}

/// Relative column-wise deviation `max_k ‖a_k − b_k‖ / ‖b_k‖` (or absolute when `b_k = 0`).
fn probe_deviation(a: &CMat, b: &CMat, probes: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..probes.ncols() {
        let scale = probes.column(k).norm().max(1e-300);
        worst = worst.max((a.column(k) - b.column(k)).norm() / scale);
    }
    worst
}

fn windowed_average(t: &CMat, probes: &CMat, n: usize) -> CMat {
    let w: Vec<f64> = (0..n).map(|k| bump((k as f64 + 0.5) / n as f64)).collect();
    let total: f64 = w.iter().sum();
    let mut x = probes.clone();
    let mut acc = CMat::zeros(probes.nrows(), probes.ncols());
    for wk in w {
        if wk > 0.0 {
            acc += &x * c64(wk / total, 0.0);
        }
        x = t * x;
    }
    acc
}

/// `E_F` by spectral projection, cross-checked against the plain Cesàro mean
/// and a smoothly windowed ergodic average on random probes.
///
/// The plain mean converges at rate `1/n` whenever `Φ` has peripheral
/// eigenvalues other than one, so the convergence verdict is taken from the
/// windowed average, whose error decays faster than any power of `n`.
pub fn cesaro_expectation(c: &ChannelSpec, max_n: usize, seed: u64, tol: &Tolerances) -> Result<CesaroReport> {
    let d = c.dim;
    let t = c.transfer().mat;
    let (e_f, r, _) = eigen_projection(&t, c64(1.0, 0.0), 0.0, tol);
    let mut rng = random::rng(seed);
    let p = (d * d).min(4);
    let probes = random::ginibre(d * d, p, &mut rng);
    let target = &e_f * &probes;

    let mut x = probes.clone();
    let mut sum = CMat::zeros(d * d, p);
    let mut mean = CMat::zeros(d * d, p);
    let mut steps = 0;
    for n in 1..=max_n.max(1) {
        sum += &x;
        let next = &sum / c64(n as f64, 0.0);
        let increment = probe_deviation(&next, &mean, &probes);
        mean = next;
        steps = n;
        if n > 1 && increment <= tol.eq_tol {
            break;
        }
        x = &t * x;
    }
    let cesaro_discrepancy = probe_deviation(&mean, &target, &probes);

    let mut n = 16usize.min(max_n.max(1));
    let mut prev = windowed_average(&t, &probes, n);
    let mut windowed_steps = n;
    while n < max_n {
        n = (2 * n).min(max_n);
        let cur = windowed_average(&t, &probes, n);
        let change = probe_deviation(&cur, &prev, &probes);
        prev = cur;
        windowed_steps = n;
        if change <= tol.eq_tol {
            break;
        }
    }
    let windowed_discrepancy = probe_deviation(&prev, &target, &probes);
    if windowed_discrepancy > 100.0 * tol.eq_tol {
        return Err(Error::CesaroNotConverged { discrepancy: windowed_discrepancy, steps: windowed_steps });
    }
    let fixed = MatrixSubspace::from_columns(d, &linalg::range_basis(&r, tol.rank_tol));
    let expectation = OperatorAlgebra::from_subspace(fixed, tol)
        .ok()
        .and_then(|alg| expectation_from_transfer(&alg, &e_f, seed, tol).ok());
    Ok(CesaroReport {
        e_f_transfer: e_f,
        cesaro_discrepancy,
        cesaro_steps: steps,
        windowed_discrepancy,
        windowed_steps,
        expectation,
    })
}

/// The `L²(ρ)` geometry `⟨x, y⟩_ρ = tr(ρ x* y)`.
#[derive(Debug, Clone)]
pub struct L2Structure {
    pub rho: CMat,
    /// Gram operator `ρᵀ ⊗ I` on vectorized matrices.
    pub gram: CMat,
    sqrt_rho: CMat,
    inv_sqrt_rho: CMat,
}

impl L2Structure {
    pub fn new(rho: &CMat, tol: &Tolerances) -> Result<Self> {
        let d = rho.nrows();
        let min = linalg::eigh(rho).0.first().cloned().unwrap_or(0.0);
        if min <= tol.rank_tol {
            return Err(Error::NoFaithfulInvariantState);
        }
        let sqrt_rho = linalg::hermitian_fn(rho, f64::sqrt);
        let inv_sqrt_rho = linalg::hermitian_fn(rho, |x| 1.0 / x.sqrt());
        let gram = linalg::kron(&rho.transpose(), &linalg::identity(d));
        Ok(L2Structure { rho: rho.clone(), gram, sqrt_rho, inv_sqrt_rho })
    }

    pub fn inner(&self, x: &CMat, y: &CMat) -> C64 {
        (&self.rho * x.adjoint() * y).trace()
    }

    pub fn norm(&self, x: &CMat) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// `G^{1/2} M G^{-1/2}`, whose spectral norm is the `L²(ρ)` operator norm of `M`.
    pub fn similar(&self, m: &CMat) -> CMat {
        let d = self.rho.nrows();
        let id = linalg::identity(d);
        let g = linalg::kron(&self.sqrt_rho.transpose(), &id);
        let gi = linalg::kron(&self.inv_sqrt_rho.transpose(), &id);
        g * m * gi
    }

    pub fn operator_norm(&self, m: &CMat) -> f64 {
        linalg::spectral_norm(&self.similar(m))
    }
}

#[derive(Debug, Clone)]
pub struct GapReport {
    /// `min_{n ≤ horizon} −(1/n) ln ‖Φⁿ(id − E_N)‖_ρ`.
    pub eps_finite: f64,
    /// `−ln max{|λ| : λ non-peripheral}`.
    pub eps_asymptotic: f64,
    pub horizon: usize,
    pub norms: Vec<f64>,
    /// Set when `eps_finite < −eq_tol`, i.e. no uniform exponential bound at this horizon.
    pub no_uniform_bound: bool,
    pub max_nonperipheral: f64,
}

pub fn decoherence_gap(
    c: &ChannelSpec,
    p: &PeripheralData,
    l2: &L2Structure,
    max_n: usize,
    tol: &Tolerances,
) -> Result<GapReport> {
    let d = c.dim;
    let t = l2.similar(&c.transfer().mat);
    let mut y = l2.similar(&(linalg::identity(d * d) - &p.e_n_transfer));
    let mut norms = Vec::with_capacity(max_n);
    let mut eps_finite = f64::INFINITY;
    for n in 1..=max_n {
        y = &t * y;
        let nrm = linalg::spectral_norm(&y);
        norms.push(nrm);
        let rate = if nrm <= f64::MIN_POSITIVE { f64::INFINITY } else { -nrm.ln() / n as f64 };
        eps_finite = eps_finite.min(rate);
    }
    let max_nonperipheral = p.max_nonperipheral(tol);
    let eps_asymptotic = asymptotic_rate(max_nonperipheral, tol);
    Ok(GapReport {
        eps_finite,
        eps_asymptotic,
        horizon: max_n,
        norms,
        no_uniform_bound: eps_finite < -tol.eq_tol,
        max_nonperipheral,
    })
}

/// `−ln r`, with moduli at or below `rank_tol` treated as an exact zero (rate `+∞`).
pub fn asymptotic_rate(max_nonperipheral: f64, tol: &Tolerances) -> f64 {
    if max_nonperipheral <= tol.rank_tol { f64::INFINITY } else { -max_nonperipheral.ln() }
}
