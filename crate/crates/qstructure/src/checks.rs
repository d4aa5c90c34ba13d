//! Property residuals shared by the verification front end and the test suites.
//!
//! Every function returns a nonnegative number that is zero for an exact
//! result; callers compare it against their own threshold.

use crate::algebra::OperatorAlgebra;
use crate::channel::{self, ChannelSpec};
use crate::linalg;
use crate::numerics::{MatrixSubspace, Tolerances};
use crate::random;
use crate::structure::{self, L2Structure, PeripheralData};
use crate::{C64, CMat};

fn apply_transfer(t: &CMat, x: &CMat) -> CMat {
    linalg::unvec((t * linalg::vec_of(x)).as_slice(), x.nrows())
}

/// `‖Σ V_k*V_k − I‖`.
pub fn unitality_defect(c: &ChannelSpec) -> f64 {
    let sum = c.kraus.iter().fold(CMat::zeros(c.dim, c.dim), |acc, v| acc + v.adjoint() * v);
    linalg::spectral_norm(&(sum - linalg::identity(c.dim)))
}

/// Negative part of the smallest Choi eigenvalue of the map with transfer matrix `t`.
pub fn cp_defect(t: &CMat, d: usize) -> f64 {
    let choi = channel::choi_of_map(|x| apply_transfer(t, x), d, d);
    let min = linalg::eigh(&linalg::hermitian_part(&choi)).0.first().cloned().unwrap_or(0.0);
    (-min).max(0.0)
}

/// Axioms of a conditional expectation `E` onto `range`, relative to `Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationDefects {
    pub idempotence: f64,
    pub unitality: f64,
    pub positivity: f64,
    pub commutation: f64,
    /// `max ‖E(b) − b‖` over the basis of the range.
    pub range_identity: f64,
    /// `E(AXB) = A E(X) B` on sampled `A, B` in the range.
    pub module_property: f64,
}

impl ExpectationDefects {
    pub fn worst(&self) -> f64 {
        [
            self.idempotence,
            self.unitality,
            self.positivity,
            self.commutation,
            self.range_identity,
            self.module_property,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn expectation_defects(
    e: &CMat,
    phi: &CMat,
    range: &OperatorAlgebra,
    samples: usize,
    seed: u64,
) -> ExpectationDefects {
    let d = range.ambient_dim();
    let id = linalg::identity(d);
    let idempotence = linalg::spectral_norm(&(e * e - e));
    let unitality = linalg::spectral_norm(&(apply_transfer(e, &id) - &id));
    let positivity = cp_defect(e, d);
    let commutation = linalg::spectral_norm(&(e * phi - phi * e));
    let range_identity = range
        .basis()
        .iter()
        .map(|b| linalg::frob(&(apply_transfer(e, b) - b)))
        .fold(0.0, f64::max);
    let mut rng = random::rng(seed);
    let mut module_property: f64 = 0.0;
    for _ in 0..samples {
        let a = range.random_element(&mut rng);
        let b = range.random_element(&mut rng);
        let x = random::ginibre(d, d, &mut rng);
        let lhs = apply_transfer(e, &(&a * &x * &b));
        let rhs = &a * apply_transfer(e, &x) * &b;
        let scale = linalg::frob(&a) * linalg::frob(&x) * linalg::frob(&b);
        module_property = module_property.max(linalg::frob(&(lhs - rhs)) / scale.max(1e-300));
    }
    ExpectationDefects { idempotence, unitality, positivity, commutation, range_identity, module_property }
}

/// `max ‖Φ(XB) − Φ(X)Φ(B)‖` and the mirrored product, for `B` in `alg` and random `X`.
pub fn multiplicativity_defect(c: &ChannelSpec, alg: &OperatorAlgebra, samples: usize, seed: u64) -> f64 {
    let d = c.dim;
    let t = c.transfer().mat;
    let mut rng = random::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let b = alg.random_element(&mut rng);
        let x = random::ginibre(d, d, &mut rng);
        let (fb, fx) = (apply_transfer(&t, &b), apply_transfer(&t, &x));
        let scale = (linalg::frob(&b) * linalg::frob(&x)).max(1e-300);
        let r1 = linalg::frob(&(apply_transfer(&t, &(&x * &b)) - &fx * &fb));
        let r2 = linalg::frob(&(apply_transfer(&t, &(&b * &x)) - &fb * &fx));
        worst = worst.max(r1.max(r2) / scale);
    }
    worst
}

/// How far `Φ|_N` is from a `*`-automorphism of `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutomorphismDefects {
    /// Largest component of `Φ(b)` outside `N`, over the basis.
    pub leakage: f64,
    /// `1 − σ_min` of the image coefficients, rescaled by `σ_max`; zero for a bijection.
    pub injectivity: f64,
    /// Multiplicativity on sampled pairs inside `N`.
    pub multiplicativity: f64,
}

pub fn automorphism_defects(c: &ChannelSpec, n: &OperatorAlgebra, samples: usize, seed: u64) -> AutomorphismDefects {
    let t = c.transfer().mat;
    let k = n.dim();
    let basis = n.space.columns();
    let image = &t * &basis;
    let coeffs = basis.adjoint() * &image;
    let leakage = (0..k)
        .map(|j| (image.column(j) - &basis * coeffs.column(j)).norm())
        .fold(0.0, f64::max);
    let injectivity = if k == 0 {
        0.0
    } else {
        let (_, sv, _) = linalg::svd(&coeffs);
        let max = sv.first().cloned().unwrap_or(0.0);
        let min = sv.last().cloned().unwrap_or(0.0);
        if max == 0.0 { 1.0 } else { 1.0 - min / max }
    };
    let mut rng = random::rng(seed);
    let mut multiplicativity: f64 = 0.0;
    for _ in 0..samples {
        let a = n.random_element(&mut rng);
        let b = n.random_element(&mut rng);
        let lhs = apply_transfer(&t, &(&a * &b));
        let rhs = apply_transfer(&t, &a) * apply_transfer(&t, &b);
        let scale = (linalg::frob(&a) * linalg::frob(&b)).max(1e-300);
        multiplicativity = multiplicativity.max(linalg::frob(&(lhs - rhs)) / scale);
    }
    AutomorphismDefects { leakage, injectivity, multiplicativity }
}

/// The `L²(ρ)` properties of `Φ` and `E_N`, all relative to `‖x‖_{2,ρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Defects {
    /// `max (‖Φx‖ − ‖x‖)₊` over random `x`.
    pub contraction: f64,
    /// `‖Φ‖_{L²(ρ)} − 1`, positive part.
    pub operator_norm_excess: f64,
    /// `max |‖Φx‖ − ‖x‖|` over random `x ∈ N`.
    pub isometry: f64,
    /// `max |⟨E_N x, (id − E_N) y⟩_ρ|`.
    pub orthogonality: f64,
    /// The same after applying `Φ` to both arguments.
    pub orthogonality_after: f64,
}

pub fn l2_defects(
    c: &ChannelSpec,
    l2: &L2Structure,
    e_n: &CMat,
    n: &OperatorAlgebra,
    samples: usize,
    seed: u64,
) -> L2Defects {
    let d = c.dim;
    let t = c.transfer().mat;
    let mut rng = random::rng(seed);
    let (mut contraction, mut isometry, mut orth, mut orth_after): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x = random::ginibre(d, d, &mut rng);
        let nx = l2.norm(&x);
        contraction = contraction.max((l2.norm(&apply_transfer(&t, &x)) - nx) / nx);

        let a = n.random_element(&mut rng);
        let na = l2.norm(&a);
        isometry = isometry.max((l2.norm(&apply_transfer(&t, &a)) - na).abs() / na);

        let y = random::ginibre(d, d, &mut rng);
        let ex = apply_transfer(e_n, &x);
        let ry = &y - apply_transfer(e_n, &y);
        let scale = (nx * l2.norm(&y)).max(1e-300);
        orth = orth.max(l2.inner(&ex, &ry).norm() / scale);
        let inner_after = l2.inner(&apply_transfer(&t, &ex), &apply_transfer(&t, &ry));
        orth_after = orth_after.max(inner_after.norm() / scale);
    }
    let operator_norm_excess = (l2.operator_norm(&t) - 1.0).max(0.0);
    L2Defects {
        contraction: contraction.max(0.0),
        operator_norm_excess,
        isometry,
        orthogonality: orth,
        orthogonality_after: orth_after,
    }
}

/// `|ε_reported − ε_direct|`, with `ε_direct` from a fresh eigenvalue
/// computation of the transfer matrix; zero when both rates are infinite.
pub fn gap_consistency(c: &ChannelSpec, reported: f64, tol: &Tolerances) -> f64 {
    let direct_max = linalg::eigenvalues(&c.transfer().mat)
        .iter()
        .map(|z| z.norm())
        .filter(|&r| r <= 1.0 - tol.peripheral_band)
        .fold(0.0, f64::max);
    let direct = structure::asymptotic_rate(direct_max, tol);
    if direct.is_infinite() && reported.is_infinite() { 0.0 } else { (direct - reported).abs() }
}

/// `max_n ‖P_n² − P_n‖ + ‖P_n − P_n*‖` for `P_n = Φⁿ(Q)`, `n ≤ n_max`.
pub fn preserved_projection_defect(c: &ChannelSpec, projections: &[CMat], n_max: usize) -> f64 {
    let t = c.transfer().mat;
    let mut worst: f64 = 0.0;
    for q in projections {
        let mut p = q.clone();
        for _ in 0..n_max {
            p = apply_transfer(&t, &p);
            let defect = linalg::spectral_norm(&(&p * &p - &p)) + linalg::spectral_norm(&(&p - p.adjoint()));
            worst = worst.max(defect);
        }
    }
    worst
}

/// Largest residual of a basis of `inner` against the subspace `outer`.
pub fn containment_defect(inner: &MatrixSubspace, outer: &MatrixSubspace) -> f64 {
    inner.basis.iter().map(|b| outer.residual(b)).fold(0.0, f64::max)
}

/// Worst sampled Schwarz violation `−λ_min(Φ(A*A) − Φ(A)*Φ(A))`, relative to `‖A‖²`.
pub fn schwarz_defect(c: &ChannelSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = random::rng(seed);
    (0..samples)
        .map(|_| {
            let a = random::ginibre(c.dim, c.dim, &mut rng);
            let s = linalg::spectral_norm(&a).powi(2);
            channel::schwarz_violation(c, &a) / s
        })
        .fold(0.0, f64::max)
        .max(0.0)
}

/// Relative deviation of `Φ_*` on random states from `Φ` through Kraus sums and
/// through the transfer matrix.
pub fn transfer_consistency(c: &ChannelSpec) -> f64 {
    let t = c.transfer();
    let mut worst: f64 = 0.0;
    for i in 0..c.dim {
        for j in 0..c.dim {
            let e = linalg::unit(c.dim, c.dim, i, j);
            let direct = c.kraus.iter().fold(CMat::zeros(c.dim, c.dim), |acc, v| acc + v.adjoint() * &e * v);
            worst = worst.max(linalg::frob(&(t.apply(&e) - direct)));
        }
    }
    worst
}

/// `max |⟨x, x⟩ − 1|` style Gram defect of a list of matrices under `hs_inner`.
pub fn gram_defect(basis: &[CMat]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g: C64 = (a.adjoint() * b).trace();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Relative transfer-matrix distance between `Φ` and the channel rebuilt from
/// its minimal Kraus operators, and the difference in Kraus counts against the
/// Choi rank.
pub fn minimal_kraus_defect(c: &ChannelSpec, tol: &Tolerances) -> crate::Result<(f64, usize, usize)> {
    let (choi, minimal) = c.choi_and_minimal_kraus(tol)?;
    let (vals, _) = linalg::eigh(&linalg::hermitian_part(&choi));
    let top = vals.last().cloned().unwrap_or(0.0).abs().max(1e-300);
    let rank = vals.iter().filter(|&&v| v > tol.rank_tol * top).count();
    let diff = crate::numerics::rel_diff(&minimal.transfer().mat, &c.transfer().mat);
    Ok((diff, minimal.kraus.len(), rank))
}

/// Sampled check that `PeripheralData::apply_e_n` fixes every peripheral eigenmatrix.
pub fn peripheral_fixed_by_e_n(p: &PeripheralData) -> f64 {
    p.eigenmatrices
        .iter()
        .map(|x| linalg::frob(&(p.apply_e_n(x) - x)) / linalg::frob(x).max(1e-300))
        .fold(0.0, f64::max)
}
