//! Seeded random matrices and channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelSpec;
use crate::linalg::{self, c};
use crate::numerics::Tolerances;
use crate::{C64, CMat};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre(r: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(r, cols, |_, _| gaussian(rng))
}

pub fn hermitian(d: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(d, d, rng);
    linalg::hermitian_part(&g)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        let col = u.column(j) * ph;
        u.set_column(j, &col);
    }
    u
}

/// Random probability vector with entries bounded away from zero.
pub fn weights(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Mixture of `k` Haar unitaries with random weights; bistochastic.
pub fn unitary_mixture(d: usize, k: usize, rng: &mut impl Rng) -> ChannelSpec {
    let p = weights(k, rng);
    let kraus = p.iter().map(|&w| haar_unitary(d, rng) * c(w.sqrt(), 0.0)).collect();
    ChannelSpec::from_kraus(kraus, &Tolerances::default())
        .expect("unitary mixtures are unital")
        .with_label(format!("unitary mixture d={d} k={k}"))
}

/// Random density matrix of full rank.
pub fn density(d: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(d, d, rng);
    let mut rho = &g * g.adjoint() + linalg::identity(d) * c(0.05, 0.0);
    let t = rho.trace();
    rho /= t;
    rho
}
