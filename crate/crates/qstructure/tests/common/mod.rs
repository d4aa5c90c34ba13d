//! Channels and helpers shared by the integration tests.

#![allow(dead_code)]

use qstructure::algebra::OperatorAlgebra;
use qstructure::channel::{self, ChannelSpec};
use qstructure::linalg::{self, c};
use qstructure::numerics::Tolerances;
use qstructure::structure::{self, FixedPoints, InvariantStateReport, PeripheralData};
use qstructure::{C64, CMat, Result, oqrw, random};

/// Everything the structure theorems need about one channel.
pub struct Analysis {
    pub inv: InvariantStateReport,
    pub fixed: FixedPoints,
    pub f: OperatorAlgebra,
    pub p: PeripheralData,
    pub n: OperatorAlgebra,
}

pub fn analyze(ch: &ChannelSpec, tol: &Tolerances) -> Result<Analysis> {
    let inv = structure::invariant_states(ch, tol)?;
    let fixed = structure::fixed_points(ch, tol);
    let f = OperatorAlgebra::from_subspace(fixed.space.clone(), tol)?;
    let p = structure::peripheral_subalgebra(ch, &inv, tol)?;
    let n = OperatorAlgebra::from_subspace(p.m_r.clone(), tol)?;
    Ok(Analysis { inv, fixed, f, p, n })
}

fn scaled(m: CMat, w: f64) -> CMat {
    m * c(w.sqrt(), 0.0)
}

fn kraus_channel(kraus: Vec<CMat>, label: String) -> ChannelSpec {
    ChannelSpec::from_kraus(kraus, &Tolerances::default()).expect("corpus channels are unital").with_label(label)
}

/// `Σ_k p_k W D_k W*` with diagonal unitaries `D_k`: a commuting family.
fn commuting_mixture(d: usize, k: usize, seed: u64) -> ChannelSpec {
    let mut rng = random::rng(seed);
    let w = random::haar_unitary(d, &mut rng);
    let p = random::weights(k, &mut rng);
    let kraus = p
        .iter()
        .map(|&pk| {
            let phases = nalgebra::DVector::from_fn(d, |_, _| {
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * rand::Rng::random::<f64>(&mut rng))
            });
            scaled(&w * CMat::from_diagonal(&phases) * w.adjoint(), pk)
        })
        .collect();
    kraus_channel(kraus, format!("commuting mixture d={d} k={k}"))
}

/// Mixture of `Π·(U_{k,0} ⊕ … ⊕ U_{k,n−1})` with `Π` the cyclic block shift.
fn block_shift_mixture(n: usize, h: usize, k: usize, seed: u64) -> ChannelSpec {
    let mut rng = random::rng(seed);
    let d = n * h;
    let mut shift = CMat::zeros(d, d);
    for j in 0..n {
        let to = (j + 1) % n;
        shift.view_mut((to * h, j * h), (h, h)).copy_from(&linalg::identity(h));
    }
    let p = random::weights(k, &mut rng);
    let kraus = p
        .iter()
        .map(|&pk| {
            let mut blocks = CMat::zeros(d, d);
            for j in 0..n {
                blocks.view_mut((j * h, j * h), (h, h)).copy_from(&random::haar_unitary(h, &mut rng));
            }
            scaled(&shift * blocks, pk)
        })
        .collect();
    kraus_channel(kraus, format!("block shift n={n} h={h} k={k}"))
}

/// `Σ_k p_k (U_k ⊗ V)` for a unitary mixture on the left factor and a fixed unitary `V`.
fn tensor_with_unitary(d1: usize, d2: usize, k: usize, seed: u64, rotate: bool) -> ChannelSpec {
    let mut rng = random::rng(seed);
    let left = random::unitary_mixture(d1, k, &mut rng);
    let v = if rotate { random::haar_unitary(d2, &mut rng) } else { linalg::identity(d2) };
    let kraus = left.kraus.iter().map(|u| linalg::kron(u, &v)).collect();
    kraus_channel(kraus, format!("mixture d={d1} tensor unitary d={d2}"))
}

/// Sixty seeded unital channels with `D ≤ 8`, mixing generic and structured cases.
pub fn corpus() -> Vec<ChannelSpec> {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for i in 0..20u64 {
        let d = 2 + (i as usize) % 7;
        let k = 2 + (i as usize) % 3;
        out.push(random::unitary_mixture(d, k, &mut random::rng(100 + i)));
    }
    let sums = [(2, 2), (2, 3), (3, 3), (2, 4), (3, 5), (4, 4), (2, 6), (1, 3)];
    for (i, &(d1, d2)) in sums.iter().enumerate() {
        let mut rng = random::rng(200 + i as u64);
        let a = random::unitary_mixture(d1, 2 + i % 2, &mut rng);
        let b = random::unitary_mixture(d2, 2, &mut rng);
        out.push(channel::direct_sum(&a, &b));
    }
    for (i, d) in (3..=8).enumerate() {
        out.push(commuting_mixture(d, 2 + i % 2, 300 + i as u64));
    }
    let shifts = [(2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (4, 2), (2, 3), (2, 4)];
    for (i, &(n, h)) in shifts.iter().enumerate() {
        out.push(block_shift_mixture(n, h, 2, 400 + i as u64));
    }
    let tensors = [(2, 2, false), (2, 3, false), (3, 2, false), (4, 2, false), (2, 4, false), (2, 2, true), (3, 2, true), (2, 3, true)];
    for (i, &(d1, d2, rotate)) in tensors.iter().enumerate() {
        out.push(tensor_with_unitary(d1, d2, 2, 500 + i as u64, rotate));
    }
    for (i, d) in [3, 5, 8].into_iter().enumerate() {
        let u = random::haar_unitary(d, &mut random::rng(600 + i as u64));
        out.push(kraus_channel(vec![u], format!("unitary d={d}")));
    }
    let walks = [
        oqrw::pauli_walk(2, 0.4, &tol),
        oqrw::pauli_walk(3, 0.5, &tol),
        oqrw::pauli_walk(4, 0.3, &tol),
        oqrw::cyclic_shift(&oqrw::random_unitaries(2, 2, 700), &tol),
        oqrw::cyclic_shift(&oqrw::random_unitaries(2, 3, 701), &tol),
        oqrw::cyclic_shift(&oqrw::random_unitaries(3, 2, 702), &tol),
        oqrw::cyclic_shift(&oqrw::random_unitaries(4, 2, 703), &tol),
    ];
    for w in walks {
        let w = w.expect("walk builders accept these parameters");
        out.push(w.to_channel().with_label(w.label.clone()));
    }
    out
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, dist) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(dist);
    }
    worst
}

fn reals(v: Vec<f64>) -> Vec<C64> {
    v.into_iter().map(|x| c(x, 0.0)).collect()
}

/// Spectral data of a CP map that survive unitary changes of basis:
/// transfer singular values and Choi eigenvalues always, transfer eigenvalues
/// when input and output share a basis.
pub struct Invariants {
    pub singular_values: Vec<C64>,
    pub choi_spectrum: Vec<C64>,
    pub eigenvalues: Option<Vec<C64>>,
}

impl Invariants {
    pub fn of(kraus: &[CMat], din: usize, dout: usize, same_space: bool) -> Self {
        let t = channel::transfer_of(kraus, din, dout);
        let choi = channel::choi_of_map(
            |a| {
                let mut out = CMat::zeros(dout, dout);
                for l in kraus {
                    out += l.adjoint() * a * l;
                }
                out
            },
            din,
            dout,
        );
        Invariants {
            singular_values: reals(linalg::svd(&t).1),
            choi_spectrum: reals(linalg::eigh(&linalg::hermitian_part(&choi)).0),
            eigenvalues: same_space.then(|| linalg::eigenvalues(&t)),
        }
    }

    pub fn distance(&self, other: &Invariants) -> f64 {
        let mut worst = multiset_distance(&self.singular_values, &other.singular_values)
            .max(multiset_distance(&self.choi_spectrum, &other.choi_spectrum));
        if let (Some(a), Some(b)) = (&self.eigenvalues, &other.eigenvalues) {
            worst = worst.max(multiset_distance(a, b));
        }
        worst
    }
}
