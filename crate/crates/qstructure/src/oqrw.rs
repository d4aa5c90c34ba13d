//! Open quantum random walks: builders, flattening to channels, and the
//! block characterizations of the multiplicative domain and the
//! decoherence-free algebra.
//!
//! The flattened space is `H = ⊕_i h_i` with blocks laid out in the order of
//! `vertices`. A transition `L_{i,j}: h_j → h_i` contributes the Kraus operator
//! `V_{i,j}` equal to `L_{i,j}` in block `(i, j)` and zero elsewhere.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;

use crate::algebra::OperatorAlgebra;
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c};
use crate::numerics::{MatrixSubspace, SpanBuilder, Tolerances};
use crate::random;
use crate::{C64, CMat};

/// Largest norm treated as an exactly vanishing transition or path operator.
const ZERO_OPERATOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct OqrwSpec {
    pub vertices: Vec<String>,
    pub local_dims: Vec<usize>,
    /// `(to, from) ↦ L_{to,from}`; absent entries are zero.
    pub transitions: BTreeMap<(usize, usize), CMat>,
    pub label: String,
    /// `‖Σ_i L_{i,j}* L_{i,j} − I‖₂` per column `j`.
    pub column_defects: Vec<f64>,
    /// Equal local dimensions and `L_{i,j} = L_{i+1,j+1}` on `Z_n`.
    pub homogeneous: bool,
    /// Only `L_{i,i−1}` nonzero, each unitary.
    pub cyclic: bool,
}

impl OqrwSpec {
    pub fn build(
        vertices: Vec<String>,
        local_dims: Vec<usize>,
        transitions: Vec<((usize, usize), CMat)>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = vertices.len();
        if n == 0 || local_dims.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} vertices but {} local dimensions",
                n,
                local_dims.len()
            )));
        }
        if local_dims.contains(&0) {
            return Err(Error::InvalidParameter("local dimensions must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for ((to, from), m) in transitions {
            if to >= n || from >= n {
                return Err(Error::InvalidParameter(format!("transition ({to}, {from}) out of range")));
            }
            if m.nrows() != local_dims[to] || m.ncols() != local_dims[from] {
                return Err(Error::BlockDimensionMismatch { to, from });
            }
            if !linalg::is_finite(&m) {
                return Err(Error::NonFinite { context: format!("transition ({to}, {from})") });
            }
            if map.insert((to, from), m).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate transition ({to}, {from})")));
            }
        }
        let mut column_defects = Vec::with_capacity(n);
        for j in 0..n {
            let mut s = CMat::zeros(local_dims[j], local_dims[j]);
            for ((_, from), m) in &map {
                if *from == j {
                    s += m.adjoint() * m;
                }
            }
            let defect = linalg::spectral_norm(&(s - linalg::identity(local_dims[j])));
            if defect > tol.eq_tol {
                return Err(Error::ColumnNotNormalized { column: j, defect });
            }
            column_defects.push(defect);
        }
        let mut w = OqrwSpec {
            vertices,
            local_dims,
            transitions: map,
            label: String::new(),
            column_defects,
            homogeneous: false,
            cyclic: false,
        };
        w.homogeneous = w.detect_homogeneous(tol);
        w.cyclic = w.detect_cyclic(tol);
        Ok(w)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Dimension of the flattened space.
    pub fn dim(&self) -> usize {
        self.local_dims.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.local_dims.len());
        let mut acc = 0;
        for &d in &self.local_dims {
            out.push(acc);
            acc += d;
        }
        out
    }

    pub fn transition(&self, to: usize, from: usize) -> Option<&CMat> {
        self.transitions.get(&(to, from)).filter(|m| m.norm() > ZERO_OPERATOR)
    }

    fn transition_or_zero(&self, to: usize, from: usize) -> CMat {
        self.transition(to, from)
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.local_dims[to], self.local_dims[from]))
    }

    fn detect_homogeneous(&self, tol: &Tolerances) -> bool {
        let n = self.num_vertices();
        if self.local_dims.iter().any(|&d| d != self.local_dims[0]) {
            return false;
        }
        (0..n).all(|i| {
            (0..n).all(|j| {
                let a = self.transition_or_zero(i, j);
                let b = self.transition_or_zero((i + 1) % n, (j + 1) % n);
                (a - b).norm() <= tol.eq_tol
            })
        })
    }

    fn detect_cyclic(&self, tol: &Tolerances) -> bool {
        let n = self.num_vertices();
        if n < 2 {
            return false;
        }
        let mut seen = 0;
        for (&(to, from), m) in &self.transitions {
            if m.norm() <= ZERO_OPERATOR {
                continue;
            }
            if to != (from + 1) % n || !is_unitary(m, tol) {
                return false;
            }
            seen += 1;
        }
        seen == n
    }

    /// Places `m` as block `(row, col)` of a `D × D` matrix.
    pub fn embed(&self, row: usize, col: usize, m: &CMat) -> CMat {
        let off = self.offsets();
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        out.view_mut((off[row], off[col]), (m.nrows(), m.ncols())).copy_from(m);
        out
    }

    /// Block `(row, col)` of a `D × D` matrix.
    pub fn block(&self, x: &CMat, row: usize, col: usize) -> CMat {
        let off = self.offsets();
        x.view((off[row], off[col]), (self.local_dims[row], self.local_dims[col])).into_owned()
    }

    /// `I_{h_i}` embedded at vertex `i`.
    pub fn vertex_projection(&self, i: usize) -> CMat {
        self.embed(i, i, &linalg::identity(self.local_dims[i]))
    }

    pub fn to_channel(&self) -> ChannelSpec {
        let kraus: Vec<CMat> = self
            .transitions
            .iter()
            .filter(|(_, m)| m.norm() > ZERO_OPERATOR)
            .map(|(&(to, from), m)| self.embed(to, from, m))
            .collect();
        let label = if self.label.is_empty() { "oqrw".to_string() } else { self.label.clone() };
        ChannelSpec::from_kraus_unchecked(kraus, &label).expect("validated walk has at least one transition")
    }

    /// Local operators `L_k := L_{k,0}` of a homogeneous walk, i.e. the Kraus
    /// operators of the local map `ρ ↦ Σ_k L_k ρ L_k*`.
    pub fn local_operators(&self) -> Result<Vec<CMat>> {
        if !self.homogeneous {
            return Err(Error::NotHomogeneous);
        }
        Ok((0..self.num_vertices()).filter_map(|k| self.transition(k, 0).cloned()).collect())
    }

    /// The local map as a channel on `h` (Heisenberg picture).
    pub fn local_map(&self, tol: &Tolerances) -> Result<ChannelSpec> {
        let ops = self.local_operators()?;
        Ok(ChannelSpec::from_kraus(ops, tol)?.with_label("local map"))
    }

    /// `(1/|V|) Σ_i ρ ⊗ |i⟩⟨i|` for a state `ρ` on the common local space.
    pub fn uniform_lift(&self, rho: &CMat) -> Result<CMat> {
        if !self.homogeneous {
            return Err(Error::NotHomogeneous);
        }
        let n = self.num_vertices();
        let mut out = CMat::zeros(self.dim(), self.dim());
        for i in 0..n {
            out += self.embed(i, i, rho);
        }
        Ok(out / c(n as f64, 0.0))
    }

    /// `W_i = ∩_j Range(L_{i,j})^⊥` as orthonormal columns.
    pub fn dead_space(&self, i: usize, tol: &Tolerances) -> CMat {
        let n = self.num_vertices();
        let di = self.local_dims[i];
        let adj: Vec<CMat> = (0..n).filter_map(|j| self.transition(i, j).map(|m| m.adjoint())).collect();
        if adj.is_empty() {
            return linalg::identity(di);
        }
        let rows: usize = adj.iter().map(|m| m.nrows()).sum();
        let mut stacked = CMat::zeros(rows, di);
        let mut r = 0;
        for m in &adj {
            stacked.view_mut((r, 0), (m.nrows(), di)).copy_from(m);
            r += m.nrows();
        }
        let cutoff = tol.rank_tol * linalg::spectral_norm(&stacked).max(1.0);
        linalg::null_space(&stacked, cutoff)
    }
}

fn is_unitary(m: &CMat, tol: &Tolerances) -> bool {
    m.nrows() == m.ncols() && (m.adjoint() * m - linalg::identity(m.nrows())).norm() <= tol.eq_tol
}

/// A path `(i_0, …, i_n)` with its operator `L_π = L_{i_n,i_{n−1}} ⋯ L_{i_1,i_0}`.
#[derive(Debug, Clone)]
pub struct PathOperator {
    pub path: Vec<usize>,
    pub operator: CMat,
}

/// All paths of length `n` from `start` with nonzero operator (zero products are pruned).
pub fn paths_from(w: &OqrwSpec, start: usize, n: usize) -> Vec<PathOperator> {
    let mut current =
        vec![PathOperator { path: vec![start], operator: linalg::identity(w.local_dims[start]) }];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &current {
            let last = *p.path.last().expect("paths are nonempty");
            for to in 0..w.num_vertices() {
                if let Some(l) = w.transition(to, last) {
                    let op = l * &p.operator;
                    if op.norm() > ZERO_OPERATOR {
                        let mut path = p.path.clone();
                        path.push(to);
                        next.push(PathOperator { path, operator: op });
                    }
                }
            }
        }
        current = next;
    }
    current
}

/// Spans `U(i,k) = Σ_n span{L_π L_π'* : π ∈ P_n(j,i), π' ∈ P_n(j,k)}` grown until no block grows.
#[derive(Debug, Clone)]
pub struct PathSpans {
    /// Indexed `[i][k]`.
    pub spans: Vec<Vec<Vec<CMat>>>,
    /// Number of path lengths needed for stabilization.
    pub rounds: usize,
}

pub fn path_spans(w: &OqrwSpec, n_max: usize, tol: &Tolerances) -> Result<PathSpans> {
    let nv = w.num_vertices();
    let dims = &w.local_dims;
    let mut builders: Vec<Vec<SpanBuilder>> = (0..nv)
        .map(|i| (0..nv).map(|k| SpanBuilder::rectangular(dims[i], dims[k], tol.rank_tol)).collect())
        .collect();
    let mut frontier: Vec<Vec<Vec<CMat>>> = vec![vec![Vec::new(); nv]; nv];
    for i in 0..nv {
        for k in 0..nv {
            let cands: Vec<CMat> = (0..nv)
                .filter_map(|j| match (w.transition(i, j), w.transition(k, j)) {
                    (Some(a), Some(b)) => Some(a * b.adjoint()),
                    _ => None,
                })
                .collect();
            frontier[i][k] = builders[i][k].extend(&cands);
        }
    }
    let mut rounds = 1;
    let mut sizes: Vec<usize> = builders.iter().flatten().map(|b| b.dim()).collect();
    while frontier.iter().flatten().any(|f| !f.is_empty()) {
        if rounds >= n_max {
            return Err(Error::NoStabilization { dims: sizes });
        }
        rounds += 1;
        let mut next: Vec<Vec<Vec<CMat>>> = vec![vec![Vec::new(); nv]; nv];
        for i in 0..nv {
            for k in 0..nv {
                let mut cands = Vec::new();
                for a in 0..nv {
                    let Some(la) = w.transition(i, a) else { continue };
                    for b in 0..nv {
                        let Some(lb) = w.transition(k, b) else { continue };
                        for delta in &frontier[a][b] {
                            cands.push(la * delta * lb.adjoint());
                        }
                    }
                }
                next[i][k] = builders[i][k].extend(&cands);
            }
        }
        frontier = next;
        sizes = builders.iter().flatten().map(|b| b.dim()).collect();
    }
    let spans = builders.iter().map(|row| row.iter().map(|b| b.basis()).collect()).collect();
    Ok(PathSpans { spans, rounds })
}

/// Block-diagonal solutions of `A_i X = X A_k` for every `X` in `cond[i][k]`.
fn solve_diagonal(w: &OqrwSpec, cond: &[Vec<Vec<CMat>>], tol: &Tolerances) -> Vec<CMat> {
    let nv = w.num_vertices();
    let dims = &w.local_dims;
    let mut var_off = Vec::with_capacity(nv);
    let mut nvars = 0;
    for &d in dims {
        var_off.push(nvars);
        nvars += d * d;
    }
    let nrows: usize =
        (0..nv).flat_map(|i| (0..nv).map(move |k| (i, k))).map(|(i, k)| cond[i][k].len() * dims[i] * dims[k]).sum();
    let mut sys = CMat::zeros(nrows, nvars);
    let mut r = 0;
    for i in 0..nv {
        for k in 0..nv {
            let (di, dk) = (dims[i], dims[k]);
            for x in &cond[i][k] {
                // vec(A_i X) = (Xᵀ ⊗ I) vec(A_i),  vec(X A_k) = (I ⊗ X) vec(A_k)
                let left = linalg::kron(&x.transpose(), &linalg::identity(di));
                let right = linalg::kron(&linalg::identity(dk), x);
                let mut rows = sys.view_mut((r, 0), (di * dk, nvars));
                let mut lv = rows.view_mut((0, var_off[i]), (di * dk, di * di));
                lv += &left;
                let mut rv = rows.view_mut((0, var_off[k]), (di * dk, dk * dk));
                rv -= &right;
                r += di * dk;
            }
        }
    }
    let scale = if nrows == 0 { 1.0 } else { linalg::spectral_norm(&sys).max(1.0) };
    let ker = if nrows == 0 { linalg::identity(nvars) } else { linalg::null_space(&compress_rows(&sys), tol.rank_tol * scale) };
    let off = w.offsets();
    let d = w.dim();
    (0..ker.ncols())
        .map(|col| {
            let mut a = CMat::zeros(d, d);
            for i in 0..nv {
                let di = dims[i];
                let block = CMat::from_column_slice(di, di, &ker.column(col).as_slice()[var_off[i]..var_off[i] + di * di]);
                a.view_mut((off[i], off[i]), (di, di)).copy_from(&block);
            }
            a
        })
        .collect()
}

/// Replaces a tall system by the triangular factor of its QR decomposition.
fn compress_rows(m: &CMat) -> CMat {
    if m.nrows() <= m.ncols() { m.clone() } else { m.clone().qr().r() }
}

/// Off-diagonal blocks `A_{i,j}` with `A_{i,j} L_{j,l} = 0 = L_{i,l}* A_{i,j}`,
/// i.e. `A_{i,j} = P_{W_i} A_{i,j} P_{W_j}`.
fn off_diagonal_part(w: &OqrwSpec, tol: &Tolerances) -> Vec<CMat> {
    let nv = w.num_vertices();
    let dead: Vec<CMat> = (0..nv).map(|i| w.dead_space(i, tol)).collect();
    let mut out = Vec::new();
    for i in 0..nv {
        for j in 0..nv {
            if i == j {
                continue;
            }
            for a in 0..dead[i].ncols() {
                for b in 0..dead[j].ncols() {
                    let x: DVector<C64> = dead[i].column(a).into_owned();
                    let y: DVector<C64> = dead[j].column(b).into_owned();
                    out.push(w.embed(i, j, &linalg::ket_bra(&x, &y)));
                }
            }
        }
    }
    out
}

fn to_subspace(d: usize, mats: &[CMat]) -> MatrixSubspace {
    let mut cols = CMat::zeros(d * d, mats.len());
    for (k, m) in mats.iter().enumerate() {
        cols.set_column(k, &linalg::vec_of(m));
    }
    MatrixSubspace::from_columns(d, &cols)
}

/// Multiplicative domain from the block conditions on the transition operators.
pub fn oqrw_multiplicative_domain(w: &OqrwSpec, tol: &Tolerances) -> OperatorAlgebra {
    let nv = w.num_vertices();
    let mut cond = vec![vec![Vec::new(); nv]; nv];
    for (i, row) in cond.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            for j in 0..nv {
                if let (Some(a), Some(b)) = (w.transition(i, j), w.transition(k, j)) {
                    entry.push(a * b.adjoint());
                }
            }
        }
    }
    let mut mats = solve_diagonal(w, &cond, tol);
    mats.extend(off_diagonal_part(w, tol));
    OperatorAlgebra::trusted(to_subspace(w.dim(), &mats), tol)
}

#[derive(Debug, Clone)]
pub struct OqrwDfa {
    pub algebra: OperatorAlgebra,
    pub diagonal: MatrixSubspace,
    pub off_diagonal: MatrixSubspace,
    /// Vertices with `W_i ≠ 0`.
    pub dead_vertices: Vec<usize>,
    /// At most one `W_i ≠ 0`, which forces `N = N_D`.
    pub diagonal_forced: bool,
    pub rounds: usize,
}

/// Decoherence-free algebra from the path conditions; `n_max` defaults to `D²`.
pub fn oqrw_dfa(w: &OqrwSpec, n_max: Option<usize>, tol: &Tolerances) -> Result<OqrwDfa> {
    let d = w.dim();
    let spans = path_spans(w, n_max.unwrap_or(d * d).max(1), tol)?;
    let diag = solve_diagonal(w, &spans.spans, tol);
    let off = off_diagonal_part(w, tol);
    let dead_vertices: Vec<usize> =
        (0..w.num_vertices()).filter(|&i| w.dead_space(i, tol).ncols() > 0).collect();
    let mut all = diag.clone();
    all.extend(off.iter().cloned());
    Ok(OqrwDfa {
        algebra: OperatorAlgebra::trusted(to_subspace(d, &all), tol),
        diagonal: to_subspace(d, &diag),
        off_diagonal: to_subspace(d, &off),
        diagonal_forced: dead_vertices.len() <= 1,
        dead_vertices,
        rounds: spans.rounds,
    })
}

/// Cyclic shift on `Z_d`: `L_{i,i−1} = U_i`.
pub fn cyclic_shift(unitaries: &[CMat], tol: &Tolerances) -> Result<OqrwSpec> {
    let d = unitaries.len();
    if d < 2 {
        return Err(Error::InvalidParameter("cyclic shift needs at least two vertices".into()));
    }
    let h = unitaries[0].nrows();
    for (i, u) in unitaries.iter().enumerate() {
        if u.nrows() != h || !is_unitary(u, tol) {
            return Err(Error::NotUnitary { index: i });
        }
    }
    let transitions = (0..d).map(|i| ((i, (i + d - 1) % d), unitaries[i].clone())).collect();
    Ok(OqrwSpec::build(vertex_names(d), vec![h; d], transitions, tol)?
        .with_label(format!("cyclic shift d={d}")))
}

/// Haar-random unitaries for [`cyclic_shift`].
pub fn random_unitaries(d: usize, h: usize, seed: u64) -> Vec<CMat> {
    let mut rng = random::rng(seed);
    (0..d).map(|_| random::haar_unitary(h, &mut rng)).collect()
}

/// `Ũ = U_0 U_{d−1} ⋯ U_1`: the product of the shift unitaries around the cycle, based at vertex 0.
pub fn cycle_product(unitaries: &[CMat]) -> CMat {
    let mut p = unitaries[0].clone();
    for u in unitaries.iter().skip(1).rev() {
        p *= u;
    }
    p
}

/// Generalized Pauli operators `Z = diag(ωᵏ)` and `X|k⟩ = |k+1⟩`, with `ZX = ωXZ`.
pub fn pauli_operators(d: usize) -> (CMat, CMat) {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % d) as f64 / d as f64);
    let z = CMat::from_fn(d, d, |i, j| if i == j { omega(i) } else { c(0.0, 0.0) });
    let x = CMat::from_fn(d, d, |i, j| if i == (j + 1) % d { c(1.0, 0.0) } else { c(0.0, 0.0) });
    (z, x)
}

/// Two-vertex walk with `L_00 = L_11 = √α Z` and `L_01 = L_10 = √(1−α) X`.
pub fn pauli_walk(d: usize, alpha: f64, tol: &Tolerances) -> Result<OqrwSpec> {
    if d < 2 {
        return Err(Error::InvalidParameter("Pauli walk needs d >= 2".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (z, x) = pauli_operators(d);
    let zs = z * c(alpha.sqrt(), 0.0);
    let xs = x * c((1.0 - alpha).sqrt(), 0.0);
    let transitions = vec![((0, 0), zs.clone()), ((1, 1), zs), ((0, 1), xs.clone()), ((1, 0), xs)];
    Ok(OqrwSpec::build(vertex_names(2), vec![d; 2], transitions, tol)?
        .with_label(format!("pauli walk d={d} alpha={alpha}")))
}

/// Pauli walk on vertices `(i, s) ∈ Z_2 × Z_m` where every step also advances a
/// deterministic clock `s ↦ s + 1`: `L_{(i,s+1),(j,s)} = L^{Pauli}_{i,j}`.
/// For `gcd(d, m) = 1` the flattened channel is irreducible with period `d·m`.
pub fn clocked_pauli_walk(d: usize, alpha: f64, m: usize, tol: &Tolerances) -> Result<OqrwSpec> {
    if m < 1 {
        return Err(Error::InvalidParameter("clock length must be positive".into()));
    }
    let base = pauli_walk(d, alpha, tol)?;
    let idx = |i: usize, s: usize| s * 2 + i;
    let mut transitions = Vec::new();
    for s in 0..m {
        for (&(i, j), l) in &base.transitions {
            transitions.push(((idx(i, (s + 1) % m), idx(j, s)), l.clone()));
        }
    }
    let names = (0..m).flat_map(|s| (0..2).map(move |i| format!("({i},{s})"))).collect();
    Ok(OqrwSpec::build(names, vec![d; 2 * m], transitions, tol)?
        .with_label(format!("clocked pauli walk d={d} alpha={alpha} clock={m}")))
}

/// Homogeneous nearest-neighbour walk on `Z_n`: `L_{i+1,i} = L_+`, `L_{i−1,i} = L_−`.
pub fn nn_cycle(n: usize, l_plus: &CMat, l_minus: &CMat, tol: &Tolerances) -> Result<OqrwSpec> {
    if n < 3 {
        return Err(Error::InvalidParameter("nearest-neighbour cycle needs n >= 3".into()));
    }
    let h = l_plus.nrows();
    if l_plus.ncols() != h || l_minus.shape() != (h, h) {
        return Err(Error::InvalidParameter("L+ and L- must be square of equal size".into()));
    }
    let mut transitions = Vec::new();
    for i in 0..n {
        transitions.push((((i + 1) % n, i), l_plus.clone()));
        transitions.push((((i + n - 1) % n, i), l_minus.clone()));
    }
    Ok(OqrwSpec::build(vertex_names(n), vec![h; n], transitions, tol)?.with_label(format!("nn cycle n={n}")))
}

/// `L_− = diag(√0.3, √0.7)`, `L_+ = [[0, √0.3], [√0.7, 0]]`: diagonal and off-diagonal in the standard basis.
pub fn special_basis_preset() -> (CMat, CMat) {
    let (a, b) = (0.3f64.sqrt(), 0.7f64.sqrt());
    let z = c(0.0, 0.0);
    let l_plus = CMat::from_row_slice(2, 2, &[z, c(a, 0.0), c(b, 0.0), z]);
    let l_minus = CMat::from_row_slice(2, 2, &[c(a, 0.0), z, z, c(b, 0.0)]);
    (l_plus, l_minus)
}

/// `L_± = U_±/√2` with seeded Haar unitaries.
pub fn generic_unitary_preset(seed: u64) -> (CMat, CMat) {
    let mut rng = random::rng(seed);
    let s = c(0.5f64.sqrt(), 0.0);
    let up = random::haar_unitary(2, &mut rng) * s;
    let um = random::haar_unitary(2, &mut rng) * s;
    (up, um)
}

/// Whether `L_+` or `L_−` plays the diagonal role in a special basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalOperator {
    Plus,
    Minus,
}

#[derive(Debug, Clone)]
pub struct SpecialBasis {
    /// Columns `f_0, f_1`.
    pub basis: CMat,
    pub diagonal: DiagonalOperator,
}

/// Orthonormal basis of `C²` in which one of `L_±` is diagonal and the other off-diagonal.
pub fn detect_special_basis(l_plus: &CMat, l_minus: &CMat, tol: &Tolerances) -> Option<SpecialBasis> {
    if l_plus.shape() != (2, 2) || l_minus.shape() != (2, 2) {
        return None;
    }
    [(l_minus, l_plus, DiagonalOperator::Minus), (l_plus, l_minus, DiagonalOperator::Plus)]
        .into_iter()
        .find_map(|(dg, other, which)| {
            diagonalizing_basis(dg, other, tol).map(|basis| SpecialBasis { basis, diagonal: which })
        })
}

fn diagonalizing_basis(dg: &CMat, other: &CMat, tol: &Tolerances) -> Option<CMat> {
    let thr = tol.eq_tol * dg.norm().max(other.norm()).max(1.0);
    let id = linalg::identity(2);
    let scalar = |m: &CMat| (m - &id * (m.trace() / c(2.0, 0.0))).norm() <= thr;
    if scalar(other) {
        return None;
    }
    let off_diag_in = |q: &CMat| {
        let o = q.adjoint() * other * q;
        o[(0, 0)].norm() <= thr && o[(1, 1)].norm() <= thr
    };
    if scalar(dg) {
        // any basis diagonalizes dg; other must be off-diagonal somewhere, i.e. traceless up to a square ∝ I
        let sq = other * other;
        if !scalar(&sq) || other.trace().norm() > thr {
            return None;
        }
        let q = off_diagonal_basis(other);
        return off_diag_in(&q).then_some(q);
    }
    if (dg * dg.adjoint() - dg.adjoint() * dg).norm() > thr {
        return None;
    }
    let (q, t) = linalg::schur(dg);
    if (t[(0, 0)] - t[(1, 1)]).norm() <= thr {
        return None;
    }
    off_diag_in(&q).then_some(q)
}

/// Basis `{f_0, f_1}` with `⟨f_k, O f_k⟩ = 0` for a traceless `2 × 2` matrix `O`.
fn off_diagonal_basis(o: &CMat) -> CMat {
    // O = a·σ with complex a; the Bloch vector of f_0 must be orthogonal to Re a and Im a
    let a = [
        (o[(0, 1)] + o[(1, 0)]) / c(2.0, 0.0),
        (o[(1, 0)] - o[(0, 1)]) / c(0.0, 2.0),
        (o[(0, 0)] - o[(1, 1)]) / c(2.0, 0.0),
    ];
    let re = [a[0].re, a[1].re, a[2].re];
    let im = [a[0].im, a[1].im, a[2].im];
    let cross = [re[1] * im[2] - re[2] * im[1], re[2] * im[0] - re[0] * im[2], re[0] * im[1] - re[1] * im[0]];
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut n = cross;
    if norm(n) <= 1e-12 * norm(re).max(norm(im)).max(1e-300) {
        // Re a ∥ Im a: take any unit vector orthogonal to the common direction
        let u = if norm(re) >= norm(im) { re } else { im };
        let trial = if u[0].abs() <= u[1].abs() && u[0].abs() <= u[2].abs() {
            [1.0, 0.0, 0.0]
        } else if u[1].abs() <= u[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        n = [u[1] * trial[2] - u[2] * trial[1], u[2] * trial[0] - u[0] * trial[2], u[0] * trial[1] - u[1] * trial[0]];
    }
    let k = norm(n);
    let n = [n[0] / k, n[1] / k, n[2] / k];
    // pure state with Bloch vector n and its orthogonal complement
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    let f0 = [c((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
    let f1 = [-f0[1].conj(), f0[0].conj()];
    CMat::from_row_slice(2, 2, &[f0[0], f1[0], f0[1], f1[1]])
}

/// `P_even`/`P_odd` on `Z_n`.
pub fn parity_projections(w: &OqrwSpec) -> (CMat, CMat) {
    let d = w.dim();
    let mut even = CMat::zeros(d, d);
    let mut odd = CMat::zeros(d, d);
    for i in 0..w.num_vertices() {
        if i % 2 == 0 {
            even += w.vertex_projection(i);
        } else {
            odd += w.vertex_projection(i);
        }
    }
    (even, odd)
}

/// `P_{ε,δ} = Σ_j (|f_ε⟩⟨f_ε| ⊗ |4j+δ⟩⟨4j+δ| + |f_{1−ε}⟩⟨f_{1−ε}| ⊗ |4j+2+δ⟩⟨4j+2+δ|)` on `Z_n`.
pub fn special_projections(w: &OqrwSpec, basis: &CMat) -> Vec<CMat> {
    let n = w.num_vertices();
    let f = |e: usize| {
        let v: DVector<C64> = basis.column(e).into_owned();
        linalg::ket_bra(&v, &v)
    };
    let mut out = Vec::new();
    for eps in 0..2 {
        for delta in 0..2 {
            let mut p = CMat::zeros(w.dim(), w.dim());
            for v in 0..n {
                if v % 4 == delta {
                    p += w.embed(v, v, &f(eps));
                } else if v % 4 == 2 + delta {
                    p += w.embed(v, v, &f(1 - eps));
                }
            }
            out.push(p);
        }
    }
    out
}

/// Random walk with a random sparsity pattern; each column is normalized by
/// `L_{i,j} = G_{i,j} S_j^{-1/2}`. With probability one half the blocks are
/// scaled unitaries instead, which produces nontrivial structure.
pub fn random_oqrw(nv: usize, max_local: usize, seed: u64, tol: &Tolerances) -> Result<OqrwSpec> {
    let mut rng = random::rng(seed);
    let structured = rng.random::<f64>() < 0.5;
    let local_dims: Vec<usize> = if structured {
        vec![1 + rng.random_range(0..max_local); nv]
    } else {
        (0..nv).map(|_| 1 + rng.random_range(0..max_local)).collect()
    };
    let mut transitions = Vec::new();
    for j in 0..nv {
        let k = 1 + rng.random_range(0..nv.min(3));
        let mut targets: Vec<usize> = (0..nv).collect();
        for t in 0..k {
            let s = t + rng.random_range(0..(nv - t));
            targets.swap(t, s);
        }
        // S_j is invertible only if the targets supply at least local_dims[j] rows
        let mut k = k;
        while !structured && targets[..k].iter().map(|&i| local_dims[i]).sum::<usize>() < local_dims[j] {
            k += 1;
        }
        targets.truncate(k);
        targets.sort_unstable();
        if structured {
            let p = random::weights(k, &mut rng);
            for (&i, &pi) in targets.iter().zip(&p) {
                let u = random::haar_unitary(local_dims[j], &mut rng);
                transitions.push(((i, j), u * c(pi.sqrt(), 0.0)));
            }
        } else {
            let blocks: Vec<CMat> =
                targets.iter().map(|&i| random::ginibre(local_dims[i], local_dims[j], &mut rng)).collect();
            let mut s = CMat::zeros(local_dims[j], local_dims[j]);
            for g in &blocks {
                s += g.adjoint() * g;
            }
            let inv_sqrt = linalg::hermitian_fn(&s, |x| 1.0 / x.sqrt());
            for (&i, g) in targets.iter().zip(blocks) {
                transitions.push(((i, j), g * &inv_sqrt));
            }
        }
    }
    Ok(OqrwSpec::build(vertex_names(nv), local_dims, transitions, tol)?
        .with_label(format!("random oqrw seed={seed}")))
}

fn vertex_names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::subspace_distance;
    use crate::structure;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn swap_walk_builds() {
        let id = linalg::identity(2);
        let w = OqrwSpec::build(vertex_names(2), vec![2, 2], vec![((0, 1), id.clone()), ((1, 0), id)], &tol())
            .unwrap();
        assert!(w.cyclic && w.homogeneous);
        let ch = w.to_channel();
        assert_eq!(ch.dim, 4);
        assert!(ch.unitality_defect < 1e-14);
    }

    #[test]
    fn unnormalized_column_rejected() {
        let id = linalg::identity(2);
        let r = OqrwSpec::build(vertex_names(2), vec![2, 2], vec![((0, 0), id.clone()), ((1, 0), id)], &tol());
        assert!(matches!(r, Err(Error::ColumnNotNormalized { column: 0, .. })));
    }

    #[test]
    fn wrong_block_shape_rejected() {
        let r = OqrwSpec::build(vertex_names(2), vec![2, 3], vec![((0, 1), linalg::identity(2))], &tol());
        assert!(matches!(r, Err(Error::BlockDimensionMismatch { to: 0, from: 1 })));
    }

    #[test]
    fn pauli_operators_commutation() {
        for d in 2..6 {
            let (z, x) = pauli_operators(d);
            let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
            assert!((&z * &x - (&x * &z) * omega).norm() < 1e-12);
        }
    }

    #[test]
    fn pauli_walk_shape() {
        let w = pauli_walk(3, 0.5, &tol()).unwrap();
        assert!(w.homogeneous);
        assert_eq!(w.dim(), 6);
        let local = w.local_map(&tol()).unwrap();
        let half = linalg::identity(3) * c(1.0 / 3.0, 0.0);
        assert!((local.preadjoint_apply(&half).unwrap() - &half).norm() < 1e-12);
    }

    #[test]
    fn cyclic_shift_rejects_non_unitary() {
        let mut us = random_unitaries(3, 2, 1);
        us[1] *= c(0.5, 0.0);
        assert!(matches!(cyclic_shift(&us, &tol()), Err(Error::NotUnitary { index: 1 })));
    }

    #[test]
    fn cyclic_shift_dfa_is_block_diagonal() {
        let us = random_unitaries(3, 2, 42);
        let w = cyclic_shift(&us, &tol()).unwrap();
        let n = oqrw_dfa(&w, None, &tol()).unwrap();
        assert_eq!(n.algebra.dim(), 12);
        assert_eq!(n.off_diagonal.dim(), 0);
    }

    #[test]
    fn special_basis_detection() {
        let t = tol();
        let (lp, lm) = special_basis_preset();
        let b = detect_special_basis(&lp, &lm, &t).unwrap();
        assert_eq!(b.diagonal, DiagonalOperator::Minus);
        let (gp, gm) = generic_unitary_preset(3);
        assert!(detect_special_basis(&gp, &gm, &t).is_none());
        let s = c(0.5f64.sqrt(), 0.0);
        let (_, x) = pauli_operators(2);
        let b = detect_special_basis(&(x.clone() * s), &(linalg::identity(2) * s), &t).unwrap();
        let o = b.basis.adjoint() * &x * &b.basis;
        assert!(o[(0, 0)].norm() < 1e-12 && o[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn degenerate_basis_for_complex_traceless_operator() {
        let o = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.2, -0.4), c(-0.5, 0.2), c(-0.3, -0.1)]);
        let q = off_diagonal_basis(&o);
        let r = q.adjoint() * &o * &q;
        assert!((q.adjoint() * &q - linalg::identity(2)).norm() < 1e-12);
        assert!(r[(0, 0)].norm() < 1e-12 && r[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn dead_vertices_give_off_diagonal_dfa() {
        // vertices 0 and 1 are never entered; both feed vertex 2, which loops
        let t = tol();
        let id = linalg::identity(1);
        let w = OqrwSpec::build(
            vertex_names(3),
            vec![1, 1, 1],
            vec![((2, 0), id.clone()), ((2, 1), id.clone()), ((2, 2), id)],
            &t,
        )
        .unwrap();
        let n = oqrw_dfa(&w, None, &t).unwrap();
        assert_eq!(n.dead_vertices, vec![0, 1]);
        assert!(!n.diagonal_forced);
        assert_eq!(n.off_diagonal.dim(), 2);
        let (generic, _) = structure::dfa_word_commutant(&w.to_channel(), &t).unwrap();
        assert!(subspace_distance(&generic.space, &n.algebra.space).unwrap() < 1e-7);
    }

    #[test]
    fn multiplicative_domain_matches_generic() {
        let t = tol();
        for seed in 0..4 {
            let w = random_oqrw(3, 2, seed, &t).unwrap();
            let ours = oqrw_multiplicative_domain(&w, &t);
            let generic = structure::multiplicative_domain(&w.to_channel(), &t);
            assert!(subspace_distance(&ours.space, &generic.space).unwrap() < 1e-7, "seed {seed}");
        }
    }
}
