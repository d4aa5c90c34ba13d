//! Channels in Kraus form and their standard derived objects.
//!
//! A channel is stored in the Heisenberg picture, `Φ(A) = Σ_k V_k* A V_k` with
//! `Σ_k V_k* V_k = I`; the preadjoint is `Φ_*(ρ) = Σ_k V_k ρ V_k*`.
//!
//! The Choi matrix of a map `Φ: B(C^m) → B(C^n)` is `Σ_ij E_ij ⊗ Φ(E_ij)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::numerics::Tolerances;
use crate::CMat;

/// A unital completely positive map on `B(C^D)` given by Kraus operators.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub dim: usize,
    pub kraus: Vec<CMat>,
    pub label: String,
    /// `‖Σ V*V − I‖₂` measured at construction.
    pub unitality_defect: f64,
    /// `‖Σ V V* − I‖₂`; zero means the preadjoint is unital too.
    pub trace_defect: f64,
}

/// Matrix of `A ↦ Φ(A)` on column-stacked vectors, with the preadjoint matrix.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub dim: usize,
    pub mat: CMat,
    /// Matrix of `ρ ↦ Φ_*(ρ)`, equal to `mat*`.
    pub pre: CMat,
}

impl TransferMatrix {
    pub fn new(dim: usize, mat: CMat) -> Self {
        let pre = mat.adjoint();
        TransferMatrix { dim, mat, pre }
    }

    pub fn apply(&self, a: &CMat) -> CMat {
        let v = &self.mat * linalg::vec_of(a);
        linalg::unvec(v.as_slice(), self.dim)
    }

    pub fn apply_pre(&self, rho: &CMat) -> CMat {
        let v = &self.pre * linalg::vec_of(rho);
        linalg::unvec(v.as_slice(), self.dim)
    }

    pub fn compose(&self, other: &TransferMatrix) -> TransferMatrix {
        TransferMatrix::new(self.dim, &self.mat * &other.mat)
    }

    pub fn identity(dim: usize) -> Self {
        TransferMatrix::new(dim, linalg::identity(dim * dim))
    }
}

/// Stinespring isometry `V = Σ_k V_k ⊗ |e_k⟩`, rows indexed `h·K + k`.
#[derive(Debug, Clone)]
pub struct StinespringData {
    pub isometry: CMat,
    pub env_dim: usize,
}

/// A completely positive map `B(C^din) → B(C^dout)` in Heisenberg form:
/// `Φ(A) = Σ_k L_k* A L_k` with each `L_k` of shape `din × dout`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausMap {
    pub din: usize,
    pub dout: usize,
    #[serde(with = "crate::format::mat_list")]
    pub kraus: Vec<CMat>,
}

impl KrausMap {
    pub fn apply(&self, a: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dout, self.dout);
        for l in &self.kraus {
            out += l.adjoint() * a * l;
        }
        out
    }

    pub fn apply_pre(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.din, self.din);
        for l in &self.kraus {
            out += l * rho * l.adjoint();
        }
        out
    }

    pub fn transfer(&self) -> CMat {
        transfer_of(&self.kraus, self.din, self.dout)
    }
}

/// Transfer matrix (`dout² × din²`) of `A ↦ Σ L* A L`.
pub fn transfer_of(kraus: &[CMat], din: usize, dout: usize) -> CMat {
    let mut t = CMat::zeros(dout * dout, din * din);
    for l in kraus {
        t += linalg::kron(&l.transpose(), &l.adjoint());
    }
    t
}

/// Choi matrix of a linear map given by its action on matrix units.
pub fn choi_of_map(f: impl Fn(&CMat) -> CMat, din: usize, dout: usize) -> CMat {
    let mut choi = CMat::zeros(din * dout, din * dout);
    for i in 0..din {
        for j in 0..din {
            let img = f(&linalg::unit(din, din, i, j));
            choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&img);
        }
    }
    choi
}

/// Minimal Kraus operators (`din × dout`, HS-orthogonal) from a Choi matrix.
/// Fails with `NotCp` if the Choi matrix has an eigenvalue below `−eq_tol·‖C‖`.
pub fn kraus_from_choi(choi: &CMat, din: usize, dout: usize, tol: &Tolerances) -> Result<Vec<CMat>> {
    let (vals, vecs) = linalg::eigh(choi);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(&min) = vals.first() {
        if min < -tol.eq_tol * scale.max(1.0) {
            return Err(Error::NotCp { min_eigenvalue: min });
        }
    }
    let mut out = Vec::new();
    for (k, &mu) in vals.iter().enumerate().rev() {
        if mu <= tol.rank_tol * scale || scale == 0.0 {
            continue;
        }
        let s = mu.sqrt();
        let v = vecs.column(k);
        let l = CMat::from_fn(din, dout, |i, a| v[i * dout + a].conj() * s);
        out.push(l);
    }
    Ok(out)
}

impl ChannelSpec {
    pub fn from_kraus(kraus: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        let c = Self::from_kraus_unchecked(kraus, "")?;
        if c.unitality_defect > tol.eq_tol {
            return Err(Error::NotUnital { defect: c.unitality_defect });
        }
        Ok(c)
    }

    /// Builds the channel without enforcing unitality (the defect is still recorded).
    pub fn from_kraus_unchecked(kraus: Vec<CMat>, label: &str) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let d = first.nrows();
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if k.nrows() != d { k.nrows() } else { k.ncols() },
                });
            }
            if !linalg::is_finite(k) {
                return Err(Error::NonFinite { context: "Kraus operator".into() });
            }
        }
        let mut s = CMat::zeros(d, d);
        let mut r = CMat::zeros(d, d);
        for k in &kraus {
            s += k.adjoint() * k;
            r += k * k.adjoint();
        }
        let id = linalg::identity(d);
        Ok(ChannelSpec {
            dim: d,
            unitality_defect: linalg::spectral_norm(&(s - &id)),
            trace_defect: linalg::spectral_norm(&(r - &id)),
            kraus,
            label: label.to_string(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Preadjoint is unital as well, so `I/D` is invariant.
    pub fn is_bistochastic(&self, tol: &Tolerances) -> bool {
        self.trace_defect <= tol.eq_tol
    }

    fn check_dim(&self, a: &CMat) -> Result<()> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: a.nrows() });
        }
        Ok(())
    }

    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        self.check_dim(a)?;
        Ok(self.apply_unchecked(a))
    }

    pub(crate) fn apply_unchecked(&self, a: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for v in &self.kraus {
            out += v.adjoint() * a * v;
        }
        out
    }

    pub fn preadjoint_apply(&self, rho: &CMat) -> Result<CMat> {
        self.check_dim(rho)?;
        Ok(self.preadjoint_unchecked(rho))
    }

    pub(crate) fn preadjoint_unchecked(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for v in &self.kraus {
            out += v * rho * v.adjoint();
        }
        out
    }

    pub fn transfer(&self) -> TransferMatrix {
        TransferMatrix::new(self.dim, transfer_of(&self.kraus, self.dim, self.dim))
    }

    /// Transfer matrix of `Φⁿ`, by repeated squaring.
    pub fn power(&self, n: usize) -> Result<TransferMatrix> {
        if n == 0 {
            return Err(Error::InvalidParameter("power must be at least 1".into()));
        }
        Ok(transfer_power(&self.transfer(), n))
    }

    pub fn choi(&self) -> CMat {
        choi_of_map(|e| self.apply_unchecked(e), self.dim, self.dim)
    }

    /// Choi matrix together with an equivalent channel whose Kraus operators
    /// are HS-orthogonal and as few as the Choi rank.
    pub fn choi_and_minimal_kraus(&self, tol: &Tolerances) -> Result<(CMat, ChannelSpec)> {
        let choi = self.choi();
        let kraus = kraus_from_choi(&choi, self.dim, self.dim, tol)?;
        let kraus = if kraus.is_empty() { vec![CMat::zeros(self.dim, self.dim)] } else { kraus };
        let mut min = ChannelSpec::from_kraus_unchecked(kraus, &self.label)?;
        min.label = self.label.clone();
        Ok((choi, min))
    }

    pub fn stinespring(&self) -> StinespringData {
        let k = self.kraus.len();
        let d = self.dim;
        let mut v = CMat::zeros(d * k, d);
        for (idx, vk) in self.kraus.iter().enumerate() {
            for h in 0..d {
                for j in 0..d {
                    v[(h * k + idx, j)] = vk[(h, j)];
                }
            }
        }
        StinespringData { isometry: v, env_dim: k }
    }

    /// Channel `A ↦ W* Φ(W A W*) W` for an isometry `W` onto an invariant
    /// subspace whose projection commutes with every Kraus operator.
    pub fn compress(&self, w: &CMat, label: &str) -> Result<ChannelSpec> {
        let kraus: Vec<CMat> = self.kraus.iter().map(|v| w.adjoint() * v * w).collect();
        ChannelSpec::from_kraus_unchecked(kraus, label)
    }
}

pub fn from_kraus(kraus: Vec<CMat>, tol: &Tolerances) -> Result<ChannelSpec> {
    ChannelSpec::from_kraus(kraus, tol)
}

pub fn transfer_power(t: &TransferMatrix, n: usize) -> TransferMatrix {
    let mut result: Option<CMat> = None;
    let mut base = t.mat.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r * &base,
            });
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    TransferMatrix::new(t.dim, result.unwrap_or_else(|| linalg::identity(t.dim * t.dim)))
}

/// Largest eigenvalue of `Φ(A*A) − Φ(A)*Φ(A)` negated, i.e. the Schwarz
/// inequality violation for one `A` (≤ 0 up to rounding for CP unital maps).
pub fn schwarz_violation(c: &ChannelSpec, a: &CMat) -> f64 {
    let lhs = c.apply_unchecked(&(a.adjoint() * a));
    let fa = c.apply_unchecked(a);
    let gap = lhs - fa.adjoint() * fa;
    -linalg::eigh(&gap).0.first().cloned().unwrap_or(0.0)
}

/// `Φ_a ⊕ Φ_b` on `C^{d_a} ⊕ C^{d_b}`, with Kraus operators `V_k ⊕ 0` and `0 ⊕ W_l`.
pub fn direct_sum(a: &ChannelSpec, b: &ChannelSpec) -> ChannelSpec {
    let (da, db) = (a.dim, b.dim);
    let mut kraus = Vec::with_capacity(a.kraus.len() + b.kraus.len());
    for v in &a.kraus {
        let mut k = CMat::zeros(da + db, da + db);
        k.view_mut((0, 0), (da, da)).copy_from(v);
        kraus.push(k);
    }
    for w in &b.kraus {
        let mut k = CMat::zeros(da + db, da + db);
        k.view_mut((da, da), (db, db)).copy_from(w);
        kraus.push(k);
    }
    let mut out = ChannelSpec::from_kraus_unchecked(kraus, "").expect("non-empty Kraus lists");
    out.label = format!("({}) + ({})", a.label, b.label);
    out
}
