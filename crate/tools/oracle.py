"""Independent numpy reference for derived test values.

Reads channel or walk JSON (as written by `qstructure example`) and prints
dimensions and spectral data computed without the Rust code paths:
linear-algebra characterizations solved over the reals by SVD.
"""

import json
import sys

import numpy as np

TOL = 1e-9


def load(path):
    with open(path) as f:
        doc = json.load(f)
    mat = lambda rows: np.array([[complex(re, im) for re, im in row] for row in rows])
    if "kraus" in doc:
        return [mat(k) for k in doc["kraus"]]
    dims = doc["local_dims"]
    off = np.concatenate([[0], np.cumsum(dims)])
    d = int(off[-1])
    kraus = []
    for t in doc["transitions"]:
        v = np.zeros((d, d), complex)
        i, j = t["to"], t["from"]
        v[off[i]:off[i + 1], off[j]:off[j + 1]] = mat(t["matrix"])
        kraus.append(v)
    return kraus


def transfer(kraus):
    # column-stacking vec: vec(V* A V) = (V^T ⊗ V*) vec(A)
    return sum(np.kron(v.T, v.conj().T) for v in kraus)


def vec(a):
    return a.reshape(-1, order="F")


def unvec(x, d):
    return x.reshape(d, d, order="F")


def real_null(rows):
    """Real null space of a complex-linear-plus-antilinear system given as a real matrix."""
    if rows.shape[0] == 0:
        return np.eye(rows.shape[1])
    _, s, vh = np.linalg.svd(rows)
    top = s[0] if s.size else 1.0
    rank = int(np.sum(s > TOL * max(top, 1.0)))
    return vh[rank:].T


def as_real(m):
    """Real form of x ↦ M x on C^n viewed as R^{2n}."""
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def adjoint_real(d):
    """Real form of A ↦ A* on vec(A)."""
    n = d * d
    perm = np.zeros((n, n))
    for i in range(d):
        for j in range(d):
            perm[i + d * j, j + d * i] = 1.0
    return np.block([[perm, np.zeros((n, n))], [np.zeros((n, n)), -perm]])


def complex_dim(real_basis):
    return real_basis.shape[1] // 2


def multiplicative_conditions(kraus):
    """Real matrix whose null space is M(Φ): (I − WW*)(A ⊗ I)W = 0 for A and A*."""
    d = kraus[0].shape[0]
    k = len(kraus)
    w = np.vstack([v for v in kraus])  # rows indexed by (k, h): W = Σ_k |k⟩ ⊗ V_k
    proj = np.eye(k * d) - w @ w.conj().T
    cols = []
    for idx in range(d * d):
        e = np.zeros(d * d, complex)
        e[idx] = 1
        a = unvec(e, d)
        cols.append(vec(proj @ np.kron(np.eye(k), a) @ w))
    lin = as_real(np.array(cols).T)
    return np.vstack([lin, lin @ adjoint_real(d)])


def multiplicative_domain(kraus):
    return real_null(multiplicative_conditions(kraus))


def dfa(kraus):
    """N = {A : Φⁿ(A) ∈ M(Φ) for all n ≥ 0}, shrinking N_k until it stabilizes."""
    d = kraus[0].shape[0]
    cond = multiplicative_conditions(kraus)
    t = as_real(transfer(kraus))
    basis = real_null(cond)
    images = basis
    for _ in range(d * d):
        if basis.shape[1] == 0:
            break
        images = t @ images
        coeff = real_null(cond @ images)
        if coeff.shape[1] == basis.shape[1]:
            break
        basis, images = basis @ coeff, images @ coeff
    return basis


def to_complex_mats(real_basis, d):
    n = d * d
    return [unvec(real_basis[:n, j] + 1j * real_basis[n:, j], d) for j in range(real_basis.shape[1])]


def center_dim(real_basis, d):
    mats = to_complex_mats(real_basis, d)
    n = d * d
    # Z = {A ∈ span : [A, B] = 0 for B in span}; parametrize A by real coefficients
    cols = []
    for j in range(real_basis.shape[1]):
        a = mats[j]
        cols.append(np.concatenate([vec(a @ b - b @ a) for b in mats]))
    sys_ = np.array(cols).T
    null = real_null(np.vstack([sys_.real, sys_.imag]))
    return null.shape[1] // 2


def fixed_dim(kraus):
    t = transfer(kraus)
    s = np.linalg.svd(t - np.eye(t.shape[0]), compute_uv=False)
    return int(np.sum(s <= TOL * max(s[0], 1.0)))


def spectrum(kraus):
    return np.linalg.eigvals(transfer(kraus))


def report(path):
    kraus = load(path)
    d = kraus[0].shape[0]
    ev = spectrum(kraus)
    mods = np.abs(ev)
    peripheral = ev[mods > 1 - 1e-7]
    nonper = mods[mods <= 1 - 1e-7]
    m = multiplicative_domain(kraus)
    n = dfa(kraus)
    out = {
        "D": d,
        "dim_F": fixed_dim(kraus),
        "dim_M": complex_dim(m),
        "dim_N": complex_dim(n),
        "dim_Z_N": center_dim(n, d),
        "peripheral": sorted([[round(z.real, 12), round(z.imag, 12)] for z in peripheral]),
        "max_nonperipheral": float(nonper.max()) if nonper.size else 0.0,
    }
    print(json.dumps(out))


def pauli_compressions(d, alpha):
    """Transfer eigenvalues of the Pauli walk compressed to the ranges of
    diag(P+, P-) and diag(P-, P+), built here from scratch."""
    omega = np.exp(2j * np.pi / d)
    z = np.diag([omega**k for k in range(d)])
    x = np.roll(np.eye(d), 1, axis=0)
    blocks = {(0, 0): np.sqrt(alpha) * z, (1, 1): np.sqrt(alpha) * z,
              (0, 1): np.sqrt(1 - alpha) * x, (1, 0): np.sqrt(1 - alpha) * x}
    kraus = []
    for (i, j), l in blocks.items():
        v = np.zeros((2 * d, 2 * d), complex)
        v[i * d:(i + 1) * d, j * d:(j + 1) * d] = l
        kraus.append(v)
    even = np.diag([1.0 if k % 2 == 0 else 0.0 for k in range(d)])
    odd = np.eye(d) - even
    out = {}
    for name, (a, b) in {"plus": (even, odd), "minus": (odd, even)}.items():
        p = np.block([[a, np.zeros((d, d))], [np.zeros((d, d)), b]])
        vals, vecs = np.linalg.eigh(p)
        w = vecs[:, vals > 0.5]
        compressed = [w.conj().T @ v @ w for v in kraus]
        ev = np.linalg.eigvals(transfer(compressed))
        ev = ev[np.abs(ev) > 1e-9]
        out[name] = sorted([[round(e.real, 12), round(e.imag, 12)] for e in ev])
    print(json.dumps(out))


if __name__ == "__main__":
    if sys.argv[1] == "--pauli-compressions":
        pauli_compressions(int(sys.argv[2]), float(sys.argv[3]))
    else:
        for p in sys.argv[1:]:
            report(p)
