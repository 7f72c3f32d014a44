"""Superoperator representations and the Haar-averaged geometry on htp(H).

Conventions, fixed repo-wide:

* column stacking: vec(rho)[a + N*b] = rho[a, b], so vec(A rho B) =
  (B^T kron A) vec(rho);
* a superoperator is its N^2 x N^2 matrix acting on vectorized operators;
* the Choi matrix C of a map Lam satisfies C[(i,a),(j,b)] = Lam(|i><j|)[a,b],
  i.e. C = (id x Lam)|Omega><Omega| with |Omega> = sum_i |ii> (unnormalized).

htp(H) is the real vector space of Hermiticity- and trace-preserving
superoperators (trace preservation in the generator sense: Tr{L[A]} = 0).
The scalar product on htp(H) is the double Haar average
<L1, L2> = avg_psi <psi| avg_phi L1[P] L2[P] |psi>, P = |phi><phi|,
evaluated in closed form through pseudo-Kraus representations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import herm_defect, random_hermitian

HTP_TOL = 1e-8
CHOI_RANK_CUTOFF = 1e-11

# Test hook (negative control): flips the sign of the fourth-moment term in
# the closed-form scalar product.  Must stay +1.0 in production.
_FOURTH_MOMENT_SIGN = 1.0


# --------------------------------------------------------------------------
# vectorization and elementary superoperators
# --------------------------------------------------------------------------

def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size)))
    return v.reshape(n, n, order="F")


def apply_superop(mat: np.ndarray, a: np.ndarray) -> np.ndarray:
    return unvec(mat @ vec(a))


def ham_superop(h: np.ndarray) -> np.ndarray:
    """Matrix of -i[h, .]."""
    n = h.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superop(l: np.ndarray) -> np.ndarray:
    """Matrix of rho -> l rho l^dag - (1/2){l^dag l, rho}."""
    n = l.shape[0]
    eye = np.eye(n)
    ll = l.conj().T @ l
    return np.kron(l.conj(), l) - 0.5 * (np.kron(eye, ll) + np.kron(ll.T, eye))


def gksl_superop(h: np.ndarray, rates, lindblads) -> np.ndarray:
    """-i[h,.] + sum_k gamma_k D[l_k], rates may be negative."""
    mat = ham_superop(h)
    for g, l in zip(rates, lindblads):
        mat = mat + g * dissipator_superop(l)
    return mat


# --------------------------------------------------------------------------
# membership checks
# --------------------------------------------------------------------------

def hermiticity_preservation_defect(mat: np.ndarray) -> float:
    """Max-entry Hermiticity defect of the Choi matrix."""
    c = choi_of(mat)
    return herm_defect(c)


def is_hermiticity_preserving(mat: np.ndarray, tol: float = HTP_TOL) -> bool:
    return hermiticity_preservation_defect(mat) <= tol


def generator_trace_defect(mat: np.ndarray) -> float:
    """Max deviation from Tr{L[B_ij]} = 0 (the vec(I)^dag row condition)."""
    n = int(round(np.sqrt(mat.shape[0])))
    row = vec(np.eye(n)).conj() @ mat
    return float(np.max(np.abs(row)))


def map_trace_defect(mat: np.ndarray) -> float:
    """Max deviation from trace preservation, Tr{Phi[B_ij]} = Tr{B_ij}."""
    n = int(round(np.sqrt(mat.shape[0])))
    iv = vec(np.eye(n)).conj()
    return float(np.max(np.abs(iv @ mat - iv)))


def is_htp_generator(mat: np.ndarray, tol: float = HTP_TOL) -> bool:
    return (hermiticity_preservation_defect(mat) <= tol
            and generator_trace_defect(mat) <= tol)


# --------------------------------------------------------------------------
# Choi matrix and pseudo-Kraus form
# --------------------------------------------------------------------------

def choi_of(mat: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator (reshuffle; an involution)."""
    n = int(round(np.sqrt(mat.shape[0])))
    l4 = np.asarray(mat).reshape(n, n, n, n)
    # l4[b, a, j, i] = mat[a + N b, i + N j];  C[(i,a),(j,b)] = that entry.
    return l4.transpose(3, 1, 2, 0).reshape(n * n, n * n)


def choi_to_liouville(choi: np.ndarray) -> np.ndarray:
    """Inverse of choi_of (same reshuffle)."""
    return choi_of(choi)


@dataclass(frozen=True)
class PseudoKraus:
    """Sum_k gamma_k E_k rho E_k^dag with real (possibly negative) weights.

    Operators are Hilbert-Schmidt orthonormal (Choi eigenvectors)."""
    weights: np.ndarray       # (K,) real
    ops: np.ndarray           # (K, N, N) complex

    @property
    def dim(self) -> int:
        return self.ops.shape[-1]


def pseudo_kraus_from_superop(mat: np.ndarray,
                              rank_cutoff: float = CHOI_RANK_CUTOFF,
                              herm_tol: float = HTP_TOL) -> PseudoKraus:
    """Pseudo-Kraus terms from the eigendecomposition of the Choi matrix.

    Eigenvalues with |gamma| <= rank_cutoff * spectral radius are dropped
    (the cutoff is relative, so it is scale-free in the coupling strength).
    """
    c = choi_of(mat)
    d = herm_defect(c)
    if d > herm_tol:
        raise ValueError(f"Choi matrix not Hermitian (defect {d:.3e}); "
                         "map is not Hermiticity preserving")
    w, v = np.linalg.eigh((c + c.conj().T) / 2)
    scale = np.max(np.abs(w)) if w.size else 0.0
    keep = np.abs(w) > rank_cutoff * scale
    n = int(round(np.sqrt(mat.shape[0])))
    # eigenvector v[i*N + a] holds E[a, i]
    ops = v[:, keep].T.reshape(-1, n, n).transpose(0, 2, 1)
    return PseudoKraus(weights=w[keep], ops=np.ascontiguousarray(ops))


def liouville_from_pseudo_kraus(pk: PseudoKraus) -> np.ndarray:
    """Assemble sum_k gamma_k (conj(E_k) kron E_k)."""
    n = pk.dim
    mat = np.zeros((n * n, n * n), dtype=complex)
    for g, e in zip(pk.weights, pk.ops):
        mat += g * np.kron(e.conj(), e)
    return mat


def trace_preservation_constraint_defect(pk: PseudoKraus) -> float:
    """Max-entry norm of sum_k gamma_k E_k^dag E_k (zero for generators)."""
    acc = np.einsum("k,kca,kcb->ab", pk.weights, pk.ops.conj(), pk.ops)
    return float(np.max(np.abs(acc)))


# --------------------------------------------------------------------------
# Haar sampling
# --------------------------------------------------------------------------

def haar_random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Ginibre matrix with the R-diagonal phase fixed."""
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_random_states(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """(samples, n) array of Haar-distributed normalized state vectors."""
    g = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# --------------------------------------------------------------------------
# scalar product and norm on htp(H)
# --------------------------------------------------------------------------

def _pk_inner(pk1: PseudoKraus, pk2: PseudoKraus, n: int) -> float:
    e, f = pk1.ops, pk2.ops
    # a[k,l] = Tr{E_k^dag F_l}
    a = np.einsum("kab,lab->kl", e.conj(), f)
    # b[k,l] = Tr{E_k^dag F_l F_l^dag E_k} = ||F_l^dag E_k||_F^2
    x = np.einsum("lca,kcb->lkab", f.conj(), e)
    b = np.einsum("lkab,lkab->kl", x, x.conj()).real
    gm = np.outer(pk1.weights, pk2.weights)
    total = np.sum(gm * (_FOURTH_MOMENT_SIGN * np.abs(a) ** 2 + b))
    return float(np.real(total)) / (n * n * (n + 1))


def htp_inner_product(l1: np.ndarray, l2: np.ndarray, tol: float = HTP_TOL) -> float:
    """Closed-form Haar-averaged scalar product of two htp superoperators."""
    if l1.shape != l2.shape:
        raise ValueError("dimension mismatch")
    for l in (l1, l2):
        if not is_htp_generator(l, tol):
            raise ValueError("input is not Hermiticity and trace preserving")
    n = int(round(np.sqrt(l1.shape[0])))
    return _pk_inner(pseudo_kraus_from_superop(l1),
                     pseudo_kraus_from_superop(l2), n)


def htp_norm(l: np.ndarray, tol: float = HTP_TOL) -> float:
    val = htp_inner_product(l, l, tol)
    return float(np.sqrt(max(val, 0.0)))


def _states_to_vec_projectors(phi: np.ndarray) -> np.ndarray:
    """(S, n) states -> (S, n^2) column-stacked vec(|phi><phi|)."""
    return np.einsum("as,bs->sba", phi.T, phi.conj().T).reshape(phi.shape[0], -1)


def mc_htp_inner_product(l1: np.ndarray, l2: np.ndarray, samples: int,
                         rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo estimator of the scalar product; returns (mean, stderr).

    The output-state average is carried out analytically as (1/N) Tr{...};
    only the input state |phi> is sampled.
    """
    n = int(round(np.sqrt(l1.shape[0])))
    phi = haar_random_states(n, samples, rng)
    pfl = _states_to_vec_projectors(phi)
    av = pfl @ l1.T
    bv = pfl @ l2.T
    a3 = av.reshape(samples, n, n)   # a3[s, b, a] = (L1[P])[a, b]
    b3 = bv.reshape(samples, n, n)
    vals = np.einsum("sba,sab->s", a3, b3).real / n
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def fourth_moment_closed_form(x1: np.ndarray, x2: np.ndarray,
                              x3: np.ndarray) -> np.ndarray:
    """Closed form of int dmu(U) U X1 U^dag X2 U X3 U^dag."""
    n = x1.shape[0]
    t31 = np.trace(x3 @ x1)
    t1, t2, t3 = np.trace(x1), np.trace(x2), np.trace(x3)
    den = n * (n * n - 1)
    return ((n * t31 - t1 * t3) / den * t2 * np.eye(n)
            + (n * t1 * t3 - t31) / den * x2)


def mc_fourth_moment(x1: np.ndarray, x2: np.ndarray, x3: np.ndarray,
                     samples: int, rng: np.random.Generator
                     ) -> tuple[np.ndarray, float]:
    """Sample estimate of the fourth-moment integral; returns (mean, stderr).

    stderr is the largest entrywise standard error over the matrix.
    """
    n = x1.shape[0]
    acc = np.zeros((samples, n, n), dtype=complex)
    for s in range(samples):
        u = haar_random_unitary(n, rng)
        acc[s] = u @ x1 @ u.conj().T @ x2 @ u @ x3 @ u.conj().T
    mean = acc.mean(axis=0)
    std = np.sqrt((np.abs(acc - mean) ** 2).mean(axis=0))
    return mean, float(std.max() / np.sqrt(samples))


# --------------------------------------------------------------------------
# random htp generators (test corpora)
# --------------------------------------------------------------------------

def random_htp_generator(n: int, rng: np.random.Generator,
                         channels: int | None = None) -> np.ndarray:
    """Random htp generator: -i[H,.] plus channels with signed rates."""
    if channels is None:
        channels = n * n - 1
    h = random_hermitian(n, rng)
    mat = ham_superop(h)
    for _ in range(channels):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a /= np.linalg.norm(a)
        mat = mat + rng.uniform(-1.0, 1.0) * dissipator_superop(a)
    return mat
