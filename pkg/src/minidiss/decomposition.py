"""Unique decomposition of an htp generator into an effective Hamiltonian and
a minimal dissipator, plus the full gauge group of the non-unique splittings.

The Hamiltonian part is the orthogonal projection of the generator onto the
subspace of commutator maps under the Haar-averaged scalar product; it is
generated by a traceless Hermitian operator, and the remaining dissipator is
carried by traceless Lindblad operators.  Non-minimal representations are
reached by gauge transformations (channel shifts by multiples of the identity
and indefinite-unitary channel mixing) that leave the generator invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hilbert import herm_defect
from . import superop
from .superop import (
    CHOI_RANK_CUTOFF,
    HTP_TOL,
    choi_of,
    dissipator_superop,
    ham_superop,
    is_htp_generator,
    pseudo_kraus_from_superop,
    vec,
)

TRACE_TOL = 1e-11


@dataclass(frozen=True)
class GeneratorSplit:
    """Effective Hamiltonian plus (rate, Lindblad operator) channels."""
    k_eff: np.ndarray          # (N, N) Hermitian
    rates: np.ndarray          # (K,) real
    lindblads: np.ndarray      # (K, N, N) complex

    @property
    def dim(self) -> int:
        return self.k_eff.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.rates)


def reassemble(split: GeneratorSplit) -> np.ndarray:
    """Superoperator -i[K,.] + sum_k gamma_k D[L_k]."""
    return superop.gksl_superop(split.k_eff, split.rates, split.lindblads)


def dissipator_superop_of(split: GeneratorSplit) -> np.ndarray:
    mat = np.zeros((split.dim ** 2, split.dim ** 2), dtype=complex)
    for g, l in zip(split.rates, split.lindblads):
        mat += g * dissipator_superop(l)
    return mat


def dissipator_action(split: GeneratorSplit, rho: np.ndarray) -> np.ndarray:
    """sum_k gamma_k (L_k rho L_k^dag - (1/2){L_k^dag L_k, rho})."""
    if rho.shape != split.k_eff.shape:
        raise ValueError("dimension mismatch")
    out = np.zeros_like(rho, dtype=complex)
    for g, l in zip(split.rates, split.lindblads):
        ll = l.conj().T @ l
        out += g * (l @ rho @ l.conj().T - 0.5 * (ll @ rho + rho @ ll))
    return out


def effective_hamiltonian(pk: superop.PseudoKraus) -> np.ndarray:
    """Traceless Hermitian K generating the projection onto the commutator
    subspace: K = -(i/2N) sum_k gamma_k (Tr{E_k} E_k^dag - Tr{E_k^dag} E_k)."""
    n = pk.dim
    tr = np.einsum("kaa->k", pk.ops)
    k = (-1j / (2 * n)) * np.einsum(
        "k,kab->ab",
        pk.weights * tr, pk.ops.conj().transpose(0, 2, 1))
    k -= (-1j / (2 * n)) * np.einsum("k,kab->ab", pk.weights * tr.conj(), pk.ops)
    return (k + k.conj().T) / 2


def _fix_phases(ops: np.ndarray) -> np.ndarray:
    """Rotate each operator so its first nonzero entry (row-major) is
    positive real; stabilizes regression snapshots without affecting physics."""
    out = ops.copy()
    for i, l in enumerate(out):
        flat = l.reshape(-1)
        mags = np.abs(flat)
        if mags.max() == 0.0:
            continue
        idx = np.argmax(mags > 1e-8 * mags.max())
        out[i] = l * np.exp(-1j * np.angle(flat[idx]))
    return out


def minimal_split(mat: np.ndarray, rank_cutoff: float = CHOI_RANK_CUTOFF,
                  htp_tol: float = HTP_TOL) -> GeneratorSplit:
    """Unique split with traceless K and traceless Lindblad operators.

    K comes from the closed-form projection of the generator; the channels
    diagonalize the remaining dissipator's Choi matrix restricted to the
    traceless operator sector, so they are Hilbert-Schmidt orthonormal and
    traceless and the rates are the Kossakowski-matrix eigenvalues.
    """
    if not is_htp_generator(mat, htp_tol):
        raise ValueError("minimal_split requires a Hermiticity and trace "
                         "preserving generator")
    n = int(round(np.sqrt(mat.shape[0])))
    pk = pseudo_kraus_from_superop(mat, rank_cutoff)
    k = effective_hamiltonian(pk)
    diss = mat - ham_superop(k)
    choi = choi_of(diss)
    v0 = vec(np.eye(n, dtype=complex)) / np.sqrt(n)
    basis = np.linalg.qr(np.column_stack(
        [v0, np.eye(n * n, dtype=complex)[:, :-1]]))[0][:, 1:]
    sector = basis.conj().T @ choi @ basis
    evals, evecs = np.linalg.eigh((sector + sector.conj().T) / 2)
    # cutoff relative to the generator scale, not the (possibly vanishing)
    # dissipator scale, so purely Hamiltonian input yields zero channels
    scale = max(np.max(np.abs(evals)), np.max(np.abs(mat)), 1e-300)
    keep = np.abs(evals) > rank_cutoff * scale
    rates = evals[keep]
    ls = (basis @ evecs[:, keep]).T.reshape(-1, n, n).transpose(0, 2, 1)
    ls = _fix_phases(np.ascontiguousarray(ls))
    order = np.argsort(-rates)
    split = GeneratorSplit(k_eff=k, rates=rates[order],
                           lindblads=np.ascontiguousarray(ls[order]))
    resid = np.max(np.abs(reassemble(split) - mat))
    if resid > 1e-7 * max(1.0, np.max(np.abs(mat))):
        raise ValueError(f"split reassembly residual {resid:.3e}: "
                         "numerically defective generator")
    return split


# --------------------------------------------------------------------------
# gauge transformations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeParams:
    """(alpha, Upsilon, beta) acting on the rate-absorbed Lindblad vector.

    Upsilon must belong to U(p, q) for the signature matrix
    J = diag(I_p, -I_q) set by the signs of the split's rates
    (positive rates first)."""
    alphas: np.ndarray              # (K,) complex
    upsilon: np.ndarray             # (K, K) complex
    beta: float = 0.0

    @property
    def n_channels(self) -> int:
        return len(self.alphas)


def identity_gauge(n_channels: int) -> GaugeParams:
    return GaugeParams(alphas=np.zeros(n_channels, dtype=complex),
                       upsilon=np.eye(n_channels, dtype=complex), beta=0.0)


def signature(split: GeneratorSplit) -> tuple[int, int]:
    """(p, q) = number of positive / negative rates."""
    p = int(np.sum(split.rates > 0))
    return p, split.n_channels - p


def j_matrix(p: int, q: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(p), -np.ones(q)]))


def _ordered(split: GeneratorSplit) -> GeneratorSplit:
    order = np.argsort(-np.sign(split.rates), kind="stable")
    return GeneratorSplit(k_eff=split.k_eff, rates=split.rates[order],
                          lindblads=split.lindblads[order])


def gauge_transform(split: GeneratorSplit, g: GaugeParams) -> GeneratorSplit:
    """Apply (alpha, Upsilon, beta); the reassembled generator is unchanged.

    Rates are absorbed into the operator vector first, so the returned split
    carries rates +-1 and generally non-traceless operators (it is a valid,
    non-minimal representation of the same generator)."""
    split = _ordered(split)
    kch = split.n_channels
    if g.n_channels != kch:
        raise ValueError("gauge parameter size does not match channel count")
    p, q = signature(split)
    jd = np.concatenate([np.ones(p), -np.ones(q)])
    ud = g.upsilon.conj().T @ (jd[:, None] * g.upsilon)
    if np.max(np.abs(ud - np.diag(jd))) > 1e-10:
        raise ValueError("Upsilon is not in the indefinite unitary group "
                         f"U({p},{q})")
    n = split.dim
    lvec = np.sqrt(np.abs(split.rates))[:, None, None] * split.lindblads
    lnew = np.einsum("ij,jab->iab", g.upsilon, lvec)
    lnew = lnew + g.alphas[:, None, None] * np.eye(n)
    # K' = K + (1/2i)[(alpha*, Ups L) - h.c.] + beta, with (v,w) = v.J w
    term = np.einsum("i,i,iab->ab", jd, g.alphas.conj(),
                     np.einsum("ij,jab->iab", g.upsilon, lvec))
    k_new = split.k_eff + (term - term.conj().T) / 2j + g.beta * np.eye(n)
    return GeneratorSplit(k_eff=k_new, rates=jd.copy(), lindblads=lnew)


def compose_gauge(outer: GaugeParams, inner: GaugeParams,
                  p: int, q: int) -> GaugeParams:
    """Group law: (a',U',b')(a,U,b) = (a' + U'a, U'U, b' + b + Im(a', U'a))."""
    jd = np.concatenate([np.ones(p), -np.ones(q)])
    ua = outer.upsilon @ inner.alphas
    beta = outer.beta + inner.beta + float(np.imag(
        np.sum(jd * outer.alphas.conj() * ua)))
    return GaugeParams(alphas=outer.alphas + ua,
                       upsilon=outer.upsilon @ inner.upsilon, beta=beta)


def random_gauge(p: int, q: int, rng: np.random.Generator,
                 alpha_scale: float = 1.0, beta_scale: float = 1.0,
                 mix: bool = True) -> GaugeParams:
    """Random element of the gauge group for signature (p, q)."""
    kch = p + q
    alphas = alpha_scale * (rng.standard_normal(kch)
                            + 1j * rng.standard_normal(kch))
    if mix and kch > 0:
        x = rng.standard_normal((kch, kch)) + 1j * rng.standard_normal((kch, kch))
        s = (x - x.conj().T) / 2
        jd = np.concatenate([np.ones(p), -np.ones(q)])
        upsilon = scipy.linalg.expm(jd[:, None] * s)
    else:
        upsilon = np.eye(kch, dtype=complex)
    return GaugeParams(alphas=alphas, upsilon=upsilon,
                       beta=float(beta_scale * rng.standard_normal()))


def verify_minimality(split: GeneratorSplit, trials: int,
                      rng: np.random.Generator) -> dict:
    """Check that random gauge shifts never shrink the dissipator norm.

    Returns a report with the margin distribution; margins are
    ||D_shifted|| - ||D_minimal|| and must be >= -1e-10, strictly positive
    for shift magnitudes above 1e-6."""
    base = superop.htp_norm(dissipator_superop_of(split))
    kch = split.n_channels
    margins, magnitudes = [], []
    for _ in range(trials):
        scale = 10.0 ** rng.uniform(-5, 0)
        alphas = scale * (rng.standard_normal(kch)
                          + 1j * rng.standard_normal(kch))
        g = GaugeParams(alphas=alphas, upsilon=np.eye(kch, dtype=complex))
        shifted = gauge_transform(split, g)
        norm = superop.htp_norm(dissipator_superop_of(shifted))
        margins.append(norm - base)
        magnitudes.append(float(np.linalg.norm(alphas)))
    margins = np.array(margins)
    magnitudes = np.array(magnitudes)
    strict = magnitudes > 1e-6
    return {
        "base_norm": base,
        "margins": margins,
        "magnitudes": magnitudes,
        "min_margin": float(margins.min()) if trials else 0.0,
        "violations": int(np.sum(margins < -1e-10)),
        "strict_violations": int(np.sum(margins[strict] <= 0.0)),
    }


# --------------------------------------------------------------------------
# Hamiltonian basis
# --------------------------------------------------------------------------

def traceless_hermitian_basis(n: int) -> np.ndarray:
    """(n^2-1, n, n) generalized Gell-Mann basis scaled so that
    Tr{H_i H_j} = n(n+1)/2 delta_ij; the matching commutator maps are then
    orthonormal under the Haar-averaged scalar product."""
    mats = []
    for j in range(n):
        for i in range(j):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = m[j, i] = 1.0
            mats.append(m / np.sqrt(2))
            m = np.zeros((n, n), dtype=complex)
            m[i, j], m[j, i] = -1j, 1j
            mats.append(m / np.sqrt(2))
    for d in range(1, n):
        m = np.zeros((n, n), dtype=complex)
        m[:d, :d] = np.eye(d)
        m[d, d] = -d
        mats.append(m / np.sqrt(d * (d + 1)))
    scale = np.sqrt(n * (n + 1) / 2)
    return scale * np.array(mats)


def hamiltonian_projection_coefficients(mat: np.ndarray) -> np.ndarray:
    """<H_j, L> for the orthonormal commutator basis (alternative K route)."""
    basis = traceless_hermitian_basis(int(round(np.sqrt(mat.shape[0]))))
    return np.array([superop.htp_inner_product(ham_superop(h), mat)
                     for h in basis])
