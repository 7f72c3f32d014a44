"""Dense complex operator algebra: tensor products, partial traces, spectral
functions and entropies.

All operators are plain square complex numpy arrays.  Units: hbar = k_B = 1,
energies in units of a reference frequency.  Logarithms are natural (nats).
"""

from __future__ import annotations

import numpy as np

# Tolerances fixed repo-wide.
HERM_TOL = 1e-10
LOG_EIG_CUTOFF = 1e-14
NULL_SPACE_CUTOFF = 1e-12
SUPPORT_TOL = 1e-8


class SupportError(ValueError):
    """First argument of a relative entropy leaks outside the support of the second."""


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def herm_defect(a: np.ndarray) -> float:
    """Max-entry deviation from Hermiticity."""
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    return herm_defect(a) <= tol


def is_traceless(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    return abs(np.trace(a)) <= tol


def is_positive_semidefinite(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    if not is_hermitian(a, tol):
        return False
    w = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return bool(w.min() >= -tol)


def check_density_matrix(rho: np.ndarray, tol: float = HERM_TOL) -> None:
    """Raise ValueError unless rho is a valid density matrix.

    Hermitian and unit trace within `tol` (max-entry / absolute), minimum
    eigenvalue >= -tol.
    """
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    d = herm_defect(rho)
    if d > tol:
        raise ValueError(f"density matrix not Hermitian: defect {d:.3e} > {tol:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace {tr} deviates from 1 by more than {tol:.3e}")
    wmin = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if wmin < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {wmin:.3e}")


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, system factor first."""
    return np.kron(a, b)


def partial_trace_env(rho: np.ndarray, dim_s: int, dim_e: int) -> np.ndarray:
    """Trace out the second (environment) tensor factor."""
    rho = np.asarray(rho)
    if rho.shape != (dim_s * dim_e, dim_s * dim_e):
        raise ValueError(
            f"operator of shape {rho.shape} incompatible with dims ({dim_s}, {dim_e})"
        )
    r = rho.reshape(dim_s, dim_e, dim_s, dim_e)
    return np.trace(r, axis1=1, axis2=3)


def matrix_function(a: np.ndarray, kind: str, exponent: float | None = None,
                    log_cutoff: float = LOG_EIG_CUTOFF) -> np.ndarray:
    """Apply a spectral function to a Hermitian operator.

    kind is one of 'exp', 'log', 'power'.  For 'log' eigenvalues below
    `log_cutoff` are clamped to the cutoff, so numerically pure states stay
    finite; genuine support violations are detected elsewhere.
    """
    a = np.asarray(a)
    d = herm_defect(a)
    if d > HERM_TOL:
        raise ValueError(f"matrix_function requires Hermitian input (defect {d:.3e})")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    if kind == "exp":
        fw = np.exp(w)
    elif kind == "log":
        fw = np.log(np.maximum(w, log_cutoff))
    elif kind == "power":
        if exponent is None:
            raise ValueError("'power' needs an exponent")
        fw = np.power(w, exponent)
    else:
        raise ValueError(f"unknown spectral function {kind!r}")
    return (v * fw) @ v.conj().T


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) = -sum l_i ln l_i over eigenvalues above the log cutoff."""
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > LOG_EIG_CUTOFF]
    return float(-np.sum(w * np.log(w)))


def relative_entropy(a: np.ndarray, b: np.ndarray) -> float:
    """S(a||b) = Tr{a (ln a - ln b)} with the clamped-log convention.

    Raises SupportError when a has weight above SUPPORT_TOL on the numerical
    null space of b.
    """
    wb, vb = np.linalg.eigh((b + b.conj().T) / 2)
    null = wb < NULL_SPACE_CUTOFF
    if np.any(null):
        p_null = (vb[:, null] @ vb[:, null].conj().T)
        leak = float(np.real(np.trace(a @ p_null)))
        if leak > SUPPORT_TOL:
            raise SupportError(
                f"support violation: weight {leak:.3e} outside the support of b"
            )
    wa = np.linalg.eigvalsh((a + a.conj().T) / 2)
    wa = wa[wa > LOG_EIG_CUTOFF]
    term_a = float(np.sum(wa * np.log(wa)))
    log_b = (vb * np.log(np.maximum(wb, LOG_EIG_CUTOFF))) @ vb.conj().T
    term_b = float(np.real(np.trace(a @ log_b)))
    return term_a - term_b


def gibbs_state(h: np.ndarray, beta: float) -> np.ndarray:
    """e^{-beta h} / Z for Hermitian h (eigenvalues shifted for stability)."""
    h = np.asarray(h)
    d = herm_defect(h)
    if d > HERM_TOL:
        raise ValueError(f"gibbs_state requires Hermitian input (defect {d:.3e})")
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    x = np.exp(-beta * (w - w.min()))
    x /= x.sum()
    return (v * x) @ v.conj().T


def random_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random state from a normalized Wishart matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    w = g @ g.conj().T
    return w / np.trace(w)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2
