"""Microscopic reference models: Jaynes-Cummings qubit + single oscillator
mode, single-mode pure dephasing (with its exact coherence-factor oracle),
and detailed-balance GKSL semigroups.

Basis conventions: qubit basis {|0> ground, |1> excited}, sigma_plus = |1><0|,
sigma_z = diag(1, -1) with sigma_z|0> = +|0>; oscillator truncated to the
lowest m_trunc number states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import hilbert
from .hilbert import gibbs_state, tensor

sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
sigma_y = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)
sigma_z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
sigma_p = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |1><0|
sigma_m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |0><1|
number_op_qubit = sigma_p @ sigma_m                            # diag(0, 1)

TAIL_TOL = 1e-10


class TruncationError(ValueError):
    """Oscillator truncation too small for the requested temperature."""


def annihilation(m: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, m, dtype=float)), k=1).astype(complex)


def thermal_oscillator_state(omega: float, k_t: float, m: int) -> np.ndarray:
    """Thermal state of omega * b^dag b truncated to m levels.

    Raises TruncationError when the thermal weight beyond the truncation
    exceeds TAIL_TOL."""
    if k_t <= 0:
        p = np.zeros(m)
        p[0] = 1.0
        return np.diag(p).astype(complex)
    r = np.exp(-omega / k_t)
    if r ** m > TAIL_TOL:
        raise TruncationError(
            f"thermal tail weight {r**m:.3e} beyond m_trunc={m} exceeds {TAIL_TOL}")
    p = (1 - r) * r ** np.arange(m)
    p /= p.sum()
    return np.diag(p).astype(complex)


@dataclass(frozen=True)
class TotalModel:
    """System + environment model on the truncated product space."""
    dim_s: int
    dim_e: int
    h_s: Callable[[float], np.ndarray]
    h_e: np.ndarray
    h_i: Callable[[float], np.ndarray]
    rho_e0: np.ndarray
    params: dict = field(default_factory=dict)
    time_dependent: bool = False

    def hamiltonian(self, t: float) -> np.ndarray:
        eye_e = np.eye(self.dim_e)
        eye_s = np.eye(self.dim_s)
        return (tensor(self.h_s(t), eye_e) + tensor(eye_s, self.h_e)
                + self.h_i(t))


@dataclass(frozen=True)
class JCParams:
    omega0: float = 1.0
    omega: float = 0.9
    g: float = 0.1
    k_t: float = 1.0
    m_trunc: int = 60
    rho11_0: float = 0.25
    rho10_0: complex = 0.0

    def initial_system_state(self) -> np.ndarray:
        rho = np.array([[1.0 - self.rho11_0, np.conj(self.rho10_0)],
                        [self.rho10_0, self.rho11_0]], dtype=complex)
        hilbert.check_density_matrix(rho)
        return rho


def build_jaynes_cummings(p: JCParams) -> TotalModel:
    """H_S = omega0 s+s-, H_E = omega b^dag b, H_I = g(s+ b + s- b^dag)."""
    if p.m_trunc < 2:
        raise ValueError("m_trunc must be at least 2")
    b = annihilation(p.m_trunc)
    h_s = p.omega0 * number_op_qubit
    h_e = p.omega * (b.conj().T @ b)
    h_i = p.g * (tensor(sigma_p, b) + tensor(sigma_m, b.conj().T))
    rho_e0 = thermal_oscillator_state(p.omega, p.k_t, p.m_trunc)
    return TotalModel(dim_s=2, dim_e=p.m_trunc,
                      h_s=lambda t: h_s, h_e=h_e, h_i=lambda t: h_i,
                      rho_e0=rho_e0,
                      params={"omega0": p.omega0, "omega": p.omega, "g": p.g,
                              "k_t": p.k_t, "m_trunc": p.m_trunc})


@dataclass(frozen=True)
class DephasingParams:
    omega0: float = 1.0
    omega: float = 1.0
    g: float = 0.1
    k_t: float = 1.0
    m_trunc: int = 60


def build_dephasing(p: DephasingParams) -> TotalModel:
    """Pure dephasing: H_I = sigma_z x g(b + b^dag); populations conserved."""
    b = annihilation(p.m_trunc)
    h_s = p.omega0 * number_op_qubit
    h_e = p.omega * (b.conj().T @ b)
    h_i = p.g * tensor(sigma_z, b + b.conj().T)
    rho_e0 = thermal_oscillator_state(p.omega, p.k_t, p.m_trunc)
    return TotalModel(dim_s=2, dim_e=p.m_trunc,
                      h_s=lambda t: h_s, h_e=h_e, h_i=lambda t: h_i,
                      rho_e0=rho_e0,
                      params={"omega0": p.omega0, "omega": p.omega, "g": p.g,
                              "k_t": p.k_t, "m_trunc": p.m_trunc})


def dephasing_coherence_factor(p: DephasingParams, t: np.ndarray) -> np.ndarray:
    """Exact |kappa(t)| from the displaced-oscillator solution:
    |kappa| = exp[-4 (g/omega)^2 (1 - cos omega t) coth(omega / 2 k_T)]."""
    lam2 = (p.g / p.omega) ** 2
    if p.k_t <= 0:
        coth = 1.0
    else:
        coth = 1.0 / np.tanh(p.omega / (2 * p.k_t))
    return np.exp(-4.0 * lam2 * (1.0 - np.cos(p.omega * np.asarray(t))) * coth)


def dephasing_rate(p: DephasingParams, t: np.ndarray) -> np.ndarray:
    """Analytic dephasing rate -(1/2) d/dt ln|kappa(t)| for the sigma_z
    channel normalized as gamma (sz rho sz - rho)."""
    lam2 = (p.g / p.omega) ** 2
    if p.k_t <= 0:
        coth = 1.0
    else:
        coth = 1.0 / np.tanh(p.omega / (2 * p.k_t))
    return 2.0 * lam2 * coth * p.omega * np.sin(p.omega * np.asarray(t))


def rabi_excited_population(p: JCParams, t: np.ndarray,
                            rho11_0: float) -> np.ndarray:
    """Zero-temperature single-excitation oracle: the {|1,0>, |0,1>} block is
    closed, so the excited population follows the detuned Rabi formula."""
    delta = p.omega0 - p.omega
    big_omega = np.sqrt(delta ** 2 + 4 * p.g ** 2)
    t = np.asarray(t)
    amp2 = (np.cos(big_omega * t / 2) ** 2
            + (delta / big_omega) ** 2 * np.sin(big_omega * t / 2) ** 2)
    return rho11_0 * amp2


# --------------------------------------------------------------------------
# detailed-balance GKSL semigroups (second-law reference corpus)
# --------------------------------------------------------------------------

def build_detailed_balance_gksl(dim: int, beta: float,
                                rng: np.random.Generator
                                ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random thermal semigroup: (h, rates, jump operators).

    Jump operators are |i><j| between nondegenerate eigenstates of a random
    diagonal h, with upward/downward rates in the detailed-balance ratio
    e^{-beta dE}; the Gibbs state of h is then an exact fixed point of the
    dissipator."""
    energies = np.sort(rng.uniform(0.0, 2.0, size=dim))
    # enforce gaps so the fixed point is unique and well conditioned
    energies += 0.1 * np.arange(dim)
    h = np.diag(energies).astype(complex)
    rates, ls = [], []
    for i in range(dim):
        for j in range(i + 1, dim):
            base = rng.uniform(0.2, 1.0)
            down = np.zeros((dim, dim), dtype=complex)
            down[i, j] = 1.0                      # |i><j|, E_i < E_j
            up = down.conj().T
            rates.append(base)
            ls.append(down)
            rates.append(base * np.exp(-beta * (energies[j] - energies[i])))
            ls.append(up)
    return h, np.array(rates), np.array(ls)


# --------------------------------------------------------------------------
# structure report for extracted Jaynes-Cummings splits
# --------------------------------------------------------------------------

def expected_jc_structure(times: np.ndarray, splits: list, omega0: float,
                          tol: float = 1e-8) -> dict:
    """Check the extracted splits against the known JC structure.

    Asserts K diagonal in the energy basis and dissipator channels inside
    span{sigma_plus, sigma_minus, sigma_z}; reports the frequency shift
    delta_omega(t) = K11 - K00 - omega0 reconstructed from the traceless K.
    """
    basis = np.array([sigma_p / np.sqrt(np.trace(sigma_p.conj().T @ sigma_p)),
                      sigma_m / np.sqrt(np.trace(sigma_m.conj().T @ sigma_m)),
                      sigma_z / np.sqrt(np.trace(sigma_z.conj().T @ sigma_z))])
    max_offdiag = 0.0
    max_leak = 0.0
    delta_omega = np.full(len(times), np.nan)
    for i, split in enumerate(splits):
        if split is None:
            continue
        k = split.k_eff
        max_offdiag = max(max_offdiag, float(np.abs(k[0, 1])), float(np.abs(k[1, 0])))
        delta_omega[i] = float(np.real(k[1, 1] - k[0, 0])) - omega0
        for g, l in zip(split.rates, split.lindblads):
            proj = np.einsum("cab,ab->c", basis.conj(), l)
            resid = l - np.einsum("c,cab->ab", proj, basis)
            max_leak = max(max_leak,
                           float(np.sqrt(abs(g)) * np.linalg.norm(resid)))
    return {
        "k_max_offdiagonal": max_offdiag,
        "channel_leakage": max_leak,
        "delta_omega": delta_omega,
        "delta_omega_0": float(delta_omega[0]),
        "structure_ok": bool(max_offdiag < tol and max_leak < tol),
    }


def jc_effective_hamiltonians(splits: list) -> np.ndarray:
    """K series in the ground-state-energy-zero convention (K00 = 0), which
    restores the [omega0 + delta_omega] s+s- form from the traceless K."""
    out = np.zeros((len(splits), 2, 2), dtype=complex)
    for i, s in enumerate(splits):
        if s is None:
            out[i] = np.nan
            continue
        out[i] = s.k_eff - s.k_eff[0, 0] * np.eye(2)
    return out
