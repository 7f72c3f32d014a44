"""Numerical extraction of the exact dynamical map and its time-local
generator from a microscopic model, plus divisibility and information-flow
witnesses.

The map trajectory is built by unitary propagation of the system matrix units
tensored with the initial thermal environment state; the generator is the
finite-difference derivative of the map times its inverse (explicit solve,
never a pseudoinverse, with condition monitoring: near-singular times are
excluded and reported rather than regularized).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import superop
from .decomposition import GeneratorSplit, minimal_split
from .models import TotalModel, TruncationError
from .superop import vec, unvec

COND_THRESHOLD = 1e8
LEAKAGE_TOL = 1e-8


@dataclass(frozen=True)
class MapTrajectory:
    """Dynamical maps on a uniform time grid (column-stacked Liouville form)."""
    times: np.ndarray                 # (T,)
    maps: np.ndarray                  # (T, N^2, N^2)
    condition_numbers: np.ndarray     # (T,)
    dim: int

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class GeneratorTrajectory:
    times: np.ndarray
    generators: np.ndarray            # (T, N^2, N^2)
    splits: list                      # GeneratorSplit or None per time
    valid: np.ndarray                 # (T,) bool; False at excluded times
    excluded: list = field(default_factory=list)
    htp_defect: float = 0.0

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def k_series(self) -> np.ndarray:
        n = self.splits[0].dim if self.splits[0] is not None else int(
            round(np.sqrt(self.generators.shape[1])))
        out = np.full((len(self.times), n, n), np.nan, dtype=complex)
        for i, s in enumerate(self.splits):
            if s is not None:
                out[i] = s.k_eff
        return out


def _check_uniform(times: np.ndarray) -> float:
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
        raise ValueError("time grid must be uniform")
    return float(dt[0])


def _matrix_unit_inputs(dim_s: int, rho_e0: np.ndarray) -> np.ndarray:
    """(N^2, D, D) initial total operators B_ij x rho_E, indexed by vec order."""
    d_e = rho_e0.shape[0]
    out = np.zeros((dim_s * dim_s, dim_s * d_e, dim_s * d_e), dtype=complex)
    for j in range(dim_s):
        for i in range(dim_s):
            b = np.zeros((dim_s, dim_s), dtype=complex)
            b[i, j] = 1.0
            out[i + dim_s * j] = np.kron(b, rho_e0)
    return out


def propagate_total(model: TotalModel, times: np.ndarray,
                    check_leakage: bool = True) -> MapTrajectory:
    """Build the reduced dynamical maps Phi_t on the grid.

    Time-independent models are propagated exactly in the eigenbasis of the
    total Hamiltonian; time-dependent ones by midpoint-exponential stepping
    (per-step error O(dt^3))."""
    times = np.asarray(times, dtype=float)
    _check_uniform(times)
    if model.time_dependent:
        return _propagate_stepped(model, times, check_leakage)
    return _propagate_eigenbasis(model, times, check_leakage)


def _leakage_projector_diag(model: TotalModel) -> np.ndarray:
    d = np.zeros(model.dim_e)
    d[-2:] = 1.0
    return np.kron(np.ones(model.dim_s), d)


def _propagate_eigenbasis(model: TotalModel, times: np.ndarray,
                          check_leakage: bool) -> MapTrajectory:
    n = model.dim_s
    h = model.hamiltonian(0.0)
    energies, v = np.linalg.eigh((h + h.conj().T) / 2)
    x0 = _matrix_unit_inputs(n, model.rho_e0)
    y0 = np.einsum("ca,kcd,db->kab", v.conj(), x0, v)      # V^dag X0 V
    # T[c,d,(a,b)]: partial trace of V M V^dag in one contraction
    vr = v.reshape(n, model.dim_e, -1)
    tmat = np.einsum("aec,bed->cdab", vr, vr.conj()).reshape(
        len(energies) ** 2, n * n)
    gaps = (energies[:, None] - energies[None, :]).reshape(-1)
    y0f = y0.reshape(n * n, -1)

    n_t = len(times)
    maps = np.empty((n_t, n * n, n * n), dtype=complex)
    if check_leakage:
        pdiag = _leakage_projector_diag(model)
        # leak(t) = sum_cd M[c,d] B[c,d] with B[c,d] = sum_e P_e V[e,c] V*[e,d]
        bmat = np.einsum("e,ec,ed->cd", pdiag, v, v.conj()).reshape(-1)
        mix = np.mean([y0f[i + n * i] for i in range(n)], axis=0)
    max_leak = 0.0
    chunk = 256
    for lo in range(0, n_t, chunk):
        hi = min(lo + chunk, n_t)
        phase = np.exp(-1j * np.outer(times[lo:hi], gaps))    # (C, D^2)
        m = y0f[None, :, :] * phase[:, None, :]               # (C, K, D^2)
        rho_out = (m @ tmat).reshape(hi - lo, n * n, n, n)    # [.., k, a, b]
        # column k of Phi holds vec(rho_out), vec index a + N*b
        maps[lo:hi] = rho_out.transpose(0, 3, 2, 1).reshape(hi - lo,
                                                            n * n, n * n)
        if check_leakage:
            leak = np.abs((mix[None, :] * phase) @ bmat)
            max_leak = max(max_leak, float(leak.max()))
    if check_leakage and max_leak > LEAKAGE_TOL:
        raise TruncationError(
            f"population {max_leak:.3e} in the top two oscillator levels "
            f"exceeds {LEAKAGE_TOL}; increase the truncation")
    cond = _condition_numbers(maps)
    return MapTrajectory(times=times, maps=maps, condition_numbers=cond, dim=n)


def _propagate_stepped(model: TotalModel, times: np.ndarray,
                       check_leakage: bool) -> MapTrajectory:
    n = model.dim_s
    dt = _check_uniform(times)
    x = _matrix_unit_inputs(n, model.rho_e0)
    n_t = len(times)
    maps = np.empty((n_t, n * n, n * n), dtype=complex)
    pdiag = _leakage_projector_diag(model)
    max_leak = 0.0

    def record(idx, xs):
        for k in range(n * n):
            red = np.trace(xs[k].reshape(n, model.dim_e, n, model.dim_e),
                           axis1=1, axis2=3)
            maps[idx][:, k] = vec(red)

    record(0, x)
    for step in range(n_t - 1):
        h = model.hamiltonian(times[step] + dt / 2)
        w, v = np.linalg.eigh((h + h.conj().T) / 2)
        u = (v * np.exp(-1j * w * dt)) @ v.conj().T
        x = u @ x @ u.conj().T
        record(step + 1, x)
        if check_leakage:
            mix = np.mean([x[i + n * i] for i in range(n)], axis=0)
            max_leak = max(max_leak, float(np.abs(
                np.sum(np.diagonal(mix) * pdiag))))
    if check_leakage and max_leak > LEAKAGE_TOL:
        raise TruncationError(
            f"population {max_leak:.3e} in the top two oscillator levels "
            f"exceeds {LEAKAGE_TOL}; increase the truncation")
    cond = _condition_numbers(maps)
    return MapTrajectory(times=times, maps=maps, condition_numbers=cond, dim=n)


def _condition_numbers(maps: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(maps, compute_uv=False)
    with np.errstate(divide="ignore"):
        return s[:, 0] / s[:, -1]


def series_derivative(f: np.ndarray, dt: float) -> np.ndarray:
    """Central differences inside, third-order one-sided at the endpoints."""
    if len(f) < 4:
        raise ValueError("need at least 4 samples")
    df = np.empty_like(f)
    df[1:-1] = (f[2:] - f[:-2]) / (2 * dt)
    df[0] = (-11 * f[0] + 18 * f[1] - 9 * f[2] + 2 * f[3]) / (6 * dt)
    df[-1] = (11 * f[-1] - 18 * f[-2] + 9 * f[-3] - 2 * f[-4]) / (6 * dt)
    return df


def generator_from_maps(traj: MapTrajectory,
                        cond_threshold: float = COND_THRESHOLD,
                        rank_cutoff: float = superop.CHOI_RANK_CUTOFF,
                        htp_tol: float = superop.HTP_TOL
                        ) -> GeneratorTrajectory:
    """L_t = Phi_dot_t Phi_t^{-1} with a per-time minimal split attached."""
    dphi = series_derivative(traj.maps, traj.dt)
    valid = traj.condition_numbers < cond_threshold
    excluded = [int(i) for i in np.flatnonzero(~valid)]
    gens = np.full_like(traj.maps, np.nan)
    if valid.any():
        pt = np.swapaxes(traj.maps[valid], 1, 2)
        dt_ = np.swapaxes(dphi[valid], 1, 2)
        gens[valid] = np.swapaxes(np.linalg.solve(pt, dt_), 1, 2)
    defect = 0.0
    splits: list[GeneratorSplit | None] = []
    for i in range(len(traj.times)):
        if not valid[i]:
            splits.append(None)
            continue
        defect = max(defect,
                     superop.hermiticity_preservation_defect(gens[i]),
                     superop.generator_trace_defect(gens[i]))
        splits.append(minimal_split(gens[i], rank_cutoff, htp_tol))
    return GeneratorTrajectory(times=traj.times, generators=gens,
                               splits=splits, valid=valid, excluded=excluded,
                               htp_defect=defect)


def semigroup_trajectory(generator: np.ndarray, times: np.ndarray,
                         rank_cutoff: float = superop.CHOI_RANK_CUTOFF
                         ) -> tuple[MapTrajectory, GeneratorTrajectory]:
    """Exact trajectory for a constant generator: Phi_t = e^{L t}.

    The generator is known exactly, so no finite-difference extraction is
    involved (keeps fixed-point residuals at roundoff level)."""
    times = np.asarray(times, dtype=float)
    dt = _check_uniform(times)
    n2 = generator.shape[0]
    n = int(round(np.sqrt(n2)))
    step = scipy.linalg.expm(generator * dt)
    maps = np.empty((len(times), n2, n2), dtype=complex)
    maps[0] = np.eye(n2)
    for i in range(1, len(times)):
        maps[i] = step @ maps[i - 1]
    mt = MapTrajectory(times=times, maps=maps,
                       condition_numbers=_condition_numbers(maps), dim=n)
    split = minimal_split(generator, rank_cutoff)
    gens = np.repeat(generator[None, :, :], len(times), axis=0)
    gt = GeneratorTrajectory(times=times, generators=gens,
                             splits=[split] * len(times),
                             valid=np.ones(len(times), dtype=bool))
    return mt, gt


def state_series(traj: MapTrajectory, rho0: np.ndarray) -> np.ndarray:
    """(T, N, N) reduced states Phi_t[rho0], Hermitized."""
    n = traj.dim
    out = (traj.maps @ vec(rho0)).reshape(-1, n, n).transpose(0, 2, 1)
    return (out + out.conj().transpose(0, 2, 1)) / 2


def p_divisibility_witness(traj: MapTrajectory, samples: int,
                           rng: np.random.Generator,
                           cond_threshold: float = COND_THRESHOLD
                           ) -> np.ndarray:
    """One-sided P-divisibility witness per interior step.

    For each t, the minimum eigenvalue of V[|psi><psi|] over Haar-random pure
    inputs with V = Phi_{t+dt} Phi_t^{-1}; negative values certify violation
    of P-divisibility (the converse does not hold).  Singular times give NaN.
    """
    n = traj.dim
    phi = superop.haar_random_states(n, samples, rng)
    pfl = superop._states_to_vec_projectors(phi)               # (S, N^2)
    out = np.full(len(traj.times) - 1, np.nan)
    ok = traj.condition_numbers[:-1] < cond_threshold
    idx = np.flatnonzero(ok)
    chunk = 1024
    for lo in range(0, len(idx), chunk):
        sel = idx[lo:lo + chunk]
        pt = np.swapaxes(traj.maps[sel], 1, 2)
        nxt = np.swapaxes(traj.maps[sel + 1], 1, 2)
        v = np.swapaxes(np.linalg.solve(pt, nxt), 1, 2)       # (C, N^2, N^2)
        outs = np.einsum("cij,sj->csi", v, pfl)               # (C, S, N^2)
        mats = outs.reshape(len(sel), samples, n, n).transpose(0, 1, 3, 2)
        mats = (mats + mats.conj().transpose(0, 1, 3, 2)) / 2
        if n == 2:
            tr = np.real(mats[..., 0, 0] + mats[..., 1, 1])
            det = np.real(mats[..., 0, 0] * mats[..., 1, 1]
                          - mats[..., 0, 1] * mats[..., 1, 0])
            disc = np.sqrt(np.maximum(tr * tr - 4 * det, 0.0))
            mineig = (tr - disc) / 2
        else:
            mineig = np.linalg.eigvalsh(mats)[..., 0]
        out[sel] = mineig.min(axis=1)
    return out


def trace_distance_flow(traj: MapTrajectory, rho1: np.ndarray,
                        rho2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """D(t) = (1/2)||Phi_t[rho1 - rho2]||_1 and its time derivative."""
    n = traj.dim
    delta = vec(np.asarray(rho1) - np.asarray(rho2))
    outs = (traj.maps @ delta).reshape(-1, n, n).transpose(0, 2, 1)
    outs = (outs + outs.conj().transpose(0, 2, 1)) / 2
    d = 0.5 * np.abs(np.linalg.eigvalsh(outs)).sum(axis=1)
    return d, series_derivative(d, traj.dt)
