"""Reduced-map propagation and time-local generator extraction."""
import dataclasses

import numpy as np
import pytest
import scipy.linalg

import minidiss.superop as so
from minidiss import hilbert, models, tcl


def _brute_force_maps(model, times):
    """Direct total-space evolution with scipy expm, column by column."""
    n, de = model.dim_s, model.dim_e
    maps = np.empty((len(times), n * n, n * n), dtype=complex)
    h = model.hamiltonian(0.0)
    for it, t in enumerate(times):
        u = scipy.linalg.expm(-1j * t * h)
        for a in range(n):
            for b in range(n):
                unit = np.zeros((n, n), dtype=complex)
                unit[a, b] = 1.0
                x = np.kron(unit, model.rho_e0)
                red = hilbert.partial_trace_env(u @ x @ u.conj().T, n, de)
                maps[it][:, a + n * b] = so.vec(red)
    return maps


def test_propagation_against_brute_force():
    p = models.JCParams(m_trunc=8, k_t=0.25)
    model = models.build_jaynes_cummings(p)
    times = np.linspace(0.0, 2.0, 21)
    mt = tcl.propagate_total(model, times)
    assert np.max(np.abs(mt.maps - _brute_force_maps(model, times))) < 1e-12


def test_propagation_basic_map_properties(jc_short):
    mt = jc_short["maps"]
    n = mt.dim
    assert np.max(np.abs(mt.maps[0] - np.eye(n * n))) < 1e-12
    # trace preservation and complete positivity at every time
    for idx in (0, 500, 2000):
        assert so.map_trace_defect(mt.maps[idx]) < 1e-12
        choi_eigs = np.linalg.eigvalsh(so.choi_of(mt.maps[idx]))
        assert choi_eigs.min() > -1e-12


def test_stepped_and_eigenbasis_paths_agree():
    p = models.DephasingParams(m_trunc=30)
    model = models.build_dephasing(p)
    td = dataclasses.replace(model, time_dependent=True)
    times = np.linspace(0.0, 1.0, 401)
    a = tcl.propagate_total(model, times)
    b = tcl.propagate_total(td, times)
    assert np.max(np.abs(a.maps - b.maps)) < 1e-10


def test_truncation_leakage_guard():
    p = models.DephasingParams(m_trunc=8, g=2.0, k_t=3.0)
    with pytest.raises(models.TruncationError):
        model = models.build_dephasing(p)
        tcl.propagate_total(model, np.linspace(0.0, 10.0, 501))


def test_series_derivative_order():
    dt = 1e-3
    t = np.arange(0.0, 1.0 + dt / 2, dt)
    f = np.sin(3.0 * t).reshape(-1, 1, 1)
    d = tcl.series_derivative(f, dt)[:, 0, 0]
    err = np.abs(d - 3.0 * np.cos(3.0 * t))
    assert err[1:-1].max() < 1e-5       # central, second order
    assert max(err[0], err[-1]) < 1e-7  # one-sided endpoints, third order


def test_generator_extraction_on_constant_gksl():
    """Finite differences on an exactly known semigroup: the extracted
    generator converges at second order to the constant one."""
    rng = np.random.default_rng(0)
    h, rates, ls = models.build_detailed_balance_gksl(2, 1.0, rng)
    gen = so.gksl_superop(h, rates, ls)
    errs = []
    for dt in (2e-2, 1e-2):
        times = np.arange(0.0, 1.0 + dt / 2, dt)
        maps = np.array([scipy.linalg.expm(t * gen) for t in times])
        mt = tcl.MapTrajectory(times=times, maps=maps,
                               condition_numbers=np.ones(len(times)),
                               dim=2)
        gt = tcl.generator_from_maps(mt)
        errs.append(np.max(np.abs(gt.generators - gen)))
    assert errs[1] < errs[0] / 3.0
    assert errs[1] < 1e-4


def test_semigroup_trajectory_is_exact():
    rng = np.random.default_rng(1)
    h, rates, ls = models.build_detailed_balance_gksl(3, 0.7, rng)
    gen = so.gksl_superop(h, rates, ls)
    times = np.linspace(0.0, 4.0, 201)
    mt, gt = tcl.semigroup_trajectory(gen, times)
    assert np.max(np.abs(gt.generators - gen)) < 1e-12
    assert gt.excluded == []
    ref = scipy.linalg.expm(times[37] * gen)
    assert np.max(np.abs(mt.maps[37] - ref)) < 1e-10


def test_state_series_matches_map_application(jc_short):
    mt = jc_short["maps"]
    rho0 = jc_short["params"].initial_system_state()
    rho_series = jc_short["rho"]
    idx = 700
    direct = so.apply_superop(mt.maps[idx], rho0)
    assert np.max(np.abs(rho_series[idx] - direct)) < 1e-13
    for r in rho_series[::400]:
        hilbert.check_density_matrix(r, tol=1e-8)


def test_generator_trajectory_validity(jc_short):
    gt = jc_short["gen"]
    assert gt.excluded == []
    assert bool(np.all(gt.valid))
    assert gt.htp_defect < 1e-8
    # generator reproduces the state derivative
    rho_series = jc_short["rho"]
    dt = jc_short["times"][1] - jc_short["times"][0]
    drho = tcl.series_derivative(rho_series, dt)
    idx = 1000
    lhs = so.apply_superop(gt.generators[idx], rho_series[idx])
    assert np.max(np.abs(lhs - drho[idx])) < 1e-5


def test_p_divisibility_witness_semigroup_nonnegative():
    rng = np.random.default_rng(2)
    h, rates, ls = models.build_detailed_balance_gksl(2, 1.0, rng)
    gen = so.gksl_superop(h, rates, ls)
    times = np.linspace(0.0, 4.0, 201)
    mt, _ = tcl.semigroup_trajectory(gen, times)
    w = tcl.p_divisibility_witness(mt, 200, rng)
    assert np.nanmin(w) > -1e-10


def test_p_divisibility_witness_detects_backflow(jc_long):
    # divisibility only breaks on the longer horizon of the full scenario
    assert np.nanmin(jc_long["witness"]) < -1e-6


def test_trace_distance_flow_contraction_for_semigroup():
    rng = np.random.default_rng(5)
    h, rates, ls = models.build_detailed_balance_gksl(2, 1.0, rng)
    gen = so.gksl_superop(h, rates, ls)
    times = np.linspace(0.0, 4.0, 201)
    mt, _ = tcl.semigroup_trajectory(gen, times)
    dist, flow = tcl.trace_distance_flow(mt, np.diag([1.0, 0.0]).astype(complex),
                                         np.diag([0.0, 1.0]).astype(complex))
    assert np.all(np.diff(dist) < 1e-10)
    assert np.nanmax(flow) < 1e-8


def test_nonuniform_grid_rejected():
    p = models.JCParams(m_trunc=30)
    model = models.build_jaynes_cummings(p)
    with pytest.raises(ValueError):
        tcl.propagate_total(model, np.array([0.0, 0.1, 0.3]))
