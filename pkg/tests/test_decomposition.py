"""Minimal generator split, gauge freedom and the minimality property."""
import numpy as np
import pytest

import minidiss.superop as so
from minidiss import decomposition as dc
from minidiss import hilbert


def test_traceless_hermitian_basis():
    for n in (2, 3, 4):
        basis = dc.traceless_hermitian_basis(n)
        assert basis.shape == (n * n - 1, n, n)
        target = n * (n + 1) / 2.0
        for i, hi in enumerate(basis):
            assert hilbert.is_hermitian(hi)
            assert abs(np.trace(hi)) < 1e-12
            for j, hj in enumerate(basis):
                want = target if i == j else 0.0
                assert abs(np.trace(hi @ hj) - want) < 1e-10


def test_minimal_split_basic_properties():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        gen = so.random_htp_generator(n, rng)
        s = dc.minimal_split(gen)
        assert np.max(np.abs(dc.reassemble(s) - gen)) < 1e-10
        assert hilbert.is_hermitian(s.k_eff)
        assert abs(np.trace(s.k_eff)) < 1e-11
        for l in s.lindblads:
            assert abs(np.trace(l)) < 1e-11
        # dissipator orthogonal to every commutator direction
        d = dc.dissipator_superop_of(s)
        for h in dc.traceless_hermitian_basis(n):
            assert abs(so.htp_inner_product(d, so.ham_superop(h))) < 1e-9


def test_minimal_split_pure_hamiltonian():
    rng = np.random.default_rng(1)
    h = hilbert.random_hermitian(3, rng)
    h -= np.trace(h) / 3 * np.eye(3)
    s = dc.minimal_split(so.ham_superop(h))
    assert s.n_channels == 0
    assert np.max(np.abs(s.k_eff - h)) < 1e-10


def test_minimal_split_recovers_gksl_rates():
    # a detailed split put in by hand must come back as the same multiset
    sz = np.diag([1.0, -1.0]).astype(complex) / np.sqrt(2)
    sp = np.zeros((2, 2), dtype=complex)
    sp[1, 0] = 1.0
    h = np.diag([0.3, -0.3]).astype(complex)
    gen = so.gksl_superop(h, [0.8, -0.2], [sz, sp])
    s = dc.minimal_split(gen)
    assert np.max(np.abs(s.k_eff - h)) < 1e-10
    assert sorted(np.round(s.rates, 10)) == pytest.approx([-0.2, 0.8])


def test_dissipator_action_matches_superop():
    rng = np.random.default_rng(2)
    s = dc.minimal_split(so.random_htp_generator(3, rng))
    rho = hilbert.random_density_matrix(3, rng)
    via_mat = so.apply_superop(dc.dissipator_superop_of(s), rho)
    assert np.max(np.abs(dc.dissipator_action(s, rho) - via_mat)) < 1e-12


def test_gauge_transform_preserves_generator():
    rng = np.random.default_rng(3)
    gen = so.random_htp_generator(2, rng)
    s = dc.minimal_split(gen)
    p, q = dc.signature(s)
    for _ in range(20):
        g = dc.random_gauge(p, q, rng)
        s2 = dc.gauge_transform(s, g)
        assert np.max(np.abs(dc.reassemble(s2) - gen)) < 1e-10


def test_gauge_transform_rejects_bad_upsilon():
    rng = np.random.default_rng(4)
    s = dc.minimal_split(so.random_htp_generator(2, rng))
    kch = s.n_channels
    g = dc.GaugeParams(alphas=np.zeros(kch, dtype=complex),
                       upsilon=2.0 * np.eye(kch, dtype=complex), beta=0.0)
    with pytest.raises(ValueError):
        dc.gauge_transform(s, g)


def test_gauge_group_law():
    rng = np.random.default_rng(5)
    s = dc.minimal_split(so.random_htp_generator(2, rng))
    p, q = dc.signature(s)
    worst = 0.0
    for _ in range(30):
        g1 = dc.random_gauge(p, q, rng)
        g2 = dc.random_gauge(p, q, rng)
        seq = dc.gauge_transform(dc.gauge_transform(s, g1), g2)
        comp = dc.gauge_transform(s, dc.compose_gauge(g2, g1, p, q))
        worst = max(worst,
                    float(np.max(np.abs(seq.k_eff - comp.k_eff))),
                    float(np.max(np.abs(seq.lindblads - comp.lindblads))),
                    float(np.max(np.abs(seq.rates - comp.rates))))
    assert worst < 1e-10


def test_upsilon_preserves_indefinite_metric():
    rng = np.random.default_rng(6)
    for p, q in ((2, 1), (1, 2), (3, 0)):
        g = dc.random_gauge(p, q, rng)
        j = dc.j_matrix(p, q)
        residual = g.upsilon.conj().T @ j @ g.upsilon - j
        assert np.max(np.abs(residual)) < 1e-10


def test_verify_minimality_report():
    rng = np.random.default_rng(7)
    s = dc.minimal_split(so.random_htp_generator(3, rng))
    rep = dc.verify_minimality(s, 100, rng)
    assert rep["violations"] == 0
    assert rep["strict_violations"] == 0
    assert rep["min_margin"] >= -1e-10


def test_shifted_split_is_not_minimal():
    # moving weight into the identity component must grow the dissipator norm
    rng = np.random.default_rng(8)
    s = dc.minimal_split(so.random_htp_generator(2, rng))
    base = so.htp_norm(dc.dissipator_superop_of(s))
    g = dc.GaugeParams(alphas=0.3 * np.ones(s.n_channels, dtype=complex),
                       upsilon=np.eye(s.n_channels, dtype=complex), beta=0.0)
    shifted = dc.gauge_transform(s, g)
    assert so.htp_norm(dc.dissipator_superop_of(shifted)) > base + 1e-6


def test_hamiltonian_projection_coefficients():
    rng = np.random.default_rng(9)
    n = 3
    basis = dc.traceless_hermitian_basis(n)
    coeffs = rng.standard_normal(len(basis))
    h = np.einsum("i,iab->ab", coeffs, basis)
    got = dc.hamiltonian_projection_coefficients(so.ham_superop(h))
    assert np.max(np.abs(got - coeffs)) < 1e-9
