"""Superoperator algebra: vectorization, Choi, pseudo-Kraus, scalar product."""
import numpy as np
import pytest

import minidiss.superop as so
from minidiss import hilbert


def _superop_from_action(action, n):
    """Column-by-column oracle: no Kronecker identities involved."""
    mat = np.zeros((n * n, n * n), dtype=complex)
    for a in range(n):
        for b in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[a, b] = 1.0
            mat[:, a + n * b] = so.vec(action(unit))
    return mat


def test_vec_unvec_roundtrip_and_convention():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    v = so.vec(a)
    for i in range(3):
        for j in range(3):
            assert v[i + 3 * j] == a[i, j]
    assert np.array_equal(so.unvec(v), a)


def test_sandwich_identity():
    # vec(A rho B) = (B^T kron A) vec(rho)
    rng = np.random.default_rng(1)
    n = 3
    a, b, rho = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                 for _ in range(3))
    lhs = so.vec(a @ rho @ b)
    rhs = np.kron(b.T, a) @ so.vec(rho)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


@pytest.mark.parametrize("n", [2, 3])
def test_ham_and_dissipator_superops_against_action(n):
    rng = np.random.default_rng(2)
    h = hilbert.random_hermitian(n, rng)
    l = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    def ham_action(r):
        return -1j * (h @ r - r @ h)

    def diss_action(r):
        ldl = l.conj().T @ l
        return l @ r @ l.conj().T - 0.5 * (ldl @ r + r @ ldl)

    assert np.max(np.abs(so.ham_superop(h)
                         - _superop_from_action(ham_action, n))) < 1e-13
    assert np.max(np.abs(so.dissipator_superop(l)
                         - _superop_from_action(diss_action, n))) < 1e-13


def test_gksl_superop_properties():
    rng = np.random.default_rng(3)
    n = 3
    h = hilbert.random_hermitian(n, rng)
    ls = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
          for _ in range(2)]
    gen = so.gksl_superop(h, [0.4, 1.1], ls)
    assert so.generator_trace_defect(gen) < 1e-12
    assert so.hermiticity_preservation_defect(gen) < 1e-12
    assert so.is_htp_generator(gen)
    assert not so.is_htp_generator(gen + 1e-3 * np.eye(n * n))


def test_choi_reshuffle_against_loop_oracle():
    rng = np.random.default_rng(4)
    n = 3
    mat = rng.standard_normal((n * n, n * n)) \
        + 1j * rng.standard_normal((n * n, n * n))
    oracle = np.zeros_like(mat)
    # Choi[(a,b),(c,d)] pairs L's output entry (a,c) of the input unit (b,d)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    oracle[a + n * b, c + n * d] = mat[a + n * c, b + n * d]
    choi = so.choi_of(mat)
    assert np.max(np.abs(choi - oracle)) < 1e-14
    assert np.max(np.abs(so.choi_to_liouville(choi) - mat)) < 1e-14


def test_choi_hermitian_iff_htp():
    rng = np.random.default_rng(5)
    gen = so.random_htp_generator(3, rng)
    assert hilbert.herm_defect(so.choi_of(gen)) < 1e-12


def test_pseudo_kraus_reconstruction_and_sandwich():
    rng = np.random.default_rng(6)
    n = 3
    gen = so.random_htp_generator(n, rng)
    pk = so.pseudo_kraus_from_superop(gen)
    # weights real, ops orthonormal in Hilbert-Schmidt
    assert np.max(np.abs(pk.weights.imag)) == 0.0
    gram = np.einsum("iab,jab->ij", pk.ops.conj(), pk.ops)
    assert np.max(np.abs(gram - np.eye(len(pk.weights)))) < 1e-12
    # reassembled superop matches, and so does the operator sandwich
    assert np.max(np.abs(so.liouville_from_pseudo_kraus(pk) - gen)) < 1e-11
    rho = hilbert.random_density_matrix(n, rng)
    direct = so.apply_superop(gen, rho)
    sandwich = sum(g * e @ rho @ e.conj().T
                   for g, e in zip(pk.weights, pk.ops))
    assert np.max(np.abs(direct - sandwich)) < 1e-11


def test_trace_preservation_constraint():
    rng = np.random.default_rng(7)
    gen = so.random_htp_generator(2, rng)
    pk = so.pseudo_kraus_from_superop(gen)
    assert so.trace_preservation_constraint_defect(pk) < 1e-11


def test_haar_random_unitary_statistics():
    rng = np.random.default_rng(8)
    u = so.haar_random_unitary(4, rng)
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-12
    # first-moment check: mean of U X U^dag is Tr{X}/n * I
    x = hilbert.random_hermitian(3, rng)
    acc = np.zeros((3, 3), dtype=complex)
    samples = 4000
    for _ in range(samples):
        u = so.haar_random_unitary(3, rng)
        acc += u @ x @ u.conj().T
    acc /= samples
    expect = np.trace(x) / 3 * np.eye(3)
    assert np.max(np.abs(acc - expect)) < 0.1


def test_haar_random_states_normalized():
    rng = np.random.default_rng(9)
    phi = so.haar_random_states(3, 100, rng)
    assert phi.shape == (100, 3)
    assert np.max(np.abs(np.sum(np.abs(phi) ** 2, axis=1) - 1.0)) < 1e-12


def test_fourth_moment_closed_vs_mc():
    rng = np.random.default_rng(10)
    n = 3
    x1, x2, x3 = (hilbert.random_hermitian(n, rng) for _ in range(3))
    closed = so.fourth_moment_closed_form(x1, x2, x3)
    mc, se = so.mc_fourth_moment(x1, x2, x3, 20000, rng)
    assert np.max(np.abs(mc - closed)) < 4 * se


def test_scalar_product_closed_vs_mc_and_negative_control():
    rng = np.random.default_rng(11)
    l1 = so.random_htp_generator(3, rng)
    l2 = so.random_htp_generator(3, rng)
    closed = so.htp_inner_product(l1, l2)
    mc, se = so.mc_htp_inner_product(l1, l2, 60000, rng)
    assert abs(mc - closed) < 4 * se
    # forced-bug control: flipping the fourth-moment sign must break agreement
    old = so._FOURTH_MOMENT_SIGN
    so._FOURTH_MOMENT_SIGN = -1.0
    try:
        broken = so.htp_inner_product(l1, l2)
    finally:
        so._FOURTH_MOMENT_SIGN = old
    assert abs(mc - broken) > 10 * se


def test_scalar_product_known_values():
    # commutator map of a basis-normalized Hamiltonian has unit norm
    n = 2
    h = np.sqrt(n * (n + 1) / 2.0) * np.diag([1.0, -1.0]) / np.sqrt(2)
    assert abs(so.htp_norm(so.ham_superop(h)) - 1.0) < 1e-12
    # qubit sigma_z dissipator: squared norm 2/3
    sz = np.diag([1.0, -1.0]).astype(complex)
    d = so.dissipator_superop(sz)
    assert abs(so.htp_inner_product(d, d) - 2.0 / 3.0) < 1e-12


def test_scalar_product_rejects_non_htp():
    rng = np.random.default_rng(12)
    l1 = so.random_htp_generator(2, rng)
    with pytest.raises(ValueError):
        so.htp_inner_product(l1, l1 + 1e-2 * 1j * np.eye(4))
