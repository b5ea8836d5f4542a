import math

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st

from spinsteady.spin import (
    SpinSystem, clebsch_gordan, collective_spin_ops, dicke_isometry, from_multipoles, ladder_ops,
    multipole_coefficients, tensor_basis, tensor_op,
)

from conftest import random_hermitian

PAULI = (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]]))


def spin_matrices(j2):
    """Independent construction: Sz diagonal, S+ from the ladder formula with m ascending, then reversed."""
    j = j2 / 2
    ms = np.arange(-j, j + 1)
    sp = np.zeros((len(ms), len(ms)))
    for a, m in enumerate(ms[:-1]):
        sp[a + 1, a] = np.sqrt(j * (j + 1) - m * (m + 1))
    rev = slice(None, None, -1)
    sp = sp[rev, rev]
    return sp, np.diag(ms[rev])


def cg_by_diagonalisation(j1, j2):
    """CG table from diagonalising J^2 on the uncoupled product space.

    Returns ``{(m1, m2, J, M): value}`` with the sign fixed by the
    Condon-Shortley rule ``<j1 j1; j2 J-j1 | J J> > 0``.
    """
    def ops(j):
        s = SpinSystem(int(round(2 * j)))
        return collective_spin_ops(s)

    A, B = ops(j1), ops(j2)
    d1, d2 = A[0].shape[0], B[0].shape[0]
    J = [np.kron(a, np.eye(d2)) + np.kron(np.eye(d1), b) for a, b in zip(A, B)]
    J2 = sum(x @ x for x in J)
    Jz = J[2]
    m1s = j1 - np.arange(d1)
    m2s = j2 - np.arange(d2)
    table = {}
    Jtot = j1 + j2
    while Jtot >= abs(j1 - j2) - 1e-9:
        # highest-weight vector of the J multiplet
        P = J2 - Jtot * (Jtot + 1) * np.eye(d1 * d2)
        Q = Jz - Jtot * np.eye(d1 * d2)
        ns = la.null_space(np.vstack([P, Q]))
        v = ns[:, 0]
        # Condon-Shortley: <j1 j1; j2 (J-j1) | J J> > 0
        idx = 0 * d2 + int(round(j2 - (Jtot - j1)))
        v = v * np.exp(-1j * np.angle(v[idx]))
        v = v / np.linalg.norm(v)
        jminus = J[0] - 1j * J[1]
        M = Jtot
        while M >= -Jtot - 1e-9:
            for a, m1 in enumerate(m1s):
                for b, m2 in enumerate(m2s):
                    table[(m1, m2, Jtot, M)] = v[a * d2 + b].real
            v = jminus @ v
            if np.linalg.norm(v) > 1e-12:
                v = v / np.linalg.norm(v)
            M -= 1
        Jtot -= 1
    return table


@pytest.mark.parametrize("n", range(1, 13))
def test_su2_algebra_and_casimir(n):
    sys = SpinSystem(n)
    sx, sy, sz = collective_spin_ops(sys)
    assert np.abs(sx @ sy - sy @ sx - 1j * sz).max() < 1e-13
    assert np.abs(sy @ sz - sz @ sy - 1j * sx).max() < 1e-13
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.abs(casimir - sys.j * (sys.j + 1) * np.eye(sys.dim)).max() < 1e-12


@pytest.mark.parametrize("n", range(1, 9))
def test_ladder_matches_independent_construction(n):
    sp, sz_ref = spin_matrices(n)
    s_plus, _ = ladder_ops(SpinSystem(n))
    assert np.allclose(s_plus, sp, atol=1e-14)
    assert np.allclose(collective_spin_ops(SpinSystem(n))[2], sz_ref, atol=0)


def test_spin_half_is_half_pauli():
    for s, p in zip(collective_spin_ops(SpinSystem(1)), PAULI):
        assert np.allclose(s, p / 2, atol=0)


def test_system_fields():
    s = SpinSystem(5)
    assert (s.j, s.dim) == (2.5, 6)
    assert s.index(2.5) == 0 and s.index(-2.5) == 5
    with pytest.raises(ValueError):
        SpinSystem(0)
    with pytest.raises(ValueError):
        s.index(0.0)


def test_clebsch_gordan_examples():
    assert clebsch_gordan(0.5, 0.5, 0.5, 0.5, 1, 1) == 1.0
    assert clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert clebsch_gordan(1, 0, 1, 0, 2, 0) == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
    # selection rules give exact zeros
    assert clebsch_gordan(1, 0, 1, 1, 2, 0) == 0.0
    assert clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0
    assert clebsch_gordan(1, 0, 1, 0, 1, 0) == 0.0


@pytest.mark.parametrize("j1,j2", [(0.5, 0.5), (1, 1), (1.5, 1), (2, 1.5), (1, 2)])
def test_clebsch_gordan_against_diagonalisation(j1, j2):
    table = cg_by_diagonalisation(j1, j2)
    for (m1, m2, J, M), ref in table.items():
        assert clebsch_gordan(j1, m1, j2, m2, J, M) == pytest.approx(ref, abs=1e-10)


def test_clebsch_gordan_rejects_non_half_integers():
    with pytest.raises(ValueError):
        clebsch_gordan(0.3, 0.3, 0.5, 0.5, 1, 1)


@pytest.mark.parametrize("n", range(1, 7))
def test_tensor_basis_orthonormal(n):
    sys = SpinSystem(n)
    ops = [T for _, _, T in tensor_basis(sys)]
    B = np.stack([T.reshape(-1) for T in ops], axis=1)
    assert B.shape[1] == sys.dim**2
    assert np.abs(B.conj().T @ B - np.eye(sys.dim**2)).max() < 1e-12


@pytest.mark.parametrize("n", [1, 3, 4])
def test_rank_zero_tensor_is_scaled_identity(n):
    sys = SpinSystem(n)
    assert np.allclose(tensor_op(sys, 0, 0), np.eye(sys.dim) / math.sqrt(sys.dim), atol=1e-15)


def test_rank_one_tensor_is_proportional_to_sz():
    sys = SpinSystem(2)
    sz = collective_spin_ops(sys)[2]
    T = tensor_op(sys, 1, 0)
    # oracle: <1 1; 1 0 | 1 1> = 1/sqrt(2) > 0, so T_10 is +Sz at unit HS norm
    assert np.allclose(T, sz / np.linalg.norm(sz), atol=1e-14)


def test_tensor_op_range_checks():
    sys = SpinSystem(2)
    for L, M in [(3, 0), (-1, 0), (1, 2)]:
        with pytest.raises(ValueError):
            tensor_op(sys, L, M)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**31))
def test_multipole_round_trip(n, seed):
    sys = SpinSystem(n)
    H = random_hermitian(sys.dim, np.random.default_rng(seed))
    back = from_multipoles(multipole_coefficients(H, sys), sys)
    assert np.abs(back - H).max() < 1e-11


@pytest.mark.parametrize("n", range(1, 9))
def test_dicke_isometry_columns_orthonormal(n):
    V = dicke_isometry(n).map
    assert np.abs(V.conj().T @ V - np.eye(n + 1)).max() < 1e-12


def test_dicke_isometry_examples():
    V = dicke_isometry(2).map
    assert np.allclose(V[:, 1], np.array([0, 1, 1, 0]) / math.sqrt(2))
    for n in (1, 4, 7):
        col = dicke_isometry(n).map[:, 0]
        assert col[0] == 1 and np.count_nonzero(col) == 1


def qubit_collective(n, pauli):
    total = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n):
        op = np.array([[1.0]])
        for q in range(n):
            op = np.kron(op, pauli if q == k else np.eye(2))
        total += op / 2
    return total


@pytest.mark.parametrize("n", [2, 5])
def test_dicke_pullback_of_qubit_operators(n):
    iso = dicke_isometry(n)
    for p, s in zip(PAULI, collective_spin_ops(SpinSystem(n))):
        assert np.abs(iso.pullback(qubit_collective(n, p)) - s).max() < 1e-12


def test_dicke_isometry_size_guard():
    with pytest.raises(ValueError):
        dicke_isometry(13)
    with pytest.raises(ValueError):
        dicke_isometry(0)
