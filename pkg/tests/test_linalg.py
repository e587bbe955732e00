import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qchybrid.linalg import (
    SIGMA_0,
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    DegenerateSpectrumError,
    DimensionError,
    NotHermitianError,
    OperatorBasis,
    expand,
    hermitian_eigendecomposition,
    hs_inner,
    is_psd,
    lindblad_basis,
    reconstruct,
)

from conftest import random_hermitian, random_unitary


def test_hs_inner_examples():
    assert hs_inner(SIGMA_0, SIGMA_0) == pytest.approx(2)
    assert hs_inner(SIGMA_1, SIGMA_3) == pytest.approx(0)
    # tr(sigma_1^2) = 2 by explicit multiplication, hence <s1/sqrt2, s1/sqrt2> = 1
    assert np.allclose(SIGMA_1 @ SIGMA_1, SIGMA_0)
    assert hs_inner(SIGMA_1 / np.sqrt(2), SIGMA_1 / np.sqrt(2)) == pytest.approx(1)


def test_hs_inner_is_conjugate_linear_in_first_argument(rng):
    a, b = random_hermitian(rng, 3) + 1j, random_hermitian(rng, 3)
    c = 0.3 - 2.0j
    assert hs_inner(c * a, b) == pytest.approx(np.conj(c) * hs_inner(a, b))
    assert hs_inner(a, c * b) == pytest.approx(c * hs_inner(a, b))


def test_hs_inner_dimension_mismatch():
    with pytest.raises(DimensionError):
        hs_inner(np.eye(2), np.eye(3))


def test_qubit_basis_is_scaled_pauli():
    basis = lindblad_basis(2)
    expected = np.array([SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3]) / np.sqrt(2)
    assert np.allclose(basis.operators, expected, atol=1e-15)
    for a in (1, 2, 3):
        assert abs(np.trace(basis[a])) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_basis_gram_matrix_brute_force(d):
    basis = lindblad_basis(d)
    gram = np.array([[hs_inner(la, lb) for lb in basis.operators] for la in basis.operators])
    assert np.max(np.abs(gram - np.eye(d * d))) < 1e-12
    assert np.array_equal(basis[0], np.eye(d) / np.sqrt(d))
    traces = [abs(np.trace(basis[a])) for a in range(1, d * d)]
    assert max(traces) < 1e-12


def test_basis_ordering_for_qutrit():
    b = lindblad_basis(3)
    # symmetric (0,1),(0,2),(1,2), antisymmetric in the same order, then diagonals
    assert b[1][0, 1] == b[1][1, 0] != 0
    assert b[3][1, 2] == b[3][2, 1] != 0
    assert b[4][0, 1] == -1j / np.sqrt(2) and b[4][1, 0] == 1j / np.sqrt(2)
    assert np.allclose(np.diag(b[7]), np.array([1, -1, 0]) / np.sqrt(2))
    assert np.allclose(np.diag(b[8]), np.array([1, 1, -2]) / np.sqrt(6))


def test_basis_rejects_small_dimension():
    with pytest.raises(ValueError):
        lindblad_basis(1)


def test_from_operators_checks_orthonormality(rng):
    u = random_unitary(rng, 3)
    rotated = lindblad_basis(3).conjugated(u)
    OperatorBasis.from_operators(rotated.operators)
    bad = np.array(rotated.operators)
    bad[2] *= 2
    with pytest.raises(ValueError):
        OperatorBasis.from_operators(bad)


def test_expand_examples():
    b = lindblad_basis(2)
    assert np.allclose(expand(np.eye(2), b), [np.sqrt(2), 0, 0, 0])
    assert np.allclose(expand(np.zeros((2, 2)), b), 0)
    with pytest.raises(DimensionError):
        expand(np.eye(3), b)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_expand_reconstruct_round_trip(rng, d):
    basis = lindblad_basis(d)
    for _ in range(100):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        assert np.max(np.abs(reconstruct(expand(a, basis), basis) - a)) < 1e-10


def test_expand_splits_trace_part(rng):
    basis = lindblad_basis(3)
    a = random_hermitian(rng, 3)
    c = expand(a, basis)
    traceless = sum(c[k] * basis[k] for k in range(1, 9))
    assert np.allclose(traceless + np.trace(a) / 3 * np.eye(3), a)


def test_eigendecomposition_pauli():
    s = hermitian_eigendecomposition(SIGMA_3)
    assert np.allclose(s.eigenvalues, [1, -1])
    assert np.allclose(s.projectors, [np.diag([1, 0]), np.diag([0, 1])])
    s = hermitian_eigendecomposition(SIGMA_1)
    assert np.allclose(s.eigenvalues, [1, -1])
    assert np.allclose(s.projectors[0], (SIGMA_0 + SIGMA_1) / 2)
    assert np.allclose(s.projectors[1], (SIGMA_0 - SIGMA_1) / 2)


def _check_spectral(m, s):
    d = m.shape[0]
    p = s.projectors
    assert np.all(np.diff(s.eigenvalues) < 0)
    assert np.max(np.abs(s.operator() - m)) < 1e-9
    assert np.max(np.abs(p.sum(axis=0) - np.eye(d))) < 1e-10
    for z in range(d):
        assert np.max(np.abs(p[z] - p[z].conj().T)) < 1e-10
        for y in range(d):
            expected = p[z] if z == y else np.zeros((d, d))
            assert np.max(np.abs(p[z] @ p[y] - expected)) < 1e-10


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_eigendecomposition_random(rng, d):
    for _ in range(20):
        m = random_hermitian(rng, d)
        _check_spectral(m, hermitian_eigendecomposition(m))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3, unique=True).filter(
        lambda v: min(abs(a - b) for i, a in enumerate(v) for b in v[i + 1:]) > 1e-3
    ),
    st.integers(0, 2**32 - 1),
)
def test_eigendecomposition_property(eigs, seed):
    u = random_unitary(np.random.default_rng(seed), 3)
    m = u @ np.diag(eigs) @ u.conj().T
    s = hermitian_eigendecomposition(m)
    _check_spectral(m, s)
    assert np.allclose(s.eigenvalues, sorted(eigs, reverse=True), atol=1e-9)


def test_eigendecomposition_errors():
    with pytest.raises(NotHermitianError):
        hermitian_eigendecomposition(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DegenerateSpectrumError):
        hermitian_eigendecomposition(np.eye(2))
    with pytest.raises(DegenerateSpectrumError):
        hermitian_eigendecomposition(np.diag([1.0, 1.0 + 1e-12, 3.0]))


def test_is_psd():
    assert is_psd(np.diag([1.0, 0.0])) == (True, 0.0)
    ok, e = is_psd(SIGMA_3)
    assert not ok and e == pytest.approx(-1)
    s = hermitian_eigendecomposition(SIGMA_1)
    ok, e = is_psd(s.projectors[0] + s.projectors[1])
    assert ok and e == pytest.approx(1)
    with pytest.raises(NotHermitianError):
        is_psd(np.array([[0, 1], [0, 0]]))
