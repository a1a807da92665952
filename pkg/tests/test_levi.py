import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadric_kohn import (QuadricForm, eigen_coordinates, heisenberg, m2, m3, multi_indices,
                          spectral)
from quadric_kohn.errors import DimensionError, QuadricError
from quadric_kohn.levi import (assemble_directional, basis_weights, jacobi_eigh, multi_index)
from quadric_kohn.verify import random_quadric


def test_rejects_non_hermitian():
    with pytest.raises(QuadricError, match="not Hermitian"):
        QuadricForm((np.array([[1.0, 1.0], [0.0, 1.0]]),))


def test_rejects_shape_mismatch():
    with pytest.raises(DimensionError):
        QuadricForm((np.eye(2), np.eye(3)))
    with pytest.raises(DimensionError):
        QuadricForm(())


def test_multi_index_validation():
    assert multi_index([1, 3], 3) == (1, 3)
    for bad in ([2, 1], [0, 1], [1, 4]):
        with pytest.raises(DimensionError):
            multi_index(bad, 3)
    assert len(multi_indices(4, 2)) == 6
    assert multi_indices(3, 0) == [()]


def test_m2_directional_matrix_and_eigenvalues():
    th = 0.7
    lam = [math.cos(th), math.sin(th)]
    A = assemble_directional(m2(), lam)
    assert np.allclose(A, lam[0] * m2().matrices[0] + lam[1] * m2().matrices[1])
    assert np.allclose(A @ A, np.eye(2))
    assert np.allclose(spectral(m2(), [math.cos(th), math.sin(th)]).mu, [1.0, -1.0])


@pytest.mark.parametrize("th", [0.3, 1.2, 2.5, -2.0])
def test_m3_eigenvalues(th):
    S = spectral(m3(), [math.cos(th), math.sin(th)])
    assert np.allclose(S.mu, [1 + math.cos(th), math.cos(th) - 1], atol=1e-14)


def test_zero_eigenvalue_is_exact_and_counted():
    S = spectral(m3(), [1.0, 0.0])
    assert S.mu[1] == 0.0 or abs(S.mu[1]) <= S.threshold
    assert (S.n_plus, S.n_minus, S.nu) == (1, 0, 1)


def test_heisenberg_signature():
    S = spectral(heisenberg(3), [-1.0])
    assert (S.n_plus, S.n_minus) == (0, 3)


def test_jacobi_matches_numpy(rng):
    for n in range(1, 6):
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = X + X.conj().T
        mu, U = jacobi_eigh(A)
        assert np.allclose(np.sort(mu), np.linalg.eigvalsh(A), atol=1e-12)
        assert np.allclose(U @ np.diag(mu) @ U.conj().T, A, atol=1e-12)


def test_eigen_coordinates_preserve_norm(rng):
    Q = random_quadric(rng, 3, 2)
    S = spectral(Q, [0.6, 0.8])
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert np.linalg.norm(eigen_coordinates(S, z)) == pytest.approx(np.linalg.norm(z))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 4), m=st.integers(1, 3))
def test_basis_weights_sum_to_identity(seed, n, m):
    rng = np.random.default_rng(seed)
    Q = random_quadric(rng, n, m)
    alpha = rng.normal(size=m)
    S = spectral(Q, alpha / np.linalg.norm(alpha))
    for q in range(n + 1):
        idx = multi_indices(n, q)
        for k, K in enumerate(idx):
            W = basis_weights(S.U, K, q)
            assert np.allclose(W.sum(axis=0), np.eye(len(idx))[k], atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 4))
def test_spectrum_invariant_under_unitary_change(seed, n):
    rng = np.random.default_rng(seed)
    Q = random_quadric(rng, n, 2)
    V, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    a = np.array([0.28, -0.96])
    assert np.allclose(spectral(Q, a).mu, spectral(Q.conjugated(V), a).mu, atol=1e-11)
