"""Levi form of a quadric and its directional spectral data.

A quadric ``Im w = phi(z, z)`` in C^n x C^m is described by m Hermitian n x n
matrices A^1..A^m, with ``phi(z, z')_j = z^* A^j z'``.  For a direction
``lam`` in R^m the directional form is ``A^lam = sum_j lam_j A^j``.

Multi-indices are 1-based strictly increasing tuples, e.g. ``(1, 3)``.  The
empty tuple is the unique index of degree 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, EigenConvergenceError, QuadricError

ZERO_TOL = 1e-10
HERMITIAN_TOL = 1e-12
MAX_SWEEPS = 50


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadricForm:
    """Vector-valued Levi form given by ``m`` Hermitian ``n x n`` matrices."""

    matrices: tuple
    name: str = ""

    def __post_init__(self):
        mats = tuple(_frozen(a) for a in self.matrices)
        if len(mats) == 0:
            raise DimensionError("a quadric needs at least one matrix (m >= 1)")
        n = mats[0].shape[0]
        for j, a in enumerate(mats):
            if a.ndim != 2 or a.shape != (n, n) or n < 1:
                raise DimensionError(f"matrix {j + 1} has shape {a.shape}, expected ({n}, {n})")
            asym = hermitian_defect(a)
            if asym > HERMITIAN_TOL * max(np.abs(a).max(), 1e-300):
                raise QuadricError(f"matrix {j + 1} is not Hermitian (max asymmetry {asym:.3e})")
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def stack(self) -> np.ndarray:
        return np.stack(self.matrices)

    def conjugated(self, V: np.ndarray) -> "QuadricForm":
        """The form ``V^* A^j V``; eigen-coordinates transform as ``z -> V^* z``."""
        V = np.asarray(V, dtype=complex)
        return QuadricForm(tuple(V.conj().T @ a @ V for a in self.matrices), self.name)


def hermitian_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition of ``A^alpha`` under the package labeling.

    ``mu`` is sorted in descending order and column ``j`` of ``U`` is the
    eigenvector paired with ``mu[j]``; each column's largest entry is real
    positive.
    """

    alpha: np.ndarray
    mu: np.ndarray
    U: np.ndarray
    scale: float
    zero_tol: float = ZERO_TOL

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @property
    def threshold(self) -> float:
        return self.zero_tol * self.scale

    @property
    def n_plus(self) -> int:
        return int(np.sum(self.mu > self.threshold))

    @property
    def n_minus(self) -> int:
        return int(np.sum(self.mu < -self.threshold))

    @property
    def nu(self) -> int:
        return self.n_plus + self.n_minus

    @property
    def signs(self) -> np.ndarray:
        """Sign of each eigenvalue, 0 for those inside the zero tolerance."""
        s = np.sign(self.mu).astype(int)
        s[np.abs(self.mu) <= self.threshold] = 0
        return s


def multi_index(entries: Iterable[int], n: int | None = None) -> tuple:
    """Validate a 1-based strictly increasing multi-index."""
    K = tuple(int(k) for k in entries)
    if any(b <= a for a, b in zip(K, K[1:])):
        raise DimensionError(f"multi-index {K} is not strictly increasing")
    if K and K[0] < 1:
        raise DimensionError(f"multi-index {K} has entries below 1")
    if n is not None and K and K[-1] > n:
        raise DimensionError(f"multi-index {K} has entries above n={n}")
    return K


def multi_indices(n: int, q: int) -> list:
    """All increasing q-tuples drawn from 1..n, in lexicographic order."""
    if not 0 <= q <= n:
        raise DimensionError(f"degree q={q} outside 0..{n}")
    return list(itertools.combinations(range(1, n + 1), q))


def assemble_directional(Q: QuadricForm, lam: Sequence[float]) -> np.ndarray:
    """Return ``A^lam = sum_j lam_j A^j`` (Hermitian by construction)."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != Q.m:
        raise DimensionError(f"direction has {lam.shape[-1]} components, quadric has m={Q.m}")
    if not np.all(np.isfinite(lam)):
        raise ValueError("direction must be finite")
    return np.tensordot(lam, Q.stack, axes=([-1], [0]))


def jacobi_eigh(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = MAX_SWEEPS):
    """Cyclic Jacobi diagonalisation of a stack of Hermitian matrices.

    ``A`` has shape ``(..., n, n)``.  Returns unsorted ``(w, V)`` with
    ``A @ V = V @ diag(w)``.  Every pair ``(p, q)`` is visited in row order each
    sweep; the rotation for a given matrix is the identity when its ``(p, q)``
    entry is already negligible.
    """
    A = np.array(A, dtype=complex)
    shape = A.shape
    n = shape[-1]
    A = A.reshape(-1, n, n)
    N = A.shape[0]
    V = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    if n == 1:
        return A[:, 0, 0].real.reshape(shape[:-2] + (1,)), V.reshape(shape)
    scale = np.abs(A).reshape(N, -1).max(axis=1)
    limit = tol * scale
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps + 1):
        off = np.abs(A[:, iu[0], iu[1]]).max(axis=1)
        if np.all(off <= limit):
            break
        if sweep == max_sweeps:
            raise EigenConvergenceError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
                f"(max off-diagonal {off.max():.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                h = A[:, p, q]
                mag = np.abs(h)
                act = mag > limit
                if not np.any(act):
                    continue
                safe = np.where(act, mag, 1.0)
                phase = np.where(act, h / safe, 1.0)
                theta = (A[:, q, q].real - A[:, p, p].real) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(act, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # W = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on columns p, q
                w_pp = c
                w_pq = s
                w_qp = -s * phase.conj()
                w_qq = c * phase.conj()
                cp = A[:, :, p].copy()
                cq = A[:, :, q]
                A[:, :, p] = cp * w_pp[:, None] + cq * w_qp[:, None]
                A[:, :, q] = cp * w_pq[:, None] + cq * w_qq[:, None]
                rp = A[:, p, :].copy()
                rq = A[:, q, :]
                A[:, p, :] = rp * w_pp.conj()[:, None] + rq * w_qp.conj()[:, None]
                A[:, q, :] = rp * w_pq.conj()[:, None] + rq * w_qq.conj()[:, None]
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
                vp = V[:, :, p].copy()
                vq = V[:, :, q]
                V[:, :, p] = vp * w_pp[:, None] + vq * w_qp[:, None]
                V[:, :, q] = vp * w_pq[:, None] + vq * w_qq[:, None]
    w = np.real(np.diagonal(A, axis1=1, axis2=2))
    return w.reshape(shape[:-1]), V.reshape(shape)


def _normalise(w: np.ndarray, V: np.ndarray):
    """Sort descending and fix column phases (largest entry real positive)."""
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[..., None, :], axis=-1)
    mag = np.abs(V)
    # ties within 1e-12 of the column max resolve to the lowest row index
    top = mag >= mag.max(axis=-2, keepdims=True) * (1 - 1e-12)
    pivot = np.argmax(top, axis=-2)
    entry = np.take_along_axis(V, pivot[..., None, :], axis=-2)
    phase = entry / np.abs(entry)
    return w, V * phase.conj()


def spectral_batch(Q: QuadricForm, alphas: np.ndarray):
    """Sorted eigenvalues, phase-fixed eigenvectors and scales for many directions.

    Returns ``(mu, U, scale)`` with shapes ``(N, n)``, ``(N, n, n)``, ``(N,)``,
    where ``scale`` is the max-entry norm of each ``A^alpha``.
    """
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    A = assemble_directional(Q, alphas)
    w, V = jacobi_eigh(A)
    mu, U = _normalise(w, V)
    scale = np.abs(A).reshape(A.shape[0], -1).max(axis=1)
    return mu, U, scale


def spectral(Q: QuadricForm, alpha: Sequence[float], zero_tol: float = ZERO_TOL) -> SpectralData:
    """Spectral data of ``A^alpha`` for a unit direction ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    if abs(np.linalg.norm(alpha) - 1.0) > 1e-12:
        raise ValueError(f"alpha must be a unit vector (|alpha| = {np.linalg.norm(alpha)!r})")
    mu, U, scale = spectral_batch(Q, alpha[None, :])
    return SpectralData(_frozen(alpha).real, mu[0], U[0], float(scale[0]), zero_tol)


def eigen_coordinates(S: SpectralData, z: Sequence[complex]) -> np.ndarray:
    """Coordinates of ``z`` in the eigenbasis: ``(U^alpha)^* z``."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != S.n:
        raise DimensionError(f"z has {z.shape[-1]} components, expected {S.n}")
    return z @ S.U.conj()


def _submatrix_det(M: np.ndarray, rows: tuple, cols: tuple) -> complex:
    if len(rows) != len(cols):
        raise DimensionError(f"index lengths differ: {rows} vs {cols}")
    q = len(rows)
    n = M.shape[-1]
    if q == 0 or q == n:
        return np.ones(M.shape[:-2], dtype=complex)[()] if M.ndim > 2 else 1.0 + 0j
    r = np.asarray(rows) - 1
    c = np.asarray(cols) - 1
    return np.linalg.det(M[..., r[:, None], c[None, :]])


def minor_coefficient(S: SpectralData, K: Sequence[int], L: Sequence[int]) -> complex:
    """``C_{K,L}``: the minor of ``conj(U)`` with rows ``K`` and columns ``L``.

    Expresses ``dzbar^K = sum_L C_{K,L} dZbar^L``.  Degrees 0 and n return 1;
    together with :func:`inverse_minor` this keeps ``sum_L C M = delta``.
    """
    K = multi_index(K, S.n)
    L = multi_index(L, S.n)
    return complex(_submatrix_det(S.U.conj(), K, L))


def inverse_minor(S: SpectralData, L: Sequence[int], K_out: Sequence[int]) -> complex:
    """``M_{K',L}``: minor of ``U`` with rows ``K_out`` and columns ``L``.

    ``dZbar^L = sum_{K'} M_{K',L} dzbar^{K'}``.
    """
    L = multi_index(L, S.n)
    K_out = multi_index(K_out, S.n)
    return complex(_submatrix_det(S.U, K_out, L))


def basis_weights(U: np.ndarray, K: tuple, q: int) -> np.ndarray:
    """``W[..., L, K'] = C_{K,L} M_{K',L}`` for a stack of eigenvector matrices.

    Indices ``L`` and ``K'`` run over :func:`multi_indices` ``(n, q)``.
    """
    n = U.shape[-1]
    idx = multi_indices(n, q)
    lead = U.shape[:-2]
    W = np.empty(lead + (len(idx), len(idx)), dtype=complex)
    if q == 0 or q == n:
        W[...] = 1.0
        return W
    C = np.stack([_submatrix_det(U.conj(), K, L) for L in idx], axis=-1)
    M = np.stack([np.stack([_submatrix_det(U, Kp, L) for Kp in idx], axis=-1) for L in idx], axis=-2)
    return C[..., :, None] * M
