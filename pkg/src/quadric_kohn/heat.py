"""Fourier-domain heat kernel, Szego transform and the transformed Laplacian.

After a partial Fourier transform in ``t`` (dual variable ``lam``) and a
unitary change of coordinates into the eigenbasis of ``A^lam``, the Kohn
Laplacian on the ``L`` component becomes a sum of shifted two-dimensional
harmonic oscillators.  Everything in this module works in those eigen
coordinates ``z_alpha``.

The per-coordinate heat factor is written in the overflow-free form

    (2/s) * phi(2x) * exp(-(1 - eps) x) * exp(-x coth(x) |z_j|^2 / s),

with ``x = s |mu_j^lam|`` and ``phi(y) = y / (1 - e^-y)``.  It reduces to
``(2/s) exp(-|z_j|^2 / s)`` for a zero eigenvalue, so the degenerate and
nondegenerate cases share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifier import sign_pattern
from .errors import DomainError, ToleranceError
from .levi import ZERO_TOL, QuadricForm, SpectralData, assemble_directional, multi_index, spectral
from .quadrature import exp_sinh_batch, exp_sinh_rule, tanh_sinh_batch

TAYLOR_CUTOFF = 1e-4


@dataclass(frozen=True)
class TransformPoint:
    """A point of the transformed problem.

    ``z_alpha`` is given in eigen coordinates of ``A^lam``; ``lam`` is the
    (nonzero) Fourier variable and ``s`` the heat time.
    """

    z_alpha: np.ndarray
    lam: np.ndarray
    s: float
    L: tuple = ()

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if not np.any(lam):
            raise DomainError("lambda must be nonzero")
        if self.s < 0:
            raise ValueError("heat time must be nonnegative")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "z_alpha", np.atleast_1d(np.asarray(self.z_alpha, dtype=complex)))


@dataclass(frozen=True)
class Slice:
    """Spectral data of one direction together with the ``L``-dependent signs."""

    spectral: SpectralData
    abs_mu: np.ndarray
    eps: np.ndarray
    gamma: bool
    tau: float

    @property
    def a(self) -> np.ndarray:
        """``|mu_j^lam|`` (zero for degenerate slots)."""
        return self.tau * self.abs_mu


def direction(Q: QuadricForm, lam, L: Sequence[int] = (), zero_tol: float = ZERO_TOL) -> Slice:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    tau = float(np.linalg.norm(lam))
    if tau == 0.0:
        raise DomainError("lambda must be nonzero")
    S = spectral(Q, lam / tau, zero_tol)
    abs_mu, eps, gamma = sign_pattern(S, multi_index(L, Q.n))
    return Slice(S, abs_mu, eps, gamma, tau)


def x_coth_x(x):
    """``x coth x`` for ``x >= 0``, equal to 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = x < TAYLOR_CUTOFF
    xs = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        big = xs * (1.0 + 2.0 / np.expm1(2.0 * xs))
    x2 = np.where(small, x, 0.0) ** 2
    taylor = 1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2 ** 3 / 945.0
    return np.where(small, taylor, big)


def phi_ratio(y):
    """``y / (1 - exp(-y))`` for ``y >= 0``, equal to 1 at 0."""
    y = np.asarray(y, dtype=float)
    pos = y > 0
    yy = np.where(pos, y, 1.0)
    return np.where(pos, yy / -np.expm1(-yy), 1.0)


def log_one_minus_exp(y):
    """``log(1 - exp(-y))`` for ``y > 0``."""
    y = np.asarray(y, dtype=float)
    small = y < math.log(2.0)
    ys = np.where(small, y, 1.0)
    yl = np.where(small, 1.0, y)
    return np.where(small, np.log(-np.expm1(-ys)), np.log1p(-np.exp(-yl)))


def heat_factors(a, eps, rho, s):
    """Product over coordinates of the per-coordinate heat factors.

    ``a`` and ``eps`` have shape ``(n,)``; ``rho = |z_alpha|^2`` has shape
    ``(..., n)``; ``s`` broadcasts against the leading axes of ``rho``.
    """
    s = np.asarray(s, dtype=float)[..., None]
    x = s * a
    log_f = (np.log(2.0 / s) + np.log(phi_ratio(2.0 * x)) - (1.0 - eps) * x
             - x_coth_x(x) * rho / s)
    return np.exp(np.sum(log_f, axis=-1))


def _constant(n, m):
    return (2 * math.pi) ** -(0.5 * m + n)


def heat_transform(Q: QuadricForm, T: TransformPoint, zero_tol: float = ZERO_TOL) -> float:
    """Transformed heat kernel of the ``L`` component at heat time ``s``."""
    if T.s <= 0:
        raise DomainError("the heat kernel at s = 0 is a delta, not a pointwise value")
    d = direction(Q, T.lam, T.L, zero_tol)
    rho = np.abs(T.z_alpha) ** 2
    return float(_constant(Q.n, Q.m) * heat_factors(d.a, d.eps, rho, T.s))


def szego_transform(Q: QuadricForm, L: Sequence[int], z_alpha, lam, zero_tol: float = ZERO_TOL) -> float:
    """Transformed Szego kernel: nonzero only when ``lam/|lam|`` lies in the cone for ``L``."""
    d = direction(Q, lam, L, zero_tol)
    if not d.gamma:
        return 0.0
    rho = np.abs(np.asarray(z_alpha, dtype=complex)) ** 2
    return float(_szego_value(d.a, rho, Q.n, Q.m))


def _szego_value(a, rho, n, m):
    return 4.0 ** n * (2 * math.pi) ** -(n + 0.5 * m) * np.exp(np.sum(np.log(a) - a * rho, axis=-1))


def _tail_excess(a, rho, s):
    """``H/S - 1`` in the cone, computed without cancellation for large ``s``."""
    s = np.asarray(s, dtype=float)[..., None]
    x = s * a
    with np.errstate(over="ignore"):
        g = -log_one_minus_exp(2.0 * x) - 2.0 * a * rho / np.expm1(2.0 * x)
    return np.expm1(np.sum(g, axis=-1))


# ---------------------------------------------------------------------------
# s-integral of H - S

def _n_tilde(d: Slice, taus: np.ndarray, rho: np.ndarray, n: int, m: int,
             s_cut: float, rel_tol: float, max_level: int):
    """``int_0^inf (H - S) ds`` for the direction of ``d`` at magnitudes ``taus``."""
    taus = np.asarray(taus, dtype=float)
    A = taus[:, None] * d.abs_mu[None, :]
    c = _constant(n, m)

    def head(s):
        out = np.empty((taus.size, s.size))
        for k in range(taus.size):
            h = heat_factors(A[k], d.eps, rho[None, :], s)
            if d.gamma:
                h = h - _szego_value(A[k], rho, n, m) / c
            out[k] = h
        return out

    def tail(v):
        # s = s_cut + v; exp-sinh copes with exponential and algebraic decay alike
        s = s_cut + v
        out = np.empty((taus.size, v.size))
        for k in range(taus.size):
            if d.gamma:
                out[k] = _szego_value(A[k], rho, n, m) / c * _tail_excess(A[k], rho[None, :], s)
            else:
                out[k] = heat_factors(A[k], d.eps, rho[None, :], s)
        return out

    r1 = tanh_sinh_batch(head, 0.0, s_cut, rel_tol=rel_tol, max_level=max_level)
    r2 = exp_sinh_batch(tail, rel_tol=rel_tol, max_level=max_level, scale=s_cut)
    value = c * (r1.value + r2.value)
    error = c * (r1.error + r2.error)
    return value, error, np.asarray(r1.converged) & np.asarray(r2.converged)


def n_transform_from_heat(Q: QuadricForm, L: Sequence[int], z_alpha, lam, s_cut: float = 1.0,
                          tail_tol: float = 1e-11, max_level: int = 10,
                          zero_tol: float = ZERO_TOL):
    """Transformed relative fundamental solution as ``int_0^inf (H - S) ds``.

    The integral is split at ``s_cut``: tanh-sinh on ``(0, s_cut)`` and
    exp-sinh on the tail.  The tail decays only algebraically when ``|lam|``
    is small or an eigenvalue vanishes, which an ``exp(-s)`` substitution
    would truncate.
    Returns ``(value, error_estimate)``.
    """
    z_alpha = np.atleast_1d(np.asarray(z_alpha, dtype=complex))
    if not np.any(z_alpha):
        raise DomainError("the s-integral diverges at s = 0 when z_alpha = 0")
    d = direction(Q, lam, L, zero_tol)
    rho = np.abs(z_alpha) ** 2
    value, error, ok = _n_tilde(d, np.array([d.tau]), rho, Q.n, Q.m, s_cut, tail_tol, max_level)
    if not np.all(ok):
        raise ToleranceError("n_transform_from_heat: s-integral did not converge", value[0], error[0])
    return float(value[0]), float(error[0])


def heat_alpha_slice(Q: QuadricForm, L: Sequence[int], z, t, alpha, rel_tol: float = 1e-11,
                     max_level: int = 9, zero_tol: float = ZERO_TOL):
    """Radial inverse Fourier transform of the s-integral along one direction.

    Computes ``(2 pi)^(-m/2) int_0^inf tau^(m-1) e^(i tau alpha.t) N(z, alpha tau) dtau``
    where ``N`` comes from :func:`n_transform_from_heat`, i.e. the contribution
    of the direction ``alpha`` to the kernel before the sphere integral.
    ``z`` is in the original coordinates.  Returns ``(value, error)``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    alpha = alpha / np.linalg.norm(alpha)
    if not np.any(z):
        raise DomainError("the s-integral diverges at s = 0 when z = 0")
    d = direction(Q, alpha, L, zero_tol)
    rho = np.abs(z @ d.spectral.U.conj()) ** 2
    n, m = Q.n, Q.m
    at = float(alpha @ t)
    width = float(np.sum(np.where(d.abs_mu > 0, d.abs_mu, 1.0) * rho))
    failures = []

    def f(tau):
        v, _, ok = _n_tilde(d, tau, rho, n, m, 1.0, rel_tol * 0.1, 10)
        if not np.all(ok):
            failures.append(tau[~ok])
        return tau ** (m - 1) * np.exp(1j * tau * at) * v

    res = exp_sinh_batch(f, rel_tol=rel_tol, max_level=max_level, scale=1.0 / max(width, 1e-300))
    value = complex(res.value) * (2 * math.pi) ** (-0.5 * m)
    error = float(res.error) * (2 * math.pi) ** (-0.5 * m)
    if not np.all(res.converged) or failures:
        raise ToleranceError("heat_alpha_slice did not converge", value, error)
    return value, error


# ---------------------------------------------------------------------------
# verification helpers

@dataclass(frozen=True)
class GridSpec:
    """Finite-difference stencil spacing ``h`` applied at a lattice of centres.

    The centres form a uniform lattice with ``points_per_axis`` points on
    ``[-extent, extent]`` in each of the ``2n`` real coordinates.  The stencil
    spacing is independent of the lattice spacing, so small ``h`` does not
    require a correspondingly fine (and, for ``n > 1``, enormous) grid.
    The time step defaults to ``h / 10`` so that it shrinks with ``h`` and the
    spatial truncation error dominates.
    """

    h: float = 1e-3
    extent: float = 2.0
    points_per_axis: int | None = None
    ds: float | None = None

    @property
    def time_step(self) -> float:
        return self.ds if self.ds is not None else 0.1 * self.h

    def centres(self, n: int) -> np.ndarray:
        k = self.points_per_axis
        if k is None:
            k = max(3, int(round(4000 ** (1.0 / (2 * n)))))
            k += 1 - k % 2
        if k < 1:
            raise ValueError("points_per_axis must be positive")
        if self.h <= 0 or 2 * self.h >= self.extent:
            raise ValueError("grid too small for the stencil")
        axis = np.linspace(-self.extent, self.extent, k) if k > 1 else np.zeros(1)
        grids = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
        xy = np.stack([g.ravel() for g in grids], axis=-1)
        return xy[:, 0::2] + 1j * xy[:, 1::2]


def box_transformed_residual(Q: QuadricForm, L: Sequence[int], lam, grid: GridSpec,
                             s_values: Sequence[float], target: str = "heat",
                             zero_tol: float = ZERO_TOL) -> float:
    """Relative residual of the transformed heat equation by central differences.

    Applies ``d/ds + (-1/4 Lap + 2i sum mu_k Im(z_k d/dz_k) + sum mu_k^2 |z_k|^2
    - sum_k eps_k |mu_k|)`` to the heat kernel (``target="heat"``) or the
    transformed Szego kernel (``target="szego"``, no ``s`` dependence) and
    returns the maximum over centres and ``s_values`` of ``|residual| / max|f|``.
    """
    d = direction(Q, lam, L, zero_tol)
    n, m = Q.n, Q.m
    mu = d.spectral.mu * d.tau
    mu = np.where(d.abs_mu > 0, mu, 0.0)
    shift = float(np.sum(d.eps * d.a))
    h = grid.h
    ds = grid.time_step
    Z = grid.centres(n)

    if target == "szego":
        if not d.gamma:
            raise DomainError("the transformed Szego kernel vanishes outside the cone")

        def f(zz, s):
            return _szego_value(d.a, np.abs(zz) ** 2, n, m)
    elif target == "heat":
        def f(zz, s):
            return _constant(n, m) * heat_factors(d.a, d.eps, np.abs(zz) ** 2, s)
    else:
        raise ValueError(f"unknown target {target!r}")

    worst = 0.0
    for s in s_values:
        if s <= ds:
            raise DomainError("s must exceed the time step")
        f0 = f(Z, s)
        lap = np.zeros(Z.shape[0])
        rot = np.zeros(Z.shape[0], dtype=complex)
        for k in range(n):
            e = np.zeros(n, dtype=complex)
            e[k] = h
            fxp, fxm = f(Z + e, s), f(Z - e, s)
            fyp, fym = f(Z + 1j * e, s), f(Z - 1j * e, s)
            lap += (fxp + fxm + fyp + fym - 4.0 * f0) / (h * h)
            dx = (fxp - fxm) / (2 * h)
            dy = (fyp - fym) / (2 * h)
            # Im(z d/dz) = (x d/dy - y d/dx) / 2
            rot += mu[k] * 0.5 * (Z[:, k].real * dy - Z[:, k].imag * dx)
        pot = np.sum((mu ** 2) * np.abs(Z) ** 2, axis=-1)
        if target == "heat":
            dfs = (f(Z, s + ds) - f(Z, s - ds)) / (2 * ds)
        else:
            dfs = 0.0
        res = dfs - 0.25 * lap + 2j * rot + (pot - shift) * f0
        worst = max(worst, float(np.max(np.abs(res)) / np.max(np.abs(f0))))
    return worst


def offdiagonal_coupling(Q: QuadricForm, lam) -> float:
    """Largest off-diagonal entry of ``U* A^lam U`` relative to ``max|A^lam|``.

    These entries are the only source of coupling between different form
    components of the transformed Laplacian; they vanish in the eigenbasis.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    tau = float(np.linalg.norm(lam))
    S = spectral(Q, lam / tau)
    A = assemble_directional(Q, lam)
    B = S.U.conj().T @ A @ S.U
    off = B - np.diag(np.diag(B))
    return float(np.max(np.abs(off)) / max(np.max(np.abs(A)), 1e-300))


def mass_closed_form(Q: QuadricForm, L: Sequence[int], s: float, lam, zero_tol: float = ZERO_TOL) -> float:
    """``(2 pi)^(-m/2) prod_j exp(s eps_j |mu_j|) / cosh(s |mu_j|)``."""
    d = direction(Q, lam, L, zero_tol)
    x = s * d.a
    # e^{s eps a}/cosh(s a) = 2 e^{-(1-eps) x}/(1 + e^{-2x})
    log_terms = math.log(2.0) - (1.0 - d.eps) * x - np.log1p(np.exp(-2.0 * x))
    return float((2 * math.pi) ** (-0.5 * Q.m) * math.exp(np.sum(log_terms)))


def heat_mass(Q: QuadricForm, L: Sequence[int], s: float, lam, rel_tol: float = 1e-11,
              max_level: int = 8, zero_tol: float = ZERO_TOL):
    """``int_{C^n} H dz`` by cubature.

    In polar coordinates per complex coordinate the measure is
    ``pi d(rho_j)`` with ``rho_j = |z_j|^2``.  The integral is evaluated on a
    tensor product of exp-sinh rules in the ``rho_j`` (one scale per
    coordinate, nodes outside the kernel's numerical support dropped),
    feeding the full kernel at every node.  Returns
    ``(value, error)``.
    """
    d = direction(Q, lam, L, zero_tol)
    n = Q.n
    x = s * d.a
    scales = s / x_coth_x(x)

    def rule(level):
        # the kernel decays like exp(-rho_j / scale_j); nodes beyond 60 scales
        # or below 1e-18 scales (weight ~ rho_j) contribute under roundoff
        nodes, weights = [], []
        for j in range(n):
            xj, wj = exp_sinh_rule(level, scales[j])
            keep = (xj <= 60.0 * scales[j]) & (xj >= 1e-18 * scales[j])
            nodes.append(xj[keep])
            weights.append(wj[keep] * math.pi)
        return nodes, weights

    prev = None
    for level in range(3, max_level + 1):
        nodes, weights = rule(level)
        grids = np.meshgrid(*nodes, indexing="ij")
        wgrid = np.ones(grids[0].shape)
        for j, w in enumerate(np.meshgrid(*weights, indexing="ij")):
            wgrid = wgrid * w
        rho = np.stack([g.ravel() for g in grids], axis=-1)
        z = np.sqrt(rho).astype(complex)
        vals = _constant(n, Q.m) * heat_factors(d.a, d.eps, np.abs(z) ** 2, s)
        est = float(np.sum(vals * wgrid.ravel()))
        if prev is not None and abs(est - prev) <= rel_tol * abs(est):
            return est, abs(est - prev)
        prev = est
    raise ToleranceError("heat_mass: cubature did not converge", prev, None)
