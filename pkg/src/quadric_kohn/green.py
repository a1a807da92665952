"""Kernel evaluation by quadrature over directions and the radial variable.

Each kernel is an integral over unit directions ``alpha`` of a radial integral
in ``r in (0, 1)``.  Internally the radial variable is ``u = -log r``
(``dr/r = du``), which turns the radial integral into one over ``(0, inf)``
handled by exp-sinh and avoids forming ``r**|mu|`` when ``|mu|`` is tiny.
In that variable the radial integrand of the fundamental solution is

    (n+m-2)! * prod_j [phi(y_j) exp(-(1-eps_j) y_j / 2)] * u**(m-1) / D**(n+m-1)

with ``y_j = |mu_j| u``, ``phi(y) = y/(1-e^-y)``,
``D = 2 sum_j psi(y_j) |z_j|^2 - i u alpha.t`` and ``psi(y) = (y/2) coth(y/2)``.
Zero eigenvalues enter with ``phi = psi = 1``, which is exactly the
degenerate variant with the ``1/|log r|`` factors.

Directions are integrated per panel.  Panels are split wherever an
eigenvalue changes sign or touches zero and wherever two eigenvalues come
close; sign patterns (and hence cone membership) are read off once per panel
at its midpoint.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.optimize import brentq, minimize_scalar

from .classifier import SphereSampler, gamma_report, hyperspherical, sign_pattern
from .errors import DomainError, ToleranceError
from .heat import log_one_minus_exp, phi_ratio, x_coth_x
from .levi import (ZERO_TOL, QuadricForm, assemble_directional, basis_weights, multi_index, multi_indices,
                   spectral, spectral_batch)
from .quadrature import exp_sinh_batch, periodic_trapezoid, tanh_sinh_batch

TWO_PI = 2.0 * math.pi


class Formula(str, Enum):
    N_NO_SZEGO = "N_NO_SZEGO"
    N_WITH_SZEGO = "N_WITH_SZEGO"
    SZEGO = "SZEGO"


class SphereRule(str, Enum):
    TWO_POINT = "TWO_POINT"
    ADAPTIVE_ANGLES = "ADAPTIVE_ANGLES"
    PRODUCT_SPHERICAL = "PRODUCT_SPHERICAL"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and panel rules for the direction and radial integrals.

    Attributes
    ----------
    rel_tol, abs_tol
        Target accuracy of the final coefficients.  Inner integrals run at a
        tenth of ``rel_tol``.
    max_panels
        Upper bound on the number of angular panels on one circle.
    sphere_rule
        ``None`` picks the rule from ``m``.
    crossing_split_tol
        Relative eigenvalue gap below which a circle is split.
    touch_tol
        Relative size below which a local minimum of ``|mu_j|`` is a split.
    scan_points
        Angles scanned on each circle when looking for split points.
    max_level
        Level budget of each double-exponential rule.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_panels: int = 64
    sphere_rule: Optional[SphereRule] = None
    crossing_split_tol: float = 1e-3
    touch_tol: float = 1e-2
    scan_points: int = 512
    max_level: int = 10
    zero_tol: float = ZERO_TOL

    def __post_init__(self):
        if not self.rel_tol > 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be positive")
        if self.sphere_rule is not None:
            object.__setattr__(self, "sphere_rule", SphereRule(self.sphere_rule))

    def rule_for(self, m: int) -> SphereRule:
        if self.sphere_rule is not None:
            return self.sphere_rule
        return (SphereRule.TWO_POINT, SphereRule.ADAPTIVE_ANGLES)[m - 1] if m <= 2 \
            else SphereRule.PRODUCT_SPHERICAL


@dataclass(frozen=True)
class EvalPoint:
    z: np.ndarray
    t: np.ndarray
    q: int = 0
    K: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=complex)))
        object.__setattr__(self, "t", np.atleast_1d(np.asarray(self.t, dtype=float)))
        if len(self.K) != self.q:
            raise ValueError(f"K={self.K} does not have length q={self.q}")
        object.__setattr__(self, "K", tuple(int(k) for k in self.K))

    def check(self, Q: QuadricForm):
        if self.z.size != Q.n or self.t.size != Q.m:
            raise ValueError(f"point has shape ({self.z.size}, {self.t.size}), quadric ({Q.n}, {Q.m})")
        multi_index(self.K, Q.n)
        if not np.any(self.z) and not np.any(self.t):
            raise DomainError("kernels are singular at the group identity (z, t) = (0, 0)")


@dataclass
class FormCoefficients:
    """Kernel value as coefficients on the fixed ``dzbar^K'`` basis."""

    coeffs: dict
    abs_error: dict
    formula_used: Formula
    converged: bool = True

    def __getitem__(self, K):
        return self.coeffs[tuple(K)]

    @property
    def scalar(self) -> complex:
        """The single coefficient when ``q = 0`` or ``q = n``."""
        if len(self.coeffs) != 1:
            raise ValueError("more than one coefficient")
        return next(iter(self.coeffs.values()))


# ---------------------------------------------------------------------------
# complex helpers

def _clog1p(w):
    """``log(1 + w)`` for complex ``w`` without losing the real part when ``|w|`` is small."""
    x, y = w.real, w.imag
    return 0.5 * np.log1p(x * (2.0 + x) + y * y) + 1j * np.arctan2(y, 1.0 + x)


def _cexpm1(w):
    """``exp(w) - 1`` for complex ``w``."""
    x, y = w.real, w.imag
    s = np.sin(0.5 * y)
    return np.expm1(x) * np.cos(y) - 2.0 * s * s + 1j * np.exp(x) * np.sin(y)


def _ipow(x, k: int):
    out = np.ones_like(x)
    for _ in range(k):
        out = out * x
    return out


# ---------------------------------------------------------------------------
# the radial variable

def a_alpha(mu_abs, r: float, z_alpha) -> float:
    """The function ``A_alpha(r, z)`` of the radial integrand.

    ``mu_abs`` holds ``|mu_j^alpha|`` with exact zeros in degenerate slots;
    those contribute ``2 |z_j|^2 / |log r|``.
    """
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    u = -math.log(r)
    y = np.asarray(mu_abs, dtype=float) * u
    rho = np.abs(np.asarray(z_alpha, dtype=complex)) ** 2
    return float(2.0 * np.sum(x_coth_x(0.5 * y) * rho) / u)


def integrate_r(f: Callable, spec: QuadratureSpec = QuadratureSpec()):
    """Integrate ``f`` over ``(0, 1)`` with tanh-sinh, never touching the endpoints.

    Returns ``(value, error)``; raises :class:`ToleranceError` on budget
    exhaustion.
    """
    res = tanh_sinh_batch(f, 0.0, 1.0, rel_tol=spec.rel_tol, abs_tol=spec.abs_tol,
                          max_level=spec.max_level)
    if not np.all(res.converged):
        raise ToleranceError("integrate_r: level budget exhausted", res.value, res.error)
    return res.value[()], res.error[()]


def integrate_r_log(f: Callable, spec: QuadratureSpec = QuadratureSpec(), scale: float = 1.0):
    """Integrate ``g(u) = f(exp(-u)) / exp(-u)``-type integrands over ``u in (0, inf)``.

    This is ``int_0^1 f(r) dr`` after ``u = -log r``; ``f`` here already
    receives ``u`` and must include the Jacobian.  Returns ``(value, error)``.
    """
    res = exp_sinh_batch(f, rel_tol=spec.rel_tol, abs_tol=spec.abs_tol,
                         max_level=spec.max_level, scale=scale)
    if not np.all(res.converged):
        raise ToleranceError("integrate_r_log: level budget exhausted", res.value, res.error)
    return res.value[()], res.error[()]


@dataclass
class _Rows:
    """Direction nodes sharing one panel sign pattern."""

    abs_mu: np.ndarray      # (N, n), exact zeros in degenerate slots
    rho: np.ndarray         # (N, n), |z_alpha|^2
    at: np.ndarray          # (N,), alpha . t


def _green_radial(rows: _Rows, eps: np.ndarray, gamma: bool, n: int, m: int,
                  rel_tol: float, max_level: int):
    """Radial integral (in ``u``) of one form component for a batch of directions."""
    p = n + m - 1
    fact = math.factorial(n + m - 2)
    mu = rows.abs_mu[:, None, :]
    rho = rows.rho[:, None, :]
    at = rows.at[:, None]
    if gamma:
        A0 = np.sum(rows.abs_mu * rows.rho, axis=-1)[:, None]
        base = A0 - 1j * at
        T2 = fact * np.prod(rows.abs_mu, axis=-1)[:, None] / _ipow(base, p)

    def f(u):
        y = mu * u[None, :, None]
        if gamma:
            # F / T2 = prod 1/(1 - e^-y) * (1 + delta/base)^-p
            ypos = np.maximum(y, 1e-300)
            with np.errstate(over="ignore"):
                delta = np.sum(mu * 2.0 * rho / np.expm1(ypos), axis=-1)
            g = -np.sum(log_one_minus_exp(ypos), axis=-1) - p * _clog1p(delta / base)
            return T2 * _cexpm1(g)
        logP = np.sum(np.log(phi_ratio(y)) - 0.5 * (1.0 - eps) * y, axis=-1)
        D = 2.0 * np.sum(x_coth_x(0.5 * y) * rho, axis=-1) - 1j * u[None, :] * at
        R = 1.0 / D
        return fact * np.exp(logP) * _ipow(u[None, :] * R, m - 1) * _ipow(R, n)

    top = float(np.max(rows.abs_mu)) if rows.abs_mu.size else 1.0
    res = exp_sinh_batch(f, rel_tol=rel_tol, max_level=max_level,
                         scale=1.0 / top if top > 0 else 1.0)
    return res


def _szego_slice(rows: _Rows, n: int, m: int):
    fact = math.factorial(n + m - 1)
    A0 = np.sum(rows.abs_mu * rows.rho, axis=-1)
    return fact * np.prod(rows.abs_mu, axis=-1) / _ipow(A0 - 1j * rows.at, n + m)


def green_constant(n: int, m: int) -> float:
    """Overall constant in front of the radial integrals (factorial included there)."""
    return 4.0 ** n / (2.0 * TWO_PI ** (m + n))


def szego_constant(n: int, m: int) -> float:
    return 4.0 ** n / TWO_PI ** (m + n)


# ---------------------------------------------------------------------------
# direction integrand

@dataclass
class _Job:
    Q: QuadricForm
    z: np.ndarray
    t: np.ndarray
    q: int
    K: tuple
    kind: str           # "green" or "szego"
    spec: QuadratureSpec
    Ls: list = field(default_factory=list)

    def __post_init__(self):
        self.Ls = multi_indices(self.Q.n, self.q)


class _Inner:
    """Collects convergence failures of inner integrals.

    ``outer_dist`` is the distance of the current circle to the end of its
    polar-angle panel; it enters the weight bound like the angular distance.
    """

    def __init__(self):
        self.failed = False
        self.error = 0.0
        self.outer_dist = None


def _weight_bound(dist):
    """Bound (up to O(1)) on a tanh-sinh weight at distance ``dist`` from a panel end."""
    d = np.maximum(dist, 1e-300)
    return np.minimum(1.0, 4.0 * d * (1.0 + np.abs(np.log(d))))


def _slice_values(job: _Job, alphas: np.ndarray, signs: np.ndarray, inner: _Inner,
                  dist: np.ndarray | None = None, spectra=None):
    """Coefficient integrand (``(N, n_K')``) at directions sharing the sign vector ``signs``.

    ``dist`` is the angular distance of each node to its panel end.  Slices
    may have integrable singularities at panel ends (an eigenvalue going to
    zero); a radial integral that misses its tolerance there is accepted when
    its error, scaled by a bound on the node's quadrature weight, is
    negligible.  The recorded inner error is weighted the same way.  ``spectra`` optionally supplies ``(mu, U)`` for the nodes.
    """
    Q = job.Q
    n, m = Q.n, Q.m
    mu, U = spectra if spectra is not None else spectral_batch(Q, alphas)[:2]
    abs_mu = np.where(signs[None, :] != 0, np.abs(mu), 0.0)
    rho = np.abs(np.einsum("i,nij->nj", job.z, U.conj())) ** 2
    rows = _Rows(abs_mu, rho, alphas @ job.t)
    W = basis_weights(U, job.K, job.q)
    out = np.zeros((alphas.shape[0], len(job.Ls)), dtype=complex)
    rtol = job.spec.rel_tol * 0.1
    for li, L in enumerate(job.Ls):
        flip = -np.ones(n, dtype=int)
        if L:
            flip[np.asarray(L) - 1] = 1
        eps = signs * flip
        gamma = bool(np.all(eps == 1))
        if job.kind == "szego":
            if not gamma:
                continue
            v = szego_constant(n, m) * _szego_slice(rows, n, m)
        else:
            res = _green_radial(rows, eps, gamma, n, m, rtol, job.spec.max_level)
            v = green_constant(n, m) * res.value
            err = green_constant(n, m) * res.error
            bad = ~np.asarray(res.converged)
            wt = np.ones(v.shape) if dist is None else _weight_bound(dist)
            if inner.outer_dist is not None:
                wt = wt * _weight_bound(inner.outer_dist)
            werr = err * wt
            if np.any(bad) and np.any(werr[bad] > rtol * np.median(np.abs(v))):
                inner.failed = True
            inner.error = max(inner.error, float(np.max(werr)) if werr.size else 0.0)
        out += W[:, li, :] * v[:, None]
    return out


# ---------------------------------------------------------------------------
# circles of directions

def _signs_at(Q: QuadricForm, alpha: np.ndarray, zero_tol: float) -> np.ndarray:
    S = spectral(Q, alpha / np.linalg.norm(alpha), zero_tol)
    return S.signs


def _root(g, lo, hi):
    ga, gb = g(lo), g(hi)
    if ga * gb > 0:
        # the scan saw a sign change that re-evaluation puts at rounding level
        return lo if abs(ga) <= abs(gb) else hi
    if ga == 0.0 or gb == 0.0:
        return lo if ga == 0.0 else hi
    return brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def circle_breakpoints(Q: QuadricForm, amap: Callable, spec: QuadratureSpec,
                       crossings: bool = True) -> list:
    """Angles in ``[0, 2 pi)`` at which a circle of directions must be split.

    ``amap`` maps an array of angles to unit directions ``(N, m)``.  With
    ``crossings=False`` near-crossings of eigenvalues are not split; that is
    safe when the integrand is symmetric under relabelling, as it is for
    ``q = 0`` and ``q = n`` where every basis weight equals 1.
    """
    return _breakpoints(Q, amap, spec, crossings)[0]


def _breakpoints(Q: QuadricForm, amap: Callable, spec: QuadratureSpec, crossings: bool = True):
    """Split angles plus the ``(angle, j)`` pairs where eigenvalue ``j`` touches zero."""
    N = spec.scan_points
    th = TWO_PI * np.arange(N) / N
    mu, _, scale = spectral_batch(Q, amap(th))
    scale = np.maximum(scale, 1e-300)
    rel = mu / scale[:, None]
    n = mu.shape[1]
    cuts = []
    touches = []

    def eig(j):
        def g(x):
            mm, _, sc = spectral_batch(Q, amap(np.array([x])))
            return mm[0, j] / max(sc[0], 1e-300)
        return g

    def slope(weights):
        # Hellmann-Feynman: d mu_j / d theta = v_j^* A^(d alpha/d theta) v_j
        def g(x):
            al = amap(np.array([x]))
            tangent = np.zeros_like(al)
            tangent[:, -2], tangent[:, -1] = -al[:, -1], al[:, -2]
            _, U, _ = spectral_batch(Q, al)
            B = U[0].conj().T @ assemble_directional(Q, tangent[0]) @ U[0]
            return float(np.real(np.diag(B)) @ weights)
        return g

    def extremum(weights, lo, hi, target):
        d = slope(weights)
        da, db = d(lo), d(hi)
        if da * db < 0:
            return brentq(d, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        res = minimize_scalar(target, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        return float(res.x)

    def local_min(vals, i):
        return vals[i] <= vals[(i - 1) % N] and vals[i] <= vals[(i + 1) % N]

    step = TWO_PI / N
    for j in range(n):
        g = eig(j)
        av = np.abs(rel[:, j])
        e_j = np.zeros(n)
        e_j[j] = 1.0
        for i in range(N):
            a, b = rel[i, j], rel[(i + 1) % N, j]
            lo, hi = th[i], th[i] + step
            if a == 0.0:
                cuts.append(lo)
            elif a * b < 0:
                cuts.append(_root(g, lo, hi))
            elif local_min(av, i) and av[i] < spec.touch_tol:
                x = extremum(e_j, lo - step, hi, lambda x: abs(g(x)))
                cuts.append(x)
                touches.append((float(np.mod(x, TWO_PI)), j))
    for j in range(n - 1 if crossings else 0):
        gv = rel[:, j] - rel[:, j + 1]
        w = np.zeros(n)
        w[j], w[j + 1] = 1.0, -1.0
        for i in range(N):
            if local_min(gv, i) and gv[i] < max(10 * spec.crossing_split_tol, 1e-2):
                def gap(x, j=j):
                    mm, _, sc = spectral_batch(Q, amap(np.array([x])))
                    return (mm[0, j] - mm[0, j + 1]) / max(sc[0], 1e-300)
                x = extremum(w, th[i] - step, th[i] + step, gap)
                if gap(x) < spec.crossing_split_tol:
                    cuts.append(x)
    cuts = np.sort(np.mod(cuts, TWO_PI))
    if cuts.size == 0:
        return [], []
    keep = [cuts[0]]
    for c in cuts[1:]:
        if c - keep[-1] > 1e-12:
            keep.append(c)
    if len(keep) > 1 and keep[0] + TWO_PI - keep[-1] <= 1e-12:
        keep.pop()
    return list(keep), touches


# Within this angular distance of a point where an eigenvalue touches zero the
# computed eigenvalue is replaced by its quadratic model: rounding noise in
# the eigensolver (about eps * |A|) would otherwise dominate |mu_j| there and
# the slice depends on it logarithmically.  The model's relative error is
# O(TOUCH_MODEL_RADIUS).
TOUCH_MODEL_RADIUS = 1e-5


def _touch_curvature(Q: QuadricForm, amap: Callable, x0: float, j: int) -> float:
    h = 1e-3
    mu, _, _ = spectral_batch(Q, amap(np.array([x0 - 2 * h, x0 - h, x0, x0 + h, x0 + 2 * h])))
    f = mu[:, j]
    # fourth-order central second difference
    return float((-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h))


def _circle_spectra(Q: QuadricForm, amap: Callable, th, da, db, a, b, touches):
    mu, U, _ = spectral_batch(Q, amap(th))
    for x0, j, kappa in touches:
        for end, d in ((a, da), (b, db)):
            if abs(np.mod(end - x0 + math.pi, TWO_PI) - math.pi) > 1e-12:
                continue
            near = d < TOUCH_MODEL_RADIUS
            mu[near, j] = 0.5 * kappa * d[near] ** 2
    return mu, U


def _integrate_circle(job: _Job, amap: Callable, inner: _Inner):
    """Integral over one circle of directions; returns ``(value, error)`` arrays over K'."""
    spec = job.spec
    Q = job.Q
    cuts, touches = _breakpoints(Q, amap, spec, crossings=0 < job.q < Q.n)
    touches = [(x0, j, _touch_curvature(Q, amap, x0, j)) for x0, j in touches]
    rtol = spec.rel_tol
    if not cuts:
        signs = _signs_at(Q, amap(np.array([0.0]))[0], spec.zero_tol)

        def f(th):
            return _slice_values(job, amap(th), signs, inner).T

        res = periodic_trapezoid(f, TWO_PI, 0.0, n0=16, rel_tol=rtol, abs_tol=spec.abs_tol,
                                 max_doublings=spec.max_level)
        return res.value, res.error, bool(np.all(res.converged))
    if len(cuts) > spec.max_panels:
        raise ToleranceError(f"{len(cuts)} panels exceed the budget of {spec.max_panels}")
    total = 0.0
    error = 0.0
    ok = True
    edges = list(cuts) + [cuts[0] + TWO_PI]
    for a, b in zip(edges[:-1], edges[1:]):
        signs = _signs_at(Q, amap(np.array([0.5 * (a + b)]))[0], spec.zero_tol)
        if job.kind == "szego" and not _any_gamma(signs, job.Ls):
            continue
        if job.kind == "szego" and not np.any(job.z):
            _check_szego_origin(job, amap, a, b)

        def f(th, da, db, signs=signs, a=a, b=b):
            spectra = _circle_spectra(Q, amap, th, da, db, a, b, touches)
            return _slice_values(job, amap(th), signs, inner, np.minimum(da, db), spectra).T

        res = tanh_sinh_batch(f, a, b, rel_tol=rtol, abs_tol=spec.abs_tol, max_level=spec.max_level,
                              complement=True)
        total = total + res.value
        error = error + res.error
        ok &= bool(np.all(res.converged))
    return np.asarray(total), np.asarray(error), ok


def _any_gamma(signs, Ls) -> bool:
    for L in Ls:
        flip = -np.ones(signs.size, dtype=int)
        if L:
            flip[np.asarray(L) - 1] = 1
        if np.all(signs * flip == 1):
            return True
    return False


def _check_szego_origin(job: _Job, amap, a, b):
    th = np.linspace(a, b, 257)
    at = amap(th) @ job.t
    if np.any(np.sign(at[:-1]) * np.sign(at[1:]) <= 0):
        raise DomainError("at z = 0 the Szego integrand is not integrable across alpha.t = 0")


def _circle_map(prefix_angles: np.ndarray, m: int):
    def amap(th):
        th = np.atleast_1d(th)
        ang = np.column_stack([np.broadcast_to(prefix_angles, (th.size, m - 2)), th]) \
            if m > 2 else th[:, None]
        return hyperspherical(ang)
    return amap


def integrate_sphere(g: Callable, Q: QuadricForm, spec: QuadratureSpec = QuadratureSpec()):
    """Integrate a vectorised function of directions over the unit sphere.

    ``g`` receives ``(N, m)`` unit vectors and returns an array whose first
    axis runs over them.  The circle rule splits at the same spectral break
    points used for the kernels.  Returns ``(value, error)``.
    """
    m = Q.m
    if m == 1:
        v = np.asarray(g(np.array([[1.0], [-1.0]])))
        return v[0] + v[1], 0.0

    def circle(prefix):
        amap = _circle_map(prefix, m)
        cuts = circle_breakpoints(Q, amap, spec)
        if not cuts:
            r = periodic_trapezoid(lambda th: np.moveaxis(np.asarray(g(amap(th))), 0, -1), TWO_PI,
                                   rel_tol=spec.rel_tol, max_doublings=spec.max_level)
            return r.value, r.error
        edges = list(cuts) + [cuts[0] + TWO_PI]
        val, err = 0.0, 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            r = tanh_sinh_batch(lambda th: np.moveaxis(np.asarray(g(amap(th))), 0, -1), a, b,
                                rel_tol=spec.rel_tol, max_level=spec.max_level)
            val, err = val + r.value, err + r.error
        return val, err

    if m == 2:
        return circle(np.zeros(0))
    return _outer_angles(lambda prefix: circle(prefix), m, spec,
                         lambda prefix: outer_breakpoints(Q, prefix, spec))


def _generic_rank(Q: QuadricForm, zero_tol: float) -> int:
    alphas = np.random.default_rng(12345).normal(size=(8, Q.m))
    alphas /= np.linalg.norm(alphas, axis=1, keepdims=True)
    mu, _, scale = spectral_batch(Q, alphas)
    return int(np.max(np.sum(np.abs(mu) > zero_tol * scale[:, None], axis=1)))


def _circle_coefficients(Q: QuadricForm, prefix: np.ndarray, psi: float, r: int) -> np.ndarray:
    """Fourier coefficients (``k = -r..r``) of ``e_r(mu(alpha))`` along the circle at ``psi``.

    ``e_r`` is the elementary symmetric function of the eigenvalues of order
    equal to the generic rank; it is a homogeneous polynomial of degree ``r``
    in ``alpha`` whose zero set is where the rank drops, so on a circle it is
    a trigonometric polynomial of degree ``r``.
    """
    N = 2 * r + 1
    th = TWO_PI * np.arange(N) / N
    mu, _, _ = spectral_batch(Q, _circle_map(np.append(prefix, psi), Q.m)(th))
    vals = np.array([np.poly(row)[r] for row in mu]) * (-1) ** r
    c = np.fft.fft(vals) / N
    return np.concatenate([c[N - r:], c[:r + 1]])


def _roots_on_circle(c: np.ndarray, tol: float = 1e-6) -> int:
    """Number of zeros of the trigonometric polynomial with coefficients ``c`` on the unit circle."""
    nz = np.flatnonzero(np.abs(c) > 1e-13 * np.max(np.abs(c)))
    if nz.size < 2:
        return 0
    poly = c[nz[0]:nz[-1] + 1][::-1]
    w = np.roots(poly)
    return int(np.sum(np.abs(np.abs(w) - 1.0) <= tol))


def outer_breakpoints(Q: QuadricForm, prefix: np.ndarray, spec: QuadratureSpec,
                      n_scan: int = 64) -> list:
    """Polar angles in ``(0, pi)`` where the circle of directions is tangent to, or lies in, the rank-drop set.

    The circle integral is not smooth at those angles.  Tangencies are where
    the number of zeros on the circle of the generic-rank elementary
    symmetric function changes; containment is where its Fourier coefficient
    vector vanishes.  Near the poles the circles shrink and the coefficients
    vanish trivially, so only interior minima count.
    """
    r = _generic_rank(Q, spec.zero_tol)
    if r == 0:
        return []
    psi = np.linspace(0.0, math.pi, n_scan + 1)[1:-1]
    coefs = [_circle_coefficients(Q, prefix, p, r) for p in psi]
    norms = np.array([np.linalg.norm(c) for c in coefs])
    counts = [_roots_on_circle(c) for c in coefs]
    out = []

    def count_at(x):
        return _roots_on_circle(_circle_coefficients(Q, prefix, x, r))

    for i in range(len(psi) - 1):
        lo, hi = psi[i], psi[i + 1]
        if counts[i] != counts[i + 1]:
            c_lo = counts[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if count_at(mid) == c_lo:
                    lo = mid
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
            continue
    big = float(np.max(norms))
    norm_at = lambda x: float(np.linalg.norm(_circle_coefficients(Q, prefix, x, r)))
    for i in range(1, len(psi) - 1):
        if norms[i] <= norms[i - 1] and norms[i] <= norms[i + 1] and norms[i] < 0.1 * big:
            lo, hi = psi[i - 1], psi[i + 1]
            res = minimize_scalar(norm_at, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13})
            if res.fun <= 1e-7 * big:
                out.append(float(res.x))
    out.sort()
    keep = []
    for x in out:
        if not keep or x - keep[-1] > 1e-10:
            keep.append(x)
    return keep


def _outer_angles(circle: Callable, m: int, spec: QuadratureSpec, splits: Callable | None = None,
                  inner: _Inner | None = None):
    """Nested integration over the polar angles of ``S^{m-1}``.

    Angle ``psi_j`` (``j = 0 .. m-3``) carries the weight ``sin(psi_j)^(m-2-j)``.
    The innermost polar angle is split at ``splits(prefix)`` and integrated
    with tanh-sinh on each panel, which absorbs the endpoint singularities of
    the circle integral; outer polar angles (``m >= 4``) use adaptive
    Gauss-Kronrod.
    """
    errs = []
    outer_rtol = spec.rel_tol

    def level(prefix):
        j = len(prefix)
        if j == m - 2:
            v, e = circle(np.asarray(prefix, dtype=float))
            errs.append(np.max(np.abs(e)))
            return np.atleast_1d(np.asarray(v, dtype=complex))

        weight = m - 2 - j
        if j == m - 3 and splits is not None:
            edges = [0.0] + list(splits(np.asarray(prefix, dtype=float))) + [math.pi]

            def f(psi, da, db):
                cols = []
                for p, d in zip(psi, np.minimum(da, db)):
                    if inner is not None:
                        inner.outer_dist = d
                    cols.append(math.sin(p) ** weight * level(prefix + [p]))
                if inner is not None:
                    inner.outer_dist = None
                return np.stack(cols, axis=-1)

            total, err = 0.0, 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                res = tanh_sinh_batch(f, a, b, rel_tol=outer_rtol, abs_tol=spec.abs_tol,
                                      min_level=2, max_level=spec.max_level, t_max=3.5,
                                      complement=True)
                total = total + res.value
                err = err + np.max(res.error)
            errs.append(float(err))
            return total

        def f(psi):
            return math.sin(psi) ** weight * level(prefix + [psi])

        v, e = quad_vec(f, 0.0, math.pi, epsrel=spec.rel_tol, epsabs=spec.abs_tol,
                        limit=spec.max_panels * 4)
        errs.append(float(np.max(np.abs(e))))
        return v

    val = level([])
    return val, float(np.max(errs)) if errs else 0.0


# ---------------------------------------------------------------------------
# public evaluation

def _formula(Q: QuadricForm, q: int, spec: QuadratureSpec) -> Formula:
    if Q.m == 1:
        sampler = SphereSampler(refine=False, zero_tol=spec.zero_tol)
    else:
        sampler = SphereSampler(n_points=spec.scan_points if Q.m == 2 else 1024, refine=False,
                                zero_tol=spec.zero_tol)
    from .classifier import sample_signatures
    sample = sample_signatures(Q, sampler)
    for L in multi_indices(Q.n, q):
        if gamma_report(Q, L, sample=sample).nonempty_positive_measure:
            return Formula.N_WITH_SZEGO
    return Formula.N_NO_SZEGO


def _evaluate(Q: QuadricForm, P: EvalPoint, spec: QuadratureSpec, kind: str) -> FormCoefficients:
    P.check(Q)
    if kind == "green" and not np.any(P.z):
        raise DomainError("the radial integrals diverge at z = 0; the kernel has no pointwise "
                          "value on the centre of the group")
    if kind == "szego" and not np.any(P.z) and Q.m > 2:
        raise DomainError("Szego kernel at z = 0 is only supported for m <= 2")
    job = _Job(Q, P.z, P.t, P.q, P.K, kind, spec)
    inner = _Inner()
    rule = spec.rule_for(Q.m)
    if rule is SphereRule.TWO_POINT:
        if Q.m != 1:
            raise ValueError("the two-point rule needs m = 1")
        total = np.zeros(len(job.Ls), dtype=complex)
        for a in (1.0, -1.0):
            alpha = np.array([a])
            signs = _signs_at(Q, alpha, spec.zero_tol)
            if kind == "szego":
                if not np.any(P.z) and P.t[0] == 0:
                    raise DomainError("Szego kernel at the origin")
            total += _slice_values(job, alpha[None, :], signs, inner)[0]
        value, error, ok = total, np.full(total.shape, inner.error), True
    elif rule is SphereRule.ADAPTIVE_ANGLES:
        if Q.m != 2:
            raise ValueError("the angular rule needs m = 2")
        value, error, ok = _integrate_circle(job, _circle_map(np.zeros(0), 2), inner)
        error = error + inner.error
    else:
        if Q.m < 3:
            raise ValueError("the product spherical rule needs m >= 3")
        oks = []

        def circle(prefix):
            v, e, k = _integrate_circle(job, _circle_map(prefix, Q.m), inner)
            oks.append(k)
            return v, e

        value, err = _outer_angles(circle, Q.m, spec,
                                   lambda prefix: outer_breakpoints(Q, prefix, spec), inner)
        error = np.full(np.shape(value), err + inner.error)
        ok = all(oks)
    ok = ok and not inner.failed
    if kind == "szego":
        formula = Formula.SZEGO
    else:
        formula = _formula(Q, P.q, spec)
    value = np.broadcast_to(np.asarray(value, dtype=complex), (len(job.Ls),))
    error = np.broadcast_to(np.asarray(error, dtype=float), (len(job.Ls),))
    coeffs = {Kp: complex(v) for Kp, v in zip(job.Ls, value)}
    errs = {Kp: float(e) for Kp, e in zip(job.Ls, error)}
    return FormCoefficients(coeffs, errs, formula, ok)


def eval_green(Q: QuadricForm, P: EvalPoint, spec: QuadratureSpec = QuadratureSpec(),
               strict: bool = False) -> FormCoefficients:
    """Fundamental solution (or canonical relative fundamental solution) on ``dzbar^K``.

    The cone-restricted subtraction is applied exactly on the panels lying in
    the cone for the relevant ``L``; where no cone has positive measure this
    is the plain fundamental solution.  ``strict`` turns a missed tolerance
    into a :class:`ToleranceError`.
    """
    out = _evaluate(Q, P, spec, "green")
    if strict and not out.converged:
        raise ToleranceError("eval_green: tolerance not met", out.coeffs, out.abs_error)
    return out


def eval_szego(Q: QuadricForm, P: EvalPoint, spec: QuadratureSpec = QuadratureSpec(),
               strict: bool = False) -> FormCoefficients:
    """Projection onto the kernel of the Kohn Laplacian applied to ``dzbar^K``."""
    out = _evaluate(Q, P, spec, "szego")
    if strict and not out.converged:
        raise ToleranceError("eval_szego: tolerance not met", out.coeffs, out.abs_error)
    return out


def eval_batch(Q: QuadricForm, points: Sequence[EvalPoint], spec: QuadratureSpec = QuadratureSpec(),
               kind: str = "green", threads: int | None = None) -> list:
    """Evaluate many points; results come back in input order."""
    fn = {"green": eval_green, "szego": eval_szego}[kind]
    if threads is None or threads <= 1 or len(points) < 2:
        return [fn(Q, P, spec) for P in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda P: fn(Q, P, spec), points))


# ---------------------------------------------------------------------------
# single directions

def alpha_slice(Q: QuadricForm, L: Sequence[int], z, t, alpha,
                spec: QuadratureSpec = QuadratureSpec()):
    """Contribution of one direction and one ``L`` to the scalar kernel.

    This is the constant times the radial integral, with the cone subtraction
    when ``alpha`` lies in the cone for ``L``; no basis weights are applied.
    Returns ``(value, error)``.
    """
    L = multi_index(L, Q.n)
    alpha = np.asarray(alpha, dtype=float)
    alpha = alpha / np.linalg.norm(alpha)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if not np.any(z):
        raise DomainError("radial integral diverges at z = 0")
    S = spectral(Q, alpha, spec.zero_tol)
    abs_mu, eps, gamma = sign_pattern(S, L)
    rows = _Rows(abs_mu[None, :], np.abs(z @ S.U.conj())[None, :] ** 2,
                 np.array([alpha @ np.atleast_1d(np.asarray(t, dtype=float))]))
    res = _green_radial(rows, eps, gamma, Q.n, Q.m, spec.rel_tol, spec.max_level)
    if not np.all(res.converged):
        raise ToleranceError("alpha_slice: radial integral did not converge", res.value, res.error)
    c = green_constant(Q.n, Q.m)
    return complex(c * res.value[0]), float(c * res.error[0])


def n_transform_radial(Q: QuadricForm, L: Sequence[int], z_alpha, lam,
                       spec: QuadratureSpec = QuadratureSpec()):
    """Transformed relative fundamental solution at ``lam`` from the radial form.

    Uses ``r = exp(-2 s |lam|)`` in the heat-time integral: with ``u = -log r``
    the integrand is ``u^-n prod_j[phi(y_j) e^(-(1-eps_j) y_j/2)] e^(-|lam| A(u)/u)``
    up to a constant, minus the cone term.  Returns ``(value, error)``.
    """
    L = multi_index(L, Q.n)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    tau = float(np.linalg.norm(lam))
    S = spectral(Q, lam / tau, spec.zero_tol)
    abs_mu, eps, gamma = sign_pattern(S, L)
    rho = np.abs(np.atleast_1d(np.asarray(z_alpha, dtype=complex))) ** 2
    if not np.any(rho):
        raise DomainError("radial integral diverges at z = 0")
    n, m = Q.n, Q.m
    A0 = float(np.sum(abs_mu * rho))
    pm = float(np.prod(abs_mu))

    def f(u):
        y = abs_mu[:, None] * u[None, :]
        if gamma:
            with np.errstate(over="ignore"):
                delta = np.sum(abs_mu[:, None] * 2.0 * rho[:, None] / np.expm1(y), axis=0)
            g = -np.sum(log_one_minus_exp(y), axis=0) - tau * delta
            return pm * math.exp(-tau * A0) * np.expm1(g)
        logP = np.sum(np.log(phi_ratio(y)) - 0.5 * (1.0 - eps[:, None]) * y, axis=0)
        Ahat = 2.0 * np.sum(x_coth_x(0.5 * y) * rho[:, None], axis=0)
        return np.exp(logP - n * np.log(u) - tau * Ahat / u)

    top = float(np.max(abs_mu)) if np.any(abs_mu) else 1.0
    res = exp_sinh_batch(f, rel_tol=spec.rel_tol, max_level=spec.max_level, scale=1.0 / top)
    if not np.all(res.converged):
        raise ToleranceError("n_transform_radial did not converge", res.value, res.error)
    c = 4.0 ** n * tau ** (n - 1) / (2.0 * TWO_PI ** (0.5 * m + n))
    return float(c * res.value), float(c * res.error)


def fit_power_law_constant(values: Sequence[complex], z_list, t_list):
    """Fit ``N = C (|z|^4 + |t|^2)^(-3/2)``; returns ``(C, relative_spread)``.

    ``C`` is the mean of ``N (|z|^4 + |t|^2)^(3/2)`` over the points and the
    spread is ``(max - min) / |C|`` of those products.
    """
    prods = []
    for v, z, t in zip(values, z_list, t_list):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        prods.append(complex(v) * (float(np.sum(np.abs(z) ** 2)) ** 2 + float(t @ t)) ** 1.5)
    prods = np.array(prods)
    C = prods.mean()
    spread = float((np.max(prods.real) - np.min(prods.real)) / abs(C)) + \
        float((np.max(prods.imag) - np.min(prods.imag)) / abs(C))
    return C, spread
