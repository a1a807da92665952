"""Double-exponential quadrature rules.

Two rules are provided, both driven by the same level-doubling loop:

* tanh-sinh on a finite interval ``(a, b)``; endpoints are never evaluated and
  integrand singularities of algebraic or logarithmic type at either end are
  absorbed by the double-exponential clustering of the nodes;
* exp-sinh on ``(0, inf)``.

At level ``k`` the step in the auxiliary variable is ``h = 2**-k`` and only the
new (odd) nodes are evaluated.  The error estimate is the difference between
successive levels, which is pessimistic once the rule has entered its
quadratically convergent regime.

Integrands are vectorised: they receive a 1-D array of abscissae and return an
array whose *last* axis runs over those abscissae.  Leading axes are carried
through, which lets one call integrate a whole batch of related integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ToleranceError

HALF_PI = 0.5 * math.pi


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    converged: np.ndarray
    level: int
    n_evals: int


def _level_nodes(level: int, t_lo: float, t_hi: float) -> tuple[np.ndarray, float]:
    if level == 0:
        return np.arange(math.ceil(t_lo), math.floor(t_hi) + 1, dtype=float), 1.0
    h = 2.0 ** -level
    j_lo = math.ceil((t_lo / h - 1) / 2)
    j_hi = math.floor((t_hi / h - 1) / 2)
    return (2 * np.arange(j_lo, j_hi + 1) + 1) * h, h


def _tanh_sinh_map(t: np.ndarray, a: float, b: float, complement: bool = False):
    """Abscissae, Jacobian weights and endpoint distances for tanh-sinh on (a, b).

    Nodes that round onto an endpoint are dropped unless ``complement`` is set,
    in which case the integrand works from the exact distances instead.
    """
    half = 0.5 * (b - a)
    y = HALF_PI * np.sinh(t)
    ay = np.abs(y)
    with np.errstate(over="ignore"):
        c = 2.0 / (1.0 + np.exp(2.0 * ay))  # 1 - tanh|y|, accurate for large |y|
    near = half * c
    da = np.where(t < 0, near, 2 * half - near)
    db = np.where(t < 0, 2 * half - near, near)
    x = np.where(t < 0, a + near, b - near)
    w = half * HALF_PI * np.cosh(t) * c * (2.0 - c)
    keep = (c > 0) & (da > 0) & (db > 0)
    if not complement:
        keep &= (x > a) & (x < b)
    return x[keep], w[keep], da[keep], db[keep]


def _exp_sinh_map(t: np.ndarray, scale: float):
    x = scale * np.exp(HALF_PI * np.sinh(t))
    w = x * HALF_PI * np.cosh(t)
    keep = np.isfinite(x) & np.isfinite(w) & (x > 0)
    return x[keep], w[keep]


def _drive(evaluate, t_lo, t_hi, rel_tol, abs_tol, min_level, max_level) -> QuadResult:
    running = None
    prev = None
    n_evals = 0
    err = None
    conv = None
    for level in range(max_level + 1):
        t, h = _level_nodes(level, t_lo, t_hi)
        contrib, n = evaluate(t)
        n_evals += n
        running = contrib if running is None else running + contrib
        est = h * running
        if prev is not None:
            err = np.abs(est - prev)
            conv = err <= np.maximum(abs_tol, rel_tol * np.abs(est))
            if level >= min_level and np.all(conv):
                return QuadResult(est, err, conv, level, n_evals)
        prev = est
    return QuadResult(est, err, conv, max_level, n_evals)


def tanh_sinh_batch(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-300,
    min_level: int = 3,
    max_level: int = 10,
    t_max: float = 4.5,
    complement: bool = False,
) -> QuadResult:
    """Level-adaptive tanh-sinh on ``(a, b)`` for a batch of integrands.

    With ``complement=True`` the integrand is called as ``f(x, x - a, b - x)``
    where the two distances are computed without cancellation, which matters
    for singularities at ``b``.
    """
    if not b > a:
        raise ValueError("tanh_sinh requires a < b")

    def evaluate(t):
        x, w, da, db = _tanh_sinh_map(t, a, b, complement)
        vals = f(x, da, db) if complement else f(x)
        return np.sum(np.asarray(vals) * w, axis=-1), x.size

    return _drive(evaluate, -t_max, t_max, rel_tol, abs_tol, min_level, max_level)


def exp_sinh_batch(
    f: Callable,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-300,
    min_level: int = 3,
    max_level: int = 10,
    t_lo: float = -5.0,
    t_hi: float = 5.0,
    scale: float = 1.0,
) -> QuadResult:
    """Level-adaptive exp-sinh on ``(0, inf)``: ``x = scale * exp(pi/2 sinh t)``."""

    def evaluate(t):
        x, w = _exp_sinh_map(t, scale)
        return np.sum(np.asarray(f(x)) * w, axis=-1), x.size

    return _drive(evaluate, t_lo, t_hi, rel_tol, abs_tol, min_level, max_level)


def exp_sinh_rule(level: int, scale: float = 1.0, t_lo: float = -5.0, t_hi: float = 5.0):
    """Nodes and weights (step included) of the full exp-sinh rule at ``level``."""
    h = 2.0 ** -level
    t = np.arange(math.ceil(t_lo / h), math.floor(t_hi / h) + 1) * h
    x, w = _exp_sinh_map(t, scale)
    return x, w * h


def _finish(res: QuadResult, what: str, raise_on_fail: bool):
    value = res.value[()] if np.ndim(res.value) == 0 else res.value
    error = res.error[()] if np.ndim(res.error) == 0 else res.error
    if raise_on_fail and not np.all(res.converged):
        raise ToleranceError(
            f"{what}: level budget exhausted at level {res.level}", value, error
        )
    return value, error


def tanh_sinh(f, a, b, rel_tol=1e-12, abs_tol=1e-300, max_level=10,
              complement=False, raise_on_fail=True):
    """Integrate ``f`` over ``(a, b)``; returns ``(value, error_estimate)``."""
    res = tanh_sinh_batch(f, a, b, rel_tol=rel_tol, abs_tol=abs_tol,
                          max_level=max_level, complement=complement)
    return _finish(res, "tanh_sinh", raise_on_fail)


def exp_sinh(f, rel_tol=1e-12, abs_tol=1e-300, max_level=10, scale=1.0,
             raise_on_fail=True):
    """Integrate ``f`` over ``(0, inf)``; returns ``(value, error_estimate)``."""
    res = exp_sinh_batch(f, rel_tol=rel_tol, abs_tol=abs_tol,
                         max_level=max_level, scale=scale)
    return _finish(res, "exp_sinh", raise_on_fail)


def periodic_trapezoid(f, period=2 * math.pi, offset=0.0, n0=16, rel_tol=1e-12,
                       abs_tol=1e-300, max_doublings=10) -> QuadResult:
    """Trapezoid rule for a smooth periodic integrand, doubling until stable.

    Converges geometrically for analytic periodic integrands.  ``f`` receives
    angles and returns an array with the angle axis last.
    """
    n = n0
    x = offset + period * np.arange(n) / n
    running = np.sum(np.asarray(f(x)), axis=-1)
    prev = period * running / n
    n_evals = n
    err = np.full(np.shape(prev), np.inf)
    conv = np.zeros(np.shape(prev), dtype=bool)
    for _ in range(max_doublings):
        x = offset + period * (np.arange(n) + 0.5) / n
        running = running + np.sum(np.asarray(f(x)), axis=-1)
        n_evals += n
        n *= 2
        est = period * running / n
        err = np.abs(est - prev)
        conv = err <= np.maximum(abs_tol, rel_tol * np.abs(est))
        if np.all(conv):
            return QuadResult(est, err, conv, n, n_evals)
        prev = est
    return QuadResult(prev, err, conv, n, n_evals)
