"""Preset quadrics and closed-form kernels used as independent oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ToleranceError
from .levi import QuadricForm
from .quadrature import exp_sinh_batch, tanh_sinh_batch

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class Preset:
    name: str
    quadric: QuadricForm


def heisenberg(n: int) -> QuadricForm:
    """``Im w = |z|^2`` in C^n x C."""
    if n < 1:
        raise ConfigError("Heisenberg dimension must be >= 1")
    return QuadricForm((np.eye(n),), name=f"heisenberg:{n}")


def product_heisenberg(*dims: int) -> QuadricForm:
    """``Im w_k = |z^(k)|^2`` for consecutive coordinate blocks of sizes ``dims``."""
    if not dims or any(d < 1 for d in dims):
        raise ConfigError("product-heisenberg needs positive block sizes")
    n = sum(dims)
    mats = []
    start = 0
    for d in dims:
        a = np.zeros((n, n))
        a[start:start + d, start:start + d] = np.eye(d)
        mats.append(a)
        start += d
    return QuadricForm(tuple(mats), name="product-heisenberg:" + ",".join(map(str, dims)))


def m1() -> QuadricForm:
    return QuadricForm((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), name="M1")


def m2() -> QuadricForm:
    return QuadricForm((_SIGMA_X, np.diag([1.0, -1.0])), name="M2")


def m3() -> QuadricForm:
    return QuadricForm((np.diag([2.0, 0.0]), _SIGMA_X), name="M3")


def preset(spec: str) -> Preset:
    """Parse ``M1 | M2 | M3 | heisenberg:N | product-heisenberg:N1,N2,...``."""
    key = spec.strip()
    try:
        if key in ("M1", "M2", "M3"):
            q = {"M1": m1, "M2": m2, "M3": m3}[key]()
        elif key.lower().startswith("heisenberg:"):
            q = heisenberg(int(key.split(":", 1)[1]))
        elif key.lower().startswith("product-heisenberg:"):
            q = product_heisenberg(*(int(v) for v in key.split(":", 1)[1].split(",")))
        else:
            raise ConfigError(f"unknown preset {spec!r}")
    except ValueError as exc:
        raise ConfigError(f"bad preset {spec!r}: {exc}") from None
    return Preset(q.name, q)


def _check_point(z, t):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not np.any(z) and not np.any(t):
        raise DomainError("kernel evaluated at the group identity (z, t) = (0, 0)")
    return z, t


def heisenberg_N(n: int, top: bool, z, t) -> complex:
    """Relative fundamental solution on the Heisenberg group.

    ``top=False`` is the kernel on functions, ``top=True`` the one on
    ``(0, n)``-forms.  The logarithm of the ratio is taken as a difference of
    principal logarithms.
    """
    z, t = _check_point(z, t)
    if z.size != n or t.size != 1:
        raise ValueError(f"expected z in C^{n} and scalar t")
    r2 = float(np.sum(np.abs(z) ** 2))
    tt = float(t[0])
    w = complex(r2, tt) if not top else complex(r2, -tt)
    harmonic = sum(1.0 / j for j in range(1, n))
    c = 2.0 ** (n - 2) * math.factorial(n - 1) / math.pi ** (n + 1)
    logratio = np.log(w) - np.log(w.conjugate())
    return complex(c / w ** n * (logratio - harmonic))


def heisenberg_szego(n: int, z, t) -> complex:
    """Szego kernel of the Heisenberg group on functions."""
    z, t = _check_point(z, t)
    w = complex(float(np.sum(np.abs(z) ** 2)), float(t[0]))
    return 2.0 ** (n - 1) * math.factorial(n) / math.pi ** (n + 1) / w ** (n + 1)


def m2_power_law(z, t, C: float) -> float:
    """``C (|z|^4 + |t|^2)^(-3/2)``."""
    z, t = _check_point(z, t)
    return C * (float(np.sum(np.abs(z) ** 2)) ** 2 + float(np.sum(t * t))) ** -1.5


def product_heisenberg_szego(z, t) -> complex:
    """Szego kernel on functions of the product of two copies of H^1."""
    z, t = _check_point(z, t)
    for j in range(2):
        if z[j] == 0 and t[j] == 0:
            raise DomainError(f"factor {j + 1} is at its origin")
    w1 = complex(abs(z[0]) ** 2, t[0])
    w2 = complex(abs(z[1]) ** 2, t[1])
    return 1.0 / (math.pi ** 4 * w1 ** 2 * w2 ** 2)


# The displayed prefactor of the M3 double-integral formula is 2(2 pi)^-4; the
# change of variables from the angular form gives 4(2 pi)^-4 (Jacobian
# 16 sigma_2/sigma_1^3 dtheta = 4 sqrt(sigma)(1+sigma) dsigma).
M3_DISPLAYED_PREFACTOR = 2.0 / (2 * math.pi) ** 4
M3_PREFACTOR = 4.0 / (2 * math.pi) ** 4


def _m3_integrand(z, t, sign):
    z1, z2 = complex(z[0]), complex(z[1])
    t1, t2 = float(t[0]), float(t[1])

    def g(x, dx0, dx1, sig):
        # x in (0,1) along the last axis, sig along the first
        sig = sig[:, None]
        sq = np.sqrt(sig)
        norm = np.sqrt(1.0 + sig)
        if sign > 0:
            w1 = (z1 + sq * z2) / norm
            w2 = -(sq * z1 - z2) / norm
        else:
            w1 = (-z1 + sq * z2) / norm
            w2 = -(sq * z1 + z2) / norm
        one_minus_x = dx1[None, :]
        logx = np.where(x > 0.5, np.log1p(-np.minimum(dx1, 0.5)), np.log(np.maximum(x, 1e-300)))[None, :]
        xs = np.exp(sig * logx)
        one_minus_xs = -np.expm1(sig * logx)
        e1 = (1.0 + x[None, :]) / one_minus_x
        e2 = (1.0 + xs) / one_minus_xs
        D = (-1j * (t1 * (1.0 - sig) / 2.0 + sign * t2 * sq)
             + e1 * np.abs(w1) ** 2 + sig * e2 * np.abs(w2) ** 2)
        return sq * (sig + 1.0) / (one_minus_x * one_minus_xs) / D ** 3

    return g


def m3_corollary(z, t, rel_tol: float = 1e-9, prefactor: float = M3_PREFACTOR,
                 max_level: int = 9) -> complex:
    """Kernel on functions for M3 via its (sigma, x) double-integral representation.

    The sigma-integral over (0, inf) uses exp-sinh; the inner x-integral over
    (0, 1) uses tanh-sinh with exact distances to x = 1.  The two terms
    correspond to the upper and lower half of the circle of directions.
    """
    z, t = _check_point(z, t)
    if z.size != 2 or t.size != 2:
        raise ValueError("M3 points live in C^2 x R^2")
    total = 0j
    for sign in (+1, -1):
        inner = _m3_integrand(z, t, sign)

        def outer(sig):
            res = tanh_sinh_batch(lambda x, da, db: inner(x, da, db, sig), 0.0, 1.0,
                                  rel_tol=rel_tol * 0.1, max_level=max_level, complement=True)
            # rows far out in sigma carry negligible mass once weighted by sigma
            ok = res.converged | (res.error * (1.0 + sig) <= rel_tol * 1e-6)
            if not np.all(ok):
                raise ToleranceError("m3_corollary: inner x-integral did not converge",
                                     res.value, res.error)
            return res.value

        res = exp_sinh_batch(outer, rel_tol=rel_tol, max_level=max_level)
        if not np.all(res.converged):
            raise ToleranceError("m3_corollary: sigma-integral did not converge", res.value, res.error)
        total += complex(res.value)
    return prefactor * total
