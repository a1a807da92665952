"""Quick self-checks against closed forms and structural identities.

Each check returns a :class:`Check` with the worst observed metric and the
tolerance it is held to.  The full-size versions live in the test suite;
these are sized to finish in well under a minute together.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classifier import SphereSampler, classify_degree, sample_signatures, signature_set
from .closed_forms import (heisenberg, heisenberg_N, m1, m2, m3, m3_corollary,
                           product_heisenberg_szego)
from .green import (EvalPoint, QuadratureSpec, alpha_slice, eval_green, eval_szego,
                    fit_power_law_constant)
from .heat import (GridSpec, box_transformed_residual, heat_alpha_slice, heat_mass,
                   mass_closed_form)
from .levi import QuadricForm, basis_weights, multi_indices, spectral_batch, assemble_directional


@dataclass
class Check:
    name: str
    passed: bool
    metric: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""


def random_quadric(rng: np.random.Generator, n: int, m: int) -> QuadricForm:
    """``m`` independent Hermitian matrices with standard complex Gaussian entries."""
    mats = []
    for _ in range(m):
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        mats.append(0.5 * (X + X.conj().T))
    return QuadricForm(tuple(mats), name=f"random:{n},{m}")


def _rel(a, b) -> float:
    return float(abs(a - b) / abs(b))


def check_heisenberg(rng, n_points=3) -> Check:
    worst = 0.0
    for n in (1, 2):
        Q = heisenberg(n)
        for _ in range(n_points):
            z = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
            t = rng.uniform(-1.5, 1.5, 1)
            v = eval_green(Q, EvalPoint(z, t), QuadratureSpec(rel_tol=1e-9)).scalar
            worst = max(worst, _rel(v, heisenberg_N(n, False, z, t)))
    return Check("heisenberg_closed_form", worst <= 1e-6, worst, 1e-6)


def check_m2_power_law(rng, n_points=4) -> Check:
    pts = [(rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
           for _ in range(n_points)]
    vals = [eval_green(m2(), EvalPoint(z, t), QuadratureSpec(rel_tol=1e-8)).scalar for z, t in pts]
    C, spread = fit_power_law_constant(vals, [p[0] for p in pts], [p[1] for p in pts])
    return Check("m2_power_law", spread <= 1e-4, spread, 1e-4, detail=f"C={float(C.real)!r}")


def check_product_szego(rng, n_points=4) -> Check:
    worst = 0.0
    for _ in range(n_points):
        z = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
        t = rng.uniform(-1, 1, 2)
        v = eval_szego(m1(), EvalPoint(z, t), QuadratureSpec(rel_tol=1e-10)).scalar
        worst = max(worst, _rel(v, product_heisenberg_szego(z, t)))
    return Check("product_szego", worst <= 1e-8, worst, 1e-8)


def check_m3(rng, n_points=1) -> Check:
    worst = 0.0
    for _ in range(n_points):
        z = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
        t = rng.uniform(-1, 1, 2)
        v = eval_green(m3(), EvalPoint(z, t), QuadratureSpec(rel_tol=1e-7)).scalar
        worst = max(worst, _rel(v, m3_corollary(z, t, rel_tol=1e-9)))
    return Check("m3_cross_parameterization", worst <= 1e-5, worst, 1e-5)


def check_classification(rng=None) -> Check:
    expected = {
        "M1": ({(0, 1), (0, 2), (1, 0), (1, 1), (2, 0)}, [(False, False)] * 3),
        "M2": ({(1, 1)}, [(True, True), (False, False), (True, True)]),
        "M3": ({(0, 1), (1, 0), (1, 1)}, [(True, False), (False, False), (True, False)]),
    }
    bad = []
    for name, Q in (("M1", m1()), ("M2", m2()), ("M3", m3())):
        sample = sample_signatures(Q, SphereSampler())
        sigs, table = expected[name]
        if signature_set(Q, SphereSampler()) != sigs:
            bad.append(name)
        for q in range(3):
            c = classify_degree(Q, q, sample=sample)
            if (c.solvable, c.hypoelliptic) != table[q]:
                bad.append(f"{name}:q={q}")
    return Check("classification_table", not bad, float(len(bad)), 0.0, detail="|".join(bad))


def check_heat_residual(rng=None) -> Check:
    worst, worst_ratio = 0.0, math.inf
    for lam in ([1.0], [-0.7]):
        r1 = box_transformed_residual(heisenberg(1), (), lam, GridSpec(h=1e-3), [0.5])
        r2 = box_transformed_residual(heisenberg(1), (), lam, GridSpec(h=5e-4), [0.5])
        worst, worst_ratio = max(worst, r1), min(worst_ratio, r1 / r2)
    ok = worst <= 5e-5 and worst_ratio >= 3.5
    return Check("heat_pde_residual", ok, worst, 5e-5, detail=f"ratio={worst_ratio!r}")


def check_bridge(rng, n_points=2) -> Check:
    Q = heisenberg(2)
    worst = 0.0
    for _ in range(n_points):
        z = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
        t = rng.uniform(-1, 1, 1)
        a, _ = heat_alpha_slice(Q, (1,), z, t, [1.0])
        b, _ = alpha_slice(Q, (1,), z, t, [1.0], QuadratureSpec(rel_tol=1e-11))
        worst = max(worst, _rel(a, b))
    return Check("heat_green_bridge", worst <= 1e-8, worst, 1e-8)


def check_mass(rng, n_samples=5) -> Check:
    worst = 0.0
    for _ in range(n_samples):
        n, m = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        Q = random_quadric(rng, n, m)
        L = tuple(int(j) + 1 for j in np.flatnonzero(rng.random(n) < 0.5))
        s = float(rng.uniform(0.2, 1.5))
        lam = rng.normal(size=m)
        v, _ = heat_mass(Q, L, s, lam)
        worst = max(worst, _rel(v, mass_closed_form(Q, L, s, lam)))
    return Check("mass_identity", worst <= 1e-8, worst, 1e-8)


def check_homogeneity(rng=None) -> Check:
    worst = 0.0
    spec = QuadratureSpec(rel_tol=1e-9)
    for Q, z, t in ((heisenberg(1), [0.6 + 0.3j], [0.4]),
                    (m2(), [0.5 + 0.1j, -0.2 + 0.4j], [0.3, -0.2])):
        z, t = np.asarray(z), np.asarray(t)
        k = Q.n + Q.m - 1
        base = eval_green(Q, EvalPoint(z, t), spec).scalar
        for d in (0.5, 2.0):
            v = eval_green(Q, EvalPoint(d * z, d * d * t), spec).scalar
            worst = max(worst, _rel(v, d ** (-2 * k) * base))
    return Check("homogeneity", worst <= 1e-7, worst, 1e-7)


def check_linear_algebra(rng, n_samples=200) -> Check:
    worst = 0.0
    for _ in range(n_samples):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        Q = random_quadric(rng, n, m)
        alpha = rng.normal(size=(1, m))
        alpha /= np.linalg.norm(alpha)
        mu, U, scale = spectral_batch(Q, alpha)
        U, mu = U[0], mu[0]
        A = assemble_directional(Q, alpha[0])
        worst = max(worst, float(np.max(np.abs(U.conj().T @ U - np.eye(n)))))
        worst = max(worst, float(np.max(np.abs(U.conj().T @ A @ U - np.diag(mu)))) / scale[0])
        for q in range(n + 1):
            for K in multi_indices(n, q):
                W = basis_weights(U, K, q)
                eye = np.zeros(W.shape[-1])
                eye[multi_indices(n, q).index(K)] = 1.0
                worst = max(worst, float(np.max(np.abs(W.sum(axis=0) - eye))))
    return Check("linear_algebra_invariants", worst <= 1e-10, worst, 1e-10)


SUITE: dict[str, Callable] = {
    "heisenberg": check_heisenberg,
    "m2": check_m2_power_law,
    "product_szego": check_product_szego,
    "m3": check_m3,
    "classification": check_classification,
    "heat_residual": check_heat_residual,
    "bridge": check_bridge,
    "mass": check_mass,
    "homogeneity": check_homogeneity,
    "linear_algebra": check_linear_algebra,
}


def run_suite(names="all", seed: int = 0) -> list:
    """Run the named checks (or all) with a seeded generator; returns :class:`Check` records."""
    if names == "all":
        names = list(SUITE)
    unknown = [k for k in names if k not in SUITE]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; available: {sorted(SUITE)}")
    out = []
    for k in names:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        c = SUITE[k](rng)
        c.seconds = time.perf_counter() - t0
        out.append(c)
    return out
