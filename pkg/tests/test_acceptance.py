"""Acceptance criteria, one test per criterion.

Each test records a single pass/fail line; they are repeated in the
"acceptance criteria" section of the pytest terminal summary.
"""

import itertools
import math
import time

import numpy as np
import pytest

from quadric_kohn import (EvalPoint, GridSpec, QuadratureSpec, SphereSampler, alpha_slice,
                          box_transformed_residual, classify_degree, eval_green, eval_szego,
                          fit_power_law_constant, heat_alpha_slice, heat_mass, heisenberg,
                          heisenberg_N, m1, m2, m3, m3_corollary, mass_closed_form,
                          n_transform_from_heat, n_transform_radial, preset,
                          product_heisenberg_szego, sample_signatures, signature_set,
                          spectral_batch)
from quadric_kohn.levi import assemble_directional, basis_weights, multi_indices
from quadric_kohn.verify import random_quadric


def _point(rng, n, m, r_lo=0.2, r_hi=2.0, t_max=2.0):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    z = v / np.linalg.norm(v) * rng.uniform(r_lo, r_hi)
    return z, rng.uniform(-t_max, t_max, m)


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_01_heisenberg_closed_form(rng, record):
    spec = QuadratureSpec(rel_tol=1e-8)
    worst = 0.0
    t0 = time.perf_counter()
    for n in (1, 2, 3):
        Q = heisenberg(n)
        for _ in range(10):
            z, t = _point(rng, n, 1)
            v = eval_green(Q, EvalPoint(z, t), spec, strict=True).scalar
            worst = max(worst, _rel(v, heisenberg_N(n, False, z, t)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt <= 10.0
    record(1, ok, f"Heisenberg n=1..3, 30 points: max rel err {worst:.2e} (tol 1e-6), {dt:.1f} s (limit 10 s)")
    assert ok


def test_criterion_02_m2_power_law(rng, record):
    spec = QuadratureSpec(rel_tol=1e-9)
    pts = [_point(rng, 2, 2, 0.2, 2.0, 2.0) for _ in range(12)]
    t0 = time.perf_counter()
    res = [eval_green(m2(), EvalPoint(z, t), spec, strict=True) for z, t in pts]
    dt = time.perf_counter() - t0
    vals = [r.scalar for r in res]
    C, spread = fit_power_law_constant(vals, [p[0] for p in pts], [p[1] for p in pts])
    # quadrature error of each product N * (|z|^4 + |t|^2)^(3/2)
    c_err = max(r.abs_error[()] * (np.sum(np.abs(z) ** 2) ** 2 + t @ t) ** 1.5
                for r, (z, t) in zip(res, pts))
    ok = spread <= 1e-4 and dt <= 60.0
    record(2, ok, f"M2 power law, 12 points: spread {spread:.2e} (tol 1e-4), "
                  f"C = {C.real:.15g} +- {c_err:.1e}, {dt:.1f} s (limit 60 s)")
    assert ok


def test_criterion_03_product_szego(rng, record):
    Q = preset("product-heisenberg:1,1").quadric
    spec = QuadratureSpec(rel_tol=1e-10)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(10):
        z, t = _point(rng, 2, 2)
        v = eval_szego(Q, EvalPoint(z, t), spec, strict=True).scalar
        worst = max(worst, _rel(v, product_heisenberg_szego(z, t)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt <= 5.0
    record(3, ok, f"product-Heisenberg Szego, 10 points: max rel err {worst:.2e} (tol 1e-8), "
                  f"{dt:.1f} s (limit 5 s)")
    assert ok


def test_criterion_04_m3_cross_parameterization(rng, record):
    spec = QuadratureSpec(rel_tol=1e-7)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(5):
        z, t = _point(rng, 2, 2, 0.3, 1.5, 1.5)
        v = eval_green(m3(), EvalPoint(z, t), spec, strict=True).scalar
        worst = max(worst, _rel(v, m3_corollary(z, t, rel_tol=1e-9)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-5 and dt <= 120.0
    record(4, ok, f"M3 generic formula vs double integral, 5 points: max rel err {worst:.2e} "
                  f"(tol 1e-5), {dt:.1f} s (limit 120 s)")
    assert ok


def test_criterion_05_classification_table(record):
    expected = {
        "M1": ({(2, 0), (1, 0), (1, 1), (0, 1), (0, 2)},
               {0: (False, False), 1: (False, False), 2: (False, False)}),
        "M2": ({(1, 1)}, {0: (True, True), 1: (False, False), 2: (True, True)}),
        "M3": ({(1, 0), (1, 1), (0, 1)}, {0: (True, False), 1: (False, False), 2: (True, False)}),
    }
    t0 = time.perf_counter()
    mismatches = []
    for name, (sigs, table) in expected.items():
        Q = preset(name).quadric
        sampler = SphereSampler()
        if signature_set(Q, sampler) != sigs:
            mismatches.append(f"{name} signatures")
        sample = sample_signatures(Q, sampler)
        for q, want in table.items():
            c = classify_degree(Q, q, sample=sample)
            if (c.solvable, c.hypoelliptic) != want:
                mismatches.append(f"{name} q={q}")
    dt = time.perf_counter() - t0
    ok = not mismatches and dt <= 5.0
    record(5, ok, f"classification table M1/M2/M3: {len(mismatches)} mismatches "
                  f"{mismatches or ''}, {dt:.1f} s (limit 5 s)")
    assert ok


def test_criterion_06_heat_pde_residual(record):
    worst, worst_ratio = 0.0, math.inf
    t0 = time.perf_counter()
    cases = [(heisenberg(1), [[1.0], [-1.0], [0.5], [-2.0]]),
             (m2(), [[math.cos(a), math.sin(a)] for a in 0.3 + 0.5 * math.pi * np.arange(4)])]
    for Q, lams in cases:
        for lam in lams:
            for L in ((), (1,)):
                for s in (0.25, 0.5, 1.0):
                    r1 = box_transformed_residual(Q, L, lam, GridSpec(h=1e-3), [s])
                    r2 = box_transformed_residual(Q, L, lam, GridSpec(h=5e-4), [s])
                    worst, worst_ratio = max(worst, r1), min(worst_ratio, r1 / r2)
    dt = time.perf_counter() - t0
    ok = worst <= 5e-5 and worst_ratio >= 3.5 and dt <= 60.0
    record(6, ok, f"heat PDE residual (H^1, M2; 3 times x 4 directions x 2 L): max {worst:.2e} "
                  f"at h=1e-3 (tol 5e-5), min ratio {worst_ratio:.3f} (>= 3.5), {dt:.1f} s")
    assert ok


def test_criterion_07_heat_green_bridge(rng, record):
    Q = heisenberg(2)
    spec = QuadratureSpec(rel_tol=1e-12)
    worst_lam, worst_alpha = 0.0, 0.0
    t0 = time.perf_counter()
    for _ in range(5):
        z, t = _point(rng, 2, 1, 0.2, 1.5, 1.5)
        lam = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 3.0)
        a, _ = n_transform_from_heat(Q, (1,), z, [lam])
        b, _ = n_transform_radial(Q, (1,), z, [lam], spec)
        worst_lam = max(worst_lam, _rel(a, b))
        a, _ = heat_alpha_slice(Q, (1,), z, t, [1.0])
        b, _ = alpha_slice(Q, (1,), z, t, [1.0], spec)
        worst_alpha = max(worst_alpha, _rel(a, b))
    dt = time.perf_counter() - t0
    worst = max(worst_lam, worst_alpha)
    ok = worst <= 1e-8 and dt <= 30.0
    record(7, ok, f"heat-to-Green bridge on H^2, L={{1}}, 5 points: per-lambda {worst_lam:.2e}, "
                  f"alpha slice {worst_alpha:.2e} (tol 1e-8), {dt:.1f} s (limit 30 s)")
    assert ok


def test_criterion_08_mass_identity(rng, record):
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(20):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        Q = random_quadric(rng, n, m)
        L = tuple(int(j) + 1 for j in np.flatnonzero(rng.random(n) < 0.5))
        s = float(rng.uniform(0.05, 3.0))
        lam = rng.normal(size=m) * rng.uniform(0.2, 3.0)
        v, _ = heat_mass(Q, L, s, lam)
        worst = max(worst, _rel(v, mass_closed_form(Q, L, s, lam)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt <= 60.0
    record(8, ok, f"mass identity, 20 random (Q, L, s, lambda), n <= 3: max rel err {worst:.2e} "
                  f"(tol 1e-8), {dt:.1f} s (limit 60 s)")
    assert ok


HOMOGENEITY_CASES = [
    ("M1", 0, (), 1e-9), ("M1", 1, (1,), 1e-9), ("M2", 0, (), 1e-9), ("M3", 0, (), 1e-7),
    ("heisenberg:1", 0, (), 1e-9), ("heisenberg:2", 0, (), 1e-9), ("heisenberg:3", 0, (), 1e-9),
    ("product-heisenberg:1,1", 0, (), 1e-9), ("product-heisenberg:1,1,1", 0, (), 1e-5),
]


def _homogeneity_error(Q, fn, k, z, t, q, K, spec, deltas):
    base = fn(Q, EvalPoint(z, t, q, K), spec, strict=True)
    worst = 0.0
    for d in deltas:
        v = fn(Q, EvalPoint(d * z, d * d * t, q, K), spec, strict=True)
        scale = d ** (-2 * k) * max(abs(c) for c in base.coeffs.values())
        for Kp, c in base.coeffs.items():
            err = abs(v.coeffs[Kp] - d ** (-2 * k) * c)
            # identically vanishing kernels (q = 0 Szego on M2, M3) must stay zero
            worst = max(worst, err / (scale * spec.rel_tol) if scale > 0 else err)
    return worst


def test_criterion_09_homogeneity(rng, record):
    worst, worst_generic = 0.0, 0.0
    t0 = time.perf_counter()
    labels = []
    for name, q, K, tol in HOMOGENEITY_CASES:
        Q = preset(name).quadric
        spec = QuadratureSpec(rel_tol=tol, scan_points=64 if Q.m > 2 else 512)
        z, t = _point(rng, Q.n, Q.m, 0.4, 1.2, 1.0)
        for fn, k in ((eval_green, Q.n + Q.m - 1), (eval_szego, Q.n + Q.m)):
            worst = max(worst, _homogeneity_error(Q, fn, k, z, t, q, K, spec, (0.5, 2.0)))
            # dyadic factors rescale every node exactly; 1.3 exercises the rounding
            if Q.m < 3 or fn is eval_szego:
                worst_generic = max(worst_generic,
                                    _homogeneity_error(Q, fn, k, z, t, q, K, spec, (1.3,)))
        labels.append(f"{name} q={q}")
    dt = time.perf_counter() - t0
    ok = worst <= 1.0 and worst_generic <= 1.0
    record(9, ok, f"homogeneity of N and S on {', '.join(labels)}: error / quadrature tol "
                  f"{worst:.2e} for delta in {{1/2, 2}}, {worst_generic:.2e} for delta = 1.3, {dt:.1f} s")
    assert ok


def _brute_minor(M, rows, cols):
    if not rows:
        return 1.0 + 0j
    return np.linalg.det(M[np.ix_(np.asarray(rows) - 1, np.asarray(cols) - 1)])


def test_criterion_10_linear_algebra_invariants(rng, record):
    worst = {"unitarity": 0.0, "diagonalization": 0.0, "cauchy_binet": 0.0, "duality": 0.0,
             "weights": 0.0}
    t0 = time.perf_counter()
    for _ in range(1000):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        Q = random_quadric(rng, n, m)
        alpha = rng.normal(size=(1, m))
        alpha /= np.linalg.norm(alpha)
        mu, U, scale = spectral_batch(Q, alpha)
        mu, U = mu[0], U[0]
        A = assemble_directional(Q, alpha[0])
        worst["unitarity"] = max(worst["unitarity"], np.max(np.abs(U.conj().T @ U - np.eye(n))))
        worst["diagonalization"] = max(worst["diagonalization"],
                                       np.max(np.abs(U.conj().T @ A @ U - np.diag(mu))) / scale[0])
        q = int(rng.integers(1, n + 1))
        idx = [tuple(c) for c in itertools.combinations(range(1, n + 1), q)]
        C = np.array([[_brute_minor(U.conj(), K, L) for L in idx] for K in idx])
        Mm = np.array([[_brute_minor(U, Kp, L) for L in idx] for Kp in idx])
        worst["cauchy_binet"] = max(worst["cauchy_binet"],
                                    np.max(np.abs(np.sum(np.abs(C) ** 2, axis=1) - 1.0)))
        worst["duality"] = max(worst["duality"], np.max(np.abs(C @ Mm.T - np.eye(len(idx)))))
        K = idx[int(rng.integers(len(idx)))]
        W = basis_weights(U, K, q)
        k = idx.index(K)
        if 0 < q < n:
            worst["weights"] = max(worst["weights"],
                                   np.max(np.abs(W - C[k][:, None] * Mm.T)))
    dt = time.perf_counter() - t0
    top = max(worst.values())
    ok = top <= 1e-10 and dt <= 10.0
    record(10, ok, "linear algebra, 1000 samples: " +
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (tol 1e-10), {dt:.1f} s (limit 10 s)")
    assert ok
