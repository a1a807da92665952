import math

import numpy as np
import pytest

from quadric_kohn import (EvalPoint, QuadratureSpec, eval_batch, eval_green, eval_szego,
                          heisenberg, heisenberg_N, heisenberg_szego, integrate_sphere, m1, m2,
                          product_heisenberg)
from quadric_kohn.errors import DomainError
from quadric_kohn.green import a_alpha, circle_breakpoints, outer_breakpoints


def test_a_alpha_example():
    assert a_alpha([1.0], math.exp(-2.0), [1.0]) == pytest.approx(1.0 / math.tanh(1.0))
    with pytest.raises(DomainError):
        a_alpha([1.0], 1.0, [1.0])


def test_integrate_sphere_measures():
    v, _ = integrate_sphere(lambda a: np.ones(a.shape[0]), m2())
    assert v == pytest.approx(2 * math.pi, rel=1e-12)
    v, _ = integrate_sphere(lambda a: np.ones(a.shape[0]), heisenberg(1))
    assert v == pytest.approx(2.0)


def test_identity_rejected():
    with pytest.raises(DomainError):
        eval_green(heisenberg(1), EvalPoint([0.0], [0.0]))


def test_green_on_t_axis_is_domain_error():
    with pytest.raises(DomainError):
        eval_green(heisenberg(2), EvalPoint([0.0, 0.0], [1.0]))


def test_m2_szego_vanishes():
    v = eval_szego(m2(), EvalPoint([0.3 + 0.1j, 0.2j], [0.4, -0.1]))
    assert abs(v.scalar) == 0.0


def test_heisenberg_szego_numeric():
    z, t = np.array([0.4 + 0.3j]), np.array([0.2])
    v = eval_szego(heisenberg(1), EvalPoint(z, t)).scalar
    assert v == pytest.approx(heisenberg_szego(1, z, t), rel=1e-9)


def test_heisenberg_top_degree():
    z, t = np.array([0.5 - 0.2j]), np.array([-0.6])
    v = eval_green(heisenberg(1), EvalPoint(z, t, 1, (1,)))[(1,)]
    assert v == pytest.approx(heisenberg_N(1, True, z, t), rel=1e-9)


def test_form_coefficients_keys():
    r = eval_green(m1(), EvalPoint([0.5, 0.3j], [0.2, 0.1], 1, (2,)))
    assert set(r.coeffs) == {(1,), (2,)}
    assert r.converged


def test_batch_threads_match_serial():
    pts = [EvalPoint([0.3 * k + 0.1j, 0.2], [0.1, -0.2 * k]) for k in range(1, 4)]
    a = [r.scalar for r in eval_batch(m2(), pts, threads=1)]
    b = [r.scalar for r in eval_batch(m2(), pts, threads=3)]
    assert a == b


def test_breakpoints():
    spec = QuadratureSpec()
    Q = product_heisenberg(1, 1, 1)
    assert np.allclose(outer_breakpoints(Q, np.array([]), spec), [math.pi / 2])
    pts = circle_breakpoints(product_heisenberg(1, 1), lambda th: np.column_stack(
        [np.cos(th), np.sin(th)]), spec)
    assert all(0 <= p <= 2 * math.pi for p in pts)


def test_heisenberg_two_limit_towards_t_axis():
    want = (1 - 1j * math.pi) / math.pi ** 3
    v = eval_green(heisenberg(2), EvalPoint([1e-4, 0.0], [1.0]), QuadratureSpec(rel_tol=1e-12)).scalar
    assert v == pytest.approx(want, rel=1e-7)
