import math

import numpy as np
import pytest

from quadric_kohn import (GridSpec, QuadricForm, TransformPoint, box_transformed_residual,
                          heat_transform, heisenberg, m2, mass_closed_form, product_heisenberg,
                          szego_transform)
from quadric_kohn.errors import DomainError
from quadric_kohn.heat import offdiagonal_coupling, phi_ratio, x_coth_x
from quadric_kohn.verify import random_quadric


def test_special_functions_near_zero():
    x = np.array([0.0, 1e-9, 1e-3, 1.0, 50.0])
    assert np.allclose(x_coth_x(x), np.where(x == 0, 1.0, x / np.tanh(np.where(x == 0, 1, x))))
    assert np.all(np.isfinite(phi_ratio(x)))


def test_flat_direction_is_gaussian():
    # A^lam = 0: the kernel reduces to the Euclidean heat kernel in z
    Q = QuadricForm((np.array([[1.0]]), np.array([[0.0]])))
    z, s = np.array([0.3 - 0.4j]), 0.7
    v = heat_transform(Q, TransformPoint(z, [0.0, 2.0], s))
    want = 2.0 / ((2 * math.pi) ** 2 * s) * math.exp(-abs(z[0]) ** 2 / s)
    assert v == pytest.approx(want, rel=1e-13)


def test_szego_transform_example():
    Q = product_heisenberg(1, 1)
    assert szego_transform(Q, (1, 2), [0.0, 0.0], [1.0, 1.0]) == pytest.approx(2 / math.pi ** 3)
    assert szego_transform(Q, (), [0.0, 0.0], [1.0, 1.0]) == 0.0


def test_heat_tends_to_szego():
    Q = heisenberg(2)
    z = np.array([0.5 + 0.2j, -0.1j])
    s_inf = szego_transform(Q, (1, 2), z, [1.5])
    v = heat_transform(Q, TransformPoint(z, [1.5], 30.0, (1, 2)))
    assert v == pytest.approx(s_inf, rel=1e-12)


def test_lambda_zero_rejected():
    with pytest.raises(DomainError):
        TransformPoint([1.0], [0.0], 1.0)


def test_offdiagonal_coupling_vanishes(rng):
    for _ in range(5):
        Q = random_quadric(rng, 3, 2)
        assert offdiagonal_coupling(Q, rng.normal(size=2)) < 1e-13


def test_mass_closed_form_heisenberg():
    s = 0.4
    v = mass_closed_form(heisenberg(1), (), s, [1.0])
    assert v == pytest.approx(math.exp(-s) / math.cosh(s) / math.sqrt(2 * math.pi))


def test_residual_second_order_m2():
    r1 = box_transformed_residual(m2(), (1,), [0.6, 0.8], GridSpec(h=2e-3), [0.5])
    r2 = box_transformed_residual(m2(), (1,), [0.6, 0.8], GridSpec(h=1e-3), [0.5])
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)
