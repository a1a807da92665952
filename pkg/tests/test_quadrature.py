import math

import numpy as np
import pytest
from scipy import special

from quadric_kohn.errors import ToleranceError
from quadric_kohn.quadrature import exp_sinh, periodic_trapezoid, tanh_sinh


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 0.2])
def test_tanh_sinh_power_singularity(a):
    v, err = tanh_sinh(lambda r: r ** (a - 1.0), 0.0, 1.0, rel_tol=1e-12)
    assert v == pytest.approx(1.0 / a, rel=1e-10)
    assert err < 1e-8


def test_tanh_sinh_endpoint_singularity_at_right():
    # the distance to the right endpoint is passed in exactly
    v, _ = tanh_sinh(lambda r, da, db: db ** -0.5, 0.0, 1.0, rel_tol=1e-12, complement=True)
    assert v == pytest.approx(2.0, rel=1e-10)


def test_exp_sinh_known_integrals():
    v, _ = exp_sinh(lambda u: np.exp(-u) * u ** 2)
    assert v == pytest.approx(2.0, rel=1e-11)
    v, _ = exp_sinh(lambda u: 1.0 / (1.0 + u * u))
    assert v == pytest.approx(math.pi / 2, rel=1e-10)


def test_exp_sinh_scale_handles_narrow_integrand():
    v, _ = exp_sinh(lambda u: 1e4 * np.exp(-1e4 * u), scale=1e-4)
    assert v == pytest.approx(1.0, rel=1e-11)


def test_periodic_trapezoid_bessel():
    res = periodic_trapezoid(lambda th: np.exp(2.0 * np.cos(th)))
    assert float(res.value) == pytest.approx(2 * math.pi * special.i0(2.0), rel=1e-13)
    assert np.all(res.converged)


def test_budget_exhaustion_raises():
    with pytest.raises(ToleranceError):
        tanh_sinh(lambda r: np.sin(1.0 / r) / r, 0.0, 1.0, rel_tol=1e-14, max_level=3)
