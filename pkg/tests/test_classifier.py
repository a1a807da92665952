import numpy as np
import pytest

from quadric_kohn import (SphereSampler, classify_degree, epsilon_signs, gamma_report, heisenberg,
                          m1, m2, m3, sample_signatures, signature_set, spectral)


def test_sampler_includes_coordinate_directions():
    pts = SphereSampler(n_points=64).base_points(3)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert SphereSampler().base_points(1).tolist() == [[1.0], [-1.0]]


def test_heisenberg_classification():
    n = 3
    for q in range(n + 1):
        c = classify_degree(heisenberg(n), q)
        expected = q not in (0, n)
        assert c.solvable == expected and c.hypoelliptic == expected


def test_witness_is_reported():
    c = classify_degree(m2(), 1)
    assert not c.solvable
    S = spectral(m2(), c.solvable_witness)
    assert (S.n_plus, S.n_minus) == (1, 1)


def test_m3_degenerate_signatures_found():
    assert (1, 0) in signature_set(m3()) and (0, 1) in signature_set(m3())


def test_m1_gamma_fractions():
    sample = sample_signatures(m1(), SphereSampler())
    fr = {L: gamma_report(m1(), L, sample=sample).sphere_fraction_estimate
          for L in [(), (1,), (2,), (1, 2)]}
    # eigenvalues are labelled in decreasing order, so the mixed-sign
    # quadrants both carry the pattern (1,) and the pattern (2,) never occurs
    want = {(): 0.25, (1,): 0.5, (2,): 0.0, (1, 2): 0.25}
    for L, v in fr.items():
        assert v == pytest.approx(want[L], abs=2e-3)


def test_m2_cone_empty_for_functions():
    assert not gamma_report(m2(), ()).nonempty_positive_measure
    assert gamma_report(heisenberg(2), ()).nonempty_positive_measure


def test_epsilon_signs():
    S = spectral(m2(), [1.0, 0.0])
    assert epsilon_signs(S, (1,)).tolist() == [1, 1]
    assert epsilon_signs(S, ()).tolist() == [-1, 1]


def test_degree_out_of_range():
    with pytest.raises(ValueError):
        classify_degree(m2(), 3)
