import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsparse.polyrefute import (InterpolationContradiction, PolyFamily, PreconditionError,
                                 barycentric_eval, exhaustive_line_search, lagrange_interpolate,
                                 pigeonhole_refine, random_instance, uniqueness_check)


def test_interpolation_examples():
    np.testing.assert_allclose(lagrange_interpolate([(0, 0), (1, 1)]), [0, 1], atol=1e-15)
    np.testing.assert_allclose(lagrange_interpolate([(0, 1), (1, 1), (2, 1)]), [1, 0, 0], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_recovers_quartic(coeffs):
    xs = np.array([-2.0, -1.0, 0.5, 1.5, 2.5])
    ys = np.polynomial.polynomial.polyval(xs, coeffs)
    np.testing.assert_allclose(lagrange_interpolate(np.column_stack([xs, ys])), coeffs, atol=1e-8)
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(barycentric_eval(xs, ys, x),
                               np.polynomial.polynomial.polyval(x, coeffs), atol=1e-8)


def test_uniqueness_examples():
    f = np.array([1.0, 2.0, 3.0])
    assert uniqueness_check(f, f, [1, 2, 3])
    assert not uniqueness_check([0, 1], [2, -1], [1, 2])     # lines meeting at x = 1 only


def test_integer_lines_never_agree_twice():
    lines = list(itertools.product(range(-5, 6), repeat=2))
    for f, g in itertools.combinations(lines, 2):
        assert not uniqueness_check(f, g, [1.0, 2.0])


def test_contradiction_fires():
    # ill-conditioned witnesses let two different quadratics agree to 1e-9
    f = np.array([0.0, 0.0, 1.0])
    g = f + np.array([1.0, -2.0, 1.0])        # differs by (x - 1)^2
    w = [1.0, 1.0 + 1e-6, 1.0 + 2e-6]
    with pytest.raises(InterpolationContradiction):
        uniqueness_check(f, g, w)


def test_precondition_fails_for_oversized_family():
    cols = np.array([1.0, 2.0])
    members = [lagrange_interpolate([(1, a), (2, b)]) for a in (0, 1) for b in (0, 1)]
    members.append(lagrange_interpolate([(1, 0), (2, 5)]))
    with pytest.raises(PreconditionError):
        pigeonhole_refine(PolyFamily(1, members), cols, 2)


def test_singleton_family():
    chain = pigeonhole_refine(PolyFamily(2, [[1, 2, 3]]), [1, 2, 3], 2)
    assert chain.sizes == [1, 1, 1, 1] and chain.passed


def test_quadratics_with_shared_values():
    rng = np.random.default_rng(5)
    fam, cols = random_instance(rng, 2, 4, size=50)
    chain = pigeonhole_refine(fam, cols, 4)
    assert chain.sizes[0] == 50 and chain.sizes[-1] == 1
    assert all(a * 4 >= b for a, b in zip(chain.sizes[1:], chain.sizes))


def test_family_validation():
    with pytest.raises(ValueError):
        PolyFamily(1, [[1, 2, 3]])
    with pytest.raises(ValueError):
        PolyFamily(1, [[1, 2], [1, 2]])
    with pytest.raises(ValueError):
        pigeonhole_refine(PolyFamily(1, [[1, 2]]), [0, 1], 2)


def test_exhaustive_lines():
    res = exhaustive_line_search()
    assert res["max_family"] == 4 and res["passed"]
