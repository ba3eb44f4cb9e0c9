import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsparse.envelope import (ANALYTIC, DerivativeNormProfile, check_membership, constant,
                               extend_low_orders, fit_envelope, measure_norms, minimal_beta)
from dcsparse.flat import make_bump, make_transition
from dcsparse.sparse import AtomRegistry, build_map
from dcsparse.weights import WeightSequence

FACT = WeightSequence.factorial(30)
G2 = WeightSequence.gevrey(2, 30)


def test_membership_examples():
    M = FACT.prefix[:11]
    fit = check_membership(M, FACT, 1.0, 1.0)
    assert fit.feasible and fit.slack == 0.0
    d = 3 * 2.0 ** np.arange(11) * M
    assert check_membership(d, FACT, 3, 2).slack == pytest.approx(0, abs=1e-12)
    bad = check_membership(d, FACT, 3, 1.9)
    assert not bad.feasible
    direct = next(k for k in range(11) if d[k] > 3 * 1.9**k * M[k] * (1 + 1e-12))
    assert bad.first_violation == direct


def test_minimal_beta_examples():
    assert minimal_beta(FACT.prefix[:6], FACT, 1.0) == pytest.approx(1.0)
    ones = WeightSequence.custom([1, 1, 1])
    assert minimal_beta([1, 10, 1], ones, 1.0) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        minimal_beta([0, 0, 0], ones, 1.0)


def test_extend_low_orders_examples():
    d = FACT.prefix[:8].copy()
    assert extend_low_orders(d, FACT, 3, 1.0, 1.0) == 1.0
    assert extend_low_orders(d, FACT, 0, 2.5, 1.0) == 2.5
    d[0] = 5 * 0.5
    beta = extend_low_orders(d, FACT, 2, 0.5, 1.0)
    assert beta == pytest.approx(2.5)
    assert check_membership(d, FACT, beta, 1.0).feasible


profiles = st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=20)


@settings(max_examples=100, deadline=None)
@given(profiles, st.floats(0.1, 10))
def test_beta_nonincreasing_in_B(d, B):
    assert minimal_beta(d, G2, 2 * B) <= minimal_beta(d, G2, B) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(profiles, st.floats(0.1, 10), st.floats(1.0, 3.0), st.floats(1.0, 3.0))
def test_feasibility_monotone(d, B, fb, fB):
    beta = minimal_beta(d, G2, B)
    assert check_membership(d, G2, beta, B).feasible
    assert check_membership(d, G2, beta * fb, B * fB).feasible


def test_fit_sweep():
    fits = fit_envelope(FACT.prefix[:5], FACT, [0.5, 1.0, 2.0])
    assert all(f.feasible and f.slack == 0 for f in fits)
    assert fits[0].beta >= fits[1].beta >= fits[2].beta


def test_measure_constant_and_analytic():
    p = measure_norms(constant(-2.5), (0, 1), 4)
    np.testing.assert_array_equal(p.norms, [2.5, 0, 0, 0, 0])
    p = measure_norms(ANALYTIC["sin"], (0, 2 * math.pi), 6, density=20001)
    np.testing.assert_allclose(p.norms, 1.0, atol=1e-6)
    assert p.converged


def test_measure_flat_spline_within_certificate():
    b = make_bump((0, 1), 0.5, WeightSequence.gevrey(3))
    p = measure_norms(b, (0, 1), b.certified_order)
    assert np.all(p.norms <= b.analytic_bounds() * (1 + 1e-9))


def test_measure_transition_and_sparse_map():
    t = make_transition(1, 2, G2)
    p = measure_norms(t, (0, 1), 8)
    assert np.all(p.norms[1:] <= np.asarray(t.bounds()[1:]) * (1 + 1e-9))
    h = build_map((0, 0), AtomRegistry(WeightSequence.gevrey(2)), depth=12)
    p = measure_norms(h, (-2, 2), 8, density=40001)
    assert np.all(p.norms[1:] <= WeightSequence.gevrey(2).prefix[1:9])


def test_unsupported_order():
    b = make_bump((0, 1), 1.0, G2)
    with pytest.raises(ValueError):
        measure_norms(b, (0, 1), b.J)


def test_profile_validation():
    with pytest.raises(ValueError):
        DerivativeNormProfile([1.0, -1.0])
