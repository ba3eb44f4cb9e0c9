import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsparse.flat import (SynthesisError, eval_bump, hughes_lambda, make_bump,
                           make_transition, strictly_increasing)
from dcsparse.piecewise import PiecewisePolynomial, box_cascades
from dcsparse.weights import WeightSequence

from oracles import one_sided_differences, trapezoid

G2 = WeightSequence.gevrey(2)
G3 = WeightSequence.gevrey(3)


# -- piecewise cascades -------------------------------------------------------

def test_cascade_matches_discrete_convolution():
    widths = (0.3, 0.2, 0.1)
    cas = box_cascades(0.4, widths)[0]
    h = 1e-4
    x = np.arange(-1.0, 1.0, h)
    f = ((x >= -0.2) & (x < 0.2)).astype(float)
    for a in reversed(widths):
        n = int(round(a / h))
        f = np.convolve(f, np.ones(n) / n, mode="same")
    np.testing.assert_allclose(cas(x), f, atol=5e-3)


def test_cascade_integral_and_derivative():
    cas = box_cascades(0.5, (0.25, 0.125, 0.0625))[0]
    assert cas.antiderivative().right == pytest.approx(0.5, rel=1e-13)
    x = np.linspace(-0.6, 0.6, 2001)
    h = 1e-6
    fd = (cas(x + h) - cas(x - h)) / (2 * h)
    np.testing.assert_allclose(cas(x, 1), fd, atol=1e-4)


def test_box_is_indicator():
    b = PiecewisePolynomial.box(2.0)
    np.testing.assert_array_equal(b(np.array([-1.5, -1.0, 0.0, 0.999, 1.0])), [0, 1, 1, 1, 0])


# -- bumps --------------------------------------------------------------------

@pytest.mark.parametrize("seq", [G2, G3])
@pytest.mark.parametrize("eps", [1.0, 0.5])
def test_bump_support_and_positivity(seq, eps):
    b = make_bump((0, 4), eps, seq)
    assert float(b(0.0)) == 0.0 and float(b(4.0)) == 0.0
    assert float(b(2.0)) > 0
    assert float(b(-1.0)) == 0.0 and float(b(5.0)) == 0.0
    assert float(b(0.0, 1)) == 0.0
    assert np.all(b(np.linspace(1e-3, 4 - 1e-3, 1001)) > 0)


def test_uncapped_width_sum_example():
    # gevrey(2), eps = 1: uncapped a_j = 2 M_{j-1}/M_j = 2/j^2, summing to 2 pi^2/6 < 4
    total = math.fsum(2.0 / j**2 for j in range(1, 10**6))
    assert total == pytest.approx(2 * math.pi**2 / 6, abs=1e-5)
    assert total < 4
    b = make_bump((0, 4), 1.0, G2)
    assert b.base_width + sum(b.widths) == 4
    assert b.certificate_holds()


def test_widths_partition_interval_exactly():
    b = make_bump((Fraction(1, 3), Fraction(2, 3)), 0.25, G2)
    assert b.base_width + sum(b.widths) == Fraction(1, 3)


def test_integral_against_quadrature():
    b = make_bump((0, 1), 1.0, G2)
    quad = trapezoid(lambda x: b(x), 0.0, 1.0, 10**5)
    assert quad == pytest.approx(b.integral(), rel=1e-8)


@pytest.mark.parametrize("k", [0, 1, 3, 6, 8])
def test_telescoping_matches_direct(k):
    b = make_bump((0, 4), 1.0, G2)
    x = np.linspace(-0.5, 4.5, 4001)
    tele = eval_bump(b, x, k, method="telescoping")
    direct = eval_bump(b, x, k, method="direct")
    scale = np.max(np.abs(direct))
    np.testing.assert_allclose(tele, direct, atol=1e-9 * scale)


def test_derivative_against_finite_differences():
    b = make_bump((0, 1), 1.0, G2)
    x = np.linspace(0.2, 0.8, 51)
    h = 1e-6
    for k in range(3):
        fd = (b(x + h, k) - b(x - h, k)) / (2 * h)
        np.testing.assert_allclose(b(x, k + 1), fd, rtol=1e-4, atol=1e-4 * np.max(np.abs(fd)))


def test_certificate_report_keys():
    rep = make_bump((0, 1), 0.5, G3).certificate_report()
    assert rep["certificateHolds"] is True
    assert len(rep["boundTable"]) == len(rep["analyticBounds"]) == 9
    assert min(rep["marginPerOrder"]) >= 0


def test_order_out_of_range():
    b = make_bump((0, 1), 1.0, G2)
    with pytest.raises(ValueError):
        b(0.5, b.J - 1)


def test_rejects_quasi_analytic_and_bad_interval():
    with pytest.raises(ValueError):
        make_bump((0, 1), 1.0, WeightSequence.factorial())
    with pytest.raises(ValueError):
        make_bump((1, 1), 1.0, G2)


def test_synthesis_failure_on_hopeless_width():
    with pytest.raises(SynthesisError):
        make_bump((0, 2.0**-60), 1e-30, G2)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([1.0, 0.5, 0.25, 0.1]), st.floats(0.05, 8.0), st.sampled_from([1.5, 2.0, 3.0]))
def test_certificate_and_sampled_bounds(eps, length, s):
    seq = WeightSequence.gevrey(s)
    b = make_bump((0, length), eps, seq)
    assert b.certificate_holds()
    x = np.linspace(0, length, 2001)
    for k in range(b.certified_order + 1):
        assert np.max(np.abs(b(x, k))) <= b.bound_table[k] * (1 + 1e-9)


# -- transitions --------------------------------------------------------------

@pytest.mark.parametrize("i", [1, 2, 5])
def test_transition_basics(i):
    t = make_transition(1, i, G2)
    assert float(t(0.0)) == 0.0
    assert float(t(1.0)) == t.end_value
    assert float(t(0.0, 1)) == 0.0 and float(t(1.0, 1)) == 0.0
    assert strictly_increasing(t, np.linspace(0, 1, 10**4))


def test_transition_rescale_one_when_ratios_small():
    t = make_transition(1, 5, G2)
    assert t.rescale == 1.0


def test_end_value_mean_value_bound():
    for delta, i in [(1, 1), (Fraction(1, 4), 2), (2, 5)]:
        t = make_transition(delta, i, G2)
        assert t.end_value <= float(delta) * (1 / i) * G2[1]
        assert t.end_value <= float(delta) * float(np.max(t(np.linspace(0, float(delta), 10001), 1)))


def test_amplitude_doubles_end_value():
    b = make_bump((0, 1), 1.0, G2)
    b2 = dataclasses.replace(b, amplitude=2 * b.amplitude)
    assert b2.integral() == pytest.approx(2 * b.integral(), rel=1e-15)


def test_transition_one_sided_flatness():
    t = make_transition(1, 1, G2)
    h = 1e-4
    for k in range(1, 5):
        assert abs(one_sided_differences(lambda x: t(x), 0.0, h, k, +1)) <= 1e-6 * G2[k]


# -- Hughes constants ---------------------------------------------------------

def test_hughes_examples():
    hc = hughes_lambda(G2, 1.0, 50)
    assert hc.lam == pytest.approx(0.25, abs=1e-14)
    assert hc.rho * hc.D == pytest.approx(0.125, abs=1e-15)
    assert hughes_lambda(G2, 2.0, 50).L1 == pytest.approx(4.0)
    with pytest.raises(ValueError):
        hughes_lambda(WeightSequence.factorial(), 1.0, 50)
