from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsparse.sparse import (POINT, AdmissionError, AtomRegistry, InvalidScheduleError,
                             build_core, build_map, derivative_audit, dyadic,
                             eval_with_provenance, export_samples_csv, inverse_eval,
                             piece_envelopes, sparseness_report, strictly_increasing)
from dcsparse.weights import WeightSequence

G2 = WeightSequence.gevrey(2)


@pytest.fixture(scope="module")
def registry():
    return AtomRegistry(G2)


@pytest.fixture(scope="module")
def h(registry):
    return build_map((0.3, -0.7), registry, depth=40)


def test_passes_through_point(h):
    assert eval_with_provenance(h, 0.3) == (h.y_P, POINT)
    assert float(h(0.3)) == -0.7
    assert inverse_eval(h, h.y_P) == (0.3, POINT)


def test_admission_ratio(h, registry):
    for atom in registry:
        assert atom.ratio <= 1
        assert atom.gamma == atom.range[1] - atom.range[0]


def test_admission_rejects_oversized_gamma(registry):
    y = registry.y(1, 1)
    with pytest.raises(AdmissionError):
        registry.admit(0, 0, 1, 2 * y, 1)


def test_junctions_continuous(h):
    for side in (h.left, h.right):
        atoms = sorted(side.atoms, key=lambda a: a.p)
        for a, b in zip(atoms, atoms[1:]):
            assert a.p + a.delta == b.p
            assert a.q + a.gamma == b.q


def test_extension_atoms(h, registry):
    Y = registry.y(1, 1)
    first = h.left.atoms[0]
    ext = h.left.extension(1)
    assert ext.p == first.p - 1 and ext.q == first.q - Y
    assert ext.ratio == 1
    assert h.right.extension(1).p == h.right.atoms[0].p + h.right.atoms[0].delta


def test_odd_symmetry_under_mirrored_schedule(h):
    d = np.random.default_rng(3).uniform(1e-6, 3.0, 100)
    up = h(0.3 + d) - (-0.7)
    down = h(0.3 - d) - (-0.7)
    # 0.3 + d and 0.3 - d round separately, hence the relative tolerance
    np.testing.assert_allclose(up, -down, rtol=1e-9, atol=1e-15)


def test_values_stay_in_atom_range(h):
    for atom in h.core_atoms[:10] + [h.left.extension(2)]:
        a, b = atom.domain
        x = np.linspace(float(a), float(b), 101)[1:-1]
        for u in x[::10]:
            v, prov = eval_with_provenance(h, u)
            assert prov == atom.index
            assert atom.q <= v <= atom.q + atom.gamma


def test_shared_registry_collapses_values(registry):
    h1 = build_map((0.3, -0.7), registry, depth=10)
    Y = registry.y(1, 1)
    P2 = (Fraction(0.3) + 1, Fraction(-0.7) + Y)
    h2 = build_map(P2, registry, depth=10)
    # h2's second left extension atom is h1's first: same key, same registry entry
    assert h2.left.extension(2).index == h1.left.extension(1).index
    u = float(h1.left.extension(1).p) + 0.37
    assert eval_with_provenance(h1, u) == eval_with_provenance(h2, u)


def test_inverse_round_trip(h):
    rng = np.random.default_rng(11)
    u = rng.uniform(-4.7, 5.3, 100)
    for x in u:
        v, prov = eval_with_provenance(h, x)
        x2, prov2 = inverse_eval(h, v)
        assert prov2 == prov
        assert abs(x2 - x) <= 1e-10


def test_inverse_lands_in_domain(h):
    atom = h.core_atoms[3]
    w = atom.q + atom.gamma / 3
    x, prov = inverse_eval(h, w)
    assert prov == atom.index and float(atom.p) <= x <= float(atom.p + atom.delta)


def test_monotone_and_bounded(h):
    u = np.linspace(0.3 - 5, 0.3 + 5, 20001)
    assert strictly_increasing(h, u) == (True, None)
    audit = derivative_audit(h)
    assert audit["passed"]
    assert audit["max_ratio_to_M"] <= 1


def test_piece_envelopes_decrease(h):
    for k in (1, 2):
        for side in ("left", "right"):
            env = piece_envelopes(h, k, side)
            assert np.all(np.diff(env) < 0)


def test_deep_queries_deepen_the_map(registry):
    h = build_map((0, 0), registry, depth=5)
    v, prov = eval_with_provenance(h, 2.0**-20)
    assert prov != POINT and h.depth >= 5
    assert h.right.depth >= 20


def test_schedule_validation(registry):
    with pytest.raises(InvalidScheduleError):
        build_core((0, 0), registry, 4, left_offsets=lambda i: Fraction(1, 2 ** (i % 2)))
    with pytest.raises(ValueError):
        dyadic(Fraction(1, 3))


def test_custom_schedule(registry):
    h = build_map((0, 0), registry, 12, left_offsets=lambda i: Fraction(3, 2 ** (i + 1)))
    u = np.linspace(-3, 3, 5001)
    assert strictly_increasing(h, u)[0]


def test_report_rows(registry):
    rep = sparseness_report([(0, 0), (0.5, 0.25)], [0.0, 0.1, -2.5], registry, depth=20,
                            audit=False)
    assert rep["pairs"] == 5          # u = x_P is excluded for the first point
    assert rep["all_resolved"]
    assert all(r["provenance"] is not None for r in rep["rows"])


def test_csv_export(h, tmp_path):
    path = tmp_path / "h.csv"
    export_samples_csv(h, path, np.linspace(-1, 1, 11))
    lines = path.read_text().splitlines()
    assert lines[0] == "u,h,provenanceIndex" and len(lines) == 12


@settings(max_examples=20, deadline=None)
@given(st.integers(-2**20, 2**20), st.integers(-2**20, 2**20))
def test_random_points(registry, xi, yi):
    P = (xi / 2**16, yi / 2**16)
    h = build_map(P, registry, depth=12)
    assert eval_with_provenance(h, P[0])[1] == POINT
    u = np.linspace(P[0] - 3, P[0] + 3, 2001)
    assert strictly_increasing(h, u)[0]
