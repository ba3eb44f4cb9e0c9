"""Finite-level witnesses for the two-valued family and the equalizer demo.

``g_m`` is a sum of flat bumps, one on each open middle-third gap removed
up to level m, so it vanishes with all certified derivatives on the level-m
Cantor intervals and outside (0, 1).  Cutting ``g_m`` down to a window
``[a, b]`` between Cantor endpoints gives a member of a family that takes at
most two values, 0 and g(x), at every x.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .flat import DEFAULT_K_MAX, FlatSpline, make_bump
from .weights import NON_QUASI_ANALYTIC, WeightSequence, classify

MAX_LEVEL = 12


@dataclass(frozen=True)
class CantorApprox:
    level: int
    intervals: tuple[tuple[Fraction, Fraction], ...]
    gaps: tuple[tuple[Fraction, Fraction], ...]
    gap_levels: tuple[int, ...]

    @property
    def endpoints(self) -> list[Fraction]:
        return sorted(x for iv in self.intervals for x in iv)


def cantor_approx(m: int) -> CantorApprox:
    """Level-m approximation: 2^m closed intervals and the 2^m - 1 removed open gaps."""
    if m < 0:
        raise ValueError("level must be nonnegative")
    intervals = [(Fraction(0), Fraction(1))]
    gaps: list[tuple[Fraction, Fraction, int]] = []
    for lev in range(1, m + 1):
        nxt = []
        for a, b in intervals:
            third = (b - a) / 3
            nxt += [(a, a + third), (b - third, b)]
            gaps.append((a + third, b - third, lev))
        intervals = nxt
    gaps.sort()
    return CantorApprox(m, tuple(intervals), tuple((a, b) for a, b, _ in gaps),
                        tuple(lev for _, _, lev in gaps))


@dataclass(frozen=True, eq=False)
class FlatOnCantorFunction:
    """``g_m``: one bump per gap, with ``||g^(k)|| <= beta B^k M_k`` for k <= K_max."""

    cantor: CantorApprox
    bumps: tuple[FlatSpline, ...]
    certified_order: int
    beta: float
    B: float
    _lefts: np.ndarray = field(repr=False, default=None)
    _rights: np.ndarray = field(repr=False, default=None)

    @property
    def level(self) -> int:
        return self.cantor.level

    def __call__(self, x, k: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros_like(flat)
        j = np.searchsorted(self._lefts, flat, side="right") - 1
        inside = (j >= 0) & (flat < self._rights[np.maximum(j, 0)])
        for gap in np.unique(j[inside]):
            sel = inside & (j == gap)
            out[sel] = self.bumps[gap](flat[sel], k)
        return out.reshape(x.shape)


def build_flat_on_cantor(seq: WeightSequence, m: int,
                         K_max: int = DEFAULT_K_MAX) -> FlatOnCantorFunction:
    """Per-gap bumps with eps_j = 3^-level(j); disjoint supports give B = 1/3, beta = 1."""
    if not 0 < m <= MAX_LEVEL:
        raise ValueError(f"level must lie in 1..{MAX_LEVEL}")
    verdict = classify(seq).verdict
    if verdict != NON_QUASI_ANALYTIC:
        raise ValueError(f"{seq.name} is not non-quasi-analytic ({verdict})")
    cantor = cantor_approx(m)
    bumps = tuple(make_bump(gap, 3.0 ** -lev, seq, K_max)
                  for gap, lev in zip(cantor.gaps, cantor.gap_levels))
    return FlatOnCantorFunction(
        cantor, bumps, K_max, beta=1.0, B=1.0 / 3.0,
        _lefts=np.array([float(a) for a, _ in cantor.gaps]),
        _rights=np.array([float(b) for _, b in cantor.gaps]),
    )


@dataclass(frozen=True, eq=False)
class TwoValuedFamilyMember:
    a: Fraction
    b: Fraction
    g: FlatOnCantorFunction

    def __call__(self, x, k: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        window = (x >= float(self.a)) & (x <= float(self.b))
        return np.where(window, self.g(x, k), 0.0)

    def gap_range(self) -> tuple[int, int] | None:
        """First and last gap index inside [a, b], or None when the window holds no gap."""
        gaps = self.g.cantor.gaps
        inside = [j for j, (l, r) in enumerate(gaps) if self.a <= l and r <= self.b]
        return (inside[0], inside[-1]) if inside else None


def family_member(g: FlatOnCantorFunction, a, b) -> TwoValuedFamilyMember:
    a, b = Fraction(a), Fraction(b)
    ends = set(g.cantor.endpoints)
    if a not in ends or b not in ends:
        raise ValueError("window ends must be level-m Cantor endpoints")
    if not a < b:
        raise ValueError("need a < b")
    return TwoValuedFamilyMember(a, b, g)


def family_windows(g: FlatOnCantorFunction) -> list[tuple[Fraction, Fraction]]:
    """All C(2^{m+1}, 2) endpoint windows."""
    return list(itertools.combinations(g.cantor.endpoints, 2))


def distinct_family(g: FlatOnCantorFunction) -> list[TwoValuedFamilyMember]:
    """One member per distinct function.

    At a finite level two windows define the same function exactly when they
    contain the same gaps, so members are indexed by a contiguous gap range
    (plus one window containing no gap, the zero function).
    """
    gaps = g.cantor.gaps
    ends = g.cantor.endpoints
    members = [TwoValuedFamilyMember(ends[0], ends[1], g)]
    for i in range(len(gaps)):
        for j in range(i, len(gaps)):
            members.append(TwoValuedFamilyMember(gaps[i][0], gaps[j][1], g))
    return members


@dataclass
class TwoValueReport:
    passed: bool
    max_distinct: int
    worst_x: float
    identity_error: float
    members: int
    grid: int


def _count_distinct(columns: np.ndarray, tol: float) -> np.ndarray:
    """Distinct values per column of ``columns`` (members x grid), relative tolerance."""
    s = np.sort(columns, axis=0)
    scale = np.maximum(np.max(np.abs(s), axis=0), np.finfo(float).tiny)
    jumps = np.diff(s, axis=0) > tol * scale
    return 1 + np.sum(jumps, axis=0)


def _member_values(members: Sequence, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """Values of every member on ``x``; window members share one evaluation of g."""
    cache: dict[int, np.ndarray] = {}
    rows = []
    for m in members:
        if isinstance(m, TwoValuedFamilyMember):
            if id(m.g) not in cache:
                cache[id(m.g)] = m.g(x)
            gx = cache[id(m.g)]
            rows.append(np.where((x >= float(m.a)) & (x <= float(m.b)), gx, 0.0))
        else:
            rows.append(np.asarray(m(x), dtype=float))
    return np.array(rows), cache


def two_value_check(members: Sequence, grid, tol: float = 1e-12,
                    chunk: int = 2048) -> TwoValueReport:
    """At each grid x the member values must form a subset of {0, g(x)}."""
    grid = np.asarray(grid, dtype=float)
    worst, worst_x, ident = 0, float("nan"), 0.0
    for start in range(0, grid.size, chunk):
        x = grid[start:start + chunk]
        vals, cache = _member_values(members, x)
        counts = _count_distinct(vals, tol)
        j = int(np.argmax(counts))
        if counts[j] > worst:
            worst, worst_x = int(counts[j]), float(x[j])
        for row, m in zip(vals, members):
            if isinstance(m, TwoValuedFamilyMember):
                gx = cache[id(m.g)]
                scale = np.maximum(np.abs(gx), np.finfo(float).tiny)
                err = np.minimum(np.abs(row), np.abs(row - gx)) / scale
                ident = max(ident, float(np.max(err)))
    return TwoValueReport(worst <= 2 and ident <= tol, worst, worst_x, ident,
                          len(members), grid.size)


def separation_audit(members: Sequence, grid, pairs: int = 100, seed: int = 0) -> dict:
    """Random member pairs must differ somewhere on the grid."""
    rng = np.random.default_rng(seed)
    grid = np.asarray(grid, dtype=float)
    separated = 0
    failures = []
    n = len(members)
    for _ in range(pairs):
        i, j = rng.choice(n, size=2, replace=False)
        diff = np.abs(members[i](grid) - members[j](grid))
        if np.any(diff > 0):
            separated += 1
        else:
            failures.append((int(i), int(j)))
    return {"pairs": pairs, "separated": separated, "failures": failures,
            "passed": separated == pairs}


# -- equalizer demo ---------------------------------------------------------

ANALYTIC_TRIPLES: dict[str, tuple] = {
    "sin-cos": (np.sin, np.cos, None),
    "shifted-sines": (np.sin, lambda x: np.sin(x + 1.0), lambda x: np.sin(x + 2.0)),
    "degenerate": (np.sin, np.sin, np.cos),
}


@dataclass
class EqualizerReport:
    pair_roots: dict
    points: list
    degenerate_pairs: list
    min_separation: float
    discrete: bool


def _roots(d: Callable, x: np.ndarray) -> list[float]:
    v = d(x)
    roots = [float(x[k]) for k in np.flatnonzero(v == 0)]
    for k in np.flatnonzero(v[:-1] * v[1:] < 0):
        roots.append(brentq(d, x[k], x[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return sorted(roots)


def equalizer_demo(f1, f2, f3=None, interval=(0.0, 2 * math.pi), grid: int = 10001,
                   delta_report: float = 1e-3, tol: float = 1e-12) -> EqualizerReport:
    """Isolate every x where two of the functions agree (``f3=None`` compares a pair).

    A pair that agrees on the whole grid is reported as degenerate; otherwise
    the coincidence set is a finite list of roots of the pairwise differences.
    """
    x = np.linspace(interval[0], interval[1], grid)
    fs = (f1, f2) if f3 is None else (f1, f2, f3)
    pair_roots, degenerate = {}, []
    for i, j in itertools.combinations(range(len(fs)), 2):
        d = lambda t, a=fs[i], b=fs[j]: a(t) - b(t)      # noqa: E731
        if np.max(np.abs(d(x))) <= tol:
            degenerate.append((i + 1, j + 1))
            continue
        pair_roots[(i + 1, j + 1)] = _roots(d, x)
    pts = sorted(r for rs in pair_roots.values() for r in rs)
    merged: list[float] = []
    for r in pts:
        if not merged or r - merged[-1] > 1e-10:
            merged.append(r)
    sep = float(np.min(np.diff(merged))) if len(merged) > 1 else math.inf
    return EqualizerReport(pair_roots, merged, degenerate, sep,
                           discrete=not degenerate and sep > delta_report)
