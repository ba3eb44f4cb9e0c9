"""Pigeonhole refutation for families of polynomials of bounded degree.

If a family of degree <= n polynomials takes at most m values at each of
n + 1 distinct nonzero columns x_0..x_n, then the family has at most
m^(n+1) members: refining by the value at each column keeps at least a 1/m
share, and after n + 1 columns every survivor interpolates the same data,
so at most one survives.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P


class InterpolationContradiction(AssertionError):
    """Two distinct polynomials of degree <= n agree at n + 1 points."""


class PreconditionError(ValueError):
    """Some column carries more than m distinct values."""


def barycentric_weights(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if np.unique(xs).size != xs.size:
        raise ValueError("interpolation nodes must be distinct")
    diff = xs[:, None] - xs[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def barycentric_eval(xs, ys, x) -> np.ndarray:
    """Second-form barycentric evaluation of the interpolant."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    w = barycentric_weights(xs)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x[:, None] - xs[None, :]
    hit = d == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = w / d
        out = (t @ ys) / t.sum(axis=1)
    rows, cols = np.nonzero(hit)
    out[rows] = ys[cols]
    return out


def lagrange_interpolate(points) -> np.ndarray:
    """Ascending coefficients of the unique degree <= n interpolant through n + 1 points."""
    pts = np.asarray(points, dtype=float)
    xs, ys = pts[:, 0], pts[:, 1]
    w = barycentric_weights(xs)
    node = P.polyfromroots(xs)
    coeffs = np.zeros(xs.size)
    for xj, yj, wj in zip(xs, ys, w):
        q, _ = P.polydiv(node, [-xj, 1.0])
        coeffs += yj * wj * q
    return coeffs


def _values(coeffs, x) -> np.ndarray:
    return P.polyval(x, np.asarray(coeffs, dtype=float))


def same_polynomial(f, g, tol: float = 1e-9) -> bool:
    n = max(len(f), len(g))
    a = np.pad(np.asarray(f, dtype=float), (0, n - len(f)))
    b = np.pad(np.asarray(g, dtype=float), (0, n - len(g)))
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(a) + np.abs(b))))


def uniqueness_check(f, g, witnesses, tol: float = 1e-9) -> bool:
    """True when f and g agree at the witnesses; raise if they then differ.

    ``witnesses`` must hold at least deg + 1 distinct points.
    """
    xs = np.asarray(witnesses, dtype=float)
    deg = max(len(f), len(g)) - 1
    if np.unique(xs).size < deg + 1:
        raise ValueError("need deg + 1 distinct witnesses")
    fv, gv = _values(f, xs), _values(g, xs)
    if not np.allclose(fv, gv, rtol=tol, atol=tol):
        return False
    if not same_polynomial(f, g, tol * 1e3):
        raise InterpolationContradiction("distinct polynomials share deg + 1 values")
    return True


@dataclass
class PolyFamily:
    degree: int
    members: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        fixed = []
        for c in self.members:
            c = np.trim_zeros(np.asarray(c, dtype=float), "b")
            if c.size - 1 > self.degree:
                raise ValueError(f"member of degree {c.size - 1} exceeds {self.degree}")
            fixed.append(np.pad(c, (0, self.degree + 1 - c.size)))
        if len(fixed) > 1:
            A = np.array(fixed)
            diff = np.abs(A[:, None, :] - A[None, :, :])
            scale = np.maximum(1.0, np.abs(A[:, None, :]) + np.abs(A[None, :, :]))
            same = np.all(diff <= 1e-9 * scale, axis=2)
            np.fill_diagonal(same, False)
            if same.any():
                raise ValueError("family members must be distinct")
        self.members = fixed

    def __len__(self) -> int:
        return len(self.members)

    def table(self, columns) -> np.ndarray:
        """Member values, shape (members, columns)."""
        return P.polyval(np.asarray(columns, dtype=float), np.array(self.members).T)


def _classes(values: np.ndarray, tol: float) -> np.ndarray:
    """Label each value by its cluster; values closer than tol (relative) share a class."""
    order = np.argsort(values, kind="stable")
    s = values[order]
    jump = np.diff(s) > tol * np.maximum(1.0, np.abs(s[1:]))
    labels = np.empty(values.size, dtype=int)
    labels[order] = np.concatenate([[0], np.cumsum(jump)])
    return labels


@dataclass
class RefinementChain:
    sizes: list[int]
    chosen_values: list[float]
    survivors: list[int]
    bound: int
    family_size: int

    @property
    def passed(self) -> bool:
        return self.sizes[-1] == 1 and self.family_size <= self.bound


def pigeonhole_refine(family: PolyFamily, columns, m: int, tol: float = 1e-9) -> RefinementChain:
    """Refine by the value at each column in turn, keeping the largest class."""
    cols = np.asarray(columns, dtype=float)
    n = family.degree
    if cols.size != n + 1 or np.unique(cols).size != cols.size or np.any(cols == 0):
        raise ValueError(f"need {n + 1} distinct nonzero columns")
    if len(family) == 0:
        raise ValueError("empty family")
    tab = family.table(cols)
    for j in range(cols.size):
        k = _classes(tab[:, j], tol).max() + 1
        if k > m:
            raise PreconditionError(f"column {cols[j]} carries {k} > {m} values")

    alive = np.arange(len(family))
    sizes, chosen = [alive.size], []
    for j in range(cols.size):
        labels = _classes(tab[alive, j], tol)
        counts = np.bincount(labels)
        best = int(np.argmax(counts))
        if counts[best] * m < alive.size:
            raise AssertionError("pigeonhole step lost more than a 1/m share")
        alive = alive[labels == best]
        sizes.append(alive.size)
        chosen.append(float(tab[alive[0], j]))
    for other in alive[1:]:
        uniqueness_check(family.members[alive[0]], family.members[other], cols, tol)
        raise InterpolationContradiction("distinct members survived every column")
    bound = m ** (n + 1)
    if len(family) > bound:
        raise AssertionError(f"family of size {len(family)} exceeds {bound}")
    return RefinementChain(sizes, chosen, alive.tolist(), bound, len(family))


def exhaustive_line_search(coef_range: int = 5, columns=(1.0, 2.0), m: int = 2) -> dict:
    """Largest family of integer lines c0 + c1 x with at most m values per column.

    Enumerates the value sets: a line is fixed by its values at the two
    columns, so the best family for value sets S_1, S_2 is every line with
    (f(x_1), f(x_2)) in S_1 x S_2 and integer coefficients in range.
    """
    lines = [(c0, c1) for c0 in range(-coef_range, coef_range + 1)
             for c1 in range(-coef_range, coef_range + 1)]
    x1, x2 = columns
    val = {ln: (ln[0] + ln[1] * x1, ln[0] + ln[1] * x2) for ln in lines}
    v1 = sorted({v[0] for v in val.values()})
    v2 = sorted({v[1] for v in val.values()})
    by_pair = {v: ln for ln, v in val.items()}
    best, witness = 0, []
    for S1 in itertools.combinations(v1, m):
        for S2 in itertools.combinations(v2, m):
            fam = [by_pair[p] for p in itertools.product(S1, S2) if p in by_pair]
            if len(fam) > best:
                best, witness = len(fam), fam
    return {"max_family": best, "bound": m ** 2, "witness": witness,
            "lines": len(lines), "passed": best <= m ** 2}


def random_instance(rng: np.random.Generator, n: int, m: int,
                    size: int | None = None) -> tuple[PolyFamily, np.ndarray]:
    """Family realizing chosen value sets at random nonzero columns.

    Each member interpolates one tuple of the product of per-column value
    sets, so every column carries at most m values by construction.
    """
    cols = rng.choice(np.concatenate([np.arange(-9, 0), np.arange(1, 10)]),
                      size=n + 1, replace=False).astype(float)
    sets = [rng.choice(np.arange(-20, 21), size=m, replace=False).astype(float)
            for _ in range(n + 1)]
    tuples = list(itertools.product(*sets))
    size = len(tuples) if size is None else min(size, len(tuples))
    pick = rng.choice(len(tuples), size=size, replace=False)
    members = [lagrange_interpolate(np.column_stack([cols, tuples[i]])) for i in pick]
    return PolyFamily(n, members), cols
