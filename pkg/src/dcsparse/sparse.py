"""Increasing bijections glued from a countable registry of transition atoms.

An atom ``t_{p,q,D,G,i}(x) = q + (G / y(D,i)) s_{D,i}(x - p)`` maps
``[p, p+D]`` onto ``[q, q+G]`` with every derivative zero at both ends.  The
map ``h_P`` through ``P`` uses atoms of shrinking width and growing ``i`` on
either side of ``x_P`` plus unit-width atoms out to infinity.

Parameters are dyadic :class:`fractions.Fraction` values.  This is not just
bookkeeping: the atoms are so flat that neighbouring values of ``h_P``
routinely differ by far less than one ulp of ``y_P``, so values are carried
as an exact anchor (an endpoint of the atom's range) plus a float offset.
"""
from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .flat import DEFAULT_K_MAX, TransitionFunction, make_transition
from .weights import WeightSequence

POINT = "P"
DEFAULT_DEPTH = 40
MAX_DEPTH = 64


class AdmissionError(ValueError):
    """An atom whose range span exceeds the end value of its transition."""


class InvalidScheduleError(ValueError):
    """A domain schedule that is not strictly monotone toward the point."""


def dyadic(x) -> Fraction:
    """Exact dyadic rational for an int, float or dyadic Fraction."""
    f = x if isinstance(x, Fraction) else Fraction(x)
    d = f.denominator
    if d & (d - 1):
        raise ValueError(f"{x!r} is not a dyadic rational")
    return f


def default_offsets(i: int) -> Fraction:
    """Distance of the i-th domain point from x_P: 2^(1-i)."""
    return Fraction(1, 2 ** (i - 1))


@dataclass(frozen=True, eq=False)
class TransitionAtom:
    p: Fraction
    q: Fraction
    delta: Fraction
    gamma: Fraction
    i: int
    transition: TransitionFunction
    index: int

    @property
    def key(self) -> tuple:
        return (self.p, self.q, self.delta, self.gamma, self.i)

    @cached_property
    def y(self) -> Fraction:
        return Fraction(self.transition.end_value)

    @cached_property
    def ratio(self) -> Fraction:
        return self.gamma / self.y

    @cached_property
    def _floats(self):
        return (float(self.p), float(self.q), float(self.q + self.gamma),
                float(self.delta), float(self.ratio))

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.p, self.p + self.delta

    @property
    def range(self) -> tuple[Fraction, Fraction]:
        return self.q, self.q + self.gamma

    def offsets(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(anchored at the top?, signed offset) with value = anchor + offset."""
        p, _, _, d, scale = self._floats
        z = np.asarray(x, dtype=float) - p
        top = z > d / 2
        off = np.where(top, -scale * self.transition.upper(z), scale * self.transition.lower(z))
        return top, off

    def __call__(self, x, k: int = 0, method: str = "telescoping") -> np.ndarray:
        p, q, top_value, _, scale = self._floats
        if k == 0:
            top, off = self.offsets(x)
            return np.where(top, top_value, q) + off
        return scale * self.transition(np.asarray(x, dtype=float) - p, k, method=method)

    def exact(self, x: float) -> Fraction:
        top, off = self.offsets(np.array([x]))
        anchor = self.q + self.gamma if top[0] else self.q
        return anchor + Fraction(float(off[0]))

    def inverse(self, w) -> float:
        """Bisection for x in the domain with t(x) = w."""
        w = Fraction(w)
        if not self.q <= w <= self.q + self.gamma:
            raise ValueError("w outside the atom's range")
        p, _, _, d, _ = self._floats
        s = self.transition
        ratio = self.ratio
        if w - self.q <= self.gamma / 2:
            target = float((w - self.q) / ratio)
            lo, hi = 0.0, d / 2
            below = lambda z: s.lower(z) < target          # noqa: E731
        else:
            target = float((self.q + self.gamma - w) / ratio)
            lo, hi = d / 2, d
            below = lambda z: s.upper(z) > target          # noqa: E731
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if below(np.array(mid)):
                lo = mid
            else:
                hi = mid
        return p + 0.5 * (lo + hi)


class AtomRegistry:
    """Append-only registry of admitted atoms for one weight sequence.

    Keys are exact parameter tuples; the enumeration index of an atom is its
    insertion position.  Transitions ``s_{D,i}`` are shared between atoms.
    """

    def __init__(self, seq: WeightSequence, K_max: int = DEFAULT_K_MAX):
        self.seq = seq.extended(K_max + 2)
        self.K_max = K_max
        self._atoms: dict[tuple, TransitionAtom] = {}
        self._log: list[TransitionAtom] = []
        self._transitions: dict[tuple[Fraction, int], TransitionFunction] = {}
        self._lock = threading.RLock()

    def transition(self, delta, i: int) -> TransitionFunction:
        key = (dyadic(delta), int(i))
        with self._lock:
            t = self._transitions.get(key)
            if t is None:
                t = make_transition(key[0], key[1], self.seq, self.K_max)
                self._transitions[key] = t
            return t

    def y(self, delta, i: int) -> Fraction:
        return Fraction(self.transition(delta, i).end_value)

    def admit(self, p, q, delta, gamma, i: int) -> TransitionAtom:
        key = (dyadic(p), dyadic(q), dyadic(delta), dyadic(gamma), int(i))
        with self._lock:
            atom = self._atoms.get(key)
            if atom is not None:
                return atom
            if not (key[2] > 0 and key[3] > 0 and key[4] >= 1):
                raise AdmissionError(f"non-positive span in {key}")
            t = self.transition(key[2], key[4])
            if key[3] > Fraction(t.end_value):
                raise AdmissionError(f"Gamma / y(Delta, i) > 1 for {key}")
            atom = TransitionAtom(*key, transition=t, index=len(self._log))
            self._atoms[key] = atom
            self._log.append(atom)
            return atom

    def __len__(self) -> int:
        return len(self._log)

    def __getitem__(self, index: int) -> TransitionAtom:
        return self._log[index]

    def __iter__(self):
        return iter(list(self._log))

    def __contains__(self, key) -> bool:
        return tuple(key) in self._atoms

    @property
    def transitions(self) -> dict:
        return dict(self._transitions)


class _Side:
    """Atoms on one side of P, indexed by distance from the point.

    Domain distances d_1 > d_2 > ... -> 0 and range distances e_1 > e_2 > ...
    with e_1 = y(D_1, 1)/2 and e_{i+1} = min(y(D_{i+1}, i+1), e_i)/2, so
    y(D_i, i) > e_i > 0 and G_i = e_i - e_{i+1} < y(D_i, i).
    """

    def __init__(self, sign: int, owner: "SparsePiecewiseMap", offsets: Callable[[int], Fraction]):
        self.sign = sign
        self.owner = owner
        self.offsets = offsets
        self.d: list[Fraction] = []
        self.e: list[Fraction] = []
        self.atoms: list[TransitionAtom] = []
        self.ext: dict[int, TransitionAtom] = {}
        self._bounds = np.empty(0)

    @property
    def depth(self) -> int:
        return len(self.atoms)

    def _offset(self, i: int) -> Fraction:
        while len(self.d) < i:
            j = len(self.d) + 1
            dj = dyadic(self.offsets(j))
            if not dj > 0 or (self.d and not dj < self.d[-1]):
                raise InvalidScheduleError(
                    f"domain points must approach x_P strictly monotonically (index {j})")
            self.d.append(dj)
        return self.d[i - 1]

    def _span(self, i: int) -> Fraction:
        return self._offset(i) - self._offset(i + 1)

    def _range_offset(self, i: int) -> Fraction:
        reg = self.owner.registry
        while len(self.e) < i:
            j = len(self.e) + 1
            yj = reg.y(self._span(j), j)
            self.e.append(yj / 2 if j == 1 else min(yj, self.e[-1]) / 2)
        return self.e[i - 1]

    def ensure(self, depth: int) -> None:
        reg = self.owner.registry
        xP, yP = self.owner.x_P, self.owner.y_P
        grew = False
        while self.depth < depth:
            i = self.depth + 1
            delta = self._span(i)
            gamma = self._range_offset(i) - self._range_offset(i + 1)
            if self.sign < 0:
                p, q = xP - self._offset(i), yP - self._range_offset(i)
            else:
                p, q = xP + self._offset(i + 1), yP + self._range_offset(i + 1)
            self.atoms.append(reg.admit(p, q, delta, gamma, i))
            grew = True
        if grew or self._bounds.size != self.depth + 1:
            self._bounds = np.array([float(x) for x in self.domain_points()])

    def domain_points(self) -> list[Fraction]:
        """x_P -/+ d_i for i = 1..depth+1, outermost first."""
        return [self.owner.x_P + self.sign * self._offset(i) for i in range(1, self.depth + 2)]

    def extension(self, n: int) -> TransitionAtom:
        """n-th unit atom beyond the core, n >= 1."""
        atom = self.ext.get(n)
        if atom is None:
            reg = self.owner.registry
            Y = reg.y(1, 1)
            xP, yP = self.owner.x_P, self.owner.y_P
            d1, e1 = self._offset(1), self._range_offset(1)
            if self.sign < 0:
                p, q = xP - d1 - n, yP - e1 - n * Y
            else:
                p, q = xP + d1 + (n - 1), yP + e1 + (n - 1) * Y
            atom = reg.admit(p, q, 1, Y, 1)
            self.ext[n] = atom
        return atom

    def locate(self, u: np.ndarray) -> np.ndarray:
        """Core index 0..depth-1, -n for the n-th extension atom, or depth when beyond the core."""
        b = self._bounds
        if self.sign < 0:
            idx = np.searchsorted(b, u, side="right") - 1
            outside = u < b[0]
            n = np.ceil(b[0] - u)
        else:
            idx = np.searchsorted(-b, -u, side="right") - 1
            outside = u > b[0]
            n = np.ceil(u - b[0])
        idx = np.minimum(idx, self.depth)
        return np.where(outside, -np.maximum(n, 1), idx).astype(np.int64)

    def atom_for(self, code: int) -> TransitionAtom | None:
        if code < 0:
            if not self.owner.extended:
                raise ValueError("point lies left/right of the core; call extend_infinite first")
            return self.extension(-code)
        if code >= self.depth:
            return None
        return self.atoms[code]


class SparsePiecewiseMap:
    """The increasing bijection ``h_P`` assembled from registry atoms."""

    def __init__(self, point, registry: AtomRegistry, depth: int = DEFAULT_DEPTH,
                 left_offsets: Callable[[int], Fraction] | None = None,
                 right_offsets: Callable[[int], Fraction] | None = None,
                 max_depth: int = MAX_DEPTH):
        x, y = point
        self.x_P, self.y_P = dyadic(x), dyadic(y)
        self.registry = registry
        self.extended = False
        self.max_depth = max(max_depth, depth)
        self.left = _Side(-1, self, left_offsets or default_offsets)
        self.right = _Side(+1, self, right_offsets or left_offsets or default_offsets)
        self.left.ensure(depth)
        self.right.ensure(depth)

    @property
    def point(self) -> tuple[Fraction, Fraction]:
        return self.x_P, self.y_P

    @property
    def depth(self) -> int:
        return min(self.left.depth, self.right.depth)

    @property
    def core_atoms(self) -> list[TransitionAtom]:
        return self.left.atoms + self.right.atoms

    @property
    def junctions(self) -> list[tuple[Fraction, Fraction]]:
        """Meeting points (p_{i+1}, q_{i+1}) of consecutive core atoms on both sides."""
        pts = []
        for side in (self.left, self.right):
            for i in range(2, side.depth + 1):
                pts.append((self.x_P + side.sign * side._offset(i),
                            self.y_P + side.sign * side._range_offset(i)))
        return pts

    def gap_bound(self) -> Fraction:
        """|y_P - h(u)| for any u closer to x_P than the deepest materialized atom."""
        return max(self.left._range_offset(self.left.depth + 1),
                   self.right._range_offset(self.right.depth + 1))

    def materialized_atoms(self) -> list[TransitionAtom]:
        return (self.left.atoms + self.right.atoms
                + list(self.left.ext.values()) + list(self.right.ext.values()))

    def deepen(self, depth: int) -> None:
        depth = min(depth, self.max_depth)
        self.left.ensure(depth)
        self.right.ensure(depth)

    # -- evaluation -------------------------------------------------------
    def _groups(self, u: np.ndarray):
        """Yield (mask, atom-or-None) groups covering every u != x_P."""
        xf = float(self.x_P)
        for side, mask in ((self.left, u < xf), (self.right, u > xf)):
            if not np.any(mask):
                continue
            codes = side.locate(u[mask])
            where = np.flatnonzero(mask)
            for code in np.unique(codes):
                sel = np.zeros_like(mask)
                sel[where[codes == code]] = True
                yield sel, side.atom_for(int(code))

    def __call__(self, u, k: int = 0, method: str = "direct") -> np.ndarray:
        """Float values (k = 0) or derivatives of h on an array of abscissae."""
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        out = np.zeros_like(flat)
        if k == 0:
            out[flat == float(self.x_P)] = float(self.y_P)
        for sel, atom in self._groups(flat):
            if atom is None:
                out[sel] = float(self.y_P) if k == 0 else 0.0
            else:
                out[sel] = atom(flat[sel], k, method=method)
        return out.reshape(u.shape)

    def provenance(self, u) -> np.ndarray:
        """Registry index of the atom used at each u, or -1 for the point P."""
        u = np.asarray(u, dtype=float).ravel()
        out = np.full(u.shape, -1, dtype=np.int64)
        for sel, atom in self._groups(u):
            if atom is not None:
                out[sel] = atom.index
        return out

    def exact(self, u: float) -> Fraction:
        value, _ = eval_with_provenance(self, u, deepen=False)
        return value

    def anchored(self, u) -> tuple[np.ndarray, dict, np.ndarray]:
        """Values as exact anchors plus float offsets.

        Returns ``(ids, anchors, offsets)`` with ``h(u[j]) = anchors[ids[j]] +
        offsets[j]`` exactly; id -1 is the anchor ``y_P``.
        """
        u = np.asarray(u, dtype=float).ravel()
        ids = np.full(u.shape, -1, dtype=np.int64)
        off = np.zeros_like(u)
        anchors = {-1: self.y_P}
        for sel, atom in self._groups(u):
            if atom is None:
                continue
            top, o = atom.offsets(u[sel])
            ids[sel] = 2 * atom.index + top
            off[sel] = o
            anchors[2 * atom.index] = atom.q
            anchors[2 * atom.index + 1] = atom.q + atom.gamma
        return ids, anchors, off

    def __repr__(self) -> str:
        return (f"SparsePiecewiseMap(P=({float(self.x_P):g}, {float(self.y_P):g}), "
                f"depth={self.depth}, extended={self.extended})")


def build_core(point, registry: AtomRegistry, depth: int = DEFAULT_DEPTH,
               left_offsets=None, right_offsets=None) -> SparsePiecewiseMap:
    """Core of h_P on [x_P - d_1, x_P + d_1]; the right side mirrors the left by default."""
    return SparsePiecewiseMap(point, registry, depth, left_offsets, right_offsets)


def extend_infinite(h: SparsePiecewiseMap) -> SparsePiecewiseMap:
    """Enable the unit-width atoms that carry h to -inf and +inf (materialized lazily)."""
    if h.depth < 1:
        raise ValueError("core must have depth >= 1")
    h.extended = True
    h.left.extension(1)
    h.right.extension(1)
    return h


def build_map(point, registry: AtomRegistry, depth: int = DEFAULT_DEPTH, **kw) -> SparsePiecewiseMap:
    return extend_infinite(build_core(point, registry, depth, **kw))


def eval_with_provenance(h: SparsePiecewiseMap, u, deepen: bool = True):
    """(exact value, provenance) at u; provenance is a registry index or ``POINT``."""
    uf = float(u)
    if uf == float(h.x_P) and Fraction(uf) == h.x_P:
        return h.y_P, POINT
    side = h.left if uf < float(h.x_P) else h.right
    code = int(side.locate(np.array([uf]))[0])
    while deepen and 0 <= code and code >= side.depth and side.depth < h.max_depth:
        side.ensure(min(side.depth + 8, h.max_depth))
        code = int(side.locate(np.array([uf]))[0])
    atom = side.atom_for(code)
    if atom is None:
        return h.y_P, POINT
    return atom.exact(uf), atom.index


def inverse_eval(h: SparsePiecewiseMap, w, deepen: bool = True):
    """(x, provenance) with h(x) = w."""
    w = Fraction(w)
    if w == h.y_P:
        return float(h.x_P), POINT
    side = h.left if w < h.y_P else h.right
    rho = abs(w - h.y_P)
    e1 = side._range_offset(1)
    if rho > e1:
        if not h.extended:
            raise ValueError("w lies beyond the core range; call extend_infinite first")
        n = math.ceil((rho - e1) / h.registry.y(1, 1))
        atom = side.extension(max(n, 1))
        return atom.inverse(w), atom.index
    while True:
        # atom i (1-based) covers range distances [e_{i+1}, e_i]
        e = [side._range_offset(i) for i in range(1, side.depth + 2)]
        neg = [-v for v in e]
        j = bisect.bisect_right(neg, -rho)       # e_1..e_j >= rho
        if j <= side.depth:
            atom = side.atoms[j - 1]
            return atom.inverse(w), atom.index
        if not deepen or side.depth >= h.max_depth:
            return float(h.x_P), POINT
        side.ensure(min(side.depth + 8, h.max_depth))


def strictly_increasing(h: SparsePiecewiseMap, u) -> tuple[bool, int | None]:
    """Strict monotonicity of h on sorted abscissae, exact where floats tie."""
    u = np.asarray(u, dtype=float)
    if np.any(np.diff(u) <= 0):
        raise ValueError("abscissae must be strictly increasing")
    ids, anchors, off = h.anchored(u)
    same = ids[1:] == ids[:-1]
    bad = np.flatnonzero(same & (np.diff(off) <= 0))
    if bad.size:
        return False, int(bad[0])
    for j in np.flatnonzero(~same):
        a = anchors[ids[j]] + Fraction(float(off[j]))
        b = anchors[ids[j + 1]] + Fraction(float(off[j + 1]))
        if not a < b:
            return False, int(j)
    return True, None


def piece_envelopes(h: SparsePiecewiseMap, k: int, side: str = "left",
                    samples: int = 4097, method: str = "direct") -> np.ndarray:
    """Sampled max |h^(k)| on each core piece, ordered from the outermost piece toward x_P."""
    s = h.left if side == "left" else h.right
    out = []
    for atom in s.atoms:
        a, b = atom.domain
        x = np.linspace(float(a), float(b), samples)
        out.append(np.max(np.abs(atom(x, k, method=method))))
    return np.array(out)


def derivative_audit(h: SparsePiecewiseMap, K: int | None = None, samples: int = 4097,
                     method: str = "direct") -> dict:
    """Sampled max |h^(k)| over every materialized atom, against M_k and (1/i)^k M_k."""
    seq = h.registry.seq
    K = K or h.registry.K_max
    sup = np.zeros(K + 1)
    worst_piece_ratio = 0.0
    for atom in h.materialized_atoms():
        a, b = atom.domain
        x = np.linspace(float(a), float(b), samples)
        for k in range(1, K + 1):
            m = float(np.max(np.abs(atom(x, k, method=method))))
            sup[k] = max(sup[k], m)
            log_target = -k * math.log(atom.i) + seq.log_prefix[k]
            if m > 0:
                worst_piece_ratio = max(worst_piece_ratio, math.exp(math.log(m) - log_target))
    ratios = sup[1:] / seq.prefix[1: K + 1]
    return {
        "sup_norms": sup[1:].tolist(),
        "ratio_to_M": ratios.tolist(),
        "max_ratio_to_M": float(np.max(ratios)),
        "max_piece_ratio": worst_piece_ratio,
        "passed": bool(np.all(ratios <= 1 + 1e-9) and worst_piece_ratio <= 1 + 1e-9),
    }


def sparseness_report(points: Iterable, queries: Iterable[float], registry: AtomRegistry,
                      depth: int = DEFAULT_DEPTH, audit: bool = True) -> dict:
    """Provenance of every value h_P(u), u != x_P, and every preimage h_P^{-1}(u), u != y_P."""
    points = [tuple(p) for p in points]
    queries = [float(u) for u in queries]
    rows, inverse_rows = [], []
    maps = []
    misses = 0
    for P in points:
        h = build_map(P, registry, depth)
        maps.append(h)
        for u in queries:
            if Fraction(u) != h.x_P:
                value, prov = eval_with_provenance(h, u)
                ok = prov != POINT and registry[prov].exact(u) == value
                misses += not ok
                rows.append({"point": [float(P[0]), float(P[1])], "u": u,
                             "value": float(value), "provenance": prov if ok else None})
            if Fraction(u) != h.y_P:
                x, prov = inverse_eval(h, u)
                ok = prov != POINT
                misses += not ok
                inverse_rows.append({"point": [float(P[0]), float(P[1])], "w": u,
                                     "x": x, "provenance": prov if ok else None})
    report = {
        "points": len(points),
        "queries": len(queries),
        "rows": rows,
        "inverse_rows": inverse_rows,
        "pairs": len(rows),
        "registry_size": len(registry),
        "distinct_atoms_used": len({r["provenance"] for r in rows + inverse_rows}),
        "provenance_misses": misses,
        "all_resolved": misses == 0,
    }
    if audit:
        audits = [derivative_audit(h) for h in maps]
        report["derivative_audit"] = {
            "max_ratio_to_M": max((a["max_ratio_to_M"] for a in audits), default=0.0),
            "max_piece_ratio": max((a["max_piece_ratio"] for a in audits), default=0.0),
            "passed": all(a["passed"] for a in audits),
        }
    return report


def export_samples_csv(h: SparsePiecewiseMap, path, u) -> None:
    import csv
    u = np.asarray(u, dtype=float)
    vals = h(u)
    prov = h.provenance(u)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "h", "provenanceIndex"])
        for a, b, c in zip(u, vals, prov):
            w.writerow([repr(float(a)), repr(float(b)), int(c)])
