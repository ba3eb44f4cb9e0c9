"""Weight sequences {M_k}, their log-convex minorants and Carleman sums.

Everything is held in log space: ``k!`` overflows a double near k = 171 and
Gevrey weights much earlier, while the hull and the ratios
``M_{k-1}/M_k`` only ever need differences of logarithms.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln

QUASI_ANALYTIC = "quasi-analytic"
NON_QUASI_ANALYTIC = "non-quasi-analytic"
UNDETERMINED = "undetermined"

EXACT_RULE = "exact-rule"
HEURISTIC_TAIL = "heuristic-tail"

CLOSED_FORMS = ("factorial", "gevrey", "power")

# shortest prefix the tail-ratio heuristic will look at
MIN_HEURISTIC_LENGTH = 16

REGISTRY_ENV = "DCSPARSE_REGISTRY"


class InvalidSequenceError(ValueError):
    """A weight sequence with a non-positive, non-finite or too short prefix."""


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """A positive sequence M_0..M_K, either a closed form or a raw prefix.

    ``kind`` is one of ``factorial`` (M_k = k!), ``gevrey`` (M_k = (k!)^s),
    ``power`` (M_k = c^k) or ``custom``.  Only the logarithms are stored;
    :attr:`prefix` exponentiates on demand and may contain ``inf`` for very
    long closed-form prefixes.
    """

    kind: str
    log_prefix: np.ndarray
    param: float | None = None
    name: str | None = None

    def __post_init__(self):
        logs = np.asarray(self.log_prefix, dtype=float)
        if logs.ndim != 1 or logs.size < 3:
            raise InvalidSequenceError("a weight sequence needs K >= 2")
        if not np.all(np.isfinite(logs)):
            raise InvalidSequenceError("every M_k must be positive and finite")
        if self.kind not in CLOSED_FORMS + ("custom",):
            raise InvalidSequenceError(f"unknown kind {self.kind!r}")
        logs.setflags(write=False)
        object.__setattr__(self, "log_prefix", logs)

    # -- constructors -----------------------------------------------------
    @classmethod
    def factorial(cls, K: int = 64) -> "WeightSequence":
        return cls("factorial", gammaln(np.arange(K + 1) + 1.0), name="factorial")

    @classmethod
    def gevrey(cls, s: float, K: int = 64) -> "WeightSequence":
        if s <= 0:
            raise InvalidSequenceError("Gevrey order must be positive")
        logs = s * gammaln(np.arange(K + 1) + 1.0)
        return cls("gevrey", logs, param=float(s), name=f"gevrey({s:g})")

    @classmethod
    def power(cls, c: float, K: int = 64) -> "WeightSequence":
        if not c > 0:
            raise InvalidSequenceError("power base must be positive")
        return cls("power", np.arange(K + 1) * math.log(c), param=float(c),
                   name=f"power({c:g})")

    @classmethod
    def custom(cls, values: Iterable[float], name: str | None = None) -> "WeightSequence":
        vals = np.asarray(list(values), dtype=float)
        if vals.size < 3:
            raise InvalidSequenceError("a weight sequence needs K >= 2")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise InvalidSequenceError("every M_k must be positive and finite")
        return cls("custom", np.log(vals), name=name or "custom")

    @classmethod
    def from_logs(cls, logs: Iterable[float], name: str | None = None) -> "WeightSequence":
        return cls("custom", np.asarray(list(logs), dtype=float), name=name or "custom")

    # -- accessors --------------------------------------------------------
    @property
    def K(self) -> int:
        return self.log_prefix.size - 1

    @property
    def prefix(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_prefix)

    def __len__(self) -> int:
        return self.log_prefix.size

    def __getitem__(self, k):
        with np.errstate(over="ignore"):
            return np.exp(self.log_prefix[k])

    @property
    def is_closed_form(self) -> bool:
        return self.kind in CLOSED_FORMS

    def extended(self, K: int) -> "WeightSequence":
        """The same closed form materialized to index ``K`` (no-op if already long enough)."""
        if K <= self.K:
            return self
        if self.kind == "factorial":
            return WeightSequence.factorial(K)
        if self.kind == "gevrey":
            return WeightSequence.gevrey(self.param, K)
        if self.kind == "power":
            return WeightSequence.power(self.param, K)
        raise InvalidSequenceError(
            f"custom prefix has K = {self.K}; index {K} is not materialized")

    def log_ratios(self) -> np.ndarray:
        """ln(M_{k-1}/M_k) for k = 1..K, in closed form where one exists."""
        k = np.arange(1, self.K + 1, dtype=float)
        if self.kind == "factorial":
            return -np.log(k)
        if self.kind == "gevrey":
            return -self.param * np.log(k)
        if self.kind == "power":
            return np.full(self.K, -math.log(self.param))
        return self.log_prefix[:-1] - self.log_prefix[1:]

    def __repr__(self) -> str:
        return f"WeightSequence({self.name or self.kind}, K={self.K})"


@dataclass(frozen=True, eq=False)
class ConvexifiedSequence:
    source: WeightSequence
    log_minorant: np.ndarray
    hull_vertices: np.ndarray

    @property
    def minorant(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_minorant)

    @property
    def K(self) -> int:
        return self.log_minorant.size - 1

    @property
    def is_source(self) -> bool:
        """True when every index is a hull vertex, i.e. the source was already log-convex."""
        return self.hull_vertices.size == self.log_minorant.size

    def as_sequence(self) -> WeightSequence:
        return WeightSequence.from_logs(self.log_minorant, name=f"convex({self.source.name})")

    def log_ratios(self) -> np.ndarray:
        """ln(M'_{k-1}/M'_k) for k = 1..K."""
        if self.is_source:
            return self.source.log_ratios()
        # constant on each hull segment: minus the segment slope
        v = self.hull_vertices
        y = self.log_minorant[v]
        slopes = (y[1:] - y[:-1]) / (v[1:] - v[:-1])
        seg = np.searchsorted(v, np.arange(1, self.K + 1), side="left") - 1
        return -slopes[seg]


@dataclass(frozen=True)
class CarlemanVerdict:
    verdict: str
    partial_sum: float
    basis: str
    K: int
    tail_exponent: float | None = None


def lower_hull(y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of the points (k, y_k), k = 0..n-1.

    Andrew's monotone chain; collinear interior points are dropped so only
    segment endpoints remain.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n <= 2:
        return np.arange(n)
    # fast path: strictly convex input keeps every point; the expression is the
    # same cross product the chain below evaluates for consecutive triples
    cross = (y[2:] - y[:-2]) - (y[1:-1] - y[:-2]) * 2.0
    if np.all(cross > 0):
        return np.arange(n)
    hull: list[int] = []
    for k in range(n):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            if (a - o) * (y[k] - y[o]) - (y[a] - y[o]) * (k - o) <= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    return np.asarray(hull)


def log_convexify(seq: WeightSequence) -> ConvexifiedSequence:
    """Largest log-convex minorant: exp of the lower hull of (k, ln M_k)."""
    if not isinstance(seq, WeightSequence):
        seq = WeightSequence.custom(seq)
    logs = seq.log_prefix
    vertices = lower_hull(logs)
    if vertices.size == logs.size:
        minorant = logs.copy()
    else:
        minorant = np.interp(np.arange(logs.size), vertices, logs[vertices])
        # points already on a chord up to rounding keep their own value, so a
        # second pass reproduces the minorant bit for bit
        on_chord = np.abs(minorant - logs) <= 1e-12 * np.maximum(1.0, np.abs(logs))
        minorant[on_chord] = logs[on_chord]
    minorant.setflags(write=False)
    return ConvexifiedSequence(seq, minorant, vertices)


def carleman_partial_sum(conv: ConvexifiedSequence, K: int) -> float:
    """Sum of M'_{k-1}/M'_k for k = 1..K."""
    if not 0 <= K <= conv.K:
        raise IndexError(f"K = {K} outside 0..{conv.K}")
    if K == 0:
        return 0.0
    terms = np.exp(conv.log_ratios()[:K])
    return float(math.fsum(terms))


def _tail_exponent(conv: ConvexifiedSequence) -> float:
    """Fit ln r_k = a - g ln k over the last quartile; r_k ~ k^-g."""
    K = conv.K
    k = np.arange(1, K + 1)
    tail = k >= K - K // 4
    g, _ = np.polyfit(np.log(k[tail]), conv.log_ratios()[tail], 1)
    return float(-g)


def classify(seq: WeightSequence) -> CarlemanVerdict:
    """Quasi-analyticity of C{M_k} (equivalently C_loc{M_k}).

    Closed forms use the exact convergence rule for sum M'_{k-1}/M'_k.  A
    custom prefix only gets a heuristic: the tail ratios are fitted to
    k^-g; g <= 1.05 is read as divergence, g >= 1.25 as convergence, and
    anything between (or a prefix shorter than 16) is left undetermined.
    """
    conv = log_convexify(seq)
    total = carleman_partial_sum(conv, conv.K)
    if seq.kind == "factorial":
        return CarlemanVerdict(QUASI_ANALYTIC, total, EXACT_RULE, conv.K)
    if seq.kind == "gevrey":
        verdict = NON_QUASI_ANALYTIC if seq.param > 1 else QUASI_ANALYTIC
        return CarlemanVerdict(verdict, total, EXACT_RULE, conv.K)
    if seq.kind == "power":
        return CarlemanVerdict(QUASI_ANALYTIC, total, EXACT_RULE, conv.K)

    if conv.K + 1 < MIN_HEURISTIC_LENGTH:
        return CarlemanVerdict(UNDETERMINED, total, HEURISTIC_TAIL, conv.K)
    g = _tail_exponent(conv)
    if g <= 1.05:
        verdict = QUASI_ANALYTIC
    elif g >= 1.25:
        verdict = NON_QUASI_ANALYTIC
    else:
        verdict = UNDETERMINED
    return CarlemanVerdict(verdict, total, HEURISTIC_TAIL, conv.K, tail_exponent=g)


# -- registry -------------------------------------------------------------

DEFAULT_REGISTRY = [
    {"name": "factorial", "kind": "factorial", "params": {}, "K": 64},
    {"name": "gevrey1.5", "kind": "gevrey", "params": {"s": 1.5}, "K": 64},
    {"name": "gevrey2", "kind": "gevrey", "params": {"s": 2.0}, "K": 64},
    {"name": "gevrey3", "kind": "gevrey", "params": {"s": 3.0}, "K": 64},
    {"name": "power2", "kind": "power", "params": {"c": 2.0}, "K": 64},
]


def sequence_from_entry(entry: dict) -> WeightSequence:
    kind = entry["kind"]
    params = entry.get("params", {}) or {}
    K = int(entry.get("K", 64))
    name = entry.get("name")
    if kind == "factorial":
        seq = WeightSequence.factorial(K)
    elif kind == "gevrey":
        seq = WeightSequence.gevrey(float(params["s"]), K)
    elif kind == "power":
        seq = WeightSequence.power(float(params["c"]), K)
    elif kind == "custom":
        seq = WeightSequence.custom(params["prefix"], name=name)
    else:
        raise InvalidSequenceError(f"unknown kind {kind!r} in registry entry {name!r}")
    if name:
        object.__setattr__(seq, "name", name)
    return seq


def load_registry(path: str | os.PathLike | None = None) -> dict[str, WeightSequence]:
    """Weight families by name; ``path`` (or $DCSPARSE_REGISTRY) points at a JSON list."""
    path = path or os.environ.get(REGISTRY_ENV)
    entries = DEFAULT_REGISTRY
    if path:
        with open(path) as fh:
            entries = json.load(fh)
        if isinstance(entries, dict):
            entries = entries.get("sequences", [])
    return {e["name"]: sequence_from_entry(e) for e in entries}
