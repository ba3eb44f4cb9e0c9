"""Envelope fits ``||f^(k)|| <= beta B^k M_k`` on a compact interval.

The existential pair (beta, B) is canonicalized by fixing B and taking the
least beta; sweeping B is left to the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .weights import WeightSequence

FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DerivativeNormProfile:
    norms: np.ndarray
    interval: tuple[float, float] | None = None
    source: str = "analytic formula"
    refinement: np.ndarray | None = None

    def __post_init__(self):
        norms = np.asarray(self.norms, dtype=float)
        if norms.ndim != 1 or np.any(norms < 0) or not np.all(np.isfinite(norms)):
            raise ValueError("norms must be finite and nonnegative")
        object.__setattr__(self, "norms", norms)

    @property
    def K(self) -> int:
        return self.norms.size - 1

    @property
    def converged(self) -> bool:
        return self.refinement is None or bool(np.all(self.refinement < 1e-3))


@dataclass(frozen=True, eq=False)
class EnvelopeFit:
    beta: float
    B: float
    slack: float
    per_order_slack: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.slack >= -FEASIBILITY_TOL

    @property
    def worst_order(self) -> int:
        return int(np.argmin(self.per_order_slack))

    @property
    def first_violation(self) -> int | None:
        bad = np.flatnonzero(self.per_order_slack < -FEASIBILITY_TOL)
        return int(bad[0]) if bad.size else None


def _norms(profile) -> np.ndarray:
    if isinstance(profile, DerivativeNormProfile):
        return profile.norms
    return DerivativeNormProfile(profile).norms


def _log_weights(seq, n: int) -> np.ndarray:
    if isinstance(seq, WeightSequence):
        if seq.K + 1 < n:
            seq = seq.extended(n - 1)
        return seq.log_prefix[:n]
    return np.log(np.asarray(seq, dtype=float)[:n])


def _log_ratios(d: np.ndarray, seq, B: float) -> np.ndarray:
    """ln(d_k / (B^k M_k)), -inf where d_k = 0."""
    k = np.arange(d.size)
    with np.errstate(divide="ignore"):
        return np.log(d) - k * math.log(B) - _log_weights(seq, d.size)


def check_membership(profile, seq, beta: float, B: float) -> EnvelopeFit:
    """Slack ``min_k ln(beta B^k M_k) - ln d_k``; feasible iff slack >= -1e-12."""
    if not (beta > 0 and B > 0):
        raise ValueError("beta and B must be positive")
    d = _norms(profile)
    per = math.log(beta) - _log_ratios(d, seq, B)
    return EnvelopeFit(float(beta), float(B), float(np.min(per)), per)


def minimal_beta(profile, seq, B: float) -> float:
    """Least beta with d_k <= beta B^k M_k for all k."""
    if not B > 0:
        raise ValueError("B must be positive")
    r = _log_ratios(_norms(profile), seq, B)
    top = float(np.max(r))
    if top == -math.inf:
        raise ValueError("zero profile: every positive beta works")
    return math.exp(top)


def extend_low_orders(profile, seq, N: int, beta: float, B: float) -> float:
    """beta~ = max(beta, max_{k<N} d_k / (B^k M_k)), valid for every order once k >= N holds."""
    if N <= 0:
        return float(beta)
    r = _log_ratios(_norms(profile)[:N], seq, B)
    beta2 = math.exp(float(np.max(r))) if np.max(r) > -math.inf else 0.0
    return max(float(beta), beta2)


def fit_envelope(profile, seq, B_grid) -> list[EnvelopeFit]:
    """Minimal beta for each B of a sweep."""
    return [check_membership(profile, seq, minimal_beta(profile, seq, B), B) for B in B_grid]


def measure_norms(f: Callable, interval, K: int, density: int = 10001) -> DerivativeNormProfile:
    """Grid sup-norms of f^(k), k = 0..K, for a handle ``f(x, k)``.

    Also evaluated on the nested grid of half the density; ``refinement``
    holds the relative change per order.
    """
    a, b = map(float, interval)
    fine = np.linspace(a, b, density)
    norms, change = np.zeros(K + 1), np.zeros(K + 1)
    for k in range(K + 1):
        try:
            v = np.abs(np.asarray(f(fine, k), dtype=float))
        except ValueError as exc:
            raise ValueError(f"handle does not support derivative order {k}") from exc
        v = np.broadcast_to(v, fine.shape)
        hi, lo = float(np.max(v)), float(np.max(v[::2]))
        norms[k] = hi
        change[k] = 0.0 if hi == 0 else (hi - lo) / hi
    return DerivativeNormProfile(norms, (a, b), "sampled grid", change)


ANALYTIC = {
    "sin": lambda x, k: np.sin(np.asarray(x) + k * math.pi / 2),
    "cos": lambda x, k: np.cos(np.asarray(x) + k * math.pi / 2),
    "exp": lambda x, k: np.exp(np.asarray(x)),
}


def constant(c: float) -> Callable:
    return lambda x, k: np.full(np.shape(x), float(c)) if k == 0 else np.zeros(np.shape(x))
