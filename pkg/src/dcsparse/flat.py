"""Flat bump and transition functions with certified derivative bounds.

A bump on ``(l, r)`` is a scaled box cascade

    b = c * (1_[w_0] * phi_{a_1} * ... * phi_{a_J})   (centred on the interval)

with ``w_0 + a_1 + ... + a_J = r - l``.  Differentiating a moving average of
window ``a`` turns it into a centred difference divided by ``a``, and a
cascade of averages of an indicator never exceeds 1, so

    ||b^(k)|| <= c * 2^k / (a_1 ... a_k).

Choosing ``a_j ~ (2/eps) M'_{j-1}/M'_j`` (capped so the widths fit) and the
largest admissible amplitude ``c`` yields ``||b^(k)|| <= eps^k M_k`` for every
``k <= K_max``; the certificate is arithmetic, not sampled.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .piecewise import PiecewisePolynomial, box_cascades
from .weights import QUASI_ANALYTIC, WeightSequence, classify, log_convexify

DEFAULT_K_MAX = 8

# normalized widths live on the grid 2^-WIDTH_BITS so every breakpoint sum is an exact double
WIDTH_BITS = 50

# keeps the float amplitude strictly inside the certificate after rounding
AMPLITUDE_SHAVE = 1e-12


class SynthesisError(RuntimeError):
    """No admissible width schedule or amplitude for the requested bump."""


def _fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True, eq=False)
class FlatSpline:
    """A bump ``b`` with compact support ``[l, r]`` and certified derivative bounds.

    ``widths`` and ``base_width`` are exact rationals in the units of the
    interval; ``bound_table[k]`` is the target ``eps^k M_k``.
    """

    interval: tuple[Fraction, Fraction]
    epsilon: float
    widths: tuple[Fraction, ...]
    base_width: Fraction
    amplitude: float
    certified_order: int
    bound_table: np.ndarray
    sequence_name: str = ""
    _cascades: tuple[PiecewisePolynomial, ...] = field(default=(), repr=False)

    @property
    def J(self) -> int:
        return len(self.widths)

    @cached_property
    def length(self) -> float:
        return float(self.interval[1] - self.interval[0])

    @cached_property
    def center(self) -> float:
        return float((self.interval[0] + self.interval[1]) / 2)

    @cached_property
    def _antiderivative(self) -> PiecewisePolynomial:
        return self._cascades[0].antiderivative()

    def _normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.center) / self.length

    def analytic_bounds(self) -> np.ndarray:
        """``c * 2^k / (a_1 ... a_k)`` for k = 0..K_max."""
        logs = np.log([float(a) for a in self.widths[: self.certified_order]])
        k = np.arange(self.certified_order + 1)
        log_prod = np.concatenate([[0.0], np.cumsum(logs)])
        return self.amplitude * np.exp(k * math.log(2.0) - log_prod)

    def certificate_holds(self) -> bool:
        """Exact rational check of ``c 2^k <= eps^k M_k a_1...a_k`` for every certified k."""
        c = Fraction(self.amplitude)
        prod = Fraction(1)
        for k in range(self.certified_order + 1):
            if k:
                prod *= self.widths[k - 1]
            if c * 2**k > Fraction(float(self.bound_table[k])) * prod:
                return False
        return True

    def integral(self) -> float:
        """``int b`` = c * w_0 (every normalized box kernel integrates to one)."""
        return self.amplitude * self.length * self._antiderivative.right

    def __call__(self, x, k: int = 0, method: str = "telescoping") -> np.ndarray:
        return eval_bump(self, x, k, method=method)

    def primitive(self, x) -> np.ndarray:
        """``int_l^x b``."""
        return self.amplitude * self.length * self._antiderivative(self._normalize(x))

    def co_primitive(self, x) -> np.ndarray:
        """``int_x^r b``, accurate where it is tiny (uses the symmetry of b)."""
        return self.amplitude * self.length * self._antiderivative(-self._normalize(x))

    def certificate_report(self) -> dict:
        analytic = self.analytic_bounds()
        target = np.asarray(self.bound_table, dtype=float)
        return {
            "interval": [str(self.interval[0]), str(self.interval[1])],
            "epsilon": self.epsilon,
            "sequence": self.sequence_name,
            "J": self.J,
            "certifiedOrder": self.certified_order,
            "widths": [float(a) for a in self.widths],
            "baseWidth": float(self.base_width),
            "amplitude": self.amplitude,
            "boundTable": target.tolist(),
            "analyticBounds": analytic.tolist(),
            "marginPerOrder": (np.log(target) - np.log(analytic)).tolist(),
            "certificateHolds": self.certificate_holds(),
        }


def _width_schedule(conv, epsilon: float, length: float, J: int) -> list[Fraction]:
    """Normalized widths min((2/eps) M'_{j-1}/M'_j, 2^{-j-1} |I|) / |I|, rounded down to the grid."""
    ratios = np.exp(conv.log_ratios()[:J])
    scale = 2**WIDTH_BITS
    out = []
    for j in range(1, J + 1):
        with np.errstate(over="ignore"):      # an infinite uncapped width just loses to the cap
            uncapped = (2.0 / epsilon) * ratios[j - 1] / length
        hat = min(uncapped, 2.0 ** (-j - 1))
        q = math.floor(hat * scale)
        if q <= 0:
            raise SynthesisError(
                f"width a_{j} underflows ({hat:.3g} of the interval); "
                f"interval too narrow for K_max at this epsilon")
        out.append(Fraction(q, scale))
    return out


def make_bump(interval, epsilon: float, seq: WeightSequence,
              K_max: int = DEFAULT_K_MAX) -> FlatSpline:
    """Bump positive exactly on ``interval`` with ``||b^(k)|| <= eps^k M_k`` for k <= K_max."""
    left, right = (_fraction(v) for v in interval)
    if not right > left:
        raise ValueError("interval must be nondegenerate")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if K_max < 1:
        raise ValueError("K_max must be at least 1")
    J = K_max + 2
    if seq.K < J:
        seq = seq.extended(J)
    if seq.is_closed_form and classify(seq).verdict == QUASI_ANALYTIC:
        raise ValueError(f"{seq.name} is quasi-analytic: no flat bumps exist in that class")

    conv = log_convexify(seq)
    L = right - left
    Lf = float(L)
    hats = _width_schedule(conv, float(epsilon), Lf, J)
    base_hat = 1 - sum(hats)
    if base_hat <= 0:
        raise SynthesisError("width schedule leaves no room for the base box")

    widths = tuple(h * L for h in hats)
    log_eps = math.log(epsilon)
    log_bounds = np.arange(K_max + 1) * log_eps + seq.log_prefix[: K_max + 1]
    log_widths = np.log([float(a) for a in widths[:K_max]])
    k = np.arange(K_max + 1)
    log_c = np.min(log_bounds + np.concatenate([[0.0], np.cumsum(log_widths)]) - k * math.log(2.0))
    amplitude = math.exp(log_c) * (1.0 - AMPLITUDE_SHAVE)
    if not (amplitude > 0 and math.isfinite(amplitude)):
        raise SynthesisError(f"amplitude exp({log_c:.1f}) is not representable")

    cascades = box_cascades(float(base_hat), tuple(float(h) for h in hats))
    spline = FlatSpline(
        interval=(left, right),
        epsilon=float(epsilon),
        widths=widths,
        base_width=base_hat * L,
        amplitude=amplitude,
        certified_order=K_max,
        bound_table=np.exp(log_bounds),
        sequence_name=seq.name or seq.kind,
        _cascades=cascades,
    )
    if not spline.certificate_holds():
        raise SynthesisError("amplitude certificate failed after rounding")
    return spline


def _sign_offsets(hats: list[float]) -> tuple[np.ndarray, np.ndarray]:
    k = len(hats)
    if k == 0:
        return np.ones(1), np.zeros(1)
    sig = np.array(list(itertools.product((1.0, -1.0), repeat=k)))
    return np.prod(sig, axis=1), sig @ (np.asarray(hats) / 2)


def eval_bump(spline: FlatSpline, x, k: int = 0, method: str = "telescoping") -> np.ndarray:
    """``b^(k)(x)``.

    ``telescoping`` peels the first k kernels into a 2^k-term signed sum of
    shifted evaluations of the remaining cascade; ``direct`` differentiates
    the full piecewise polynomial.  Both are exact up to rounding.
    """
    if not 0 <= k <= spline.J - 2:
        raise ValueError(f"derivative order {k} exceeds cascade smoothness (J - 2 = {spline.J - 2})")
    xh = spline._normalize(x)
    # b is even about the centre; the local expansions are anchored at left
    # breakpoints, so the right half is evaluated by reflection where the
    # tiny values near the right end would otherwise cancel
    parity = np.where(xh > 0, (-1.0) ** k, 1.0)
    xh = -np.abs(xh)
    scale = spline.amplitude / spline.length**k
    if method == "direct":
        return parity * scale * spline._cascades[0](xh, nu=k)
    if method != "telescoping":
        raise ValueError(f"unknown method {method!r}")
    hats = [float(a) / spline.length for a in spline.widths[:k]]
    signs, offsets = _sign_offsets(hats)
    vals = spline._cascades[k](xh[..., None] + offsets)
    return parity * (scale / math.prod(hats) * (vals @ signs) if k else scale * vals[..., 0])


class HughesConstants(NamedTuple):
    D: float
    rho: float
    lam: float
    L1: float


def hughes_lambda(seq: WeightSequence, epsilon: float, tail_depth: int) -> HughesConstants:
    """Constants of the reference flat-function construction.

    Uses L_1 = 8 M_0 / eps and L_n = M_n otherwise,
    D = sum_{n=2}^{T} (L_{n-1}/L_n) (sum_{k=n}^{T} L_{k-1}/L_k)^{-1/2},
    rho = eps / (8 D), lam = L_0/L_1 + rho D (which is eps/4).
    """
    if tail_depth < 2:
        raise ValueError("tail_depth must be at least 2")
    if seq.is_closed_form and classify(seq).verdict == QUASI_ANALYTIC:
        raise ValueError(f"{seq.name} is quasi-analytic")
    seq = seq.extended(tail_depth)
    if seq.K < tail_depth:
        raise IndexError("tail_depth beyond the materialized prefix")
    logL = np.array(seq.log_prefix[: tail_depth + 1], dtype=float)
    logL[1] = math.log(8.0) + seq.log_prefix[0] - math.log(epsilon)
    ratios = np.exp(logL[:-1] - logL[1:])          # L_{n-1}/L_n, n = 1..T
    tails = np.cumsum(ratios[::-1])[::-1]          # sum_{k=n}^{T}, n = 1..T
    if np.any(tails[1:] <= 0):
        raise ZeroDivisionError("tail sum vanishes")
    D = float(np.sum(ratios[1:] / np.sqrt(tails[1:])))
    if D == 0.0:
        raise ZeroDivisionError("D vanishes")
    rho = epsilon / (8.0 * D)
    lam = float(ratios[0] + rho * D)
    return HughesConstants(D, rho, lam, float(math.exp(logL[1])))


@dataclass(frozen=True, eq=False)
class TransitionFunction:
    """Increasing ``s`` on ``[l, r]`` with ``s' = b / rescale`` and ``s(l) = 0``."""

    spline: FlatSpline
    rescale: float
    end_value: float
    flat_index: int

    @property
    def interval(self):
        return self.spline.interval

    @property
    def epsilon(self) -> float:
        return self.spline.epsilon

    @property
    def certified_order(self) -> int:
        return self.spline.certified_order

    def lower(self, x) -> np.ndarray:
        """``s(x)``, relatively accurate near the left end."""
        return self.spline.primitive(x) / self.rescale

    def upper(self, x) -> np.ndarray:
        """``y - s(x)``, relatively accurate near the right end."""
        return self.spline.co_primitive(x) / self.rescale

    def __call__(self, x, k: int = 0, method: str = "telescoping") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if k == 0:
            left_half = x <= self.spline.center
            return np.where(left_half, self.lower(x), self.end_value - self.upper(x))
        return self.spline(x, k - 1, method=method) / self.rescale

    def bounds(self) -> np.ndarray:
        """Certified ``||s^(k)||`` for k = 0..K_max."""
        b = self.spline.analytic_bounds()[: self.certified_order] / self.rescale
        return np.concatenate([[self.end_value], b])


def _flat_index(seq: WeightSequence, epsilon: float, top: int) -> int:
    """Least N with M_{k-1}/M_k < eps for every N <= k <= top."""
    log_r = seq.log_ratios()[:top]
    N = top + 1
    for k in range(top, 0, -1):
        if log_r[k - 1] < math.log(epsilon):
            N = k
        else:
            break
    return N


def make_transition(delta, i: int, seq: WeightSequence,
                    K_max: int = DEFAULT_K_MAX) -> TransitionFunction:
    """``s_{delta,i}`` on ``[0, delta]`` with flatness ``eps = 1/i``."""
    delta = _fraction(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if int(i) != i or i < 1:
        raise ValueError("i must be a positive integer")
    eps = 1.0 / i
    spline = make_bump((Fraction(0), delta), eps, seq, K_max)
    seq = seq.extended(K_max + 2)

    top = K_max + 1
    N = _flat_index(seq, eps, top)
    raw_end = spline.integral()
    # certified ||s_0^(k)||: s_0 itself peaks at the right end, s_0^(k) = b^(k-1)
    cert = np.concatenate([[raw_end], spline.analytic_bounds()])
    targets = np.exp(np.arange(top + 1) * math.log(eps) + seq.log_prefix[: top + 1])
    A = float(np.max(cert[:N] / targets[:N]))
    rescale = max(1.0, A)
    if np.any(cert[: K_max + 1] / rescale > targets[: K_max + 1] * (1 + 1e-12)):
        raise SynthesisError("rescaled transition violates its bound table")
    return TransitionFunction(spline, rescale, raw_end / rescale, N)


def end_value(t: TransitionFunction) -> float:
    return t.end_value


def strictly_increasing(t: TransitionFunction, x) -> bool:
    """Strict monotonicity of ``s`` on sorted samples ``x``.

    Near the right end ``s`` differs from its end value by less than one ulp,
    so there the check runs on ``y - s`` (strictly decreasing) instead.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("samples must be strictly increasing")
    left = x <= t.spline.center
    lo, hi = t.lower(x[left]), t.upper(x[~left])
    ok = bool(np.all(np.diff(lo) > 0) and np.all(np.diff(hi) < 0))
    if lo.size and hi.size:
        ok = ok and lo[-1] < t.end_value - hi[0]
    return ok


def export_samples_csv(func, path, x, orders) -> None:
    """Write ``x, f(x), f'(x), ...`` columns for a function taking ``(x, k)``."""
    x = np.asarray(x, dtype=float)
    cols = [func(x, k) for k in orders]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"d{k}" for k in orders])
        for row in zip(x, *cols):
            w.writerow([repr(float(v)) for v in row])
