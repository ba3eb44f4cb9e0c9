"""Exact piecewise polynomials for cascades of box (moving-average) filters.

A cascade ``1_[-w/2, w/2] * phi_{a_1} * ... * phi_{a_J}`` with
``phi_a = 1_[-a/2, a/2] / a`` is a piecewise polynomial of degree J.  It is
built one kernel at a time: a moving average of window ``a`` equals the
centred difference ``(G(x + a/2) - G(x - a/2)) / a`` of the antiderivative
``G``, and both the antiderivative and the shifted difference are exact
operations on local Taylor coefficients.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np


def taylor_shift(coeffs: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Re-expand rows of local coefficients about ``origin + d``.

    ``coeffs[i, p]`` multiplies ``(x - o_i)**p``; the result multiplies
    ``(x - o_i - d_i)**p``.  Repeated synthetic division, which stays well
    conditioned when ``d`` lies inside the piece.
    """
    out = np.array(coeffs, dtype=float, copy=True)
    n = out.shape[1]
    d = np.asarray(d, dtype=float)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[:, j] += d * out[:, j + 1]
    return out


class PiecewisePolynomial:
    """Piecewise polynomial in local Taylor form.

    Zero to the left of ``breaks[0]``, the constant ``right`` from
    ``breaks[-1]`` on, and ``sum_p coeffs[i, p] (x - breaks[i])**p`` on
    ``[breaks[i], breaks[i+1])``.
    """

    def __init__(self, breaks, coeffs, right: float = 0.0):
        self.breaks = np.asarray(breaks, dtype=float)
        self.coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        self.right = float(right)
        if self.coeffs.shape[0] != self.breaks.size - 1:
            raise ValueError("need one coefficient row per piece")
        self._deriv_cache: dict[int, np.ndarray] = {}

    @classmethod
    def box(cls, width: float) -> "PiecewisePolynomial":
        return cls([-width / 2, width / 2], [[1.0]])

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n_pieces(self) -> int:
        return self.coeffs.shape[0]

    def _derivative_coeffs(self, nu: int) -> np.ndarray:
        if nu not in self._deriv_cache:
            D = self.coeffs.shape[1]
            if nu >= D:
                c = np.zeros((self.n_pieces, 1))
            else:
                p = np.arange(D - nu)
                fall = np.array([factorial(q + nu) / factorial(q) for q in p])
                c = self.coeffs[:, nu:] * fall
            self._deriv_cache[nu] = c
        return self._deriv_cache[nu]

    def __call__(self, x, nu: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros_like(flat)
        idx = np.searchsorted(self.breaks, flat, side="right") - 1
        n = self.n_pieces
        if nu == 0 and self.right != 0.0:
            out[idx >= n] = self.right
        inside = (idx >= 0) & (idx < n)
        if np.any(inside):
            c = self._derivative_coeffs(nu)
            ii = idx[inside]
            dx = flat[inside] - self.breaks[ii]
            val = c[ii, -1].copy()
            for p in range(c.shape[1] - 2, -1, -1):
                val *= dx
                val += c[ii, p]
            out[inside] = val
        return out.reshape(x.shape)

    def antiderivative(self) -> "PiecewisePolynomial":
        """Integral from -inf; requires zero right tail so the result is bounded."""
        if self.right != 0.0:
            raise ValueError("antiderivative of a function with a nonzero tail is unbounded")
        n, D = self.coeffs.shape
        new = np.zeros((n, D + 1))
        new[:, 1:] = self.coeffs / np.arange(1, D + 1)
        lengths = np.diff(self.breaks)
        piece = new[:, -1].copy()
        for p in range(D - 1, 0, -1):
            piece = piece * lengths + new[:, p]
        piece *= lengths
        totals = np.cumsum(piece)
        new[1:, 0] = totals[:-1]
        return PiecewisePolynomial(self.breaks, new, right=totals[-1])

    def _local(self, origins: np.ndarray, probes: np.ndarray) -> np.ndarray:
        """Coefficients about each origin of the piece that contains the matching probe."""
        n, D = self.coeffs.shape
        idx = np.searchsorted(self.breaks, probes, side="right") - 1
        out = np.zeros((origins.size, D))
        out[idx >= n, 0] = self.right
        inside = (idx >= 0) & (idx < n)
        ii = idx[inside]
        out[inside] = taylor_shift(self.coeffs[ii], origins[inside] - self.breaks[ii])
        return out

    def moving_average(self, a: float) -> "PiecewisePolynomial":
        """Convolution with the normalized box of width ``a``; degree goes up by one."""
        if self.right != 0.0:
            raise ValueError("moving average needs compact support")
        G = self.antiderivative()
        h = a / 2
        nb = np.unique(np.concatenate([G.breaks - h, G.breaks + h]))
        left = nb[:-1]
        mids = 0.5 * (nb[:-1] + nb[1:])
        upper = G._local(left + h, mids + h)
        lower = G._local(left - h, mids - h)
        return PiecewisePolynomial(nb, (upper - lower) / a)


@lru_cache(maxsize=256)
def box_cascades(base: float, widths: tuple[float, ...]) -> tuple[PiecewisePolynomial, ...]:
    """All tails of a box cascade.

    Entry ``k`` is ``1_base * phi_{widths[k]} * ... * phi_{widths[-1]}``, so
    entry 0 is the full cascade and entry ``len(widths)`` the bare box.
    """
    cur = PiecewisePolynomial.box(base)
    tails = [cur]
    for a in reversed(widths):
        cur = cur.moving_average(a)
        tails.append(cur)
    return tuple(reversed(tails))
