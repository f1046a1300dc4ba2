"""Exact comparisons on float data.

Float arrays produced by the operators are treated as exact rationals.  Ratio
constants are rounded *up* so that ``num <= C * den`` holds exactly for every
entry, which lets chained pointwise bounds be checked without slack.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

_EPS = np.finfo(float).eps


def ratio_max(num, den) -> tuple[float, int]:
    """Smallest float ``C`` with ``num <= C * den`` exactly, and the first argmax.

    Entries with ``den == 0`` give ``inf`` unless ``num == 0`` too (ratio 0).
    """
    num = np.asarray(num, dtype=float).ravel()
    den = np.asarray(den, dtype=float).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    r = np.where((den == 0) & (num == 0), 0.0, r)
    r = np.where((den == 0) & (num > 0), np.inf, r)
    i = int(np.argmax(r))
    c = float(r[i])
    if not math.isfinite(c):
        return c, i
    tied = [j for j in np.flatnonzero(r == c) if den[j] != 0]
    if not tied:
        return c, i
    exact = max(Fraction(float(num[j])) / Fraction(float(den[j])) for j in tied)
    if Fraction(c) < exact:
        c = math.nextafter(c, math.inf)
    return c, i


def ratio_min(num, den) -> tuple[float, int]:
    """Largest float ``c`` with ``c * den <= num`` exactly (den > 0), and the first argmin."""
    num = np.asarray(num, dtype=float).ravel()
    den = np.asarray(den, dtype=float).ravel()
    r = num / den
    i = int(np.argmin(r))
    c = float(r[i])
    exact = min(Fraction(float(num[j])) / Fraction(float(den[j])) for j in np.flatnonzero(r == c))
    if Fraction(c) > exact:
        c = math.nextafter(c, -math.inf)
    return c, i


def leq_scaled(lhs, const, rhs) -> np.ndarray:
    """Elementwise ``lhs <= const * rhs`` in exact rational arithmetic.

    ``const`` may be a float, int or Fraction.  A float pre-screen with a
    safety margin settles almost every entry; the rest are decided exactly.
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    cf = float(const)
    prod = cf * rhs
    margin = 8 * _EPS * np.abs(prod) + np.finfo(float).tiny
    sure_yes = lhs <= prod - margin
    sure_no = lhs > prod + margin
    out = sure_yes.copy()
    unsure = ~(sure_yes | sure_no)
    if unsure.any():
        c = Fraction(const) if not isinstance(const, Fraction) else const
        flat_out = out.reshape(-1)
        for j in np.flatnonzero(unsure.ravel()):
            flat_out[j] = Fraction(float(lhs.flat[j])) <= c * Fraction(float(rhs.flat[j]))
    return out


def rel_excess(lhs, rhs) -> float:
    """max over entries of (lhs - rhs) / max(|rhs|, tiny); <= 0 means the bound holds."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.size == 0:
        return -math.inf
    scale = np.maximum(np.abs(rhs), np.finfo(float).tiny)
    return float(np.max((lhs - rhs) / scale))
