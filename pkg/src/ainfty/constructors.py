"""Constructions of A_1 weights and the decompositions built from them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classes import ConstantReport, a1_constant
from .errors import DegenerateInput, InvalidExponent, InvalidWeight
from .exact import ratio_max, ratio_min
from .grid import ALL, EPS_FLOOR, CubeFamily, WeightGrid
from .operators import maximal_iterates, maximal_values
from .rearrangement import _check_lambda, local_maximal, local_sharp_maximal, sharp_maximal

ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(21, 81))


class ExponentSearchWarning(UserWarning):
    """No exponent on the search grid met the growth budget."""


@dataclass
class A1Construction:
    output: WeightGrid
    ingredients: dict
    a1: ConstantReport
    corrector: WeightGrid | None = None
    certificates: dict = field(default_factory=dict)
    degenerate: bool = False

    @property
    def k_bounds(self) -> tuple[float, float] | None:
        if self.corrector is None:
            return None
        k = self.corrector.values
        return float(k.min()), float(k.max())

    def to_json(self) -> dict:
        out = {
            "output": self.output.values.tolist(),
            "ingredients": dict(self.ingredients),
            "a1": self.a1.to_json(),
            "certificates": dict(self.certificates),
            "degenerate": self.degenerate,
        }
        if self.corrector is not None:
            lo, hi = self.k_bounds
            out["corrector"] = {"values": self.corrector.values.tolist(), "min": lo, "max": hi}
        return out


def _floored(w: WeightGrid, base: np.ndarray, eps: float) -> tuple[WeightGrid, bool]:
    low = ~(base > 0)
    out = np.where(low, eps, base)
    return w.with_values(out), bool(low.any())


def _check_delta(delta: float, allow_zero: bool = False) -> float:
    ok = (0 <= delta < 1) if allow_zero else (0 < delta < 1)
    if not ok:
        raise InvalidExponent(f"delta out of range: {delta}")
    return float(delta)


def coifman_rochberg(f: WeightGrid, delta: float, family: CubeFamily = ALL) -> A1Construction:
    """(Mf)^delta, an A_1 weight for every delta in [0, 1)."""
    delta = _check_delta(delta, allow_zero=True)
    out = f.with_values(maximal_values(f, family) ** delta)
    return A1Construction(out, {"delta": delta}, a1_constant(out, family))


def local_maximal_a1(u: WeightGrid, delta: float, lam: float = 0.5, family: CubeFamily = ALL) -> A1Construction:
    """(m_lambda u)^delta."""
    delta = _check_delta(delta)
    out = u.with_values(local_maximal(u, lam, family).values ** delta)
    return A1Construction(out, {"delta": delta, "lambda": lam}, a1_constant(out, family))


def sharp_variant(
    f: WeightGrid,
    u: WeightGrid,
    c: float = 1.0,
    d: float = 1.0,
    delta: float = 0.5,
    lam: float = 0.5,
    family: CubeFamily = ALL,
    eps: float = EPS_FLOOR,
) -> A1Construction:
    """(c f# + d m_lambda u)^delta; zero bases are floored at eps and flagged."""
    if c < 0 or d < 0:
        raise DegenerateInput("c and d must be non-negative")
    if c == 0 and d == 0:
        raise DegenerateInput("c = d = 0 gives the zero weight")
    if f.grid != u.grid:
        raise InvalidWeight("f and u must live on the same grid")
    delta = _check_delta(delta)
    base = np.zeros(f.grid.shape)
    if c:
        base = base + c * sharp_maximal(f, family).values
    if d:
        base = base + d * local_maximal(u, lam, family).values
    floored, degenerate = _floored(f, base, eps)
    out = floored.with_values(floored.values**delta)
    ingredients = {"c": c, "d": d, "delta": delta, "lambda": lam, "eps": eps}
    return A1Construction(out, ingredients, a1_constant(out, family), degenerate=degenerate)


@dataclass
class ExponentSearch:
    alpha: float
    budget: float
    a1_w: float
    a1_power: float
    qualified: bool
    table: list[tuple[float, float, bool]]

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "budget": self.budget,
            "a1_w": self.a1_w,
            "a1_power": self.a1_power,
            "qualified": self.qualified,
        }


def power_exponent_search(w: WeightGrid, budget: float = 4.0, family: CubeFamily = ALL) -> ExponentSearch:
    """Largest alpha in 1.05, 1.10, ..., 4.00 with [w^alpha]_A1 <= budget [w]_A1^alpha."""
    if not budget > 1:
        raise InvalidExponent(f"budget must exceed 1, got {budget}")
    a1_w = a1_constant(w, family).value
    table = []
    for alpha in ALPHA_GRID:
        c = a1_constant(w.with_values(w.values**alpha), family).value
        table.append((alpha, c, c <= budget * a1_w**alpha))
    good = [row for row in table if row[2]]
    if good:
        alpha, c, _ = good[-1]
        return ExponentSearch(alpha, budget, a1_w, c, True, table)
    warnings.warn("no exponent met the budget; using the smallest grid value", ExponentSearchWarning)
    alpha, c, _ = table[0]
    return ExponentSearch(alpha, budget, a1_w, c, False, table)


def _reconstruction_error(target: np.ndarray, k: np.ndarray, base: np.ndarray) -> float:
    return float(np.max(np.abs(k * base - target) / target))


def a1_decompose_sharp(
    w: WeightGrid, lam: float = 0.5, family: CubeFamily = ALL, eps: float = EPS_FLOOR, budget: float = 4.0
) -> A1Construction:
    """w = k (((w^a)#)^d + (m_lambda w^a)^d) with a from the exponent search and d = 1/a."""
    lam = _check_lambda(lam)
    search = power_exponent_search(w, budget, family)
    alpha = search.alpha
    delta = 1.0 / alpha
    wa = w.with_values(w.values**alpha)
    base = sharp_maximal(wa, family).values ** delta + local_maximal(wa, lam, family).values ** delta
    b, degenerate = _floored(w, base, eps)
    k = w.values / b.values
    kmin, kmax = float(k.min()), float(k.max())
    certs = {
        "k_min": kmin,
        "k_max": kmax,
        "k_spread": kmax / kmin,
        "reconstruction_rel_error": _reconstruction_error(w.values, k, b.values),
        "search": search.to_json(),
    }
    ingredients = {"alpha": alpha, "delta": delta, "c": 1.0, "d": 1.0, "lambda": lam, "eps": eps}
    return A1Construction(b, ingredients, a1_constant(b, family), w.with_values(k), certs, degenerate)


def _exact_quotient(num: np.ndarray, den: Fraction) -> np.ndarray:
    """num / den per entry, correctly rounded."""
    p, q = den.numerator, den.denominator
    out = []
    for v in num.ravel().tolist():
        a, b = v.as_integer_ratio()
        out.append((a * q) / (b * p))
    return np.asarray(out, dtype=float).reshape(num.shape)


def rubio_de_francia(u: WeightGrid, K: int = 40, family: CubeFamily = ALL) -> A1Construction:
    """R_K u = sum_{k=0}^{K} M^k u / (2 [u]_A1)^k with its three certificates.

    Terms are correctly rounded quotients and the sum is correctly rounded per
    cell, so u <= R <= 2u and every term_k <= 2^-k u come out exact.
    """
    if K < 1:
        raise InvalidExponent(f"truncation K must be >= 1, got {K}")
    c = a1_constant(u, family).value
    two_c = 2 * Fraction(c)
    its = maximal_iterates(u, K, family)
    terms = [its[0].values] + [_exact_quotient(its[k].values, two_c**k) for k in range(1, K + 1)]
    stack = np.stack([t.ravel() for t in terms], axis=1)
    r = np.array([math.fsum(row) for row in stack.tolist()]).reshape(u.grid.shape)
    uv = u.values
    out = u.with_values(r)
    lower = bool((uv <= r).all())
    upper = bool((r <= 2 * uv).all())
    term_ok = all(bool((t * 2.0**k <= uv).all()) for k, t in enumerate(terms))
    mr = maximal_values(out, family)
    c_bound = bool(all(Fraction(a) <= two_c * Fraction(b) for a, b in zip(mr.ravel().tolist(), r.ravel().tolist())))
    sharp_ratio, _ = ratio_max(mr, r)
    certs = {
        "A1_u": c,
        "bound_a": lower and upper,
        "bound_b": term_ok,
        "tail_bound": 2.0**-K,
        "bound_c": c_bound,
        "MR_over_R": sharp_ratio,
        "sharp_form_holds": sharp_ratio <= c,
    }
    return A1Construction(out, {"K": K, "C": 2 * c}, a1_constant(out, family), certificates=certs)


def a1_factorize_rdf(u: WeightGrid, K: int = 40, family: CubeFamily = ALL) -> tuple[WeightGrid, WeightGrid]:
    """u = k w with w = R_K u in A_1 and 1/2 <= k <= 1."""
    w = rubio_de_francia(u, K, family).output
    k = u.values / w.values
    if not ((k >= 0.5) & (k <= 1.0)).all():
        raise ArithmeticError("factorization corrector left [1/2, 1]")
    return w, u.with_values(k)


def local_sharp_a1(
    f: WeightGrid, delta: float = 0.5, lam: float = 0.5, family: CubeFamily = ALL, eps: float = EPS_FLOOR
) -> A1Construction:
    """(f#)^delta with empirical constants c1 = min f#/M(M#_lambda f) and c2 = max of the same ratio."""
    delta = _check_delta(delta)
    sharp = sharp_maximal(f, family).values
    floored, degenerate = _floored(f, sharp, eps)
    out = floored.with_values(floored.values**delta)
    certs: dict = {}
    if degenerate and not (sharp > 0).any():
        certs.update(c1=None, c2=None)
    else:
        local = local_sharp_maximal(f, lam, family)
        mm = maximal_values(local, family)
        if (mm > 0).all():
            c1, _ = ratio_min(sharp, mm)
            c2, _ = ratio_max(sharp, mm)
        else:
            c1 = c2 = math.inf
        certs.update(c1=c1, c2=c2)
    ingredients = {"delta": delta, "lambda": lam, "eps": eps}
    return A1Construction(out, ingredients, a1_constant(out, family), certificates=certs, degenerate=degenerate)
