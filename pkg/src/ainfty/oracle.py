"""Brute-force reference implementations.

Everything here works from definitions: explicit cube loops, exact rational
sums, full sorts, and a scan of every candidate constant for the local sharp
function.  None of it shares code with the fast paths beyond the data types.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import OracleRefused
from .grid import ALL, CubeFamily, WeightGrid

MAX_CELLS_1D = 64
MAX_CELLS_2D = 16

OPS = (
    "maximal",
    "maximal_power",
    "maximal_iterate",
    "local_maximal",
    "sharp_maximal",
    "local_sharp_maximal",
    "rearrangement",
    "a1",
    "ap",
    "rhi",
    "sublevel_beta",
    "weak_ainf",
    "doubling",
)


def _check_size(w: WeightGrid):
    cap = MAX_CELLS_1D if w.grid.dim == 1 else MAX_CELLS_2D
    if w.grid.cells > cap:
        raise OracleRefused(f"oracle limited to {cap} cells per axis in {w.grid.dim}D")


def _cubes(n: int, dim: int, family: CubeFamily):
    """(side, anchor, slices) for every family cube, ordered by side then anchor."""
    cap = n if family.max_side is None else family.max_side
    side = 1
    while side <= cap:
        step = 1 if family.mode == "all" else side
        starts = list(range(0, n - side + 1, step))
        if dim == 1:
            anchors = [(a,) for a in starts]
        else:
            anchors = [(a, b) for a in starts for b in starts]
        for anc in anchors:
            yield side, anc, tuple(slice(a, a + side) for a in anc)
        side = side + 1 if family.mode == "all" else side * 2


def _exact_sum(vals) -> Fraction:
    pairs = [float(v).as_integer_ratio() for v in vals]
    den = max(d for _, d in pairs)
    return Fraction(sum(nu * (den // d) for nu, d in pairs), den)


def _scaled(values: np.ndarray) -> tuple[np.ndarray, int]:
    """values = ints / den exactly, with ints a Python-int object array."""
    pairs = [float(v).as_integer_ratio() for v in values.ravel()]
    den = max(d for _, d in pairs)
    ints = np.array([nu * (den // d) for nu, d in pairs], dtype=object).reshape(values.shape)
    return ints, den


def _slice_mean(ints: np.ndarray, den: int, sl) -> float:
    block = ints[sl]
    return int(block.sum()) / (den * block.size)


def _cellwise(w: WeightGrid, family: CubeFamily, per_cube, by_slice: bool = False):
    best = np.full(w.grid.shape, -np.inf)
    for side, anc, sl in _cubes(w.grid.cells, w.grid.dim, family):
        v = per_cube(sl) if by_slice else per_cube(w.values[sl].ravel())
        region = best[sl]
        np.maximum(region, v, out=region)
    return best


def _rank_value(vals, t_cells: float) -> float:
    """inf{alpha >= 0 : #{|v| > alpha} <= t}, scanning alpha over 0 and the values."""
    absval = sorted(abs(float(v)) for v in vals)
    for alpha in [0.0] + absval:
        if sum(1 for v in absval if v > alpha) <= t_cells + 1e-9:
            return alpha
    return absval[-1]


def _mad(vals) -> float:
    pairs = [float(v).as_integer_ratio() for v in vals]
    den = max(d for _, d in pairs)
    ints = [nu * (den // d) for nu, d in pairs]
    c = len(ints)
    total = sum(ints)
    return sum(abs(c * i - total) for i in ints) / (den * c * c)


def _best_constant(vals, lam: float) -> float:
    v = np.unique(np.asarray(vals, dtype=float))
    t = lam * len(vals)
    mids = ((v[:, None] + v[None, :]) / 2)[np.triu_indices(v.size)]
    dev = np.abs(np.asarray(vals, dtype=float)[None, :] - mids[:, None])
    dev = -np.sort(-dev, axis=1)
    k = int(math.floor(t + 1e-9))
    if k >= dev.shape[1]:
        return 0.0
    return float(dev[:, k].min())


def _double(side, anc, n):
    big = tuple(a - side // 2 for a in anc)
    if all(b >= 0 and b + 2 * side <= n for b in big):
        return tuple(slice(b, b + 2 * side) for b in big)
    return None


def oracle(op: str, w: WeightGrid, family: CubeFamily = ALL, **kw):
    """Reference value of ``op`` on ``w``; arrays for operators, floats for constants."""
    if op not in OPS:
        raise ValueError(f"unknown oracle op {op!r}")
    _check_size(w)
    n, dim = w.grid.cells, w.grid.dim
    if op == "maximal":
        ints, den = _scaled(w.values)
        return _cellwise(w, family, lambda sl: _slice_mean(ints, den, sl), by_slice=True)
    if op == "maximal_iterate":
        cur = w
        for _ in range(kw["k"]):
            cur = w.with_values(oracle("maximal", cur, family))
        return cur.values.copy()
    if op == "maximal_power":
        s = kw["s"]
        ints, den = _scaled(np.vectorize(lambda x: math.pow(x, s))(w.values))
        return _cellwise(w, family, lambda sl: _slice_mean(ints, den, sl) ** (1 / s), by_slice=True)
    if op == "local_maximal":
        lam = kw["lam"]
        return _cellwise(w, family, lambda v: _rank_value(v, lam * len(v)))
    if op == "sharp_maximal":
        return _cellwise(w, family, _mad)
    if op == "local_sharp_maximal":
        lam = kw["lam"]
        return _cellwise(w, family, lambda v: _best_constant(v, lam))
    if op == "rearrangement":
        cube, t = kw["cube"], kw["t"]
        return _rank_value(w.values[cube.slices()].ravel(), t / w.grid.h**dim)
    if op == "a1":
        return float(np.max(oracle("maximal", w, family) / w.values))

    ints, den = _scaled(w.values)
    if op == "ap":
        p = kw["p"]
        dual = _scaled(np.vectorize(lambda x: math.pow(x, -1 / (p - 1)))(w.values))
    elif op == "rhi":
        r = kw["r"]
        powers = _scaled(np.vectorize(lambda x: math.pow(x, r))(w.values))
    best = -math.inf
    for side, anc, sl in _cubes(n, dim, family):
        v = w.values[sl].ravel()
        if op == "ap":
            val = _slice_mean(ints, den, sl) * _slice_mean(*dual, sl) ** (p - 1)
        elif op == "rhi":
            val = _slice_mean(*powers, sl) ** (1 / r) / _slice_mean(ints, den, sl)
        elif op == "sublevel_beta":
            thr = kw["alpha"] * _slice_mean(ints, den, sl)
            val = sum(1 for x in v if x <= thr) / len(v)
        else:
            big = _double(side, anc, n)
            if big is None:
                continue
            s2 = float(Fraction(int(ints[big].sum()), den))
            if op == "doubling":
                val = s2 / float(Fraction(int(ints[sl].sum()), den))
            else:  # weak_ainf
                delta = kw["delta"]
                val = -math.inf
                for t in [0.0] + sorted(set(float(x) for x in v)):
                    e = [x for x in v if x > t]
                    if e:
                        val = max(val, float(_exact_sum(e)) * (len(v) / len(e)) ** delta / s2)
        best = max(best, val)
    return best
