"""Constants of the weight classes A_1, A_p, A_inf (sublevel form), RHI, doubling and weak A_inf."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidExponent, InvalidWeight, NotComputable
from .exact import ratio_max
from .grid import ALL, Cube, CubeFamily, Grid, PrefixTable, WeightGrid, constant_windows, windows
from .operators import maximal, power_means


@dataclass
class ConstantReport:
    name: str
    value: float
    params: dict = field(default_factory=dict)
    cube: Cube | None = None
    cell: tuple[int, ...] | None = None
    t: float | None = None

    def to_json(self) -> dict:
        value = self.value if math.isfinite(self.value) else "+inf"
        witness = {
            "cube": self.cube.to_json() if self.cube is not None else None,
            "cell": list(self.cell) if self.cell is not None else None,
            "t": self.t,
        }
        return {"name": self.name, "value": value, "params": dict(self.params), "witness": witness}


def _require_positive(w: WeightGrid):
    if not w.positive:
        raise InvalidWeight("this constant needs a strictly positive weight")


def _flat_cubes(grid: Grid, family: CubeFamily, side_fn: Callable[[int], tuple]):
    """Concatenate per-side arrays in family order; returns (arrays..., cube lookup)."""
    parts, index = None, []
    for m in family.sides(grid.cells):
        arrays = side_fn(m)
        if arrays is None:
            continue
        shape = np.shape(arrays[0])
        if int(np.prod(shape)) == 0:
            continue
        stride = family.stride(m)
        index.append((m, shape, stride))
        flat = [np.asarray(a, dtype=float).ravel() for a in arrays]
        parts = [[f] for f in flat] if parts is None else [p + [f] for p, f in zip(parts, flat)]
    if parts is None:
        return None, None

    def cube_at(i: int) -> Cube:
        for m, shape, stride in index:
            size = int(np.prod(shape))
            if i < size:
                pos = np.unravel_index(i, shape)
                return Cube(m, tuple(int(p) * stride for p in pos))
            i -= size
        raise IndexError(i)

    return [np.concatenate(p) for p in parts], cube_at


def a1_constant(w: WeightGrid, family: CubeFamily = ALL) -> ConstantReport:
    """Discrete [w]_{A_1}: the smallest C with Mw <= C w on every cell."""
    _require_positive(w)
    res = maximal(w, family)
    c, i = ratio_max(res.values, w.values)
    cell = tuple(int(j) for j in np.unravel_index(i, w.grid.shape))
    return ConstantReport("A1", c, {}, res.witnesses[i], cell)


def ap_products(w: WeightGrid, p: float, family: CubeFamily, m: int, dual: PrefixTable) -> np.ndarray:
    stride = family.stride(m)
    prod = w.prefix.side_averages(m, stride) * dual.side_averages(m, stride) ** (p - 1)
    # each cube product is >= 1 by Hölder, with equality on constant cubes;
    # the clamp and the override only undo rounding
    prod = np.maximum(prod, 1.0)
    return np.where(constant_windows(w.values, m, stride), 1.0, prod)


def ap_constant(w: WeightGrid, p: float, family: CubeFamily = ALL) -> ConstantReport:
    _require_positive(w)
    if not p > 1:
        raise InvalidExponent(f"A_p needs p > 1, got {p}")
    dual = PrefixTable(w.values ** (-1.0 / (p - 1)))
    arrays, cube_at = _flat_cubes(w.grid, family, lambda m: (ap_products(w, p, family, m, dual),))
    (vals,) = arrays
    i = int(np.argmax(vals))
    return ConstantReport("Ap", float(vals[i]), {"p": p}, cube_at(i))


def ainf_sublevel_beta(w: WeightGrid, alpha: float, family: CubeFamily = ALL) -> ConstantReport:
    """Smallest beta with |{y in Q : w(y) <= alpha w_Q}| <= beta |Q| for every cube."""
    if not 0 < alpha < 1:
        raise InvalidExponent(f"alpha must lie in (0, 1), got {alpha}")
    vals, dim = w.values, w.grid.dim

    def side(m):
        stride = family.stride(m)
        thresh = alpha * w.prefix.side_averages(m, stride)
        win = windows(vals, m, stride)
        frac = (win <= thresh[..., None]).sum(axis=-1) / float(m**dim)
        return (frac,)

    (fracs,), cube_at = _flat_cubes(w.grid, family, side)
    i = int(np.argmax(fracs))
    return ConstantReport("Ainf_sublevel_beta", float(fracs[i]), {"alpha": alpha}, cube_at(i))


def rhi_constant(w: WeightGrid, r: float, family: CubeFamily = ALL) -> ConstantReport:
    """Smallest C with (avg_Q w^r)^(1/r) <= C avg_Q w for every cube."""
    _require_positive(w)
    if not r > 1:
        raise InvalidExponent(f"RHI needs r > 1, got {r}")
    table_pow = PrefixTable(w.values**r)

    def side(m):
        stride = family.stride(m)
        return power_means(table_pow, w.prefix, m, stride, r, w.values), w.prefix.side_averages(m, stride)

    (num, den), cube_at = _flat_cubes(w.grid, family, side)
    c, i = ratio_max(num, den)
    return ConstantReport("RHI", c, {"r": r}, cube_at(i))


def _doubled_sums(w: WeightGrid, family: CubeFamily, m: int):
    """(sum over Q, sum over 2Q) for admissible side-m members, plus the admissible mask."""
    n = w.grid.cells
    if 2 * m > n:
        return None
    stride = family.stride(m)
    anchors = np.arange(0, n - m + 1, stride)
    big = anchors - m // 2
    ok = (big >= 0) & (big + 2 * m <= n)
    big = np.where(ok, big, 0)
    small_sums = w.prefix.side_sums(m, stride)
    big_all = w.prefix.side_sums(2 * m, 1)
    if w.grid.dim == 1:
        return small_sums, big_all[big], ok
    mask = ok[:, None] & ok[None, :]
    return small_sums, big_all[np.ix_(big, big)], mask


def doubling_constant(w: WeightGrid, family: CubeFamily = ALL) -> ConstantReport:
    """max of w(2Q) / w(Q) over family cubes whose concentric double fits in the box."""
    _require_positive(w)

    def side(m):
        got = _doubled_sums(w, family, m)
        if got is None:
            return None
        small, big, ok = got
        return np.where(ok, big, 0.0), np.where(ok, small, 1.0)

    arrays, cube_at = _flat_cubes(w.grid, family, side)
    if arrays is None:
        raise NotComputable("no cube has its double inside the grid")
    num, den = arrays
    if not (num > 0).any():
        raise NotComputable("no cube has its double inside the grid")
    c, i = ratio_max(num, den)
    return ConstantReport("doubling", c, {}, cube_at(i))


def _weak_side(w: WeightGrid, family: CubeFamily, m: int, delta: float):
    got = _doubled_sums(w, family, m)
    if got is None:
        return None
    _, big, ok = got
    count = m**w.grid.dim
    win = -np.sort(-windows(w.values, m, family.stride(m)), axis=-1)
    top = np.cumsum(win, axis=-1)
    j = np.arange(1, count + 1)
    # E_t = {u > t} is the top-j set for j = count (t = 0) or where the sorted values drop
    valid = np.ones(win.shape, dtype=bool)
    valid[..., :-1] = win[..., :-1] > win[..., 1:]
    ratio = top * (count / j) ** delta / big[..., None]
    ratio = np.where(valid, ratio, -np.inf)
    best_j = np.argmax(ratio, axis=-1)
    best = np.take_along_axis(ratio, best_j[..., None], axis=-1)[..., 0]
    t = np.where(best_j + 1 < count, np.take_along_axis(win, np.minimum(best_j + 1, count - 1)[..., None], axis=-1)[..., 0], 0.0)
    return np.where(ok, best, -np.inf), t


def weak_ainf_constant(w: WeightGrid, delta: float, family: CubeFamily = ALL) -> ConstantReport:
    """max over admissible Q and superlevel sets E_t of u(E_t) (|Q|/|E_t|)^delta / u(2Q)."""
    _require_positive(w)
    if not 0 < delta < 1:
        raise InvalidExponent(f"delta must lie in (0, 1), got {delta}")
    arrays, cube_at = _flat_cubes(w.grid, family, lambda m: _weak_side(w, family, m, delta))
    if arrays is None or not np.isfinite(arrays[0]).any():
        raise NotComputable("no cube has its double inside the grid")
    vals, ts = arrays
    i = int(np.argmax(vals))
    return ConstantReport("weak_Ainf", float(vals[i]), {"delta": delta}, cube_at(i), t=float(ts[i]))
