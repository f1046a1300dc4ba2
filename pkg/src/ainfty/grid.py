"""Grid geometry, weight storage, cube families and exact cube sums.

Every cube sum goes through an integer-scaled prefix table: the cell values
are rewritten as integers over one common power-of-two denominator, so box
sums are exact and each average is a single correctly rounded division.
This keeps averages bit-identical to an exact direct sum, and keeps every
average-based operator exactly monotone in its input.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidFamily, InvalidWeight

EPS_FLOOR = 1e-12

# float64 represents every integer below this exactly
_EXACT_INT_LIMIT = 2**53


class FlooredWeightWarning(UserWarning):
    """Emitted when values below ``EPS_FLOOR`` are raised to it."""


def floor_values(values: np.ndarray, eps: float = EPS_FLOOR) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    low = ~(values >= eps)
    if low.any():
        warnings.warn(
            f"{int(low.sum())} value(s) below {eps:g} floored to {eps:g}",
            FlooredWeightWarning,
            stacklevel=2,
        )
        values = np.where(low, eps, values)
    return values


@dataclass(frozen=True)
class Grid:
    dim: int
    cells: int
    box: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidWeight(f"dim must be 1 or 2, got {self.dim}")
        if int(self.cells) != self.cells or self.cells < 1:
            raise InvalidWeight(f"cells per axis must be a positive integer, got {self.cells}")
        box = self.box or tuple((0.0, 1.0) for _ in range(self.dim))
        box = tuple((float(lo), float(hi)) for lo, hi in box)
        if len(box) != self.dim:
            raise InvalidWeight("box needs one [lo, hi] interval per axis")
        widths = [hi - lo for lo, hi in box]
        if any(not w > 0 for w in widths):
            raise InvalidWeight("box intervals need hi > lo")
        if not all(math.isclose(w, widths[0], rel_tol=1e-12) for w in widths):
            raise InvalidWeight("cells must be cubes: all box sides need equal length")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dim

    @property
    def size(self) -> int:
        return self.cells**self.dim

    @property
    def h(self) -> float:
        lo, hi = self.box[0]
        return (hi - lo) / self.cells

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def centers(self, axis: int = 0) -> np.ndarray:
        lo, _ = self.box[axis]
        return lo + (np.arange(self.cells) + 0.5) * self.h

    def refined(self, factor: int) -> "Grid":
        return Grid(self.dim, self.cells * factor, self.box)


class WeightGrid:
    """Non-negative (by default strictly positive) piecewise-constant function on a grid.

    ``values`` has shape ``grid.shape`` and is read-only.  Derived fields that can
    legitimately vanish (sharp maximal functions of constants, for instance) are
    built with ``allow_zero=True``.
    """

    def __init__(self, grid: Grid, values, allow_zero: bool = False):
        arr = np.array(values, dtype=float)
        if arr.size != grid.size:
            raise InvalidWeight(f"expected {grid.size} values, got {arr.size}")
        arr = arr.reshape(grid.shape)
        if not np.isfinite(arr).all():
            raise InvalidWeight("weight values must be finite")
        if allow_zero:
            if (arr < 0).any():
                raise InvalidWeight("weight values must be non-negative")
        elif not (arr > 0).all():
            raise InvalidWeight("weight values must be strictly positive")
        arr.flags.writeable = False
        self.grid = grid
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def positive(self) -> bool:
        return bool((self._values > 0).all())

    def with_values(self, values, allow_zero: bool = False) -> "WeightGrid":
        return WeightGrid(self.grid, values, allow_zero=allow_zero)

    @cached_property
    def prefix(self) -> "PrefixTable":
        return PrefixTable(self._values)

    def __repr__(self):
        return f"WeightGrid(dim={self.grid.dim}, cells={self.grid.cells})"


def as_weight(w, grid: Grid | None = None) -> WeightGrid:
    if isinstance(w, WeightGrid):
        return w
    arr = np.asarray(w, dtype=float)
    if grid is None:
        grid = Grid(arr.ndim, arr.shape[0])
    return WeightGrid(grid, arr, allow_zero=bool((arr == 0).any()))


@dataclass(frozen=True, order=True)
class Cube:
    side: int
    anchor: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(int(a) for a in self.anchor))

    @property
    def dim(self) -> int:
        return len(self.anchor)

    @property
    def cell_count(self) -> int:
        return self.side**self.dim

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + self.side) for a in self.anchor)

    def contains(self, cell: Sequence[int]) -> bool:
        return all(a <= c < a + self.side for a, c in zip(self.anchor, cell))

    def volume(self, h: float) -> float:
        return (self.side * h) ** self.dim

    def fits(self, n: int) -> bool:
        return all(a >= 0 and a + self.side <= n for a in self.anchor)

    def doubled(self) -> "Cube":
        """Concentric double: side 2m anchored at a - floor(m/2) on every axis."""
        shift = self.side // 2
        return Cube(2 * self.side, tuple(a - shift for a in self.anchor))

    def to_json(self) -> dict:
        return {"anchor": list(self.anchor), "side": self.side}


@dataclass(frozen=True)
class CubeFamily:
    mode: str = "all"
    max_side: int | None = None

    def __post_init__(self):
        mode = str(self.mode).lower()
        if mode not in ("all", "dyadic"):
            raise InvalidFamily(f"unknown family mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if self.max_side is not None and self.max_side <= 0:
            raise InvalidFamily("max_side must be positive")

    def sides(self, n: int) -> list[int]:
        cap = n if self.max_side is None else self.max_side
        if cap > n:
            raise InvalidFamily(f"max_side {cap} exceeds grid size {n}")
        if self.mode == "all":
            return list(range(1, cap + 1))
        out, m = [], 1
        while m <= cap:
            out.append(m)
            m *= 2
        return out

    def stride(self, m: int) -> int:
        return 1 if self.mode == "all" else m

    def anchors(self, n: int, m: int) -> range:
        """Per-axis anchor positions of side-m members."""
        return range(0, n - m + 1, self.stride(m))

    def to_json(self) -> dict:
        return {"mode": self.mode, "max_side": self.max_side}


ALL = CubeFamily("all")
DYADIC = CubeFamily("dyadic")


def enumerate_cubes(grid: Grid, family: CubeFamily = ALL) -> list[Cube]:
    """Every family member exactly once, ordered by side then row-major anchor."""
    out = []
    for m in family.sides(grid.cells):
        axis = family.anchors(grid.cells, m)
        if grid.dim == 1:
            out.extend(Cube(m, (a,)) for a in axis)
        else:
            out.extend(Cube(m, (a, b)) for a in axis for b in axis)
    return out


def cubes_containing(grid: Grid, cell, family: CubeFamily = ALL) -> list[Cube]:
    cell = (cell,) if isinstance(cell, (int, np.integer)) else tuple(cell)
    if len(cell) != grid.dim or not all(0 <= c < grid.cells for c in cell):
        raise IndexError(f"cell {cell} outside grid")
    return [q for q in enumerate_cubes(grid, family) if q.contains(cell)]


class PrefixTable:
    """Exact cumulative sums (running sums in 1D, summed-area table in 2D)."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        self.shape = values.shape
        self.dim = values.ndim
        flat = values.ravel().tolist()
        ratios = [v.as_integer_ratio() for v in flat]
        self.scale = max((d for _, d in ratios), default=1)
        ints = [n * (self.scale // d) for n, d in ratios]
        exact_float = sum(abs(i) for i in ints) < _EXACT_INT_LIMIT
        dtype = float if exact_float else object
        arr = np.array(ints, dtype=dtype).reshape(self.shape)
        table = np.zeros(tuple(s + 1 for s in self.shape), dtype=dtype)
        if self.dim == 1:
            table[1:] = np.cumsum(arr)
        else:
            table[1:, 1:] = np.cumsum(np.cumsum(arr, axis=0), axis=1)
        self.ints = arr
        self.table = table
        self.exact_float = exact_float

    def _box_int(self, cube: Cube):
        t = self.table
        if self.dim == 1:
            (a,), m = cube.anchor, cube.side
            return t[a + m] - t[a]
        (a, b), m = cube.anchor, cube.side
        return t[a + m, b + m] - t[a, b + m] - t[a + m, b] + t[a, b]

    def box_sum(self, cube: Cube) -> float:
        """Sum of cell values in ``cube``, correctly rounded."""
        return _divide(self._box_int(cube), self.scale)

    def box_average(self, cube: Cube) -> float:
        return _divide(self._box_int(cube), self.scale * cube.cell_count)

    def side_sums_scaled(self, m: int, stride: int = 1) -> np.ndarray:
        """Exact scaled sums of all side-m boxes, indexed by anchor (step ``stride``)."""
        t = self.table
        n = self.shape[0]
        hi = n - m + 1
        if self.dim == 1:
            sums = t[m : m + hi] - t[:hi]
            return sums[::stride]
        sums = t[m : m + hi, m : m + hi] - t[:hi, m : m + hi] - t[m : m + hi, :hi] + t[:hi, :hi]
        return sums[::stride, ::stride]

    def side_sums(self, m: int, stride: int = 1) -> np.ndarray:
        return _divide_array(self.side_sums_scaled(m, stride), self.scale)

    def side_averages(self, m: int, stride: int = 1) -> np.ndarray:
        return _divide_array(self.side_sums_scaled(m, stride), self.scale * m**self.dim)


def _divide(num, den: int) -> float:
    if isinstance(num, (float, np.floating)):
        return float(num) / den
    return int(num) / den


def _divide_array(nums: np.ndarray, den: int) -> np.ndarray:
    if nums.dtype == object:
        # int / int is correctly rounded in Python
        return np.array([n / den for n in nums.ravel().tolist()], dtype=float).reshape(nums.shape)
    return nums / float(den)


def cube_average(w: WeightGrid, cube: Cube) -> float:
    if not cube.fits(w.grid.cells):
        raise IndexError(f"{cube} does not fit in the grid")
    return w.prefix.box_average(cube)


def cube_values(values: np.ndarray, cube: Cube) -> np.ndarray:
    return np.asarray(values)[cube.slices()].ravel()


# ---------------------------------------------------------------------------
# Per-cell suprema over the cubes containing each cell.


def sliding_max(x: np.ndarray, width: int, axis: int = -1) -> np.ndarray:
    """Running maximum over windows of ``width`` along ``axis`` (van Herk / Gil-Werman)."""
    x = np.moveaxis(np.asarray(x, dtype=float), axis, -1)
    n = x.shape[-1]
    if width == 1:
        return np.moveaxis(x.copy(), -1, axis)
    out_len = n - width + 1
    pad = (-n) % width
    xp = np.concatenate([x, np.full(x.shape[:-1] + (pad,), -np.inf)], axis=-1)
    blocks = xp.reshape(x.shape[:-1] + (-1, width))
    prefix = np.maximum.accumulate(blocks, axis=-1).reshape(xp.shape)
    suffix = np.maximum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1].reshape(xp.shape)
    out = np.maximum(suffix[..., :out_len], prefix[..., width - 1 : width - 1 + out_len])
    return np.moveaxis(out, -1, axis)


def window_extremes(values: np.ndarray, m: int, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(max, min) of every side-m window, indexed by anchor."""
    hi, lo = np.asarray(values, dtype=float), -np.asarray(values, dtype=float)
    for axis in range(hi.ndim):
        hi = sliding_max(hi, m, axis=axis)
        lo = sliding_max(lo, m, axis=axis)
    sl = (slice(None, None, stride),) * hi.ndim
    return hi[sl], -lo[sl]


def constant_windows(values: np.ndarray, m: int, stride: int = 1) -> np.ndarray:
    hi, lo = window_extremes(values, m, stride)
    return hi == lo


def _per_cell(grid: Grid, family: CubeFamily, m: int, arr: np.ndarray) -> np.ndarray:
    """Max of per-anchor values ``arr`` over the side-m members containing each cell."""
    n = grid.cells
    if family.mode == "all":
        pad = [(m - 1, m - 1)] * grid.dim
        out = np.pad(arr, pad, constant_values=-np.inf)
        for axis in range(grid.dim):
            out = sliding_max(out, m, axis=axis)
        return out
    idx = np.arange(n) // m
    valid = idx < arr.shape[0]
    idx = np.where(valid, idx, 0)
    if grid.dim == 1:
        return np.where(valid, arr[idx], -np.inf)
    out = arr[np.ix_(idx, idx)]
    return np.where(valid[:, None] & valid[None, :], out, -np.inf)


@dataclass
class CellwiseMax:
    values: np.ndarray
    sides: np.ndarray
    witnesses: list[Cube] | None = field(default=None)


def cellwise_max(
    grid: Grid,
    family: CubeFamily,
    side_values: Callable[[int], np.ndarray],
    witness: bool = False,
) -> CellwiseMax:
    """Per cell, the max over containing family cubes of a per-cube quantity.

    ``side_values(m)`` returns the quantity for every side-m member, indexed by
    anchor (with the family stride).  Ties go to the first cube in family order.
    """
    best = np.full(grid.shape, -np.inf)
    best_side = np.zeros(grid.shape, dtype=int)
    sides = family.sides(grid.cells)
    for m in sides:
        cand = _per_cell(grid, family, m, side_values(m))
        upd = cand > best
        best[upd] = cand[upd]
        best_side[upd] = m
    result = CellwiseMax(best, best_side)
    if witness:
        result.witnesses = _witnesses(grid, family, side_values, best, best_side)
    return result


def _witnesses(grid, family, side_values, best, best_side) -> list[Cube]:
    out: list[Cube | None] = [None] * grid.size
    for m in np.unique(best_side):
        m = int(m)
        arr = side_values(m)
        stride = family.stride(m)
        for flat in np.flatnonzero(best_side.ravel() == m):
            cell = np.unravel_index(flat, grid.shape)
            v = best[cell]
            lo = [max(0, -(-(c - m + 1) // stride)) for c in cell]
            hi = [min(c // stride, arr.shape[0] - 1) for c in cell]
            sub = arr[tuple(slice(l, h + 1) for l, h in zip(lo, hi))]
            pos = np.unravel_index(int(np.argmax(sub == v)), sub.shape)
            out[flat] = Cube(m, tuple((l + p) * stride for l, p in zip(lo, pos)))
    return out  # type: ignore[return-value]


def windows(values: np.ndarray, m: int, stride: int = 1) -> np.ndarray:
    """View of all side-m windows, anchors first, window cells flattened last."""
    values = np.asarray(values)
    if values.ndim == 1:
        return np.lib.stride_tricks.sliding_window_view(values, m)[::stride]
    v = np.lib.stride_tricks.sliding_window_view(values, (m, m))[::stride, ::stride]
    return v.reshape(v.shape[:2] + (m * m,))


def per_cube(grid: Grid, family: CubeFamily, side_values: Callable[[int], np.ndarray]):
    """Max of a per-cube quantity over the whole family with its first-in-order witness."""
    best, where = -np.inf, None
    for m in family.sides(grid.cells):
        arr = side_values(m)
        if arr.size == 0:
            continue
        i = int(np.argmax(arr))
        v = float(arr.flat[i])
        if v > best:
            stride = family.stride(m)
            pos = np.unravel_index(i, arr.shape)
            best, where = v, Cube(m, tuple(p * stride for p in pos))
    return best, where


# ---------------------------------------------------------------------------
# Weight files


def weight_to_json(w: WeightGrid) -> dict:
    g = w.grid
    return {
        "dim": g.dim,
        "cells": list(g.shape),
        "box": [list(b) for b in g.box],
        "values": [float(v) for v in w.values.ravel()],
    }


def weight_from_json(data: dict, floor: bool = False) -> WeightGrid:
    try:
        dim = int(data["dim"])
        cells = data["cells"]
        cells = [cells] if isinstance(cells, int) else list(cells)
        values = np.asarray(data["values"], dtype=float).ravel()
        box = data.get("box")
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidWeight(f"malformed weight file: {exc}") from exc
    if len(cells) != dim or len(set(cells)) != 1:
        raise InvalidWeight("cells must list one equal count per axis")
    grid = Grid(dim, cells[0], tuple(tuple(b) for b in box) if box else ())
    if floor:
        values = floor_values(values)
    return WeightGrid(grid, values)


def load_weight(path: str | Path, floor: bool = False) -> WeightGrid:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        rows = [r.split(",")[0].strip() for r in text.splitlines()]
        try:
            vals = [float(r) for r in rows if r and not r.startswith("#")]
        except ValueError as exc:
            raise InvalidWeight(f"bad CSV value: {exc}") from exc
        data = {"dim": 1, "cells": [len(vals)], "values": vals}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidWeight(f"bad JSON: {exc}") from exc
    return weight_from_json(data, floor=floor)


def dump_weight(w: WeightGrid, path: str | Path) -> None:
    Path(path).write_text(json.dumps(weight_to_json(w)) + "\n")
