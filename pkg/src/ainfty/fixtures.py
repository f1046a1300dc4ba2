"""Weight generators, refinement, and the seeded fixture suites used by the tests.

LOGNORMAL weights are reproducible across implementations: a splitmix64 stream
seeded with the 64-bit seed yields one integer per cell (row-major); its top 53
bits give ``u = (z >> 11 + 0.5) / 2**53`` in (0, 1), which is mapped through the
standard normal inverse CDF and then ``exp(sigma * z)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Iterator

import numpy as np

from .errors import InvalidSpec
from .grid import Grid, WeightGrid, floor_values

KINDS = ("CONSTANT", "POWER", "STEP", "SPIKE", "MONOTONE", "LOGNORMAL")

_MASK64 = (1 << 64) - 1
_NORMAL = NormalDist()


def splitmix64(seed: int) -> Iterator[int]:
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def uniforms(seed: int, count: int) -> list[float]:
    stream = splitmix64(seed)
    return [((next(stream) >> 11) + 0.5) / 2.0**53 for _ in range(count)]


def lognormal_values(seed: int, sigma: float, count: int) -> list[float]:
    return [math.exp(sigma * _NORMAL.inv_cdf(u)) for u in uniforms(seed, count)]


@dataclass
class WeightSpec:
    kind: str
    dim: int = 1
    cells: int = 4
    box: tuple = ()
    params: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: dict) -> "WeightSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise InvalidSpec("a weight spec needs a 'kind'")
        data = dict(data)
        kind = str(data.pop("kind")).upper()
        dim = int(data.pop("dim", 1))
        cells = data.pop("cells", 4)
        if isinstance(cells, list):
            cells = cells[0]
        box = tuple(tuple(b) for b in data.pop("box", ()) or ())
        if box and not isinstance(box[0], tuple):
            box = (box,)
        return cls(kind, dim, int(cells), box, data)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "cells": self.cells}
        if self.box:
            out["box"] = [list(b) for b in self.box]
        out.update(self.params)
        return out


def _grid(spec: WeightSpec) -> Grid:
    try:
        return Grid(spec.dim, spec.cells, spec.box)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc


def _position(pos, n: int, dim: int) -> tuple[int, ...]:
    if pos in (None, "last"):
        return (n - 1,) * dim
    if pos == "first":
        return (0,) * dim
    if pos == "center":
        return (n // 2,) * dim
    if isinstance(pos, int):
        return (pos,) if dim == 1 else tuple(np.unravel_index(pos, (n,) * dim))
    return tuple(int(p) for p in pos)


def generate(spec: WeightSpec | dict) -> WeightGrid:
    if isinstance(spec, dict):
        spec = WeightSpec.from_json(spec)
    kind, p = spec.kind.upper(), spec.params
    if kind not in KINDS:
        raise InvalidSpec(f"unknown weight kind {spec.kind!r}")
    grid = _grid(spec)
    n, dim = grid.cells, grid.dim
    try:
        if kind == "CONSTANT":
            c = float(p.get("c", 1.0))
            vals = np.full(grid.shape, c)
        elif kind == "STEP":
            levels = np.asarray(p["levels"], dtype=float)
            if levels.ndim != dim or any(n % s for s in levels.shape) or len(set(levels.shape)) != 1:
                raise InvalidSpec("STEP levels must tile the grid evenly")
            rep = n // levels.shape[0]
            vals = levels
            for axis in range(dim):
                vals = np.repeat(vals, rep, axis=axis)
        elif kind == "SPIKE":
            eps, big = float(p.get("eps", 1e-6)), float(p.get("K", 1.0))
            vals = np.full(grid.shape, eps)
            vals[_position(p.get("position", "last"), n, dim)] = big
        elif kind == "MONOTONE":
            ratio = float(p.get("ratio", 2.0))
            idx = np.indices(grid.shape).sum(axis=0)
            vals = ratio ** idx.astype(float)
        elif kind == "POWER":
            a = float(p["a"])
            center = p.get("center", [grid.box[k][0] for k in range(dim)])
            center = [center] if np.isscalar(center) else list(center)
            mesh = np.meshgrid(*[grid.centers(k) for k in range(dim)], indexing="ij")
            dist = np.sqrt(sum((x - c0) ** 2 for x, c0 in zip(mesh, center)))
            with np.errstate(divide="ignore"):
                vals = np.where(dist > 0, dist ** a, 0.0 if a > 0 else np.inf)
            if np.isinf(vals).any():
                # singular cell of a negative power: use the distance floor instead
                vals = np.where(np.isinf(vals), 1e-12**a, vals)
        else:  # LOGNORMAL
            seed = int(p.get("seed", 0))
            sigma = float(p.get("sigma", 1.0))
            vals = np.asarray(lognormal_values(seed, sigma, grid.size)).reshape(grid.shape)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidSpec):
            raise
        raise InvalidSpec(f"bad parameters for {kind}: {exc}") from exc
    if not np.isfinite(vals).all():
        raise InvalidSpec(f"{kind} produced non-finite values")
    return WeightGrid(grid, floor_values(vals))


def refine(w: WeightGrid, factor: int) -> WeightGrid:
    """Same step function on a grid with ``factor`` times more cells per axis."""
    if factor < 2:
        raise ValueError("refine factor must be >= 2")
    vals = w.values
    for axis in range(w.grid.dim):
        vals = np.repeat(vals, factor, axis=axis)
    return WeightGrid(w.grid.refined(factor), vals, allow_zero=not w.positive)


def load_manifest(path: str | Path) -> list[WeightSpec]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [data]
    return [WeightSpec.from_json(d) for d in data]


# ---------------------------------------------------------------------------
# Canonical fixtures

F1_LEVELS = [1.0, 3.0, 2.0, 6.0]


def f1() -> WeightGrid:
    return generate(WeightSpec("STEP", 1, 4, params={"levels": F1_LEVELS}))


def fixture_specs() -> dict[str, WeightSpec]:
    """The named fixture suite: small grids covering every generator kind."""
    S = WeightSpec
    return {
        "F1": S("STEP", 1, 4, params={"levels": F1_LEVELS}),
        "constant": S("CONSTANT", 1, 8, params={"c": 2.0}),
        "step8": S("STEP", 1, 8, params={"levels": [1, 5, 2, 2, 9, 1, 3, 4]}),
        "power_pos": S("POWER", 1, 16, params={"a": 0.5, "center": 0.0}),
        "power_neg": S("POWER", 1, 16, params={"a": -0.5, "center": 0.0}),
        "power_mid": S("POWER", 1, 16, params={"a": -0.3, "center": 0.5}),
        "spike": S("SPIKE", 1, 8, params={"eps": 1e-3, "K": 1.0, "position": "last"}),
        "spike_mid": S("SPIKE", 1, 9, params={"eps": 0.01, "K": 4.0, "position": "center"}),
        "staircase": S("MONOTONE", 1, 4, params={"ratio": 2.0}),
        "monotone12": S("MONOTONE", 1, 12, params={"ratio": 1.5}),
        "lognormal": S("LOGNORMAL", 1, 16, params={"seed": 7, "sigma": 0.8}),
        "lognormal_wide": S("LOGNORMAL", 1, 24, params={"seed": 11, "sigma": 1.5}),
        "const2d": S("CONSTANT", 2, 4, params={"c": 0.3}),
        "step2d": S("STEP", 2, 4, params={"levels": [[1, 2], [4, 3]]}),
        "power2d": S("POWER", 2, 6, params={"a": -0.5, "center": [0.5, 0.5]}),
        "lognormal2d": S("LOGNORMAL", 2, 6, params={"seed": 3, "sigma": 0.7}),
        "spike2d": S("SPIKE", 2, 5, params={"eps": 0.05, "K": 2.0, "position": "center"}),
    }


def fixture_suite() -> dict[str, WeightGrid]:
    return {name: generate(spec) for name, spec in fixture_specs().items()}


def is_constant(w: WeightGrid) -> bool:
    v = w.values
    return bool((v == v.flat[0]).all())


def random_weight(seed: int, dim: int, n: int) -> WeightGrid:
    """One seeded random positive weight; the seed also picks the value style.

    Styles: lognormal reals, dyadic rationals (exact float arithmetic), a few
    integer levels (many ties), and sparse spikes over a floor.
    """
    style = seed % 4
    size = n**dim
    u = uniforms(seed * 7919 + 17, size + 1)
    if style == 0:
        vals = lognormal_values(seed, 1.0, size)
    elif style == 1:
        vals = [math.floor(1 + x * 1023) / 64.0 for x in u[:size]]
    elif style == 2:
        vals = [float(1 + math.floor(x * 4)) for x in u[:size]]
    else:
        vals = [8.0 if x > 0.8 else 0.125 for x in u[:size]]
    return WeightGrid(Grid(dim, n), np.asarray(vals).reshape((n,) * dim))
