"""Hardy-Littlewood maximal operator over a cube family, plus power and iterate variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidExponent
from .grid import ALL, Cube, CubeFamily, PrefixTable, WeightGrid, cellwise_max, constant_windows


@dataclass(frozen=True)
class MaximalResult:
    output: WeightGrid
    witnesses: list[Cube] | None = None

    @property
    def values(self) -> np.ndarray:
        return self.output.values


def _result_grid(w: WeightGrid, values: np.ndarray) -> WeightGrid:
    return w.with_values(values, allow_zero=not w.positive)


def maximal_values(w: WeightGrid, family: CubeFamily = ALL) -> np.ndarray:
    table = w.prefix
    res = cellwise_max(w.grid, family, lambda m: table.side_averages(m, family.stride(m)))
    return res.values


def maximal(w: WeightGrid, family: CubeFamily = ALL, witness: bool = True) -> MaximalResult:
    """Non-centred maximal function: per cell, the largest average over family cubes containing it."""
    table = w.prefix
    res = cellwise_max(
        w.grid, family, lambda m: table.side_averages(m, family.stride(m)), witness=witness
    )
    return MaximalResult(_result_grid(w, res.values), res.witnesses)


def power_means(table_pow: PrefixTable, table: PrefixTable, m: int, stride: int, s: float, values=None):
    """(avg of w^s)^(1/s) per side-m cube, never below the plain average.

    The clamp only restores the power-mean inequality where rounding broke it;
    on cubes where w is constant the power mean is the average itself.
    """
    avg = table.side_averages(m, stride)
    pm = np.maximum(table_pow.side_averages(m, stride) ** (1.0 / s), avg)
    if values is not None:
        pm = np.where(constant_windows(values, m, stride), avg, pm)
    return pm


def maximal_power(w: WeightGrid, s: float, family: CubeFamily = ALL) -> WeightGrid:
    """(M(w^s))^(1/s) for s >= 1."""
    if not s >= 1:
        raise InvalidExponent(f"maximal_power needs s >= 1, got {s}")
    if s == 1:
        return maximal(w, family, witness=False).output
    table = w.prefix
    table_pow = PrefixTable(w.values**s)
    res = cellwise_max(
        w.grid, family, lambda m: power_means(table_pow, table, m, family.stride(m), s, w.values)
    )
    return _result_grid(w, res.values)


def maximal_iterate(w: WeightGrid, k: int, family: CubeFamily = ALL) -> WeightGrid:
    if k < 1:
        raise InvalidExponent(f"iterate count must be >= 1, got {k}")
    out = w
    for _ in range(k):
        out = maximal(out, family, witness=False).output
    return out


def maximal_iterates(w: WeightGrid, k: int, family: CubeFamily = ALL) -> list[WeightGrid]:
    """[w, Mw, M^2 w, ..., M^k w]."""
    out = [w]
    for _ in range(k):
        out.append(maximal(out[-1], family, witness=False).output)
    return out
