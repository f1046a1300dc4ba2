"""Non-increasing rearrangement and the operators built on it.

Under the piecewise-constant model, ``(f chi_Q)^*(t)`` is an order statistic of
the cell values in ``Q``: the ``floor(t / h^dim)``-th largest (0-based), or 0 once
the index runs past the cell count.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidExponent
from .exact import ratio_max
from .grid import ALL, Cube, CubeFamily, PrefixTable, WeightGrid, cellwise_max, cube_values, windows
from .operators import maximal_values

# snaps float products like 0.3 * 10 onto the integer they represent
_INDEX_SLACK = 1e-9


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0 < lam < 1:
        raise InvalidExponent(f"lambda must lie in (0, 1), got {lam}")
    return lam


def order_index(measure_in_cells: float) -> int:
    """floor of a measure expressed in cell units, robust to representation error."""
    return int(math.floor(measure_in_cells + _INDEX_SLACK))


def rank_for(lam: float, count: int) -> int:
    """0-based descending rank picked by (f chi_Q)^*(lam |Q|) for a cube of ``count`` cells."""
    return min(order_index(lam * count), count - 1)


def rearrangement(w: WeightGrid, cube: Cube, t: float) -> float:
    """(|w| chi_Q)^*(t)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    vals = np.sort(np.abs(cube_values(w.values, cube)))[::-1]
    k = order_index(t / w.grid.cell_volume)
    return float(vals[k]) if k < vals.size else 0.0


def _kth_largest(win: np.ndarray, k: int) -> np.ndarray:
    count = win.shape[-1]
    pos = count - 1 - k
    return np.partition(win, pos, axis=-1)[..., pos]


def local_maximal(w: WeightGrid, lam: float, family: CubeFamily = ALL) -> WeightGrid:
    """m_lambda w: per cell, the largest (w chi_Q)^*(lam |Q|) over containing cubes."""
    lam = _check_lambda(lam)
    vals = np.abs(w.values)
    dim = w.grid.dim

    def side(m):
        return _kth_largest(windows(vals, m, family.stride(m)), rank_for(lam, m**dim))

    res = cellwise_max(w.grid, family, side)
    return w.with_values(res.values, allow_zero=not w.positive)


def _mean_oscillations(table: PrefixTable, m: int, stride: int) -> np.ndarray:
    """Exact mean absolute deviation of every side-m window, correctly rounded."""
    ints = table.ints
    count = m**table.dim
    win = windows(ints, m, stride)
    if table.exact_float and float(np.abs(ints).sum()) * count * 2 < 2**53:
        sums = win.sum(axis=-1)
        dev = np.abs(win * count - sums[..., None]).sum(axis=-1)
        return dev / float(table.scale * count * count)
    win = win.astype(object)
    sums = win.sum(axis=-1)
    dev = np.abs(win * count - sums[..., None]).sum(axis=-1)
    den = table.scale * count * count
    return np.array([int(d) / den for d in dev.ravel().tolist()], dtype=float).reshape(dev.shape)


def sharp_maximal(w: WeightGrid, family: CubeFamily = ALL) -> WeightGrid:
    """Fefferman-Stein f#: per cell, the largest mean oscillation over containing cubes."""
    table = w.prefix
    res = cellwise_max(w.grid, family, lambda m: _mean_oscillations(table, m, family.stride(m)))
    return w.with_values(res.values, allow_zero=True)


def _best_constant_spread(win: np.ndarray, k: int) -> np.ndarray:
    """min over c of the k-th largest |v - c|: half the narrowest span covering count - k values."""
    count = win.shape[-1]
    keep = count - k
    v = np.sort(win, axis=-1)
    widths = v[..., keep - 1 :] - v[..., : count - keep + 1]
    return widths.min(axis=-1) / 2


def local_sharp_maximal(w: WeightGrid, lam: float, family: CubeFamily = ALL) -> WeightGrid:
    """M^#_lambda: per cell, the largest inf_c ((w - c) chi_Q)^*(lam |Q|) over containing cubes."""
    lam = _check_lambda(lam)
    vals = w.values
    dim = w.grid.dim

    def side(m):
        return _best_constant_spread(windows(vals, m, family.stride(m)), rank_for(lam, m**dim))

    res = cellwise_max(w.grid, family, side)
    return w.with_values(res.values, allow_zero=True)


def bmo_norm(w: WeightGrid, family: CubeFamily = ALL) -> float:
    return float(sharp_maximal(w, family).values.max())


def lerner_constant(u: WeightGrid, lam: float, family: CubeFamily = ALL) -> dict:
    """Smallest c with m_lambda(Mu) <= c u# + Mu on every cell (inf if u# vanishes where needed)."""
    mu = maximal_values(u, family)
    mlmu = local_maximal(u.with_values(mu), lam, family).values
    sharp = sharp_maximal(u, family).values
    excess = np.maximum(mlmu - mu, 0.0)
    c, i = ratio_max(excess, sharp)
    cell = [int(j) for j in np.unravel_index(i, u.grid.shape)]
    return {"name": "lerner", "value": c, "cell": cell, "lambda": lam}


def mlambda_over_m(u: WeightGrid, lam: float, family: CubeFamily = ALL) -> dict:
    """max of m_lambda(Mu) / Mu, the finite constant of m_lambda(Mu) <= c Mu."""
    mu = maximal_values(u, family)
    mlmu = local_maximal(u.with_values(mu), lam, family).values
    c, i = ratio_max(mlmu, mu)
    cell = [int(j) for j in np.unravel_index(i, u.grid.shape)]
    return {"name": "mlambda_Mu_over_Mu", "value": c, "cell": cell, "lambda": lam}
