"""Analysis report assembly, deterministic JSON output, and plot-ready CSV."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .classes import (
    a1_constant,
    ainf_sublevel_beta,
    ap_constant,
    doubling_constant,
    rhi_constant,
    weak_ainf_constant,
)
from .constructors import coifman_rochberg, rubio_de_francia
from .criteria import CriteriaConfig, Thresholds, _jsonable, run_all
from .errors import AinftyError, InvalidExponent, NotComputable
from .grid import CubeFamily, WeightGrid
from .operators import maximal_values
from .rearrangement import bmo_norm, local_maximal, sharp_maximal

CSV_COLUMNS = ("u", "Mu", "m_lambda_Mu", "M_Mu", "f_sharp")


@dataclass(frozen=True)
class RunConfig:
    family: str = "all"
    max_side: int | None = None
    lambdas: tuple[float, ...] = (0.5,)
    ps: tuple[float, ...] = (2.0,)
    r: float = 0.5
    s: float = 2.0
    delta: float = 0.5
    alpha: float = 0.5
    K: int = 40
    kmax: int = 4
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        if not self.lambdas or not all(0 < x < 1 for x in self.lambdas):
            raise InvalidExponent("every lambda must lie in (0, 1)")
        if not self.ps or not all(p > 1 for p in self.ps):
            raise InvalidExponent("every p must exceed 1")
        if not 0 < self.r < 1:
            raise InvalidExponent("r must lie in (0, 1)")
        if not self.s > 1:
            raise InvalidExponent("s must exceed 1")
        if not 0 < self.delta < 1:
            raise InvalidExponent("delta must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise InvalidExponent("alpha must lie in (0, 1)")
        if self.K < 1:
            raise InvalidExponent("K must be >= 1")

    @property
    def cube_family(self) -> CubeFamily:
        return CubeFamily(self.family, self.max_side)

    def criteria(self) -> CriteriaConfig:
        return CriteriaConfig(
            lam=self.lambdas[0],
            p=self.ps[0],
            r=self.r,
            s=self.s,
            delta=self.delta,
            kmax=self.kmax,
            thresholds=self.thresholds,
        )

    def to_json(self) -> dict:
        out = asdict(self)
        out["lambdas"] = list(self.lambdas)
        out["ps"] = list(self.ps)
        return out


def _maybe(fn):
    try:
        return fn().to_json()
    except NotComputable as exc:
        return {"value": None, "reason": str(exc)}


def cell_fields(u: WeightGrid, lam: float, family: CubeFamily) -> dict:
    mu = u.with_values(maximal_values(u, family))
    return {
        "u": u.values.ravel().tolist(),
        "Mu": mu.values.ravel().tolist(),
        "m_lambda_Mu": local_maximal(mu, lam, family).values.ravel().tolist(),
        "M_Mu": maximal_values(mu, family).ravel().tolist(),
        "f_sharp": sharp_maximal(u, family).values.ravel().tolist(),
    }


def analyze(u: WeightGrid, config: RunConfig = RunConfig(), weight_id: str = "") -> dict:
    family = config.cube_family
    family.sides(u.grid.cells)  # validates max_side against the grid
    constants = [a1_constant(u, family).to_json()]
    constants += [ap_constant(u, p, family).to_json() for p in config.ps]
    constants.append(rhi_constant(u, config.s, family).to_json())
    constants.append(ainf_sublevel_beta(u, config.alpha, family).to_json())
    constants.append(_maybe(lambda: doubling_constant(u, family)))
    constants.append(_maybe(lambda: weak_ainf_constant(u, config.delta, family)))
    constants.append({"name": "BMO", "value": bmo_norm(u, family), "params": {}})
    mu = u.with_values(maximal_values(u, family))
    constants.append({**a1_constant(mu, family).to_json(), "name": "A1_Mu"})
    rdf = rubio_de_francia(u, config.K, family)
    cr = coifman_rochberg(u, config.delta, family)
    constructions = {
        "rubio_de_francia": {"K": config.K, "a1": rdf.a1.value, "certificates": rdf.certificates},
        "coifman_rochberg": {"delta": config.delta, "a1": cr.a1.value},
    }
    criteria = run_all(u, config.criteria(), family, weight_id)
    return {
        "tool": "ainfty",
        "version": __version__,
        "config": config.to_json(),
        "weight": {
            "id": weight_id,
            "dim": u.grid.dim,
            "cells": list(u.grid.shape),
            "box": [list(b) for b in u.grid.box],
        },
        "constants": constants,
        "constructions": constructions,
        "criteria": criteria.to_json(),
        "cells": cell_fields(u, config.lambdas[0], family),
    }


def dumps(report: dict) -> str:
    """Deterministic JSON: shortest round-trip floats, infinities as strings."""
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def plot_rows(report: dict) -> tuple[list[str], list[list]]:
    """Tidy rows (one per cell) with cell-centre coordinates."""
    try:
        weight, cells = report["weight"], report["cells"]
        dim, n = weight["dim"], weight["cells"][0]
        box = weight["box"]
        cols = [cells[c] for c in CSV_COLUMNS]
    except (KeyError, TypeError, IndexError) as exc:
        raise AinftyError(f"report lacks per-cell data: {exc}") from exc
    coord_names = ["x", "y"][:dim]
    header = ["cell"] + coord_names + list(CSV_COLUMNS)
    rows = []
    for flat in range(n**dim):
        idx = np.unravel_index(flat, (n,) * dim)
        coords = [box[k][0] + (idx[k] + 0.5) * (box[k][1] - box[k][0]) / n for k in range(dim)]
        rows.append([flat] + coords + [col[flat] for col in cols])
    return header, rows


def to_csv(report: dict) -> str:
    header, rows = plot_rows(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
