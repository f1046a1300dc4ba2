"""Checkers for the characterizations of weights u with Mu in A_inf.

Each checker measures the relevant constants on the grid and returns a
``CriterionVerdict``.  Pointwise chains are compared in exact rational
arithmetic wherever they are exact theorems about the discrete quantities;
chains through exp/log or irrational powers use a relative slack.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classes import _doubled_sums, a1_constant, ap_constant, weak_ainf_constant
from .errors import InvalidExponent
from .exact import leq_scaled, ratio_max, rel_excess
from .grid import ALL, CubeFamily, PrefixTable, WeightGrid, enumerate_cubes, window_extremes, windows
from .operators import maximal, maximal_iterates, maximal_power, maximal_values
from .rearrangement import _check_lambda, local_maximal, rank_for

CRITERIA = (
    "NEUGEBAUER",
    "MLAMBDA_EQUIV",
    "SUBLEVEL_THEOREM",
    "PROP1_CHAIN",
    "ITERATE_BOUND",
    "WEAK_AINF_RHI",
)


@dataclass(frozen=True)
class Thresholds:
    B: float = 10.0
    C0: float = 10.0
    chain_slack: float = 1e-9


DEFAULT_THRESHOLDS = Thresholds()


@dataclass
class CriterionVerdict:
    criterion: str
    measured: dict
    passed: bool
    witnesses: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "measured": _jsonable(self.measured),
            "pass": bool(self.passed),
            "witnesses": _jsonable(self.witnesses),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    return obj


def _cell(w: WeightGrid, i: int) -> list[int]:
    return [int(j) for j in np.unravel_index(i, w.grid.shape)]


# ---------------------------------------------------------------------------
# Neugebauer


def neugebauer(
    u: WeightGrid, s: float = 2.0, family: CubeFamily = ALL, thresholds: Thresholds = DEFAULT_THRESHOLDS
) -> CriterionVerdict:
    """C0 = max (M(u^s))^(1/s) / Mu, plus the forward chain M(Mu) <= C1 C0 Mu."""
    if not s > 1:
        raise InvalidExponent(f"Neugebauer needs s > 1, got {s}")
    mu = maximal(u, family).output
    v = maximal_power(u, s, family)
    c0, i0 = ratio_max(v.values, mu.values)
    c1 = a1_constant(v, family)
    mmu = maximal_values(mu, family)
    a1_mu, i1 = ratio_max(mmu, mu.values)
    bound = Fraction(c1.value) * Fraction(c0)
    chain = bool(leq_scaled(mmu, bound, mu.values).all())
    measured = {
        "s": s,
        "C0": c0,
        "a1_Mu": a1_mu,
        "a1_power_mean": c1.value,
        "chain_bound": float(bound),
        "chain_holds": chain,
    }
    witnesses = {"C0_cell": _cell(u, i0), "a1_Mu_cell": _cell(u, i1)}
    return CriterionVerdict("NEUGEBAUER", measured, c0 <= thresholds.C0, witnesses)


# ---------------------------------------------------------------------------
# m_lambda(Mu) against M(Mu), and the sublevel form of the theorem


@dataclass
class _MuData:
    mu: np.ndarray
    mmu: np.ndarray
    mlmu: np.ndarray


def _mu_data(u: WeightGrid, lam: float, family: CubeFamily) -> _MuData:
    mu = maximal(u, family).output
    mmu = maximal_values(mu, family)
    mlmu = local_maximal(mu, lam, family).values
    return _MuData(mu.values, mmu, mlmu)


def holds_at(data: _MuData, alpha: float) -> np.ndarray:
    """Per cell: alpha M(Mu)(x) <= m_lambda(Mu)(x), with the product rounded to a float."""
    return alpha * data.mmu <= data.mlmu


def mlambda_equivalence(
    u: WeightGrid, lam: float = 0.5, family: CubeFamily = ALL, thresholds: Thresholds = DEFAULT_THRESHOLDS
) -> CriterionVerdict:
    """B = max M(Mu)/m_lambda(Mu) (pass iff B <= threshold) and A = max m_lambda(Mu)/M(Mu)."""
    lam = _check_lambda(lam)
    d = _mu_data(u, lam, family)
    b, ib = ratio_max(d.mmu, d.mlmu)
    a, ia = ratio_max(d.mlmu, d.mmu)
    measured = {
        "lambda": lam,
        "B": b,
        "A": a,
        "mlambda_ge_Mu": bool((d.mlmu >= d.mu).all()),
        "MMu_ge_Mu": bool((d.mmu >= d.mu).all()),
    }
    witnesses = {"B_cell": _cell(u, ib), "A_cell": _cell(u, ia)}
    return CriterionVerdict("MLAMBDA_EQUIV", measured, b <= thresholds.B, witnesses)


def mlambda_holds_at(u: WeightGrid, lam: float, alpha: float, family: CubeFamily = ALL) -> bool:
    """Does M(Mu) <= (1/alpha) m_lambda(Mu) hold, in the float form alpha M(Mu) <= m_lambda(Mu)?"""
    return bool(holds_at(_mu_data(u, _check_lambda(lam), family), alpha).all())


def _alpha_below(b: float) -> float:
    """Largest float alpha with alpha <= 1/b exactly."""
    alpha = 1.0 / b
    if Fraction(alpha) * Fraction(b) > 1:
        alpha = math.nextafter(alpha, 0.0)
    return alpha


def discrete_beta(grid_cells: int, dim: int, lam: float, family: CubeFamily = ALL) -> float:
    """sup over cube sizes of (count - k - 1) / count, k = floor(lam count)."""
    best = 0.0
    for m in family.sides(grid_cells):
        c = m**dim
        best = max(best, (c - rank_for(lam, c) - 1) / c)
    return best


def sublevel_exhaustive(u: WeightGrid, lam: float, alphas, family: CubeFamily = ALL) -> np.ndarray:
    """Literal check of the sublevel statement, one row per alpha.

    Entry [a, x] is True when some cube Q_x containing x satisfies, for every
    cube Q containing x, #{y in Q_x : Mu(y) < alpha (Mu)_Q} <= count(Q_x) - k - 1
    with k = floor(lam count(Q_x)).  Thresholds alpha (Mu)_Q are float products.
    """
    lam = _check_lambda(lam)
    mu = maximal(u, family).output
    vals = mu.values.ravel()
    cubes = enumerate_cubes(u.grid, family)
    mem = np.zeros((u.grid.size, len(cubes)), dtype=bool)
    avg = np.empty(len(cubes))
    cap = np.empty(len(cubes))
    for j, q in enumerate(cubes):
        block = np.zeros(u.grid.shape, dtype=bool)
        block[q.slices()] = True
        mem[:, j] = block.ravel()
        avg[j] = mu.prefix.box_average(q)
        c = q.cell_count
        cap[j] = c - rank_for(lam, c) - 1
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    thr = alphas[:, None] * avg[None, :]  # (A, Q)
    below = (vals[None, :, None] < thr[:, None, :]).astype(np.int64)  # (A, y, Q)
    counts = np.matmul(mem.T.astype(np.int64)[None], below)  # (A, Q_x, Q)
    bad = (counts > cap[None, :, None]).astype(np.int64)
    # for cell x and candidate Q_x: number of cubes Q containing x that fail
    fails = np.matmul(mem.astype(np.int64)[None], np.transpose(bad, (0, 2, 1)))  # (A, x, Q_x)
    good = (fails == 0) & mem[None]
    return good.any(axis=2)


def sublevel_theorem(
    u: WeightGrid,
    lam: float = 0.5,
    family: CubeFamily = ALL,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    alpha: float | None = None,
    exhaustive: bool = False,
) -> CriterionVerdict:
    """Sublevel statement at alpha (default: the largest float <= 1/B).

    The default route uses the identity: the statement holds at x exactly when
    alpha M(Mu)(x) <= m_lambda(Mu)(x).  ``exhaustive`` runs the literal double
    cube loop instead.  Pass requires the statement to hold at every cell with
    alpha no smaller than 1/threshold.
    """
    lam = _check_lambda(lam)
    d = _mu_data(u, lam, family)
    b, _ = ratio_max(d.mmu, d.mlmu)
    if alpha is None:
        alpha = _alpha_below(b)
    if exhaustive:
        ok = sublevel_exhaustive(u, lam, [alpha], family)[0]
    else:
        ok = holds_at(d, alpha)
    holds = bool(ok.all())
    beta = discrete_beta(u.grid.cells, u.grid.dim, lam, family)
    measured = {
        "lambda": lam,
        "alpha": alpha,
        "beta": beta,
        "B": b,
        "holds": holds,
        "route": "exhaustive" if exhaustive else "identity",
    }
    witnesses = {"failing_cells": [_cell(u, i) for i in np.flatnonzero(~ok.ravel())]}
    passed = holds and alpha * thresholds.B >= 1
    return CriterionVerdict("SUBLEVEL_THEOREM", measured, passed, witnesses)


def alpha_scan_set(u: WeightGrid, lam: float, family: CubeFamily = ALL) -> np.ndarray:
    """Candidate alphas where the verdict can flip: every ratio m_lambda(Mu)/M(Mu) and its float neighbours."""
    d = _mu_data(u, _check_lambda(lam), family)
    r = np.unique(d.mlmu / d.mmu)
    out = np.concatenate([r, np.nextafter(r, 0.0), np.nextafter(r, np.inf)])
    return np.unique(out[(out > 0) & (out <= 1)])


def verdict_agreement(u: WeightGrid, lams, alphas=None, family: CubeFamily = ALL) -> dict:
    """Per (lambda, alpha): identity verdict vs exhaustive verdict, and the disagreement count."""
    rows, disagreements = [], 0
    for lam in lams:
        d = _mu_data(u, _check_lambda(lam), family)
        al = alpha_scan_set(u, lam, family) if alphas is None else np.asarray(alphas, dtype=float)
        ex = sublevel_exhaustive(u, lam, al, family).all(axis=1)
        for a, e in zip(al.tolist(), ex.tolist()):
            i = bool(holds_at(d, a).all())
            disagreements += i != e
            rows.append({"lambda": lam, "alpha": a, "mlambda": i, "sublevel": bool(e)})
    return {"rows": rows, "disagreements": disagreements}


# ---------------------------------------------------------------------------
# The Mu chain: A_p and power-A_1 bounds for Mu


def prop1_chain(
    u: WeightGrid,
    p: float = 2.0,
    r: float = 0.5,
    family: CubeFamily = ALL,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> CriterionVerdict:
    """Three links on every cube and the conclusion [Mu]_A1 <= [Mu]_Ap [(Mu)^r]_A1^(1/r).

    Link i: avg <= [Mu]_Ap geo.  Link ii: geo <= (avg (Mu)^r)^(1/r).
    Link iii: (avg (Mu)^r)^(1/r) <= [(Mu)^r]_A1^(1/r) min.
    """
    if not p > 1:
        raise InvalidExponent(f"p must exceed 1, got {p}")
    if not 0 < r < 1:
        raise InvalidExponent(f"r must lie in (0, 1), got {r}")
    slack = thresholds.chain_slack
    mu = maximal(u, family).output
    mv = mu.values
    ap = ap_constant(mu, p, family).value
    a1r = a1_constant(mu.with_values(mv**r), family).value
    a1_mu = a1_constant(mu, family).value
    t_mu, t_log, t_pow = mu.prefix, PrefixTable(np.log(mv)), PrefixTable(mv**r)
    worst = {"i": -math.inf, "ii": -math.inf, "iii": -math.inf}
    where = {}
    for m in family.sides(u.grid.cells):
        stride = family.stride(m)
        avg = t_mu.side_averages(m, stride)
        geo = np.exp(t_log.side_averages(m, stride))
        pm = t_pow.side_averages(m, stride) ** (1.0 / r)
        low = window_extremes(mv, m, stride)[1]
        links = {
            "i": (avg, ap * geo),
            "ii": (geo, pm),
            "iii": (pm, a1r ** (1.0 / r) * low),
        }
        for key, (lhs, rhs) in links.items():
            ex = (lhs - rhs) / rhs
            j = int(np.argmax(ex))
            if ex.flat[j] > worst[key]:
                worst[key] = float(ex.flat[j])
                where[key] = {"side": m, "anchor": [int(x) * stride for x in np.unravel_index(j, ex.shape)]}
    bound = ap * a1r ** (1.0 / r)
    printed = a1r * a1r ** (1.0 / r)
    conclusion = rel_excess(a1_mu, bound) <= slack
    links_ok = all(v <= slack for v in worst.values())
    measured = {
        "p": p,
        "r": r,
        "Ap_Mu": ap,
        "A1_Mu_r": a1r,
        "a1_Mu": a1_mu,
        "chain_bound": bound,
        "printed_bound": printed,
        "printed_bound_holds": a1_mu <= printed * (1 + slack),
        "link_i_excess": worst["i"],
        "link_ii_excess": worst["ii"],
        "link_iii_excess": worst["iii"],
        "conclusion_holds": conclusion,
    }
    return CriterionVerdict("PROP1_CHAIN", measured, links_ok and conclusion, {"worst_cubes": where})


# ---------------------------------------------------------------------------
# Iterates


def iterate_bound(
    u: WeightGrid, kmax: int = 4, family: CubeFamily = ALL, thresholds: Thresholds = DEFAULT_THRESHOLDS
) -> CriterionVerdict:
    """M^k u <= C^(k-1) Mu for k = 2..kmax with C = [Mu]_A1, compared exactly."""
    if kmax < 2:
        raise InvalidExponent(f"kmax must be >= 2, got {kmax}")
    its = maximal_iterates(u, kmax, family)
    mu = its[1]
    c = a1_constant(mu, family).value
    per_k, failing = {}, {}
    for k in range(2, kmax + 1):
        ok = leq_scaled(its[k].values, Fraction(c) ** (k - 1), mu.values)
        per_k[str(k)] = bool(ok.all())
        if not ok.all():
            failing[str(k)] = [_cell(u, i) for i in np.flatnonzero(~ok.ravel())]
    measured = {"kmax": kmax, "C": c, "holds": per_k}
    return CriterionVerdict("ITERATE_BOUND", measured, all(per_k.values()), {"failing_cells": failing})


# ---------------------------------------------------------------------------
# Weak A_inf reverse Hölder


def layer_cake(win: np.ndarray, r: float) -> np.ndarray:
    """Closed-form sum over a window of r * int_0^inf t^(r-1) #{u > t} dt."""
    v = np.sort(win, axis=-1)
    count = v.shape[-1]
    steps = np.diff(v**r, axis=-1, prepend=0.0)
    return (steps * np.arange(count, 0, -1)).sum(axis=-1)


def weak_ainf_rhi(
    u: WeightGrid,
    delta: float = 0.5,
    r: float | None = None,
    family: CubeFamily = ALL,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> CriterionVerdict:
    """avg_Q u^r <= (1 + C' r / (q - r)) (avg_2Q u)^r on every admissible Q.

    q = 1/(1 - delta) and C' = (C 2^dim)^q with C the measured weak-A_inf
    constant; the form with C itself is reported alongside.
    """
    if not 0 < delta < 1:
        raise InvalidExponent(f"delta must lie in (0, 1), got {delta}")
    q = 1.0 / (1.0 - delta)
    if r is None:
        r = (1.0 + q) / 2
    if not 1 < r < q:
        raise InvalidExponent(f"r must lie in (1, {q}), got {r}")
    dim = u.grid.dim
    c = weak_ainf_constant(u, delta, family).value
    c_eff = (c * 2**dim) ** q
    factor = 1 + c_eff * r / (q - r)
    factor_raw = 1 + c * r / (q - r)
    t_pow = PrefixTable(u.values**r)
    worst, worst_raw, cake_err, where = -math.inf, -math.inf, 0.0, None
    for m in family.sides(u.grid.cells):
        got = _doubled_sums(u, family, m)
        if got is None:
            continue
        _, big, ok = got
        if not ok.any():
            continue
        stride = family.stride(m)
        lhs = t_pow.side_averages(m, stride)
        k = big / float((2 * m) ** dim)
        cake = layer_cake(windows(u.values, m, stride), r) / m**dim
        cake_err = max(cake_err, float(np.max(np.abs(cake - lhs) / lhs)))
        ex = np.where(ok, (lhs - factor * k**r) / (factor * k**r), -np.inf)
        ex_raw = np.where(ok, (lhs - factor_raw * k**r) / (factor_raw * k**r), -np.inf)
        j = int(np.argmax(ex))
        if ex.flat[j] > worst:
            worst = float(ex.flat[j])
            where = {"side": m, "anchor": [int(x) * stride for x in np.unravel_index(j, ex.shape)]}
        worst_raw = max(worst_raw, float(ex_raw.max()))
    measured = {
        "delta": delta,
        "r": r,
        "C": c,
        "C_effective": c_eff,
        "factor": factor,
        "excess": worst,
        "raw_factor": factor_raw,
        "raw_form_holds": worst_raw <= thresholds.chain_slack,
        "layer_cake_rel_error": cake_err,
    }
    passed = worst <= thresholds.chain_slack and cake_err <= thresholds.chain_slack
    return CriterionVerdict("WEAK_AINF_RHI", measured, passed, {"worst_cube": where})


# ---------------------------------------------------------------------------
# Bundle


@dataclass(frozen=True)
class CriteriaConfig:
    lam: float = 0.5
    p: float = 2.0
    r: float = 0.5
    s: float = 2.0
    delta: float = 0.5
    rhi_r: float | None = None
    kmax: int = 4
    thresholds: Thresholds = DEFAULT_THRESHOLDS


@dataclass
class CriteriaReport:
    weight_id: str
    family: CubeFamily
    verdicts: list[CriterionVerdict]

    def to_json(self) -> dict:
        return {
            "weight_id": self.weight_id,
            "family": self.family.to_json(),
            "verdicts": [v.to_json() for v in self.verdicts],
        }

    def verdict(self, name: str) -> CriterionVerdict:
        for v in self.verdicts:
            if v.criterion == name:
                return v
        raise KeyError(name)


def thread_count() -> int:
    raw = os.environ.get("AINFTY_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_all(
    u: WeightGrid,
    config: CriteriaConfig = CriteriaConfig(),
    family: CubeFamily = ALL,
    weight_id: str = "",
    threads: int | None = None,
) -> CriteriaReport:
    """Every criterion with the configured parameters; the weak-A_inf check only when some 2Q fits."""
    th = config.thresholds
    jobs = [
        lambda: neugebauer(u, config.s, family, th),
        lambda: mlambda_equivalence(u, config.lam, family, th),
        lambda: sublevel_theorem(u, config.lam, family, th),
        lambda: prop1_chain(u, config.p, config.r, family, th),
        lambda: iterate_bound(u, config.kmax, family, th),
    ]
    if 2 <= u.grid.cells:
        jobs.append(lambda: weak_ainf_rhi(u, config.delta, config.rhi_r, family, th))
    workers = thread_count() if threads is None else threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(lambda f: f(), jobs))
    else:
        verdicts = [f() for f in jobs]
    return CriteriaReport(weight_id, family, verdicts)
