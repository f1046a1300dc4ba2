"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line; the lines are printed together at
the end of the run (see ``pytest_terminal_summary`` in conftest).
"""

import math
import time

import numpy as np

from ainfty.classes import (
    a1_constant,
    ainf_sublevel_beta,
    ap_constant,
    doubling_constant,
    rhi_constant,
    weak_ainf_constant,
)
from ainfty.cli import main
from ainfty.constructors import (
    a1_decompose_sharp,
    a1_factorize_rdf,
    coifman_rochberg,
    local_maximal_a1,
    rubio_de_francia,
    sharp_variant,
)
from ainfty.criteria import iterate_bound, neugebauer, prop1_chain, verdict_agreement, weak_ainf_rhi
from ainfty.errors import NotComputable
from ainfty.fixtures import is_constant, random_weight, refine
from ainfty.grid import ALL, DYADIC, Cube, dump_weight
from ainfty.operators import maximal_iterate, maximal_power, maximal_values
from ainfty.oracle import oracle
from ainfty.rearrangement import local_maximal, local_sharp_maximal, rearrangement, sharp_maximal

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)


def _arr_rel(got, ref, floor: float = 0.0) -> float:
    got, ref = np.asarray(got, dtype=float), np.asarray(ref, dtype=float)
    diff = np.abs(got - ref)
    scale = np.maximum(np.abs(ref), floor)
    with np.errstate(invalid="ignore", divide="ignore"):
        return float(np.max(np.where(diff == 0, 0.0, diff / scale)))


# ---------------------------------------------------------------------------
# 1. oracle equivalence


def _oracle_mismatches(w, family, lam) -> list[str]:
    bad = []

    def exact(name, got, ref):
        if not np.array_equal(np.asarray(got), np.asarray(ref)):
            bad.append(name)

    def near(name, got, ref, floor=0.0):
        if _arr_rel(got, ref, floor) > 1e-12:
            bad.append(name)

    exact("M", maximal_values(w, family), oracle("maximal", w, family))
    exact("M^3", maximal_iterate(w, 3, family).values, oracle("maximal_iterate", w, family, k=3))
    near("M_s", maximal_power(w, 1.5, family).values, oracle("maximal_power", w, family, s=1.5))
    exact("m_lambda", local_maximal(w, lam, family).values, oracle("local_maximal", w, family, lam=lam))
    exact("f_sharp", sharp_maximal(w, family).values, oracle("sharp_maximal", w, family))
    near(
        "M_lambda_sharp",
        local_sharp_maximal(w, lam, family).values,
        oracle("local_sharp_maximal", w, family, lam=lam),
        floor=w.values.max(),
    )
    n, dim = w.grid.cells, w.grid.dim
    for side in sorted({1, (n + 1) // 2, n}):
        cube = Cube(side, (n - side,) * dim)
        for t in (0.0, 0.3 * cube.volume(w.grid.h), 0.75 * cube.volume(w.grid.h)):
            exact("f_star", rearrangement(w, cube, t), oracle("rearrangement", w, family, cube=cube, t=t))
    near("A1", a1_constant(w, family).value, oracle("a1", w, family))
    near("Ap", ap_constant(w, 2.5, family).value, oracle("ap", w, family, p=2.5))
    near("RHI", rhi_constant(w, 2.0, family).value, oracle("rhi", w, family, r=2.0))
    exact("beta", ainf_sublevel_beta(w, 0.6, family).value, oracle("sublevel_beta", w, family, alpha=0.6))
    try:
        dbl = doubling_constant(w, family).value
        weak = weak_ainf_constant(w, 0.5, family).value
    except NotComputable:
        if oracle("doubling", w, family) != -math.inf:
            bad.append("doubling admissibility")
    else:
        near("doubling", dbl, oracle("doubling", w, family))
        near("weak_ainf", weak, oracle("weak_ainf", w, family, delta=0.5))
    return bad


def test_criterion_01_oracle_equivalence():
    start = time.perf_counter()
    cases = [(seed, 1, 1 + seed % 64) for seed in range(200)]
    cases += [(1000 + i, 2, 1 + i % 16) for i in range(50)]
    failures = []
    for i, (seed, dim, n) in enumerate(cases):
        w = random_weight(seed, dim, n)
        family = ALL if i % 2 == 0 else DYADIC
        lam = (0.25, 0.5, 0.75)[i % 3]
        bad = _oracle_mismatches(w, family, lam)
        if bad:
            failures.append((seed, dim, n, bad))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed <= 60
    record(1, "oracle equivalence", ok, f"{len(cases)} weights, {len(failures)} mismatching, {elapsed:.1f}s")
    assert not failures, failures[:5]
    assert elapsed <= 60


# ---------------------------------------------------------------------------
# 2. pointwise inequality suite


def _pointwise_failures(name, w) -> list[str]:
    bad = []
    v = w.values
    mf = maximal_values(w)
    if not (mf >= v).all():
        bad.append("Mf >= f")
    if not (sharp_maximal(w).values <= 2 * mf).all():
        bad.append("f# <= 2Mf")
    for lam in (0.25, 0.5, 0.75):
        if not (local_maximal(w, lam).values >= v).all():
            bad.append(f"m_lambda f >= f at {lam}")
    for s in (1.0, 1.5, 2.0, 3.0):
        if not (maximal_power(w, s).values >= mf).all():
            bad.append(f"(M u^s)^(1/s) >= Mu at {s}")
    # monotonicity: two exact majorants of w
    bumped = v.copy()
    bumped.flat[int(np.argmin(v))] = v.max()
    for big in (np.maximum(v, np.median(v)), bumped):
        g = w.with_values(big)
        if not (maximal_values(g) >= mf).all():
            bad.append("M monotone")
        if not (local_maximal(g, 0.5).values >= local_maximal(w, 0.5).values).all():
            bad.append("m_lambda monotone")
        whole = Cube(w.grid.cells, (0,) * w.grid.dim)
        for t in (0.0, 0.25, 0.5, 0.9):
            if rearrangement(g, whole, t) < rearrangement(w, whole, t):
                bad.append("f* monotone")
    # homogeneity with scalings that are exact in binary floating point
    for c in (0.25, 2.0, 8.0):
        g = w.with_values(c * v)
        if not np.array_equal(maximal_values(g), c * mf):
            bad.append(f"M homogeneous at {c}")
        if not np.array_equal(local_maximal(g, 0.5).values, c * local_maximal(w, 0.5).values):
            bad.append(f"m_lambda homogeneous at {c}")
        whole = Cube(w.grid.cells, (0,) * w.grid.dim)
        if rearrangement(g, whole, 0.5) != c * rearrangement(w, whole, 0.5):
            bad.append(f"f* homogeneous at {c}")
    return [f"{name}: {b}" for b in bad]


def test_criterion_02_pointwise_suite(suite):
    failures = [f for name, w in suite.items() for f in _pointwise_failures(name, w)]
    record(2, "pointwise inequality suite", not failures, f"{len(suite)} fixtures, {len(failures)} failures")
    assert not failures, failures


# ---------------------------------------------------------------------------
# 3. proposition-1 chain


def test_criterion_03_prop1_chain(suite):
    failures = []
    for name, w in suite.items():
        for p in (2.0, 4.0):
            for r in (0.25, 0.5):
                v = prop1_chain(w, p, r)
                if not (v.passed and v.measured["conclusion_holds"]):
                    failures.append((name, p, r, v.measured))
    record(3, "Mu-chain links and conclusion", not failures, f"{len(failures)} failing cases")
    assert not failures, failures[:3]


# ---------------------------------------------------------------------------
# 4. sublevel statement against the m_lambda(Mu) form


def test_criterion_04_sublevel_identity():
    rows = disagreements = 0
    for seed in range(500):
        w = random_weight(seed, 1, 1 + seed % 12)
        got = verdict_agreement(w, (0.25, 0.5, 0.75))
        rows += len(got["rows"])
        disagreements += got["disagreements"]
    record(4, "sublevel vs m_lambda(Mu) verdicts", disagreements == 0, f"{rows} rows, {disagreements} disagreements")
    assert disagreements == 0


# ---------------------------------------------------------------------------
# 5. Neugebauer forward chain


def test_criterion_05_neugebauer_chain(suite):
    failures = [
        (name, s) for name, w in suite.items() for s in (1.5, 2.0) if not neugebauer(w, s).measured["chain_holds"]
    ]
    record(5, "forward chain M(Mu) <= [power mean]_A1 C0 Mu", not failures, f"{len(failures)} failing cases")
    assert not failures


# ---------------------------------------------------------------------------
# 6. weak-A_inf reverse Hölder


def test_criterion_06_weak_ainf_rhi(suite):
    failures, cases = [], 0
    for name, w in suite.items():
        for delta in (0.3, 0.5, 0.7):
            q = 1 / (1 - delta)
            for frac in (0.25, 0.5, 0.75):
                r = 1 + frac * (q - 1)
                v = weak_ainf_rhi(w, delta, r)
                cases += 1
                if not v.passed:
                    failures.append((name, delta, r, v.measured["excess"]))
    record(6, "weak-A_inf reverse Holder", not failures, f"{cases} cases, {len(failures)} failing")
    assert not failures, failures[:3]


# ---------------------------------------------------------------------------
# 7. iterate bound


def test_criterion_07_iterate_bound(suite):
    failures = [name for name, w in suite.items() if not iterate_bound(w, 4).passed]
    record(7, "M^k u <= [Mu]_A1^(k-1) Mu for k <= 4", not failures, f"{len(failures)} failing fixtures")
    assert not failures


# ---------------------------------------------------------------------------
# 8. Rubio de Francia


def test_criterion_08_rubio_de_francia(suite):
    failures = []
    for name, w in suite.items():
        c = rubio_de_francia(w, 40).certificates
        _, k = a1_factorize_rdf(w, 40)
        ok = c["bound_a"] and c["bound_b"] and c["bound_c"] and ((k.values >= 0.5) & (k.values <= 1)).all()
        if not ok:
            failures.append(name)
    record(8, "Rubio de Francia bounds and factorization (K=40)", not failures, f"{len(failures)} failing fixtures")
    assert not failures


# ---------------------------------------------------------------------------
# 9. constructors


def test_criterion_09_constructors(suite):
    failures, worst_drift = [], 0.0
    for name, w in suite.items():
        dec = a1_decompose_sharp(w)
        if dec.certificates["reconstruction_rel_error"] > 1e-12:
            failures.append((name, "decompose reconstruction"))
        out, k = a1_factorize_rdf(w, 40)
        if _arr_rel(k.values * out.values, w.values) > 1e-12:
            failures.append((name, "factorization reconstruction"))
        if is_constant(w):
            continue
        values = {
            "(Mf)^d": coifman_rochberg(w, 0.5).a1.value,
            "(f#)^d": sharp_variant(w, w, c=1, d=0).a1.value,
            "(m_lambda u)^d": local_maximal_a1(w, 0.5).a1.value,
            "(c f# + d m_lambda u)^d": sharp_variant(w, w, c=1, d=1).a1.value,
        }
        failures += [(name, key) for key, val in values.items() if not math.isfinite(val)]
        fine = coifman_rochberg(refine(w, 2), 0.5).a1.value
        drift = abs(fine - values["(Mf)^d"]) / values["(Mf)^d"]
        worst_drift = max(worst_drift, drift)
        if drift > 0.10:
            failures.append((name, f"refinement drift {drift:.3f}"))
    record(9, "constructors", not failures, f"max (Mf)^d drift {worst_drift:.2%}, {len(failures)} failures")
    assert not failures, failures


# ---------------------------------------------------------------------------
# 10. determinism


def test_criterion_10_determinism(suite, tmp_path, capsys, monkeypatch):
    failures = []
    for name, w in suite.items():
        path = tmp_path / f"{name}.json"
        dump_weight(w, path)
        outs = []
        for threads in ("1", "1", "4"):
            monkeypatch.setenv("AINFTY_THREADS", threads)
            assert main(["analyze", str(path)]) == 0
            outs.append(capsys.readouterr().out)
        if len(set(outs)) != 1:
            failures.append(name)
    record(10, "byte-identical reports across runs and thread counts", not failures, f"{len(failures)} differing")
    assert not failures
