import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ainfty.criteria import (
    CRITERIA,
    Thresholds,
    alpha_scan_set,
    iterate_bound,
    layer_cake,
    mlambda_equivalence,
    mlambda_holds_at,
    neugebauer,
    prop1_chain,
    run_all,
    sublevel_exhaustive,
    sublevel_theorem,
    verdict_agreement,
    weak_ainf_rhi,
)
from ainfty.errors import InvalidExponent
from ainfty.fixtures import generate, random_weight
from ainfty.grid import DYADIC
from ainfty.oracle import oracle
from strategies import weight, weights


def test_constant_all_pass(suite):
    for name in ("constant", "const2d"):
        rep = run_all(suite[name])
        assert all(v.passed for v in rep.verdicts)
        m = {v.criterion: v.measured for v in rep.verdicts}
        assert m["NEUGEBAUER"]["C0"] == 1.0
        assert m["MLAMBDA_EQUIV"]["A"] == m["MLAMBDA_EQUIV"]["B"] == 1.0
        assert m["SUBLEVEL_THEOREM"]["alpha"] == 1.0
        assert m["PROP1_CHAIN"]["chain_bound"] == 1.0 and m["PROP1_CHAIN"]["a1_Mu"] == 1.0
        assert m["ITERATE_BOUND"]["C"] == 1.0


def test_f1_defaults(F1):
    rep = run_all(F1, weight_id="F1")
    assert [v.criterion for v in rep.verdicts] == list(CRITERIA)
    assert all(v.passed for v in rep.verdicts)
    json.dumps(rep.to_json())


def test_neugebauer_f1(F1):
    v = neugebauer(F1, 2)
    ref = oracle("maximal_power", F1, s=2) / oracle("maximal", F1)
    assert math.isclose(v.measured["C0"], ref.max(), rel_tol=1e-12)
    assert v.measured["chain_holds"]
    assert v.measured["a1_Mu"] <= v.measured["chain_bound"]
    with pytest.raises(InvalidExponent):
        neugebauer(F1, 1.0)


def test_mlambda_f1(F1):
    v = mlambda_equivalence(F1, 0.5)
    assert v.measured["B"] == 1.25 and v.witnesses["B_cell"] == [2]
    assert v.measured["A"] == 1.0
    assert v.measured["mlambda_ge_Mu"] and v.measured["MMu_ge_Mu"]
    assert mlambda_equivalence(F1, 0.25).passed == v.passed


def test_sublevel_f1_matches_mlambda(F1):
    for lam in (0.25, 0.5, 0.75):
        m = mlambda_equivalence(F1, lam)
        s_id = sublevel_theorem(F1, lam)
        s_ex = sublevel_theorem(F1, lam, exhaustive=True)
        assert s_id.passed == s_ex.passed == m.passed
        assert s_id.measured["holds"] and s_ex.measured["holds"]
        assert s_id.measured["alpha"] * m.measured["B"] <= 1


def test_sublevel_threshold_fail():
    w = generate({"kind": "SPIKE", "cells": 8, "eps": 1e-3, "K": 1.0})
    tight = Thresholds(B=1.0)
    m = mlambda_equivalence(w, 0.75, thresholds=tight)
    s = sublevel_theorem(w, 0.75, thresholds=tight)
    assert m.measured["B"] > 1
    assert not m.passed and not s.passed


def test_spike_agreement_grid():
    for k in (1.0, 1e3):
        w = generate({"kind": "SPIKE", "cells": 10, "eps": 1e-3, "K": k, "position": "center"})
        alphas = np.linspace(0.05, 1.0, 20)
        assert verdict_agreement(w, [0.1, 0.25, 0.5, 0.75, 0.9], alphas)["disagreements"] == 0


@given(weights(max_n1=12, max_n2=3), st.sampled_from([0.25, 0.5, 0.75]))
def test_identity_equals_exhaustive(w, lam):
    alphas = alpha_scan_set(w, lam)
    ex = sublevel_exhaustive(w, lam, alphas).all(axis=1)
    for a, e in zip(alphas, ex):
        assert mlambda_holds_at(w, lam, a) == e


def test_scan_set_flips_verdict():
    w = random_weight(5, 1, 9)
    res = verdict_agreement(w, [0.5])
    seen = {r["mlambda"] for r in res["rows"]}
    assert seen == {True, False}


def test_prop1_f1(F1):
    v = prop1_chain(F1, 2, 0.5)
    assert v.passed
    m = v.measured
    for link in ("link_i_excess", "link_ii_excess", "link_iii_excess"):
        assert m[link] <= 1e-9
    assert m["a1_Mu"] <= m["chain_bound"]
    with pytest.raises(InvalidExponent):
        prop1_chain(F1, 2, 1.5)


def test_prop1_jensen_link_on_random_weights():
    for seed in range(100):
        w = random_weight(seed, 1 + seed % 2, 3 + seed % 6)
        assert prop1_chain(w, 2, 0.25).measured["link_ii_excess"] <= 1e-9


def test_iterate_examples(F1, suite):
    v = iterate_bound(F1, 4)
    assert v.passed and math.isclose(v.measured["C"], 25 / 18, rel_tol=1e-15)
    assert iterate_bound(suite["staircase"], 3).passed
    c = suite["constant"]
    assert iterate_bound(c, 4).measured["C"] == 1.0
    with pytest.raises(InvalidExponent):
        iterate_bound(F1, 1)


def test_weak_ainf_rhi_f1(F1):
    v = weak_ainf_rhi(F1, 0.5, 1.5)
    assert v.passed
    assert v.measured["layer_cake_rel_error"] <= 1e-12
    with pytest.raises(InvalidExponent):
        weak_ainf_rhi(F1, 0.5, 2.0)
    with pytest.raises(InvalidExponent):
        weak_ainf_rhi(F1, 0.5, 1.0)


def test_weak_ainf_rhi_factor_monotone_in_c(F1):
    v = weak_ainf_rhi(F1, 0.5, 1.5)
    m = v.measured
    q = 2.0
    bigger = 1 + (2 * m["C"] * 2) ** q * m["r"] / (q - m["r"])
    assert bigger >= m["factor"]


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=20), st.floats(1.01, 3))
def test_layer_cake_closed_form(xs, r):
    v = np.asarray(xs)
    assert math.isclose(layer_cake(v, r), (v**r).sum(), rel_tol=1e-12)


def test_forward_chain_all_fixtures(suite):
    for name, w in suite.items():
        for s in (1.5, 2.0):
            assert neugebauer(w, s).measured["chain_holds"], name


def test_small_beta_gives_finite_a1_mu(suite):
    from ainfty.classes import ainf_sublevel_beta

    for name, w in suite.items():
        if ainf_sublevel_beta(w, 0.5).value <= 0.5:
            m = prop1_chain(w, 2, 0.5).measured
            assert math.isfinite(m["a1_Mu"]) and m["conclusion_holds"], name


def test_run_all_threads_identical(suite, monkeypatch):
    w = suite["lognormal2d"]
    monkeypatch.setenv("AINFTY_THREADS", "1")
    a = json.dumps(run_all(w).to_json())
    monkeypatch.setenv("AINFTY_THREADS", "4")
    b = json.dumps(run_all(w).to_json())
    assert a == b


def test_dyadic_family_runs(F1):
    rep = run_all(F1, family=DYADIC)
    assert rep.to_json()["family"]["mode"] == "dyadic"


def test_single_cell_skips_weak_ainf():
    rep = run_all(weight([3.0]))
    assert "WEAK_AINF_RHI" not in [v.criterion for v in rep.verdicts]
    assert all(v.passed for v in rep.verdicts)
