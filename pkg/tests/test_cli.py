import csv
import io
import json

import pytest

from ainfty.cli import main
from ainfty.fixtures import fixture_specs
from ainfty.grid import FlooredWeightWarning


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def f1_file(tmp_path, capsys):
    spec = tmp_path / "f1spec.json"
    spec.write_text(json.dumps(fixture_specs()["F1"].to_json()))
    out = tmp_path / "f1.json"
    assert main(["gen", str(spec), "--out", str(out)]) == 0
    return out


def test_gen_constant(tmp_path, capsys):
    spec = tmp_path / "c.json"
    spec.write_text(json.dumps({"kind": "CONSTANT", "cells": 4, "c": 1.5}))
    code, out, _ = run(["gen", str(spec)], capsys)
    assert code == 0 and json.loads(out)["values"] == [1.5] * 4


def test_gen_byte_stable(tmp_path, capsys, f1_file):
    spec = tmp_path / "ln.json"
    spec.write_text(json.dumps({"kind": "LOGNORMAL", "cells": 32, "seed": 7, "sigma": 1.0}))
    a = run(["gen", str(spec)], capsys)[1]
    b = run(["gen", str(spec)], capsys)[1]
    assert a == b
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps([{"name": "F1", **fixture_specs()["F1"].to_json()}, {"kind": "CONSTANT"}]))
    code, out, _ = run(["gen", str(manifest)], capsys)
    data = json.loads(out)
    assert code == 0 and data[0]["id"] == "F1" and data[1]["values"] == [1.0] * 4


def _constant(report, name):
    return next(c for c in report["constants"] if c["name"] == name)


def test_analyze_f1(f1_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["analyze", str(f1_file), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert _constant(rep, "A1")["value"] == 3.0
    assert _constant(rep, "Ap")["value"] == 1.5
    assert len(rep["criteria"]["verdicts"]) == 6
    assert rep["tool"] == "ainfty" and rep["config"]["lambdas"] == [0.5]


def test_analyze_constant_all_ones(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"dim": 1, "cells": [6], "values": [0.7] * 6}))
    code, out, _ = run(["analyze", str(path), "--p", "2", "3"], capsys)
    rep = json.loads(out)
    for name in ("A1", "Ap", "RHI", "A1_Mu"):
        assert all(c["value"] == 1.0 for c in rep["constants"] if c["name"] == name)
    assert all(v["pass"] for v in rep["criteria"]["verdicts"])


def test_dyadic_below_all(f1_file, capsys):
    a = json.loads(run(["analyze", str(f1_file)], capsys)[1])
    d = json.loads(run(["analyze", str(f1_file), "--family", "dyadic"], capsys)[1])
    for name in ("A1", "Ap", "RHI", "Ainf_sublevel_beta"):
        assert _constant(d, name)["value"] <= _constant(a, name)["value"]


def test_plotdata(f1_file, tmp_path, capsys):
    rep = tmp_path / "r.json"
    main(["analyze", str(f1_file), "--out", str(rep)])
    code, out, _ = run(["plotdata", str(rep)], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert list(rows[0]) == ["cell", "x", "u", "Mu", "m_lambda_Mu", "M_Mu", "f_sharp"]
    assert all(float(r["Mu"]) >= float(r["u"]) for r in rows)
    assert [float(r["x"]) for r in rows] == [0.125, 0.375, 0.625, 0.875]


def test_plotdata_2d(tmp_path, capsys):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"dim": 2, "cells": [3, 3], "values": list(range(1, 10))}))
    rep = tmp_path / "r.json"
    assert main(["analyze", str(w), "--out", str(rep)]) == 0
    rows = list(csv.DictReader(io.StringIO(run(["plotdata", str(rep)], capsys)[1])))
    assert len(rows) == 9 and "y" in rows[0]


def test_oracle_command(f1_file, tmp_path, capsys):
    code, out, _ = run(["oracle", "maximal", str(f1_file)], capsys)
    assert code == 0 and json.loads(out)["result"] == [3.0, 11 / 3, 4.0, 6.0]
    code, out, _ = run(["oracle", "ap", str(f1_file), "--p", "2"], capsys)
    assert json.loads(out)["result"] == 1.5
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"dim": 1, "cells": [65], "values": [1.0] * 65}))
    assert run(["oracle", "maximal", str(big)], capsys)[0] == 3


def test_exit_codes(tmp_path, capsys):
    assert run([], capsys)[0] == 1
    assert run(["frobnicate"], capsys)[0] == 1
    assert run(["analyze"], capsys)[0] == 1
    assert run(["analyze", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 1, "cells": [3], "values": [1, 0, 2]}))
    assert run(["analyze", str(bad)], capsys)[0] == 2
    with pytest.warns(FlooredWeightWarning):
        assert run(["analyze", str(bad), "--floor"], capsys)[0] == 0
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"dim": 1, "cells": [3], "values": [1, 4, 2]}))
    assert run(["analyze", str(good), "--lambda", "1.5"], capsys)[0] == 2
    assert run(["analyze", str(good), "--max-side", "9"], capsys)[0] == 2
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"kind": "WHAT"}))
    assert run(["gen", str(spec)], capsys)[0] == 2
    spec.write_text("{not json")
    assert run(["gen", str(spec)], capsys)[0] == 2


def test_report_deterministic(f1_file, capsys, monkeypatch):
    monkeypatch.setenv("AINFTY_THREADS", "1")
    a = run(["analyze", str(f1_file)], capsys)[1]
    monkeypatch.setenv("AINFTY_THREADS", "4")
    b = run(["analyze", str(f1_file)], capsys)[1]
    assert a == b
