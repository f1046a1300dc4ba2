"""Command-line front end: ``ainfty gen | analyze | plotdata | oracle``.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 oracle refused.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import AinftyError, OracleRefused
from .fixtures import WeightSpec, generate
from .grid import Cube, CubeFamily, load_weight, weight_to_json
from .oracle import OPS, oracle
from .report import RunConfig, analyze, dumps, to_csv

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_ORACLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    data = json.loads(Path(args.spec).read_text())
    specs = data if isinstance(data, list) else [data]
    weights = []
    for item in specs:
        item = dict(item)
        name = item.pop("name", None)
        w = generate(WeightSpec.from_json(item))
        entry = weight_to_json(w)
        if name is not None:
            entry = {"id": name, **entry}
        weights.append(entry)
    payload = weights[0] if not isinstance(data, list) else weights
    _emit(json.dumps(payload) + "\n", args.out)
    return EXIT_OK


def _config(args) -> RunConfig:
    return RunConfig(
        family=args.family,
        max_side=args.max_side,
        lambdas=tuple(args.lam),
        ps=tuple(args.p),
        r=args.r,
        s=args.s,
        delta=args.delta,
        alpha=args.alpha,
        K=args.K,
    )


def cmd_analyze(args) -> int:
    u = load_weight(args.weight, floor=args.floor)
    report = analyze(u, _config(args), weight_id=Path(args.weight).stem)
    _emit(dumps(report), args.out)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    report = json.loads(Path(args.report).read_text())
    _emit(to_csv(report), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    u = load_weight(args.weight, floor=args.floor)
    family = CubeFamily(args.family, args.max_side)
    kw = {}
    if args.op in ("local_maximal", "local_sharp_maximal"):
        kw["lam"] = args.lam[0]
    elif args.op == "maximal_power":
        kw["s"] = args.s
    elif args.op == "maximal_iterate":
        kw["k"] = args.k
    elif args.op == "ap":
        kw["p"] = args.p[0]
    elif args.op == "rhi":
        kw["r"] = args.s
    elif args.op == "sublevel_beta":
        kw["alpha"] = args.alpha
    elif args.op == "weak_ainf":
        kw["delta"] = args.delta
    elif args.op == "rearrangement":
        side = args.side or u.grid.cells
        kw["cube"] = Cube(side, tuple(args.anchor or [0] * u.grid.dim))
        kw["t"] = args.t
    result = oracle(args.op, u, family, **kw)
    if isinstance(result, np.ndarray):
        result = result.ravel().tolist()
    _emit(dumps({"op": args.op, "params": kw if "cube" not in kw else {"t": args.t}, "result": result}), args.out)
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("all", "dyadic"), default="all")
    p.add_argument("--max-side", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[0.5])
    p.add_argument("--p", type=float, nargs="+", default=[2.0])
    p.add_argument("--r", type=float, default=0.5, help="exponent in (0,1) for the chain check")
    p.add_argument("--s", type=float, default=2.0, help="power-mean exponent > 1")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.5, help="sublevel fraction for the A_inf beta")
    p.add_argument("--K", type=int, default=40, help="series truncation")
    p.add_argument("--floor", action="store_true", help="raise values below 1e-12 to 1e-12")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ainfty", description="Discrete maximal operators and weight constants.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate weight(s) from a spec JSON")
    g.add_argument("spec")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="constants, criteria and per-cell fields of a weight")
    a.add_argument("weight")
    _common(a)
    a.set_defaults(func=cmd_analyze)

    pl = sub.add_parser("plotdata", help="tidy CSV from an analyze report")
    pl.add_argument("report")
    pl.add_argument("--out", default=None)
    pl.set_defaults(func=cmd_plotdata)

    o = sub.add_parser("oracle", help="brute-force reference value (small grids only)")
    o.add_argument("op", choices=OPS)
    o.add_argument("weight")
    _common(o)
    o.add_argument("--k", type=int, default=2, help="iterate count")
    o.add_argument("--t", type=float, default=0.0, help="rearrangement argument")
    o.add_argument("--side", type=int, default=None)
    o.add_argument("--anchor", type=int, nargs="+", default=None)
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except OracleRefused as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (AinftyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
