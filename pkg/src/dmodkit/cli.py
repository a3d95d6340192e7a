"""Command-line front end.

Reads SystemDoc JSON files, dispatches one analysis per invocation and renders
the result as text (default) or JSON.  Exit codes: 0 on success, 2 when a
completion hit its order budget (verdict unknown), 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from dmodkit import systemdoc
from dmodkit.corpus import fixture, fixture_names
from dmodkit.duality import UNKNOWN, minimal_parametrize, parametrize, torsion_test
from dmodkit.exact import CoeffParseError, SpecializeError, parse_coeff
from dmodkit.janet import (
    CompletionBudgetExceeded,
    DeltaRegularityError,
    first_order_form,
    involutive_completion,
    parametric_jets,
    tabular,
)
from dmodkit.ore import ContextMismatch, NonUnimodular, OpMatrix
from dmodkit.syzygy import compatibility_conditions, differential_rank

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dmodkit",
        description="Exact analysis of linear OD/PD operators: involutive bases, "
        "compatibility conditions, torsion tests and parametrizations.",
    )
    ap.add_argument("--budget", type=int, default=None, help="max total order for completions")
    ap.add_argument("--seed", type=int, default=0, help="seed for coordinate-frame search")
    ap.add_argument(
        "--assume",
        action="append",
        default=[],
        metavar="PARAM=VALUE",
        help="bind a parameter before the analysis (repeatable)",
    )
    fmt = ap.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="as_json", action="store_true", help="JSON output")
    fmt.add_argument("--text", dest="as_json", action="store_false", help="text output (default)")
    ap.set_defaults(as_json=False)

    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("adjoint", "formal adjoint of the system"),
        ("involution", "involutive completion and its tabular"),
        ("cc", "generating compatibility conditions"),
        ("rank", "differential rank of the presented module"),
        ("torsion", "five-step torsion-freeness test"),
        ("spencer-form", "equivalent first-order system without order-zero equations"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", help="SystemDoc JSON path")
    p = sub.add_parser("param", help="parametrization from the duality test")
    p.add_argument("file")
    p.add_argument("--minimal", action="store_true", help="search a rank-sized potential subset")
    p.add_argument("--columns", default=None, help="comma-separated potential subset to force")
    p = sub.add_parser("apply", help="apply the system to an explicit section")
    p.add_argument("file")
    p.add_argument(
        "--section", required=True, help="semicolon-separated coefficient expressions, one per unknown"
    )
    p = sub.add_parser("fixtures", help="list built-in fixtures or emit one as JSON")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--out", default=None, help="write the fixture document to a file")
    return ap


def _parse_assumptions(items: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"--assume needs PARAM=VALUE, got {item!r}")
        name, val = item.split("=", 1)
        out[name.strip()] = val.strip()
    return out


def _load(args) -> OpMatrix:
    m = systemdoc.parse_file(args.file)
    bindings = _parse_assumptions(args.assume)
    if bindings:
        typed: dict[str, object] = {}
        for k, v in bindings.items():
            try:
                typed[k] = Fraction(v)
            except ValueError:
                typed[k] = v  # parsed as an expression in the remaining parameters
        m = m.specialize_params(typed)
    return m


def _emit_matrix(m: OpMatrix, as_json: bool, heading: str) -> None:
    if as_json:
        print(systemdoc.emit(m))
    else:
        print(heading)
        for i in range(m.p):
            print(f"  {m.row_labels[i]}: {m.row(i).format(m.unknowns)} = 0")


def _cmd_adjoint(args) -> int:
    m = _load(args)
    _emit_matrix(m.adjoint(), args.as_json, f"adjoint ({m.m} x {m.p})")
    return 0


def _cmd_involution(args) -> int:
    m = _load(args)
    basis = involutive_completion(m, args.budget)
    t = tabular(basis)
    probe = t.q + basis.ctx.n + 1
    count, _ = parametric_jets(basis, probe)
    prev, _ = parametric_jets(basis, probe - 1)
    finite = count == prev
    if args.as_json:
        doc = {
            "order": t.q,
            "beta": {str(k): v for k, v in t.beta.items()},
            "alpha": {str(k): v for k, v in t.alpha.items()},
            "dim_symbol": t.dim_symbol,
            "class_ordered": t.class_ordered,
            "parametric_jets": {"upto_order": probe, "count": count, "finite": finite},
            "assumptions": [str(a) for a in basis.assumptions],
            "generators": [g.row.format(m.unknowns) for g in basis.gens],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(t.render(basis, m.unknowns))
        if finite:
            print(f"parametric jets: {count} (finite)")
        else:
            print(f"parametric jets up to order {probe}: {count}")
        if basis.assumptions:
            print("assuming nonzero: " + ", ".join(str(a) for a in basis.assumptions))
    return 0


def _cmd_cc(args) -> int:
    m = _load(args)
    res = compatibility_conditions(m, args.budget)
    if args.as_json:
        doc = systemdoc.matrix_to_doc(res.cc)
        doc["assumptions"] = [str(a) for a in res.assumptions]
        doc["certificate"] = {"product_with_input_vanishes": res.verify(m)}
        print(json.dumps(doc, indent=2))
    else:
        if res.cc.p == 0:
            print("no compatibility conditions (formally surjective rows)")
        else:
            _emit_matrix(res.cc, False, f"compatibility conditions ({res.cc.p} rows)")
        if res.assumptions:
            print("assuming nonzero: " + ", ".join(str(a) for a in res.assumptions))
    return 0


def _cmd_rank(args) -> int:
    m = _load(args)
    r = differential_rank(m, args.budget, args.seed)
    print(json.dumps({"rank": r}) if args.as_json else f"differential rank: {r}")
    return 0


def _cmd_torsion(args) -> int:
    m = _load(args)
    rep = torsion_test(m, args.budget)
    if args.as_json:
        print(json.dumps(rep.to_json_dict(), indent=2))
    else:
        print(rep.render_text())
    return 2 if rep.verdict == UNKNOWN else 0


def _cmd_param(args) -> int:
    m = _load(args)
    rep = torsion_test(m, args.budget)
    if rep.verdict == UNKNOWN:
        print("verdict unknown: completion budget exhausted", file=sys.stderr)
        return 2
    if args.minimal or args.columns:
        cols = args.columns.split(",") if args.columns else None
        d = minimal_parametrize(rep, columns=cols, budget=args.budget, seed=args.seed)
    else:
        d = parametrize(rep)
    if args.as_json:
        print(systemdoc.emit(d))
    else:
        print(f"parametrization with {d.m} potential(s) {tuple(d.unknowns)}:")
        for i in range(d.p):
            print(f"  {d.row_labels[i]} = {d.row(i).format(d.unknowns)}")
        if rep.verdict == "has_torsion":
            print("note: input had torsion; this parametrizes its torsion-free quotient")
    return 0


def _cmd_spencer(args) -> int:
    m = _load(args)
    fo = first_order_form(m, args.budget)
    _emit_matrix(fo, args.as_json, f"first-order form with {fo.m} state(s)")
    return 0


def _cmd_apply(args) -> int:
    m = _load(args)
    parts = [s.strip() for s in args.section.split(";")]
    if len(parts) != m.m:
        raise ValueError(f"section needs {m.m} components, got {len(parts)}")
    section = [parse_coeff(s, m.ctx) for s in parts]
    values = m.apply(section)
    if args.as_json:
        print(json.dumps({lbl: str(v) for lbl, v in zip(m.row_labels, values)}, indent=2))
    else:
        for lbl, v in zip(m.row_labels, values):
            print(f"  {lbl}: {v}")
    return 0


def _cmd_fixtures(args) -> int:
    if args.name is None:
        if args.as_json:
            print(json.dumps({n: d for n, d in fixture_names()}, indent=2))
        else:
            for name, desc in fixture_names():
                print(f"  {name:22s} {desc}")
        return 0
    doc = fixture(args.name)
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


_COMMANDS = {
    "adjoint": _cmd_adjoint,
    "involution": _cmd_involution,
    "cc": _cmd_cc,
    "rank": _cmd_rank,
    "torsion": _cmd_torsion,
    "param": _cmd_param,
    "spencer-form": _cmd_spencer,
    "apply": _cmd_apply,
    "fixtures": _cmd_fixtures,
}


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CompletionBudgetExceeded as e:
        print(f"unknown: {e}", file=sys.stderr)
        return 2
    except (
        systemdoc.SchemaError,
        CoeffParseError,
        SpecializeError,
        DeltaRegularityError,
        ContextMismatch,
        NonUnimodular,
        ValueError,
        KeyError,
        OSError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
