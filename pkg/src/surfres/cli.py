"""Command-line interface: analyze, step, resolve, verify.

Exit codes: 0 on success (resolved / verified), 2 when limits were exceeded,
3 on a typed engine error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .driver import parse_scene, resolve, select_center, top_locus, blowup_node, blowup_general_curve
from .errors import LimitExceeded, NotPermissible, CenterNotPolynomialAtPrecision, SurfresError
from .verify import verify_paper_suite

VERSION_HEADER = {"tool": "surfres", "format": 1}


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())


def _point_records(top, point_filter=None):
    out = []
    for rec in sorted(top.records, key=lambda r: (r.fld.k, r.coord_strs())):
        if point_filter is not None and r_strs(rec) != point_filter:
            continue
        entry = {
            "point": list(rec.coord_strs()),
            "field_extension_degree": rec.fld.k,
            "tuple": list(rec.tuple.as_tuple()),
            "resolved": rec.resolved,
        }
        an = rec.analysis
        if an is not None:
            if an.terminal is not None:
                entry["terminal"] = an.terminal.kind
            if an.maximizing is not None:
                entry["maximizing_flag"] = {
                    "kind": an.maximizing.kind,
                    "n": an.maximizing.n,
                    "d": an.maximizing.d,
                    "s": str(an.maximizing.s),
                    "m": str(an.maximizing.m),
                }
        out.append(entry)
    return out


def r_strs(rec):
    return ",".join(rec.coord_strs())


def cmd_analyze(args) -> int:
    gs = _load(args.scene)
    if args.point:
        coords = tuple(
            gs.spec.from_fraction(Fraction(part)) for part in args.point.split(",")
        )
        gs = gs.copy()
        gs.points = [coords]
        gs.search = ("provided",)
    top = top_locus(gs)
    payload = dict(VERSION_HEADER)
    payload["command"] = "analyze"
    payload["max_tuple"] = list(top.max_tuple.as_tuple()) if top.max_tuple else None
    payload["points"] = _point_records(top)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_step(args) -> int:
    gs = _load(args.scene)
    top = top_locus(gs)
    payload = dict(VERSION_HEADER)
    payload["command"] = "step"
    if top.max_tuple is None or top.max_tuple.as_tuple() == (1, 1, 0, 0, 0, 0, 0):
        payload["resolved"] = True
        print(json.dumps(payload, sort_keys=True))
        return 0
    center = select_center(top, gs)
    next_label = max((c.label for c in gs.components), default=0) + 1
    try:
        children, descs, _ = blowup_node(gs, center, next_label, center.anchor.tuple.o)
    except (NotPermissible, CenterNotPolynomialAtPrecision):
        children, descs, _ = blowup_general_curve(
            gs, center, next_label, center.anchor.tuple.o
        )
    payload["center"] = center.describe()
    payload["children"] = [
        {
            "chart": desc,
            "f": str(child.f),
            "components": [
                {"eq": str(c.eq), "age": c.age, "label": c.label}
                for c in child.components
            ],
        }
        for child, desc in zip(children, descs)
    ]
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_resolve(args) -> int:
    gs = _load(args.scene)
    try:
        trace = resolve(gs, max_blowups=args.max_blowups)
    except LimitExceeded as exc:
        if exc.trace is not None:
            sys.stdout.write(exc.trace.to_json_lines())
        print(json.dumps(dict(VERSION_HEADER, command="resolve", status="limit-exceeded")))
        return 2
    sys.stdout.write(trace.to_json_lines())
    print(
        json.dumps(
            dict(
                VERSION_HEADER,
                command="resolve",
                status="resolved",
                blowups=trace.blowups,
                nodes=len(trace.nodes),
            ),
            sort_keys=True,
        )
    )
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(trace.to_dot())
    return 0


def cmd_verify(args) -> int:
    results = verify_paper_suite(args.case)
    ok = True
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: expected {r.expected}, got {r.got}")
        ok = ok and r.passed
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if ok and results else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="surfres",
        description="Resolution of surface singularities in A^3 by the "
        "7-component lexicographic invariant",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="invariants at the sampled points of a scene")
    p_an.add_argument("scene")
    p_an.add_argument("--point", help="a,b,c coordinates of a single point")
    p_an.set_defaults(fn=cmd_analyze)

    p_st = sub.add_parser("step", help="one blowup step of a scene")
    p_st.add_argument("scene")
    p_st.set_defaults(fn=cmd_step)

    p_re = sub.add_parser("resolve", help="resolve a scene completely")
    p_re.add_argument("scene")
    p_re.add_argument("--max-blowups", type=int, default=25)
    p_re.add_argument("--dot", help="write the chart tree as a DOT file")
    p_re.set_defaults(fn=cmd_resolve)

    p_ve = sub.add_parser("verify", help="run the golden-value suite")
    p_ve.add_argument("--case", help="run a single named case")
    p_ve.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except LimitExceeded:
        return 2
    except SurfresError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
