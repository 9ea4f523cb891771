"""Command-line entry point.

Exit codes: 0 yes / success, 1 no, 2 usage or parse error, 3 budget exceeded
or unknown, 4 rewriter and oracle disagree.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import gadgets
from .classify import FO, classify
from .model import UsageError, is_about, sorted_fks
from .oracle import Answer, RepairBudget, default_budget, enumerate_repairs, oracle_certain
from .rewrite import build_plan, certain_eval
from .textio import parse_db, parse_problem, serialize_db

EXIT_YES, EXIT_NO, EXIT_USAGE, EXIT_UNKNOWN, EXIT_DISAGREE = 0, 1, 2, 3, 4


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load(args):
    spec = parse_problem(_read(args.query))
    db = parse_db(_read(args.db), spec.schemas) if getattr(args, "db", None) else None
    return spec, db


def _budget(args, db, q, fks) -> RepairBudget:
    b = default_budget(db, q, fks)
    return RepairBudget(
        args.max_fresh or b.max_fresh_constants,
        args.max_depth or b.max_chase_depth,
        args.max_facts or b.max_candidate_facts,
        args.max_nodes or b.max_search_nodes,
    )


def _emit(obj, out):
    out.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------- commands

def cmd_classify(args, out) -> int:
    spec, _ = _load(args)
    c = classify(spec.query, spec.fks, with_plan=args.plan)
    _emit(c.to_json(), out)
    return EXIT_YES


def cmd_check(args, out) -> int:
    spec = parse_problem(_read(args.query))
    ok, problems = is_about(spec.fks, spec.query)
    report = {
        "query": str(spec.query),
        "fks": [str(f) for f in sorted_fks(spec.fks)],
        "relations": {n: {"arity": r.arity, "key": r.key_len} for n, r in spec.schemas.items()},
        "about": ok,
        "problems": problems,
        "valid": ok,
    }
    _emit(report, out)
    return EXIT_YES if ok else EXIT_USAGE


def cmd_rewrite(args, out) -> int:
    spec, _ = _load(args)
    plan = build_plan(spec.query, spec.fks)
    data = plan.to_json()
    _emit(data, out)
    out.write(data["base_formula"] + "\n")
    return EXIT_YES


def cmd_certain(args, out) -> int:
    spec, db = _load(args)
    q, fks = spec.query, spec.fks
    report = {}
    rewritten = oracle = None
    if args.method in ("rewrite", "both"):
        c = classify(q, fks)
        if c.verdict == FO:
            rewritten = certain_eval(build_plan(q, fks), db)
        else:
            # the two known hard shapes have polynomial solvers standing in for the rewriting
            solver = gadgets.special_solver(q, fks) if args.method == "both" else None
            if solver is None:
                raise UsageError(f"query is not FO-rewritable ({', '.join(sorted(c.hardness_marks))}); "
                                 "use --method oracle")
            rewritten = solver(db)
            report["solver"] = "special"
        report["rewrite"] = "yes" if rewritten else "no"
    if args.method in ("oracle", "both"):
        res = oracle_certain(db, q, fks, _budget(args, db, q, fks))
        oracle = res.answer
        report["oracle"] = oracle.value
        if res.counterexample is not None and args.verbose:
            report["counterexample"] = serialize_db(res.counterexample).splitlines()
    if args.method == "both":
        if oracle == Answer.UNKNOWN:
            report["answer"] = "yes" if rewritten else "no"
            report["agree"] = None
        else:
            report["agree"] = (oracle == Answer.YES) == rewritten
            report["answer"] = report["rewrite"]
    else:
        report["answer"] = report.get("rewrite") or report["oracle"]
    _emit(report, out)
    if report.get("agree") is False:
        return EXIT_DISAGREE
    if oracle == Answer.UNKNOWN:
        return EXIT_UNKNOWN
    return EXIT_YES if report["answer"] == "yes" else EXIT_NO


def cmd_repairs(args, out) -> int:
    spec, db = _load(args)
    q = spec.query if args.restrict else None
    rs = enumerate_repairs(db, spec.fks, _budget(args, db, spec.query, spec.fks), q)
    _emit({
        "exhausted": rs.exhausted,
        "count": len(rs.repairs),
        "repairs": [serialize_db(r).splitlines() for r in rs.repairs],
    }, out)
    return EXIT_YES if rs.exhausted else EXIT_UNKNOWN


def _read_graph(text: str):
    vertices, edges = set(), set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) > 2:
            raise UsageError(f"line {lineno}: expected 'u v' or a single vertex")
        vertices |= set(parts)
        if len(parts) == 2:
            edges.add(tuple(parts))
    return vertices, edges


def cmd_gen(args, out) -> int:
    if args.kind == "reach":
        vertices, edges = _read_graph(_read(args.input))
        vertices |= {args.source, args.target}
        g = gadgets.DirectedGraphInput(vertices, edges, args.source, args.target)
        db, text = gadgets.gen_reachability_gadget(g, ns=args.ns), gadgets.REACH_TEXT
    elif args.kind == "dualhorn":
        phi = gadgets.parse_dualhorn(_read(args.input))
        db, text = gadgets.dualhorn_to_db(phi, ns=args.ns), gadgets.REACH_TEXT
    else:
        raise UsageError(f"unknown gadget {args.kind}")
    if args.problem:
        with open(args.problem, "w", encoding="utf-8") as fh:
            fh.write(text)
    out.write(serialize_db(db))
    return EXIT_YES


# ------------------------------------------------------------------ parser

def _budget_flags(p):
    p.add_argument("--max-fresh", type=int, help="fresh constants per candidate repair")
    p.add_argument("--max-depth", type=int, help="length of insertion chains")
    p.add_argument("--max-facts", type=int, help="inserted facts per candidate repair")
    p.add_argument("--max-nodes", type=int, help="search steps before giving up with 'unknown'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fkcqa", description="Certain answers under primary and foreign keys.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="FO / hardness classification as JSON")
    p.add_argument("-q", "--query", required=True, help="problem file")
    p.add_argument("--plan", action="store_true", help="include the reduction plan for FO inputs")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("check", help="validity and about-ness diagnostics")
    p.add_argument("-q", "--query", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rewrite", help="reduction plan and base-case formula")
    p.add_argument("-q", "--query", required=True)
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("certain", help="is the query true in every repair?")
    p.add_argument("-q", "--query", required=True)
    p.add_argument("-d", "--db", required=True)
    p.add_argument("--method", choices=("rewrite", "oracle", "both"), default="rewrite")
    p.add_argument("-v", "--verbose", action="store_true", help="print a falsifying repair when found")
    _budget_flags(p)
    p.set_defaults(func=cmd_certain)

    p = sub.add_parser("oracle", help="repair oracle")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    r = osub.add_parser("repairs", help="enumerate the repairs of a database")
    r.add_argument("-q", "--query", required=True)
    r.add_argument("-d", "--db", required=True)
    r.add_argument("--restrict", action="store_true", help="only the relations of the query and fks")
    _budget_flags(r)
    r.set_defaults(func=cmd_repairs)

    p = sub.add_parser("gen", help="hardness gadgets")
    p.add_argument("kind", choices=("reach", "dualhorn"))
    p.add_argument("-i", "--input", "--graph", "--formula", dest="input", required=True,
                   help="reach: edge list 'u v' per line; dualhorn: one clause per line, '-p' or '~p' negated")
    p.add_argument("-s", "--source", default="s")
    p.add_argument("-t", "--target", default="t")
    p.add_argument("--ns", default="", help="prefix for generated constants")
    p.add_argument("--problem", help="also write the matching problem file here")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_YES
    try:
        return args.func(args, out)
    except UsageError as e:
        print(f"fkcqa: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
