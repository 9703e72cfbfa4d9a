"""Command-line front end.

Exit codes: 0 when the queried statement holds or the command succeeded,
1 when a separation or Markov property fails, 2 on usage or input errors.
Node sets are comma-separated labels; ``-`` is the empty set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from typing import Callable, Sequence

from . import formats
from .core import HedgError
from .markov import PropertyKind, check, hierarchy_audit
from .orders import ORDER_KINDS, classify_order, find_perfect_elimination, find_pseudo_topological
from .scm import (
    InterventionSpec,
    exact_joint,
    gaussian_ci_defect,
    intervene,
    marginalize_mscm,
    sample,
)
from .separation import SepQuery, d_separated, d_separated_paths, sigma_separated, sigma_separated_nodes
from .transform import (
    acyclic_augment,
    acyclify,
    augment,
    induced_dmg,
    marginalize,
    moralize,
    scc_quotient,
)

log = logging.getLogger("hedg")

TRANSFORMS: dict[str, Callable] = {
    "moralize": moralize,
    "augment": augment,
    "acyclify": acyclify,
    "acag": acyclic_augment,
    "quotient": scc_quotient,
    "dmg": induced_dmg,
}


class UsageError(Exception):
    pass


def parse_nodes(text: str | None) -> list[str]:
    if text is None or text.strip() in ("", "-"):
        return []
    items = [t.strip() for t in text.split(",")]
    if any(not t for t in items):
        raise UsageError(f"bad node list {text!r}")
    return items


def _fmt(s) -> str:
    return "{" + ",".join(sorted(s)) + "}"


def _emit(args: argparse.Namespace, text: str, report: dict) -> None:
    if args.format == "json":
        sys.stdout.write(formats.dumps(report))
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _graph(args):
    return formats.graph_from_dict(formats.read_json(args.graph))


def cmd_query(args) -> int:
    g = _graph(args)
    q = SepQuery.of(parse_nodes(args.x), parse_nodes(args.y), parse_nodes(args.z))
    if args.criterion == "dsep":
        word, holds = "d-separated", d_separated(g, q)
        oracle = d_separated_paths
    else:
        word, holds = "sigma-separated", sigma_separated(g, q)
        oracle = sigma_separated_nodes
    witness: tuple = ()
    if not holds and args.witness:
        witness = oracle(g, q)[1]
    text = word if holds else f"NOT {word}"
    if witness:
        text += "\nopen path: " + " ".join(witness)
    _emit(args, text, {"criterion": word, "x": sorted(q.x), "y": sorted(q.y), "z": sorted(q.z), "separated": holds, "witness": list(witness)})
    return 0 if holds else 1


def cmd_transform(args) -> int:
    g = _graph(args)
    if args.op == "marginalize":
        out = formats.graph_to_dict(marginalize(g, parse_nodes(args.u)))
    else:
        res = TRANSFORMS[args.op](g)
        out = formats.ugraph_to_dict(res) if args.op == "moralize" else formats.graph_to_dict(res)
    sys.stdout.write(formats.dumps(out))
    return 0


def cmd_order(args) -> int:
    g = _graph(args)
    if args.action == "find":
        args.kind = args.kind or "pseudo_topological"
        if args.kind not in ("pseudo_topological", "perfect_elimination"):
            raise UsageError("order find supports pseudo_topological and perfect_elimination")
        ord = find_pseudo_topological(g) if args.kind == "pseudo_topological" else find_perfect_elimination(g)
        if ord is None:
            _emit(args, f"no {args.kind} order", {"kind": args.kind, "order": None})
            return 1
        _emit(args, ",".join(ord), {"kind": args.kind, "order": list(ord)})
        return 0
    if not args.order:
        raise UsageError("order check needs --order")
    rep = classify_order(g, parse_nodes(args.order))
    lines = []
    for k in ORDER_KINDS:
        line = f"{k}: {'yes' if rep.flags[k] else 'no'}"
        if k in rep.witnesses:
            v, s = rep.witnesses[k]
            line += f" (at {v}: {_fmt(s)})"
        lines.append(line)
    report = {"flags": rep.flags, "witnesses": {k: [v, sorted(s)] for k, (v, s) in rep.witnesses.items()}}
    _emit(args, "\n".join(lines), report)
    return 0 if args.kind is None or rep.flags[args.kind] else 1


def cmd_markov(args) -> int:
    g = _graph(args)
    p = formats.dist_from_dict(formats.read_json(args.dist))
    order = parse_nodes(args.order) if args.order else None
    if args.action == "audit":
        h = hierarchy_audit(g, p, order)
        lines = [f"{k}: {'pass' if v else 'fail'}" for k, v in h.flags.items()]
        lines += [f"contradiction: {c}" for c in h.contradictions]
        report = {"flags": h.flags, "contradictions": h.contradictions, "reports": {k: r.to_dict() for k, r in h.reports.items()}}
        _emit(args, "\n".join(lines), report)
        return 0 if h.consistent else 1
    if not args.property:
        raise UsageError("markov check needs --property")
    witness = formats.dist_from_dict(formats.read_json(args.witness)) if args.witness else None
    rep = check(g, p, args.property, order=order, witness=witness)
    lines = [f"{rep.property}: {'pass' if rep.passed else 'fail'} ({rep.checked} statements checked)"]
    lines += [f"violated: {v.statement} (defect {v.defect:.3g})" for v in rep.violations]
    lines += [f"inconclusive: {v.statement}" for v in rep.inconclusive]
    _emit(args, "\n".join(lines), rep.to_dict())
    return 0 if rep.passed else 1


def _parse_do(m, items: Sequence[str]) -> InterventionSpec:
    values = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--do expects node=value, got {item!r}")
        v, raw = item.split("=", 1)
        if v not in m.domains:
            raise UsageError(f"unknown node {v!r}")
        match = [d for d in m.domains[v] if str(d) == raw]
        if not match:
            raise UsageError(f"value {raw!r} is not in the domain of {v}")
        values[v] = match[0]
    return InterventionSpec.point(m, values)


def cmd_scm(args) -> int:
    if args.action == "gaussian-ci":
        s = formats.sem_from_dict(formats.read_json(args.model))
        x, y, z = parse_nodes(args.x), parse_nodes(args.y), parse_nodes(args.z)
        defect = gaussian_ci_defect(s, x, y, z)
        holds = defect < args.tol
        text = ("conditionally independent" if holds else "NOT conditionally independent") + f" (defect {defect:.3g})"
        _emit(args, text, {"independent": holds, "defect": defect, "tol": args.tol})
        return 0 if holds else 1
    m = formats.mscm_from_dict(formats.read_json(args.model))
    if args.action == "joint":
        sys.stdout.write(formats.dumps(formats.dist_to_dict(exact_joint(m))))
    elif args.action == "sample":
        rows = sample(m, args.n, seed=args.seed)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(m.graph.sorted_nodes())
        w.writerows(rows)
    elif args.action == "intervene":
        sys.stdout.write(formats.dumps(formats.mscm_to_dict(intervene(m, _parse_do(m, args.do or [])))))
    elif args.action == "marginalize":
        sys.stdout.write(formats.dumps(formats.mscm_to_dict(marginalize_mscm(m, parse_nodes(args.u)))))
    return 0


def cmd_export(args) -> int:
    g = _graph(args)
    sys.stdout.write(formats.export_dot(moralize(g) if args.moralize else g))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hedg", description="Graph calculus and Markov properties for directed graphs with hyperedges.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    q = sub.add_parser("query", parents=[common], help="separation queries")
    q.add_argument("criterion", choices=("dsep", "ssep"))
    q.add_argument("-g", "--graph", required=True)
    q.add_argument("-x", required=True)
    q.add_argument("-y", required=True)
    q.add_argument("-z", default="-")
    q.add_argument("--witness", action="store_true", help="print an open path when not separated")
    q.set_defaults(func=cmd_query)

    t = sub.add_parser("transform", help="graph transformations (JSON to stdout)")
    t.add_argument("op", choices=("marginalize",) + tuple(TRANSFORMS))
    t.add_argument("-g", "--graph", required=True)
    t.add_argument("-u", default="-", help="nodes to marginalize out")
    t.set_defaults(func=cmd_transform, format="json")

    o = sub.add_parser("order", parents=[common], help="total orders")
    o.add_argument("action", choices=("find", "check"))
    o.add_argument("-g", "--graph", required=True)
    o.add_argument("--kind", choices=ORDER_KINDS, help="order kind to find or to require when checking")
    o.add_argument("--order")
    o.set_defaults(func=cmd_order)

    mk = sub.add_parser("markov", parents=[common], help="Markov property checks")
    mk.add_argument("action", choices=("check", "audit"))
    mk.add_argument("-g", "--graph", required=True)
    mk.add_argument("-p", "--dist", required=True)
    mk.add_argument("--property", choices=[k.value for k in PropertyKind])
    mk.add_argument("--order")
    mk.add_argument("--witness")
    mk.set_defaults(func=cmd_markov)

    s = sub.add_parser("scm", parents=[common], help="structural causal models")
    s.add_argument("action", choices=("joint", "sample", "intervene", "marginalize", "gaussian-ci"))
    s.add_argument("-m", "--model", required=True)
    s.add_argument("-u", default="-")
    s.add_argument("-n", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--do", action="append", metavar="NODE=VALUE")
    s.add_argument("-x")
    s.add_argument("-y")
    s.add_argument("-z", default="-")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_scm)

    e = sub.add_parser("export", help="DOT export")
    e.add_argument("what", choices=("dot",))
    e.add_argument("-g", "--graph", required=True)
    e.add_argument("--moralize", action="store_true", help="export the moral graph instead")
    e.set_defaults(func=cmd_export)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    if args.command == "scm" and args.action == "gaussian-ci" and not (args.x and args.y):
        print("error: gaussian-ci needs -x and -y", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, HedgError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
