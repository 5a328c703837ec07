"""Command-line front end: generate, run, verify-trace, invariants, lower-bound."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CapacityError, ConvexsimError, InputError
from .generators import ALL_KINDS, generate_instance
from .graphs import (
    Graph,
    clique_number,
    format_graph_text,
    is_ptolemaic,
    lexbfs_peo,
    parse_graph_text,
)
from .oracles import oracle_invariants, validate_trace
from .scenarios import (
    emit_lower_bound_scenario,
    format_config,
    parse_config,
    run_batch,
)
from .semilattices import (
    breadth,
    format_semilattice_text,
    height,
    is_cycle_free,
    parse_semilattice_text,
)
from .simulation import finish_summary, run_scenario
from .spaces import (
    ALGEBRAIC,
    GEODESIC,
    MONOPHONIC,
    algebraic_space,
    build_blocking_instance,
    geodesic_space,
    monophonic_space,
)

_HULLS = {"monophonic": MONOPHONIC, "geodesic": GEODESIC, "algebraic": ALGEBRAIC}


def _load_instance(path: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    first = next((ln for ln in text.splitlines()
                  if ln.split("#", 1)[0].strip()), "")
    if len(first.split("#", 1)[0].split()) == 2:
        return "graph", parse_graph_text(text), text
    return "semilattice", parse_semilattice_text(text), text


def _space_from(kind: str, backing, hull: str):
    if hull == "algebraic" or (hull == "auto" and kind == "semilattice"):
        return algebraic_space(backing)
    if hull == "geodesic":
        return geodesic_space(backing)
    return monophonic_space(backing)


def _cmd_generate(args) -> int:
    obj = generate_instance(args.kind, seed=args.seed, size=args.size,
                            max_clique=args.max_clique, base=args.base)
    comment = f"kind={args.kind} seed={args.seed}"
    if isinstance(obj, Graph):
        text = format_graph_text(obj, comment)
    else:
        text = format_semilattice_text(obj, comment)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        configs = parse_config(fh.read(), base_dir=os.path.dirname(args.config) or ".")
    result = run_batch(configs, out_dir=args.out_dir,
                       write_traces=args.format == "jsonl")
    sys.stdout.write(result.summary_csv())
    return result.exit_code


def _cmd_verify_trace(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        configs = parse_config(fh.read(), base_dir=os.path.dirname(args.config) or ".")
    matching = [c for c in configs if args.scenario_id in (None, c.scenario_id)]
    if not matching:
        raise InputError(f"no scenario {args.scenario_id!r} in config")
    cfg = matching[0]
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    scenario = cfg.scenario(seed)
    trace = run_scenario(scenario)
    report = validate_trace(trace, scenario)
    finish_summary(trace, scenario, report.agreement_metric, report.validity_ok)
    if args.trace:
        with open(args.trace, encoding="utf-8") as fh:
            recorded = fh.read()
        if recorded != trace.to_jsonl():
            print("trace mismatch: recorded file differs from deterministic replay")
            return 1
    print(json.dumps({
        "scenario": cfg.scenario_id,
        "seed": seed,
        "validity_ok": report.validity_ok,
        "agreement_ok": report.agreement_ok,
        "agreement_metric": report.agreement_metric,
        "lemma_checks_ok": report.lemma1_ok,
        "round_guarantees_ok": report.guarantees_ok,
        "decided": report.decided,
        "rounds": report.rounds,
        "fallback_count": report.fallback_count,
        "notes": report.notes,
    }, indent=2, sort_keys=True))
    return 0 if report.ok else 1


def _cmd_invariants(args) -> int:
    kind, backing, _ = _load_instance(args.instance)
    space = _space_from(kind, backing, args.hull)
    out: dict[str, object] = {"kind": kind, "n": backing.n, "hull": space.kind}
    if kind == "graph":
        peo = lexbfs_peo(backing)
        out["chordal"] = peo is not None
        out["clique_number"] = clique_number(backing)
        if backing.is_connected():
            out["diameter"] = backing.diameter()
            out["radius"] = backing.radius()
        try:
            out["ptolemaic"] = is_ptolemaic(backing)
        except CapacityError:
            out["ptolemaic"] = None
    else:
        out["height"] = height(backing)
        out["cycle_free"] = is_cycle_free(backing)
        try:
            out["breadth"] = breadth(backing)
        except CapacityError:
            out["breadth"] = None
    order = space.convex_elimination_order()
    out["convex_geometry"] = order is not None
    out["helly_number"] = space.helly_number()
    try:
        out["caratheodory_number"] = space.caratheodory_number()
    except CapacityError:
        out["caratheodory_number"] = None
    if args.oracle:
        helly, cara, geometry = oracle_invariants(space)
        out["oracle"] = {"helly_number": helly, "caratheodory_number": cara,
                         "convex_geometry": geometry}
        out["oracle_match"] = (
            helly == out["helly_number"]
            and cara == out["caratheodory_number"]
            and geometry == out["convex_geometry"]
        )
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_lower_bound(args) -> int:
    kind, backing, text = _load_instance(args.instance)
    space = _space_from(kind, backing, args.hull)
    members = [int(x) for x in args.set.split(",")]
    blocking = build_blocking_instance(space, members)
    if blocking is None:
        raise InputError("the given set is neither free nor irredundant")
    cfg = emit_lower_bound_scenario(space, text, kind, blocking, args.f)
    doc = format_config([cfg])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexsim",
        description="Byzantine approximate agreement on discrete convexity spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a graph or semilattice instance file")
    gen.add_argument("kind", choices=ALL_KINDS)
    gen.add_argument("--size", type=int, default=8)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--max-clique", type=int, default=3, dest="max_clique")
    gen.add_argument("--base", type=int, default=3,
                     help="base-set size for subset-lattice-minus-empty")
    gen.add_argument("--out", default=None)
    gen.set_defaults(fn=_cmd_generate)

    run = sub.add_parser("run", help="execute a batch config")
    run.add_argument("--config", required=True)
    run.add_argument("--out-dir", default=None, dest="out_dir")
    run.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    run.set_defaults(fn=_cmd_run)

    ver = sub.add_parser("verify-trace", help="replay a scenario and validate its trace")
    ver.add_argument("--config", required=True)
    ver.add_argument("--scenario-id", default=None, dest="scenario_id")
    ver.add_argument("--seed", type=int, default=None)
    ver.add_argument("--trace", default=None,
                     help="recorded trace file to compare against the replay")
    ver.set_defaults(fn=_cmd_verify_trace)

    inv = sub.add_parser("invariants", help="convexity invariants of an instance file")
    inv.add_argument("--instance", required=True)
    inv.add_argument("--hull", choices=("auto", "monophonic", "geodesic", "algebraic"),
                     default="auto")
    inv.add_argument("--oracle", action="store_true",
                     help="cross-check with the brute-force oracles (small instances)")
    inv.set_defaults(fn=_cmd_invariants)

    low = sub.add_parser("lower-bound", help="emit a partition scenario from a blocking instance")
    low.add_argument("--instance", required=True)
    low.add_argument("--hull", choices=("auto", "monophonic", "geodesic", "algebraic"),
                     default="auto")
    low.add_argument("--set", required=True, help="comma-separated value ids")
    low.add_argument("--f", type=int, default=1)
    low.add_argument("--out", default=None)
    low.set_defaults(fn=_cmd_lower_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConvexsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
