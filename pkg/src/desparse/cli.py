"""Command-line front end.

    desparse gen clique-union --sizes 8 8 8 --bridges 2 --out g.txt
    desparse desparsify g.txt --eps 0.3 --verify cut --report r.json
    desparse cluster g.txt --backend pivot --from-sketch
    desparse stream s.txt --mode dynamic
    desparse verify h.txt g.txt --eps 0.5 --kind spectral

Every command prints (or writes) a JSON report; the exit status is 0 exactly
when every requested verification passed.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import generators
from .cluster import brute_force_cc, cluster_from_sketch, run_backend
from .desparsify.pipelines import (
    COMPOSED_BAND,
    PreconditionWarning,
    desparsify_from_sketch,
    desparsify_spectral_from_sketch,
)
from .graphcore import Graph, WeightedGraph, cc_cost, read_edge_list, write_edge_list, write_partition
from .profiles import PROFILES, get_profile
from .reportjson import SCHEMA_VERSION, dumps
from .sketches import SketchRecoveryError, SketchSuite
from .spectral import is_cut_sparsifier_bruteforce, is_spectral_sparsifier, is_total_weight_preserving, MAX_BRUTEFORCE_N

RETRIES = 3
VERIFY_KINDS = ("cut", "spectral", "twp")


class CommandError(RuntimeError):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DESPARSIFY_SEED")
    return int(env) if env else 0


def _unweighted(g) -> Graph:
    if isinstance(g, WeightedGraph):
        if any(w != 1.0 for w in g.weights.values()):
            raise CommandError("expected an unweighted graph")
        return g.support()
    return g


def _verify(h, g, eps: float, kinds: Sequence[str]) -> dict:
    out = {}
    for kind in kinds:
        if kind == "none":
            continue
        if kind == "cut":
            if g.n > MAX_BRUTEFORCE_N:
                raise CommandError(f"cut verification enumerates cuts and needs n <= {MAX_BRUTEFORCE_N}")
            out["cut"] = is_cut_sparsifier_bruteforce(h, g, eps).to_dict()
        elif kind == "spectral":
            out["spectral"] = is_spectral_sparsifier(h, g, eps).to_dict()
        elif kind == "twp":
            out["twp"] = {"ok": is_total_weight_preserving(h, g)}
        else:
            raise CommandError(f"unknown verification {kind!r}")
    return out


def _kinds(values: Optional[Sequence[str]]) -> list[str]:
    kinds = []
    for v in values or []:
        kinds.extend(x for x in v.split(",") if x)
    return kinds


def _suite(g: Graph, args, seed: int) -> SketchSuite:
    return SketchSuite.of_graph(g, seed, args.eps, lam=args.lam, profile=args.profile)


def _with_retries(fn, seed: int):
    last = None
    for attempt in range(RETRIES):
        try:
            return fn(seed + attempt), seed + attempt
        except SketchRecoveryError as exc:
            last = exc
    raise CommandError(f"sketch recovery failed {RETRIES} times: {last}")


def cmd_gen(args) -> dict:
    kind = args.kind
    seed = _seed(args)
    if kind == "clique-union":
        g = generators.clique_union(args.sizes, args.bridges, seed)
    elif kind == "random-gnp":
        g = generators.random_gnp(args.n, args.p, seed)
    elif kind == "expander-like":
        g = generators.expander_like(args.n, args.degree, seed)
    elif kind == "tree":
        g = generators.random_tree(args.n, seed)
    elif kind == "cycle":
        g = generators.cycle(args.n)
    else:
        raise CommandError(f"unknown generator {kind!r}")
    if args.out:
        write_edge_list(g, args.out)
    return {"command": "gen", "kind": kind, "n": g.n, "m": g.m, "seed": seed, "ok": True}


def cmd_desparsify(args) -> dict:
    g = _unweighted(read_edge_list(args.input))
    seed = _seed(args)
    pipeline = desparsify_from_sketch if args.mode == "cut" else desparsify_spectral_from_sketch

    def run(s):
        suite = _suite(g, args, s)
        if args.mode == "cut":
            return pipeline(suite, max_iters=args.max_iters, max_attempts=args.max_attempts)
        return pipeline(suite, profile=args.profile, max_iters=args.max_iters, max_attempts=args.max_attempts)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PreconditionWarning)
        (out, prov), used_seed = _with_retries(run, seed)
    if args.out:
        write_edge_list(out, args.out)
    band = COMPOSED_BAND * args.eps
    verdicts = _verify(out, g, band, _kinds(args.verify))
    prov.verdicts = verdicts
    return {
        "command": "desparsify",
        "mode": args.mode,
        "n": g.n,
        "m": g.m,
        "output_edges": out.m,
        "eps": args.eps,
        "verify_band": band,
        "seed": used_seed,
        "profile": get_profile(args.profile).name,
        "provenance": prov.to_dict(),
        "warnings": [str(w.message) for w in caught if issubclass(w.category, PreconditionWarning)],
        "verdicts": verdicts,
        "ok": all(v["ok"] for v in verdicts.values()),
    }


def cmd_cluster(args) -> dict:
    g = _unweighted(read_edge_list(args.input))
    seed = _seed(args)
    report = {"command": "cluster", "n": g.n, "m": g.m, "backend": args.backend, "seed": seed}
    if args.from_sketch:
        def run(s):
            return cluster_from_sketch(_suite(g, args, s), backend=args.backend, audit_graph=g, seed=s, restarts=args.restarts)

        sc, used_seed = _with_retries(run, seed)
        res = sc.result
        report.update({"seed": used_seed, "provenance": sc.provenance, "sparsifier_edges": sc.sparsifier.m,
                       "cost_on_sparsifier": cc_cost(sc.sparsifier, res.partition)})
    else:
        res = run_backend(g, args.backend, seed=seed, restarts=args.restarts)
    if args.out:
        write_partition(res.partition, args.out)
    report.update({"cost": res.cost, "k": res.partition.k, "clusters": res.partition.clusters()})
    verdicts = {}
    if args.audit:
        if g.n > 9:
            raise CommandError("the brute-force audit needs n <= 9")
        opt = brute_force_cc(g).cost
        bound = 3 * (1 + 2 * args.eps) ** 2 * opt + 1e-9
        verdicts["approximation"] = {"ok": res.cost <= bound, "opt": opt, "bound": bound}
    report["verdicts"] = verdicts
    report["ok"] = all(v["ok"] for v in verdicts.values())
    return report


def cmd_stream(args) -> dict:
    from .harness import distributed_run, dynamic_stream_run, insertion_only_run, mpc_run, net_graph, read_stream

    n, events = read_stream(args.input)
    seed = _seed(args)
    report = {"command": "stream", "mode": args.mode, "n": n, "events": len(events), "seed": seed}
    kw = dict(backend=args.backend, lam=args.lam, profile=args.profile)
    if args.mode == "insertion":
        run = insertion_only_run(events, n, args.eps, seed, backend=args.backend, profile=args.profile)
        again = insertion_only_run(events, n, args.eps, seed, backend=args.backend, profile=args.profile)
        g = net_graph(events, n)
        checks = {
            "deterministic_state": run.state.digest() == again.state.digest(),
            "exact_m": run.graph.m == g.m,
        }
        report.update({"digest": run.state.digest(), "cost": cc_cost(g, run.result.partition), "k": run.result.partition.k,
                       "spanner_sizes": run.state.spanners.sizes(), "leftover": run.state.leftover_count})
    else:
        if args.mode == "dynamic":
            run = dynamic_stream_run(events, n, args.eps, seed, **kw)
        else:
            g = net_graph(events, n)
            edges = g.sorted_edges()
            k = args.machines
            parts = [edges[i::k] for i in range(k)]
            fn = distributed_run if args.mode == "distributed" else mpc_run
            run = fn(parts, n, args.eps, seed, **kw)
        checks = {"equivalent": bool(run.report["suite_equal"] and run.report["partition_equal"])}
        if args.mode == "mpc":
            checks["two_rounds"] = run.report["rounds"] == 2
        report.update({"cost_on_sparsifier": run.clustering.result.cost, "k": run.clustering.result.partition.k,
                       "model": {k: v for k, v in run.report.items() if k not in ("suite_equal", "partition_equal")}})
    report["verdicts"] = {k: {"ok": v} for k, v in checks.items()}
    report["ok"] = all(checks.values())
    return report


def cmd_verify(args) -> dict:
    h = read_edge_list(args.h)
    g = read_edge_list(args.g)
    if h.n != g.n:
        raise CommandError(f"size mismatch: {h.n} vs {g.n} vertices")
    verdicts = _verify(h, g, args.eps, _kinds(args.kind) or ["cut", "spectral", "twp"])
    return {"command": "verify", "eps": args.eps, "verdicts": verdicts, "ok": all(v["ok"] for v in verdicts.values())}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, default=0.3)
    common.add_argument("--lambda", dest="lam", type=float, default=None, help="weak-edge strength threshold override")
    common.add_argument("--seed", type=int, default=None, help="defaults to $DESPARSIFY_SEED, then 0")
    common.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    common.add_argument("--backend", choices=["pivot", "brute"], default="pivot")
    common.add_argument("--report", default=None, help="write the JSON report here instead of stdout")
    common.add_argument("--max-iters", type=int, default=None)
    common.add_argument("--max-attempts", type=int, default=None)

    parser = argparse.ArgumentParser(prog="desparse", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a graph")
    p.add_argument("kind", choices=["clique-union", "random-gnp", "expander-like", "tree", "cycle"])
    p.add_argument("n", type=int, nargs="?", default=16)
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 8, 8])
    p.add_argument("--bridges", type=int, default=0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("desparsify", parents=[common], help="sketch a graph and recover a simple sparsifier")
    p.add_argument("input")
    p.add_argument("--mode", choices=["cut", "spectral"], default="cut")
    p.add_argument("--verify", action="append", default=None, help="cut, spectral, twp or none (repeatable)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_desparsify)

    p = sub.add_parser("cluster", parents=[common], help="correlation clustering")
    p.add_argument("input")
    p.add_argument("--from-sketch", action="store_true")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--audit", action="store_true", help="compare against the brute-force optimum (n <= 9)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("stream", parents=[common], help="run a stream file through a model simulation")
    p.add_argument("input")
    p.add_argument("--mode", choices=["dynamic", "distributed", "mpc", "insertion"], default="dynamic")
    p.add_argument("--machines", type=int, default=4)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("verify", parents=[common], help="check h against g")
    p.add_argument("h")
    p.add_argument("g")
    p.add_argument("--kind", action="append", default=None, help="cut, spectral or twp (repeatable)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except (CommandError, ValueError, RuntimeError, OSError) as exc:
        report = {"command": args.command, "ok": False, "error": f"{type(exc).__name__}: {exc}"}
    report["schema_version"] = SCHEMA_VERSION
    text = dumps(report)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.get("ok") else 1


if __name__ == "__main__":
    sys.exit(main())
