"""Command-line front end.

Exit codes: 0 sound / repaired, 1 unsound / not repairable, 2 error.
Set ``DPN_LOG`` to a logging level name (``INFO``, ``DEBUG``) for diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import model
from .generator import GenerationExhausted, GeneratorParams, generate_document
from .oracle import StateCapExceeded, brute_soundness
from .repair import IterationLimit, critical_arcs, repair_dpn, verify_soundness
from .statespace import GraphTooLarge, Unbounded, build_ccg, build_cover_graph, build_lts, to_dot
from .transform import RefinementDiverged, add_tau, refine

log = logging.getLogger("dpnrepair")

BENCH_FIELDS = (
    "name",
    "n",
    "seed",
    "success",
    "verdict",
    "iterations",
    "repair_steps",
    "restrictions",
    "mean_seconds",
    "error",
)

_ERRORS = (
    model.ModelError,
    OSError,
    IterationLimit,
    RefinementDiverged,
    GraphTooLarge,
    StateCapExceeded,
    GenerationExhausted,
)


class _Usage(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("DPN_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _write(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _print_verdict(name: str, v) -> None:
    print(f"{name}: {'sound' if v.sound else 'unsound'}")
    for key in ("c1", "c2", "c3"):
        print(f"  {key.upper()}: {'ok' if getattr(v, key) else 'violated'}")
    for r in v.reasons:
        print(f"  - {r}")


def cmd_verify(args) -> int:
    inst = model.load(args.file)
    v = verify_soundness(inst)
    if args.json:
        print(json.dumps(v.to_dict(), indent=2))
    else:
        _print_verdict(args.file, v)
    if args.cross_check:
        b = brute_soundness(inst)
        agree = b.sound == v.sound
        print(f"  cross-check: oracle says {'sound' if b.sound else 'unsound'} ({b.states} states)"
              f"{'' if agree else ' DISAGREES'}")
        if not agree:
            return 2
    return 0 if v.sound else 1


def cmd_repair(args) -> int:
    inst = model.load(args.file)
    rep = repair_dpn(
        inst,
        postpone_refinement=not args.no_postpone_refinement,
        max_iterations=args.max_iterations,
        simplify_guards=args.simplify,
        max_nodes=args.max_states,
    )
    _write(model.serialize(rep.result), args.output)
    if args.report:
        Path(args.report).write_text(json.dumps(rep.to_dict(), indent=2) + "\n", encoding="utf-8")
    if rep.success:
        steps = sum(1 for it in rep.iterations if it["restricted"])
        print(
            f"repaired in {rep.seconds:.3f}s: {steps} restricting iteration(s), "
            f"removed transitions {rep.removed_transitions or '-'}",
            file=sys.stderr,
        )
        return 0
    print(f"repair failed: {rep.failure}; net returned unchanged", file=sys.stderr)
    return 1


def cmd_graph(args) -> int:
    inst = model.load(args.file)
    crit = ()
    if args.kind == "lts":
        g = build_lts(inst)
    elif args.kind == "cg":
        g = build_cover_graph(inst)
    elif args.kind == "ccg":
        g = build_ccg(inst)
    else:
        refined = refine(inst)
        g = build_ccg(refined, add_tau(refined.net))
        crit = [(a.src, a.tid, a.dst) for a in critical_arcs(g)]
    _write(to_dot(g, inst.final_marking, crit), args.output)
    return 0


def cmd_generate(args) -> int:
    if args.n < 3:
        raise _Usage("--n must be at least 3")
    doc = generate_document(GeneratorParams(args.n, args.seed))
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def _bench_job(job):
    name, n, seed, reps, max_iterations, max_states = job
    row = {"name": name, "n": n, "seed": "" if seed is None else seed, "error": ""}
    t0 = time.perf_counter()
    try:
        if seed is None:
            inst = model.load(name)
            row["n"] = len(inst.net.transitions)
        else:
            inst = model.from_dict(generate_document(GeneratorParams(n, seed)))
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            rep = repair_dpn(inst, max_iterations=max_iterations, max_nodes=max_states)
            times.append(time.perf_counter() - t0)
        row["success"] = "true" if rep.success else "false"
        row["verdict"] = ("sound" if rep.verdict.sound else "unsound") if rep.verdict else "unrepaired"
        row["iterations"] = len(rep.iterations)
        row["repair_steps"] = sum(1 for it in rep.iterations if it["phase"] == "repair" and it["restricted"])
        row["restrictions"] = rep.restrictions
        row["mean_seconds"] = f"{sum(times) / len(times):.6f}"
    except Exception as e:  # recorded per row, the run continues
        row.update(success="false", verdict="error", iterations=0, repair_steps=0, restrictions=0,
                   mean_seconds=f"{time.perf_counter() - t0:.6f}", error=f"{type(e).__name__}: {e}")
    return row


def cmd_bench(args) -> int:
    if args.n_min < 3 or args.n_max < args.n_min:
        raise _Usage("need 3 <= --n-min <= --n-max")
    limits = (args.reps, args.max_iterations, args.max_states)
    jobs = [(str(f), 0, None) + limits for f in args.fixture]
    jobs += [
        (f"gen-n{n}-s{seed}", n, seed) + limits
        for n in range(args.n_min, args.n_max + 1)
        for seed in range(args.seed, args.seed + args.count)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_job, jobs))
    else:
        rows = [_bench_job(j) for j in jobs]
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    if not args.no_plot:
        from .plots import plot_bench

        plot_bench([r for r in rows if not r["error"]], out.with_suffix(".png"))
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows written to {out}" + (f" ({failed} errors)" if failed else ""), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpnrepair", description="Soundness checking and repair of data Petri nets.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="decide data-aware soundness")
    v.add_argument("file")
    v.add_argument("--cross-check", action="store_true", help="also run the explicit-state oracle")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("repair", help="restrict guards until the net is sound")
    r.add_argument("file")
    r.add_argument("-o", "--output", help="output model file (default: stdout)")
    r.add_argument("--report", help="write a JSON repair report here")
    r.add_argument("--simplify", action="store_true", help="simplify changed guards in context")
    r.add_argument("--no-postpone-refinement", action="store_true", help="refine on every iteration")
    r.add_argument("--max-iterations", type=int)
    r.add_argument("--max-states", type=int, default=200_000, help="symbolic state cap per graph")
    r.set_defaults(func=cmd_repair)

    g = sub.add_parser("graph", help="export a state graph as DOT")
    g.add_argument("file")
    g.add_argument("--kind", choices=("lts", "cg", "ccg", "tau-ccg"), default="ccg")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_graph)

    gen = sub.add_parser("generate", help="emit a synthetic net")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output")
    gen.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="repair generated nets and record timings")
    b.add_argument("--n-min", type=int, default=3)
    b.add_argument("--n-max", type=int, default=30)
    b.add_argument("--count", type=int, default=10, help="nets per size")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=int, default=0, help="first seed")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--max-iterations", type=int)
    b.add_argument("--max-states", type=int, default=100_000,
                   help="symbolic state cap per graph; nets above it are recorded as errors")
    b.add_argument("--fixture", action="append", default=[], help="also bench this model file")
    b.add_argument("-o", "--output", default="bench.csv")
    b.add_argument("--no-plot", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as e:
        parser.error(str(e))
    except Unbounded as e:
        print(f"error: net is unbounded (strict cover at {e}); no finite LTS", file=sys.stderr)
        return 2
    except _ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
