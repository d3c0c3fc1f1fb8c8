"""Command-line entry point: ``vrp2l gen|solve|bench|oracle|validate``.

Exit codes: 0 success, 2 infeasible (or construction failure, or
violations found), 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import logging
import os
import statistics
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .construct import ConstructionError
from .generator import GeneratorConfig, GeneratorError, generate_instance, reference_scale, tiny
from .instance_io import FormatError, parse_instance, parse_solution, serialize_instance, write_solution
from .loading import PackParams
from .model import FAMILIES, ModelError, families_ok, validate_solution
from .params import SolverParams
from .pipeline import run_pipeline

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 2, 3

log = logging.getLogger("vrp2l")

# 24 combinations for the robustness bench: tenure x bundle threshold x beam width x pack threshold
DEFAULT_GRID = {
    "tenure": [None, 5],
    "bundle_threshold": [None, 3, 6],
    "beam_width": [3, 5],
    "pack_threshold": [0.85, 0.9],
}


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _load_instance(path):
    text = _read_text(path)
    try:
        return parse_instance(text), hashlib.sha256(text.encode("utf-8")).hexdigest()
    except ModelError as e:
        raise InputError(f"{path}: {e}") from None


def _weights(text):
    try:
        w = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers") from None
    if len(w) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return w


def _add_solver_flags(p):
    g = p.add_argument_group("solver parameters")
    g.add_argument("--pack-threshold", type=float, default=0.85,
                   help="prejudge: reject loads above this fraction of the surface area")
    g.add_argument("--beam-width", type=int, default=5, help="packing beam width; <= 0 is exhaustive")
    g.add_argument("--pack-weights", type=_weights, default=(1.0, 0.5, 1.0), metavar="W1,W2,W3",
                   help="placement score weights")
    g.add_argument("--route-node-budget", type=int, default=200_000)
    g.add_argument("--cluster-radius-scale", type=float, default=1.0)
    g.add_argument("--budget-seconds", type=float, default=None, help="tabu wall-clock budget")
    g.add_argument("--iterations", type=int, default=None, help="tabu iteration budget (reproducible)")
    g.add_argument("--tenure", type=int, default=None, help="default: ceil(sqrt(#bundles))")
    g.add_argument("--bundle-threshold", type=int, default=None, help="split bundles larger than this")
    g.add_argument("--no-bundle", action="store_true", help="one shipment per bundle (TS-NB)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no-postopt", action="store_true")
    g.add_argument("--workers", type=int, default=1, help="threads for neighbour evaluation")


def params_from_args(a) -> SolverParams:
    budget = a.budget_seconds
    if budget is None and a.iterations is None:
        budget = 60.0
    return SolverParams(
        pack=PackParams(threshold=a.pack_threshold, beam_width=a.beam_width, weights=tuple(a.pack_weights)),
        route_node_budget=a.route_node_budget, cluster_radius_scale=a.cluster_radius_scale,
        budget_seconds=budget, iterations=a.iterations, tenure=a.tenure,
        bundle_threshold=a.bundle_threshold, bundling=not a.no_bundle, workers=a.workers,
        seed=a.seed, postopt=not a.no_postopt)


def write_convergence(path, telemetry):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "elapsed_ms", "current_mileage", "best_mileage"])
        for it, ms, cur, best in telemetry:
            w.writerow([it, ms, f"{cur:.6f}", f"{best:.6f}"])


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def solve_run(instance, instance_path, digest, params: SolverParams, out_dir):
    """One pipeline run writing config, solution, convergence and summary into
    ``out_dir``. Returns (exit code, summary dict)."""
    os.makedirs(out_dir, exist_ok=True)
    _dump_json(os.path.join(out_dir, "config.json"),
               {"instance": os.path.abspath(instance_path), "instance_sha256": digest,
                "seed": params.seed, "params": params.to_dict()})
    try:
        res = run_pipeline(instance, params)
    except ConstructionError as e:
        summary = {"error": f"construction failed: {e}", "feasible": False}
        _dump_json(os.path.join(out_dir, "summary.json"), summary)
        return EXIT_INFEASIBLE, summary
    write_convergence(os.path.join(out_dir, "convergence.csv"), res.telemetry)
    with open(os.path.join(out_dir, "solution.json"), "w", encoding="utf-8") as fh:
        fh.write(write_solution(res.solution, instance))
    summary = res.summary()
    _dump_json(os.path.join(out_dir, "summary.json"), summary)
    return (EXIT_OK if res.solution.feasible else EXIT_INFEASIBLE), summary


# ---------------------------------------------------------------- commands

def cmd_gen(a):
    kw = {}
    for name in ("suppliers", "warehouses", "shipments", "trucks", "cities"):
        v = getattr(a, name)
        if v is not None:
            kw[f"n_{name}"] = v
    if a.tightness is not None:
        kw["window_tightness"] = a.tightness
    try:
        if a.preset == "reference":
            cfg = reference_scale(a.seed, **kw)
        elif a.preset == "tiny":
            cfg = tiny(a.seed, **kw)
        else:
            cfg = GeneratorConfig(seed=a.seed, **kw)
        text = serialize_instance(generate_instance(cfg))
    except GeneratorError as e:
        raise InputError(f"generator: {e}") from None
    if a.output == "-":
        sys.stdout.write(text)
    else:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {a.output} ({cfg.n_shipments} shipments, seed {cfg.seed})")
    return EXIT_OK


def cmd_solve(a):
    inst, digest = _load_instance(a.instance)
    params = params_from_args(a)
    code, summary = solve_run(inst, a.instance, digest, params, a.out)
    print(json.dumps(summary, sort_keys=True, indent=1))
    return code


def _grid(a):
    if a.grid:
        try:
            grid = json.loads(_read_text(a.grid))
        except json.JSONDecodeError as e:
            raise InputError(f"{a.grid}: invalid JSON: {e.msg}") from None
    else:
        grid = DEFAULT_GRID
    keys = sorted(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def _apply(params: SolverParams, combo: dict) -> SolverParams:
    pack = params.pack
    kw = {}
    for k, v in combo.items():
        if k == "beam_width":
            pack = replace(pack, beam_width=v)
        elif k == "pack_threshold":
            pack = replace(pack, threshold=v)
        elif k == "pack_weights":
            pack = replace(pack, weights=tuple(v))
        elif k == "bundling":
            kw["bundling"] = bool(v)
        elif hasattr(params, k):
            kw[k] = v
        else:
            raise InputError(f"unknown grid parameter {k!r}")
    return replace(params, pack=pack, **kw)


def _bench_job(job):
    instance_path, digest, params_dict, out_dir = job
    try:
        inst = parse_instance(_read_text(instance_path))
        code, summary = solve_run(inst, instance_path, digest, SolverParams.from_dict(params_dict), out_dir)
        return code, summary, None
    except Exception:  # a crashed run is recorded, the matrix continues
        return None, None, traceback.format_exc()


def cmd_bench(a):
    inst, digest = _load_instance(a.instance)
    base = params_from_args(a)
    combos = _grid(a)
    seeds = [int(s) for s in a.seeds.split(",")] if a.seeds else [base.seed]
    jobs, meta = [], []
    for ci, combo in enumerate(combos):
        for seed in seeds:
            p = replace(_apply(base, combo), seed=seed)
            run_dir = os.path.join(a.out, f"combo{ci:02d}_seed{seed}")
            jobs.append((a.instance, digest, p.to_dict(), run_dir))
            meta.append((ci, seed))
    os.makedirs(a.out, exist_ok=True)
    if a.parallel and a.parallel > 1:
        with ProcessPoolExecutor(a.parallel) as ex:
            results = list(ex.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]
    runs = []
    for (ci, seed), (code, summary, err) in zip(meta, results):
        row = {"combo": ci, "seed": seed, "params": combos[ci]}
        if err is not None:
            row.update(status="crashed", error=err.strip().splitlines()[-1])
        elif "error" in summary:
            row.update(status="failed", error=summary["error"])
        else:
            row.update(status="ok" if code == EXIT_OK else "infeasible",
                       initial_mileage=summary["initial_mileage"], final_mileage=summary["final_mileage"])
        runs.append(row)
    table = []
    for ci, combo in enumerate(combos):
        finals = [r["final_mileage"] for r in runs if r["combo"] == ci and "final_mileage" in r]
        inits = [r["initial_mileage"] for r in runs if r["combo"] == ci and "initial_mileage" in r]
        table.append({"combo": ci, "params": combo, "runs": len(seeds), "completed": len(finals),
                      "median_final_mileage": statistics.median(finals) if finals else None,
                      "median_initial_mileage": statistics.median(inits) if inits else None})
    table.sort(key=lambda r: (r["median_final_mileage"] is None, r["median_final_mileage"] or 0.0, r["combo"]))
    for rank, row in enumerate(table, start=1):
        row["rank"] = rank
    with open(os.path.join(a.out, "bench.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "combo", "params", "runs", "completed", "median_final_mileage",
                    "median_initial_mileage"])
        for r in table:
            w.writerow([r["rank"], r["combo"], json.dumps(r["params"], sort_keys=True), r["runs"],
                        r["completed"], r["median_final_mileage"], r["median_initial_mileage"]])
    _dump_json(os.path.join(a.out, "bench.json"), {"ranked": table, "runs": runs})
    print(f"{'rank':>4} {'combo':>5} {'median final':>13}  params")
    for r in table:
        m = r["median_final_mileage"]
        print(f"{r['rank']:>4} {r['combo']:>5} {'-' if m is None else f'{m:.2f}':>13}  "
              f"{json.dumps(r['params'], sort_keys=True)}")
    return EXIT_OK


def cmd_oracle(a):
    from .oracle import OracleLimitError, OracleLimits, exact_solve

    inst, _ = _load_instance(a.instance)
    limits = OracleLimits(a.max_shipments, a.max_trucks, a.max_columns)
    try:
        sol = exact_solve(inst, limits)
    except OracleLimitError as e:
        raise InputError(str(e)) from None
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(write_solution(sol))
    if not sol.feasible:
        print(json.dumps({"feasible": False, "oracle": sol.diagnostics.get("oracle")}, sort_keys=True))
        return EXIT_INFEASIBLE
    print(json.dumps({"feasible": True, "optimum_mileage": sol.total_mileage,
                      "assignment": dict(sol.assignment)}, sort_keys=True))
    return EXIT_OK


def cmd_validate(a):
    inst, _ = _load_instance(a.instance)
    try:
        sol = parse_solution(_read_text(a.solution))
    except ModelError as e:
        raise InputError(f"{a.solution}: {e}") from None
    violations = validate_solution(sol, inst)
    feas = families_ok(violations)
    print(json.dumps({"feasible": not violations, "families": {f: feas[f] for f in FAMILIES},
                      "violations": [[v.family, v.rule, list(v.entities)] for v in violations]},
                     indent=1, sort_keys=True))
    return EXIT_OK if not violations else EXIT_INFEASIBLE


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vrp2l", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--preset", choices=("default", "tiny", "reference"), default="default")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--suppliers", type=int)
    g.add_argument("--warehouses", type=int)
    g.add_argument("--shipments", type=int)
    g.add_argument("--trucks", type=int)
    g.add_argument("--cities", type=int)
    g.add_argument("--tightness", type=float, help="window tightness in (0, 1]")
    g.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="construct, tabu search, post-optimize")
    s.add_argument("instance")
    s.add_argument("--out", default="run", help="run directory")
    _add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a parameter matrix and rank the combinations")
    b.add_argument("instance")
    b.add_argument("--out", default="bench", help="output directory")
    b.add_argument("--grid", help="JSON object mapping parameter names to value lists")
    b.add_argument("--seeds", help="comma-separated seeds (default: --seed)")
    b.add_argument("--parallel", type=int, default=1, metavar="N", help="concurrent runs")
    _add_solver_flags(b)
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="exact optimum of a tiny instance")
    o.add_argument("instance")
    o.add_argument("-o", "--output", help="write the optimal solution document here")
    o.add_argument("--max-shipments", type=int, default=6)
    o.add_argument("--max-trucks", type=int, default=3)
    o.add_argument("--max-columns", type=int, default=5)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", help="check a solution document against an instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:  # argparse usage errors are input errors
        return EXIT_INPUT if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except (InputError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
