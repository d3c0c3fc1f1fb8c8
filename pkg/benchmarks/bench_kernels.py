"""Compiled vs pure-Python kernels: micro benchmarks and an end-to-end solve.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case runs with the Cython extension and with the pure-Python fallback
(swapped in place on ``vrp2l.kernels``), checks that both give the same
result, and reports the best-of-N wall time and the speed-up.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import random
import sys
import time

from vrp2l import _kernels_py, kernels
from vrp2l.generator import GeneratorConfig, generate_instance
from vrp2l.loading import PackParams, _pack_cached, build_columns, pack
from vrp2l.params import SolverParams
from vrp2l.pipeline import run_pipeline

NAMES = ("blocks", "expand", "fits", "held_karp", "score_of", "skyline_add")

try:
    from vrp2l import _ckernels
except ImportError:
    _ckernels = None


@contextlib.contextmanager
def backend(mod):
    saved = {n: getattr(kernels, n) for n in NAMES}
    try:
        for n in NAMES:
            setattr(kernels, n, getattr(mod, n))
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def case_held_karp(rng, n=12):
    pts = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
    d = lambda a, b: ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) ** 0.5
    conn = [[d(a, b) for b in pts] for a in pts]
    start = [d((50, 50), p) for p in pts]
    end = list(start)
    return lambda: kernels.held_karp(conn, start, end)


def case_expand(rng, n_placed=40):
    W, L = 2.4, 12.0
    pu, pv, pw, pl, pp, pd = [], [], [], [], [], []
    for i in range(n_placed):
        pu.append(rng.choice((0.0, 0.8, 1.6)))
        pv.append(0.3 * i)
        pw.append(0.8)
        pl.append(0.3)
        p = rng.randrange(3)
        pp.append(p)
        pd.append(p + 1 + rng.randrange(3))
    xs, hs = [0.0, W], [0.0]
    covered = sum(w * l for w, l in zip(pw, pl))

    def run():
        out = []
        for _ in range(50):
            out.append(kernels.expand(W, L, pu, pv, pw, pl, pp, pd, xs, hs, covered, 0.6, 0.5, 1, 4,
                                      1.0, 0.5, 1.0))
        return out
    return run


def case_pack(rng):
    inst = generate_instance(GeneratorConfig(seed=7, n_shipments=30, n_trucks=20, max_columns=3))
    truck = max(inst.trucks, key=lambda t: t.area)
    loads = []
    for _ in range(20):
        ships = rng.sample(list(inst.shipments), 6)
        cols, order = [], []
        for k, s in enumerate(ships):
            for c in build_columns(s, inst.pallet):
                cols.append(c)
                order.append((k, 11 - k))  # first on, last off
        loads.append((cols, order))
    params = PackParams(beam_width=5, exact_up_to=0, threshold=1.0)

    def run():
        _pack_cached.cache_clear()  # time the search, not the memo
        return [pack(c, truck, o, params, explain=False).placement for c, o in loads]
    return run


def case_pipeline(_rng):
    inst = generate_instance(GeneratorConfig(seed=3, n_shipments=40, n_trucks=24))
    params = SolverParams(iterations=15, seed=0)

    def run():
        _pack_cached.cache_clear()
        return round(run_pipeline(inst, params).solution.total_mileage, 6)
    return run


CASES = [("held_karp n=12", case_held_karp), ("expand x50", case_expand),
         ("pack 20 loads", case_pack), ("pipeline 40 shipments", case_pipeline)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the results here")
    a = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the pure-Python backend is available", file=sys.stderr)
        return 1
    rows = []
    print(f"{'case':<24} {'cython s':>10} {'python s':>10} {'speed-up':>9}  same")
    for name, make in CASES:
        fn = make(random.Random(0))
        with backend(_ckernels):
            tc, rc = best_of(fn, a.repeat)
        with backend(_kernels_py):
            tp, rp = best_of(fn, a.repeat)
        row = {"case": name, "cython_s": tc, "python_s": tp, "speedup": tp / tc if tc else None,
               "identical": rc == rp}
        rows.append(row)
        print(f"{name:<24} {tc:>10.4f} {tp:>10.4f} {row['speedup']:>8.2f}x  {row['identical']}")
    if a.json:
        with open(a.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)
    return 0 if all(r["identical"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
