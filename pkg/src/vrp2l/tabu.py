"""Tabu search over the shipment-to-truck assignment.

A move takes the members of one bundle that currently ride on ``from_truck``
and puts them on ``to_truck``; both trucks are re-routed with the per-truck
route search, everything else is reused from the route cache. Candidates are
ranked by an optimistic cost, solved exactly in that order, and the cheapest
exact candidate that also passes the dock-queue check is taken, even if it
is worse than the current solution.
"""
from __future__ import annotations

import heapq
import math
import random
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .evaluate import assemble, global_check
from .model import EPS, Instance, Solution
from .params import SolverParams
from .routing import solve_route, truck_admissible, truck_signature


@dataclass(frozen=True)
class Bundle:
    id: int
    shipments: tuple


@dataclass(frozen=True)
class Move:
    bundle: int
    from_truck: str
    to_truck: str


def bundle_shipments(instance: Instance, threshold: int | None = None, bundling: bool = True) -> list:
    """Group shipments by (source, destination); with ``bundling`` off every
    shipment is its own bundle. Bundles larger than ``threshold`` are split
    into ceil(size / threshold) nearly equal parts."""
    groups = {}
    for s in instance.shipments:
        key = (s.source, s.destination) if bundling else (s.source, s.destination, s.id)
        groups.setdefault(key, []).append(s.id)
    out = []
    for key in sorted(groups):
        ids = sorted(groups[key])
        parts = [ids]
        if threshold is not None and threshold >= 1 and len(ids) > threshold:
            k = math.ceil(len(ids) / threshold)
            size, extra = divmod(len(ids), k)
            parts, i = [], 0
            for p in range(k):
                n = size + (1 if p < extra else 0)
                parts.append(ids[i:i + n])
                i += n
        for p in parts:
            out.append(Bundle(len(out), tuple(p)))
    return out


def triangle_slack(instance: Instance, max_locations: int = 200) -> float | None:
    """Largest triangle-inequality violation of the distance matrix, or None
    when the matrix is too large to check."""
    D = instance.D
    n = len(D)
    if n > max_locations:
        return None
    worst = 0.0
    for k in range(n):
        Dk = D[k]
        for i in range(n):
            dik = D[i][k]
            Di = D[i]
            for j in range(n):
                v = Di[j] - dik - Dk[j]
                if v > worst:
                    worst = v
    return worst


class TabuList:
    """Forbidden moves with the iteration at which they expire."""

    def __init__(self):
        self.entries = OrderedDict()

    def add(self, move: Move, expires: int):
        self.entries.pop(move, None)
        self.entries[move] = expires

    def expire(self, it: int):
        for m in [m for m, e in self.entries.items() if e <= it]:
            del self.entries[m]

    def __contains__(self, move):
        return move in self.entries

    def evict_oldest(self) -> bool:
        if not self.entries:
            return False
        self.entries.popitem(last=False)
        return True

    def __len__(self):
        return len(self.entries)


class _State:
    def __init__(self, instance, params, solution):
        self.inst = instance
        self.params = params
        self.assign = dict(solution.assignment)
        self.loads = {}
        for j, t in self.assign.items():
            self.loads.setdefault(t, set()).add(j)
        self.loads = {t: frozenset(s) for t, s in self.loads.items()}
        self.res = {t: solve_route(instance.truck[t], s, instance, params) for t, s in self.loads.items()}
        for t, r in self.res.items():
            if not r.feasible:
                raise ValueError(f"truck {t} of the start solution has no feasible route")

    def cost(self, t):
        r = self.res.get(t)
        return 0.0 if r is None else r.mileage

    def total(self, res=None):
        res = self.res if res is None else res
        return sum(res[t].mileage for t in sorted(res))

    def routes(self, res=None):
        res = self.res if res is None else res
        return [res[t].route for t in sorted(res)]


def evaluate_move(X: dict, m: Move, instance: Instance, bundles, params: SolverParams = SolverParams()):
    """(mileage, feasible, report) of the assignment after applying ``m``;
    ``X`` is not modified. Infeasible candidates get infinite mileage."""
    members = [j for j in bundles[m.bundle].shipments if X.get(j) == m.from_truck]
    if not members or m.from_truck == m.to_truck:
        return float("inf"), False, None
    Y = dict(X)
    for j in members:
        Y[j] = m.to_truck
    loads = {}
    for j, t in Y.items():
        loads.setdefault(t, set()).add(j)
    res = {}
    for t in sorted(loads):
        r = solve_route(instance.truck[t], loads[t], instance, params)
        if not r.feasible:
            return float("inf"), False, None
        res[t] = r
    rep = global_check([res[t].route for t in sorted(res)], instance)
    if not rep.feasible:
        return float("inf"), False, rep
    return sum(res[t].mileage for t in sorted(res)), True, rep


def tabu_search(X0: Solution, instance: Instance, params: SolverParams = SolverParams(),
                telemetry: list | None = None, on_candidate=None) -> Solution:
    """Run until the iteration or wall-clock budget is spent; returns the
    best solution seen. ``telemetry`` receives rows (iteration, elapsed_ms,
    current_mileage, best_mileage); ``on_candidate`` is called with every
    candidate Solution that passed the dock-queue check."""
    if not X0.feasible:
        raise ValueError("tabu search needs a feasible start solution")
    iters = params.iterations
    secs = params.budget_seconds
    if (iters is not None and iters <= 0) or (secs is not None and secs <= 0) or \
            (iters is None and secs is None):
        return X0
    t0 = time.perf_counter()
    deadline = None if secs is None else t0 + secs
    st = _State(instance, params, X0)
    bundles = bundle_shipments(instance, params.bundle_threshold, params.bundling)
    tenure = params.tenure if params.tenure else max(1, math.ceil(math.sqrt(len(bundles))))
    slack = triangle_slack(instance)
    # the seed only breaks ties between equally ranked candidates
    rank = list(range(len(bundles)))
    random.Random(params.seed).shuffle(rank)
    tabu = TabuList()
    cur = st.total()
    best = cur
    best_res = dict(st.res)
    best_rep = global_check(st.routes(), instance)
    trucks_by_sig = {}
    for t in sorted(instance.trucks, key=lambda t: t.id):
        trucks_by_sig.setdefault(truck_signature(t), []).append(t.id)
    pool = ThreadPoolExecutor(params.workers) if params.workers and params.workers > 1 else None
    it = 0
    accepted_at_best = 0

    def out_of_time():
        return deadline is not None and time.perf_counter() >= deadline

    def lower_bound(t, moving):
        c = st.cost(t)
        if slack is None:
            return 0.0
        extra = len({instance.shipment[j].source for j in moving} |
                    {instance.shipment[j].destination for j in moving})
        return c - instance.truck[t].cost_per_distance * slack * extra

    try:
        while True:
            if iters is not None and it >= iters:
                break
            if out_of_time():
                break
            tabu.expire(it)
            used = sorted(st.loads)
            idle = []
            for sig, ids in trucks_by_sig.items():
                free = [t for t in ids if t not in st.loads]
                if free:
                    idle.append(free[0])
            targets = sorted(set(used) | set(idle))

            # optimistic candidate list
            jobs = []
            for b in bundles:
                holders = sorted({st.assign[j] for j in b.shipments})
                for f in holders:
                    moving = frozenset(j for j in b.shipments if st.assign[j] == f)
                    jobs.append((b.id, f, moving, st.loads[f] - moving))

            def solve_from(job):
                _, f, _, rest = job
                return solve_route(instance.truck[f], rest, instance, params) if rest else None

            froms = list(pool.map(solve_from, jobs)) if pool else [solve_from(j) for j in jobs]
            cands = []
            for (bid, f, moving, rest), rf in zip(jobs, froms):
                if rf is not None and not rf.feasible:
                    continue
                cf = 0.0 if rf is None else rf.mileage
                for t in targets:
                    if t == f:
                        continue
                    if truck_admissible(instance.truck[t], st.loads.get(t, frozenset()) | moving, instance):
                        continue
                    est = cur - st.cost(f) - st.cost(t) + cf + lower_bound(t, moving)
                    cands.append((est, bid, f, t, moving, rf))
            cands.sort(key=lambda c: (c[0], rank[c[1]], c[2], c[3]))

            chosen = None
            while chosen is None:
                heap = []
                timed_out = False

                def drain(limit):
                    while heap and heap[0][0] <= limit:
                        exact, _, bid, f, t, moving, rf, rt = heapq.heappop(heap)
                        res = dict(st.res)
                        if rf is None:
                            res.pop(f, None)
                        else:
                            res[f] = rf
                        res[t] = rt
                        rep = global_check([res[k].route for k in sorted(res)], instance)
                        if on_candidate is not None and rep.feasible:
                            on_candidate(_solution(instance, res, rep))
                        if rep.feasible:
                            return (exact, bid, f, t, moving, res, rep)
                    return None

                for est, bid, f, t, moving, rf in cands:
                    if out_of_time():
                        timed_out = True
                        break
                    if Move(bid, f, t) in tabu and not est < best - EPS:
                        continue
                    found = drain(est)
                    if found is not None:
                        chosen = found
                        break
                    rt = solve_route(instance.truck[t], st.loads.get(t, frozenset()) | moving,
                                     instance, params)
                    if not rt.feasible:
                        continue
                    exact = cur - st.cost(f) - st.cost(t) + (0.0 if rf is None else rf.mileage) + rt.mileage
                    if Move(bid, f, t) in tabu and not exact < best - EPS:
                        continue
                    heapq.heappush(heap, (exact, rank[bid], bid, f, t, moving, rf, rt))
                if chosen is None:
                    chosen = drain(float("inf"))
                if chosen is not None or timed_out:
                    break
                # nothing admissible: release the oldest tabu entry and retry
                if not tabu.evict_oldest():
                    break
            if chosen is None:
                break
            exact, bid, f, t, moving, res, rep = chosen
            for j in moving:
                st.assign[j] = t
            if f in st.loads:
                rest = st.loads[f] - moving
                if rest:
                    st.loads[f] = rest
                else:
                    del st.loads[f]
            st.loads[t] = st.loads.get(t, frozenset()) | moving
            st.res = res
            cur = st.total()
            tabu.add(Move(bid, t, f), it + 1 + tenure)
            it += 1
            if cur <= best + EPS:
                best, best_res, best_rep = cur, dict(res), rep
                accepted_at_best = it
            if telemetry is not None:
                telemetry.append((it, int(round((time.perf_counter() - t0) * 1000)), cur, best))
            if out_of_time():
                break
    finally:
        if pool:
            pool.shutdown()

    sol = _solution(instance, best_res, best_rep, validate=True)
    diag = dict(sol.diagnostics)
    diag["tabu"] = {"iterations": it, "best_iteration": accepted_at_best, "bundles": len(bundles),
                    "tenure": tenure}
    return Solution(sol.assignment, sol.routes, sol.placements, sol.total_mileage, sol.feasibility, diag)


def _solution(instance, res, rep, validate=False):
    assignment = {j: t for t, r in res.items() for j in r.route.shipments}
    return assemble(instance, assignment, [res[t].route for t in sorted(res)],
                    [res[t].placement for t in sorted(res)], rep, validate=validate)
