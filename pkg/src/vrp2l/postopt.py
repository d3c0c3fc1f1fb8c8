"""Route-level improvements after the search: move tours to smaller or
cheaper idle trucks, and chain trips of two trucks into one multi-trip tour
ordered by an exact Held-Karp dynamic program."""
from __future__ import annotations

import itertools

from . import kernels
from .evaluate import assemble, global_check
from .model import EPS, Instance, Solution
from .params import SolverParams
from .routing import build_tour, solve_route, truck_admissible, truck_signature


def _connections(subroutes, yard, travel):
    start = [travel.dist(yard, s[0]) for s in subroutes]
    end = [travel.dist(s[-1], yard) for s in subroutes]
    conn = [[0.0 if a == b else travel.dist(sa[-1], sb[0]) for b, sb in enumerate(subroutes)]
            for a, sa in enumerate(subroutes)]
    return start, end, conn


def order_cost(order, subroutes, yard, travel) -> float:
    """Connection distance of visiting ``subroutes`` in ``order`` from and back to ``yard``."""
    if not order:
        return 0.0
    start, end, conn = _connections(subroutes, yard, travel)
    c = start[order[0]]
    for a, b in zip(order, order[1:]):
        c += conn[a][b]
    return c + end[order[-1]]


def sequence_subroutes(subroutes, yard, travel, cap: int = 15, diagnostics: dict | None = None) -> list:
    """Order of sub-routes (each a non-empty sequence of location ids) that
    minimises the yard -> first, last -> next first, ..., last -> yard
    connection distance. Exact up to ``cap`` sub-routes, otherwise
    nearest-neighbour plus pairwise exchange (flagged in ``diagnostics``)."""
    n = len(subroutes)
    if n <= 1:
        return list(range(n))
    start, end, conn = _connections(subroutes, yard, travel)
    if n <= cap:
        _, order = kernels.held_karp(conn, start, end)
        return list(order)
    if diagnostics is not None:
        diagnostics["sequence_fallback"] = True
    left = set(range(n))
    order = [min(left, key=lambda a: (start[a], a))]
    left.discard(order[0])
    while left:
        nxt = min(left, key=lambda b: (conn[order[-1]][b], b))
        order.append(nxt)
        left.discard(nxt)

    def cost(o):
        c = start[o[0]] + end[o[-1]]
        return c + sum(conn[a][b] for a, b in zip(o, o[1:]))

    best = cost(order)
    improved = True
    while improved:
        improved = False
        for i, j in itertools.combinations(range(n), 2):
            o = order[:]
            o[i], o[j] = o[j], o[i]
            c = cost(o)
            if c < best - EPS:
                order, best, improved = o, c, True
    return order


def _trips_of(route):
    return [tuple((st.location, st.pickups, st.deliveries) for st in route.stops[a:b])
            for a, b in route.trips()]


class _Plan:
    def __init__(self, solution: Solution, instance: Instance, params: SolverParams):
        self.inst = instance
        self.params = params
        self.trips = {r.truck: _trips_of(r) for r in solution.routes}
        self.res = {}
        for r in solution.routes:
            res = build_tour(instance.truck[r.truck], self.trips[r.truck], instance, params)
            if not res.feasible:
                raise ValueError(f"route of {r.truck} is not feasible on its own")
            self.res[r.truck] = res

    def total(self, res=None):
        res = self.res if res is None else res
        return sum(res[t].mileage for t in sorted(res))

    def gtw_ok(self, res):
        return global_check([res[t].route for t in sorted(res)], self.inst).feasible

    def ordered(self, truck, trips):
        order = sequence_subroutes([[s[0] for s in tr] for tr in trips], truck.home_yard,
                                   self.inst.travel, self.params.held_karp_cap)
        return [trips[i] for i in order]

    def orders(self, truck, trips, full_up_to=4):
        """Trip orders worth timing: all of them for a few trips, otherwise
        the Held-Karp order, the given one and its reverse."""
        if len(trips) <= full_up_to:
            return [list(p) for p in itertools.permutations(trips)]
        return [self.ordered(truck, trips), list(trips), list(reversed(trips))]

    def splits(self, truck, ships):
        """Alternative sub-route sets for ``ships`` on ``truck``: one single
        trip, one trip per source, one trip per destination. Each trip is
        the route search optimum for its group; infeasible sets are skipped."""
        out, seen = [], set()
        for key in (None, "source", "destination"):
            groups = {}
            for j in ships:
                groups.setdefault(getattr(self.inst.shipment[j], key) if key else "", set()).add(j)
            sig = frozenset(frozenset(g) for g in groups.values())
            if sig in seen:
                continue
            seen.add(sig)
            trips = []
            for g in sorted(groups):
                r = solve_route(truck, frozenset(groups[g]), self.inst, self.params)
                if not r.feasible:
                    trips = None
                    break
                trips.append(tuple((st.location, st.pickups, st.deliveries) for st in r.route.stops[1:-1]))
            if trips:
                out.append(trips)
        return out

    def shipments(self, t):
        return frozenset(j for tr in self.trips[t] for (_, p, _) in tr for j in p)


def downsize_trucks(solution: Solution, instance: Instance, params: SolverParams = SolverParams()) -> Solution:
    """Move tours onto idle trucks that are smaller (or as large but cheaper
    per distance) whenever the total cost strictly drops."""
    plan = _Plan(solution, instance, params)
    changed = _downsize(plan)
    return _finish(plan, solution, {"downsized": changed}) if changed else solution


def _downsize(plan: _Plan) -> int:
    inst, params = plan.inst, plan.params
    changed = 0
    progress = True
    while progress:
        progress = False
        for tid in sorted(plan.res):
            truck = inst.truck[tid]
            reps = {}
            for t in sorted(inst.trucks, key=lambda t: t.id):
                if t.id in plan.res:
                    continue
                if t.area < truck.area - EPS or (abs(t.area - truck.area) <= EPS
                                                and t.cost_per_distance < truck.cost_per_distance):
                    reps.setdefault(truck_signature(t), t)
            ships = plan.shipments(tid)
            options = []
            for t in reps.values():
                if len(plan.trips[tid]) == 1:
                    r = solve_route(t, ships, inst, params)
                    trips = [tuple((st.location, st.pickups, st.deliveries)
                                   for st in r.route.stops[1:-1])] if r.feasible else None
                else:
                    r, trips = None, None
                    for cand in plan.orders(t, plan.trips[tid]):
                        rc = build_tour(t, cand, inst, params)
                        if rc.feasible and (r is None or rc.mileage < r.mileage - EPS):
                            r, trips = rc, cand
                    if r is None:
                        continue
                if r.feasible and r.mileage < plan.res[tid].mileage - EPS:
                    options.append((r.mileage, t.id, r, trips))
            for mileage, new_id, r, trips in sorted(options, key=lambda o: o[:2]):
                res = dict(plan.res)
                del res[tid]
                res[new_id] = r
                if plan.total(res) < plan.total() - EPS and plan.gtw_ok(res):
                    plan.res = res
                    plan.trips[new_id] = trips
                    del plan.trips[tid]
                    changed += 1
                    progress = True
                    break
    return changed


def merge_routes(solution: Solution, instance: Instance, params: SolverParams = SolverParams()) -> Solution:
    """Chain the trips of two trucks into one tour on either of them while
    some merge keeps all constraints and does not raise the total cost."""
    plan = _Plan(solution, instance, params)
    changed = _merge(plan)
    return _finish(plan, solution, {"merged": changed}) if changed else solution


def _merge(plan: _Plan) -> int:
    inst, params = plan.inst, plan.params
    merged = 0
    while True:
        total = plan.total()
        options = []
        for a, b in itertools.combinations(sorted(plan.res), 2):
            ships = plan.shipments(a) | plan.shipments(b)
            for host, other in ((a, b), (b, a)):
                truck = inst.truck[host]
                if truck_admissible(truck, ships, inst):
                    continue
                orders = plan.orders(truck, plan.trips[host] + plan.trips[other])
                for split in plan.splits(truck, ships):
                    orders += plan.orders(truck, split)
                seen = set()
                for trips in orders:
                    key = tuple(trips)
                    if key in seen:
                        continue
                    seen.add(key)
                    locs = [truck.home_yard] + [s[0] for tr in trips for s in tr] + [truck.home_yard]
                    dist = sum(inst.dist(x, y) for x, y in zip(locs, locs[1:]))
                    new_total = total - plan.res[a].mileage - plan.res[b].mileage \
                        + truck.cost_per_distance * dist
                    if new_total <= total + EPS:
                        options.append((new_total, host, other, trips))
        options.sort(key=lambda o: (o[0], o[1], o[2]))
        done = False
        for new_total, host, other, trips in options:
            r = build_tour(inst.truck[host], trips, inst, params)
            if not r.feasible:
                continue
            res = dict(plan.res)
            del res[other]
            res[host] = r
            if plan.total(res) <= total + EPS and plan.gtw_ok(res):
                plan.res = res
                plan.trips[host] = list(trips)
                del plan.trips[other]
                merged += 1
                done = True
                break
        if not done:
            return merged


def post_optimize(solution: Solution, instance: Instance, params: SolverParams = SolverParams()) -> Solution:
    """downsize -> merge -> downsize, repeated until a full pass changes
    nothing; the result is therefore a fixpoint of this function."""
    if not solution.feasible:
        raise ValueError("post-optimization needs a feasible solution")
    if not solution.routes:
        return solution
    plan = _Plan(solution, instance, params)
    stats = {"downsized": 0, "merged": 0, "passes": 0}
    while True:
        stats["passes"] += 1
        d1 = _downsize(plan)
        m = _merge(plan)
        d2 = _downsize(plan)
        stats["downsized"] += d1 + d2
        stats["merged"] += m
        if not (d1 or m or d2):
            break
    if stats["downsized"] == 0 and stats["merged"] == 0:
        return solution
    return _finish(plan, solution, stats)


def _finish(plan: _Plan, solution: Solution, stats: dict) -> Solution:
    res = plan.res
    assignment = {j: t for t in res for j in res[t].route.shipments}
    diag = dict(solution.diagnostics)
    diag["postopt"] = dict(stats, trucks_before=len(solution.routes), trucks_after=len(res))
    sol = assemble(plan.inst, assignment, [res[t].route for t in sorted(res)],
                   [res[t].placement for t in sorted(res)], diagnostics=diag)
    return sol
