"""Brute-force reference solvers for tiny inputs.

Nothing here reuses the search code of the main solver: placements are
enumerated on a complete coordinate lattice, tours by plain permutation,
assignments by full enumeration.

Lattice completeness: let ``S`` be the set of non-negative integer
combinations of the column widths that are ``<= W``. Mapping every
coordinate ``x`` to ``max{s in S : s <= x}`` is monotone and, because ``S``
is closed under adding a width, keeps ``x1 + w1 <= x2`` true after the map.
So disjoint intervals stay disjoint, overlaps can only disappear, and the
front/back order of overlapping columns is kept. Applying it to both axes
turns any valid placement into a valid placement on the lattice.
"""
from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass

from .loading import build_columns
from .model import (EPS, FAMILIES, MAX_TOUR_MINUTES, Instance, ModelError, Placement, PlacedItem,
                    Route, Solution, Stop, _side_violations, families_ok, total_mileage,
                    validate_solution)
from .schedule import simulate_queues


class OracleLimitError(ModelError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_shipments: int = 6
    max_trucks: int = 3
    max_columns: int = 5


# ---------------------------------------------------------------- placement

def _lattice(sizes, cap):
    vals = {0.0}
    frontier = [0.0]
    sizes = sorted(set(sizes))
    while frontier:
        nxt = []
        for x in frontier:
            for s in sizes:
                y = round(x + s, 9)
                if y <= cap + EPS and y not in vals:
                    vals.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(vals)


def _clear_path(mover, others):
    """``mover`` = (u, v, w, l) can slide out of the rear door past ``others``."""
    u, v, w, l = mover
    for (u2, v2, w2, l2) in others:
        if u < u2 + w2 - EPS and u2 < u + w - EPS and v2 + l2 <= v + EPS:
            return False
    return True


def extraction_ok(rects, visits) -> bool:
    """Replay the route stop by stop: at each stop, columns leaving are pulled
    out rear-first, then new columns are pushed in nose-first; each move must
    have a clear straight path to the door among the columns aboard."""
    stops = sorted({k for pd in visits for k in pd})
    aboard = set()
    for k in stops:
        leaving = [i for i in aboard if visits[i][1] == k]
        staying = [i for i in aboard if visits[i][1] != k]
        for i in leaving:
            if not _clear_path(rects[i], [rects[j] for j in staying]):
                return False
        aboard = set(staying)
        for i in (i for i, (p, _) in enumerate(visits) if p == k):
            if not _clear_path(rects[i], [rects[j] for j in aboard]):
                return False
        aboard |= {i for i, (p, _) in enumerate(visits) if p == k}
    return True


def _blocks(mover, mv, other, ov) -> bool:
    """``other`` stands between ``mover`` and the door while ``mover`` is
    pulled out at its delivery or pushed in at its pickup."""
    p, d = mv
    po, do = ov
    if not (po < d < do or po < p < do):
        return False
    u, v, w, _ = mover
    u2, v2, w2, l2 = other
    return u < u2 + w2 - EPS and u2 < u + w - EPS and v2 + l2 <= v + EPS


def exact_pack(columns, truck, visit_order, limits: OracleLimits = OracleLimits(),
               return_placement: bool = False):
    """Exhaustive placement search on the complete lattice (see module doc)."""
    columns = list(columns)
    if len(columns) > limits.max_columns:
        raise OracleLimitError(f"{len(columns)} columns exceed the oracle limit {limits.max_columns}")
    W, L = truck.surface_width, truck.surface_length
    n = len(columns)
    visits = [tuple(pd) for pd in visit_order]
    # largest first; identical columns adjacent so their positions can be ordered
    perm = sorted(range(n), key=lambda i: (-columns[i].width * columns[i].length,
                                           columns[i].width, columns[i].length, visits[i]))
    cols = [columns[i] for i in perm]
    vis = [visits[i] for i in perm]
    xs = _lattice([c.width for c in cols], W)
    ys = _lattice([c.length for c in cols], L)
    together = [[vis[a][0] < vis[b][1] and vis[b][0] < vis[a][1] for b in range(n)]
                for a in range(n)]
    twin = [a > 0 and (cols[a].width, cols[a].length, vis[a]) ==
            (cols[a - 1].width, cols[a - 1].length, vis[a - 1]) for a in range(n)]
    spots = [[(x, y) for x in xs for y in ys
              if x + c.width <= W + EPS and y + c.length <= L + EPS] for c in cols]
    moments = sorted({p for p, _ in vis})
    aboard_at = [[i for i in range(n) if vis[i][0] <= m < vis[i][1]] for m in moments]
    surface = W * L
    rects = [None] * n

    def area_ok(a):
        # columns aboard together at some moment must fit by area
        for group in aboard_at:
            if sum(cols[i].width * cols[i].length for i in group) > surface + EPS:
                return False
        return True

    def disjoint(a, b):
        if not together[a][b]:
            return True
        ua, va, wa, la = rects[a]
        ub, vb, wb, lb = rects[b]
        return not (ua < ub + wb - EPS and ub < ua + wa - EPS
                    and va < vb + lb - EPS and vb < va + la - EPS)

    def rec(a):
        if a == n:
            return extraction_ok(rects, vis)
        for (x, y) in spots[a]:
            if twin[a] and (x, y) < rects[a - 1][:2]:
                continue
            rects[a] = (x, y, cols[a].width, cols[a].length)
            # pairwise form of the extraction replay; the full replay runs once at the end
            if all(disjoint(a, b) and not _blocks(rects[a], vis[a], rects[b], vis[b])
                   and not _blocks(rects[b], vis[b], rects[a], vis[a]) for b in range(a)):
                if rec(a + 1):
                    return True
        rects[a] = None
        return False

    found = area_ok(0) and rec(0)
    if not return_placement:
        return found
    if not found:
        return None
    where = {perm[k]: rects[k] for k in range(n)}
    return Placement(truck.id, tuple(PlacedItem(c, where[i][0], where[i][1])
                                     for i, c in enumerate(columns)))


# ---------------------------------------------------------------- full solve

def _trip_orders(ships, instance):
    """All visit sequences of one trip: each location once, sources before
    destinations, first/last requests honoured. Items are
    (location, pickups, deliveries)."""
    S = [instance.shipment[j] for j in ships]
    locs = sorted({s.source for s in S} | {s.destination for s in S})
    out = []
    for perm in itertools.permutations(locs):
        pos = {l: k for k, l in enumerate(perm)}
        if any(pos[s.source] >= pos[s.destination] for s in S):
            continue
        if any(instance.loc[l].must_be_first and k != 0 for k, l in enumerate(perm)):
            continue
        if any(instance.loc[l].must_be_last and k != len(perm) - 1 for k, l in enumerate(perm)):
            continue
        out.append(tuple((l, frozenset(s.id for s in S if s.source == l),
                          frozenset(s.id for s in S if s.destination == l)) for l in perm))
    return out


def _subsets(items):
    items = sorted(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


class _Tours:
    """Feasible single-truck tours for one shipment set in order of cost.

    Tours are produced lazily by a uniform-cost search whose nodes are
    partial tours (a prefix of whole trips, timed without queues); a node
    is expanded by appending any trip over any non-empty subset of the
    shipments not yet served, and completed by driving back to the yard.
    Costs only grow along a branch, so completed tours leave the queue
    cheapest first. Packing is checked when a tour is consumed.
    """

    def __init__(self, truck, ships, instance, limits, stats, orders):
        self.truck, self.inst, self.limits, self.stats = truck, instance, limits, stats
        self.ships = frozenset(ships)
        self.ok = []  # (cost, route, placement)
        self.heap = []
        self.orders = orders  # trip orders per shipment block, shared across trucks
        if not ships:
            self.ok.append((0.0, None, None))
            return
        S = [instance.shipment[j] for j in ships]
        if len({instance.loc[s.source].city for s in S}) > 1 or any(
                not instance.loc[l].admits(truck.length_class) for s in S for l in (s.source, s.destination)):
            stats["side-constraints"] += 1
            return
        self.cols = {j: build_columns(instance.shipment[j], instance.pallet) for j in ships}
        yard = truck.home_yard
        # (cost, key, done, time, location, remaining, stops, trip_starts)
        heapq.heappush(self.heap, (0.0, (), False, 0, yard, self.ships, (), ()))

    def _trip(self, block):
        key = frozenset(block)
        if key not in self.orders:
            self.orders[key] = _trip_orders(block, self.inst)
        return self.orders[key]

    def _extend(self, t, prev, trip):
        """Timed stops of ``trip`` started at ``t`` from ``prev``; None if a window fails."""
        inst = self.inst
        out = []
        for (l, p, d) in trip:
            loc = inst.loc[l]
            arrival = t + inst.time(prev, l)
            lo, hi = loc.window
            for j in p:
                w = inst.shipment[j].pickup_window
                lo, hi = max(lo, w.open), min(hi, w.close)
            for j in d:
                w = inst.shipment[j].delivery_window
                lo, hi = max(lo, w.open), min(hi, w.close)
            end = max(arrival, lo) + loc.handling_time
            if end > hi:
                return None
            out.append((l, p, d, arrival, end))
            t, prev = end, l
        return out

    def _next_tour(self):
        inst, yard = self.inst, self.truck.home_yard
        rate = self.truck.cost_per_distance
        while self.heap:
            cost, key, done, t, cur, left, stops, starts = heapq.heappop(self.heap)
            if done:
                return cost, stops, starts
            if not left:
                arrival = t + inst.time(cur, yard)
                w = inst.loc[yard].window
                if w.open <= arrival <= w.close and arrival <= MAX_TOUR_MINUTES:
                    c = cost + rate * inst.dist(cur, yard)
                    heapq.heappush(self.heap, (round(c, 9), key, True, arrival, yard, left,
                                               stops + ((yard, frozenset(), frozenset(), arrival, arrival),),
                                               starts))
                else:
                    self.stats["A1"] += 1
                continue
            for block in _subsets(left):
                for trip in self._trip(block):
                    ext = self._extend(t, cur, trip)
                    if ext is None:
                        self.stats["A1"] += 1
                        continue
                    ids = [cur] + [x[0] for x in trip]
                    c = cost + rate * sum(inst.dist(a, b) for a, b in zip(ids, ids[1:]))
                    heapq.heappush(self.heap, (round(c, 9), key + ((len(stops) + 1, tuple((x[0], tuple(sorted(x[1]))) for x in trip)),), False,
                                               ext[-1][4], ext[-1][0], left - frozenset(block),
                                               stops + tuple(ext), starts + (len(stops) + 1,)))
        return None

    def get(self, i):
        while len(self.ok) <= i:
            nxt = self._next_tour()
            if nxt is None:
                break
            cost, stops, starts = nxt
            yard = self.truck.home_yard
            route = Route(self.truck.id,
                          (Stop(yard),) + tuple(Stop(l, p, d, a, e - a, e) for (l, p, d, a, e) in stops),
                          starts)
            if _side_violations(self.truck, self.ships, route, self.inst):
                self.stats["side-constraints"] += 1
                continue
            cols, visits = [], []
            pi, di = route.pickup_index, route.delivery_index
            for j in sorted(pi):
                for c in self.cols[j]:
                    cols.append(c)
                    visits.append((pi[j], di[j]))
            placement = exact_pack(cols, self.truck, visits, self.limits, return_placement=True)
            if placement is None:
                self.stats["B2"] += 1
                continue
            self.ok.append((cost, route, placement))
        return self.ok[i] if i < len(self.ok) else None


def exact_solve(instance: Instance, limits: OracleLimits = OracleLimits()) -> Solution:
    """Minimum-mileage feasible solution by complete enumeration.

    Every assignment of shipments to trucks is expanded into every tour of
    every truck (ordered trips, every visit order) and every placement on
    the complete lattice; combinations are examined in order of total cost
    and the first one that survives the dock-queue timing and the full
    validator is optimal. When nothing survives, the returned Solution has
    no routes, ``feasible`` is False and the families that rejected
    candidates are marked False.
    """
    n, m = len(instance.shipments), len(instance.trucks)
    if n > limits.max_shipments:
        raise OracleLimitError(f"{n} shipments exceed the oracle limit {limits.max_shipments}")
    if m > limits.max_trucks:
        raise OracleLimitError(f"{m} trucks exceed the oracle limit {limits.max_trucks}")
    ncols = sum(len(build_columns(s, instance.pallet)) for s in instance.shipments)
    if ncols > limits.max_columns:
        raise OracleLimitError(f"{ncols} columns exceed the oracle limit {limits.max_columns}")

    trucks = sorted(instance.trucks, key=lambda t: t.id)
    ships = sorted(s.id for s in instance.shipments)
    stats = Counter()
    tours = {}
    orders = {}

    def tours_of(k, subset):
        key = (k, subset)
        if key not in tours:
            tours[key] = _Tours(trucks[k], subset, instance, limits, stats, orders)
        return tours[key]

    heap = []
    for combo in itertools.product(range(m), repeat=n):
        subsets = tuple(frozenset(j for j, k in zip(ships, combo) if k == t) for t in range(m))
        lists = [tours_of(t, subsets[t]) for t in range(m)]
        firsts = [tl.get(0) for tl in lists]
        if any(f is None for f in firsts):
            continue
        cost = sum(f[0] for f in firsts)
        heapq.heappush(heap, (round(cost, 9), combo, (0,) * m, 0))

    examined = 0
    while heap:
        cost, combo, idx, last = heapq.heappop(heap)
        subsets = tuple(frozenset(j for j, k in zip(ships, combo) if k == t) for t in range(m))
        lists = [tours_of(t, subsets[t]) for t in range(m)]
        picked = [lists[t].get(idx[t]) for t in range(m)]
        # successors: bump one coordinate at or after the last bumped one
        for t in range(last, m):
            nxt = lists[t].get(idx[t] + 1)
            if nxt is None:
                continue
            c = cost - picked[t][0] + nxt[0]
            heapq.heappush(heap, (round(c, 9), combo, idx[:t] + (idx[t] + 1,) + idx[t + 1:], t))
        examined += 1
        routes = [p[1] for p in picked if p[1] is not None]
        rep = simulate_queues(routes, instance)
        if not rep.feasible:
            stats["A2"] += 1
            continue
        places = tuple(sorted((p[2] for p in picked if p[1] is not None), key=lambda p: p.truck))
        assign = {j: trucks[k].id for j, k in zip(ships, combo)}
        timed = tuple(sorted(rep.routes, key=lambda r: r.truck))
        sol = Solution(assign, timed, places, 0.0)
        sol = Solution(assign, timed, places, total_mileage(sol, instance))
        bad = validate_solution(sol, instance)
        if bad:
            for v in bad:
                stats[v.family] += 1
            continue
        return Solution(sol.assignment, sol.routes, sol.placements, sol.total_mileage, families_ok([]),
                        {"oracle": {"examined": examined, "rejections": dict(sorted(stats.items()))}})
    feas = {f: stats.get(f, 0) == 0 for f in FAMILIES}
    if all(feas.values()):
        feas["load"] = False
    return Solution({}, (), (), 0.0, feas,
                    {"oracle": {"examined": examined, "rejections": dict(sorted(stats.items())),
                                "verdict": "infeasible"}})
