"""Per-truck route search with time windows and loading checks.

A trip visits each of its locations once; at a visit the truck first
unloads every shipment destined there, then loads every shipment sourced
there. A tour is yard -> trip -> trip -> ... -> yard; the search below
builds single-trip tours, longer tours come from merging (see postopt).
"""
from __future__ import annotations

from dataclasses import dataclass

from .loading import build_columns, pack
from .model import EPS, MAX_TOUR_MINUTES, Instance, Placement, Route, Stop, Truck
from .params import SolverParams


@dataclass(frozen=True)
class RouteResult:
    feasible: bool
    route: Route | None = None
    placement: Placement | None = None
    mileage: float = float("inf")  # cost_per_distance * distance
    truncated: bool = False
    reason: str = ""


def service_window(loc, pickups, deliveries, instance):
    """(earliest service start, latest service end) imposed by the location
    window and by the windows of the shipments handled there."""
    lo, hi = loc.window
    ships = instance.shipment
    for j in pickups:
        w = ships[j].pickup_window
        lo, hi = max(lo, w.open), min(hi, w.close)
    for j in deliveries:
        w = ships[j].delivery_window
        lo, hi = max(lo, w.open), min(hi, w.close)
    return lo, hi


def propagate_times(stops, truck: Truck, instance: Instance):
    """Forward time simulation from yard departure at minute 0.

    ``stops`` is a sequence of Stop (times ignored) starting and ending at
    the yard. Returns the list of timed stops, or None if a working window or
    shipment window cannot be met. Dock queues are not modelled here.
    """
    out = [Stop(stops[0].location, stops[0].pickups, stops[0].deliveries, 0, 0, 0)]
    t = 0
    for k in range(1, len(stops)):
        st = stops[k]
        arrival = t + instance.time(stops[k - 1].location, st.location)
        loc = instance.loc[st.location]
        if k == len(stops) - 1:
            if not (loc.window.open <= arrival <= loc.window.close) or arrival > MAX_TOUR_MINUTES:
                return None
            out.append(Stop(st.location, st.pickups, st.deliveries, arrival, 0, arrival))
            break
        lo, hi = service_window(loc, st.pickups, st.deliveries, instance)
        start = max(arrival, lo)
        end = start + loc.handling_time
        if end > hi:
            return None
        out.append(Stop(st.location, st.pickups, st.deliveries, arrival, end - arrival, end))
        t = end
    return out


def route_columns(route: Route, instance: Instance):
    """Columns of every carried shipment with their (pickup, delivery) stop indices."""
    cols, visits = [], []
    pi, di = route.pickup_index, route.delivery_index
    for j in sorted(pi):
        for c in build_columns(instance.shipment[j], instance.pallet):
            cols.append(c)
            visits.append((pi[j], di[j]))
    return cols, visits


def truck_admissible(truck: Truck, shipments, instance: Instance) -> str:
    """Checks independent of visit order; returns a reason or ''."""
    ships = [instance.shipment[j] for j in shipments]
    if len({instance.loc[s.source].city for s in ships}) > 1:
        return "side-constraints"
    for s in ships:
        for lid in (s.source, s.destination):
            if not instance.loc[lid].admits(truck.length_class):
                return "side-constraints"
    ids = set(shipments)
    for h in instance.hub_links:
        if h.upstream in ids and h.downstream in ids:
            return "hub"
    return ""


def _area(instance, j):
    return sum(c.area for c in build_columns(instance.shipment[j], instance.pallet))


def build_tour(truck: Truck, trips, instance: Instance, params: SolverParams = SolverParams()):
    """Time and pack a tour given as a list of trips, each a list of
    (location, pickups, deliveries). Returns a RouteResult."""
    yard = truck.home_yard
    stops = [Stop(yard)]
    starts = []
    for trip in trips:
        starts.append(len(stops))
        stops.extend(Stop(l, p, d) for (l, p, d) in trip)
    stops.append(Stop(yard))
    timed = propagate_times(stops, truck, instance)
    if timed is None:
        return RouteResult(False, reason="time-window")
    route = Route(truck.id, tuple(timed), tuple(starts))
    cols, visits = route_columns(route, instance)
    # area filter on every onboard set
    cap = params.pack.threshold * truck.area + EPS
    onboard = 0.0
    area = {}
    for st in route.stops:
        for j in st.deliveries:
            onboard -= area[j]
        for j in st.pickups:
            area[j] = _area(instance, j)
            onboard += area[j]
        if onboard > cap:
            return RouteResult(False, reason="prejudge")
    res = pack(cols, truck, visits, params.pack, explain=False)
    if not res.feasible:
        return RouteResult(False, reason=res.reject_reason)
    dist = sum(instance.dist(a.location, b.location) for a, b in zip(route.stops, route.stops[1:]))
    return RouteResult(True, route, res.placement, truck.cost_per_distance * dist)


_CACHE: dict = {}
_CACHE_OWNER = [None]


def clear_route_cache():
    _CACHE.clear()
    _CACHE_OWNER[0] = None


def truck_signature(truck: Truck):
    return (truck.surface_width, truck.surface_length, truck.length_class,
            truck.cost_per_distance, truck.home_yard)


def solve_route(truck: Truck, shipments, instance: Instance,
                params: SolverParams = SolverParams()) -> RouteResult:
    """Cheapest single-trip tour serving ``shipments`` on ``truck``.

    Depth-first search over location orders with time-window, precedence,
    area and mileage-bound pruning; packing is checked at the leaves.
    """
    shipments = frozenset(shipments)
    if not shipments:
        return RouteResult(True, Route(truck.id, (Stop(truck.home_yard), Stop(truck.home_yard)), ()),
                           Placement(truck.id, ()), 0.0)
    if _CACHE_OWNER[0] is not instance:
        _CACHE.clear()
        _CACHE_OWNER[0] = instance
    key = (truck_signature(truck), shipments, params.pack, params.route_node_budget)
    hit = _CACHE.get(key)
    if hit is None:
        hit = _search(truck, shipments, instance, params)
        if len(_CACHE) > 500_000:
            _CACHE.clear()
        _CACHE[key] = hit
    return _rebind(hit, truck)


def _rebind(res: RouteResult, truck: Truck) -> RouteResult:
    if not res.feasible or res.route.truck == truck.id:
        return res
    route = Route(truck.id, res.route.stops, res.route.trip_starts)
    placement = Placement(truck.id, res.placement.items)
    return RouteResult(True, route, placement, res.mileage, res.truncated, res.reason)


def _search(truck: Truck, shipments: frozenset, instance: Instance, params: SolverParams):
    why = truck_admissible(truck, shipments, instance)
    if why:
        return RouteResult(False, reason=why)
    ships = instance.shipment
    idx = instance.index
    D, T = instance.D, instance.T
    yard = truck.home_yard
    y = idx[yard]
    locs = sorted({ships[j].source for j in shipments} | {ships[j].destination for j in shipments})
    n = len(locs)
    li = [idx[l] for l in locs]
    picks = [frozenset(j for j in shipments if ships[j].source == l) for l in locs]
    drops = [frozenset(j for j in shipments if ships[j].destination == l) for l in locs]
    pos = {l: i for i, l in enumerate(locs)}
    # location indices that must precede each location
    need = [0] * n
    for j in shipments:
        need[pos[ships[j].destination]] |= 1 << pos[ships[j].source]
    loc_objs = [instance.loc[l] for l in locs]
    firsts = [i for i in range(n) if loc_objs[i].must_be_first]
    lasts = [i for i in range(n) if loc_objs[i].must_be_last]
    if len(firsts) > 1 or len(lasts) > 1:
        return RouteResult(False, reason="side-constraints")
    windows = [service_window(loc_objs[i], picks[i], drops[i], instance) for i in range(n)]
    handling = [loc_objs[i].handling_time for i in range(n)]
    yard_close = min(instance.loc[yard].window.close, MAX_TOUR_MINUTES)
    yard_open = instance.loc[yard].window.open
    areas = {j: _area(instance, j) for j in shipments}
    delta = [sum(areas[j] for j in picks[i]) - sum(areas[j] for j in drops[i]) for i in range(n)]
    cap = params.pack.threshold * truck.area + EPS
    full = (1 << n) - 1
    budget = params.route_node_budget
    cost = truck.cost_per_distance

    best = [float("inf"), None, None]  # distance, order, pack result
    nodes = [0]
    truncated = [False]
    order = []

    def bound(mask, cur):
        rest = [i for i in range(n) if not (mask >> i) & 1]
        if not rest:
            return D[cur][y]
        total = 0.0
        for r in rest:
            m = D[cur][li[r]]
            for q in rest:
                if q != r and D[li[q]][li[r]] < m:
                    m = D[li[q]][li[r]]
            total += m
        ret = min(D[li[q]][y] for q in rest)
        return total + ret

    def leaf(dist, t):
        back = t + T[li[order[-1]]][y]
        if back > yard_close or back < yard_open:
            return
        seq = tuple(locs[i] for i in order)
        if dist > best[0] + EPS:
            return
        if abs(dist - best[0]) <= EPS and best[1] is not None and seq >= best[1]:
            return
        trip = [(locs[i], picks[i], drops[i]) for i in order]
        res = build_tour(truck, [trip], instance, params)
        if res.feasible:
            best[0], best[1], best[2] = dist, seq, res

    def dfs(mask, cur, dist, t, onboard):
        if nodes[0] >= budget:
            truncated[0] = True
            return
        nodes[0] += 1
        if mask == full:
            leaf(dist + D[cur][y], t)
            return
        if dist + bound(mask, cur) > best[0] + EPS:
            return
        remaining = n - bin(mask).count("1")
        kids = []
        for i in range(n):
            if (mask >> i) & 1 or (need[i] & mask) != need[i]:
                continue
            if firsts and mask == 0 and i != firsts[0]:
                continue
            if lasts and i == lasts[0] and remaining > 1:
                continue
            kids.append((D[cur][li[i]], locs[i], i))
        kids.sort()
        for d, _, i in kids:
            arrival = t + T[cur][li[i]]
            lo, hi = windows[i]
            start = max(arrival, lo)
            end = start + handling[i]
            if end > hi:
                continue
            ob = onboard + delta[i]
            if ob > cap:
                continue
            order.append(i)
            dfs(mask | (1 << i), li[i], dist + d, end, ob)
            order.pop()

    dfs(0, y, 0.0, 0, 0.0)
    if best[2] is None:
        return RouteResult(False, truncated=truncated[0],
                           reason="budget" if truncated[0] else "no-feasible-order")
    r = best[2]
    return RouteResult(True, r.route, r.placement, r.mileage, truncated[0])
