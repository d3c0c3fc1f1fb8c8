"""Domain types, the mileage objective and whole-solution validation.

Time is integer minutes from midnight of the planning day. Distances and
surface coordinates are floats; geometric comparisons use ``EPS``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

HORIZON = 1440
MAX_TOUR_MINUTES = 2880
EPS = 1e-9

LOCATION_KINDS = ("supplier", "warehouse", "hub", "truck-yard")
FAMILIES = ("A1", "A2", "A3", "B1", "B2", "B3", "hub", "side-constraints", "load", "objective")


class ModelError(ValueError):
    """Raised when a domain object breaks one of its invariants."""


class TimeWindow(NamedTuple):
    open: int
    close: int

    def contains(self, start, end) -> bool:
        return self.open <= start and end <= self.close


def _window(w) -> TimeWindow:
    w = TimeWindow(int(w[0]), int(w[1]))
    if not w.open < w.close:
        raise ModelError(f"empty time window {tuple(w)}")
    return w


@dataclass(frozen=True)
class Location:
    id: str
    kind: str
    window: TimeWindow
    dock_count: int = 1
    handling_time: int = 0
    city: str = ""
    allowed_truck_lengths: frozenset | None = None
    max_visits: int | None = None
    must_be_first: bool = False
    must_be_last: bool = False
    coords: tuple | None = None

    def __post_init__(self):
        if self.kind not in LOCATION_KINDS:
            raise ModelError(f"location {self.id}: unknown kind {self.kind!r}")
        object.__setattr__(self, "window", _window(self.window))
        if self.dock_count < 1:
            raise ModelError(f"location {self.id}: dock_count must be >= 1")
        if self.handling_time < 0:
            raise ModelError(f"location {self.id}: negative handling time")
        if self.max_visits is not None and self.max_visits < 1:
            raise ModelError(f"location {self.id}: max_visits must be positive")
        if self.must_be_first and self.must_be_last:
            raise ModelError(f"location {self.id}: cannot be both first and last")
        if self.allowed_truck_lengths is not None:
            object.__setattr__(self, "allowed_truck_lengths", frozenset(self.allowed_truck_lengths))

    def admits(self, length_class: str) -> bool:
        return self.allowed_truck_lengths is None or length_class in self.allowed_truck_lengths


@dataclass(frozen=True)
class TravelMatrices:
    ids: tuple
    distance: tuple
    travel_time: tuple

    def __post_init__(self):
        n = len(self.ids)
        for name in ("distance", "travel_time"):
            m = getattr(self, name)
            if len(m) != n or any(len(row) != n for row in m):
                raise ModelError(f"{name} matrix must be {n}x{n}")
            for i, row in enumerate(m):
                if row[i] != 0:
                    raise ModelError(f"{name} matrix has non-zero diagonal at {self.ids[i]}")
                for x in row:
                    if not (x >= 0 and x != float("inf")):
                        raise ModelError(f"{name} matrix entries must be finite and non-negative")

    @cached_property
    def index(self) -> dict:
        return {lid: i for i, lid in enumerate(self.ids)}

    def dist(self, a: str, b: str) -> float:
        return self.distance[self.index[a]][self.index[b]]

    def time(self, a: str, b: str) -> int:
        return self.travel_time[self.index[a]][self.index[b]]


@dataclass(frozen=True)
class BinSpec:
    width: float
    length: float
    height: float = 1.0
    stack_limit: int = 1

    def __post_init__(self):
        if self.width <= 0 or self.length <= 0 or self.stack_limit < 1:
            raise ModelError(f"invalid bin spec {self}")


@dataclass(frozen=True)
class PalletSpec:
    width: float = 1.2
    length: float = 1.0
    stack_limit: int = 2

    def __post_init__(self):
        if self.width <= 0 or self.length <= 0 or self.stack_limit < 1:
            raise ModelError(f"invalid pallet spec {self}")


@dataclass(frozen=True)
class Shipment:
    id: str
    source: str
    destination: str
    bin_count: int
    bin: BinSpec
    needs_pallet: bool = False
    pickup_window: TimeWindow = TimeWindow(0, HORIZON)
    delivery_window: TimeWindow = TimeWindow(0, HORIZON)

    def __post_init__(self):
        if self.source == self.destination:
            raise ModelError(f"shipment {self.id}: source equals destination")
        if self.bin_count < 1:
            raise ModelError(f"shipment {self.id}: bin_count must be >= 1")
        object.__setattr__(self, "pickup_window", _window(self.pickup_window))
        object.__setattr__(self, "delivery_window", _window(self.delivery_window))


@dataclass(frozen=True)
class HubLink:
    upstream: str
    downstream: str


@dataclass(frozen=True)
class Truck:
    id: str
    model: str
    surface_width: float
    surface_length: float
    length_class: str
    cost_per_distance: float
    home_yard: str

    def __post_init__(self):
        if self.surface_width <= 0 or self.surface_length <= 0:
            raise ModelError(f"truck {self.id}: surface dimensions must be positive")
        if self.cost_per_distance <= 0:
            raise ModelError(f"truck {self.id}: cost_per_distance must be positive")

    @property
    def area(self) -> float:
        return self.surface_width * self.surface_length


@dataclass(frozen=True)
class Instance:
    locations: tuple
    travel: TravelMatrices
    trucks: tuple
    shipments: tuple
    hub_links: tuple = ()
    pallet: PalletSpec = PalletSpec()

    def __post_init__(self):
        for name in ("locations", "trucks", "shipments", "hub_links"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        ids = [loc.id for loc in self.locations]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate location id")
        if tuple(ids) != tuple(self.travel.ids):
            raise ModelError("travel matrix ids must follow the location order")
        locs = {loc.id: loc for loc in self.locations}
        for kind, items in (("truck", self.trucks), ("shipment", self.shipments)):
            seen = set()
            for it in items:
                if it.id in seen:
                    raise ModelError(f"duplicate {kind} id {it.id}")
                seen.add(it.id)
        for t in self.trucks:
            yard = locs.get(t.home_yard)
            if yard is None or yard.kind != "truck-yard":
                raise ModelError(f"truck {t.id}: home_yard {t.home_yard!r} is not a truck-yard")
        for s in self.shipments:
            src, dst = locs.get(s.source), locs.get(s.destination)
            if src is None:
                raise ModelError(f"shipment {s.id}: unknown source {s.source!r}")
            if dst is None:
                raise ModelError(f"shipment {s.id}: unknown destination {s.destination!r}")
            if src.kind not in ("supplier", "hub"):
                raise ModelError(f"shipment {s.id}: source must be a supplier or hub")
            if dst.kind not in ("warehouse", "hub"):
                raise ModelError(f"shipment {s.id}: destination must be a warehouse or hub")
        ships = {s.id: s for s in self.shipments}
        for h in self.hub_links:
            up, down = ships.get(h.upstream), ships.get(h.downstream)
            if up is None or down is None:
                raise ModelError(f"hub link {h}: unknown shipment")
            if locs[up.destination].kind != "hub" or down.source != up.destination:
                raise ModelError(f"hub link {h}: upstream must end at the hub the downstream leaves from")

    @cached_property
    def loc(self) -> dict:
        return {x.id: x for x in self.locations}

    @cached_property
    def truck(self) -> dict:
        return {x.id: x for x in self.trucks}

    @cached_property
    def shipment(self) -> dict:
        return {x.id: x for x in self.shipments}

    @cached_property
    def index(self) -> dict:
        return self.travel.index

    @cached_property
    def D(self) -> list:
        return [list(r) for r in self.travel.distance]

    @cached_property
    def T(self) -> list:
        return [list(r) for r in self.travel.travel_time]

    def dist(self, a: str, b: str) -> float:
        idx = self.index
        return self.D[idx[a]][idx[b]]

    def time(self, a: str, b: str) -> int:
        idx = self.index
        return self.T[idx[a]][idx[b]]


@dataclass(frozen=True)
class Stop:
    location: str
    pickups: frozenset = frozenset()
    deliveries: frozenset = frozenset()
    arrival: int = 0
    wait: int = 0  # dwell time: departure - arrival, handling included
    departure: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pickups", frozenset(self.pickups))
        object.__setattr__(self, "deliveries", frozenset(self.deliveries))


@dataclass(frozen=True)
class Route:
    truck: str
    stops: tuple
    trip_starts: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "stops", tuple(self.stops))
        object.__setattr__(self, "trip_starts", tuple(self.trip_starts))

    @property
    def n_stops(self) -> int:
        return len(self.stops) - 1

    @cached_property
    def pickup_index(self) -> dict:
        return {j: k for k, s in enumerate(self.stops) for j in s.pickups}

    @cached_property
    def delivery_index(self) -> dict:
        return {j: k for k, s in enumerate(self.stops) for j in s.deliveries}

    @property
    def shipments(self) -> frozenset:
        return frozenset(self.pickup_index)

    def trips(self) -> list:
        """Half-open stop index ranges, one per trip, yard stops excluded."""
        bounds = list(self.trip_starts) + [len(self.stops) - 1]
        return [(bounds[i], bounds[i + 1]) for i in range(len(self.trip_starts))]

    def location_ids(self) -> tuple:
        return tuple(s.location for s in self.stops)


@dataclass(frozen=True)
class Column:
    """A stack of identical bins, or a stack of loaded pallets."""

    shipment: str
    index: int
    width: float
    length: float
    layers: int
    on_pallet: bool = False
    # per stacked pallet: tuple of (u, v, layers) bin columns on that pallet
    pallet_loads: tuple = ()

    @property
    def bins(self) -> int:
        if not self.on_pallet:
            return self.layers
        return sum(lay for load in self.pallet_loads for (_, _, lay) in load)

    @property
    def area(self) -> float:
        return self.width * self.length


@dataclass(frozen=True)
class PlacedItem:
    column: Column
    u: float
    v: float


@dataclass(frozen=True)
class Placement:
    truck: str
    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Violation:
    family: str
    rule: str
    entities: tuple = ()


@dataclass(frozen=True)
class Solution:
    assignment: Mapping
    routes: tuple = ()
    placements: tuple = ()
    total_mileage: float = 0.0
    feasibility: Mapping = field(default_factory=dict)
    diagnostics: Mapping = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return bool(self.feasibility) and all(self.feasibility.values())

    def route_of(self, truck_id: str):
        for r in self.routes:
            if r.truck == truck_id:
                return r
        return None

    def placement_of(self, truck_id: str):
        for p in self.placements:
            if p.truck == truck_id:
                return p
        return None


def route_distance(route: Route, instance: Instance) -> float:
    idx, D = instance.index, instance.D
    try:
        ks = [idx[s.location] for s in route.stops]
    except KeyError as e:
        raise ModelError(f"unknown location id {e.args[0]!r} in route of {route.truck}") from None
    return sum(D[a][b] for a, b in zip(ks, ks[1:]))


def route_cost(route: Route, instance: Instance) -> float:
    return instance.truck[route.truck].cost_per_distance * route_distance(route, instance)


def total_mileage(solution: Solution, instance: Instance) -> float:
    """Sum over trucks of cost per distance times the distance driven."""
    total = 0.0
    for r in solution.routes:
        if r.truck not in instance.truck:
            raise ModelError(f"unknown truck {r.truck!r}")
        total += route_cost(r, instance)
    return total


def _trip_of(route: Route, k: int) -> int:
    for t, (a, b) in enumerate(route.trips()):
        if a <= k < b:
            return t
    return -1


def side_constraints_ok(truck: Truck, shipments: Iterable, route: Route, instance: Instance,
                        visit_counts: Mapping | None = None) -> bool:
    """Company rules: one source city per truck, dock truck-length
    restrictions, visit count caps and first/last stop requests.

    ``visit_counts`` holds visits per location over the whole solution; when
    omitted only this route's visits are counted.
    """
    return not _side_violations(truck, shipments, route, instance, visit_counts)


def _side_violations(truck, shipments, route, instance, visit_counts=None):
    out = []
    ships = [instance.shipment[j] for j in shipments]
    cities = {instance.loc[s.source].city for s in ships}
    if len(cities) > 1:
        out.append(Violation("side-constraints", "single source city per truck",
                             (truck.id,) + tuple(sorted(cities))))
    if visit_counts is None:
        visit_counts = defaultdict(int)
        for s in route.stops[1:-1]:
            visit_counts[s.location] += 1
    for k, s in enumerate(route.stops):
        loc = instance.loc[s.location]
        if loc.kind == "truck-yard":
            continue
        if not loc.admits(truck.length_class):
            out.append(Violation("side-constraints", "dock admits truck length",
                                 (truck.id, loc.id)))
        if loc.max_visits is not None and visit_counts.get(loc.id, 0) > loc.max_visits:
            out.append(Violation("side-constraints", "max visits", (loc.id,)))
    for a, b in route.trips():
        for k in range(a, b):
            loc = instance.loc[route.stops[k].location]
            if loc.must_be_first and k != a:
                out.append(Violation("side-constraints", "must be first", (truck.id, loc.id)))
            if loc.must_be_last and k != b - 1:
                out.append(Violation("side-constraints", "must be last", (truck.id, loc.id)))
    return out


def service_start(stop: Stop, instance: Instance) -> int:
    return stop.departure - instance.loc[stop.location].handling_time


def validate_solution(solution: Solution, instance: Instance) -> list:
    """Check every constraint family and report one Violation per breach.

    Never raises for infeasible content; an empty list means feasible.
    """
    from .loading import check_sequence, pallet_arrangement_ok, rects_overlap

    out: list = []
    assign = dict(solution.assignment)
    routes = {}
    for r in solution.routes:
        if r.truck in routes:
            out.append(Violation("load", "one route per truck", (r.truck,)))
        routes[r.truck] = r
    placements = {p.truck: p for p in solution.placements}

    # shipments must be loaded
    for s in instance.shipments:
        t = assign.get(s.id)
        if t is None or t not in instance.truck:
            out.append(Violation("load", "sum_i x_ij = 1", (s.id,)))
            continue
        r = routes.get(t)
        if r is None or s.id not in r.pickup_index or s.id not in r.delivery_index:
            out.append(Violation("load", "shipment carried by its truck", (s.id, t)))
    for j in assign:
        if j not in instance.shipment:
            out.append(Violation("load", "unknown shipment", (j,)))
    for r in routes.values():
        for k, st in enumerate(r.stops):
            for j in st.pickups | st.deliveries:
                if assign.get(j) != r.truck:
                    out.append(Violation("load", "route serves only assigned shipments", (j, r.truck)))
        npick = sum(len(st.pickups) for st in r.stops)
        ndel = sum(len(st.deliveries) for st in r.stops)
        if npick != len(r.pickup_index) or ndel != len(r.delivery_index):
            out.append(Violation("load", "each shipment picked and delivered once", (r.truck,)))

    visit_counts: dict = defaultdict(int)
    for r in routes.values():
        for st in r.stops:
            if st.location in instance.loc and instance.loc[st.location].kind != "truck-yard":
                visit_counts[st.location] += 1

    for tid, r in sorted(routes.items()):
        truck = instance.truck.get(tid)
        if truck is None:
            out.append(Violation("load", "unknown truck", (tid,)))
            continue
        if any(st.location not in instance.loc for st in r.stops):
            out.append(Violation("A1", "known locations", (tid,)))
            continue
        out.extend(_check_times(r, truck, instance))
        carried = [j for j in r.pickup_index if j in instance.shipment]
        out.extend(_side_violations(truck, carried, r, instance, visit_counts))
        for j in carried:
            p, d = r.pickup_index.get(j), r.delivery_index.get(j)
            if d is None:
                continue
            if not p < d:
                out.append(Violation("A3", "p_j < d_j", (j, tid)))
            s = instance.shipment[j]
            if r.stops[p].location != s.source or r.stops[d].location != s.destination:
                out.append(Violation("A3", "pickup at source, delivery at destination", (j, tid)))
            ps, pd = r.stops[p], r.stops[d]
            if not s.pickup_window.contains(service_start(ps, instance), ps.departure):
                out.append(Violation("A3", "pickup within TP", (j, tid)))
            if not s.delivery_window.contains(service_start(pd, instance), pd.departure):
                out.append(Violation("A3", "delivery within TD", (j, tid)))
        out.extend(_check_loading(r, truck, placements.get(tid), instance,
                                  check_sequence, pallet_arrangement_ok, rects_overlap))
    for tid in placements:
        if tid not in routes:
            out.append(Violation("B2", "placement without route", (tid,)))

    out.extend(_check_docks(routes.values(), instance))
    out.extend(_check_hubs(assign, routes, instance))

    recomputed = sum(route_cost(r, instance) for r in routes.values() if r.truck in instance.truck
                     and all(st.location in instance.loc for st in r.stops))
    if abs(recomputed - solution.total_mileage) > 1e-6 * max(1.0, abs(recomputed)):
        out.append(Violation("objective", "stored total mileage equals recomputed", ()))
    return out


def _check_times(r: Route, truck: Truck, instance: Instance) -> list:
    out = []
    st = r.stops
    yard = truck.home_yard
    if len(st) < 2 or st[0].location != yard or st[-1].location != yard:
        out.append(Violation("A1", "y_i0 = y_in = y_0", (r.truck,)))
        return out
    if st[0].departure != 0 or st[0].arrival != 0:
        out.append(Violation("A1", "t_i0 = 0", (r.truck,)))
    for k in range(1, len(st)):
        prev, cur = st[k - 1], st[k]
        loc = instance.loc[cur.location]
        if cur.arrival != prev.departure + instance.time(prev.location, cur.location):
            out.append(Violation("A1", "arrival = departure + T", (r.truck, k)))
        if cur.wait != cur.departure - cur.arrival:
            out.append(Violation("A1", "wait = departure - arrival", (r.truck, k)))
        if k == len(st) - 1:
            if cur.arrival > loc.window.close or cur.arrival < loc.window.open:
                out.append(Violation("A1", "return within yard window", (r.truck,)))
            if cur.arrival > MAX_TOUR_MINUTES:
                out.append(Violation("A1", "tour duration cap", (r.truck,)))
            continue
        start = cur.departure - loc.handling_time
        if start < cur.arrival:
            out.append(Violation("A1", "service after arrival", (r.truck, k)))
        if not loc.window.contains(start, cur.departure):
            out.append(Violation("A1", "service within TW(location)", (r.truck, k, loc.id)))
        if loc.kind == "truck-yard":
            out.append(Violation("A1", "no yard visit inside a tour", (r.truck, k)))
    trips = r.trips()
    if not trips or trips[0][0] != 1 or any(a >= b for a, b in trips):
        out.append(Violation("A1", "trip boundaries", (r.truck,)))
    else:
        for a, b in trips:
            picked = set()
            for k in range(a, b):
                picked |= st[k].pickups
                for j in st[k].deliveries:
                    if j not in picked:
                        out.append(Violation("A3", "delivery within pickup trip", (j, r.truck)))
            # every shipment picked in the trip is delivered in it
            delivered = set().union(*(st[k].deliveries for k in range(a, b)))
            for j in picked - delivered:
                out.append(Violation("A3", "delivery within pickup trip", (j, r.truck)))
    return out


def _check_loading(r, truck, placement, instance, check_sequence, pallet_ok, overlap) -> list:
    out = []
    if placement is None:
        out.append(Violation("B2", "placement for every route", (r.truck,)))
        return out
    by_ship = defaultdict(list)
    for it in placement.items:
        by_ship[it.column.shipment].append(it)
    carried = set(r.pickup_index)
    for j in set(by_ship) - carried:
        out.append(Violation("B2", "placed shipment is carried", (j, r.truck)))
    pallet = instance.pallet
    for j in sorted(carried):
        s = instance.shipment.get(j)
        if s is None:
            continue
        items = by_ship.get(j, [])
        if sum(it.column.bins for it in items) != s.bin_count:
            out.append(Violation("B1", "sum_theta l_jtheta = N^B_j", (j,)))
        idxs = [it.column.index for it in items]
        if len(set(idxs)) != len(idxs):
            out.append(Violation("B1", "each column placed once", (j,)))
        for it in items:
            c = it.column
            if c.on_pallet != s.needs_pallet:
                out.append(Violation("B1", "pallet requirement P_j", (j, c.index)))
                continue
            if c.on_pallet:
                if (abs(c.width - pallet.width) > EPS or abs(c.length - pallet.length) > EPS
                        or not 1 <= c.layers <= pallet.stack_limit
                        or len(c.pallet_loads) != c.layers
                        or not pallet_ok(c.pallet_loads, s.bin, pallet)):
                    out.append(Violation("B1", "pallet stacking and in-pallet placement", (j, c.index)))
            else:
                if (abs(c.width - s.bin.width) > EPS or abs(c.length - s.bin.length) > EPS
                        or not 1 <= c.layers <= s.bin.stack_limit):
                    out.append(Violation("B1", "l_jtheta <= L_j", (j, c.index)))
    W, L = truck.surface_width, truck.surface_length
    items = [it for it in placement.items if it.column.shipment in carried]
    for it in items:
        c = it.column
        if it.u < -EPS or it.v < -EPS or it.u + c.width > W + EPS or it.v + c.length > L + EPS:
            out.append(Violation("B2", "inside loading surface", (c.shipment, c.index)))
    pi, di = r.pickup_index, r.delivery_index
    for a in range(len(items)):
        ia = items[a]
        ja = ia.column.shipment
        for b in range(a + 1, len(items)):
            ib = items[b]
            jb = ib.column.shipment
            if ja not in di or jb not in di:
                continue
            coresident = pi[ja] < di[jb] and pi[jb] < di[ja]
            if coresident and overlap(ia.u, ia.v, ia.column.width, ia.column.length,
                                      ib.u, ib.v, ib.column.width, ib.column.length):
                out.append(Violation("B2", "no two columns overlap",
                                     ((ja, ia.column.index), (jb, ib.column.index))))
    if all(it.column.shipment in di for it in items) and not check_sequence(
            Placement(placement.truck, items), r):
        out.append(Violation("B3", "sequential loading", (r.truck,)))
    return out


def _check_docks(routes, instance) -> list:
    """Sweep service intervals per location against its dock count."""
    out = []
    events = defaultdict(list)
    for r in routes:
        for k, st in enumerate(r.stops[1:-1], start=1):
            loc = instance.loc.get(st.location)
            if loc is None or loc.kind == "truck-yard":
                continue
            start = st.departure - loc.handling_time
            if st.departure > start:
                events[loc.id].append((start, st.departure, r.truck))
    for lid, evs in events.items():
        dc = instance.loc[lid].dock_count
        sweep = sorted([(s, 1) for s, _, _ in evs] + [(e, -1) for _, e, _ in evs],
                       key=lambda x: (x[0], x[1]))
        busy = 0
        for t, delta in sweep:
            busy += delta
            if busy > dc:
                trucks = tuple(sorted(tr for s, e, tr in evs if s <= t < e))
                out.append(Violation("A2", "trucks in service <= DC", (lid, t) + trucks))
                break
    return out


def _check_hubs(assign, routes, instance) -> list:
    out = []
    for h in instance.hub_links:
        tu, td = assign.get(h.upstream), assign.get(h.downstream)
        ru, rd = routes.get(tu), routes.get(td)
        if ru is None or rd is None:
            continue
        du, pd = ru.delivery_index.get(h.upstream), rd.pickup_index.get(h.downstream)
        if du is None or pd is None:
            continue
        if ru.stops[du].departure > service_start(rd.stops[pd], instance):
            out.append(Violation("hub", "downstream pickup after upstream delivery",
                                 (h.upstream, h.downstream)))
    return out


def families_ok(violations: Sequence) -> dict:
    bad = {v.family for v in violations}
    return {f: f not in bad for f in FAMILIES}
