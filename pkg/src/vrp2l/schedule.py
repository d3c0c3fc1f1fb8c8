"""Dock queues across all routes and hub transfer precedence.

Each location serves at most ``dock_count`` trucks at a time. Trucks are
served first-come-first-served by the time they are ready for service
(arrival, pushed to the opening of the relevant windows), ties by truck id.
A truck whose turn comes while all docks are busy waits until the earliest
of the occupying services ends. Waiting shifts the rest of that truck's tour.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import NamedTuple

from .model import MAX_TOUR_MINUTES, Instance, Route, Stop
from .routing import service_window


@dataclass(frozen=True)
class DockEvent:
    location: str
    truck: str
    arrival: int
    service_start: int
    service_end: int


class QueueViolation(NamedTuple):
    family: str
    location: str
    time: int | None
    trucks: tuple
    detail: str


@dataclass(frozen=True)
class GtwReport:
    feasible: bool
    waits: dict = field(default_factory=dict)  # (truck, stop index) -> queue wait minutes
    violations: tuple = ()  # QueueViolation records
    events: tuple = ()
    routes: tuple = ()  # routes with queue waits written in


def psi(n: int, values) -> float:
    """Smallest of the ``n`` largest values; the minimum when ``n`` exceeds the count."""
    vals = sorted(values, reverse=True)
    if not vals:
        raise ValueError("psi of an empty set")
    if n < 1:
        raise ValueError("n must be positive")
    return vals[min(n, len(vals)) - 1]


class _Docks:
    """Service ends at one location; keeps only the ``dc`` latest ones,
    whose minimum is the Ψ(dc, ends) completion point."""

    __slots__ = ("dc", "ends", "count", "last_start")

    def __init__(self, dc):
        self.dc = dc
        self.ends = []  # min-heap of at most dc largest ends
        self.count = 0
        self.last_start = None

    def earliest(self, ready):
        t = ready if self.last_start is None else max(ready, self.last_start)
        if self.count >= self.dc:
            t = max(t, self.ends[0])
        return t

    def add(self, start, end):
        self.count += 1
        self.last_start = start
        if len(self.ends) < self.dc:
            heapq.heappush(self.ends, end)
        elif end > self.ends[0]:
            heapq.heapreplace(self.ends, end)


def simulate_queues(routes, instance: Instance) -> GtwReport:
    """One discrete-event pass over every stop of every route.

    Stops are released in order of their ready time; because a truck's
    next ready time never precedes its current departure, each stop is
    processed exactly once and no fixpoint iteration is needed.
    """
    routes = sorted(routes, key=lambda r: r.truck)
    docks = {}
    heap = []
    new_stops = [list(r.stops) for r in routes]
    ships = instance.shipment
    # downstream shipment -> upstream shipment it waits for at the hub
    feeds = {h.downstream: h.upstream for h in instance.hub_links}
    carried = {j for r in routes for j in r.pickup_index}
    delivered_at = {}  # upstream shipment -> departure after unloading it
    parked = {}  # upstream shipment -> heap entries waiting for it
    queued = set()
    violations = []
    waits = {}
    events = []
    loc = instance.loc

    def release(ri, k, t_prev):
        r = routes[ri]
        prev, st = new_stops[ri][k - 1], r.stops[k]
        arrival = t_prev + instance.time(prev.location, st.location)
        if k == len(r.stops) - 1:
            new_stops[ri][k] = Stop(st.location, st.pickups, st.deliveries, arrival, 0, arrival)
            w = loc[st.location].window
            if not (w.open <= arrival <= w.close) or arrival > MAX_TOUR_MINUTES:
                violations.append(QueueViolation("A2" if ri in queued else "A1", st.location, arrival, (r.truck,),
                                                 "return to yard within window"))
            return
        lo, _ = service_window(loc[st.location], st.pickups, st.deliveries, instance)
        ready = max(arrival, lo)
        heapq.heappush(heap, (ready, r.truck, k, ri, arrival))

    for ri, r in enumerate(routes):
        new_stops[ri][0] = Stop(r.stops[0].location, r.stops[0].pickups, r.stops[0].deliveries, 0, 0, 0)
        if len(r.stops) > 1:
            release(ri, 1, 0)

    while heap:
        ready, tid, k, ri, arrival = heapq.heappop(heap)
        st = routes[ri].stops[k]
        pending = [feeds[j] for j in st.pickups if j in feeds and feeds[j] in carried
                   and feeds[j] not in st.deliveries]
        blocker = next((u for u in sorted(pending) if u not in delivered_at), None)
        if blocker is not None:
            parked.setdefault(blocker, []).append((ready, tid, k, ri, arrival))
            continue
        if pending:
            hub_ready = max(delivered_at[u] for u in pending)
            if hub_ready > ready:
                heapq.heappush(heap, (hub_ready, tid, k, ri, arrival))
                continue
        L = loc[st.location]
        dk = docks.get(L.id)
        if dk is None:
            dk = docks[L.id] = _Docks(L.dock_count)
        start = dk.earliest(ready)
        end = start + L.handling_time
        dk.add(start, end)
        lo, hi = service_window(L, st.pickups, st.deliveries, instance)
        if end > hi:
            # a breach caused by queueing anywhere earlier on the tour is an A2 cascade
            fam = "A2" if (start > ready or ri in queued) else "A1"
            violations.append(QueueViolation(fam, L.id, start, (tid,),
                                                 f"stop {k} service ends at {end} after {hi}"))
        if start > ready:
            waits[(tid, k)] = start - ready
            queued.add(ri)
        events.append(DockEvent(L.id, tid, arrival, start, end))
        for j in st.deliveries:
            delivered_at[j] = end
            for entry in parked.pop(j, ()):
                heapq.heappush(heap, (max(entry[0], end),) + entry[1:])
        new_stops[ri][k] = Stop(st.location, st.pickups, st.deliveries, arrival, end - arrival, end)
        release(ri, k + 1, end)

    for u, entries in sorted(parked.items()):
        for (_, tid, k, ri, _) in entries:
            violations.append(QueueViolation("hub", routes[ri].stops[k].location, None, (tid,),
                                             f"stop {k} waits for {u}, which never arrives"))
    out_routes = tuple(Route(r.truck, tuple(s), r.trip_starts) for r, s in zip(routes, new_stops))
    owner = {}
    for r in out_routes:
        for j in r.pickup_index:
            owner[j] = r
    for h in instance.hub_links:
        ru, rd = owner.get(h.upstream), owner.get(h.downstream)
        if ru is None or rd is None or h.upstream in parked:
            continue
        dep = ru.stops[ru.delivery_index[h.upstream]].departure
        pst = rd.stops[rd.pickup_index[h.downstream]]
        start = pst.departure - loc[pst.location].handling_time
        if dep > start:
            violations.append(QueueViolation("hub", ships[h.downstream].source, start,
                                             tuple(sorted({ru.truck, rd.truck})),
                                             f"{h.downstream} picked up before {h.upstream} is delivered"))
    events.sort(key=lambda e: (e.location, e.service_start, e.truck))
    return GtwReport(not violations, waits, tuple(violations), tuple(events), out_routes)
