"""Initial feasible solution: supplier areas, greedy truck filling, and
repair rounds for dock-queue conflicts."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
from networkx.algorithms.community import greedy_modularity_communities, modularity

from .evaluate import assemble, bad_trucks, global_check
from .model import Instance, ModelError, Solution
from .params import SolverParams
from .routing import solve_route, truck_signature

log = logging.getLogger(__name__)


class ConstructionError(ModelError):
    pass


@dataclass(frozen=True)
class SupplierAreas:
    groups: tuple  # tuple of tuples of supplier ids
    modularity: float

    def area_of(self) -> dict:
        return {s: k for k, g in enumerate(self.groups) for s in g}


def proximity_graph(instance: Instance, radius_scale: float = 1.0) -> nx.Graph:
    sups = sorted(l.id for l in instance.locations if l.kind == "supplier")
    G = nx.Graph()
    G.add_nodes_from(sups)
    pairs = [(a, b) for i, a in enumerate(sups) for b in sups[i + 1:]]
    if not pairs:
        return G
    sym = {(a, b): 0.5 * (instance.dist(a, b) + instance.dist(b, a)) for a, b in pairs}
    mean = sum(sym.values()) / len(sym)
    for (a, b), d in sym.items():
        if d <= radius_scale * mean:
            G.add_edge(a, b, weight=1.0 / max(d, 1e-9))
    return G


def cluster_suppliers(instance: Instance, radius_scale: float = 1.0) -> SupplierAreas:
    """Greedy modularity communities of the supplier proximity graph."""
    G = proximity_graph(instance, radius_scale)
    if G.number_of_nodes() == 0:
        return SupplierAreas((), 0.0)
    if G.number_of_edges() == 0:
        groups = tuple((n,) for n in sorted(G.nodes))
        return SupplierAreas(groups, 0.0)
    comms = greedy_modularity_communities(G, weight="weight")
    groups = tuple(sorted((tuple(sorted(c)) for c in comms), key=lambda g: g[0]))
    return SupplierAreas(groups, modularity(G, [set(g) for g in groups], weight="weight"))


def shipment_groups(instance: Instance, areas: SupplierAreas) -> list:
    """Shipments grouped by (supplier area, source city); hub-sourced
    shipments form one group per hub. Each group is sorted by direct
    source-destination distance, farthest first."""
    area = areas.area_of()
    groups = {}
    for s in instance.shipments:
        src = instance.loc[s.source]
        key = ("hub", s.source) if src.kind == "hub" else ("area", f"{area[s.source]:04d}", src.city)
        groups.setdefault(key, []).append(s.id)
    out = []
    for key in sorted(groups):
        ids = sorted(groups[key], key=lambda j: (-instance.dist(instance.shipment[j].source,
                                                                 instance.shipment[j].destination), j))
        out.append(ids)
    return out


class _Builder:
    """Mutable truck loads during construction."""

    def __init__(self, instance: Instance, params: SolverParams, largest_first: bool = False):
        self.inst = instance
        self.params = params
        self.loads = {}  # truck -> frozenset of shipments
        self.results = {}  # truck -> RouteResult
        self._conflicts = None  # conflict keys of the current loads, cached
        sign = -1 if largest_first else 1
        self.order = sorted(instance.trucks, key=lambda t: (sign * t.area, t.id))

    def idle(self):
        return [t for t in self.order if t.id not in self.loads]

    def routes(self, skip=()):
        return [r.route for t, r in self.results.items() if t not in skip]

    def try_put(self, truck, ships, gtw):
        """Route ``ships`` on ``truck``; with ``gtw`` the placement must not
        add dock/hub conflicts to those the current loads already have."""
        res = solve_route(truck, ships, self.inst, self.params)
        if not res.feasible:
            return None
        if gtw:
            rep = global_check(self.routes(skip=(truck.id,)) + [res.route], self.inst)
            if not rep.feasible and not _conflicts(rep) <= self.conflicts():
                return None
        return res

    def conflicts(self):
        if self._conflicts is None:
            self._conflicts = _conflicts(global_check(self.routes(), self.inst))
        return self._conflicts

    def set_load(self, tid, ships, res):
        self.loads[tid] = ships
        self.results[tid] = res
        self._conflicts = None

    def fill(self, group, gtw=False, soft=False):
        """Greedy fill: keep loading the current truck while it stays
        feasible, otherwise open the next idle truck. With ``gtw`` every
        placement must also keep the dock queues feasible; ``soft`` then
        falls back to a plain placement (left to the next repair round)
        when no queue-feasible truck exists."""
        cur = None
        for j in group:
            placed = self._place(j, cur, gtw)
            if placed is None and gtw and soft:
                # left for the next repair round, on a truck of its own if possible
                placed = self._place(j, None, False)
            if placed is None:
                raise ConstructionError(f"no truck can take shipment {j}")
            if placed is not False:
                cur = placed

    def _place(self, j, cur, gtw):
        """Put ``j`` on a truck; returns the new current truck, False when it
        went into an older truck, None when nothing takes it."""
        if cur is not None:
            res = self.try_put(cur, self.loads[cur.id] | {j}, gtw)
            if res is not None:
                self.set_load(cur.id, self.loads[cur.id] | {j}, res)
                return cur
        if gtw:
            # queue repair: joining a truck that already calls at the source
            # adds no dock visit there
            src = self.inst.shipment[j].source
            for t in self.order:
                if t.id in self.loads and t is not cur and src in self.results[t.id].route.location_ids():
                    res = self.try_put(t, self.loads[t.id] | {j}, gtw)
                    if res is not None:
                        self.set_load(t.id, self.loads[t.id] | {j}, res)
                        return False
        seen = set()  # idle trucks alike in yard and surface get the same route
        for t in self.idle():
            sig = truck_signature(t)
            if sig in seen:
                continue
            seen.add(sig)
            res = self.try_put(t, frozenset([j]), gtw)
            if res is not None:
                self.set_load(t.id, frozenset([j]), res)
                return t
        # fleet exhausted: first fit into any truck already in use
        for t in self.order:
            if t.id not in self.loads or t is cur:
                continue
            res = self.try_put(t, self.loads[t.id] | {j}, gtw)
            if res is not None:
                self.set_load(t.id, self.loads[t.id] | {j}, res)
                return False
        return None

    def drop(self, tid):
        ships = self.loads.pop(tid)
        del self.results[tid]
        self._conflicts = None
        return ships


def _conflicts(report) -> frozenset:
    """Conflicts of a queue report, keyed without times (which shift)."""
    return frozenset((v.family, v.location, v.trucks) for v in report.violations)


def _repair_set(report) -> list:
    """(trucks in conflict, trucks served ahead of them in the queue that
    made them late); dropping only the former tends to rebuild the same
    queue."""
    victims = set(bad_trucks(report))
    by_loc = {}
    for e in report.events:
        by_loc.setdefault(e.location, []).append(e)
    blockers = set()
    # a late truck may have queued at any earlier stop of its tour
    for e in report.events:
        if e.truck in victims and e.service_start > e.arrival:
            blockers.update(o.truck for o in by_loc[e.location] if o.truck != e.truck
                            and o.service_start <= e.service_start and o.service_end > e.arrival)
    return sorted(victims), sorted(blockers - victims)


def initial_solution(instance: Instance, params: SolverParams = SolverParams()) -> Solution:
    """Greedy fill per supplier area plus repair rounds. Trucks are opened
    smallest first; if that runs out of trucks or repair rounds the fill is
    redone once opening the largest trucks first."""
    areas = cluster_suppliers(instance, params.cluster_radius_scale)
    groups = shipment_groups(instance, areas)
    try:
        return _build(instance, params, areas, groups, largest_first=False)
    except ConstructionError as e:
        log.info("smallest-first construction failed (%s); retrying largest first", e)
        return _build(instance, params, areas, groups, largest_first=True)


def _build(instance, params, areas, groups, largest_first):
    group_of = {j: g for g, ids in enumerate(groups) for j in ids}
    b = _Builder(instance, params, largest_first)
    for g in groups:
        b.fill(g)
    rounds = 0
    rep = global_check(b.routes(), instance)
    while not rep.feasible:
        if rounds >= params.repair_rounds:
            raise ConstructionError(f"dock/hub conflicts remain after {rounds} repair rounds: "
                                    f"{[tuple(v) for v in rep.violations[:3]]}")
        rounds += 1
        victims, blockers = _repair_set(rep)
        # shipments keep their area; the late trucks' loads are refilled
        # (queue-aware) before those of the trucks that delayed them
        for trucks in (victims, blockers):
            seq = set()
            for t in trucks:
                seq.update(b.drop(t))
            for g in sorted({group_of[j] for j in seq}):
                b.fill([j for j in groups[g] if j in seq], gtw=True, soft=True)
        rep = global_check(b.routes(), instance)
    assignment = {j: t for t, ships in b.loads.items() for j in ships}
    return assemble(instance, assignment, b.routes(), [r.placement for r in b.results.values()],
                    rep, {"repair_rounds": rounds, "areas": [list(g) for g in areas.groups],
                          "modularity": areas.modularity,
                          "truck_order": "largest-first" if largest_first else "smallest-first"})
