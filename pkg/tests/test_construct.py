import itertools
import math

import networkx as nx
import pytest
from networkx.algorithms.community import modularity

from conftest import loc, make_instance, ship, truck
from vrp2l.construct import cluster_suppliers, initial_solution, proximity_graph
from vrp2l.generator import GeneratorConfig, generate_instance
from vrp2l.model import validate_solution
from vrp2l.routing import solve_route


def supplier_instance(points):
    locs = [loc("Y", "truck-yard", 0, 0), loc("W", "warehouse", 0, 1)]
    locs += [loc(f"S{i}", "supplier", x, y) for i, (x, y) in enumerate(points)]
    ships = [ship(f"J{i}", f"S{i}", "W") for i in range(len(points))]
    return make_instance(locs, [truck("T1")], ships)


def test_single_supplier_area():
    areas = cluster_suppliers(supplier_instance([(5, 5)]))
    assert areas.groups == (("S0",),)


def test_planted_partition():
    pts = [(math.cos(a) * 1.0, math.sin(a) * 1.0) for a in (0, 1.2, 2.4, 3.6, 4.8)]
    pts += [(100 + x, y) for x, y in pts]
    areas = cluster_suppliers(supplier_instance(pts))
    assert sorted(areas.groups) == [tuple(f"S{i}" for i in range(5)), tuple(f"S{i}" for i in range(5, 10))]


def test_equidistant_suppliers_form_one_area():
    # regular simplex: every pair at the same distance (explicit matrix)
    n = 5
    locs = [loc("Y", "truck-yard", 0), loc("W", "warehouse", 1)] + [loc(f"S{i}", "supplier", i) for i in range(n)]
    dist = [[0.0 if a == b else 10.0 for b in range(n + 2)] for a in range(n + 2)]
    inst = make_instance(locs, [truck("T1")], [ship("J0", "S0", "W")], dist=dist)
    areas = cluster_suppliers(inst)
    assert len(areas.groups) == 1
    # brute force: no 2-partition beats keeping everyone together
    G = proximity_graph(inst)
    nodes = sorted(G.nodes)
    whole = modularity(G, [set(nodes)], weight="weight")
    for k in range(1, n):
        for part in itertools.combinations(nodes, k):
            rest = set(nodes) - set(part)
            assert modularity(G, [set(part), rest], weight="weight") <= whole + 1e-12


def test_one_shipment_one_truck(line_instance):
    inst = line_instance.__class__(line_instance.locations, line_instance.travel, line_instance.trucks,
                                   line_instance.shipments[:1])
    sol = initial_solution(inst)
    assert sol.feasible and dict(sol.assignment) == {"J1": "T1"}
    assert sol.total_mileage == pytest.approx(solve_route(inst.truck["T1"], {"J1"}, inst).mileage)


def test_far_apart_areas_not_mixed():
    pts = [(0, 10), (1, 11), (0, 12), (200, 10), (201, 11), (200, 12)]
    locs = [loc("Y", "truck-yard", 100, 0), loc("W", "warehouse", 100, 5)]
    locs += [loc(f"S{i}", "supplier", x, y) for i, (x, y) in enumerate(pts)]
    ships = [ship(f"J{i}", f"S{i}", "W") for i in range(6)]
    inst = make_instance(locs, [truck(f"T{i}") for i in range(4)], ships)
    sol = initial_solution(inst)
    assert sol.feasible
    area = {s: k for k, g in enumerate(sol.diagnostics["areas"]) for s in g}
    for t in set(sol.assignment.values()):
        carried = [j for j, tt in sol.assignment.items() if tt == t]
        assert len({area[inst.shipment[j].source] for j in carried}) == 1


def test_repair_round_resolves_dock_overload():
    # three small trucks each take one shipment and queue at a one-dock supplier;
    # J2 must be served by minute 25, so the third in line breaches its window
    locs = [loc("Y", "truck-yard", 0), loc("S", "supplier", 10, handling_time=10),
            loc("W", "warehouse", 20)]
    small = [truck(f"T{i}", width=2.0, length=2.0, cls="4.2m") for i in (1, 2, 3)]
    big = truck("T0", width=2.4, length=7.6)
    ships = [ship("J0", "S", "W", w=1.8, l=1.8), ship("J1", "S", "W", w=1.8, l=1.8),
             ship("J2", "S", "W", w=1.8, l=1.8, pickup_window=(0, 25))]
    inst = make_instance(locs, small + [big], ships)
    sol = initial_solution(inst)
    assert sol.feasible and validate_solution(sol, inst) == []
    assert 1 <= sol.diagnostics["repair_rounds"] <= 3


def test_determinism():
    inst = generate_instance(GeneratorConfig(seed=2, n_shipments=25, n_trucks=15))
    assert initial_solution(inst) == initial_solution(inst)


def test_proximity_graph_empty():
    inst = make_instance([loc("Y", "truck-yard", 0), loc("W", "warehouse", 1)], [truck("T")], [])
    assert nx.number_of_nodes(proximity_graph(inst)) == 0
    assert cluster_suppliers(inst).groups == ()
