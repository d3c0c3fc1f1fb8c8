import random

import pytest

from conftest import loc, make_instance, ship, truck
from vrp2l.model import (Column, ModelError, Placement, PlacedItem, Route, Solution, Stop, families_ok,
                         side_constraints_ok, total_mileage, validate_solution)


def hand_solution(inst):
    """Y -> S (load J1, J2) -> W (unload both) -> Y, timed by hand:
    legs of 10, 10 and 20 minutes, handling 5 at S and W."""
    stops = (Stop("Y", departure=0), Stop("S", {"J1", "J2"}, (), 10, 5, 15),
             Stop("W", (), {"J1", "J2"}, 25, 5, 30), Stop("Y", arrival=50, departure=50))
    route = Route("T1", stops)
    place = Placement("T1", (PlacedItem(Column("J1", 0, 1.0, 1.0, 1), 0.0, 0.0),
                             PlacedItem(Column("J2", 0, 1.0, 1.0, 1), 1.0, 0.0)))
    return Solution({"J1": "T1", "J2": "T1"}, (route,), (place,), 40.0)


def test_mileage_two_leg_route():
    inst = make_instance([loc("Y", "truck-yard", 0), loc("A", "supplier", 10), loc("W", "warehouse", 10, 1)],
                         [truck("T1")], [ship("J", "A", "W")])
    r = Route("T1", (Stop("Y"), Stop("A"), Stop("Y")))
    assert total_mileage(Solution({}, (r,)), inst) == pytest.approx(20.0)


def test_mileage_empty_solution(line_instance):
    assert total_mileage(Solution({}), line_instance) == 0.0


def test_mileage_matches_resummation():
    rng = random.Random(5)
    locs = [loc("Y", "truck-yard", 0), loc("A", "supplier", 1), loc("B", "supplier", 2), loc("W", "warehouse", 3)]
    dist = [[0.0 if i == j else rng.uniform(1, 50) for j in range(4)] for i in range(4)]
    inst = make_instance(locs, [truck("T1", cost=1.0), truck("T2", cost=2.0)],
                         [ship("J", "A", "W")], dist=dist)
    r1 = Route("T1", tuple(Stop(x) for x in ("Y", "A", "B", "W", "Y")))
    r2 = Route("T2", tuple(Stop(x) for x in ("Y", "B", "W", "A", "Y")))
    ix = {"Y": 0, "A": 1, "B": 2, "W": 3}
    expect = 0.0
    for cost, seq in ((1.0, "YABWY"), (2.0, "YBWAY")):
        expect += cost * sum(dist[ix[a]][ix[b]] for a, b in zip(seq, seq[1:]))
    assert total_mileage(Solution({}, (r1, r2)), inst) == pytest.approx(expect)


def test_unknown_location_raises(line_instance):
    r = Route("T1", (Stop("Y"), Stop("NOWHERE"), Stop("Y")))
    with pytest.raises(ModelError, match="NOWHERE"):
        total_mileage(Solution({}, (r,)), line_instance)


def test_hand_built_solution_is_clean(line_instance):
    assert validate_solution(hand_solution(line_instance), line_instance) == []


def test_delivery_before_pickup_is_a3(line_instance):
    sol = hand_solution(line_instance)
    r = sol.routes[0]
    s = r.stops
    swapped = (s[0], Stop("S", (), {"J1", "J2"}, 10, 5, 15), Stop("W", {"J1", "J2"}, (), 25, 5, 30), s[3])
    bad = Solution(sol.assignment, (Route("T1", swapped),), sol.placements, 40.0)
    viol = validate_solution(bad, line_instance)
    assert any(v.family == "A3" and v.rule == "p_j < d_j" for v in viol)


def test_three_trucks_on_two_docks_without_wait_is_a2():
    locs = [loc("Y", "truck-yard", 0), loc("S", "supplier", 10, dock_count=2, handling_time=10),
            loc("W", "warehouse", 20)]
    trucks = [truck(f"T{i}") for i in range(3)]
    ships = [ship(f"J{i}", "S", "W") for i in range(3)]
    inst = make_instance(locs, trucks, ships)
    routes, places = [], []
    for i in range(3):
        routes.append(Route(f"T{i}", (Stop("Y"), Stop("S", {f"J{i}"}, (), 10, 10, 20),
                                      Stop("W", (), {f"J{i}"}, 30, 0, 30), Stop("Y", arrival=50, departure=50))))
        places.append(Placement(f"T{i}", (PlacedItem(Column(f"J{i}", 0, 1.0, 1.0, 1), 0.0, 0.0),)))
    sol = Solution({f"J{i}": f"T{i}" for i in range(3)}, tuple(routes), tuple(places), 150.0)
    viol = validate_solution(sol, inst)
    assert any(v.family == "A2" for v in viol)


def test_side_constraints():
    locs = [loc("Y", "truck-yard", 0), loc("A", "supplier", 10, city="SH"), loc("B", "supplier", 12, city="NJ"),
            loc("C", "supplier", 14, allowed_truck_lengths={"7.6m"}), loc("W", "warehouse", 20)]
    big = truck("T12", length=12.0, cls="12m")
    inst = make_instance(locs, [big], [ship("J1", "A", "W"), ship("J2", "B", "W"), ship("J3", "C", "W")])
    r = Route("T12", tuple(Stop(x) for x in ("Y", "A", "B", "W", "Y")))
    assert not side_constraints_ok(big, ["J1", "J2"], r, inst)
    r = Route("T12", tuple(Stop(x) for x in ("Y", "C", "W", "Y")))
    assert not side_constraints_ok(big, ["J3"], r, inst)
    r = Route("T12", tuple(Stop(x) for x in ("Y", "A", "W", "Y")))
    assert side_constraints_ok(big, ["J1"], r, inst)


def test_families_ok_marks_every_family():
    feas = families_ok([])
    assert all(feas.values()) and "A1" in feas and "B3" in feas


@pytest.mark.parametrize("bad", [
    lambda: loc("X", "depot", 0),
    lambda: loc("X", "supplier", 0, window=(10, 10)),
    lambda: loc("X", "supplier", 0, dock_count=0),
    lambda: ship("J", "S", "S"),
    lambda: truck("T", width=0),
])
def test_invariants(bad):
    with pytest.raises(ModelError):
        bad()


def test_dangling_shipment_source():
    with pytest.raises(ModelError, match="J9"):
        make_instance([loc("Y", "truck-yard", 0), loc("W", "warehouse", 1)], [truck("T")],
                      [ship("J9", "NOPE", "W")])
