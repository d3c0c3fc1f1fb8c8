import pytest

from conftest import loc, make_instance, ship, truck
from vrp2l.evaluate import global_check
from vrp2l.model import HubLink, Route, Stop
from vrp2l.schedule import psi, simulate_queues


@pytest.mark.parametrize("n, values, expect", [(2, [5, 9, 7], 7), (1, [3, 8], 8), (3, [4, 4, 4], 4),
                                               (5, [2, 6], 2)])
def test_psi(n, values, expect):
    assert psi(n, values) == expect


def test_psi_rejects_empty():
    with pytest.raises(ValueError):
        psi(1, [])


def queue_instance(n_trucks, docks, handling, window=(0, 1440)):
    locs = [loc("Y", "truck-yard", 0), loc("S", "supplier", 0, 1, dock_count=docks, handling_time=handling,
                                           window=window),
            loc("W", "warehouse", 0, 2)]
    dist = [[0, 0, 5], [0, 0, 5], [5, 5, 0]]
    trucks = [truck(f"T{i}") for i in range(n_trucks)]
    ships = [ship(f"J{i}", "S", "W") for i in range(n_trucks)]
    return make_instance(locs, trucks, ships, dist=dist)


def routes_for(inst):
    return [Route(t.id, (Stop("Y"), Stop("S", {f"J{i}"}), Stop("W", (), {f"J{i}"}), Stop("Y")))
            for i, t in enumerate(inst.trucks)]


def test_three_trucks_one_dock_handling_10():
    inst = queue_instance(3, 1, 10)
    rep = simulate_queues(routes_for(inst), inst)
    assert rep.feasible
    starts = sorted(e.service_start for e in rep.events if e.location == "S")
    assert starts == [0, 10, 20]
    assert rep.waits == {("T1", 1): 10, ("T2", 1): 20}
    # waits push the rest of each tour
    assert [r.stops[-1].arrival for r in rep.routes] == [20, 30, 40]


def test_two_docks_no_wait():
    inst = queue_instance(2, 2, 10)
    rep = simulate_queues(routes_for(inst), inst)
    assert rep.feasible and rep.waits == {}


def test_queue_pushes_past_closing_is_a2_cascade():
    inst = queue_instance(3, 1, 10, window=(0, 25))
    rep = simulate_queues(routes_for(inst), inst)
    assert not rep.feasible
    assert [v.family for v in rep.violations] == ["A2"]
    assert rep.violations[0].trucks == ("T2",)


def test_occupancy_never_exceeds_docks():
    inst = queue_instance(6, 2, 7)
    rep = simulate_queues(routes_for(inst), inst)
    ev = [e for e in rep.events if e.location == "S"]
    for t in {e.service_start for e in ev}:
        assert sum(e.service_start <= t < e.service_end for e in ev) <= 2


def hub_instance():
    locs = [loc("Y", "truck-yard", 0), loc("S", "supplier", 10), loc("H", "hub", 20, handling_time=5),
            loc("W", "warehouse", 30)]
    ships = [ship("U", "S", "H"), ship("D", "H", "W")]
    return make_instance(locs, [truck("T1"), truck("T2")], ships, [HubLink("U", "D")])


def test_hub_pickup_waits_for_upstream_delivery():
    inst = hub_instance()
    up = Route("T1", (Stop("Y"), Stop("S", {"U"}), Stop("H", (), {"U"}), Stop("Y")))
    down = Route("T2", (Stop("Y"), Stop("H", {"D"}), Stop("W", (), {"D"}), Stop("Y")))
    rep = simulate_queues([up, down], inst)
    assert rep.feasible
    r = {x.truck: x for x in rep.routes}
    unloaded = r["T1"].stops[2].departure
    assert r["T2"].stops[1].departure - 5 >= unloaded


def test_hub_upstream_missing():
    inst = hub_instance()
    down = Route("T2", (Stop("Y"), Stop("H", {"D"}), Stop("W", (), {"D"}), Stop("Y")))
    rep = simulate_queues([down], inst)
    assert rep.feasible  # upstream is not carried by any route: nothing to wait for


def test_max_visits_in_global_check():
    locs = [loc("Y", "truck-yard", 0), loc("S", "supplier", 10, max_visits=1, dock_count=3),
            loc("W", "warehouse", 20, dock_count=3)]
    inst = make_instance(locs, [truck("T1"), truck("T2")], [ship("J0", "S", "W"), ship("J1", "S", "W")])
    rep = global_check(routes_for(inst), inst)
    assert not rep.feasible
    assert rep.violations[0].family == "side-constraints"
