import statistics

import pytest

from conftest import loc, make_instance, ship, truck
from vrp2l.construct import initial_solution
from vrp2l.generator import GeneratorConfig, generate_instance
from vrp2l.oracle import exact_solve
from vrp2l.params import SolverParams
from vrp2l.routing import solve_route
from vrp2l.tabu import Move, TabuList, bundle_shipments, evaluate_move, tabu_search


def pairs_instance(pairs):
    names = sorted({x for p in pairs for x in p})
    locs = [loc("Y", "truck-yard", 0)]
    locs += [loc(n, "supplier" if n.startswith("S") else "warehouse", 10 + i) for i, n in enumerate(names)]
    ships = [ship(f"J{i}", s, w) for i, (s, w) in enumerate(pairs)]
    return make_instance(locs, [truck("T1")], ships)


def test_distinct_pairs_are_singletons():
    b = bundle_shipments(pairs_instance([("S1", "W1"), ("S2", "W1"), ("S1", "W2")]))
    assert sorted(len(x.shipments) for x in b) == [1, 1, 1]


def test_shared_pair_bundled():
    inst = pairs_instance([("S1", "W1"), ("S1", "W1"), ("S2", "W1"), ("S3", "W1"), ("S1", "W2")])
    b = bundle_shipments(inst)
    assert sorted(len(x.shipments) for x in b) == [1, 1, 1, 2]
    assert [x.id for x in b] == list(range(4))
    assert len(bundle_shipments(inst, bundling=False)) == 5


def test_threshold_splits_evenly():
    inst = pairs_instance([("S1", "W1")] * 7)
    assert [len(x.shipments) for x in bundle_shipments(inst, threshold=3)] == [3, 2, 2]
    assert [len(x.shipments) for x in bundle_shipments(inst, threshold=10)] == [7]


def two_truck_instance():
    locs = [loc("Y1", "truck-yard", -50), loc("Y2", "truck-yard", 5), loc("S", "supplier", 10),
            loc("W", "warehouse", 20)]
    far = truck("TF", yard="Y1", width=2.0, length=4.2, cls="4.2m")  # smaller: opened first
    near = truck("TN", yard="Y2")
    return make_instance(locs, [far, near], [ship("J1", "S", "W"), ship("J2", "S", "W")])


def test_move_emptying_a_truck():
    inst = two_truck_instance()
    # TN already visits S and W, so taking J1 costs it nothing extra
    X = {"J1": "TF", "J2": "TN"}
    bundles = bundle_shipments(inst)
    mileage, ok, _ = evaluate_move(X, Move(0, "TF", "TN"), inst, bundles)
    assert ok
    far = solve_route(inst.truck["TF"], {"J1"}, inst).mileage
    near = solve_route(inst.truck["TN"], {"J2"}, inst).mileage
    assert mileage == pytest.approx(far + near - far)


def test_move_onto_other_city_is_infeasible():
    locs = [loc("Y", "truck-yard", 0), loc("A", "supplier", 10, city="SH"), loc("B", "supplier", 12, city="NJ"),
            loc("W", "warehouse", 20)]
    inst = make_instance(locs, [truck("T1"), truck("T2")], [ship("J1", "A", "W"), ship("J2", "B", "W")])
    X = {"J1": "T1", "J2": "T2"}
    bundles = bundle_shipments(inst)
    bid = next(b.id for b in bundles if b.shipments == ("J1",))
    mileage, ok, _ = evaluate_move(X, Move(bid, "T1", "T2"), inst, bundles)
    assert not ok and mileage == float("inf")


def test_one_step_reaches_oracle_optimum():
    inst = two_truck_instance()
    x0 = initial_solution(inst)
    assert set(x0.assignment.values()) == {"TF"}
    x1 = tabu_search(x0, inst, SolverParams(iterations=1))
    assert x1.total_mileage == pytest.approx(exact_solve(inst).total_mileage)
    assert set(x1.assignment.values()) == {"TN"}


def test_zero_budget_returns_start():
    inst = two_truck_instance()
    x0 = initial_solution(inst)
    assert tabu_search(x0, inst, SolverParams(budget_seconds=0)) is x0
    assert tabu_search(x0, inst, SolverParams(iterations=0)) is x0


def test_infeasible_start_rejected():
    inst = two_truck_instance()
    x0 = initial_solution(inst)
    bad = x0.__class__(x0.assignment, x0.routes, x0.placements, x0.total_mileage, {"A1": False})
    with pytest.raises(ValueError):
        tabu_search(bad, inst, SolverParams(iterations=3))


def test_telemetry_rows():
    inst = generate_instance(GeneratorConfig(seed=1, n_shipments=12, n_trucks=12))
    rows = []
    x0 = initial_solution(inst)
    x1 = tabu_search(x0, inst, SolverParams(iterations=10), telemetry=rows)
    assert [r[0] for r in rows] == list(range(1, len(rows) + 1))
    assert all(r[3] <= r[2] + 1e-9 for r in rows)
    assert [r[3] for r in rows] == sorted((r[3] for r in rows), reverse=True)
    assert x1.total_mileage <= x0.total_mileage + 1e-9


def test_tabu_list():
    tl = TabuList()
    m1, m2 = Move(0, "a", "b"), Move(1, "b", "a")
    tl.add(m1, 3)
    tl.add(m2, 5)
    tl.expire(3)
    assert m1 not in tl and m2 in tl
    assert tl.evict_oldest() and len(tl) == 0 and not tl.evict_oldest()


def test_bundling_beats_no_bundling_at_equal_budget():
    # per-instance differences are small at this size; 15 instances give a stable median
    wb, nb, init = [], [], []
    for seed in range(15):
        inst = generate_instance(GeneratorConfig(seed=100 + seed, n_shipments=20, n_trucks=12))
        x0 = initial_solution(inst)
        init.append(x0.total_mileage)
        wb.append(tabu_search(x0, inst, SolverParams(iterations=200, seed=seed)).total_mileage)
        nb.append(tabu_search(x0, inst, SolverParams(iterations=200, seed=seed, bundling=False)).total_mileage)
    assert all(w <= i + 1e-9 for w, i in zip(wb, init)) and all(n <= i + 1e-9 for n, i in zip(nb, init))
    assert statistics.median(wb) <= statistics.median(nb)
