import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import loc, make_instance, ship, truck
from vrp2l import kernels
from vrp2l.generator import GeneratorError, generate_instance, tiny
from vrp2l.instance_io import parse_instance, serialize_instance
from vrp2l.loading import PackParams, check_sequence, pack, rects_overlap
from vrp2l.model import Column, Route, Stop
from vrp2l.oracle import exact_pack
from vrp2l.schedule import psi, simulate_queues

SIZES = st.sampled_from([0.5, 0.6, 0.8, 1.0, 1.2])


@given(st.integers(1, 6), st.lists(st.integers(-50, 50), min_size=1, max_size=10))
def test_psi_is_nth_largest_or_min(n, values):
    vals = sorted(values, reverse=True)
    assert psi(n, values) == (vals[n - 1] if n <= len(vals) else min(vals))


@st.composite
def packing_case(draw, max_cols=5):
    n = draw(st.integers(1, max_cols))
    cols = [Column(f"J{i}", 0, draw(SIZES), draw(SIZES), 1) for i in range(n)]
    visits = []
    for _ in range(n):
        p = draw(st.integers(1, 3))
        visits.append((p, p + draw(st.integers(1, 3))))
    t = truck("T", width=draw(st.sampled_from([1.2, 1.6, 2.0])), length=draw(st.sampled_from([1.0, 1.5, 2.0])))
    return cols, visits, t


def route_for(visits):
    """Route whose stop k carries the pickups/deliveries of event k."""
    last = max(d for _, d in visits)
    stops = [Stop("Y")]
    for k in range(1, last + 1):
        stops.append(Stop(f"L{k}", {f"J{i}" for i, (p, _) in enumerate(visits) if p == k},
                          {f"J{i}" for i, (_, d) in enumerate(visits) if d == k}))
    return Route("T", tuple(stops) + (Stop("Y"),))


@settings(max_examples=150, deadline=None)
@given(packing_case())
def test_pack_output_valid_and_agrees_with_oracle(case):
    cols, visits, t = case
    out = pack(cols, t, visits, PackParams(beam_width=0, threshold=10.0))
    assert out.feasible == exact_pack(cols, t, visits)
    if out.feasible:
        items = out.placement.items
        for i, a in enumerate(items):
            assert a.u >= -1e-9 and a.v >= -1e-9
            assert a.u + a.column.width <= t.surface_width + 1e-9
            assert a.v + a.column.length <= t.surface_length + 1e-9
            for j, b in enumerate(items[:i]):
                p1, d1 = visits[i]
                p2, d2 = visits[j]
                if p1 < d2 and p2 < d1:
                    assert not rects_overlap(a.u, a.v, a.column.width, a.column.length,
                                             b.u, b.v, b.column.width, b.column.length)
        assert check_sequence(out.placement, route_for(visits))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 15), st.lists(st.tuples(st.integers(0, 30), st.integers(0, 1)),
                                                       min_size=1, max_size=7))
def test_dock_occupancy_bounded(docks, handling, trucks_spec):
    # each truck: yard offset (distance to S) and whether it also stops at W2
    n = len(trucks_spec)
    locs = [loc("S", "supplier", 0, dock_count=docks, handling_time=handling),
            loc("W", "warehouse", 5, dock_count=1, handling_time=handling), loc("W2", "warehouse", 9)]
    locs += [loc(f"Y{i}", "truck-yard", -off - 1) for i, (off, _) in enumerate(trucks_spec)]
    trucks = [truck(f"T{i}", yard=f"Y{i}") for i in range(n)]
    ships = [ship(f"J{i}", "S", "W" if extra == 0 else "W2") for i, (_, extra) in enumerate(trucks_spec)]
    inst = make_instance(locs, trucks, ships)
    routes = [Route(f"T{i}", (Stop(f"Y{i}"), Stop("S", {f"J{i}"}), Stop(ships[i].destination, (), {f"J{i}"}),
                              Stop(f"Y{i}"))) for i in range(n)]
    rep = simulate_queues(routes, inst)
    for L in inst.locations:
        ev = [e for e in rep.events if e.location == L.id]
        for t in {e.service_start for e in ev}:
            assert sum(e.service_start <= t < e.service_end for e in ev) <= L.dock_count
    # FIFO: service never starts before arrival
    assert all(e.service_start >= e.arrival for e in rep.events)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.randoms(use_true_random=False))
def test_held_karp_brute_force(n, rng):
    conn = [[0.0 if a == b else rng.randint(1, 40) for b in range(n)] for a in range(n)]
    start = [rng.randint(1, 40) for _ in range(n)]
    end = [rng.randint(1, 40) for _ in range(n)]
    cost, order = kernels.held_karp(conn, start, end)

    def c(p):
        if not p:
            return 0.0
        return start[p[0]] + sum(conn[a][b] for a, b in zip(p, p[1:])) + end[p[-1]]
    assert cost == min(c(p) for p in itertools.permutations(range(n)))
    assert sorted(order) == list(range(n)) and c(list(order)) == cost


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 3))
def test_instance_round_trip(seed, n_ships, n_trucks):
    try:
        inst = generate_instance(tiny(seed, n_shipments=n_ships, n_trucks=n_trucks))
    except GeneratorError:  # fleet too small for the witness schedule
        return
    text = serialize_instance(inst)
    assert parse_instance(text) == inst
    assert serialize_instance(parse_instance(text)) == text
