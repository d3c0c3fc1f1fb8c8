import pytest

from conftest import ship, truck
from vrp2l.loading import (PackParams, build_columns, check_sequence, clear_cache, pack,
                           pallet_arrangement_ok, prejudge, rects_overlap)
from vrp2l.model import Column, PalletSpec, Placement, PlacedItem, Route, Stop
from vrp2l.oracle import exact_pack


def col(j, w=1.0, l=1.0, i=0):
    return Column(j, i, w, l, 1)


def test_columns_ceiling_division():
    cols = build_columns(ship("J", "S", "W", n=10, stack=4), PalletSpec())
    assert [c.layers for c in cols] == [4, 4, 2]
    assert [c.index for c in cols] == [0, 1, 2]


def test_single_bin_column():
    cols = build_columns(ship("J", "S", "W", n=1, stack=1), PalletSpec())
    assert len(cols) == 1 and cols[0].layers == 1


def test_palletised_columns():
    s = ship("J", "S", "W", n=8, w=0.5, l=0.5, stack=1, needs_pallet=True)
    pallet = PalletSpec(1.0, 1.0, 2)
    cols = build_columns(s, pallet)
    assert all(c.on_pallet for c in cols)
    loads = [load for c in cols for load in c.pallet_loads]
    assert [len(load) for load in loads] == [4, 4]
    assert sum(c.bins for c in cols) == 8
    for c in cols:
        assert c.layers <= pallet.stack_limit
        assert pallet_arrangement_ok(c.pallet_loads, s.bin, pallet)


def test_pallet_arrangement_rejects_overlap():
    s = ship("J", "S", "W", w=0.5, l=0.5)
    assert not pallet_arrangement_ok((((0.0, 0.0, 1), (0.25, 0.0, 1)),), s.bin, PalletSpec(1.0, 1.0, 2))


def test_prejudge():
    t = truck("T", width=2.0, length=5.0)
    assert prejudge([], t, 0.9)
    assert not prejudge([col("J", 2.0, 4.75)], t, 0.9)  # 95% of the surface
    assert prejudge([col("J", 2.0, 4.5)], t, 0.9)


def test_two_unit_columns_fill_a_2x1_surface():
    t = truck("T", width=2.0, length=1.0)
    out = pack([col("A"), col("B")], t, [(1, 2), (1, 2)])
    assert out.feasible
    assert sorted((it.u, it.v) for it in out.placement.items) == [(0.0, 0.0), (1.0, 0.0)]


def test_oversized_column():
    out = pack([col("A", 3.0, 1.0)], truck("T", width=2.0, length=2.0), [(1, 2)])
    assert not out.feasible and out.reject_reason == "no-arrangement"


def _route(order):
    """Route with one stop per event in ``order`` = [(location, picks, drops)]."""
    return Route("T", (Stop("Y"),) + tuple(Stop(l, p, d) for l, p, d in order) + (Stop("Y"),))


def test_check_sequence_single_item():
    r = _route([("S", {"A"}, ()), ("W", (), {"A"})])
    assert check_sequence(Placement("T", (PlacedItem(col("A"), 0.0, 0.0),)), r)


def test_check_sequence_blocking():
    # A is delivered first; B (delivered later) sits between A and the door
    r = _route([("S", {"A", "B"}, ()), ("W1", (), {"A"}), ("W2", (), {"B"})])
    blocked = Placement("T", (PlacedItem(col("A"), 0.0, 1.0), PlacedItem(col("B"), 0.0, 0.0)))
    assert not check_sequence(blocked, r)
    fine = Placement("T", (PlacedItem(col("A"), 0.0, 0.0), PlacedItem(col("B"), 0.0, 1.0)))
    assert check_sequence(fine, r)


def test_pack_respects_sequence_in_a_single_lane():
    t = truck("T", width=1.0, length=2.0)
    out = pack([col("A"), col("B")], t, [(1, 2), (1, 3)])
    assert out.feasible
    pos = {it.column.shipment: it.v for it in out.placement.items}
    assert pos["A"] < pos["B"]  # v = 0 is the door end
    # both must pass each other: no arrangement
    out = pack([col("A"), col("B")], t, [(1, 3), (2, 4)])
    assert not out.feasible and out.reject_reason == "sequence"


def test_pack_determinism():
    t = truck("T", width=2.4, length=4.0)
    cols = [col("A", 1.2, 1.0), col("B", 0.8, 1.2), col("C", 1.0, 1.0), col("D", 0.6, 0.8)]
    vis = [(1, 5), (2, 5), (3, 6), (1, 6)]
    clear_cache()
    a = pack(cols, t, vis, PackParams(beam_width=3, exact_up_to=0))
    clear_cache()
    b = pack(cols, t, vis, PackParams(beam_width=3, exact_up_to=0))
    assert a == b


def test_pack_output_is_geometrically_valid():
    t = truck("T", width=2.4, length=3.0)
    cols = [col("A", 1.2, 1.0), col("B", 1.2, 1.0), col("C", 0.8, 1.2), col("D", 1.0, 1.0)]
    vis = [(1, 4), (1, 3), (2, 4), (2, 3)]
    out = pack(cols, t, vis)
    assert out.feasible == exact_pack(cols, t, vis)
    items = out.placement.items
    for i, a in enumerate(items):
        c = a.column
        assert 0 <= a.u and a.u + c.width <= t.surface_width + 1e-9
        assert 0 <= a.v and a.v + c.length <= t.surface_length + 1e-9
        for b in items[:i]:
            assert not rects_overlap(a.u, a.v, c.width, c.length, b.u, b.v, b.column.width, b.column.length)


def test_rects_touching_do_not_overlap():
    assert not rects_overlap(0, 0, 1, 1, 1, 0, 1, 1)
    assert rects_overlap(0, 0, 1, 1, 0.5, 0.5, 1, 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_exact_up_to_matches_oracle_on_columns(n):
    t = truck("T", width=1.0, length=float(n))
    cols = [col(f"J{i}") for i in range(n)]
    vis = [(i, 10 + i) for i in range(n)]  # first on, first off: only one lane
    assert pack(cols, t, vis).feasible == exact_pack(cols, t, vis) == (n == 1)
