"""Shared builders for hand-made instances."""
import math

import pytest

from vrp2l.model import BinSpec, Instance, Location, Shipment, TravelMatrices, Truck


def loc(id, kind, x, y=0.0, window=(0, 1440), **kw):
    return Location(id, kind, window, coords=(float(x), float(y)), **kw)


def truck(id, yard="Y", width=2.4, length=7.6, cls="7.6m", cost=1.0, model=None):
    return Truck(id, model or cls, width, length, cls, cost, yard)


def ship(id, src, dst, n=1, w=1.0, l=1.0, stack=1, **kw):
    return Shipment(id, src, dst, n, BinSpec(w, l, 1.0, stack), **kw)


def make_instance(locations, trucks, shipments, hub_links=(), speed=1.0, dist=None):
    """Euclidean distances from the location coordinates (or ``dist``, a
    square list of lists), travel time = ceil(distance / speed)."""
    ids = tuple(l.id for l in locations)
    if dist is None:
        dist = [[0.0 if a is b else math.dist(a.coords, b.coords) for b in locations] for a in locations]
    D = tuple(tuple(float(x) for x in row) for row in dist)
    T = tuple(tuple(int(math.ceil(x / speed - 1e-9)) for x in row) for row in D)
    return Instance(tuple(locations), TravelMatrices(ids, D, T), tuple(trucks), tuple(shipments),
                    tuple(hub_links))


@pytest.fixture
def line_instance():
    """Yard at 0, supplier S at 10, warehouse W at 20; two shipments S->W."""
    locs = [loc("Y", "truck-yard", 0), loc("S", "supplier", 10, handling_time=5),
            loc("W", "warehouse", 20, handling_time=5)]
    return make_instance(locs, [truck("T1")], [ship("J1", "S", "W"), ship("J2", "S", "W")])


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """``criterion(n, ok, detail)`` prints one PASS/FAIL line (also repeated
    in the terminal summary) and returns ``ok``."""
    def report(n, ok, detail):
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
