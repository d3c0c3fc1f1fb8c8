"""Reproducible synthetic instances.

Suppliers sit in planar city clusters around a central plant area that
hosts the warehouses and truck yards. Every instance comes with a witness:
single-supplier trips, one truck each, timed through the dock-queue
simulation. Shipment windows are then drawn around the witness schedule, so
the witness stays feasible by construction.
"""
from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, replace

from .loading import _pallet_grid
from .model import (HORIZON, BinSpec, HubLink, Instance, Location, ModelError, PalletSpec, Shipment,
                    TimeWindow, TravelMatrices, Truck)

SPEED = 0.7  # distance units per minute

TRUCK_MODELS = (
    # model, width, length, cost per distance unit
    ("4.2m", 2.0, 4.2, 1.0),
    ("7.6m", 2.4, 7.6, 1.4),
    ("9.6m", 2.4, 9.6, 1.6),
    ("12m", 2.4, 12.0, 1.9),
    ("17.5m", 2.4, 17.5, 2.4),
)
SUPPLIER_OPENINGS = (0, 0, 120, 240, 360, 480, 600, 720)
BIN_WIDTHS = (0.6, 0.8, 1.0, 1.2)
BIN_LENGTHS = (0.4, 0.5, 0.6, 0.8, 1.0, 1.2)


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_suppliers: int = 10
    n_warehouses: int = 3
    n_shipments: int = 20
    n_trucks: int = 12
    n_cities: int = 3
    bin_variants: int = 12
    window_tightness: float = 0.5
    dock_count_range: tuple = (1, 3)
    n_yards: int = 2
    n_hubs: int = 0
    hub_shipment_pairs: int = 0
    max_columns: int = 4  # columns per shipment drawn from 1..max_columns
    pallet_fraction: float = 0.1
    side_constraint_rate: float = 0.0
    handling_range: tuple = (10, 30)
    truck_models: tuple = ("7.6m", "9.6m", "12m")
    region: float = 120.0  # spread of city centres around the plant
    city_radius: float = 15.0

    def __post_init__(self):
        for name in ("n_suppliers", "n_warehouses", "n_shipments", "n_trucks", "n_cities",
                     "bin_variants", "n_yards", "max_columns"):
            if getattr(self, name) < 1:
                raise GeneratorError(f"{name} must be positive")
        if not 0 < self.window_tightness <= 1:
            raise GeneratorError("window_tightness must be in (0, 1]")
        lo, hi = self.dock_count_range
        if not 1 <= lo <= hi:
            raise GeneratorError("dock_count_range must be an interval of positive integers")
        if 2 * self.hub_shipment_pairs > self.n_shipments:
            raise GeneratorError("too many hub shipment pairs for the shipment count")
        if self.hub_shipment_pairs and self.n_hubs < 1:
            raise GeneratorError("hub shipments need at least one hub")
        unknown = set(self.truck_models) - {m[0] for m in TRUCK_MODELS}
        if unknown:
            raise GeneratorError(f"unknown truck models {sorted(unknown)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)


def reference_scale(seed: int = 42, **kw) -> GeneratorConfig:
    """Counts of the reference industrial data set."""
    base = dict(seed=seed, n_suppliers=45, n_warehouses=8, n_shipments=311, n_trucks=150,
                n_cities=5, bin_variants=54, dock_count_range=(2, 4), n_yards=3)
    base.update(kw)
    return GeneratorConfig(**base)


def scaled_reference(n_shipments: int, seed: int = 42, **kw) -> GeneratorConfig:
    """The reference data set grown to ``n_shipments``: suppliers,
    warehouses and trucks scale with the shipment count, so shipments per
    supplier and dock stay at the reference density."""
    ref = reference_scale(seed)
    f = n_shipments / ref.n_shipments
    base = dict(n_shipments=n_shipments, n_suppliers=max(1, round(ref.n_suppliers * f)),
                n_warehouses=max(1, round(ref.n_warehouses * f)), n_trucks=max(1, round(ref.n_trucks * f)))
    base.update(kw)
    return reference_scale(seed, **base)


def tiny(seed: int, n_suppliers=2, n_warehouses=1, n_shipments=3, n_trucks=2, **kw) -> GeneratorConfig:
    """Oracle-sized instance: one column per shipment, small surfaces."""
    base = dict(seed=seed, n_suppliers=n_suppliers, n_warehouses=n_warehouses,
                n_shipments=n_shipments, n_trucks=n_trucks, n_cities=1, bin_variants=3,
                max_columns=1, pallet_fraction=0.0, n_yards=1, truck_models=("4.2m", "7.6m"),
                region=40.0, city_radius=10.0, dock_count_range=(1, 2))
    base.update(kw)
    return GeneratorConfig(**base)


def _travel(locs):
    ids = tuple(l.id for l in locs)
    dist, tt = [], []
    for a in locs:
        drow, trow = [], []
        for b in locs:
            if a.id == b.id:
                drow.append(0.0)
                trow.append(0)
                continue
            d = round(math.hypot(a.coords[0] - b.coords[0], a.coords[1] - b.coords[1]), 2)
            drow.append(d)
            trow.append(int(math.ceil(round(d / SPEED, 9))))
        dist.append(tuple(drow))
        tt.append(tuple(trow))
    return TravelMatrices(ids, tuple(dist), tuple(tt))


def _point(rng, cx, cy, r):
    ang = rng.uniform(0, 2 * math.pi)
    rad = r * math.sqrt(rng.random())
    return (round(cx + rad * math.cos(ang), 3), round(cy + rad * math.sin(ang), 3))


def generate_instance(config: GeneratorConfig) -> Instance:
    return generate_with_witness(config)[0]


def generate_with_witness(config: GeneratorConfig):
    """Returns (instance, witness) where witness maps shipment id -> truck id
    for a feasible single-trip-per-truck solution."""
    from .routing import build_tour
    from .evaluate import global_check

    cfg = config
    rng = random.Random(cfg.seed)
    handling = lambda: rng.randint(*cfg.handling_range)
    docks = lambda: rng.randint(*cfg.dock_count_range)

    # --- geometry
    centres = []
    for c in range(cfg.n_cities):
        ang = 2 * math.pi * (c + rng.random() * 0.5) / cfg.n_cities
        rad = cfg.region * (0.6 + 0.4 * rng.random())
        centres.append((rad * math.cos(ang), rad * math.sin(ang)))
    day = (0, HORIZON)
    locs = []
    yards = []
    for k in range(cfg.n_yards):
        yards.append(Location(f"Y{k}", "truck-yard", day, 1, 0, "plant",
                              coords=_point(rng, 0.0, 0.0, cfg.city_radius)))
    warehouses = [Location(f"W{k}", "warehouse", day, docks(), handling(), "plant",
                           coords=_point(rng, 0.0, 0.0, cfg.city_radius))
                  for k in range(cfg.n_warehouses)]
    suppliers = []
    for k in range(cfg.n_suppliers):
        c = k % cfg.n_cities if k < cfg.n_cities else rng.randrange(cfg.n_cities)
        cx, cy = centres[c]
        # staggered opening hours spread the witness trips over the day
        o = rng.choice(SUPPLIER_OPENINGS)
        suppliers.append(Location(f"S{k}", "supplier", (o, min(HORIZON, o + rng.randint(480, 840))),
                                  docks(), handling(), f"C{c}",
                                  coords=_point(rng, cx, cy, cfg.city_radius)))
    hubs = [Location(f"H{k}", "hub", day, docks(), handling(), f"H{k}",
                     coords=_point(rng, 0.0, 0.0, cfg.region * 0.4))
            for k in range(cfg.n_hubs)]
    locs = yards + warehouses + suppliers + hubs

    # --- bins and trucks
    combos = [(w, l, s) for w in BIN_WIDTHS for l in BIN_LENGTHS for s in (1, 2, 3, 4)]
    rng.shuffle(combos)
    variants = [BinSpec(w, l, round(0.3 + 0.1 * s, 1), s) for (w, l, s) in combos[:cfg.bin_variants]]
    models = [m for m in TRUCK_MODELS if m[0] in cfg.truck_models]
    trucks = []
    for k in range(cfg.n_trucks):
        name, w, l, cost = models[k % len(models)] if k < len(models) else rng.choice(models)
        trucks.append(Truck(f"T{k:03d}", name, w, l, name, cost, yards[k % len(yards)].id))
    pallet = PalletSpec()

    # --- shipments
    prefs = {s.id: rng.sample([w.id for w in warehouses], min(len(warehouses), rng.randint(1, 2)))
             for s in suppliers}
    n_pairs = cfg.hub_shipment_pairs
    n_direct = cfg.n_shipments - 2 * n_pairs

    def make_bins():
        b = rng.choice(variants)
        pal = rng.random() < cfg.pallet_fraction and b.width <= pallet.width and b.length <= pallet.length
        cols = rng.randint(1, cfg.max_columns)
        if pal:
            cap = len(_pallet_grid(b, pallet)) * b.stack_limit
            count = rng.randint(1, cap * pallet.stack_limit * max(1, cols // 2))
        else:
            count = rng.randint((cols - 1) * b.stack_limit + 1, cols * b.stack_limit)
        return b, pal, count

    shipments = []
    sup_order = [suppliers[k % len(suppliers)] for k in range(n_direct)]
    rng.shuffle(sup_order)
    for k in range(n_direct):
        s = sup_order[k]
        b, pal, count = make_bins()
        shipments.append(Shipment(f"J{k:04d}", s.id, rng.choice(prefs[s.id]), count, b, pal))
    links = []
    for k in range(n_pairs):
        s = rng.choice(suppliers)
        h = rng.choice(hubs)
        b, pal, count = make_bins()
        up = Shipment(f"J{n_direct + 2 * k:04d}", s.id, h.id, count, b, pal)
        down = Shipment(f"J{n_direct + 2 * k + 1:04d}", h.id, rng.choice(warehouses).id, count, b, pal)
        shipments += [up, down]
        links.append(HubLink(up.id, down.id))

    inst = Instance(tuple(locs), _travel(locs), tuple(trucks), tuple(shipments), tuple(links), pallet)

    # --- witness: single-source trips, one truck each, biggest trucks first
    fleet = sorted(trucks, key=lambda t: (-t.area, t.id))
    by_source = {}
    for s in shipments:
        by_source.setdefault(s.source, []).append(s)
    trips = []  # (truck, [shipments])
    free = list(fleet)
    for src in sorted(by_source):
        pending = sorted(by_source[src], key=lambda s: s.id)
        while pending:
            if not free:
                raise GeneratorError("fleet too small for the witness schedule")
            truck = free.pop(0)
            load = []
            for s in list(pending):
                res = _witness_tour(build_tour, truck, load + [s], inst)
                if res.feasible:
                    load.append(s)
                    pending.remove(s)
            if not load:
                raise GeneratorError(f"shipment {pending[0].id} fits no truck")
            trips.append((truck, load))

    for attempt in range(50):
        results = [_witness_tour(build_tour, t, load, inst) for t, load in trips]
        if not all(r.feasible for r in results):
            raise GeneratorError("witness trip became infeasible")
        rep = global_check([r.route for r in results], inst)
        if rep.feasible:
            break
        # relieve the congested locations and try again
        bump = {v.location for v in rep.violations}
        locs = [replace(l, dock_count=l.dock_count + 1) if l.id in bump and l.kind != "truck-yard" else l
                for l in inst.locations]
        inst = replace(inst, locations=tuple(locs))
    else:
        raise GeneratorError("could not make the witness schedule feasible")

    # --- windows around the witness schedule
    times = {}
    for r in rep.routes:
        for st in r.stops[1:-1]:
            start = st.departure - inst.loc[st.location].handling_time
            ready = min(start, max(st.arrival, inst.loc[st.location].window.open))
            for j in st.pickups:
                times[("p", j)] = (ready, start, st.departure)
            for j in st.deliveries:
                times[("d", j)] = (ready, start, st.departure)
    pad_max = int(round(30 + (1.0 - cfg.window_tightness) * 600))

    def around(ready, start, end):
        lo = max(0, ready - rng.randint(0, pad_max))
        hi = min(HORIZON, end + rng.randint(10, 10 + pad_max))
        return TimeWindow(lo, max(hi, end))

    new_ships = []
    for s in inst.shipments:
        new_ships.append(replace(s, pickup_window=around(*times[("p", s.id)]),
                                 delivery_window=around(*times[("d", s.id)])))
    inst = replace(inst, shipments=tuple(new_ships))

    # --- location working windows and company rules, all compatible with the witness
    visits = {}
    lengths = {}
    firsts, lasts = {}, {}
    for r in rep.routes:
        truck = inst.truck[r.truck]
        inner = r.stops[1:-1]
        for k, st in enumerate(inner):
            visits.setdefault(st.location, []).append(st)
            lengths.setdefault(st.location, set()).add(truck.length_class)
            firsts.setdefault(st.location, True)
            lasts.setdefault(st.location, True)
            firsts[st.location] &= k == 0
            lasts[st.location] &= k == len(inner) - 1
    all_classes = sorted({t.length_class for t in trucks})
    new_locs = []
    for l in inst.locations:
        if l.kind == "truck-yard" or l.id not in visits:
            new_locs.append(l)
            continue
        if l.kind == "supplier":
            # opening hours were fixed before the witness was timed
            open_, close = l.window
        else:
            # opening no later than the first witness arrival keeps every ready time unchanged
            first_arrival = min(st.arrival for st in visits[l.id])
            last_end = max(st.departure for st in visits[l.id])
            open_ = max(0, min(first_arrival, rng.choice((0, 240, 300, 360, 420))))
            close = min(HORIZON, max(last_end, rng.choice((1080, 1200, 1320, 1440))))
        kw = dict(window=TimeWindow(open_, close))
        if cfg.side_constraint_rate > 0:
            if rng.random() < cfg.side_constraint_rate and l.kind == "supplier":
                extra = [c for c in all_classes if c not in lengths[l.id]]
                keep = set(lengths[l.id]) | set(rng.sample(extra, len(extra) // 2))
                kw["allowed_truck_lengths"] = frozenset(keep)
            if rng.random() < cfg.side_constraint_rate:
                kw["max_visits"] = len(visits[l.id]) + rng.randint(0, 2)
            if rng.random() < cfg.side_constraint_rate and l.kind == "supplier" and firsts[l.id]:
                kw["must_be_first"] = True
            elif rng.random() < cfg.side_constraint_rate and l.kind == "warehouse" and lasts[l.id]:
                kw["must_be_last"] = True
        new_locs.append(replace(l, **kw))
    inst = replace(inst, locations=tuple(new_locs))
    witness = {j: t.id for t, load in trips for j in (s.id for s in load)}
    return inst, witness


def _witness_tour(build_tour, truck, load, inst):
    """Supplier first, then its warehouses nearest-neighbour (hubs included)."""
    from .params import SolverParams
    from .loading import PackParams

    src = load[0].source
    drops = {}
    for s in load:
        drops.setdefault(s.destination, set()).add(s.id)
    order, cur = [], src
    rest = set(drops)
    while rest:
        nxt = min(rest, key=lambda d: (inst.dist(cur, d), d))
        order.append(nxt)
        rest.discard(nxt)
        cur = nxt
    trip = [(src, frozenset(s.id for s in load), frozenset())]
    trip += [(d, frozenset(), frozenset(drops[d])) for d in order]
    return build_tour(truck, [trip], inst, SolverParams())
