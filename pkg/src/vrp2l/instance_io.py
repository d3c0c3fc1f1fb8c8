"""JSON documents for instances and solutions.

Both documents are single UTF-8 JSON objects with ``schema_version`` 1;
the schemas live in ``vrp2l/schemas``. ``serialize_*`` writes the canonical
form (sorted keys, one-space indent, trailing newline), so equal objects
give equal bytes and ``parse(serialize(x)) == x``.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from .model import (BinSpec, Column, HubLink, Instance, Location, ModelError, PalletSpec, Placement,
                    PlacedItem, Route, Shipment, Solution, Stop, TravelMatrices, Truck, total_mileage)

SCHEMA_VERSION = 1


class FormatError(ModelError):
    """Malformed document. ``path`` locates the offending field (JSON
    pointer style), ``line`` the text line for JSON syntax errors."""

    def __init__(self, message, path="", line=None):
        where = f" at line {line}" if line is not None else (f" at {path}" if path else "")
        super().__init__(f"{message}{where}")
        self.path = path
        self.line = line


@lru_cache(maxsize=None)
def _schema(name):
    text = resources.files("vrp2l").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _load(text, schema):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    validator = jsonschema.Draft202012Validator(_schema(schema))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/" + "/".join(str(p) for p in e.absolute_path)
        raise FormatError(f"schema violation: {e.message}", path=path)
    return doc


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- instances

def instance_to_dict(inst: Instance) -> dict:
    locs = []
    for l in inst.locations:
        locs.append({
            "id": l.id, "kind": l.kind, "window": list(l.window), "dock_count": l.dock_count,
            "handling_time": l.handling_time, "city": l.city,
            "allowed_truck_lengths": None if l.allowed_truck_lengths is None else sorted(l.allowed_truck_lengths),
            "max_visits": l.max_visits, "must_be_first": l.must_be_first, "must_be_last": l.must_be_last,
            "coords": None if l.coords is None else list(l.coords),
        })
    tm = inst.travel
    return {
        "schema_version": SCHEMA_VERSION,
        "locations": locs,
        "matrices": {"ids": list(tm.ids), "distance": [list(r) for r in tm.distance],
                     "travel_time": [list(r) for r in tm.travel_time]},
        "trucks": [{"id": t.id, "model": t.model, "surface_width": t.surface_width,
                    "surface_length": t.surface_length, "length_class": t.length_class,
                    "cost_per_distance": t.cost_per_distance, "home_yard": t.home_yard}
                   for t in inst.trucks],
        "shipments": [{"id": s.id, "source": s.source, "destination": s.destination,
                       "bin_count": s.bin_count,
                       "bin": {"width": s.bin.width, "length": s.bin.length, "height": s.bin.height,
                               "stack_limit": s.bin.stack_limit},
                       "needs_pallet": s.needs_pallet, "pickup_window": list(s.pickup_window),
                       "delivery_window": list(s.delivery_window)}
                      for s in inst.shipments],
        "hub_links": [{"upstream": h.upstream, "downstream": h.downstream} for h in inst.hub_links],
        "pallet": {"width": inst.pallet.width, "length": inst.pallet.length,
                   "stack_limit": inst.pallet.stack_limit},
    }


def _entity(kind, idx, d, build):
    try:
        return build()
    except ModelError as e:
        name = d.get("id", idx) if isinstance(d, dict) else idx
        raise FormatError(f"{kind} {name!r}: {e}", path=f"/{kind}s/{idx}") from None
    except (TypeError, ValueError) as e:
        raise FormatError(f"{kind} {idx}: {e}", path=f"/{kind}s/{idx}") from None


def instance_from_dict(doc: dict) -> Instance:
    locs = []
    for i, d in enumerate(doc["locations"]):
        locs.append(_entity("location", i, d, lambda d=d: Location(
            d["id"], d["kind"], tuple(d["window"]), d.get("dock_count", 1), d.get("handling_time", 0),
            d.get("city", ""),
            None if d.get("allowed_truck_lengths") is None else frozenset(d["allowed_truck_lengths"]),
            d.get("max_visits"), d.get("must_be_first", False), d.get("must_be_last", False),
            None if d.get("coords") is None else tuple(d["coords"]))))
    m = doc["matrices"]
    try:
        travel = TravelMatrices(tuple(m["ids"]), tuple(tuple(float(x) for x in r) for r in m["distance"]),
                                tuple(tuple(int(x) for x in r) for r in m["travel_time"]))
    except ModelError as e:
        raise FormatError(f"matrices: {e}", path="/matrices") from None
    trucks = [_entity("truck", i, d, lambda d=d: Truck(
        d["id"], d["model"], float(d["surface_width"]), float(d["surface_length"]), d["length_class"],
        float(d["cost_per_distance"]), d["home_yard"])) for i, d in enumerate(doc["trucks"])]
    ships = []
    for i, d in enumerate(doc["shipments"]):
        def build(d=d):
            b = d["bin"]
            kw = {}
            for k in ("pickup_window", "delivery_window"):
                if k in d:
                    kw[k] = tuple(d[k])
            return Shipment(d["id"], d["source"], d["destination"], d["bin_count"],
                            BinSpec(float(b["width"]), float(b["length"]), float(b.get("height", 1.0)),
                                    b.get("stack_limit", 1)),
                            d.get("needs_pallet", False), **kw)
        ships.append(_entity("shipment", i, d, build))
    links = tuple(HubLink(h["upstream"], h["downstream"]) for h in doc.get("hub_links", []))
    p = doc.get("pallet", {})
    try:
        pallet = PalletSpec(float(p.get("width", 1.2)), float(p.get("length", 1.0)), p.get("stack_limit", 2))
        return Instance(tuple(locs), travel, tuple(trucks), tuple(ships), links, pallet)
    except ModelError as e:
        raise FormatError(str(e)) from None


def parse_instance(text) -> Instance:
    """Instance from document text; FormatError names the field or entity at fault."""
    return instance_from_dict(_load(text, "instance"))


def serialize_instance(inst: Instance) -> str:
    return _dump(instance_to_dict(inst))


# ---------------------------------------------------------------- solutions

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    return x


def solution_to_dict(sol: Solution) -> dict:
    routes = [{"truck": r.truck, "trip_starts": list(r.trip_starts),
               "stops": [{"location": s.location, "pickups": sorted(s.pickups),
                          "deliveries": sorted(s.deliveries), "arrival": s.arrival, "wait": s.wait,
                          "departure": s.departure} for s in r.stops]}
              for r in sol.routes]
    places = [{"truck": p.truck,
               "items": [{"shipment": it.column.shipment, "index": it.column.index,
                          "width": it.column.width, "length": it.column.length,
                          "layers": it.column.layers, "on_pallet": it.column.on_pallet,
                          "pallet_loads": [[list(c) for c in load] for load in it.column.pallet_loads],
                          "u": it.u, "v": it.v} for it in p.items]}
              for p in sol.placements]
    return {"schema_version": SCHEMA_VERSION, "assignment": dict(sol.assignment), "routes": routes,
            "placements": places, "total_mileage": sol.total_mileage,
            "feasibility": dict(sol.feasibility), "diagnostics": _jsonable(dict(sol.diagnostics))}


def solution_from_dict(doc: dict) -> Solution:
    routes = []
    for r in doc["routes"]:
        stops = tuple(Stop(s["location"], frozenset(s.get("pickups", ())), frozenset(s.get("deliveries", ())),
                           s["arrival"], s.get("wait", s["departure"] - s["arrival"]), s["departure"])
                      for s in r["stops"])
        routes.append(Route(r["truck"], stops, tuple(r.get("trip_starts", (1,)))))
    places = []
    for p in doc["placements"]:
        items = []
        for it in p["items"]:
            loads = tuple(tuple((float(u), float(v), int(n)) for (u, v, n) in load)
                          for load in it.get("pallet_loads", ()))
            col = Column(it["shipment"], it["index"], float(it["width"]), float(it["length"]), it["layers"],
                         it.get("on_pallet", False), loads)
            items.append(PlacedItem(col, float(it["u"]), float(it["v"])))
        places.append(Placement(p["truck"], tuple(items)))
    return Solution(dict(doc["assignment"]), tuple(routes), tuple(places), float(doc["total_mileage"]),
                    dict(doc.get("feasibility", {})), dict(doc.get("diagnostics", {})))


def parse_solution(text) -> Solution:
    return solution_from_dict(_load(text, "solution"))


def write_solution(solution: Solution, instance: Instance | None = None) -> str:
    """Solution document: timed routes, placements with coordinates and the
    total mileage (recomputed from ``instance`` when given)."""
    if instance is not None:
        solution = Solution(solution.assignment, solution.routes, solution.placements,
                            total_mileage(solution, instance), solution.feasibility, solution.diagnostics)
    return _dump(solution_to_dict(solution))


serialize_solution = write_solution
