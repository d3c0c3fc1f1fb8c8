"""Whole-solution feasibility across trucks and solution assembly."""
from __future__ import annotations

from collections import Counter

from .model import (Instance, Placement, Solution, families_ok, route_cost, total_mileage,
                    validate_solution)
from .schedule import GtwReport, QueueViolation, simulate_queues


def visit_violations(routes, instance: Instance) -> list:
    """Locations visited more often than their max_visits allows."""
    counts = Counter(st.location for r in routes for st in r.stops[1:-1])
    out = []
    for lid, c in sorted(counts.items()):
        cap = instance.loc[lid].max_visits
        if cap is not None and c > cap:
            trucks = tuple(sorted({r.truck for r in routes
                                   if any(st.location == lid for st in r.stops[1:-1])}))
            out.append(QueueViolation("side-constraints", lid, None, trucks,
                                      f"{c} visits exceed max_visits {cap}"))
    return out


def global_check(routes, instance: Instance) -> GtwReport:
    """Dock queues, hub transfers and visit caps over a set of routes."""
    rep = simulate_queues(routes, instance)
    extra = visit_violations(rep.routes, instance)
    if not extra:
        return rep
    return GtwReport(False, rep.waits, rep.violations + tuple(extra), rep.events, rep.routes)


def bad_trucks(report: GtwReport) -> list:
    return sorted({t for v in report.violations for t in v.trucks})


def assemble(instance: Instance, assignment: dict, routes, placements, report: GtwReport | None = None,
             diagnostics: dict | None = None, validate: bool = True) -> Solution:
    """Build a Solution from per-truck routes/placements, timing them with
    the dock-queue simulation."""
    routes = [r for r in routes if r.n_stops > 1 or r.shipments]
    if report is None:
        report = global_check(routes, instance)
    timed = tuple(sorted(report.routes, key=lambda r: r.truck))
    used = {r.truck for r in timed}
    places = tuple(sorted((p for p in placements if p.truck in used), key=lambda p: p.truck))
    sol = Solution(dict(sorted(assignment.items())), timed, places, 0.0)
    mileage = total_mileage(sol, instance)
    diag = dict(diagnostics or {})
    diag["gtw"] = {
        "feasible": report.feasible,
        "waits": {f"{t}:{k}": w for (t, k), w in sorted(report.waits.items())},
        "violations": [list(v) for v in report.violations],
    }
    sol = Solution(sol.assignment, timed, places, mileage, {}, diag)
    if validate:
        feas = families_ok(validate_solution(sol, instance))
    else:
        feas = {"A2": report.feasible}
    return Solution(sol.assignment, timed, places, mileage, feas, diag)


def solution_cost(routes, instance: Instance) -> float:
    return sum(route_cost(r, instance) for r in sorted(routes, key=lambda r: r.truck))
