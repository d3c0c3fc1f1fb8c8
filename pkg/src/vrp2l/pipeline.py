"""construct -> tabu search -> post-optimization, with a mileage summary."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .construct import initial_solution
from .model import Instance, Solution
from .params import SolverParams
from .postopt import post_optimize
from .routing import clear_route_cache
from .tabu import tabu_search


@dataclass
class PipelineResult:
    solution: Solution
    initial_mileage: float
    tabu_mileage: float
    postopt_mileage: float | None  # None when post-optimization is disabled
    seconds: dict = field(default_factory=dict)
    telemetry: list = field(default_factory=list)  # (iteration, elapsed_ms, current, best)

    def summary(self) -> dict:
        out = {"initial_mileage": self.initial_mileage, "tabu_mileage": self.tabu_mileage}
        if self.postopt_mileage is not None:
            out["postopt_mileage"] = self.postopt_mileage
        out["final_mileage"] = self.solution.total_mileage
        out["feasible"] = self.solution.feasible
        out["trucks_used"] = len(self.solution.routes)
        out["seconds"] = {k: round(v, 3) for k, v in self.seconds.items()}
        tabu = self.solution.diagnostics.get("tabu")
        if tabu:
            out["tabu"] = dict(tabu)
        return out


def run_pipeline(instance: Instance, params: SolverParams = SolverParams(), on_candidate=None,
                 fresh_cache: bool = True) -> PipelineResult:
    """Run the three stages; raises ConstructionError if no initial solution exists."""
    if fresh_cache:
        clear_route_cache()
    secs = {}
    t = time.perf_counter()
    x0 = initial_solution(instance, params)
    secs["construct"] = time.perf_counter() - t
    telemetry = []
    t = time.perf_counter()
    x1 = tabu_search(x0, instance, params, telemetry=telemetry, on_candidate=on_candidate)
    secs["tabu"] = time.perf_counter() - t
    x2, post = x1, None
    if params.postopt:
        t = time.perf_counter()
        x2 = post_optimize(x1, instance, params)
        secs["postopt"] = time.perf_counter() - t
        post = x2.total_mileage
    return PipelineResult(x2, x0.total_mileage, x1.total_mileage, post, secs, telemetry)
