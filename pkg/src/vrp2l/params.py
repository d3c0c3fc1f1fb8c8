"""Solver parameters shared by the pipeline stages and the CLI."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .loading import PackParams


@dataclass(frozen=True)
class SolverParams:
    pack: PackParams = field(default_factory=PackParams)
    route_node_budget: int = 200_000
    cluster_radius_scale: float = 1.0
    repair_rounds: int = 10
    # tabu search
    budget_seconds: float | None = None
    iterations: int | None = None
    tenure: int | None = None  # None: ceil(sqrt(#bundles))
    bundle_threshold: int | None = None
    bundling: bool = True
    workers: int = 1
    seed: int = 0
    # post-optimization
    postopt: bool = True
    held_karp_cap: int = 15

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pack"]["weights"] = list(d["pack"]["weights"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverParams":
        d = dict(d)
        pk = dict(d.pop("pack", {}))
        if "weights" in pk:
            pk["weights"] = tuple(pk["weights"])
        return cls(pack=PackParams(**pk), **d)
