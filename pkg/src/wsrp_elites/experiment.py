"""Single runs as self-describing records, and the batch protocol over instances and seeds."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .domain import Instance
from .ea import EaConfig, population_archive, run_ea
from .map_elites import ArchiveConfig, MapElitesConfig, calibrate_bounds, run_map_elites
from .metrics import RunRecord, instance_digest, load_run, save_run

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunSpec:
    algorithm: str  # "me" or "ea"
    seed: int
    budget: int = 100_000
    init_count: int = 1000
    crossover_probability: float = 0.5
    mode_flip_probability: float = 0.1
    population_size: int = 100
    children_per_generation: int = 40
    mutation_rate: float = 0.7
    bins_per_dim: int = 20
    calibration: str = "pilot"
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    ea_trace: bool = False

    def __post_init__(self):
        if self.algorithm not in ("me", "ea"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def archive_config(self) -> ArchiveConfig:
        return ArchiveConfig(self.bins_per_dim, self.lower, self.upper, calibration=self.calibration)

    def config_dict(self) -> dict:
        d = asdict(self)
        d.pop("seed")
        d.pop("lower")
        d.pop("upper")
        if self.algorithm == "me":
            for k in ("population_size", "children_per_generation", "mutation_rate", "ea_trace"):
                d.pop(k)
        else:
            d.pop("init_count")
        return d


def execute(instance: Instance, spec: RunSpec, backend: str | None = None) -> tuple[RunRecord, object]:
    """Run one algorithm; returns the record and the raw result (MapElitesResult or EaResult)."""
    ac = calibrate_bounds(instance, spec.archive_config())
    digest = instance_digest(instance)
    if spec.algorithm == "me":
        cfg = MapElitesConfig(
            spec.budget, spec.init_count, spec.crossover_probability, spec.mode_flip_probability, spec.seed
        )
        res = run_map_elites(instance, cfg, ac, backend=backend)
        archive = res.archive
    else:
        cfg = EaConfig(
            population_size=spec.population_size,
            children_per_generation=spec.children_per_generation,
            mutation_rate=spec.mutation_rate,
            crossover_probability=spec.crossover_probability,
            mode_flip_probability=spec.mode_flip_probability,
            evaluation_budget=spec.budget,
            seed=spec.seed,
        )
        res = run_ea(instance, cfg, archive_config=ac, archive_trace=spec.ea_trace, backend=backend)
        tours, modes, _ = res.population
        archive = population_archive(instance, tours, modes, ac)
    record = RunRecord(
        algorithm=spec.algorithm,
        instance_name=instance.name,
        instance_digest=digest,
        seed=spec.seed,
        config=spec.config_dict(),
        archive=archive,
        best_objective=res.best_objective,
        evaluations=res.evaluations,
        checkpoints=list(res.history),
    )
    return record, res


def execute_to_dir(instance: Instance, spec: RunSpec, out_dir, backend: str | None = None) -> RunRecord:
    from .export import export_archive

    record, res = execute(instance, spec, backend)
    save_run(record, out_dir)
    trace = getattr(res, "trace_archive", None)
    if trace is not None:
        export_archive(trace, Path(out_dir) / "trace_archive.csv")
    return record


def _job(args):
    instance_path, spec, out_dir, backend = args
    from .instances import load_instance

    rec = execute_to_dir(load_instance(instance_path), spec, out_dir, backend)
    return str(out_dir), rec.best_objective


def run_many(jobs: list[tuple], workers: int = 1) -> list[tuple[str, float]]:
    """Run ``(instance_path, RunSpec, out_dir, backend)`` tuples, in parallel processes when ``workers > 1``."""
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def load_runs(dirs) -> list[RunRecord]:
    return [load_run(d) for d in dirs]
