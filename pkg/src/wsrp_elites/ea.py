"""Baseline steady-state EA sharing representation and operators with MAP-Elites."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .decoder import decode
from .domain import Characteristics, Genotype, Instance, Phenotype
from .errors import ConfigError
from .map_elites import Archive, ArchiveConfig, archive_from_core, calibrate_bounds, checkpoints, random_genotypes


@dataclass(frozen=True)
class EaConfig:
    population_size: int = 100
    children_per_generation: int = 40
    tournament_size: int = 2
    mutation_rate: float = 0.7
    crossover_probability: float = 0.5
    mode_flip_probability: float = 0.1
    evaluation_budget: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population size must be >= 2")
        if self.children_per_generation < 1:
            raise ConfigError("children per generation must be >= 1")
        if self.tournament_size != 2:
            raise ConfigError("only binary tournaments are supported")
        for name in ("mutation_rate", "crossover_probability", "mode_flip_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.evaluation_budget < self.population_size:
            raise ConfigError(
                f"evaluation budget {self.evaluation_budget} is smaller than the population size {self.population_size}"
            )


@dataclass
class EaResult:
    best: Genotype
    best_phenotype: Phenotype
    history: list[tuple[int, float]]
    evaluations: int
    population: tuple[np.ndarray, np.ndarray, np.ndarray]  # tours, modes, fitness metres
    trace_archive: Archive | None = None

    @property
    def best_objective(self) -> float:
        return self.best_phenotype.objective


def population_archive(instance: Instance, tours, modes, config: ArchiveConfig) -> Archive:
    """Project a population into archive space, keeping the best individual per cell."""
    config = calibrate_bounds(instance, config)
    fits = np.empty(len(tours), dtype=np.int64)
    chars = np.empty((len(tours), 4))
    kernels.evaluate_batch(
        instance.arrays, np.ascontiguousarray(tours, dtype=np.int32), np.ascontiguousarray(modes, dtype=np.int8), fits, chars
    )
    archive = Archive(config)
    for k in range(len(fits)):
        archive.try_insert(Genotype(tours[k], modes[k]), int(fits[k]) / 1000.0, Characteristics(*map(float, chars[k])))
    return archive


def run_ea(
    instance: Instance,
    config: EaConfig,
    *,
    archive_config: ArchiveConfig | None = None,
    archive_trace: bool = False,
    backend: str | None = None,
) -> EaResult:
    """Steady-state EA; initial population evaluations count against the budget.

    With ``archive_trace`` every evaluated child is also offered to an archive
    (initial population included), for comparison with MAP-Elites coverage.
    """
    k_mod = kernels.get_backend(backend) if backend else kernels.backend_module
    budget, size, n = config.evaluation_budget, config.population_size, instance.n
    rng = np.random.default_rng(config.seed)
    trace = np.empty(budget, dtype=np.int64)

    tours, modes = random_genotypes(rng, size, n)
    core = k_mod.EaCore(instance.arrays, tours, modes)
    core.evaluate_initial(trace[:size])

    tcore = None
    if archive_trace:
        ac = calibrate_bounds(instance, archive_config or ArchiveConfig())
        tcore = k_mod.ArchiveCore(instance.arrays, ac.lower, ac.upper, ac.bins_per_dim, 1024)
        scratch = np.empty((4, size), dtype=np.int64)
        core_tours, core_modes, _ = core.export()
        tcore.ensure_capacity(size)
        tcore.insert_batch(core_tours, core_modes, 0, scratch[0], scratch[1], scratch[2], scratch[3])

    done = size
    kids = config.children_per_generation
    ct = np.empty((kids, n), dtype=np.int32)
    cm = np.empty((kids, n), dtype=np.int8)
    cf = np.empty(kids, dtype=np.int64)
    cc = np.empty((kids, 4))
    while done < budget:
        k = min(kids, budget - done)
        u = rng.random((k, kernels.EA_UNIFORMS))
        core.generation(
            u, config.crossover_probability, config.mutation_rate, config.mode_flip_probability,
            trace[done : done + k], ct[:k], cm[:k], cf[:k], cc[:k],
        )
        if tcore is not None:
            scratch = np.empty((4, k), dtype=np.int64)
            tcore.ensure_capacity(k)
            tcore.insert_batch(ct[:k], cm[:k], done, scratch[0], scratch[1], scratch[2], scratch[3])
        done += k

    pt, pm, pf = core.export()
    best_i = int(np.argmin(pf))
    best = Genotype(pt[best_i], pm[best_i])
    phen = decode(instance, best)
    history = [(c, int(trace[c - 1]) / 1000.0) for c in checkpoints(budget)]
    trace_archive = None
    if tcore is not None:
        trace_archive = archive_from_core(tcore, ac)
    return EaResult(best, phen, history, done, (pt, pm, pf), trace_archive)
