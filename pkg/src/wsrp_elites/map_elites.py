"""MAP-Elites over the 4-D characteristic grid (emissions, staff cost, travel cost, car use)."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _pykernels, kernels
from .decoder import evaluate_genotype
from .domain import DIMENSIONS, Characteristics, Genotype, Instance
from .errors import ConfigError

BATCH = 4096
CALIBRATION_PAD = 0.10


@dataclass(frozen=True)
class ArchiveConfig:
    """Grid resolution and discretisation bounds.

    ``lower``/``upper`` of ``None`` means "calibrate" (see :func:`calibrate_bounds`):
    ``"pilot"`` takes the range of solutions reached by short pilot EA runs,
    ``"random"`` the range of random genotypes. Calibration draws from
    ``calibration_seed`` only, so every run on an instance shares one grid.
    """

    bins_per_dim: int = 20
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    calibration: str = "pilot"
    calibration_samples: int = 1000
    pilot_runs: int = 5
    pilot_budget: int = 20_000
    calibration_seed: int = 0

    def __post_init__(self):
        if self.bins_per_dim < 1:
            raise ConfigError("binsPerDim must be >= 1")
        if self.calibration not in ("pilot", "random"):
            raise ConfigError(f"unknown calibration {self.calibration!r}; use 'pilot' or 'random'")
        if (self.lower is None) != (self.upper is None):
            raise ConfigError("give both lower and upper bounds, or neither")
        if self.lower is not None:
            if len(self.lower) != 4 or len(self.upper) != 4:
                raise ConfigError("bounds need one value per dimension: " + ", ".join(DIMENSIONS))
            object.__setattr__(self, "lower", tuple(float(x) for x in self.lower))
            object.__setattr__(self, "upper", tuple(float(x) for x in self.upper))
            for d, lo, hi in zip(DIMENSIONS, self.lower, self.upper):
                if not lo < hi:
                    raise ConfigError(f"{d}: lower bound {lo} must be < upper bound {hi}")

    @property
    def calibrated(self) -> bool:
        return self.lower is not None

    def with_bounds(self, lower, upper) -> "ArchiveConfig":
        return replace(self, lower=tuple(lower), upper=tuple(upper))

    def __eq__(self, other):
        # the grid is defined by resolution and bounds alone
        if not isinstance(other, ArchiveConfig):
            return NotImplemented
        return (self.bins_per_dim, self.lower, self.upper) == (other.bins_per_dim, other.lower, other.upper)

    def __hash__(self):
        return hash((self.bins_per_dim, self.lower, self.upper))


@dataclass(frozen=True)
class MapElitesConfig:
    evaluation_budget: int = 100_000
    init_count: int = 1000
    crossover_probability: float = 0.5
    mode_flip_probability: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.evaluation_budget < 1:
            raise ConfigError("evaluation budget must be >= 1")
        if self.init_count < 1:
            raise ConfigError("init count G must be >= 1")
        if self.init_count > self.evaluation_budget:
            raise ConfigError(
                f"init count G={self.init_count} exceeds the evaluation budget I={self.evaluation_budget} (need G <= I)"
            )
        for name in ("crossover_probability", "mode_flip_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class Elite:
    genotype: Genotype
    fitness: float
    characteristics: Characteristics


class Outcome(str, enum.Enum):
    INSERTED = "inserted"
    REPLACED = "replaced"
    REJECTED = "rejected"


def feature_descriptor(characteristics: Characteristics | Sequence[float], config: ArchiveConfig) -> tuple[int, ...]:
    """Discretise each characteristic into ``bins_per_dim`` bins, clamping to the edge bins."""
    if not config.calibrated:
        raise ConfigError("archive bounds are not set; calibrate first")
    values = characteristics.as_tuple() if isinstance(characteristics, Characteristics) else tuple(characteristics)
    return tuple(
        kernels.bin_index(float(x), lo, hi, config.bins_per_dim)
        for x, lo, hi in zip(values, config.lower, config.upper)
    )


def cell_index(key: Sequence[int], bins: int) -> int:
    idx = 0
    for b in key:
        idx = idx * bins + int(b)
    return idx


def cell_key(index: int, bins: int) -> tuple[int, ...]:
    key = []
    for _ in range(4):
        index, b = divmod(int(index), bins)
        key.append(b)
    return tuple(reversed(key))


@dataclass
class Archive:
    """Sparse map from 4-tuple bin index to the best (lowest-distance) elite seen there."""

    config: ArchiveConfig
    cells: dict[tuple[int, ...], Elite] = field(default_factory=dict)

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(sorted(self.cells.items()))

    def try_insert(self, genotype: Genotype, fitness: float, characteristics: Characteristics) -> Outcome:
        key = feature_descriptor(characteristics, self.config)
        cur = self.cells.get(key)
        if cur is None:
            self.cells[key] = Elite(genotype, fitness, characteristics)
            return Outcome.INSERTED
        if fitness < cur.fitness:
            self.cells[key] = Elite(genotype, fitness, characteristics)
            return Outcome.REPLACED
        return Outcome.REJECTED

    def best(self) -> Elite | None:
        if not self.cells:
            return None
        return min(self.cells.values(), key=lambda e: e.fitness)

    def fitness_by_cell(self) -> dict[tuple[int, ...], float]:
        return {k: e.fitness for k, e in self.cells.items()}


def check_archive(instance: Instance, archive: Archive) -> list[str]:
    """Re-evaluate every stored genotype; report stale fitness or misplaced elites."""
    problems = []
    for key, elite in archive:
        fit_m, chars = evaluate_genotype(instance, elite.genotype)
        if fit_m / 1000.0 != elite.fitness:
            problems.append(f"cell {key}: stored fitness {elite.fitness} != re-evaluated {fit_m / 1000.0}")
        if chars != elite.characteristics:
            problems.append(f"cell {key}: stored characteristics differ from re-evaluation")
        if feature_descriptor(chars, archive.config) != key:
            problems.append(f"cell {key}: re-evaluated descriptor {feature_descriptor(chars, archive.config)}")
    return problems


def random_genotypes(rng: np.random.Generator, k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    tours = rng.permuted(np.tile(np.arange(n, dtype=np.int32), (k, 1)), axis=1)
    modes = rng.integers(0, 2, size=(k, n), dtype=np.int8)
    return np.ascontiguousarray(tours, dtype=np.int32), np.ascontiguousarray(modes)


def random_genotype(n: int, rng: np.random.Generator) -> Genotype:
    t, m = random_genotypes(rng, 1, n)
    return Genotype(t[0], m[0])


def mutate(genotype: Genotype, rng: np.random.Generator, mode_flip_probability: float = 0.1) -> Genotype:
    """Move one random entry of the tour to another random position (its mode gene moves too).

    Afterwards, with ``mode_flip_probability``, one random mode gene is flipped.
    """
    t, m = genotype.tour.tolist(), genotype.modes.tolist()
    u = rng.random(4)
    _pykernels.mutate(t, m, u[0], u[1], u[2], u[3], mode_flip_probability)
    return Genotype.from_lists(t, m)


def crossover(parent1: Genotype, parent2: Genotype, rng: np.random.Generator) -> Genotype:
    """Order crossover: a random section of parent 1 stays in place, the rest follows parent 2's order."""
    i, j = _pykernels.section(rng.random(), len(parent1))
    return crossover_section(parent1, parent2, i, j)


def crossover_section(parent1: Genotype, parent2: Genotype, i: int, j: int) -> Genotype:
    t, m = _pykernels.order_crossover(
        parent1.tour.tolist(), parent1.modes.tolist(), parent2.tour.tolist(), parent2.modes.tolist(), i, j
    )
    return Genotype.from_lists(t, m)


_calibrations: dict = {}


def _padded(chars: np.ndarray) -> tuple[list[float], list[float]]:
    lo, hi = chars.min(axis=0), chars.max(axis=0)
    lower, upper = [], []
    for d in range(3):
        span = hi[d] - lo[d]
        pad = CALIBRATION_PAD * span if span > 0 else max(CALIBRATION_PAD * abs(lo[d]), 1e-3)
        lower.append(float(lo[d] - pad))
        upper.append(float(hi[d] + pad))
    # car use is a fraction with known range
    return lower + [0.0], upper + [1.0]


def calibrate_bounds(instance: Instance, config: ArchiveConfig) -> ArchiveConfig:
    """Fill in missing bounds: per-dimension [min, max] of a calibration sample widened by 10% of the range.

    The sample is either the final populations of ``pilot_runs`` short EA runs
    (default) or ``calibration_samples`` random genotypes. Car use always
    spans [0, 1].
    """
    if config.calibrated:
        return config
    key = (id(instance), config.calibration, config.calibration_samples, config.pilot_runs,
           config.pilot_budget, config.calibration_seed)
    hit = _calibrations.get(key)
    if hit is not None and hit[0] is instance:
        return replace(hit[1], bins_per_dim=config.bins_per_dim)
    if config.calibration == "random":
        rng = np.random.default_rng(config.calibration_seed)
        tours, modes = random_genotypes(rng, config.calibration_samples, instance.n)
    else:
        from .ea import EaConfig, run_ea

        pops_t, pops_m = [], []
        for r in range(config.pilot_runs):
            budget = max(config.pilot_budget, 100)
            res = run_ea(instance, EaConfig(evaluation_budget=budget, seed=config.calibration_seed + 7919 * (r + 1)))
            pops_t.append(res.population[0])
            pops_m.append(res.population[1])
        tours = np.ascontiguousarray(np.concatenate(pops_t), dtype=np.int32)
        modes = np.ascontiguousarray(np.concatenate(pops_m), dtype=np.int8)
    fits = np.empty(len(tours), dtype=np.int64)
    chars = np.empty((len(tours), 4))
    kernels.evaluate_batch(instance.arrays, tours, modes, fits, chars)
    result = config.with_bounds(*_padded(chars))
    _calibrations[key] = (instance, result)
    return result


def checkpoints(budget: int, count: int = 100) -> list[int]:
    """Evenly spaced evaluation counts ending at ``budget`` (every evaluation if budget < count)."""
    return sorted({math.ceil(k * budget / count) for k in range(1, count + 1)})


@dataclass
class MapElitesResult:
    archive: Archive
    history: list[tuple[int, float]]
    evaluations: int
    events: np.ndarray | None = None  # rows of (evaluation index, cell index, fitness metres)

    @property
    def best_objective(self) -> float:
        return self.history[-1][1]


def archive_from_core(core, config: ArchiveConfig) -> Archive:
    tours, modes, fits, cells, chars = core.export()
    archive = Archive(config)
    for k in range(len(fits)):
        key = cell_key(int(cells[k]), config.bins_per_dim)
        archive.cells[key] = Elite(
            Genotype(tours[k], modes[k]), int(fits[k]) / 1000.0, Characteristics(*(float(x) for x in chars[k]))
        )
    return archive


def run_map_elites(
    instance: Instance,
    me_config: MapElitesConfig,
    archive_config: ArchiveConfig | None = None,
    *,
    record_events: bool = False,
    backend: str | None = None,
) -> MapElitesResult:
    """Random initialisation for G evaluations, then select-vary-insert until I evaluations."""
    k_mod = kernels.get_backend(backend) if backend else kernels.backend_module
    archive_config = calibrate_bounds(instance, archive_config or ArchiveConfig())
    budget, init = me_config.evaluation_budget, me_config.init_count
    rng = np.random.default_rng(me_config.seed)
    n = instance.n
    core = k_mod.ArchiveCore(
        instance.arrays, archive_config.lower, archive_config.upper, archive_config.bins_per_dim, min(budget, BATCH)
    )
    trace = np.empty(budget, dtype=np.int64)
    events = []
    done = 0
    while done < budget:
        k = min(BATCH, (init if done < init else budget) - done)
        ev = np.empty((3, k), dtype=np.int64)
        core.ensure_capacity(k)
        if done < init:
            tours, modes = random_genotypes(rng, k, n)
            n_ev = core.insert_batch(tours, modes, done, trace[done : done + k], ev[0], ev[1], ev[2])
        else:
            u = rng.random((k, kernels.ME_UNIFORMS))
            n_ev = core.vary_batch(
                u, me_config.crossover_probability, me_config.mode_flip_probability,
                done, trace[done : done + k], ev[0], ev[1], ev[2],
            )
        if record_events:
            events.append(ev[:, :n_ev].T.copy())
        done += k

    history = [(c, int(trace[c - 1]) / 1000.0) for c in checkpoints(budget)]
    return MapElitesResult(
        archive=archive_from_core(core, archive_config),
        history=history,
        evaluations=done,
        events=np.concatenate(events) if record_events else None,
    )
