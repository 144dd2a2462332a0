"""Cross-run analytics: coverage, precision (opt-in reliability) and the Vargha-Delaney A statistic.

Run records live in a directory: ``run.json`` (config, seed, checkpoints and
the cell table) plus ``archive.csv`` (full elites, see :mod:`.export`).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InstanceError
from .map_elites import Archive, ArchiveConfig

SMALL, MEDIUM = 0.06, 0.14
_EPS = 1e-12  # 0.56 - 0.5 is 0.0600...05 in binary floating point

RECORD_FILE = "run.json"
ARCHIVE_FILE = "archive.csv"


@dataclass(frozen=True)
class VdResult:
    a_hat: float
    effect: str
    direction: str  # "A", "B" or "="

    def describe(self, name_a: str = "A", name_b: str = "B") -> str:
        if self.direction == "=":
            arrow = f"{name_a} = {name_b}"
        elif self.direction == "A":
            arrow = f"{name_a} > {name_b}"
        else:
            arrow = f"{name_b} > {name_a}"
        return f"A_hat={self.a_hat:.4f} effect={self.effect} better: {arrow}"


def effect_label(a_hat: float) -> str:
    """Closed-lower bands: small <= 0.06 < medium <= 0.14 < large, measured from 0.5."""
    d = abs(a_hat - 0.5)
    if d <= SMALL + _EPS:
        return "small"
    if d <= MEDIUM + _EPS:
        return "medium"
    return "large"


def vargha_delaney_a(samples_a: Sequence[float], samples_b: Sequence[float]) -> VdResult:
    """Probability that a draw from A is lower (better, minimisation) than one from B; ties count half."""
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.sort(np.asarray(samples_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("Vargha-Delaney A needs two non-empty samples")
    left = np.searchsorted(b, a, side="left")
    right = np.searchsorted(b, a, side="right")
    greater = int((b.size - right).sum())  # pairs with a < b
    ties = int((right - left).sum())
    a_hat = (greater + 0.5 * ties) / (a.size * b.size)
    direction = "=" if a_hat == 0.5 else ("A" if a_hat > 0.5 else "B")
    return VdResult(a_hat, effect_label(a_hat), direction)


@dataclass
class RunRecord:
    algorithm: str
    instance_name: str
    instance_digest: str
    seed: int
    config: dict
    archive: Archive
    best_objective: float
    evaluations: int
    checkpoints: list[tuple[int, float]] = field(default_factory=list)
    path: Path | None = None

    @property
    def filled(self) -> set[tuple[int, ...]]:
        return set(self.archive.cells)

    def cell_fitness(self) -> dict[tuple[int, ...], float]:
        return self.archive.fitness_by_cell()


def instance_digest(instance) -> str:
    from .instances import dumps_instance

    return hashlib.sha256(dumps_instance(instance).encode()).hexdigest()[:16]


def _cells_of(run) -> set:
    if isinstance(run, RunRecord):
        return run.filled
    if isinstance(run, Archive):
        return set(run.cells)
    return set(run)


def _fitness_of(run) -> dict:
    if isinstance(run, RunRecord):
        return run.cell_fitness()
    if isinstance(run, Archive):
        return run.fitness_by_cell()
    return dict(run)


def coverage(run, c_max_cells: Iterable) -> float:
    """Share of the pooled filled-cell set ``C_Max`` that this run fills."""
    pool = set(c_max_cells)
    if not pool:
        raise ValueError("C_Max is empty")
    return len(_cells_of(run) & pool) / len(pool)


def precision(run, best_per_cell: dict) -> float:
    """Mean over this run's filled cells of best-ever fitness / this run's fitness."""
    fits = _fitness_of(run)
    if not fits:
        raise ValueError("run has no filled cells")
    ratios = []
    for cell, f in sorted(fits.items()):
        best = best_per_cell[cell]
        ratios.append(best / f if f > 0 else 1.0)
    return float(np.mean(ratios))


def pool(runs: Sequence) -> tuple[set, dict]:
    """``(C_Max, best fitness per cell)`` over every run."""
    c_max: set = set()
    best: dict = {}
    for r in runs:
        for cell, f in _fitness_of(r).items():
            c_max.add(cell)
            if cell not in best or f < best[cell]:
                best[cell] = f
    return c_max, best


def check_poolable(records: Sequence[RunRecord]) -> None:
    """Pooled runs must share the instance and the archive grid."""
    if not records:
        raise InstanceError("no runs given")
    ref = records[0]
    for r in records[1:]:
        if r.instance_digest != ref.instance_digest:
            raise InstanceError(
                f"run {r.path or r.seed} is on instance {r.instance_name} ({r.instance_digest}), "
                f"expected {ref.instance_name} ({ref.instance_digest})"
            )
        if r.archive.config != ref.archive.config:
            raise InstanceError(f"run {r.path or r.seed} uses a different archive grid")


def analyze(records: Sequence[RunRecord]) -> list[dict]:
    check_poolable(records)
    c_max, best = pool(records)
    rows = []
    for r in records:
        rows.append(
            {
                "run": str(r.path.name if r.path else r.seed),
                "algorithm": r.algorithm,
                "seed": r.seed,
                "filledCells": len(r.filled),
                "cMax": len(c_max),
                "coverage": coverage(r, c_max),
                "precision": precision(r, best) if r.filled else float("nan"),
                "bestObjective": r.best_objective,
            }
        )
    return rows


def _config_json(cfg: ArchiveConfig) -> dict:
    return {"binsPerDim": cfg.bins_per_dim, "lower": list(cfg.lower), "upper": list(cfg.upper)}


def save_run(record: RunRecord, directory) -> Path:
    from .export import export_archive

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    doc = {
        "algorithm": record.algorithm,
        "instance": {"name": record.instance_name, "digest": record.instance_digest},
        "seed": record.seed,
        "config": record.config,
        "archive": _config_json(record.archive.config),
        "evaluations": record.evaluations,
        "bestObjective": record.best_objective,
        "checkpoints": [[int(e), float(v)] for e, v in record.checkpoints],
        "cells": [[*key, elite.fitness] for key, elite in record.archive],
    }
    (d / RECORD_FILE).write_text(json.dumps(doc, indent=1) + "\n")
    export_archive(record.archive, d / ARCHIVE_FILE)
    record.path = d
    return d


def load_run(directory) -> RunRecord:
    from .export import import_archive

    d = Path(directory)
    try:
        doc = json.loads((d / RECORD_FILE).read_text())
    except FileNotFoundError:
        raise InstanceError(f"{d} is not a run directory (no {RECORD_FILE})") from None
    a = doc["archive"]
    cfg = ArchiveConfig(a["binsPerDim"], tuple(a["lower"]), tuple(a["upper"]))
    archive = import_archive(d / ARCHIVE_FILE, cfg)
    return RunRecord(
        algorithm=doc["algorithm"],
        instance_name=doc["instance"]["name"],
        instance_digest=doc["instance"]["digest"],
        seed=doc["seed"],
        config=doc["config"],
        archive=archive,
        best_objective=doc["bestObjective"],
        evaluations=doc["evaluations"],
        checkpoints=[(int(e), float(v)) for e, v in doc["checkpoints"]],
        path=d,
    )
