"""Core problem and solution types.

Times are integer minutes from the start of the working day. Distances are
held as integer metres (fixed-point km with three decimals) so that sums are
exact and runs are bit-reproducible; km views are derived on demand.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InstanceError


class Mode(enum.IntEnum):
    CAR = 0
    PT = 1

    @property
    def letter(self) -> str:
        return "C" if self is Mode.CAR else "P"

    @classmethod
    def from_letter(cls, letter: str) -> "Mode":
        try:
            return {"C": cls.CAR, "P": cls.PT}[letter]
        except KeyError:
            raise ValueError(f"unknown mode letter {letter!r}") from None


@dataclass(frozen=True)
class Visit:
    id: int
    location: int
    service_duration: int
    window_start: int
    window_end: int

    def __post_init__(self):
        if self.window_start >= self.window_end:
            raise InstanceError(
                f"windowStart {self.window_start} must be < windowEnd {self.window_end}",
                f"visits[{self.id}]",
            )
        if self.service_duration <= 0:
            raise InstanceError("serviceDuration must be positive", f"visits[{self.id}]")


@dataclass(frozen=True)
class CostParams:
    car_emissions_per_km: float = 140.0
    pt_emissions_per_km: float = 80.0
    staff_rate_per_hour: float = 15.0
    car_cost_per_km: float = 0.45
    pt_cost_per_km: float = 0.20

    def __post_init__(self):
        for name, value in self.as_tuple_named():
            if not value >= 0:
                raise InstanceError(f"{name} must be >= 0", f"costParams.{name}")

    def as_tuple_named(self):
        return [
            ("carEmissionsPerKm", self.car_emissions_per_km),
            ("ptEmissionsPerKm", self.pt_emissions_per_km),
            ("staffRatePerHour", self.staff_rate_per_hour),
            ("carCostPerKm", self.car_cost_per_km),
            ("ptCostPerKm", self.pt_cost_per_km),
        ]

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return tuple(float(v) for _, v in self.as_tuple_named())


def _frozen_array(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TravelModel:
    """Dual-mode travel matrices indexed ``[mode, from_location, to_location]``."""

    distance_m: np.ndarray
    time_min: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "distance_m", _frozen_array(self.distance_m, np.int64))
        object.__setattr__(self, "time_min", _frozen_array(self.time_min, np.int32))
        d, t = self.distance_m, self.time_min
        if d.ndim != 3 or d.shape[0] != 2 or d.shape[1] != d.shape[2]:
            raise InstanceError(f"distance matrices must have shape (2, L, L), got {d.shape}", "travel")
        if t.shape != d.shape:
            raise InstanceError(f"time matrices shape {t.shape} differs from distance shape {d.shape}", "travel")
        for name, m in (("distance", d), ("time", t)):
            if (m < 0).any():
                raise InstanceError("entries must be >= 0", f"travel.{name}")
            if np.diagonal(m, axis1=1, axis2=2).any():
                raise InstanceError("diagonal entries must be 0", f"travel.{name}")

    @property
    def location_count(self) -> int:
        return self.distance_m.shape[1]

    def distance_km(self, mode: Mode) -> np.ndarray:
        return self.distance_m[int(mode)] / 1000.0

    def __eq__(self, other):
        if not isinstance(other, TravelModel):
            return NotImplemented
        return np.array_equal(self.distance_m, other.distance_m) and np.array_equal(self.time_min, other.time_min)


class ProblemArrays(NamedTuple):
    """Flat array view of an instance consumed by the kernels."""

    dist: np.ndarray  # int64 (2, L, L) metres
    ttime: np.ndarray  # int32 (2, L, L) minutes
    loc: np.ndarray  # int32 (n,)
    dur: np.ndarray
    wstart: np.ndarray
    wend: np.ndarray
    depot: int
    day_start: int
    cost: tuple  # CostParams.as_tuple()


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    visits: tuple[Visit, ...]
    depot: int
    day_start: int
    day_end: int
    travel: TravelModel
    cost_params: CostParams = field(default_factory=CostParams)
    time_window_scheme: str = "1"

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(self.visits))
        n_loc = self.travel.location_count
        for i, v in enumerate(self.visits):
            if v.id != i:
                raise InstanceError(f"visit ids must be 0..n-1 in order, found id {v.id} at position {i}", f"visits[{i}].id")
            if not 0 <= v.location < n_loc:
                raise InstanceError(f"location {v.location} outside 0..{n_loc - 1}", f"visits[{i}].location")
        if not 0 <= self.depot < n_loc:
            raise InstanceError(f"depot {self.depot} outside 0..{n_loc - 1}", "depot")
        if self.day_start >= self.day_end:
            raise InstanceError("dayStart must be < dayEnd", "dayStart")

    @property
    def n(self) -> int:
        return len(self.visits)

    @cached_property
    def arrays(self) -> ProblemArrays:
        vs = self.visits
        return ProblemArrays(
            dist=np.ascontiguousarray(self.travel.distance_m),
            ttime=np.ascontiguousarray(self.travel.time_min),
            loc=np.array([v.location for v in vs], dtype=np.int32),
            dur=np.array([v.service_duration for v in vs], dtype=np.int32),
            wstart=np.array([v.window_start for v in vs], dtype=np.int32),
            wend=np.array([v.window_end for v in vs], dtype=np.int32),
            depot=int(self.depot),
            day_start=int(self.day_start),
            cost=self.cost_params.as_tuple(),
        )

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.visits == other.visits
            and self.depot == other.depot
            and self.day_start == other.day_start
            and self.day_end == other.day_end
            and self.travel == other.travel
            and self.cost_params == other.cost_params
            and self.time_window_scheme == other.time_window_scheme
        )


@dataclass(frozen=True, eq=False)
class Genotype:
    """Grand tour plus one transport-mode gene per tour position."""

    tour: np.ndarray
    modes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tour", _frozen_array(self.tour, np.int32))
        object.__setattr__(self, "modes", _frozen_array(self.modes, np.int8))
        if self.tour.ndim != 1 or self.tour.shape != self.modes.shape:
            raise ValueError("tour and modes must be 1-D and of equal length")

    @classmethod
    def from_lists(cls, tour: Sequence[int], modes: Sequence[int | Mode]) -> "Genotype":
        return cls(np.asarray(tour), np.asarray([int(m) for m in modes]))

    def __len__(self):
        return len(self.tour)

    def is_permutation(self) -> bool:
        n = len(self.tour)
        return bool(np.array_equal(np.sort(self.tour), np.arange(n))) and bool(np.isin(self.modes, (0, 1)).all())

    def encode(self) -> tuple[str, str]:
        """Text form used in archive files: ``("3;0;2;1", "CPPC")``."""
        return ";".join(str(int(v)) for v in self.tour), "".join("CP"[int(m)] for m in self.modes)

    @classmethod
    def decode_text(cls, tour: str, modes: str) -> "Genotype":
        ids = [int(x) for x in tour.split(";")] if tour else []
        return cls.from_lists(ids, [Mode.from_letter(c) for c in modes])

    def __eq__(self, other):
        if not isinstance(other, Genotype):
            return NotImplemented
        return np.array_equal(self.tour, other.tour) and np.array_equal(self.modes, other.modes)

    def __hash__(self):
        return hash((self.tour.tobytes(), self.modes.tobytes()))

    def __repr__(self):
        t, m = self.encode()
        return f"Genotype({t!r}, {m!r})"


@dataclass(frozen=True)
class Journey:
    """One employee's depot-to-depot trip.

    ``departure_times`` has one entry per leg: depot departure, then the
    departure from each visit (service end), the last one being the leg home.
    """

    mode: Mode
    visit_sequence: tuple[int, ...]
    departure_times: tuple[int, ...]
    service_start_times: tuple[int, ...]
    return_time: int
    distance_m: int

    @property
    def elapsed(self) -> int:
        return self.return_time - self.departure_times[0]


@dataclass(frozen=True)
class Characteristics:
    emissions: float
    staff_cost: float
    travel_cost: float
    car_use_fraction: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.emissions, self.staff_cost, self.travel_cost, self.car_use_fraction)


DIMENSIONS = ("emissions", "staffCost", "travelCost", "carUseFraction")


@dataclass(frozen=True)
class Phenotype:
    journeys: tuple[Journey, ...]
    objective: float
    characteristics: Characteristics
    mode_fallbacks: int = 0

    @property
    def distance_m(self) -> int:
        return sum(j.distance_m for j in self.journeys)


@dataclass(frozen=True)
class Violation:
    constraint: str
    journey: int | None = None
    visit: int | None = None
    detail: str = ""

    def __str__(self):
        where = []
        if self.journey is not None:
            where.append(f"journey {self.journey}")
        if self.visit is not None:
            where.append(f"visit {self.visit}")
        loc = " ".join(where) or "phenotype"
        return f"{loc}: {self.constraint}" + (f" ({self.detail})" if self.detail else "")


def validate_phenotype(instance: Instance, phenotype: Phenotype) -> list[Violation]:
    """Check every journey and phenotype invariant; an empty list means valid."""
    out: list[Violation] = []
    dist = instance.travel.distance_m
    ttime = instance.travel.time_min
    depot = instance.depot
    visits = instance.visits
    n = instance.n

    seen: dict[int, int] = {}
    total_m = 0
    for ji, j in enumerate(phenotype.journeys):
        seq = j.visit_sequence
        if not seq:
            out.append(Violation("empty journey", ji))
            continue
        if len(j.service_start_times) != len(seq) or len(j.departure_times) != len(seq) + 1:
            out.append(Violation("timing arrays do not match visit sequence", ji))
            continue
        m = int(j.mode)
        if j.departure_times[0] < instance.day_start:
            out.append(Violation("departs depot before day start", ji, detail=f"t={j.departure_times[0]}"))
        prev_loc = depot
        clock = j.departure_times[0]
        leg_m = 0
        for k, vid in enumerate(seq):
            if not 0 <= vid < n:
                out.append(Violation("unknown visit id", ji, vid))
                break
            if vid in seen:
                out.append(Violation("visit served more than once", ji, vid, f"also in journey {seen[vid]}"))
            seen[vid] = ji
            v = visits[vid]
            if j.departure_times[k] < clock:
                out.append(Violation("departs before previous service ends", ji, vid))
            arrival = j.departure_times[k] + int(ttime[m, prev_loc, v.location])
            start = j.service_start_times[k]
            if start < arrival:
                out.append(Violation("service starts before arrival", ji, vid, f"start={start} arrival={arrival}"))
            if start < v.window_start:
                out.append(Violation("service starts before window", ji, vid, f"start={start} windowStart={v.window_start}"))
            if start > v.window_end:
                out.append(Violation("service starts after window", ji, vid, f"start={start} windowEnd={v.window_end}"))
            leg_m += int(dist[m, prev_loc, v.location])
            clock = start + v.service_duration
            prev_loc = v.location
        else:
            if j.departure_times[-1] < clock:
                out.append(Violation("leaves last visit before service ends", ji, seq[-1]))
            leg_m += int(dist[m, prev_loc, depot])
            back = j.departure_times[-1] + int(ttime[m, prev_loc, depot])
            if j.return_time != back:
                out.append(Violation("journey does not end at the depot on time", ji, detail=f"return={j.return_time} expected={back}"))
            if leg_m != j.distance_m:
                out.append(Violation("journey distance mismatch", ji, detail=f"stored={j.distance_m} m recomputed={leg_m} m"))
        total_m += leg_m

    for vid in range(n):
        if vid not in seen:
            out.append(Violation("visit not served by any journey", visit=vid))
    if phenotype.objective != total_m / 1000.0:
        out.append(Violation("objective is not the total journey distance", detail=f"{phenotype.objective} != {total_m / 1000.0}"))
    c = phenotype.characteristics
    if min(c.as_tuple()) < 0 or c.car_use_fraction > 1:
        out.append(Violation("characteristics out of range", detail=str(c)))
    return out
