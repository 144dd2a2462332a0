"""Synthetic instance generation and the JSON instance format.

Generated instances follow the London-style scheme: 30-minute visits over an
8-hour day, split into ``t`` equal windows (or a random mix of 8/4/2/1-hour
windows for ``rnd``). Travel matrices are synthetic: Euclidean distance on a
square area times a road-circuity factor for car, times a detour factor for
public transport. Real matrices can be supplied through the file format.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .domain import CostParams, Instance, TravelModel, Visit
from .errors import InstanceError

log = logging.getLogger(__name__)

SCHEMES = ("1", "2", "4", "8", "rnd")
DAY_MINUTES = 480
SERVICE_MINUTES = 30
RND_WINDOW_MINUTES = (480, 240, 120, 60)
CAR_CIRCUITY = 1.2
MAX_WINDOW_RETRIES = 1000


@dataclass(frozen=True)
class GeneratorConfig:
    visit_count: int
    time_window_scheme: str = "1"
    seed: int = 0
    area_extent_km: float = 20.0
    car_speed_kmh: float = 25.0
    pt_speed_kmh: float = 17.0
    pt_detour_factor: float = 1.4
    cost_params: CostParams = field(default_factory=CostParams)
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "time_window_scheme", str(self.time_window_scheme))
        if self.visit_count < 1:
            raise InstanceError("visitCount must be >= 1", "visitCount")
        if self.time_window_scheme not in SCHEMES:
            raise InstanceError(f"time window scheme must be one of {SCHEMES}", "timeWindowScheme")
        if not (self.car_speed_kmh > 0 and self.pt_speed_kmh > 0):
            raise InstanceError("speeds must be positive", "speed")
        if not self.pt_detour_factor >= 1:
            raise InstanceError("ptDetourFactor must be >= 1", "ptDetourFactor")
        if not self.area_extent_km > 0:
            raise InstanceError("areaExtentKm must be positive", "areaExtentKm")
        if not 0 <= self.seed < 2**64:
            raise InstanceError("seed must be a 64-bit unsigned integer", "seed")

    @property
    def label(self) -> str:
        prefix = {60: "Lon", 110: "BLon"}.get(self.visit_count, f"Syn{self.visit_count}")
        return self.name or f"{prefix}-{self.time_window_scheme}-s{self.seed}"


def _minutes(metres: np.ndarray, speed_kmh: float) -> np.ndarray:
    return np.ceil(metres * 60.0 / (speed_kmh * 1000.0)).astype(np.int32)


def _windows(rng: np.random.Generator, n: int, scheme: str) -> tuple[np.ndarray, np.ndarray]:
    if scheme == "rnd":
        width = rng.choice(np.array(RND_WINDOW_MINUTES), size=n)
        slots = DAY_MINUTES // width
        slot = np.floor(rng.random(n) * slots).astype(np.int64)
    else:
        t = int(scheme)
        width = np.full(n, DAY_MINUTES // t)
        slot = rng.integers(0, t, size=n)
    start = slot * width
    return start.astype(np.int32), (start + width).astype(np.int32)


def generate_instance_report(config: GeneratorConfig) -> tuple[Instance, int]:
    """Generate an instance; also return how many window redraws were needed."""
    n = config.visit_count
    root = np.random.SeedSequence(config.seed)
    loc_rng = np.random.Generator(np.random.PCG64(root.spawn(1)[0]))

    pts = np.empty((n + 1, 2))
    pts[0] = config.area_extent_km / 2.0
    pts[1:] = loc_rng.uniform(0.0, config.area_extent_km, size=(n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    car_m = np.rint(np.hypot(diff[..., 0], diff[..., 1]) * CAR_CIRCUITY * 1000.0).astype(np.int64)
    pt_m = np.rint(car_m * config.pt_detour_factor).astype(np.int64)
    dist = np.stack([car_m, pt_m])
    ttime = np.stack([_minutes(car_m, config.car_speed_kmh), _minutes(pt_m, config.pt_speed_kmh)])

    # every visit must be reachable by car on its own, otherwise redraw windows
    depot_car = ttime[0, 0, 1:]
    for retries in range(MAX_WINDOW_RETRIES):
        ws, we = _windows(np.random.Generator(np.random.PCG64(root.spawn(1)[0])), n, config.time_window_scheme)
        if (depot_car <= we).all():
            break
    else:
        raise InstanceError(f"no car-feasible window assignment after {MAX_WINDOW_RETRIES} draws; shrink areaExtentKm")
    if retries:
        log.info("instance %s: window assignment redrawn %d time(s)", config.label, retries)

    visits = tuple(Visit(i, i + 1, SERVICE_MINUTES, int(ws[i]), int(we[i])) for i in range(n))
    inst = Instance(
        name=config.label,
        visits=visits,
        depot=0,
        day_start=0,
        day_end=DAY_MINUTES,
        travel=TravelModel(dist, ttime),
        cost_params=config.cost_params,
        time_window_scheme=config.time_window_scheme,
    )
    return inst, retries


def generate_instance(config: GeneratorConfig) -> Instance:
    return generate_instance_report(config)[0]


_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_MODE = {
    "type": "object",
    "required": ["distance", "time"],
    "properties": {"distance": _MATRIX, "time": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}}},
}
INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["name", "dayStart", "dayEnd", "depot", "visits", "locations", "travel", "costParams"],
    "properties": {
        "name": {"type": "string"},
        "dayStart": {"type": "integer"},
        "dayEnd": {"type": "integer"},
        "depot": {"type": "integer", "minimum": 0},
        "locations": {"type": "integer", "minimum": 1},
        "timeWindowScheme": {"type": "string"},
        "visits": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "location", "serviceDuration", "windowStart", "windowEnd"],
                "properties": {k: {"type": "integer"} for k in ("id", "location", "serviceDuration", "windowStart", "windowEnd")},
            },
        },
        "travel": {"type": "object", "required": ["car", "pt"], "properties": {"car": _MODE, "pt": _MODE}},
        "costParams": {
            "type": "object",
            "required": ["carEmissionsPerKm", "ptEmissionsPerKm", "staffRatePerHour", "carCostPerKm", "ptCostPerKm"],
            "properties": {
                k: {"type": "number", "minimum": 0}
                for k in ("carEmissionsPerKm", "ptEmissionsPerKm", "staffRatePerHour", "carCostPerKm", "ptCostPerKm")
            },
        },
    },
}


def _km(m: int) -> float:
    return m / 1000.0


def instance_to_dict(inst: Instance) -> dict:
    cp = inst.cost_params
    d, t = inst.travel.distance_m, inst.travel.time_min
    return {
        "name": inst.name,
        "timeWindowScheme": inst.time_window_scheme,
        "dayStart": inst.day_start,
        "dayEnd": inst.day_end,
        "depot": inst.depot,
        "locations": inst.travel.location_count,
        "visits": [
            {"id": v.id, "location": v.location, "serviceDuration": v.service_duration,
             "windowStart": v.window_start, "windowEnd": v.window_end}
            for v in inst.visits
        ],
        "travel": {
            key: {"distance": [[_km(x) for x in row] for row in d[m].tolist()], "time": t[m].tolist()}
            for m, key in ((0, "car"), (1, "pt"))
        },
        "costParams": dict(cp.as_tuple_named()),
    }


def instance_from_dict(doc: dict) -> Instance:
    try:
        jsonschema.validate(doc, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path)
        raise InstanceError(e.message, path) from None

    n_loc = doc["locations"]
    mats = {}
    for key in ("car", "pt"):
        for kind in ("distance", "time"):
            m = doc["travel"][key][kind]
            if len(m) != n_loc or any(len(row) != n_loc for row in m):
                raise InstanceError(f"matrix must be {n_loc}x{n_loc}", f"travel/{key}/{kind}")
            arr = np.array(m, dtype=np.float64)
            if (arr < 0).any():
                raise InstanceError("negative entry", f"travel/{key}/{kind}")
            mats[key, kind] = arr
    dist = np.stack([np.rint(mats[k, "distance"] * 1000.0).astype(np.int64) for k in ("car", "pt")])
    ttime = np.stack([mats[k, "time"].astype(np.int32) for k in ("car", "pt")])

    visits = tuple(
        Visit(v["id"], v["location"], v["serviceDuration"], v["windowStart"], v["windowEnd"]) for v in doc["visits"]
    )
    cp = doc["costParams"]
    return Instance(
        name=doc["name"],
        visits=visits,
        depot=doc["depot"],
        day_start=doc["dayStart"],
        day_end=doc["dayEnd"],
        travel=TravelModel(dist, ttime),
        cost_params=CostParams(
            cp["carEmissionsPerKm"], cp["ptEmissionsPerKm"], cp["staffRatePerHour"], cp["carCostPerKm"], cp["ptCostPerKm"]
        ),
        time_window_scheme=str(doc.get("timeWindowScheme", "custom")),
    )


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), separators=(",", ":")) + "\n"


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"not valid JSON: {e}", str(path)) from None
    return instance_from_dict(doc)


def summary(inst: Instance) -> dict:
    """Short description printed by the CLI."""
    d = inst.travel.distance_m
    off = ~np.eye(d.shape[1], dtype=bool)
    windows = sorted({(v.window_start, v.window_end) for v in inst.visits})
    return {
        "name": inst.name,
        "visits": inst.n,
        "timeWindowScheme": inst.time_window_scheme,
        "distinctWindows": len(windows),
        "carKmMean": round(float(d[0][off].mean()) / 1000.0, 3) if off.any() else 0.0,
        "ptKmMean": round(float(d[1][off].mean()) / 1000.0, 3) if off.any() else 0.0,
        "carMinMax": int(inst.travel.time_min[0].max()),
        "ptMinMax": int(inst.travel.time_min[1].max()),
    }
