"""Archive CSV persistence, 2-D pairwise slices and SVG heat maps."""
from __future__ import annotations

import csv
import io
import itertools
from pathlib import Path

import numpy as np

from .domain import DIMENSIONS, Characteristics, Genotype
from .map_elites import Archive, ArchiveConfig, Elite

ARCHIVE_COLUMNS = (
    "binEmissions", "binStaffCost", "binTravelCost", "binCarUse",
    "emissions", "staffCost", "travelCost", "carUseFraction",
    "fitnessKm", "tour", "modes",
)
SLICE_COLUMNS = ("binX", "binY", "fitnessKm")

_ALIASES = {
    "emissions": 0, "co2": 0,
    "staffcost": 1, "staff_cost": 1, "staff": 1,
    "travelcost": 2, "travel_cost": 2, "travel": 2,
    "carusefraction": 3, "car_use_fraction": 3, "caruse": 3, "car": 3,
}
LABELS = ("CO2 emissions (g)", "Staff cost", "Travel cost", "Car use fraction")


def dim_index(name: str | int) -> int:
    if isinstance(name, int):
        if 0 <= name < 4:
            return name
    else:
        key = name.strip().lower()
        if key in _ALIASES:
            return _ALIASES[key]
    raise ValueError(f"unknown characteristic dimension {name!r}; use one of {', '.join(DIMENSIONS)}")


def dumps_archive(archive: Archive) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ARCHIVE_COLUMNS)
    for key, e in archive:
        tour, modes = e.genotype.encode()
        w.writerow([*key, *(repr(float(x)) for x in e.characteristics.as_tuple()), repr(float(e.fitness)), tour, modes])
    return buf.getvalue()


def export_archive(archive: Archive, path) -> Path:
    """One row per filled cell, sorted by cell key."""
    p = Path(path)
    try:
        p.write_text(dumps_archive(archive))
    except OSError as e:
        raise OSError(f"cannot write archive to {p}: {e.strerror}") from e
    return p


def import_archive(path, config: ArchiveConfig) -> Archive:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise OSError(f"cannot read archive {p}: {e.strerror}") from e
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != ARCHIVE_COLUMNS:
        raise ValueError(f"{p}: header does not match archive columns {','.join(ARCHIVE_COLUMNS)}")
    archive = Archive(config)
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(ARCHIVE_COLUMNS):
            raise ValueError(f"{p}:{line}: expected {len(ARCHIVE_COLUMNS)} fields, got {len(row)}")
        key = tuple(int(x) for x in row[:4])
        chars = Characteristics(*(float(x) for x in row[4:8]))
        archive.cells[key] = Elite(Genotype.decode_text(row[9], row[10]), float(row[8]), chars)
    return archive


def slice_archive(archive: Archive, dim_x, dim_y) -> np.ndarray:
    """Best fitness per (x-bin, y-bin) over all cells projecting there; NaN where empty."""
    x, y = dim_index(dim_x), dim_index(dim_y)
    if x == y:
        raise ValueError("slice needs two different dimensions")
    bins = archive.config.bins_per_dim
    grid = np.full((bins, bins), np.nan)
    for key, e in archive.cells.items():
        cur = grid[key[x], key[y]]
        if np.isnan(cur) or e.fitness < cur:
            grid[key[x], key[y]] = e.fitness
    return grid


def pairings() -> list[tuple[int, int]]:
    return list(itertools.combinations(range(4), 2))


def dumps_slice(grid: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SLICE_COLUMNS)
    for i, j in zip(*np.nonzero(~np.isnan(grid))):
        w.writerow([int(i), int(j), repr(float(grid[i, j]))])
    return buf.getvalue()


def ramp(value: float, lo: float, hi: float) -> str:
    """Linear green (best) to red (worst); a flat range renders green."""
    t = 0.0 if hi <= lo else (value - lo) / (hi - lo)
    t = min(max(t, 0.0), 1.0)
    return f"#{round(255 * t):02x}{round(255 * (1 - t)):02x}00"


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def render_slice(
    grid: np.ndarray,
    dim_x=0,
    dim_y=1,
    config: ArchiveConfig | None = None,
    title: str = "",
    cell_px: int = 20,
) -> str:
    """Standalone SVG heat map. x bins run left to right, y bins bottom to top."""
    x, y = dim_index(dim_x), dim_index(dim_y)
    nx, ny = grid.shape
    left, top, right, bottom = 80, 40, 20, 60
    w = left + nx * cell_px + right
    h = top + ny * cell_px + bottom
    filled = ~np.isnan(grid)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<title>{title or LABELS[y] + " vs " + LABELS[x]}</title>',
        f'<rect x="{left}" y="{top}" width="{nx * cell_px}" height="{ny * cell_px}" fill="white" stroke="#888"/>',
    ]
    if filled.any():
        lo, hi = float(grid[filled].min()), float(grid[filled].max())
        for i, j in zip(*np.nonzero(filled)):
            v = float(grid[i, j])
            px = left + int(i) * cell_px
            py = top + (ny - 1 - int(j)) * cell_px
            out.append(
                f'<rect x="{px}" y="{py}" width="{cell_px}" height="{cell_px}" fill="{ramp(v, lo, hi)}">'
                f"<title>{_fmt(v)} km</title></rect>"
            )
        out.append(
            f'<text x="{left}" y="{top - 10}" font-size="11" font-family="sans-serif">'
            f"distance {_fmt(lo)} km (green) to {_fmt(hi)} km (red)</text>"
        )
    else:
        out.append(
            f'<text x="{left + nx * cell_px / 2}" y="{top + ny * cell_px / 2}" font-size="14" '
            f'font-family="sans-serif" text-anchor="middle">no elites</text>'
        )
    step = max(1, nx // 5)
    for k in range(0, nx + 1, step):
        px = left + k * cell_px
        label = _fmt(config.lower[x] + k * (config.upper[x] - config.lower[x]) / nx) if config and config.calibrated else str(k)
        out.append(f'<line x1="{px}" y1="{top + ny * cell_px}" x2="{px}" y2="{top + ny * cell_px + 5}" stroke="black"/>')
        out.append(
            f'<text x="{px}" y="{top + ny * cell_px + 18}" font-size="10" font-family="sans-serif" text-anchor="middle">{label}</text>'
        )
    step = max(1, ny // 5)
    for k in range(0, ny + 1, step):
        py = top + (ny - k) * cell_px
        label = _fmt(config.lower[y] + k * (config.upper[y] - config.lower[y]) / ny) if config and config.calibrated else str(k)
        out.append(f'<line x1="{left - 5}" y1="{py}" x2="{left}" y2="{py}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{py + 3}" font-size="10" font-family="sans-serif" text-anchor="end">{label}</text>'
        )
    out.append(
        f'<text x="{left + nx * cell_px / 2}" y="{h - 15}" font-size="12" font-family="sans-serif" '
        f'text-anchor="middle">{LABELS[x]}</text>'
    )
    cy = top + ny * cell_px / 2
    out.append(
        f'<text x="15" y="{cy}" font-size="12" font-family="sans-serif" text-anchor="middle" '
        f'transform="rotate(-90 15 {cy})">{LABELS[y]}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_slices(archive: Archive, out_dir) -> list[Path]:
    """All six pairwise maps as ``<x>__<y>.svg`` and ``<x>__<y>.csv``."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for x, y in pairings():
        grid = slice_archive(archive, x, y)
        stem = f"{DIMENSIONS[x]}__{DIMENSIONS[y]}"
        svg = d / f"{stem}.svg"
        svg.write_text(render_slice(grid, x, y, archive.config))
        (d / f"{stem}.csv").write_text(dumps_slice(grid))
        written += [svg, d / f"{stem}.csv"]
    return written
