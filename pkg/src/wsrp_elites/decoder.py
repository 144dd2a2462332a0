"""Greedy grand-tour splitting into feasible single-mode journeys."""
from __future__ import annotations

from .domain import Characteristics, Genotype, Instance, Journey, Mode, Phenotype
from .errors import InfeasibleVisitError
from .evaluator import characteristics_from_totals, evaluate_journeys
from . import kernels


def _open(arr, vid: int, gene: int):
    """Depot departure and service start for ``vid`` opening a journey, trying ``gene`` first."""
    loc = int(arr.loc[vid])
    ws, we = int(arr.wstart[vid]), int(arr.wend[vid])
    for mode in (gene, 1 - gene):
        tt = int(arr.ttime[mode, arr.depot, loc])
        depart = max(arr.day_start, ws - tt)
        start = max(depart + tt, ws)
        if start <= we:
            return mode, depart, start
    raise InfeasibleVisitError(vid)


def decode(instance: Instance, genotype: Genotype) -> Phenotype:
    """Split the grand tour into journeys, consuming visits strictly in tour order.

    A journey adopts the mode gene of its opening visit. The next visit joins
    while its service can start inside its window under that mode; otherwise
    the journey returns to the depot and a new one opens at that visit. Early
    arrival waits for the window to open. A visit that cannot open a journey
    under its own gene is retried under the other mode (``mode_fallbacks``).
    """
    arr = instance.arrays
    dist, ttime, depot = arr.dist, arr.ttime, arr.depot
    tour = [int(v) for v in genotype.tour]
    genes = [int(m) for m in genotype.modes]

    journeys: list[Journey] = []
    fallbacks = 0
    mode = -1
    seq: list[int] = []
    departs: list[int] = []
    starts: list[int] = []
    metres = 0
    prev_loc = depot

    def close():
        nonlocal metres
        end = starts[-1] + int(arr.dur[seq[-1]])
        departs.append(end)
        metres += int(dist[mode, prev_loc, depot])
        journeys.append(
            Journey(
                mode=Mode(mode),
                visit_sequence=tuple(seq),
                departure_times=tuple(departs),
                service_start_times=tuple(starts),
                return_time=end + int(ttime[mode, prev_loc, depot]),
                distance_m=metres,
            )
        )

    for pos, vid in enumerate(tour):
        loc = int(arr.loc[vid])
        if seq:
            leave = starts[-1] + int(arr.dur[seq[-1]])
            start = max(leave + int(ttime[mode, prev_loc, loc]), int(arr.wstart[vid]))
            if start <= arr.wend[vid]:
                seq.append(vid)
                departs.append(leave)
                starts.append(start)
                metres += int(dist[mode, prev_loc, loc])
                prev_loc = loc
                continue
            close()
        mode, depart, start = _open(arr, vid, genes[pos])
        if mode != genes[pos]:
            fallbacks += 1
        seq, departs, starts = [vid], [depart], [start]
        metres = int(dist[mode, depot, loc])
        prev_loc = loc
    if seq:
        close()

    objective, chars = evaluate_journeys(instance.cost_params, journeys)
    return Phenotype(tuple(journeys), objective, chars, fallbacks)


def evaluate_genotype(instance: Instance, genotype: Genotype) -> tuple[int, Characteristics]:
    """Fast path: ``(objective in metres, characteristics)`` without building journeys."""
    car_m, pt_m, elapsed, n_j, n_car, _ = kernels.decode_totals(instance.arrays, genotype.tour, genotype.modes)
    chars = characteristics_from_totals(car_m, pt_m, elapsed, n_j, n_car, instance.arrays.cost)
    return car_m + pt_m, Characteristics(*chars)
