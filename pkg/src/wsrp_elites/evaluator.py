"""Distance objective and the four planner-facing characteristics."""
from __future__ import annotations

from .domain import Characteristics, CostParams, Instance, Mode, Phenotype


def characteristics_from_totals(
    car_m: int, pt_m: int, elapsed_min: int, n_journeys: int, n_car: int, cost: tuple
) -> tuple[float, float, float, float]:
    """Raw characteristic tuple from integer run totals.

    The compiled kernel uses exactly this expression order; keep the two in step.
    """
    ce, pe, sr, cc, pc = cost
    emissions = (car_m * ce + pt_m * pe) / 1000.0
    staff = (elapsed_min / 60.0) * sr
    travel = (car_m * cc + pt_m * pc) / 1000.0
    car_frac = n_car / n_journeys if n_journeys else 0.0
    return emissions, staff, travel, car_frac


def journey_totals(journeys) -> tuple[int, int, int, int, int]:
    """``(car_m, pt_m, elapsed_min, n_journeys, n_car)`` summed over journeys."""
    car_m = pt_m = elapsed = n_car = 0
    for j in journeys:
        if j.mode == Mode.CAR:
            car_m += j.distance_m
            n_car += 1
        else:
            pt_m += j.distance_m
        elapsed += j.elapsed
    return car_m, pt_m, elapsed, len(journeys), n_car


def evaluate(instance: Instance, phenotype: Phenotype) -> tuple[float, Characteristics]:
    """Return ``(objective_km, characteristics)`` recomputed from the journeys."""
    return evaluate_journeys(instance.cost_params, phenotype.journeys)


def evaluate_journeys(cost: CostParams, journeys) -> tuple[float, Characteristics]:
    car_m, pt_m, elapsed, n_j, n_car = journey_totals(journeys)
    chars = characteristics_from_totals(car_m, pt_m, elapsed, n_j, n_car, cost.as_tuple())
    return (car_m + pt_m) / 1000.0, Characteristics(*chars)
