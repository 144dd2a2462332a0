import itertools

import numpy as np
import pytest

from wsrp_elites import kernels
from wsrp_elites.domain import CostParams, Instance, TravelModel, Visit
from wsrp_elites.instances import GeneratorConfig, generate_instance


def make_instance(car_d, car_t, windows, pt_d=None, pt_t=None, dur=30, name="hand", cost=None, depot=0):
    """Build an instance from square matrices over locations (depot first); visit i sits at location i+1."""
    car_d = np.asarray(car_d, dtype=np.int64)
    car_t = np.asarray(car_t, dtype=np.int32)
    pt_d = car_d if pt_d is None else np.asarray(pt_d, dtype=np.int64)
    pt_t = car_t if pt_t is None else np.asarray(pt_t, dtype=np.int32)
    visits = [Visit(i, i + 1, dur, ws, we) for i, (ws, we) in enumerate(windows)]
    return Instance(
        name=name,
        visits=visits,
        depot=depot,
        day_start=0,
        day_end=480,
        travel=TravelModel(np.stack([car_d, pt_d]), np.stack([car_t, pt_t])),
        cost_params=cost or CostParams(),
    )


def random_small_instance(rng: np.random.Generator, n: int) -> Instance:
    """Arbitrary asymmetric matrices and windows, unrelated to the generator's geometry."""
    size = n + 1
    d = rng.integers(100, 15000, size=(2, size, size))
    t = rng.integers(1, 90, size=(2, size, size))
    for m in range(2):
        np.fill_diagonal(d[m], 0)
        np.fill_diagonal(t[m], 0)
    windows = []
    for _ in range(n):
        ws = int(rng.integers(0, 400))
        we = int(rng.integers(ws + 1, 481))
        # make each visit reachable as a singleton under at least one mode
        windows.append((ws, max(we, ws + 1)))
    inst = Instance(
        name="rand",
        visits=[Visit(i, i + 1, int(rng.integers(10, 60)), ws, we) for i, (ws, we) in enumerate(windows)],
        depot=0,
        day_start=0,
        day_end=480,
        travel=TravelModel(d, t),
    )
    for i, v in enumerate(inst.visits):
        if min(t[0, 0, i + 1], t[1, 0, i + 1]) > v.window_end:
            return random_small_instance(rng, n)
    return inst


def simulate(instance: Instance, tour, modes):
    """Independent minute-by-minute re-timing of the greedy split.

    Returns a list of (mode, visits, depart, starts, return_time, metres).
    """
    dist = instance.travel.distance_m
    tt = instance.travel.time_min
    vs = instance.visits
    dep = instance.depot
    out = []

    def first_feasible(v, gene):
        for mode in (gene, 1 - gene):
            leg = int(tt[mode, dep, vs[v].location])
            # latest departure that does not arrive before the window, never before the day starts
            depart = instance.day_start
            while depart + leg < vs[v].window_start:
                depart += 1
            clock = depart + leg
            while clock < vs[v].window_start:
                clock += 1
            if clock <= vs[v].window_end:
                return mode, depart, clock
        raise AssertionError("infeasible singleton")

    cur = None
    for pos, v in enumerate(tour):
        if cur is not None:
            mode, seq, depart, starts, metres = cur
            last = vs[seq[-1]]
            clock = starts[-1] + last.service_duration + int(tt[mode, last.location, vs[v].location])
            while clock < vs[v].window_start:
                clock += 1
            if clock <= vs[v].window_end:
                seq.append(v)
                starts.append(clock)
                cur[4] = metres + int(dist[mode, last.location, vs[v].location])
                continue
            out.append(_close(instance, cur))
        mode, depart, start = first_feasible(v, int(modes[pos]))
        cur = [mode, [v], depart, [start], int(dist[mode, dep, vs[v].location])]
    out.append(_close(instance, cur))
    return out


def _close(instance, cur):
    mode, seq, depart, starts, metres = cur
    last = instance.visits[seq[-1]]
    back = starts[-1] + last.service_duration + int(instance.travel.time_min[mode, last.location, instance.depot])
    metres += int(instance.travel.distance_m[mode, last.location, instance.depot])
    return (mode, tuple(seq), depart, tuple(starts), back, metres)


def enumerate_all(instance: Instance):
    """Every tour x mode assignment: (tours, modes, fitness metres, characteristics)."""
    n = instance.n
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int32)
    masks = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    tours = np.ascontiguousarray(np.repeat(perms, len(masks), axis=0))
    modes = np.ascontiguousarray(np.tile(masks, (len(perms), 1)))
    fits = np.empty(len(tours), dtype=np.int64)
    chars = np.empty((len(tours), 4))
    kernels.evaluate_batch(instance.arrays, tours, modes, fits, chars)
    return tours, modes, fits, chars


@pytest.fixture(scope="session")
def lon2():
    return generate_instance(GeneratorConfig(60, "2", 1))


@pytest.fixture(scope="session")
def small_rnd():
    return generate_instance(GeneratorConfig(12, "rnd", 4))


@pytest.fixture(scope="session")
def six():
    return generate_instance(GeneratorConfig(6, "2", 1))
