import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsrp_elites import kernels
from wsrp_elites.decoder import decode, evaluate_genotype
from wsrp_elites.domain import Genotype, Mode, validate_phenotype
from wsrp_elites.errors import InfeasibleVisitError
from wsrp_elites.evaluator import journey_totals
from wsrp_elites.instances import GeneratorConfig, generate_instance
from wsrp_elites.map_elites import random_genotype

from conftest import make_instance, random_small_instance, simulate


def test_single_visit_round_trip():
    inst = make_instance([[0, 4200], [4200, 0]], [[0, 11], [11, 0]], [(0, 480)])
    ph = decode(inst, Genotype.from_lists([0], [Mode.CAR]))
    assert len(ph.journeys) == 1
    j = ph.journeys[0]
    assert j.mode == Mode.CAR and j.visit_sequence == (0,)
    assert ph.objective == 2 * 4.2
    assert (j.departure_times[0], j.service_start_times[0], j.return_time) == (0, 11, 52)


def test_opening_gene_fixes_the_journey_mode():
    # car chain 0 -> 1 -> 2 meets every window; the later PT genes are ignored
    d = [[0, 1000, 2000, 3000], [1000, 0, 1000, 2000], [2000, 1000, 0, 1000], [3000, 2000, 1000, 0]]
    t = [[0, 5, 10, 15], [5, 0, 5, 10], [10, 5, 0, 5], [15, 10, 5, 0]]
    pt_t = (np.array(t) * 3).tolist()
    inst = make_instance(d, t, [(0, 60), (30, 90), (60, 130)], pt_t=pt_t)
    ph = decode(inst, Genotype.from_lists([0, 1, 2], [Mode.CAR, Mode.PT, Mode.PT]))
    assert [(j.mode, j.visit_sequence) for j in ph.journeys] == [(Mode.CAR, (0, 1, 2))]
    # hand timing: start 5, leave 35, reach 1 at 40, leave 70, reach 2 at 75
    assert ph.journeys[0].service_start_times == (5, 40, 75)
    assert ph.journeys[0].departure_times == (0, 35, 70, 105)
    assert ph.journeys[0].return_time == 120
    assert ph.objective == 6.0


def test_late_window_before_early_window_splits():
    d = [[0, 2000, 2000], [2000, 0, 1000], [2000, 1000, 0]]
    t = [[0, 8, 8], [8, 0, 4], [8, 4, 0]]
    inst = make_instance(d, t, [(240, 480), (0, 240)])
    ph = decode(inst, Genotype.from_lists([0, 1], [0, 0]))
    assert [j.visit_sequence for j in ph.journeys] == [(0,), (1,)]
    # just-in-time departures
    assert ph.journeys[0].departure_times[0] == 232
    assert ph.journeys[1].departure_times[0] == 0
    assert ph.objective == 8.0


def test_mode_fallback_is_counted():
    # PT is too slow to reach the visit before its window closes
    inst = make_instance([[0, 1000], [1000, 0]], [[0, 10], [10, 0]], [(0, 20)], pt_t=[[0, 50], [50, 0]])
    ph = decode(inst, Genotype.from_lists([0], [Mode.PT]))
    assert ph.mode_fallbacks == 1
    assert ph.journeys[0].mode == Mode.CAR


def test_unreachable_visit_raises():
    inst = make_instance([[0, 1000], [1000, 0]], [[0, 50], [50, 0]], [(0, 20)])
    with pytest.raises(InfeasibleVisitError) as e:
        decode(inst, Genotype.from_lists([0], [0]))
    assert e.value.visit == 0
    with pytest.raises(InfeasibleVisitError):
        kernels.decode_totals(inst.arrays, np.array([0], np.int32), np.array([0], np.int8))


def _as_tuples(ph):
    return [
        (int(j.mode), j.visit_sequence, j.departure_times[0], j.service_start_times, j.return_time, j.distance_m)
        for j in ph.journeys
    ]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_matches_stepwise_simulation(seed, n):
    rng = np.random.default_rng(seed)
    inst = random_small_instance(rng, n)
    g = random_genotype(n, rng)
    ph = decode(inst, g)
    expected = simulate(inst, g.tour.tolist(), g.modes.tolist())
    assert _as_tuples(ph) == expected
    assert ph.objective == sum(e[5] for e in expected) / 1000.0


@pytest.fixture(scope="module")
def generated():
    return [generate_instance(GeneratorConfig(40, s, 9)) for s in ("1", "2", "4", "8", "rnd")]


def test_decoded_phenotypes_are_valid_and_preserve_order(generated):
    rng = np.random.default_rng(5)
    for inst in generated:
        for _ in range(100):
            g = random_genotype(inst.n, rng)
            ph = decode(inst, g)
            assert validate_phenotype(inst, ph) == []
            flat = [v for j in ph.journeys for v in j.visit_sequence]
            assert flat == g.tour.tolist()


def test_fast_path_agrees_with_full_decode(generated):
    rng = np.random.default_rng(6)
    for inst in generated:
        for _ in range(50):
            g = random_genotype(inst.n, rng)
            ph = decode(inst, g)
            metres, chars = evaluate_genotype(inst, g)
            assert metres / 1000.0 == ph.objective
            assert chars == ph.characteristics
            car_m, pt_m, el, nj, nc = journey_totals(ph.journeys)
            assert kernels.decode_totals(inst.arrays, g.tour, g.modes)[:5] == (car_m, pt_m, el, nj, nc)


def test_decode_is_deterministic(generated):
    g = random_genotype(generated[4].n, np.random.default_rng(1))
    assert decode(generated[4], g) == decode(generated[4], g)
