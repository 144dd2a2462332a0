import numpy as np
import pytest

from wsrp_elites import kernels
from wsrp_elites.decoder import evaluate_genotype
from wsrp_elites.domain import Genotype
from wsrp_elites.ea import EaConfig, population_archive, run_ea
from wsrp_elites.errors import ConfigError
from wsrp_elites.map_elites import ArchiveConfig, calibrate_bounds, check_archive, random_genotypes

from conftest import enumerate_all


def test_config_validation():
    with pytest.raises(ConfigError, match="population size"):
        EaConfig(population_size=100, evaluation_budget=99)
    with pytest.raises(ConfigError):
        EaConfig(population_size=1)
    with pytest.raises(ConfigError):
        EaConfig(mutation_rate=1.2)
    with pytest.raises(ConfigError):
        EaConfig(tournament_size=3)


def test_budget_equal_to_population_returns_best_random(small_rnd):
    res = run_ea(small_rnd, EaConfig(population_size=50, evaluation_budget=50, seed=2))
    rng = np.random.default_rng(2)
    tours, modes = random_genotypes(rng, 50, small_rnd.n)
    fits = [evaluate_genotype(small_rnd, Genotype(t, m))[0] for t, m in zip(tours, modes)]
    assert res.best_objective == min(fits) / 1000.0
    assert res.evaluations == 50


def test_same_seed_same_run(small_rnd):
    cfg = EaConfig(evaluation_budget=5000, seed=11)
    a, b = run_ea(small_rnd, cfg), run_ea(small_rnd, cfg)
    assert a.history == b.history and a.best == b.best
    assert np.array_equal(a.population[0], b.population[0])


def test_generations_keep_size_validity_and_elitism(small_rnd):
    rng = np.random.default_rng(0)
    tours, modes = random_genotypes(rng, 30, small_rnd.n)
    core = kernels.EaCore(small_rnd.arrays, tours, modes)
    trace = np.empty(30 + 40 * 100, dtype=np.int64)
    core.evaluate_initial(trace[:30])
    best = int(core.export()[2].min())
    n = small_rnd.n
    buf = (np.empty((10, n), np.int32), np.empty((10, n), np.int8), np.empty(10, np.int64), np.empty((10, 4)))
    done = 30
    for _ in range(100):
        core.generation(rng.random((10, kernels.EA_UNIFORMS)), 0.5, 0.7, 0.1, trace[done : done + 10], *buf)
        done += 10
        pt, pm, pf = core.export()
        assert len(pf) == 30
        assert all(sorted(t) == list(range(n)) for t in pt.tolist())
        for t, m, f in zip(pt[:3], pm[:3], pf[:3]):
            assert evaluate_genotype(small_rnd, Genotype(t, m))[0] == f
        assert int(pf.min()) <= best
        best = int(pf.min())
    assert trace[done - 1] == best


def test_history_is_non_increasing(small_rnd):
    res = run_ea(small_rnd, EaConfig(evaluation_budget=8000, seed=1))
    vals = [v for _, v in res.history]
    assert vals == sorted(vals, reverse=True)
    assert res.history[-1] == (8000, res.best_objective)


def test_six_visit_optimum(six):
    _, _, fits, _ = enumerate_all(six)
    res = run_ea(six, EaConfig(evaluation_budget=50_000, seed=0))
    assert res.best_objective <= 1.02 * fits.min() / 1000.0


def test_population_and_trace_archives(small_rnd):
    ac = calibrate_bounds(small_rnd, ArchiveConfig(8, calibration="random"))
    res = run_ea(small_rnd, EaConfig(evaluation_budget=4000, seed=3), archive_config=ac, archive_trace=True)
    pop = population_archive(small_rnd, res.population[0], res.population[1], ac)
    assert check_archive(small_rnd, pop) == []
    assert check_archive(small_rnd, res.trace_archive) == []
    assert len(res.trace_archive) >= len(pop)
    assert res.trace_archive.best().fitness == res.best_objective
