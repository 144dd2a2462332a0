import numpy as np
import pytest

from wsrp_elites import _pykernels, kernels
from wsrp_elites.ea import EaConfig, run_ea
from wsrp_elites.instances import SCHEMES, GeneratorConfig, generate_instance
from wsrp_elites.map_elites import ArchiveConfig, MapElitesConfig, calibrate_bounds, random_genotypes, run_map_elites

pytestmark = pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")


@pytest.fixture(scope="module")
def cy():
    return kernels.get_backend("cython")


@pytest.fixture(scope="module")
def insts():
    return [generate_instance(GeneratorConfig(25, s, 2)) for s in SCHEMES]


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_decode_totals_agree(cy, insts):
    rng = np.random.default_rng(0)
    for inst in insts:
        tours, modes = random_genotypes(rng, 200, inst.n)
        for t, m in zip(tours, modes):
            assert cy.decode_totals(inst.arrays, t, m) == _pykernels.decode_totals(inst.arrays, t, m)


def test_batch_evaluation_is_bit_identical(cy, insts):
    rng = np.random.default_rng(1)
    for inst in insts:
        tours, modes = random_genotypes(rng, 300, inst.n)
        out = []
        for mod in (cy, _pykernels):
            f, c = np.empty(300, np.int64), np.empty((300, 4))
            mod.evaluate_batch(inst.arrays, tours, modes, f, c)
            out.append((f, c))
        assert np.array_equal(out[0][0], out[1][0])
        assert out[0][1].tobytes() == out[1][1].tobytes()


def test_helpers_agree(cy):
    rng = np.random.default_rng(2)
    for u in rng.random(2000):
        n = int(rng.integers(1, 30))
        assert cy.pick(u, n) == _pykernels.pick(u, n)
        assert cy.section(u, n) == _pykernels.section(u, n)
        lo, hi = sorted(rng.uniform(-5, 5, 2))
        x = float(rng.uniform(-7, 7))
        assert cy.bin_index(x, lo, hi, 20) == _pykernels.bin_index(x, lo, hi, 20)
    assert cy.pick(1.0, 5) == 4


def test_variation_operators_agree(cy):
    rng = np.random.default_rng(3)
    for _ in range(2000):
        n = int(rng.integers(1, 12))
        t = rng.permutation(n).astype(np.int32)
        m = rng.integers(0, 2, n).astype(np.int8)
        u = rng.random(4)
        tl, ml = t.tolist(), m.tolist()
        _pykernels.mutate(tl, ml, *u, 0.3)
        cy.mutate(t, m, *u, 0.3)
        assert (t.tolist(), m.tolist()) == (tl, ml)
        t2 = rng.permutation(n).astype(np.int32)
        m2 = rng.integers(0, 2, n).astype(np.int8)
        i, j = _pykernels.section(rng.random(), n)
        ct, cm = cy.order_crossover(t, m, t2, m2, i, j)
        assert (ct.tolist(), cm.tolist()) == _pykernels.order_crossover(tl, ml, t2.tolist(), m2.tolist(), i, j)


def test_whole_runs_agree(insts):
    inst = insts[4]
    ac = calibrate_bounds(inst, ArchiveConfig(10, calibration="random"))
    me = [run_map_elites(inst, MapElitesConfig(6000, 500, seed=1), ac, backend=b) for b in ("python", "cython")]
    assert me[0].history == me[1].history
    assert list(me[0].archive) == list(me[1].archive)
    ea = [run_ea(inst, EaConfig(evaluation_budget=3000, seed=1), backend=b) for b in ("python", "cython")]
    assert ea[0].history == ea[1].history and ea[0].best == ea[1].best
