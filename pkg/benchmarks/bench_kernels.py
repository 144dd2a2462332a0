"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--visits 60] [--genotypes 2000] [--budget 20000]

Both backends must produce identical results; the script checks that before
reporting timings.
"""
import argparse
import time

import numpy as np

from wsrp_elites import kernels
from wsrp_elites.ea import EaConfig, run_ea
from wsrp_elites.instances import GeneratorConfig, generate_instance
from wsrp_elites.map_elites import ArchiveConfig, MapElitesConfig, calibrate_bounds, random_genotypes, run_map_elites


def _time(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--visits", type=int, default=60)
    ap.add_argument("--windows", default="2")
    ap.add_argument("--genotypes", type=int, default=2000)
    ap.add_argument("--budget", type=int, default=20_000)
    args = ap.parse_args()

    backends = kernels.available_backends()
    inst = generate_instance(GeneratorConfig(args.visits, args.windows, 1))
    tours, modes = random_genotypes(np.random.default_rng(0), args.genotypes, inst.n)
    ac = calibrate_bounds(inst, ArchiveConfig(calibration="random"))
    print(f"instance {inst.name}, backends: {', '.join(backends)}")

    rows = {}
    for name in backends:
        mod = kernels.get_backend(name)

        def batch():
            f, c = np.empty(len(tours), np.int64), np.empty((len(tours), 4))
            mod.evaluate_batch(inst.arrays, tours, modes, f, c)
            return f, c

        t_dec, dec = _time(batch)
        t_me, me = _time(lambda: run_map_elites(inst, MapElitesConfig(args.budget, 1000, seed=0), ac, backend=name), 1)
        t_ea, ea = _time(lambda: run_ea(inst, EaConfig(evaluation_budget=args.budget, seed=0), backend=name), 1)
        rows[name] = (t_dec, t_me, t_ea, dec, me.history, ea.history)

    if len(rows) == 2:
        a, b = rows["python"], rows["cython"]
        assert np.array_equal(a[3][0], b[3][0]) and a[3][1].tobytes() == b[3][1].tobytes()
        assert a[4] == b[4] and a[5] == b[5]
        print("results identical across backends")

    print(f"{'backend':8} {'decode us':>10} {'ME s':>8} {'EA s':>8}")
    for name, (t_dec, t_me, t_ea, *_) in rows.items():
        print(f"{name:8} {1e6 * t_dec / len(tours):10.2f} {t_me:8.3f} {t_ea:8.3f}")
    if len(rows) == 2:
        print(f"speed-up: decode x{rows['python'][0] / rows['cython'][0]:.1f}, "
              f"ME x{rows['python'][1] / rows['cython'][1]:.1f}, EA x{rows['python'][2] / rows['cython'][2]:.1f}")


if __name__ == "__main__":
    main()
