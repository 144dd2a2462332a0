"""Command-line entry point: generate, run, compare, analyze, slices, protocol.

Exit codes: 0 success, 1 usage or I/O error, 2 infeasible or validation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
from pathlib import Path

from .domain import CostParams
from .errors import WsrpError
from .export import import_archive, write_slices
from .instances import SCHEMES, GeneratorConfig, generate_instance_report, load_instance, save_instance, summary
from .metrics import analyze, check_poolable, load_run, vargha_delaney_a
from .experiment import RunSpec, load_runs, run_many

EXIT_USAGE = 1
EXIT_INVALID = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats4(text: str) -> tuple[float, ...]:
    vals = tuple(float(x) for x in text.split(","))
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("expected four comma-separated numbers")
    return vals


def _add_algo_flags(p):
    p.add_argument("--budget", type=int, default=100_000, help="evaluation budget I (default 100000)")
    p.add_argument("--init", type=int, default=1000, help="MAP-Elites random initialisations G (default 1000)")
    p.add_argument("--crossover", type=float, default=0.5, help="crossover probability (default 0.5)")
    p.add_argument("--mode-flip", type=float, default=0.1, help="mode-gene flip probability per mutation (default 0.1)")
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--children", type=int, default=40)
    p.add_argument("--mutation-rate", type=float, default=0.7)
    p.add_argument("--bins", type=int, default=20, help="bins per characteristic (default 20)")
    p.add_argument("--calibration", choices=("pilot", "random"), default="pilot",
                   help="how archive bounds are found when --lower/--upper are absent")
    p.add_argument("--lower", type=_floats4, help="explicit lower bounds: emissions,staff,travel,car")
    p.add_argument("--upper", type=_floats4, help="explicit upper bounds")
    p.add_argument("--ea-trace", action="store_true", help="EA: also archive every evaluated individual")
    p.add_argument("--backend", choices=("python", "cython"), help="force a kernel backend")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def _spec(args, algo: str, seed: int) -> RunSpec:
    return RunSpec(
        algorithm=algo, seed=seed, budget=args.budget, init_count=args.init,
        crossover_probability=args.crossover, mode_flip_probability=args.mode_flip,
        population_size=args.population, children_per_generation=args.children, mutation_rate=args.mutation_rate,
        bins_per_dim=args.bins, calibration=args.calibration, lower=args.lower, upper=args.upper,
        ea_trace=args.ea_trace,
    )


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wsrp-elites", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance file")
    g.add_argument("--visits", type=int, required=True)
    g.add_argument("--windows", choices=SCHEMES, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--name")
    g.add_argument("--area-km", type=float, default=20.0)
    g.add_argument("--car-speed", type=float, default=25.0)
    g.add_argument("--pt-speed", type=float, default=17.0)
    g.add_argument("--pt-detour", type=float, default=1.4)
    d = CostParams()
    g.add_argument("--car-emissions", type=float, default=d.car_emissions_per_km)
    g.add_argument("--pt-emissions", type=float, default=d.pt_emissions_per_km)
    g.add_argument("--staff-rate", type=float, default=d.staff_rate_per_hour)
    g.add_argument("--car-cost", type=float, default=d.car_cost_per_km)
    g.add_argument("--pt-cost", type=float, default=d.pt_cost_per_km)

    r = sub.add_parser("run", help="run MAP-Elites or the EA on an instance")
    r.add_argument("--algo", choices=("me", "ea"), required=True)
    r.add_argument("--instance", required=True)
    r.add_argument("--seed", type=int, nargs="+", default=[0],
                   help="one or more seeds; several seeds write <out>/seed-<s>/")
    r.add_argument("--out", required=True)
    _add_algo_flags(r)

    c = sub.add_parser("compare", help="Vargha-Delaney A on best objectives of two run groups")
    c.add_argument("--runs-a", nargs="+", required=True)
    c.add_argument("--runs-b", nargs="+", required=True)
    c.add_argument("--name-a", default="A")
    c.add_argument("--name-b", default="B")

    a = sub.add_parser("analyze", help="coverage and precision of pooled runs (CSV)")
    a.add_argument("--runs", nargs="+", required=True)
    a.add_argument("--out", help="write CSV here instead of stdout")
    a.add_argument("--ea-trace", action="store_true", help="use EA trace archives where present")

    s = sub.add_parser("slices", help="six pairwise 2-D maps (SVG + CSV) of a run's archive")
    s.add_argument("--run", required=True)
    s.add_argument("--out", required=True)

    pr = sub.add_parser("protocol", help="generate five instances and run ME and EA over seeds on each")
    pr.add_argument("--visits", type=int, default=60)
    pr.add_argument("--seeds", type=int, default=10, help="runs per algorithm and instance")
    pr.add_argument("--instance-seed", type=int, default=1)
    pr.add_argument("--out", required=True)
    _add_algo_flags(pr)
    return ap


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        visit_count=args.visits, time_window_scheme=args.windows, seed=args.seed,
        area_extent_km=args.area_km, car_speed_kmh=args.car_speed, pt_speed_kmh=args.pt_speed,
        pt_detour_factor=args.pt_detour, name=args.name,
        cost_params=CostParams(args.car_emissions, args.pt_emissions, args.staff_rate, args.car_cost, args.pt_cost),
    )
    inst, retries = generate_instance_report(cfg)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    info = summary(inst)
    info["windowRedraws"] = retries
    info["path"] = str(out)
    print(json.dumps(info))
    return 0


def cmd_run(args) -> int:
    inst = load_instance(args.instance)  # validate before spawning work
    out = Path(args.out)
    jobs = []
    for seed in args.seed:
        spec = _spec(args, args.algo, seed)
        spec.archive_config()
        d = out if len(args.seed) == 1 else out / f"seed-{seed}"
        jobs.append((args.instance, spec, d, args.backend))
    _validate_spec(jobs[0][1], inst)
    for d, best in run_many(jobs, args.jobs):
        print(f"{d}\t{args.algo}\tbest={best:.3f} km")
    return 0


def _validate_spec(spec: RunSpec, inst) -> None:
    from .ea import EaConfig
    from .map_elites import MapElitesConfig

    if spec.algorithm == "me":
        MapElitesConfig(spec.budget, spec.init_count, spec.crossover_probability, spec.mode_flip_probability, spec.seed)
    else:
        EaConfig(spec.population_size, spec.children_per_generation, 2, spec.mutation_rate,
                 spec.crossover_probability, spec.mode_flip_probability, spec.budget, spec.seed)


def cmd_compare(args) -> int:
    ra, rb = load_runs(args.runs_a), load_runs(args.runs_b)
    check_poolable(ra + rb)
    fa = [r.best_objective for r in ra]
    fb = [r.best_objective for r in rb]
    vd = vargha_delaney_a(fa, fb)
    print(
        f"instance={ra[0].instance_name} {args.name_a}: n={len(fa)} median={statistics.median(fa):.3f} "
        f"{args.name_b}: n={len(fb)} median={statistics.median(fb):.3f} {vd.describe(args.name_a, args.name_b)}"
    )
    return 0


def cmd_analyze(args) -> int:
    records = load_runs(args.runs)
    if args.ea_trace:
        for r in records:
            trace = r.path / "trace_archive.csv"
            if r.algorithm == "ea" and trace.exists():
                r.archive = import_archive(trace, r.archive.config)
    rows = analyze(records)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_slices(args) -> int:
    rec = load_run(args.run)
    for p in write_slices(rec.archive, args.out):
        print(p)
    return 0


def cmd_protocol(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    inst_paths = {}
    for scheme in SCHEMES:
        cfg = GeneratorConfig(args.visits, scheme, args.instance_seed)
        inst, _ = generate_instance_report(cfg)
        path = out / f"{inst.name}.json"
        save_instance(inst, path)
        inst_paths[scheme] = (inst, path)
        for algo in ("me", "ea"):
            for seed in range(args.seeds):
                spec = _spec(args, algo, seed)
                _validate_spec(spec, inst)
                jobs.append((str(path), spec, out / inst.name / f"{algo}-{seed}", args.backend))
    run_many(jobs, args.jobs)
    lines = []
    for scheme, (inst, _) in inst_paths.items():
        me = load_runs([out / inst.name / f"me-{s}" for s in range(args.seeds)])
        ea = load_runs([out / inst.name / f"ea-{s}" for s in range(args.seeds)])
        vd = vargha_delaney_a([r.best_objective for r in me], [r.best_objective for r in ea])
        lines.append(
            f"{inst.name}\tME median={statistics.median(r.best_objective for r in me):.3f}"
            f"\tEA median={statistics.median(r.best_objective for r in ea):.3f}\t{vd.describe('ME', 'EA')}"
        )
        rows = analyze(me + ea)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        (out / inst.name / "analysis.csv").write_text(buf.getvalue())
    (out / "comparison.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "compare": cmd_compare,
    "analyze": cmd_analyze,
    "slices": cmd_slices,
    "protocol": cmd_protocol,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except WsrpError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
