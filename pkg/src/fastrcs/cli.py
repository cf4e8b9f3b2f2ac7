"""Command-line interface: ``fastrcs fit | simulate | bench | prepare-slump``.

Exit codes: 0 success, 2 bad flags, 3 unreadable or ill-formed CSV,
4 numerical failure (every candidate subset degenerate).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .datasets import CsvFormatError, atomic_write, load_csv, prepare_slump, write_slump_csv
from .lts import LtsConfig, fastlts
from .metrics import CurvePoint, bias, mis_rate, summarize, write_points, write_summary
from .rcs import DegenerateDataError, RcsConfig, fastrcs
from .simgen import Configuration, ContaminationConfig, generate

SCHEMA_VERSION = "1.0"
EXIT_USAGE = 2
EXIT_CSV = 3
EXIT_NUMERIC = 4

PRESETS = {
    "alpha50": dict(p_list=[4, 8, 12, 16], eps_list=[0.1, 0.2, 0.3, 0.4],
                    config="both", dx_list=[2.0, 8.0], alpha=0.5),
    "alpha75": dict(p_list=[4, 8, 12, 16], eps_list=[0.1, 0.2],
                    config="both", dx_list=[2.0, 8.0], alpha=0.75),
}


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _algos(text):
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = set(algos) - {"rcs", "lts"}
    if not algos or bad:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s): {sorted(bad) or text!r}")
    return algos


def _add_algo_flags(p):
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--k", type=int, default=25, help="hyperplanes per subset")
    p.add_argument("--l-stages", type=int, default=3, help="growing stages")
    p.add_argument("--starts", type=int, default=None,
                   help="random starting subsets (default: 99%% rule)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--cutoff", type=float, default=2.5)


def build_parser():
    parser = argparse.ArgumentParser(prog="fastrcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a CSV dataset and report outliers")
    fit.add_argument("input")
    fit.add_argument("--response", required=True)
    fit.add_argument("--algo", choices=["rcs", "lts"], default="rcs")
    _add_algo_flags(fit)
    fit.add_argument("--out")
    fit.add_argument("--format", choices=["json", "csv"], default="json")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="run a contamination sweep")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--p-list", type=_int_list)
    sim.add_argument("--eps-list", type=_float_list)
    sim.add_argument("--config", choices=["shift", "pointmass", "both"])
    sim.add_argument("--dx-list", type=_float_list)
    sim.add_argument("--nu-list", type=_float_list, default=[float(v) for v in range(1, 11)])
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--reps", type=int, default=100)
    sim.add_argument("--algos", type=_algos, default=["rcs", "lts"])
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    bench = sub.add_parser("bench", help="compare algorithms on one dataset")
    bench.add_argument("input")
    bench.add_argument("--response", required=True)
    bench.add_argument("--algos", type=_algos, default=["rcs", "lts"])
    _add_algo_flags(bench)
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_bench)

    prep = sub.add_parser("prepare-slump", help="filter the UCI slump file to the 59-row case study")
    prep.add_argument("raw")
    prep.add_argument("out")
    prep.set_defaults(func=cmd_prepare_slump)
    return parser


def _check_algo_flags(parser, args):
    if not 0.5 <= args.alpha < 1:
        parser.error("--alpha must lie in [0.5, 1)")
    if args.k < 1 or args.l_stages < 1:
        parser.error("--k and --l-stages must be positive")
    if args.starts is not None and args.starts < 1:
        parser.error("--starts must be positive")


def run_algorithm(name, data, args):
    if name == "rcs":
        cfg = RcsConfig(alpha=args.alpha, K=args.k, L=args.l_stages, num_starts=args.starts,
                        seed=args.seed, reweight_cutoff=args.cutoff)
        return fastrcs(data, cfg)
    cfg = LtsConfig(alpha=args.alpha, num_starts=args.starts, seed=args.seed,
                    reweight_cutoff=args.cutoff)
    return fastlts(data, cfg)


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def build_report(result, algorithm, data, predictors):
    """Serializable fit report; infinite standardized residuals become null."""
    coef, sigma2 = result.final_fit
    rep = result.report
    in_h_plus = np.zeros(data.n, dtype=bool)
    in_h_plus[rep.h_plus] = True
    return {
        "schema_version": SCHEMA_VERSION,
        "algorithm": algorithm,
        "n": data.n,
        "p": data.p,
        "h": result.h,
        "coefficients": dict(zip(["intercept", *predictors], map(float, coef))),
        "sigma_hat": math.sqrt(sigma2),
        "i_index": _finite_or_none(result.i_index_of_best) if algorithm == "rcs" else None,
        "exact_fit": bool(result.exact_fit),
        "reweight_fallback": bool(result.reweight_fallback),
        "rows": [
            {
                "index": i,
                "standardized_residual": _finite_or_none(rep.standardized_residuals[i]),
                "in_h_plus": bool(in_h_plus[i]),
                "flagged": bool(rep.flags[i]),
            }
            for i in range(data.n)
        ],
    }


def _write_report_csv(report, fh):
    for key in ("schema_version", "algorithm", "n", "p", "h", "sigma_hat", "i_index",
                "exact_fit", "reweight_fallback"):
        fh.write(f"# {key}={report[key]}\n")
    fh.write("# coefficients=" + json.dumps(report["coefficients"]) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "standardized_residual", "in_h_plus", "flagged"])
    for row in report["rows"]:
        sr = row["standardized_residual"]
        w.writerow([row["index"], "inf" if sr is None else repr(sr),
                    int(row["in_h_plus"]), int(row["flagged"])])


def _summary_line(report):
    flagged = sum(r["flagged"] for r in report["rows"])
    return (f"n={report['n']} p={report['p']} h={report['h']} flagged={flagged} "
            f"sigma_hat={report['sigma_hat']:.6g}")


def cmd_fit(args, parser):
    _check_algo_flags(parser, args)
    data, predictors = load_csv(args.input, args.response)
    result = run_algorithm(args.algo, data, args)
    report = build_report(result, args.algo, data, predictors)

    if args.format == "json":
        def write(fh):
            json.dump(report, fh, indent=2)
            fh.write("\n")
    else:
        def write(fh):
            _write_report_csv(report, fh)

    if args.out:
        atomic_write(args.out, write)
        print(_summary_line(report))
    else:
        write(sys.stdout)
        print(_summary_line(report), file=sys.stderr)
    return 0


def _cell_seeds(master, cell, rep):
    ss = np.random.SeedSequence(entropy=master, spawn_key=(cell, rep))
    gen_seed, algo_seed = ss.generate_state(2, dtype=np.uint64)
    return int(gen_seed), int(algo_seed)


def simulate_replication(task):
    """One (cell, replication): generate a sample and score every algorithm on it."""
    cell_index, rep, config, p, eps, d_x, nu, alpha, algos, master = task
    gen_seed, algo_seed = _cell_seeds(master, cell_index, rep)
    sample = generate(ContaminationConfig(p=p, epsilon=eps, configuration=config, d_x=d_x,
                                          nu=nu, alpha=alpha, seed=gen_seed))
    points = []
    for name in algos:
        if name == "rcs":
            res = fastrcs(sample.data, RcsConfig(alpha=alpha, seed=algo_seed))
        else:
            res = fastlts(sample.data, LtsConfig(alpha=alpha, seed=algo_seed))
        points.append(CurvePoint(
            algorithm=name, configuration=Configuration(config).value, p=p, epsilon=eps,
            d_x=d_x, alpha=alpha, nu=nu, replication=rep,
            bias=bias(res.final_fit[0]),
            mis_rate=mis_rate(sample.outlier_indices, res.report.h_plus),
        ))
    return points


def sweep_tasks(p_list, eps_list, configs, dx_list, nu_list, alpha, reps, algos, seed):
    cells = itertools.product(configs, p_list, eps_list, dx_list, nu_list)
    for cell_index, (config, p, eps, d_x, nu) in enumerate(cells):
        for rep in range(reps):
            yield (cell_index, rep, config, p, eps, d_x, nu, alpha, tuple(algos), seed)


def run_sweep(tasks, workers=1):
    tasks = list(tasks)
    if workers == 1:
        chunks = map(simulate_replication, tasks)
        return [pt for chunk in chunks for pt in chunk]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunks = pool.map(simulate_replication, tasks, chunksize=8)
        return [pt for chunk in chunks for pt in chunk]


def cmd_simulate(args, parser):
    preset = PRESETS.get(args.preset, {})
    p_list = args.p_list or preset.get("p_list")
    eps_list = args.eps_list if args.eps_list is not None else preset.get("eps_list")
    config = args.config or preset.get("config")
    dx_list = args.dx_list or preset.get("dx_list")
    alpha = args.alpha if args.alpha is not None else preset.get("alpha", 0.5)
    if not (p_list and eps_list is not None and config and dx_list):
        parser.error("--p-list, --eps-list, --config and --dx-list are required without --preset")
    if any(p < 2 for p in p_list):
        parser.error("every p must be at least 2")
    if any(not 0 <= e < 0.5 for e in eps_list) or not eps_list:
        parser.error("every epsilon must lie in [0, 0.5)")
    if any(d < 0 for d in dx_list) or any(v < 0 for v in args.nu_list) or not args.nu_list:
        parser.error("d_x and nu values must be non-negative")
    if not 0.5 <= alpha < 1:
        parser.error("--alpha must lie in [0.5, 1)")
    if args.reps < 1 or args.workers < 1:
        parser.error("--reps and --workers must be positive")

    configs = ["shift", "pointmass"] if config == "both" else [config]
    tasks = sweep_tasks(p_list, eps_list, configs, dx_list, args.nu_list, alpha,
                        args.reps, args.algos, args.seed)
    points = run_sweep(tasks, args.workers)
    rows = summarize(points)

    out = Path(args.out)
    summary_path = out.with_name(out.stem + ".summary.csv")
    atomic_write(out, lambda fh: write_points(points, fh))
    atomic_write(summary_path, lambda fh: write_summary(rows, fh))
    print(f"wrote {len(points)} rows to {out} and {len(rows)} summary rows to {summary_path}")
    return 0


def bench_rows(data, args):
    rows = []
    for name in args.algos:
        t0 = time.perf_counter()
        res = run_algorithm(name, data, args)
        elapsed = time.perf_counter() - t0
        coef, sigma2 = res.final_fit
        row = {"algorithm": name, "wall_time_s": elapsed,
               "n_flagged": int(res.report.flags.sum()), "sigma_hat": math.sqrt(sigma2)}
        row.update({f"coef_{j}": float(c) for j, c in enumerate(coef)})
        rows.append(row)
    return rows


def cmd_bench(args, parser):
    _check_algo_flags(parser, args)
    data, _ = load_csv(args.input, args.response)
    rows = bench_rows(data, args)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if args.out:
        atomic_write(args.out, lambda fh: fh.write(buf.getvalue()))
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_prepare_slump(args, parser):
    X, y = prepare_slump(args.raw)
    write_slump_csv(X, y, args.out)
    print(f"wrote {len(y)} rows to {args.out}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except CsvFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CSV
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
