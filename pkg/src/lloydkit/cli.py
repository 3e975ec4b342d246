"""``lloydkit`` command line: gen, fit, eval and experiment.

Outputs go under ``--out``; when it is omitted the directory named by the
``LLOYDKIT_OUT`` environment variable is used, falling back to ``./lloydkit-out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from lloydkit import io
from lloydkit.community import CommuConfig, fit_commu_lloyd
from lloydkit.crowd import CrowdConfig, fit_crowd_lloyd
from lloydkit.experiments import PRESETS, ExperimentConfig, format_report, run_experiment, write_experiment
from lloydkit.lloyd import LloydConfig, fit_lloyd, fit_symmetric_two, random_init_search
from lloydkit.metrics import confusion_counts, groupwise_rate, misclustering_rate, misclustering_rate_bijective
from lloydkit.rng import make_rng
from lloydkit.samplers import (
    GmmSpec,
    SbmSpec,
    crowd_preset,
    orthonormal_centers,
    sample_crowd,
    sample_gmm,
    sample_sbm,
    sample_symmetric_two,
    sample_truth,
    sbm_preset,
)
from lloydkit.spectral import spectral_cluster, truncated_svd

OUT_ENV = "LLOYDKIT_OUT"


def _out_dir(args) -> Path:
    return io.ensure_dir(args.out or os.environ.get(OUT_ENV) or "lloydkit-out")


def _wrote(paths) -> None:
    for p in paths:
        print(f"wrote {p}")


# gen


def cmd_gen(args) -> int:
    out = _out_dir(args)
    if args.kind == "gmm":
        sigma = args.sigma if args.sigma is not None else 2.0 / args.snr
        centers = orthonormal_centers(args.k, args.d, make_rng(args.seed, "centers"))
        base, extra = divmod(args.n, args.k)
        sizes = tuple(base + (h < extra) for h in range(args.k))
        data, truth = sample_gmm(GmmSpec(centers, sigma, sizes), make_rng(args.seed, "gmm"))
        io.save_dense_csv(out / "data.csv", data)
        io.save_dense_csv(out / "centers.csv", centers)
        io.save_labels(out / "truth.txt", truth)
        _wrote([out / "data.csv", out / "centers.csv", out / "truth.txt"])
    elif args.kind == "sym2":
        sigma = 1.0 if args.sigma is None else args.sigma
        norm = args.norm if args.norm is not None else 4.0 * sigma * np.sqrt(np.log(args.n))
        theta = np.zeros(args.d)
        theta[0] = norm
        data, truth = sample_symmetric_two(theta, sigma, args.n, make_rng(args.seed, "sym2"))
        io.save_dense_csv(out / "data.csv", data)
        io.save_dense_csv(out / "centers.csv", theta[None, :])
        io.save_sign_labels(out / "truth.txt", truth)
        _wrote([out / "data.csv", out / "centers.csv", out / "truth.txt"])
    elif args.kind == "sbm":
        if args.within is not None:
            spec = SbmSpec.from_probabilities(args.n, args.k, args.within, args.between)
        else:
            spec = sbm_preset(args.preset)
        adj, truth = sample_sbm(spec, make_rng(args.seed, "sbm"))
        io.save_edge_list(out / "edges.txt", adj)
        io.save_labels(out / "truth.txt", truth)
        _wrote([out / "edges.txt", out / "truth.txt"])
    elif args.kind == "crowd":
        spec = crowd_preset(args.m, args.n, args.k, args.p, seed=make_rng(args.seed, "workers"))
        truth = sample_truth(args.n, args.k, make_rng(args.seed, "truth"))
        table = sample_crowd(spec, truth, make_rng(args.seed, "answers"))
        io.save_crowd_csv(out / "answers.csv", table)
        io.save_confusion_csv(out / "confusion.csv", spec.confusion)
        io.save_labels(out / "truth.txt", truth)
        _wrote([out / "answers.csv", out / "confusion.csv", out / "truth.txt"])
    return 0


# fit


def _balanced_random_labels(n: int, k: int, seed: int) -> np.ndarray:
    return make_rng(seed, "init").permutation(np.arange(n) % k)


def _fit_lloyd(args, truth):
    data = io.load_dense_csv(args.data)
    if args.init == "file":
        init = io.load_labels(args.init_file, args.k)
    elif args.init == "random":
        init = _balanced_random_labels(data.shape[0], args.k, args.seed)
    elif args.init == "spectral":
        init, _ = spectral_cluster(data, args.k, seed=args.seed)
    else:
        raise SystemExit(f"--init {args.init} is not available for lloyd")
    fit = fit_lloyd(data, args.k, init, LloydConfig(max_iter=args.iters, seed=args.seed), truth=truth)
    return fit, {"centers.csv": fit.centers}


def _fit_sym2(args, truth):
    data = io.load_dense_csv(args.data)
    z = None if truth is None else 1 - 2 * truth
    config = LloydConfig(max_iter=args.iters, seed=args.seed)
    if args.init == "random":
        fit = random_init_search(data, 2, args.delta, config, truth=z)
    elif args.init == "spectral":
        v = truncated_svd(data, 1, seed=args.seed).right_vectors[:, 0]
        fit = fit_symmetric_two(data, init_center=v, config=config, truth=z)
    elif args.init == "file":
        fit = fit_symmetric_two(data, 1 - 2 * io.load_labels(args.init_file, 2), config, truth=z)
    else:
        raise SystemExit(f"--init {args.init} is not available for sym2")
    # Written back as 0-based {0: +1, 1: -1} so save_labels gives 1 and 2.
    fit.labels = (1 - fit.labels) // 2
    return fit, {"centers.csv": fit.extras["theta"][None, :]}


def _fit_commu(args, truth):
    adj = io.load_edge_list(args.data, args.n)
    init = None
    if args.init == "file":
        init = io.load_labels(args.init_file, args.k)
    elif args.init != "spectral":
        raise SystemExit(f"--init {args.init} is not available for commu")
    config = CommuConfig(tau=args.tau, max_iter=args.iters, seed=args.seed)
    fit = fit_commu_lloyd(adj, args.k, config, truth=truth, init=init)
    return fit, {"centers.csv": fit.centers}


def _fit_crowd(args, truth):
    table = io.load_crowd_csv(args.data, k=args.k)
    init = None
    if args.init == "file":
        init = io.load_labels(args.init_file, args.k)
    elif args.init != "mv":
        raise SystemExit(f"--init {args.init} is not available for crowd")
    fit = fit_crowd_lloyd(table, args.k, CrowdConfig(max_iter=args.iters or 50, seed=args.seed), truth=truth, init=init)
    return fit, {"confusion.csv": fit.extras["confusion"]}


FITTERS = {"lloyd": _fit_lloyd, "sym2": _fit_sym2, "commu": _fit_commu, "crowd": _fit_crowd}
DEFAULT_INIT = {"lloyd": "spectral", "sym2": "spectral", "commu": "spectral", "crowd": "mv"}


def cmd_fit(args) -> int:
    if args.algo == "sym2":
        args.k = 2
    if args.k is None:
        raise SystemExit("--k is required")
    args.init = args.init or DEFAULT_INIT[args.algo]
    if args.init == "file" and not args.init_file:
        raise SystemExit("--init file needs --init-file")
    truth = io.load_labels(args.truth) if args.truth else None
    fit, extra_files = FITTERS[args.algo](args, truth)
    out = _out_dir(args)
    io.save_labels(out / "labels.txt", fit.labels)
    written = [out / "labels.txt"]
    for name, array in extra_files.items():
        if name == "confusion.csv":
            io.save_confusion_csv(out / name, array)
        else:
            io.save_dense_csv(out / name, array)
        written.append(out / name)
    io.write_csv(out / "trace.csv", io.TRACE_HEADER, io.trace_rows(args.algo, 0, fit.trace, not args.no_timing))
    written.append(out / "trace.csv")
    _wrote(written)
    last = fit.trace.entries[-1].metrics
    print(f"iterations={fit.iterations_run} converged={fit.converged}")
    if truth is not None:
        print(f"A={last.misclustering:.6g} G={last.groupwise:.6g}")
    return 0


# eval


def cmd_eval(args) -> int:
    truth = io.load_labels(args.truth)
    pred = io.load_labels(args.pred)
    if truth.size != pred.size:
        raise SystemExit(f"length mismatch: truth has {truth.size} labels, pred has {pred.size}")
    k = args.k or int(max(truth.max(), pred.max())) + 1
    rate, label_map = misclustering_rate(truth, pred, k)
    print(f"A={rate:.6g}")
    print(f"A_bijective={misclustering_rate_bijective(truth, pred, k):.6g}")
    try:
        print(f"G={groupwise_rate(truth, pred, k, label_map):.6g}")
    except ValueError as exc:
        print(f"G=nan ({exc})")
    print("confusion (rows: truth, columns: estimate)")
    for row in confusion_counts(truth, pred, k):
        print(" ".join(f"{int(c):d}" for c in row))
    return 0


# experiment


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
        if isinstance(out[key], list):
            out[key] = tuple(out[key])
    return out


def cmd_experiment(args) -> int:
    config = ExperimentConfig(
        preset=args.preset,
        reps=args.reps,
        seed=args.seed,
        iterations=args.iters,
        overrides=_parse_overrides(args.set),
        workers=args.workers,
        timing=not args.no_timing,
    )
    result = run_experiment(config)
    paths = write_experiment(result, _out_dir(args), args.format)
    print(format_report(result))
    _wrote(paths.values())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lloydkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./lloydkit-out)")

    g = sub.add_parser("gen", help="sample a synthetic dataset")
    g.add_argument("kind", choices=["gmm", "sym2", "sbm", "crowd"])
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--k", type=int, default=10)
    g.add_argument("--d", type=int, default=100)
    g.add_argument("--sigma", type=float, help="noise level (gmm default 2/snr, sym2 default 1)")
    g.add_argument("--snr", type=float, default=9.0)
    g.add_argument("--norm", type=float, help="sym2 center norm (default 4 sigma sqrt(ln n))")
    g.add_argument("--preset", default="balanced", choices=["balanced", "sparse", "unbalanced"])
    g.add_argument("--within", type=float, help="sbm within-community edge probability")
    g.add_argument("--between", type=float, help="sbm between-community edge probability")
    g.add_argument("--m", type=int, default=100, help="crowd workers")
    g.add_argument("--p", type=float, default=1.0, help="crowd observation probability")
    common(g)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="fit a model to a dataset")
    f.add_argument("algo", choices=sorted(FITTERS))
    f.add_argument("--data", required=True, help="dense CSV, edge list or crowd CSV")
    f.add_argument("--k", type=int)
    f.add_argument("--init", choices=["spectral", "random", "mv", "file"])
    f.add_argument("--init-file")
    f.add_argument("--iters", type=int)
    f.add_argument("--truth", help="labels file; enables A, G in the trace")
    f.add_argument("--n", type=int, help="node count for edge lists with isolated trailing nodes")
    f.add_argument("--tau", type=float, help="commu degree threshold (default twice the mean degree)")
    f.add_argument("--delta", type=float, default=0.05, help="sym2 random-init failure probability")
    f.add_argument("--no-timing", action="store_true", help="write elapsed_ms as 0 for byte-stable output")
    common(f)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="compare predicted labels with the truth")
    e.add_argument("--truth", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--k", type=int)
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("experiment", help="run a simulation preset")
    x.add_argument("preset", choices=PRESETS)
    x.add_argument("--reps", type=int, default=10)
    x.add_argument("--iters", type=int)
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a preset parameter (JSON value)")
    x.add_argument("--format", choices=["svg", "png"], default="svg")
    x.add_argument("--no-timing", action="store_true", help="write elapsed_ms as 0 for byte-stable output")
    common(x)
    x.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
