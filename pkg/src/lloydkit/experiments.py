"""Simulation presets and the replicate runner behind ``lloydkit experiment``.

Each preset has one or more arms (for example one per SNR level). Every
(arm, replicate) pair is an independent task whose random streams are keyed
by the master seed and replicate index only, so arms of one replicate share
centers, labels and noise directions, and results do not depend on how many
workers run the tasks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lloydkit import io
from lloydkit.community import CommuConfig, fit_commu_lloyd
from lloydkit.crowd import CrowdConfig, fit_crowd_lloyd
from lloydkit.lloyd import LloydConfig, default_iterations, fit_lloyd
from lloydkit.rng import make_rng
from lloydkit.samplers import (
    GmmSpec,
    corrupt_labels,
    crowd_preset,
    orthonormal_centers,
    sample_crowd,
    sample_gmm,
    sample_sbm,
    sample_truth,
    sbm_preset,
)

PRESETS = ("fig1", "fig2-k", "sbm-balanced", "sbm-sparse", "sbm-unbalanced", "crowd-table")


@dataclass(frozen=True)
class Arm:
    name: str
    params: dict
    n: int


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    reps: int = 10
    seed: int = 0
    out_dir: Path | None = None
    iterations: int | None = None
    overrides: dict = field(default_factory=dict)
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def preset_arms(preset: str, overrides: dict | None = None) -> list[Arm]:
    o = dict(overrides or {})
    if preset == "fig1":
        n, k, d = o.get("n", 1000), o.get("k", 10), o.get("d", 100)
        g0 = o.get("g0", 0.454)
        return [
            Arm(f"fig1-snr{snr:g}", dict(n=n, k=k, d=d, sigma=2.0 / snr, g0=g0), n)
            for snr in o.get("snr", (6, 7, 8, 9))
        ]
    if preset == "fig2-k":
        n, d = o.get("n", 1000), o.get("d", 100)
        sigma, g0 = o.get("sigma", 0.25), o.get("g0", 0.37)
        return [Arm(f"fig2-k{k}", dict(n=n, k=k, d=d, sigma=sigma, g0=g0), n) for k in o.get("k", (5, 10, 25, 50))]
    if preset.startswith("sbm-"):
        name = preset[4:]
        spec = sbm_preset(name)
        params = dict(name=name, tau=o.get("tau"), tau_multiplier=o.get("tau_multiplier", 2.0))
        return [Arm(preset, params, spec.n)]
    if preset == "crowd-table":
        m, n, k = o.get("m", 100), o.get("n", 1000), o.get("k", 2)
        return [Arm(f"crowd-p{p:g}", dict(m=m, n=n, k=k, p=p), n) for p in o.get("p", (1.0, 0.5, 0.2))]
    raise ValueError(f"unknown preset {preset!r}")


def default_preset_iterations(preset: str, arms: list[Arm]) -> int:
    if preset == "crowd-table":
        return 10
    return default_iterations(max(a.n for a in arms), 4.0)


def run_replicate(preset: str, arm: Arm, seed: int, rep: int, iterations: int):
    """One replicate of one arm; returns its convergence trace."""
    p = arm.params
    if preset in ("fig1", "fig2-k"):
        k, n, d = p["k"], p["n"], p["d"]
        centers = orthonormal_centers(k, d, make_rng(seed, rep, "centers"))
        spec = GmmSpec(centers, p["sigma"], (n // k,) * k)
        data, truth = sample_gmm(spec, make_rng(seed, rep, "gmm"))
        init = corrupt_labels(truth, k, p["g0"], make_rng(seed, rep, "init"))
        fit = fit_lloyd(data, k, init, LloydConfig(max_iter=iterations, tol=-1), truth=truth, truth_centers=centers)
        return fit.trace
    if preset.startswith("sbm-"):
        spec = sbm_preset(p["name"])
        adj, truth = sample_sbm(spec, make_rng(seed, rep, "sbm"))
        config = CommuConfig(
            tau=p["tau"], tau_multiplier=p["tau_multiplier"], max_iter=iterations, tol=-1, seed=seed + rep
        )
        return fit_commu_lloyd(adj, spec.k, config, truth=truth).trace
    if preset == "crowd-table":
        spec = crowd_preset(p["m"], p["n"], p["k"], p["p"], seed=make_rng(seed, rep, "workers"))
        truth = sample_truth(p["n"], p["k"], make_rng(seed, rep, "truth"))
        table = sample_crowd(spec, truth, make_rng(seed, rep, "answers"))
        return fit_crowd_lloyd(table, p["k"], CrowdConfig(max_iter=iterations, tol=-1), truth=truth).trace
    raise ValueError(f"unknown preset {preset!r}")


def _task(args):
    return run_replicate(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    arms: list[Arm]
    iterations: int
    traces: dict  # arm name -> list of traces, by replicate

    def errors(self, arm: str) -> np.ndarray:
        """reps x (iterations + 1) mis-clustering rates."""
        return np.vstack([t.misclustering for t in self.traces[arm]])

    def mean_log_errors(self, arm: str) -> np.ndarray:
        """Mean log rate per iteration; zero rates count as ``log(1/n)``."""
        n = next(a.n for a in self.arms if a.name == arm)
        return np.log(np.maximum(self.errors(arm), 1.0 / n)).mean(axis=0)

    def trace_rows(self):
        for arm in self.arms:
            for rep, trace in enumerate(self.traces[arm.name]):
                yield from io.trace_rows(arm.name, rep, trace, self.config.timing)

    def summary_rows(self):
        for arm in self.arms:
            errs = self.errors(arm.name)
            groupwise = np.vstack([t.groupwise for t in self.traces[arm.name]])
            logs = self.mean_log_errors(arm.name)
            for s in range(errs.shape[1]):
                yield [arm.name, s, errs[:, s].mean(), logs[s], np.nanmean(groupwise[:, s]), errs.shape[0]]


SUMMARY_HEADER = ["arm", "iteration", "mean_A", "mean_log_A", "mean_G", "reps"]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    arms = preset_arms(config.preset, config.overrides)
    iterations = config.iterations or default_preset_iterations(config.preset, arms)
    tasks = [(config.preset, arm, config.seed, rep, iterations) for arm in arms for rep in range(config.reps)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            traces = list(pool.map(_task, tasks))
    else:
        traces = [_task(t) for t in tasks]
    by_arm = {arm.name: traces[i * config.reps : (i + 1) * config.reps] for i, arm in enumerate(arms)}
    return ExperimentResult(config, arms, iterations, by_arm)


def write_experiment(result: ExperimentResult, out_dir, fmt: str = "svg") -> dict:
    """Write trace.csv, summary.csv and the log-error figure; returns their paths."""
    from lloydkit.plotting import plot_summary_csv

    out = io.ensure_dir(out_dir)
    preset = result.config.preset
    trace_path = out / f"{preset}_trace.csv"
    summary_path = out / f"{preset}_summary.csv"
    figure_path = out / f"{preset}.{fmt}"
    io.write_csv(trace_path, io.TRACE_HEADER, result.trace_rows())
    io.write_csv(summary_path, SUMMARY_HEADER, result.summary_rows())
    plot_summary_csv(summary_path, figure_path, title=preset)
    return {"trace": trace_path, "summary": summary_path, "figure": figure_path}


def format_report(result: ExperimentResult) -> str:
    lines = [f"{'arm':<16} {'A_0':>9} {'A_final':>9} {'log A_final':>12}"]
    for arm in result.arms:
        errs = result.errors(arm.name).mean(axis=0)
        logs = result.mean_log_errors(arm.name)
        lines.append(f"{arm.name:<16} {errs[0]:>9.5f} {errs[-1]:>9.5f} {logs[-1]:>12.3f}")
    return "\n".join(lines)


def plateau_target(snr: float) -> float:
    """Level the fig1 log error settles at, ``-snr**2 / 16``."""
    return -(snr**2) / 16.0


def is_finite_row(row) -> bool:
    return all(not (isinstance(x, float) and math.isnan(x)) for x in row)
