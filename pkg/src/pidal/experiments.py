"""Synthetic-data generation and the two benchmark presets.

Experiment 1: 9x9 box blur, peak 17600, tau = 6e-4.
Experiment 2: 7x7 box blur, peaks {5, 30, 100, 255}; tau is picked per peak
from a fixed log-spaced grid by lowest mean MAE.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics, poisson, solver, spectral, tv

EXP2_TAU_GRID = tuple(float(10.0 ** e) for e in np.arange(-2.5, 1.01, 0.5))

METRIC_COLUMNS = ("preset", "max_intensity", "tau", "mu", "seed", "isnr_db", "mae", "iters", "wall_time")
GRID_COLUMNS = ("preset", "max_intensity", "tau", "mu", "n_seeds", "mean_isnr_db", "mean_mae", "selected")


@dataclass(frozen=True)
class Preset:
    name: str
    kernel_size: int
    levels: tuple
    tau_grid: tuple

    @property
    def kernel(self) -> spectral.BlurKernel:
        return spectral.BlurKernel.uniform(self.kernel_size)


PRESETS = {
    "exp1": Preset("exp1", 9, (17600.0,), (6e-4,)),
    "exp2": Preset("exp2", 7, (5.0, 30.0, 100.0, 255.0), EXP2_TAU_GRID),
}


def parse_kernel(spec: str) -> spectral.BlurKernel:
    """``uniform:K``, ``uniform:RxC`` or ``file:PATH`` (CSV taps)."""
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        try:
            dims = [int(v) for v in arg.lower().split("x")]
        except ValueError:
            raise ValueError(f"bad uniform kernel size in {spec!r}") from None
        if len(dims) not in (1, 2):
            raise ValueError(f"bad uniform kernel size in {spec!r}")
        kernel = spectral.BlurKernel.uniform(*dims)
    elif kind == "file":
        from .io import read_csv_image
        kernel = spectral.BlurKernel(read_csv_image(arg))
    else:
        raise ValueError(f"unknown kernel spec {spec!r}; use uniform:K or file:PATH")
    if any(n % 2 == 0 for n in kernel.shape):
        raise ValueError(f"kernel {spec!r} has an even dimension; a centred anchor needs odd sizes")
    return kernel


def parse_seeds(text: str) -> list[int]:
    """``"1..10"`` (inclusive), ``"1,4,7"`` or a mix such as ``"1..3,9"``."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(v) for v in part.split(".."))
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def rescale_to_max(image: np.ndarray, scale_max: float) -> np.ndarray:
    if not scale_max > 0:
        raise ValueError("scale_max must be positive")
    image = np.asarray(image, dtype=np.float64)
    peak = image.max()
    if not peak > 0:
        raise ValueError("cannot rescale an image whose maximum is not positive")
    if peak == scale_max:
        return image.copy()
    return image * (scale_max / peak)


@dataclass
class Observation:
    truth: np.ndarray  # rescaled truth x
    blurred: np.ndarray  # K x
    counts: np.ndarray  # y ~ Poisson(K x)
    tf: spectral.TransferFunction
    seed: int


def simulate_observation(truth, kernel: spectral.BlurKernel, scale_max: float, seed: int, tf=None) -> Observation:
    x = rescale_to_max(truth, scale_max)
    tf = tf or spectral.plan(kernel, *x.shape)
    lam = np.maximum(spectral.convolve(tf, x), 0.0)  # FFT round-off can dip below zero
    return Observation(x, lam, poisson.sample_poisson(lam, seed), tf, seed)


@dataclass(frozen=True)
class RunOptions:
    max_iters: int = 500
    rel_change_tol: float = 1e-5
    tv_settings: tv.TvDenoiseSettings = field(default_factory=tv.TvDenoiseSettings)
    final_estimate: str = "u"
    truth_reference: str = "x"


def replicate(preset: str, truth, kernel, scale_max: float, tau: float, seed: int,
              options: RunOptions = RunOptions(), mu: Optional[float] = None) -> dict:
    """Simulate, deconvolve and score one (intensity, tau, seed) combination."""
    obs = simulate_observation(truth, kernel, scale_max, seed)
    cfg = solver.SolverConfig(
        tau=tau,
        mu=mu,
        mu_rule=mu is None,
        max_iters=options.max_iters,
        rel_change_tol=options.rel_change_tol,
        tv_settings=options.tv_settings,
        final_estimate=options.final_estimate,
    )
    t0 = time.perf_counter()
    estimate, report = solver.run(solver.Problem(obs.tf, obs.counts, cfg))
    wall = time.perf_counter() - t0
    m = metrics.evaluate(obs.counts, estimate, obs.truth, options.truth_reference, obs.blurred)
    return {
        "preset": preset,
        "max_intensity": scale_max,
        "tau": tau,
        "mu": cfg.mu,
        "seed": seed,
        "isnr_db": m.isnr_db,
        "mae": m.mae,
        "iters": report.iterations,
        "wall_time": wall,
    }


def _replicate_star(args):
    return replicate(*args)


def _map(jobs: int, tasks: list) -> list:
    # results come back in submission order, so output is independent of jobs
    if jobs <= 1:
        return [_replicate_star(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_replicate_star, tasks))


def aggregate_rows(rows: list) -> dict:
    first = rows[0]
    reports = [metrics.MetricsReport(r["isnr_db"], r["mae"], 0.0) for r in rows]
    agg = metrics.aggregate(reports)
    return {
        "preset": first["preset"],
        "max_intensity": first["max_intensity"],
        "tau": first["tau"],
        "mu": first["mu"],
        "seed": "aggregate",
        "isnr_db": agg.isnr_db,
        "mae": agg.mae,
        "iters": float(np.mean([r["iters"] for r in rows])),
        "wall_time": float(np.mean([r["wall_time"] for r in rows])),
    }


@dataclass
class BenchmarkResult:
    rows: list  # per-seed rows at the selected tau, plus one aggregate row per level
    grid: list  # one row per (level, tau) evaluated during selection
    selected_tau: dict

    def aggregate(self, level: float) -> dict:
        return next(r for r in self.rows if r["seed"] == "aggregate" and r["max_intensity"] == level)


def benchmark(preset: Preset, truth, seeds: list, options: RunOptions = RunOptions(),
              select_seeds: Optional[int] = None, jobs: int = 1, levels=None, progress=None) -> BenchmarkResult:
    """Run a preset over ``seeds`` and every intensity level.

    For presets with more than one tau, each tau on the grid is run on the
    first ``select_seeds`` seeds (all seeds by default), the tau with the
    lowest mean MAE is kept, and the remaining seeds are run at that tau.
    """
    seeds = list(seeds)
    n_sel = len(seeds) if select_seeds is None else max(1, min(select_seeds, len(seeds)))
    kernel = preset.kernel
    rows, grid, selected = [], [], {}
    for level in levels or preset.levels:
        level = float(level)
        sel_seeds = seeds[:n_sel] if len(preset.tau_grid) > 1 else seeds
        tasks = [(preset.name, truth, kernel, level, tau, s, options) for tau in preset.tau_grid for s in sel_seeds]
        results = _map(jobs, tasks)
        by_tau = {tau: results[i * len(sel_seeds):(i + 1) * len(sel_seeds)] for i, tau in enumerate(preset.tau_grid)}
        best = min(preset.tau_grid, key=lambda t: np.mean([r["mae"] for r in by_tau[t]]))
        selected[level] = best
        for tau, rs in by_tau.items():
            grid.append({
                "preset": preset.name, "max_intensity": level, "tau": tau, "mu": rs[0]["mu"],
                "n_seeds": len(rs),
                "mean_isnr_db": float(np.mean([r["isnr_db"] for r in rs])),
                "mean_mae": float(np.mean([r["mae"] for r in rs])),
                "selected": int(tau == best),
            })
        rest = [(preset.name, truth, kernel, level, best, s, options) for s in seeds if s not in sel_seeds]
        level_rows = by_tau[best] + _map(jobs, rest)
        level_rows.sort(key=lambda r: seeds.index(r["seed"]))
        rows.extend(level_rows)
        rows.append(aggregate_rows(level_rows))
        if progress is not None:
            progress(rows[-1])
    return BenchmarkResult(rows, grid, selected)


def format_rows(rows: list, columns: tuple) -> str:
    """CSV text with a header; floats written with repr precision."""
    def fmt(v):
        if isinstance(v, float):
            return repr(v)
        return str(v)
    lines = [",".join(columns)]
    lines += [",".join(fmt(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"
