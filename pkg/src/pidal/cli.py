"""Command-line interface: ``pidal simulate | deconvolve | benchmark``.

Every subcommand accepts ``--config FILE`` holding ``key = value`` lines whose
keys mirror the long flags (``scale-max`` or ``scale_max``). Flags given on
the command line override the file.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments, io, metrics, solver, spectral, tv

log = logging.getLogger("pidal")

TRUTH_HELP = (
    "a 256x256 grayscale truth image (.pgm, .csv or .npy). No test image is bundled; "
    "`python scripts/make_cameraman.py cameraman.pgm` writes the Cameraman image "
    "from scikit-image"
)


def _parse_mu_rule(text: str) -> float:
    head, _, div = text.partition("/")
    if head.strip() != "tau" or not div:
        raise argparse.ArgumentTypeError(f"expected a rule like 'tau/50', got {text!r}")
    return float(div)


def _add_solver_args(p):
    p.add_argument("--tau", type=float, help="regularisation weight")
    p.add_argument("--mu", type=float, help="augmented-Lagrangian penalty (fixed)")
    p.add_argument("--mu-rule", type=_parse_mu_rule, metavar="tau/D", help="derive mu = tau / D, e.g. tau/50")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-change-tol", type=float, default=1e-5)
    p.add_argument("--inner-iters", type=int, default=30, help="Chambolle iterations per outer step")
    p.add_argument("--inner-tol", type=float, default=1e-4)
    p.add_argument("--inner-step", type=float, default=0.25)
    p.add_argument("--final-estimate", choices=("u", "x"), default="u")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pidal", description="TV-regularised Poisson deconvolution by augmented Lagrangian")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="blur a truth image and draw Poisson counts")
    p.add_argument("--config")
    p.add_argument("--truth", help=TRUTH_HELP)
    p.add_argument("--kernel", default="uniform:9", help="uniform:K, uniform:RxC or file:PATH")
    p.add_argument("--scale-max", type=float, help="rescale the truth so its maximum equals this value")
    p.add_argument("--seed", type=str, default="1", help="seed, or a list/range such as 1..10")
    p.add_argument("--out", required=False)

    p = sub.add_parser("deconvolve", help="restore an image from observed counts")
    p.add_argument("--config")
    p.add_argument("--counts", help="observed counts (.pgm, .csv or .npy)")
    p.add_argument("--kernel", help="as for simulate; default uniform:9 or the preset's kernel")
    p.add_argument("--preset", choices=sorted(experiments.PRESETS), help="take kernel and tau defaults from a preset")
    p.add_argument("--truth", help="optional rescaled truth (.csv) to report ISNR and MAE")
    _add_solver_args(p)
    p.add_argument("--out")

    p = sub.add_parser("benchmark", help="replicate a paper experiment over several seeds")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(experiments.PRESETS), default="exp1")
    p.add_argument("--truth", help=TRUTH_HELP)
    p.add_argument("--seeds", default="1..10")
    p.add_argument("--levels", help="comma-separated subset of the preset's peak intensities")
    p.add_argument("--select-seeds", type=int, help="seeds used to pick tau on the grid (default: all)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-change-tol", type=float, default=1e-5)
    p.add_argument("--inner-iters", type=int, default=30)
    p.add_argument("--inner-tol", type=float, default=1e-4)
    p.add_argument("--truth-reference", choices=("x", "Kx"), default="x")
    p.add_argument("--out")
    parser.subcommands = sub.choices
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` when present."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    subparser = parser.subcommands[args.command]
    dests = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in io.read_keyvalue(args.config).items():
        dest = key.replace("-", "_")
        if dest not in dests or dest == "config":
            parser.error(f"{args.config}: unknown key {key!r} for '{args.command}'")
        action = dests[dest]
        defaults[dest] = action.type(value) if action.type else value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) in (None, "")]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _solver_config(args) -> tuple[solver.SolverConfig, str]:
    if args.mu is not None and args.mu_rule is not None:
        raise ValueError("give either --mu or --mu-rule, not both")
    settings = tv.TvDenoiseSettings(args.inner_iters, args.inner_step, args.inner_tol)
    common = dict(max_iters=args.max_iters, rel_change_tol=args.rel_change_tol,
                  tv_settings=settings, final_estimate=args.final_estimate)
    if args.mu is not None:
        return solver.SolverConfig(args.tau, mu=args.mu, **common), "none"
    divisor = args.mu_rule if args.mu_rule is not None else solver.MU_RULE_DIVISOR
    if divisor == solver.MU_RULE_DIVISOR:
        return solver.SolverConfig(args.tau, mu_rule=True, **common), f"tau/{divisor:g}"
    return solver.SolverConfig(args.tau, mu=args.tau / divisor, **common), f"tau/{divisor:g}"


def cmd_simulate(args) -> int:
    _require(args, "truth", "scale_max", "out")
    kernel = experiments.parse_kernel(args.kernel)
    truth = io.read_image(args.truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tf = spectral.plan(kernel, *truth.shape)
    for seed in experiments.parse_seeds(args.seed):
        obs = experiments.simulate_observation(truth, kernel, args.scale_max, seed, tf=tf)
        io.write_pgm(out / f"counts_seed{seed}.pgm", obs.counts)
        io.write_keyvalue(out / f"counts_seed{seed}.txt", {
            "truth": args.truth, "kernel": args.kernel, "scale_max": repr(args.scale_max),
            "seed": seed, "height": truth.shape[0], "width": truth.shape[1],
            "boundary": "periodic",
        })
        log.info("seed %d: %d total counts", seed, int(obs.counts.sum()))
    io.write_csv_image(out / "truth_scaled.csv", obs.truth)
    return 0


def cmd_deconvolve(args) -> int:
    if args.preset:
        preset = experiments.PRESETS[args.preset]
        args.kernel = args.kernel or f"uniform:{preset.kernel_size}"
        if args.tau is None and len(preset.tau_grid) == 1:
            args.tau = preset.tau_grid[0]
    args.kernel = args.kernel or "uniform:9"
    _require(args, "counts", "tau", "out")
    kernel = experiments.parse_kernel(args.kernel)
    counts = io.read_image(args.counts)
    cfg, rule = _solver_config(args)
    tf = spectral.plan(kernel, *counts.shape)
    estimate, report = solver.run(solver.Problem(tf, counts, cfg))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_csv_image(out / "restored.csv", estimate)
    hist = [
        {"iteration": i, "objective": h.objective, "primal_residual_1": h.primal_residual_1,
         "primal_residual_2": h.primal_residual_2, "rel_change": h.rel_change, "tv_inner_iters": h.tv_inner_iters}
        for i, h in enumerate(report.history, 1)
    ]
    cols = ("iteration", "objective", "primal_residual_1", "primal_residual_2", "rel_change", "tv_inner_iters")
    (out / "history.csv").write_text(experiments.format_rows(hist, cols))
    meta = {
        "counts": args.counts, "kernel": args.kernel, "tau": repr(cfg.tau), "mu": repr(cfg.mu),
        "mu_rule": rule, "max_iters": cfg.max_iters, "rel_change_tol": repr(cfg.rel_change_tol),
        "inner_iters": cfg.tv_settings.max_inner_iters, "inner_tol": repr(cfg.tv_settings.rel_tol),
        "final_estimate": cfg.final_estimate, "iterations": report.iterations, "converged": report.converged,
        **report.diagnostics,
    }
    if args.truth:
        truth = io.read_image(args.truth)
        m = metrics.evaluate(counts, estimate, truth)
        meta.update(isnr_db=repr(m.isnr_db), mae=repr(m.mae), truth_reference="x")
    io.write_keyvalue(out / "metadata.txt", meta)
    log.info("%d iterations, converged=%s", report.iterations, report.converged)
    return 0


def cmd_benchmark(args) -> int:
    _require(args, "out")
    if not args.truth:
        raise ValueError("benchmark needs --truth: " + TRUTH_HELP)
    preset = experiments.PRESETS[args.preset]
    truth = io.read_image(args.truth)
    seeds = experiments.parse_seeds(args.seeds)
    levels = [float(v) for v in args.levels.split(",")] if args.levels else None
    options = experiments.RunOptions(
        max_iters=args.max_iters, rel_change_tol=args.rel_change_tol,
        tv_settings=tv.TvDenoiseSettings(args.inner_iters, 0.25, args.inner_tol),
        truth_reference=args.truth_reference,
    )

    def progress(row):
        log.info("%s peak %g: tau=%g mean ISNR %.3f dB, mean MAE %.4f",
                 row["preset"], row["max_intensity"], row["tau"], row["isnr_db"], row["mae"])

    result = experiments.benchmark(preset, truth, seeds, options, args.select_seeds, args.jobs, levels, progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(experiments.format_rows(result.rows, experiments.METRIC_COLUMNS))
    (out / "grid.csv").write_text(experiments.format_rows(result.grid, experiments.GRID_COLUMNS))
    io.write_keyvalue(out / "metadata.txt", {
        "preset": preset.name, "truth": args.truth, "kernel": f"uniform:{preset.kernel_size}",
        "seeds": args.seeds, "select_seeds": args.select_seeds or len(seeds), "mu_rule": "tau/50",
        "truth_reference": args.truth_reference, "boundary": "periodic",
    })
    for row in result.rows:
        if row["seed"] == "aggregate":
            print(f"{row['preset']} peak={row['max_intensity']:g} tau={row['tau']:g} "
                  f"ISNR={row['isnr_db']:.3f} dB MAE={row['mae']:.4f}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "deconvolve": cmd_deconvolve, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError, solver.NonFiniteIterateError) as exc:
        print(f"pidal {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
