"""PIDAL: Poisson image deconvolution by augmented Lagrangian.

The TV-regularised Poisson problem

    min_x  sum_i (Kx)_i - y_i log (Kx)_i  +  tau * TV(x)

is split as ``z = Kx`` and ``u = x``. Each outer iteration makes a single
block Gauss-Seidel sweep over (x, z, u) followed by an update of the scaled
duals d1, d2. With the multiplier form ``eta`` of the augmented Lagrangian,
the scaled duals are ``d = -eta / mu``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from . import poisson, spectral, tv
from .grid import check_same_shape

log = logging.getLogger(__name__)

MU_RULE_DIVISOR = 50.0
OBJECTIVE_FLOOR = 1e-12


class NonFiniteIterateError(FloatingPointError):
    def __init__(self, step: str, iteration: int):
        super().__init__(f"non-finite values produced by the {step}-update at iteration {iteration}")
        self.step = step
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a PIDAL run.

    With ``mu_rule=True`` the penalty is derived as ``tau / 50``; an explicit
    ``mu`` that disagrees with the rule is rejected.
    """

    tau: float
    mu: Optional[float] = None
    mu_rule: bool = False
    max_iters: int = 500
    rel_change_tol: float = 1e-5
    tv_settings: tv.TvDenoiseSettings = field(default_factory=tv.TvDenoiseSettings)
    final_estimate: Literal["x", "u"] = "u"

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if self.mu_rule:
            ruled = self.tau / MU_RULE_DIVISOR
            # dataclasses.replace() passes the derived mu back in
            if self.mu is not None and self.mu != ruled:
                raise ValueError("give either mu or mu_rule, not both")
            object.__setattr__(self, "mu", ruled)
        if self.mu is None or not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.final_estimate not in ("x", "u"):
            raise ValueError("final_estimate must be 'x' or 'u'")

    @classmethod
    def with_mu_rule(cls, tau: float, **kwargs) -> "SolverConfig":
        return cls(tau=tau, mu_rule=True, **kwargs)


@dataclass(frozen=True)
class Problem:
    tf: spectral.TransferFunction
    counts: np.ndarray
    config: SolverConfig

    def __post_init__(self):
        object.__setattr__(self, "counts", poisson.as_counts(self.counts))
        if self.counts.shape != self.tf.shape:
            raise ValueError(f"counts of shape {self.counts.shape} do not match the blur grid {self.tf.shape}")


@dataclass(frozen=True)
class IterationRecord:
    objective: float
    primal_residual_1: float  # ||Kx - z||
    primal_residual_2: float  # ||x - u||
    rel_change: float  # ||x_new - x_old|| / ||x_old||
    tv_inner_iters: int = 0


@dataclass
class SolverState:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    iteration: int = 0
    history: list = field(default_factory=list)
    # warm start for the TV prox; not part of the iteration's fixed point
    tv_dual: Optional[tv.DualField] = None

    def __post_init__(self):
        check_same_shape(self.x, self.z, self.u, self.d1, self.d2)


@dataclass
class RunReport:
    history: list
    iterations: int
    converged: bool
    mu: float
    tau: float
    diagnostics: dict
    state: SolverState = field(repr=False)


def initial_state(tf: spectral.TransferFunction, counts: np.ndarray) -> SolverState:
    """x0 = y, z0 = K x0, u0 = x0, zero duals."""
    x0 = np.array(counts, dtype=np.float64)
    return SolverState(
        x=x0,
        z=spectral.convolve(tf, x0),
        u=x0.copy(),
        d1=np.zeros_like(x0),
        d2=np.zeros_like(x0),
    )


def objective(x: np.ndarray, tf: spectral.TransferFunction, counts: np.ndarray, tau: float) -> float:
    """Penalised negative log-likelihood, with ``Kx`` floored at 1e-12."""
    lam = np.maximum(spectral.convolve(tf, x), OBJECTIVE_FLOOR)
    return poisson.neg_log_likelihood(counts, lam) + tau * tv.tv_norm(x)


def uniqueness_diagnostic(tf: spectral.TransferFunction, counts: np.ndarray) -> dict:
    """Report (never enforce) the sufficient conditions for a unique minimiser."""
    return {
        "all_counts_nonzero": bool((np.asarray(counts) > 0).all()),
        "kernel_annihilates_constants": bool(abs(tf.values[0, 0]) < 1e-12),
    }


def _finite(arr: np.ndarray, step: str, iteration: int) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise NonFiniteIterateError(step, iteration)
    return arr


def pidal_step(state: SolverState, problem: Problem) -> SolverState:
    """One outer PIDAL iteration; returns a new state."""
    tf, y, cfg = problem.tf, problem.counts, problem.config
    k = state.iteration + 1
    d1, d2 = state.d1, state.d2

    x = spectral.solve_x_update(tf, state.z + d1, state.u + d2)
    _finite(x, "x", k)
    kx = spectral.convolve(tf, x)
    z = _finite(poisson.prox_poisson(kx - d1, y, cfg.mu), "z", k)
    u, dual, n_inner = tv.chambolle_prox(x - d2, cfg.tau / cfg.mu, cfg.tv_settings, dual=state.tv_dual)
    _finite(u, "u", k)
    r1 = kx - z
    r2 = x - u

    x_norm = np.linalg.norm(state.x)
    change = np.linalg.norm(x - state.x)
    record = IterationRecord(
        objective=objective(u, tf, y, cfg.tau),
        primal_residual_1=float(np.linalg.norm(r1)),
        primal_residual_2=float(np.linalg.norm(r2)),
        rel_change=float(change / x_norm) if x_norm > 0 else float(change),
        tv_inner_iters=n_inner,
    )
    return SolverState(
        x=x,
        z=z,
        u=u,
        d1=d1 - r1,
        d2=d2 - r2,
        iteration=k,
        history=[*state.history, record],
        tv_dual=dual,
    )


def run(problem: Problem, init: Optional[SolverState] = None) -> tuple[np.ndarray, RunReport]:
    """Iterate :func:`pidal_step` until the relative change of x is small.

    The first step from the default initialisation leaves x unchanged
    (``(K^T K + I)^{-1}(K^T K y + y) = y``), so the stopping test is only
    applied from the second step of a run onwards.
    """
    cfg = problem.config
    state = init if init is not None else initial_state(problem.tf, problem.counts)
    if state.x.shape != problem.tf.shape:
        raise ValueError("initial state does not match the problem grid")
    converged = False
    for i in range(cfg.max_iters):
        state = pidal_step(state, problem)
        if i > 0 and state.history[-1].rel_change < cfg.rel_change_tol:
            converged = True
            break
    if state.history:
        last = state.history[-1]
        log.debug(
            "PIDAL stopped after %d iterations: objective %.6g, residuals %.3g / %.3g",
            state.iteration, last.objective, last.primal_residual_1, last.primal_residual_2,
        )
    report = RunReport(
        history=state.history,
        iterations=state.iteration,
        converged=converged,
        mu=cfg.mu,
        tau=cfg.tau,
        diagnostics=uniqueness_diagnostic(problem.tf, problem.counts),
        state=state,
    )
    estimate = state.u if cfg.final_estimate == "u" else state.x
    return estimate.copy(), report
