"""Isotropic total variation and its proximity operator (Chambolle's method).

Forward differences with a Neumann boundary: the last column of the
horizontal component and the last row of the vertical component are zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numba
import numpy as np

from .grid import check_same_shape


@dataclass
class DualField:
    p_h: np.ndarray
    p_v: np.ndarray

    def __post_init__(self):
        check_same_shape(self.p_h, self.p_v)

    @classmethod
    def zeros(cls, shape) -> "DualField":
        return cls(np.zeros(shape), np.zeros(shape))

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.p_h, self.p_v)

    def inner(self, other: "DualField") -> float:
        return float(np.vdot(self.p_h, other.p_h) + np.vdot(self.p_v, other.p_v))

    def copy(self) -> "DualField":
        return DualField(self.p_h.copy(), self.p_v.copy())


@dataclass(frozen=True)
class TvDenoiseSettings:
    max_inner_iters: int = 30
    step: float = 0.25
    rel_tol: float = 1e-4

    def __post_init__(self):
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be a positive integer")
        if not 0 < self.step <= 0.25:
            raise ValueError(f"step must lie in (0, 0.25], got {self.step}")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be nonnegative")


def gradient(x: np.ndarray) -> DualField:
    x = np.asarray(x, dtype=np.float64)
    p_h = np.zeros_like(x)
    p_v = np.zeros_like(x)
    p_h[:, :-1] = x[:, 1:] - x[:, :-1]
    p_v[:-1, :] = x[1:, :] - x[:-1, :]
    return DualField(p_h, p_v)


def divergence(p: DualField) -> np.ndarray:
    """Negative adjoint of :func:`gradient`."""
    p_h, p_v = p.p_h, p.p_v
    out = np.zeros_like(p_h, dtype=np.float64)
    out[:, :-1] += p_h[:, :-1]
    out[:, 1:] -= p_h[:, :-1]
    out[:-1, :] += p_v[:-1, :]
    out[1:, :] -= p_v[:-1, :]
    return out


def tv_norm(x: np.ndarray) -> float:
    return float(gradient(x).magnitude().sum())


def tv_objective(u: np.ndarray, g: np.ndarray, weight: float) -> float:
    """``0.5 ||u - g||^2 + weight * TV(u)``."""
    r = np.asarray(u) - np.asarray(g)
    return 0.5 * float(np.vdot(r, r)) + weight * tv_norm(u)


@numba.njit(cache=True)
def _dual_step(p_h, p_v, div_p, g_scaled, step):
    # p <- (p + step * grad w) / (1 + step * |grad w|), w = div p - g / weight
    rows, cols = p_h.shape
    for r in range(rows):
        for c in range(cols):
            w = div_p[r, c] - g_scaled[r, c]
            gh = div_p[r, c + 1] - g_scaled[r, c + 1] - w if c < cols - 1 else 0.0
            gv = div_p[r + 1, c] - g_scaled[r + 1, c] - w if r < rows - 1 else 0.0
            n = 1.0 + step * np.sqrt(gh * gh + gv * gv)
            p_h[r, c] = (p_h[r, c] + step * gh) / n
            p_v[r, c] = (p_v[r, c] + step * gv) / n


@numba.njit(cache=True)
def _primal_step(p_h, p_v, g, weight, div_p, u):
    # refresh div p and u = g - weight * div p; return ||u_new - u_old||^2, ||u_new||^2
    rows, cols = p_h.shape
    diff2 = 0.0
    norm2 = 0.0
    for r in range(rows):
        for c in range(cols):
            d = 0.0
            if c < cols - 1:
                d += p_h[r, c]
            if c > 0:
                d -= p_h[r, c - 1]
            if r < rows - 1:
                d += p_v[r, c]
            if r > 0:
                d -= p_v[r - 1, c]
            div_p[r, c] = d
            un = g[r, c] - weight * d
            diff2 += (un - u[r, c]) ** 2
            norm2 += un * un
            u[r, c] = un
    return diff2, norm2


def chambolle_prox(
    g: np.ndarray,
    weight: float,
    settings: Optional[TvDenoiseSettings] = None,
    dual: Optional[DualField] = None,
    callback: Optional[Callable[[DualField], None]] = None,
) -> tuple[np.ndarray, DualField, int]:
    """TV proximity operator with access to the dual field.

    Runs the fixed-point iteration

        p <- (p + step * grad(div p - g/w)) / (1 + step * |grad(div p - g/w)|)

    from ``dual`` (zeros if omitted) and returns ``(u, p, n_iter)`` with
    ``u = g - w div p``. Stops when ``||u_k - u_{k-1}|| <= rel_tol ||u_k||``
    or after ``max_inner_iters`` steps. ``callback`` sees the dual field
    after every step.
    """
    if weight < 0:
        raise ValueError(f"TV weight must be nonnegative, got {weight}")
    settings = settings or TvDenoiseSettings()
    g = np.ascontiguousarray(g, dtype=np.float64)
    if weight == 0:
        return g.copy(), DualField.zeros(g.shape) if dual is None else dual, 0

    if dual is None:
        p_h = np.zeros_like(g)
        p_v = np.zeros_like(g)
    else:
        check_same_shape(g, dual.p_h)
        p_h = np.array(dual.p_h, dtype=np.float64, order="C")
        p_v = np.array(dual.p_v, dtype=np.float64, order="C")
    g_scaled = g / weight
    div_p = divergence(DualField(p_h, p_v))
    u = g - weight * div_p
    tol2 = settings.rel_tol**2

    n_iter = 0
    for n_iter in range(1, settings.max_inner_iters + 1):
        _dual_step(p_h, p_v, div_p, g_scaled, settings.step)
        if callback is not None:
            callback(DualField(p_h, p_v))
        diff2, norm2 = _primal_step(p_h, p_v, g, weight, div_p, u)
        if diff2 <= tol2 * norm2:
            break
    return u, DualField(p_h, p_v), n_iter


def tv_denoise(g: np.ndarray, weight: float, settings: Optional[TvDenoiseSettings] = None) -> np.ndarray:
    """Approximate ``argmin_u 0.5 ||u - g||^2 + weight * TV(u)``."""
    return chambolle_prox(g, weight, settings)[0]
