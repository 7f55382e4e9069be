"""Poisson observation model: likelihood, the z-proximity step and a sampler."""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln, xlogy

from .grid import check_same_shape

_INTEGER_TOL = 1e-9
# inversion below this mean, transformed rejection (PTRS) at or above it
_INVERSION_LIMIT = 30.0


def as_counts(data) -> np.ndarray:
    """Validate nonnegative integer-valued counts; returned as float64."""
    y = np.array(data, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError(f"counts must be a 2-D image, got shape {y.shape}")
    if not np.isfinite(y).all() or (y < 0).any():
        raise ValueError("counts must be finite and nonnegative")
    if np.abs(y - np.round(y)).max(initial=0.0) > _INTEGER_TOL:
        raise ValueError("counts must be integer-valued")
    return np.round(y)


def neg_log_likelihood(counts: np.ndarray, lam: np.ndarray) -> float:
    """Return ``sum(lam - y * log(lam))``, dropping the ``log(y!)`` constant.

    Uses ``0 * log(0) = 0``; a positive count with ``lam == 0`` gives ``inf``.
    """
    check_same_shape(counts, lam)
    lam = np.asarray(lam, dtype=np.float64)
    if (lam < 0).any():
        raise ValueError("Poisson means must be nonnegative")
    with np.errstate(divide="ignore"):
        return float(np.sum(lam - xlogy(counts, lam)))


def prox_poisson(z_prime: np.ndarray, counts: np.ndarray, mu: float) -> np.ndarray:
    """Per-pixel minimiser of ``z - y log z + (mu/2)(z - z')^2``.

    This is the nonnegative root of ``mu z^2 + (1 - mu z') z - y``. When
    ``mu z' - 1 < 0`` the root is evaluated in the rationalised form
    ``2y / (1 - mu z' + sqrt(...))`` to avoid cancellation at low counts.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    check_same_shape(z_prime, counts)
    b = mu * np.asarray(z_prime, dtype=np.float64) - 1.0
    root = np.sqrt(b * b + 4.0 * mu * counts)
    out = np.empty_like(b)
    pos = b >= 0
    out[pos] = (b[pos] + root[pos]) / (2.0 * mu)
    neg = ~pos
    out[neg] = 2.0 * counts[neg] / (root[neg] - b[neg])
    return out


# -- sampler ---------------------------------------------------------------
#
# Every uniform is a hash of (seed, pixel index, draw number), so the value at
# a pixel never depends on how the grid is traversed or split.

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return _splitmix64_body(x)


def _splitmix64_body(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _uniforms(key: np.uint64, index: np.ndarray, draw: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1), one per pixel index."""
    word = (index << np.uint64(20)) | np.uint64(draw)
    h = _splitmix64(key ^ _splitmix64(word))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _seed_key(seed: int) -> np.uint64:
    return _splitmix64(np.uint64(int(seed) & int(_M64)))


def _inversion(lam: np.ndarray, u: np.ndarray) -> np.ndarray:
    # sequential search on the CDF; lam < 30 so the tail is reached quickly
    k = np.zeros(lam.shape)
    p = np.exp(-lam)
    cdf = p.copy()
    active = u > cdf
    n = 0
    while active.any():
        n += 1
        p = np.where(active, p * lam / n, p)
        k += active
        cdf = np.where(active, cdf + p, cdf)
        # p underflow guards rounding of a CDF that tops out just below 1
        active &= (u > cdf) & (p > 0)
    return k


def _ptrs(lam: np.ndarray, key: np.uint64, index: np.ndarray) -> np.ndarray:
    """Hormann's transformed rejection with squeeze, for ``lam >= 10``."""
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)

    out = np.empty(lam.shape)
    todo = np.arange(lam.size)
    attempt = 0
    while todo.size:
        u = _uniforms(key, index[todo], 2 * attempt) - 0.5
        v = _uniforms(key, index[todo], 2 * attempt + 1)
        attempt += 1
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a[todo] / us + b[todo]) * u + lam[todo] + 0.43)
        fast = (us >= 0.07) & (v <= vr[todo])
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(v * invalpha[todo] / (a[todo] / (us * us) + b[todo]))
            rhs = -lam[todo] + k * loglam[todo] - gammaln(k + 1.0)
        reject = (k < 0) | ((us < 0.013) & (v > us))
        ok = fast | (~reject & (lhs <= rhs))
        out[todo[ok]] = k[ok]
        todo = todo[~ok]
    return out


def sample_poisson(lam: np.ndarray, seed: int) -> np.ndarray:
    """Draw independent ``Poisson(lam[i])`` counts, reproducible from ``seed``."""
    lam = np.asarray(lam, dtype=np.float64)
    if not np.isfinite(lam).all() or (lam < 0).any():
        raise ValueError("Poisson means must be finite and nonnegative")
    key = _seed_key(seed)
    flat = lam.ravel()
    index = np.arange(flat.size, dtype=np.uint64)
    out = np.zeros(flat.size)

    small = (flat > 0) & (flat < _INVERSION_LIMIT)
    if small.any():
        # draw number 0 of the inversion stream; PTRS uses its own key below
        out[small] = _inversion(flat[small], _uniforms(key, index[small], 0))
    large = flat >= _INVERSION_LIMIT
    if large.any():
        out[large] = _ptrs(flat[large], _splitmix64(key + np.uint64(1)), index[large])
    return out.reshape(lam.shape)
