"""Periodic-boundary convolution and the FFT solve of the x-update.

Every blur is treated as a circulant operator on the image grid, so it is
diagonalised by the 2-D DFT. Real-input transforms (``rfft2``/``irfft2``)
are used internally; they return real images by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import GridMismatchError, PixelIndex


@dataclass(frozen=True)
class BlurKernel:
    """Small nonnegative convolution kernel with an anchor (its centre).

    The anchor defaults to ``(rows // 2, cols // 2)``.
    """

    taps: np.ndarray
    anchor: Optional[PixelIndex] = None

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim == 1:
            taps = taps[None, :]
        if taps.ndim != 2 or taps.size == 0:
            raise ValueError(f"kernel taps must be a non-empty 2-D array, got shape {taps.shape}")
        if not np.isfinite(taps).all():
            raise ValueError("kernel taps must be finite")
        if (taps < 0).any():
            raise ValueError("kernel taps must be nonnegative")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        anchor = self.anchor
        if anchor is None:
            anchor = PixelIndex(taps.shape[0] // 2, taps.shape[1] // 2)
        anchor = PixelIndex(int(anchor[0]), int(anchor[1]))
        if not (0 <= anchor.row < taps.shape[0] and 0 <= anchor.col < taps.shape[1]):
            raise ValueError(f"anchor {anchor} lies outside kernel of shape {taps.shape}")
        object.__setattr__(self, "anchor", anchor)

    @classmethod
    def uniform(cls, rows: int, cols: int | None = None) -> "BlurKernel":
        """Box blur of size ``rows x cols`` whose taps sum to one."""
        cols = rows if cols is None else cols
        if rows < 1 or cols < 1:
            raise ValueError("uniform kernel size must be positive")
        return cls(np.full((rows, cols), 1.0 / (rows * cols)))

    @classmethod
    def delta(cls) -> "BlurKernel":
        return cls(np.ones((1, 1)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.taps.shape

    def is_symmetric(self) -> bool:
        """True if the kernel is point-symmetric about its anchor."""
        r, c = self.shape
        if (r % 2, c % 2) != (1, 1) or self.anchor != (r // 2, c // 2):
            return False
        return bool(np.array_equal(self.taps, self.taps[::-1, ::-1]))


@dataclass(frozen=True)
class TransferFunction:
    """Frequency response of a kernel embedded in a ``height x width`` torus."""

    height: int
    width: int
    values: np.ndarray = field(repr=False)
    half: np.ndarray = field(repr=False)
    # |H|^2 + 1 on the half spectrum, >= 1 everywhere
    normal_denominator: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def dc_gain(self) -> float:
        return float(self.values[0, 0].real)


def embed_kernel(kernel: BlurKernel, height: int, width: int) -> np.ndarray:
    """Zero-pad ``kernel`` to the grid with its anchor moved to pixel (0, 0)."""
    kr, kc = kernel.shape
    if kr > height or kc > width:
        raise ValueError(f"kernel of shape {kernel.shape} does not fit a {height}x{width} grid")
    padded = np.zeros((height, width))
    padded[:kr, :kc] = kernel.taps
    return np.roll(padded, (-kernel.anchor.row, -kernel.anchor.col), axis=(0, 1))


def plan(kernel: BlurKernel, height: int, width: int) -> TransferFunction:
    """Precompute the transfer function of ``kernel`` on a given grid."""
    padded = embed_kernel(kernel, height, width)
    values = np.fft.fft2(padded)
    half = np.fft.rfft2(padded)
    denom = half.real**2 + half.imag**2 + 1.0
    for arr in (values, half, denom):
        arr.setflags(write=False)
    return TransferFunction(height, width, values, half, denom)


def _check(tf: TransferFunction, *images: np.ndarray) -> None:
    for im in images:
        if np.shape(im) != tf.shape:
            raise GridMismatchError(f"image of shape {np.shape(im)} does not match transfer function {tf.shape}")


def _apply(spectrum: np.ndarray, x: np.ndarray, shape) -> np.ndarray:
    return np.fft.irfft2(spectrum * np.fft.rfft2(x), s=shape)


def convolve(tf: TransferFunction, x: np.ndarray) -> np.ndarray:
    """Circular convolution ``K x``."""
    _check(tf, x)
    return _apply(tf.half, x, tf.shape)


def convolve_adjoint(tf: TransferFunction, x: np.ndarray) -> np.ndarray:
    """Circular correlation ``K^T x`` (multiplication by the conjugate spectrum)."""
    _check(tf, x)
    return _apply(tf.half.conj(), x, tf.shape)


def solve_x_update(tf: TransferFunction, x_prime: np.ndarray, x_dblprime: np.ndarray) -> np.ndarray:
    """Minimise ``||K x - x'||^2 + ||x - x''||^2`` over ``x``.

    Solves ``(K^T K + I) x = K^T x' + x''`` exactly by a pointwise division in
    the frequency domain. The divisor ``|H|^2 + 1`` is never below one.
    """
    _check(tf, x_prime, x_dblprime)
    rhs = tf.half.conj() * np.fft.rfft2(x_prime) + np.fft.rfft2(x_dblprime)
    return np.fft.irfft2(rhs / tf.normal_denominator, s=tf.shape)
