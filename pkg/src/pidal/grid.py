"""Dense 2-D image helpers shared by every other module.

Images are plain ``numpy.ndarray`` objects of shape ``(height, width)`` and
dtype ``float64``, stored row-major so that pixel ``(r, c)`` is entry
``r * width + c`` of the flattened vector.
"""
from __future__ import annotations

import operator
from typing import NamedTuple

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two images that must share a grid do not."""


class PixelIndex(NamedTuple):
    row: int
    col: int


class Norms(NamedTuple):
    l1: float
    l2_squared: float
    max: float


_OPS = {"add": operator.add, "sub": operator.sub, "mul": operator.mul}


def as_image(data, copy: bool = True) -> np.ndarray:
    """Validate ``data`` as a finite 2-D grid and return it as float64."""
    arr = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    return arr


def check_same_shape(*images: np.ndarray) -> tuple[int, int]:
    shape = np.shape(images[0])
    for im in images[1:]:
        if np.shape(im) != shape:
            raise GridMismatchError(f"grid mismatch: {shape} vs {np.shape(im)}")
    return shape


def elementwise(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    """Apply ``op`` (``"add"``, ``"sub"`` or ``"mul"``) pixel by pixel."""
    if op not in _OPS:
        raise ValueError(f"unknown op {op!r}; expected one of {sorted(_OPS)}")
    a = as_image(a, copy=False)
    b = as_image(b, copy=False)
    check_same_shape(a, b)
    return _OPS[op](a, b)


def norms(a: np.ndarray) -> Norms:
    a = np.asarray(a, dtype=np.float64)
    return Norms(
        l1=float(np.abs(a).sum()),
        l2_squared=float(np.vdot(a, a)),
        max=float(a.max()),
    )
