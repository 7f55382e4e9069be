"""File formats: 16-bit binary PGM for counts, CSV matrices for real images,
and flat ``key = value`` text for metadata and config files."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

PGM_MAXVAL = 65535
# one header token, skipping whitespace and '#' comments
_PGM_TOKEN = re.compile(rb"\s*(#[^\n]*\n\s*)*([^\s#]+)")


class SaturationError(ValueError):
    """Counts exceed what a 16-bit graymap can hold."""


def write_pgm(path, counts: np.ndarray) -> None:
    counts = np.asarray(counts)
    if counts.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    rounded = np.round(counts)
    if (rounded < 0).any() or np.abs(counts - rounded).max(initial=0) > 1e-9:
        raise ValueError("PGM output requires nonnegative integer values")
    if rounded.max(initial=0) > PGM_MAXVAL:
        raise SaturationError(f"value {rounded.max():.0f} exceeds the 16-bit limit {PGM_MAXVAL}")
    h, w = counts.shape
    header = f"P5\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + rounded.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) graymap of 8 or 16 bits per sample, as float64."""
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    # magic, width, height, maxval
    while len(tokens) < 4:
        m = _PGM_TOKEN.match(raw, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(m.group(2))
        pos = m.end()
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = (int(t) for t in tokens[1:])
    pos += 1  # single whitespace byte before the raster
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    n = w * h * np.dtype(dtype).itemsize
    data = raw[pos:pos + n]
    if len(data) != n:
        raise ValueError(f"{path}: expected {n} raster bytes, found {len(data)}")
    return np.frombuffer(data, dtype=dtype).reshape(h, w).astype(np.float64)


def write_csv_image(path, image: np.ndarray) -> None:
    # 17 significant digits round-trip every double exactly
    np.savetxt(path, np.asarray(image, dtype=np.float64), fmt="%.17g", delimiter=",")


def read_csv_image(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))


def read_image(path) -> np.ndarray:
    """Read an image by extension: ``.pgm``, ``.csv`` or ``.npy``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".csv":
        return read_csv_image(path)
    if suffix == ".npy":
        return np.load(path).astype(np.float64)
    raise ValueError(f"{path}: unsupported image format {suffix!r} (use .pgm, .csv or .npy)")


def write_keyvalue(path, items: dict) -> None:
    lines = [f"{k} = {v}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_keyvalue(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
