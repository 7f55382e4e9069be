"""Write the 256x256 Cameraman test image used by the benchmarks.

scikit-image ships a 512x512 scan; it is reduced by 2x2 block averaging
(area resampling). The result takes quarter-integer values, so ``.csv`` and
``.npy`` outputs are exact while ``.pgm`` output is rounded to 8 bits.

    python scripts/make_cameraman.py cameraman.csv
"""
import sys
from pathlib import Path

import numpy as np
from skimage import data

from pidal import io


def cameraman_256() -> np.ndarray:
    img = data.camera().astype(np.float64)
    return img.reshape(256, 2, 256, 2).mean(axis=(1, 3))


def main(path: str) -> None:
    img = cameraman_256()
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        io.write_csv_image(path, img)
    elif suffix == ".npy":
        np.save(path, img)
    elif suffix == ".pgm":
        raw = np.round(img).astype(np.uint8)
        Path(path).write_bytes(b"P5\n256 256\n255\n" + raw.tobytes())
    else:
        raise SystemExit(f"unsupported output format {suffix!r}; use .csv, .npy or .pgm")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "cameraman.csv")
