"""Raster export: 16-bit PGM images, per-cell CSV and contour CSV (plotting only)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import WhitneyGrid


def render(grid: WhitneyGrid, values: np.ndarray, size: int = 512, fill: float = 1.0) -> np.ndarray:
    """Sample per-cell values on a size x size Cartesian image of [-1, 1]^2.

    Row 0 is the top (Im z = 1).  Pixels beyond the outer ring get ``fill``.
    """
    axis = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    x, y = np.meshgrid(axis, axis[::-1])
    cells = grid.locate((x + 1j * y).ravel())
    out = np.full(cells.shape, float(fill))
    inside = cells >= 0
    vals = np.asarray(values, dtype=float)[cells[inside]]
    out[inside] = np.where(np.isfinite(vals), vals, fill)
    return out.reshape(size, size)


def write_pgm(path, image: np.ndarray) -> Path:
    """Binary PGM, values in [0, 1] quantised to 16 bits (big-endian)."""
    path = Path(path)
    q = np.clip(np.rint(np.nan_to_num(image, nan=1.0) * 65535.0), 0, 65535).astype(">u2")
    h, w = q.shape
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    maxval = int(parts[2])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[3], dtype=dtype, count=w * h).reshape(h, w).astype(float) / maxval


def write_cells_csv(path, raster, labels=None) -> Path:
    """One row per cell: centre, modulus, error bound, mask, uncertain flag, label."""
    path = Path(path)
    g = raster.grid
    lab = labels.labels if labels is not None else np.full(g.n_cells, -1)
    with path.open("w") as fh:
        fh.write("re,im,modulus,error,mask,uncertain,label\n")
        for z, m, e, k, unc, l in zip(g.centers, raster.modulus, raster.error, raster.mask, raster.uncertain, lab):
            fh.write(f"{z.real:.17g},{z.imag:.17g},{m:.17g},{e:.17g},{int(k)},{int(unc)},{int(l)}\n")
    return path


def write_contour_csv(path, image: np.ndarray, eta: float) -> Path:
    """Marching-squares contours of the rendered modulus at level eta (for plots only)."""
    from skimage.measure import find_contours

    path = Path(path)
    size = image.shape[0]
    with path.open("w") as fh:
        fh.write("contour,re,im\n")
        for k, c in enumerate(find_contours(image, eta)):
            re = (c[:, 1] + 0.5) / size * 2.0 - 1.0
            im = 1.0 - (c[:, 0] + 0.5) / size * 2.0
            for a, b in zip(re, im):
                fh.write(f"{k},{a:.17g},{b:.17g}\n")
    return path
