"""Rasterized planar domains, erosion to the r-interior, and mask file I/O.

A mask lives on the lattice ``origin + h * index``. The built-in generators
place an ``N x N`` lattice strictly inside the square (0, pi)^2 with
``h = pi / (N + 1)``, so the full square is the classical Dirichlet box and
``2 pi / h = 2 (N + 1)`` is an integer (the torus embedding used by the
cutoff module needs that).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..errors import ArgumentError, EmptyInteriorError

PERCOLATION_SEED = 20240601


@dataclass(frozen=True)
class DomainMask:
    """Boolean raster of interior points; ``inside[i, j]`` sits at origin + h (i, j)."""

    inside: np.ndarray
    h: float
    origin: tuple[float, ...] = field(default=(0.0, 0.0))
    name: str = "mask"

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        if inside.ndim != len(self.origin):
            raise ArgumentError(f"mask has {inside.ndim} axes but origin has {len(self.origin)}")
        if not inside.any():
            raise EmptyInteriorError(f"mask '{self.name}' has no interior point")
        if self.h <= 0:
            raise ArgumentError("grid spacing must be positive")
        inside.setflags(write=False)
        object.__setattr__(self, "inside", inside)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.inside.shape

    @property
    def nx(self) -> int:
        return self.shape[0]

    @property
    def ny(self) -> int:
        return self.shape[1]

    @property
    def dim(self) -> int:
        return self.inside.ndim

    @property
    def n_inside(self) -> int:
        return int(self.inside.sum())

    def axes(self) -> list[np.ndarray]:
        return [o + self.h * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def coords(self) -> list[np.ndarray]:
        """Physical coordinates of every raster cell (``indexing='ij'``)."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def with_inside(self, inside: np.ndarray, name: str | None = None) -> "DomainMask":
        return DomainMask(inside, self.h, self.origin, name or self.name)

    # file I/O ------------------------------------------------------------------

    def save(self, path) -> None:
        """Write ASCII PGM (0 exterior, 255 interior) plus ``<path>.json`` sidecar.

        PGM row r holds the cells with second index j = r.
        """
        if self.dim != 2:
            raise ArgumentError("PGM output supports 2-D masks only")
        path = Path(path)
        img = np.where(self.inside.T, 255, 0)
        lines = ["P2", f"{self.nx} {self.ny}", "255"]
        lines += [" ".join(str(v) for v in row) for row in img]
        path.write_text("\n".join(lines) + "\n")
        sidecar = {"h": self.h, "origin": list(self.origin), "name": self.name}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "DomainMask":
        path = Path(path)
        tokens = []
        for line in path.read_text().splitlines():
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
        if not tokens or tokens[0] != "P2":
            raise ArgumentError(f"{path}: not an ASCII PGM (P2) file")
        try:
            w, hgt, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
            pix = np.array([int(t) for t in tokens[4:]], dtype=int)
        except (IndexError, ValueError) as exc:
            raise ArgumentError(f"{path}: malformed PGM header") from exc
        if pix.size != w * hgt:
            raise ArgumentError(f"{path}: expected {w * hgt} pixels, found {pix.size}")
        inside = (pix.reshape(hgt, w) >= (maxval + 1) // 2).T
        side = Path(str(path) + ".json")
        if not side.exists():
            raise ArgumentError(f"missing sidecar {side} with grid spacing and origin")
        meta = json.loads(side.read_text())
        return cls(inside, float(meta["h"]), tuple(meta["origin"]), meta.get("name", path.stem))


# generators --------------------------------------------------------------------


def square_grid(N: int) -> tuple[float, tuple[float, float], np.ndarray, np.ndarray]:
    """Spacing, origin and coordinate arrays of the N x N lattice inside (0, pi)^2."""
    if N < 1:
        raise ArgumentError("N must be >= 1")
    h = math.pi / (N + 1)
    ax = h * np.arange(1, N + 1)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    return h, (h, h), X, Y


def rectangle_mask(N: int) -> DomainMask:
    h, origin, X, _ = square_grid(N)
    return DomainMask(np.ones_like(X, dtype=bool), h, origin, "rectangle")


def lshape_mask(N: int) -> DomainMask:
    """(0,pi)^2 with the closed upper-right quadrant [pi/2, pi)^2 removed."""
    h, origin, X, Y = square_grid(N)
    half = math.pi / 2 - 1e-12
    return DomainMask(~((X >= half) & (Y >= half)), h, origin, "lshape")


def disk_mask(N: int) -> DomainMask:
    h, origin, X, Y = square_grid(N)
    c = math.pi / 2
    return DomainMask((X - c) ** 2 + (Y - c) ** 2 < c * c, h, origin, "disk")


def koch_snowflake(level: int) -> np.ndarray:
    """Vertices (n, 2) of the Koch snowflake prefractal, unit-side initial triangle."""
    if not 0 <= level <= 6:
        raise ArgumentError("Koch level must lie in 0..6")
    tri = np.array([[0.0, 0.0], [0.5, math.sqrt(3) / 2], [1.0, 0.0]])
    pts = tri
    rot = np.array([[0.5, -math.sqrt(3) / 2], [math.sqrt(3) / 2, 0.5]])
    for _ in range(level):
        a = pts
        b = np.roll(pts, -1, axis=0)
        seg = b - a
        p1 = a + seg / 3
        p3 = a + 2 * seg / 3
        p2 = p1 + (seg / 3) @ rot.T
        pts = np.stack([a, p1, p2, p3], axis=1).reshape(-1, 2)
    return pts


def points_in_polygon(px: np.ndarray, py: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, vectorized over points."""
    inside = np.zeros(px.shape, dtype=bool)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for a, b, c, e in zip(x0, y0, x1, y1):
        crosses = (b > py) != (e > py)
        if not crosses.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a + (py - b) * (c - a) / (e - b)
        inside ^= crosses & (px < xint)
    return inside


def koch_mask(N: int, level: int = 3) -> DomainMask:
    """Koch snowflake prefractal scaled into (0, pi)^2 with a one-cell margin."""
    if level > 4:
        raise ArgumentError("Koch mask level must be <= 4")
    h, origin, X, Y = square_grid(N)
    poly = koch_snowflake(level)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    span = float((hi - lo).max())
    usable = math.pi - 4 * h
    poly = (poly - (lo + hi) / 2) * (usable / span) + math.pi / 2
    return DomainMask(points_in_polygon(X, Y, poly), h, origin, f"koch{level}")


def percolation_mask(N: int, p: float = 0.8, levels: int = 4, seed: int = PERCOLATION_SEED) -> DomainMask:
    """Fractal (Mandelbrot) percolation: keep each of the 2x2 sub-blocks with probability p.

    The unit square is refined ``levels`` times; the raster marks cells whose
    position falls in a surviving block. Deterministic for a fixed seed.
    """
    h, origin, X, Y = square_grid(N)
    rng = np.random.default_rng(seed)
    keep = np.ones((1, 1), dtype=bool)
    for _ in range(levels):
        keep = np.kron(keep, np.ones((2, 2), dtype=bool))
        keep &= rng.random(keep.shape) < p
    if not keep.any():
        keep[keep.shape[0] // 2, keep.shape[1] // 2] = True
    n = keep.shape[0]
    ix = np.minimum((X / math.pi * n).astype(int), n - 1)
    iy = np.minimum((Y / math.pi * n).astype(int), n - 1)
    return DomainMask(keep[ix, iy], h, origin, "percolation")


MASK_GENERATORS = {
    "rectangle": rectangle_mask,
    "lshape": lshape_mask,
    "disk": disk_mask,
    "koch": koch_mask,
    "percolation": percolation_mask,
}


def make_mask(kind: str, N: int, **kwargs) -> DomainMask:
    try:
        gen = MASK_GENERATORS[kind]
    except KeyError:
        raise ArgumentError(f"unknown mask kind '{kind}', choose from {sorted(MASK_GENERATORS)}") from None
    return gen(N, **kwargs)


# erosion --------------------------------------------------------------------------


def disk_stencil(radius_cells: float, dim: int = 2) -> np.ndarray:
    """Boolean structuring element of offsets with |offset| <= radius_cells."""
    R = int(math.floor(radius_cells + 1e-9))
    ax = np.arange(-R, R + 1)
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    dist2 = sum(g * g for g in grids)
    return dist2 <= radius_cells**2 * (1 + 1e-12) + 1e-12


def erode(mask: DomainMask, r: float) -> DomainMask:
    """Cells whose every neighbour within distance r (in units of h) is inside.

    Cells outside the raster count as exterior.
    """
    if r < 0:
        raise ArgumentError("erosion radius must be >= 0")
    if r == 0:
        return mask
    st = disk_stencil(r / mask.h, mask.dim)
    out = ndimage.binary_erosion(mask.inside, structure=st, border_value=0)
    if not out.any():
        raise EmptyInteriorError(f"erosion of '{mask.name}' by r={r} leaves no interior point")
    return mask.with_inside(out, f"{mask.name}-r{r:g}")
