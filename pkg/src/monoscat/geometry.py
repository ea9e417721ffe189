"""Region-of-interest pixelization, scatterer shapes, contrast rasterization
and equidistant direction sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, GeometryError, InputError

KITE_POLYGON_POINTS = 512


@dataclass(frozen=True)
class DirectionSet:
    """N equidistant unit directions on the circle, angles (n-1) 2pi/N."""

    n: int
    angles: np.ndarray
    vectors: np.ndarray  # shape (N, 2)

    def negation_index(self, i):
        """Index of -theta_i (requires even N)."""
        return (i + self.n // 2) % self.n


def directions(n: int) -> DirectionSet:
    if n < 2 or n % 2 != 0:
        raise ConfigError(f"number of directions must be even and >= 2, got {n}")
    angles = np.arange(n) * (2.0 * np.pi / n)
    vectors = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return DirectionSet(n=n, angles=angles, vectors=vectors)


@dataclass(frozen=True)
class PixelGrid:
    """Square pixelization of Omega = [-half_width, half_width]^2.

    Pixel centers are stored row-major starting at the (min x, min y)
    corner: index m = iy * side + ix.
    """

    half_width: float
    side: int
    spacing: float
    centers: np.ndarray  # shape (side**2, 2)

    @property
    def n_pixels(self):
        return self.side * self.side


def build_grid(half_width: float, side: int) -> PixelGrid:
    if half_width <= 0:
        raise InputError(f"half_width must be positive, got {half_width}")
    if side < 1:
        raise InputError(f"side count must be >= 1, got {side}")
    spacing = 2.0 * half_width / side
    coords = -half_width + (np.arange(side) + 0.5) * spacing
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    centers = np.stack([xx.ravel(), yy.ravel()], axis=1)
    return PixelGrid(half_width=float(half_width), side=int(side),
                     spacing=float(spacing), centers=centers)


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _points_in_polygon(points, vertices):
    """Even-odd ray casting, vectorized over points."""
    x, y = points[:, 0], points[:, 1]
    vx, vy = vertices[:, 0], vertices[:, 1]
    wx, wy = np.roll(vx, -1), np.roll(vy, -1)
    inside = np.zeros(len(points), dtype=bool)
    for x0, y0, x1, y1 in zip(vx, vy, wx, wy):
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xint)
    return inside


def kite_boundary(n_points=KITE_POLYGON_POINTS):
    """Standard inverse-scattering test kite, centered so that t=pi maps
    near the origin; unit scale, unrotated."""
    t = np.arange(n_points) * (2.0 * np.pi / n_points)
    x = np.cos(t) + 0.65 * np.cos(2.0 * t) - 0.65
    y = 1.5 * np.sin(t)
    return np.stack([x, y], axis=1)


@dataclass(frozen=True)
class ShapeSpec:
    """A scatterer component with constant contrast.

    kind: one of 'disk', 'ellipse', 'kite', 'polygon'.
    params: kind-specific sizes -- 'radius' (disk), 'semi_axes' (ellipse),
    'scale' (kite), 'vertices' (polygon, local coordinates).
    """

    kind: str
    center: tuple
    contrast: float
    rotation: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "kite", "polygon"):
            raise GeometryError(f"unknown shape kind {self.kind!r}")
        if not (self.contrast > 0 and np.isfinite(self.contrast)):
            raise GeometryError(f"shape contrast must be positive, got {self.contrast}")

    def contains(self, points):
        """Boolean mask of points (n, 2) inside the shape."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        local = (points - np.asarray(self.center)) @ _rotation(self.rotation)
        if self.kind == "disk":
            r = float(self.params["radius"])
            return np.einsum("ij,ij->i", local, local) <= r * r
        if self.kind == "ellipse":
            a, b = self.params["semi_axes"]
            u = local / np.array([a, b])
            return np.einsum("ij,ij->i", u, u) <= 1.0
        if self.kind == "kite":
            scale = float(self.params.get("scale", 1.0))
            return _points_in_polygon(local / scale, kite_boundary())
        vertices = np.asarray(self.params["vertices"], dtype=float)
        return _points_in_polygon(local, vertices)

    def to_dict(self):
        d = {"kind": self.kind, "center": list(self.center),
             "contrast": self.contrast, "rotation": self.rotation}
        for key, value in self.params.items():
            d[key] = np.asarray(value).tolist() if key == "vertices" else value
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        center = tuple(d.pop("center"))
        contrast = float(d.pop("contrast"))
        rotation = float(d.pop("rotation", 0.0))
        return cls(kind=kind, center=center, contrast=contrast,
                   rotation=rotation, params=d)


@dataclass(frozen=True)
class ContrastField:
    """Piecewise-constant non-negative contrast on a pixel grid."""

    grid: PixelGrid
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.grid.n_pixels,):
            raise InputError(f"expected {self.grid.n_pixels} coefficients, "
                             f"got shape {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise InputError("contrast coefficients must be finite and >= 0")
        object.__setattr__(self, "coefficients", c)

    @property
    def support_mask(self):
        return self.coefficients > 0


def _subsample_offsets(grid, subsamples):
    step = grid.spacing / subsamples
    offs = -grid.spacing / 2 + (np.arange(subsamples) + 0.5) * step
    ox, oy = np.meshgrid(offs, offs, indexing="xy")
    return np.stack([ox.ravel(), oy.ravel()], axis=1)


def rasterize(shapes, grid: PixelGrid, subsamples: int = 8) -> ContrastField:
    """Average each shape's contrast over subsamples^2 points per pixel.

    Shapes must be pairwise disjoint; overlap is detected on the sample
    points.
    """
    if subsamples < 1:
        raise InputError(f"subsamples must be >= 1, got {subsamples}")
    coeffs = np.zeros(grid.n_pixels)
    if not shapes:
        return ContrastField(grid=grid, coefficients=coeffs)
    offsets = _subsample_offsets(grid, subsamples)
    points = (grid.centers[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    hits = np.zeros(len(points), dtype=int)
    for shape in shapes:
        mask = shape.contains(points)
        hits += mask
        frac = mask.reshape(grid.n_pixels, -1).mean(axis=1)
        coeffs += shape.contrast * frac
    if np.any(hits > 1):
        raise GeometryError("shapes overlap on the sampling grid")
    return ContrastField(grid=grid, coefficients=coeffs)


def true_support_mask(shapes, grid: PixelGrid):
    """Pixel-center membership mask for the union of the shapes."""
    mask = np.zeros(grid.n_pixels, dtype=bool)
    for shape in shapes:
        mask |= shape.contains(grid.centers)
    return mask


def default_shapes():
    """Kite (contrast 1) and ellipse (contrast 2) test scatterers."""
    return [
        ShapeSpec(kind="kite", center=(-2.0, 1.5), contrast=1.0,
                  params={"scale": 1.0}),
        ShapeSpec(kind="ellipse", center=(2.0, -2.0), contrast=2.0,
                  params={"semi_axes": [1.5, 1.0]}),
    ]
