"""Projection between 3D scan points and a sparse square depth image.

Depth here is distance along the viewing axis (planar depth), not
Euclidean range, so apparent target size follows the pinhole
similar-triangles relation exactly. Pixel (u, v) covers the continuous
coordinate square [u, u+1) x [v, v+1); its center sits at half-integer
offsets, which places the principal point on the corner shared by the
four central pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import _vec


@dataclass
class ProjectionParams:
    """Square pinhole looking along ``view_direction`` (vehicle frame, default straight up)."""

    resolution: int = 512
    half_fov: float = np.deg2rad(60.0)
    view_direction: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.resolution < 64 or self.resolution % 2 != 0:
            raise ValueError("resolution must be even and >= 64")
        if not 0.0 < self.half_fov < np.pi / 2:
            raise ValueError("half_fov must lie in (0, pi/2)")
        w = _vec(self.view_direction)
        n = np.linalg.norm(w)
        if n < 1e-12:
            raise ValueError("view_direction must be non-zero")
        w = w / n
        # Deterministic in-plane basis: seed with whichever world axis is
        # least parallel to the view axis.
        helper = np.array([1.0, 0.0, 0.0]) if abs(w[0]) <= 0.9 else np.array([0.0, 1.0, 0.0])
        u = helper - np.dot(helper, w) * w
        u /= np.linalg.norm(u)
        self.w_axis = w
        self.u_axis = u
        self.v_axis = np.cross(w, u)

    @property
    def focal(self) -> float:
        """Pixels; (N/2) / tan(half_fov)."""
        return (self.resolution / 2.0) / np.tan(self.half_fov)


@dataclass
class DepthImage:
    """N x N planar depths in meters; 0 marks a pixel with no return."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        n = self.data.shape[0]
        if self.data.shape != (n, n):
            raise ValueError("depth image must be square")
        if np.any(self.data < 0.0) or not np.all(np.isfinite(self.data)):
            raise ValueError("depth values must be finite and >= 0")

    @property
    def resolution(self) -> int:
        return self.data.shape[0]


def project(points, params: ProjectionParams) -> DepthImage:
    """Bin points into the image, keeping the smallest depth per pixel.

    Points behind the image plane or outside the field of view are
    dropped.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    n = params.resolution
    depth = np.full((n, n), np.inf)
    if len(pts):
        z = pts @ params.w_axis
        keep = z > 0.0
        pts = pts[keep]
        z = z[keep]
        f = params.focal
        u = np.floor(f * (pts @ params.u_axis) / z + n / 2.0).astype(int)
        v = np.floor(f * (pts @ params.v_axis) / z + n / 2.0).astype(int)
        inside = (u >= 0) & (u < n) & (v >= 0) & (v < n)
        np.minimum.at(depth, (v[inside], u[inside]), z[inside])
    depth[~np.isfinite(depth)] = 0.0
    return DepthImage(depth)


def unproject(pixel, depth: float, params: ProjectionParams) -> np.ndarray:
    """3D point at the center of ``pixel`` with the given planar depth."""
    u, v = pixel
    n = params.resolution
    if not (0 <= u < n and 0 <= v < n):
        raise ValueError("pixel outside image")
    if depth <= 0.0:
        raise ValueError("depth must be positive")
    f = params.focal
    x = (u + 0.5 - n / 2.0) * depth / f
    y = (v + 0.5 - n / 2.0) * depth / f
    return x * params.u_axis + y * params.v_axis + depth * params.w_axis


def to_ascii_pgm(image: DepthImage) -> str:
    """Debug dump as ASCII PGM, depth in integer millimeters (0 = empty)."""
    mm = np.rint(image.data * 1000.0).astype(int)
    n = image.resolution
    lines = ["P2", f"{n} {n}", str(max(1, int(mm.max())))]
    lines.extend(" ".join(str(x) for x in row) for row in mm)
    return "\n".join(lines) + "\n"
