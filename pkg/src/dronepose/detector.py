"""Initial drone detection in a sparse depth image.

Every non-zero pixel is scored as a candidate target center with a
two-part kernel: an inner square sized to the expected apparent width
of the drone at the candidate's depth, which should be uniformly
filled at that depth, and a surrounding band that should be empty.
The candidate with the lowest combined dissimilarity wins.

Pixels off the image edge are treated as empty: they take the maximal
per-pixel penalty inside the inner square and contribute nothing in
the outer band, so edge-clipped candidates are disfavored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth_image import DepthImage, ProjectionParams, unproject


class NoCandidatesError(ValueError):
    """Raised when the depth image contains no non-zero pixel."""


@dataclass
class KernelParams:
    drone_width: float = 0.5       # m, assumed physical target width
    outer_band_px: int = 20        # band width around the inner square, pixels
    depth_epsilon: float = 0.1     # m, floor for the similarity penalty
    max_inner_px: int = 101        # cap on the inner square side, odd
    inner_skip_empty: bool = False  # lenient mode: empty inner pixels cost 0

    def __post_init__(self):
        if self.drone_width <= 0.0:
            raise ValueError("drone_width must be > 0")
        if self.outer_band_px < 1:
            raise ValueError("outer_band_px must be >= 1")
        if self.depth_epsilon <= 0.0:
            raise ValueError("depth_epsilon must be > 0")
        if self.max_inner_px < 1 or self.max_inner_px % 2 == 0:
            raise ValueError("max_inner_px must be odd and >= 1")


@dataclass
class Detection:
    pixel: tuple        # (u, v)
    depth: float        # m, at the winning pixel
    dissimilarity: float
    position: np.ndarray  # vehicle frame, m


def inner_size(depth: float, params: KernelParams, proj: ProjectionParams) -> int:
    """Side of the inner square, pixels: 2*floor((s*f/Z)/2) + 1, clamped odd."""
    if depth <= 0.0:
        raise ValueError("depth must be positive")
    raw = 2 * int(np.floor(params.drone_width * proj.focal / depth / 2.0)) + 1
    return min(max(raw, 1), params.max_inner_px)


def _window(padded: np.ndarray, v: int, u: int, half: int, pad: int) -> np.ndarray:
    vc, uc = v + pad, u + pad
    return padded[vc - half: vc + half + 1, uc - half: uc + half + 1]


def _inner_term(window: np.ndarray, center_depth: float, skip_empty: bool) -> float:
    diffs = np.abs(window - center_depth)
    if skip_empty:
        diffs = np.where(window == 0.0, 0.0, diffs)
    return float(np.sum(diffs))


def _outer_term(values: np.ndarray, center_depth: float, epsilon: float) -> float:
    # values: band pixels in row-major order; empty pixels cost 0, pixels
    # near the candidate depth cost 1/epsilon, others 1/|depth difference|.
    diffs = np.abs(values - center_depth)
    with np.errstate(divide="ignore"):
        contrib = np.where(
            values == 0.0,
            0.0,
            np.where(diffs <= epsilon, 1.0 / epsilon, 1.0 / diffs),
        )
    return float(np.sum(contrib))


def _band_mask(inner: int, band: int) -> np.ndarray:
    side = inner + 2 * band
    mask = np.ones((side, side), dtype=bool)
    mask[band: band + inner, band: band + inner] = False
    return mask


def inner_dissimilarity(image: DepthImage, center_px, params: KernelParams,
                        proj: ProjectionParams) -> float:
    """Sum of |depth - center depth| over the inner square (empties cost full depth)."""
    u, v = center_px
    d_c = float(image.data[v, u])
    if d_c <= 0.0:
        raise ValueError("not a candidate: empty center pixel")
    k = inner_size(d_c, params, proj)
    half = (k - 1) // 2
    padded = np.pad(image.data, half)
    return _inner_term(_window(padded, v, u, half, half), d_c, params.inner_skip_empty)


def outer_dissimilarity(image: DepthImage, center_px, params: KernelParams,
                        proj: ProjectionParams) -> float:
    """Emptiness penalty over the band around the inner square."""
    u, v = center_px
    d_c = float(image.data[v, u])
    if d_c <= 0.0:
        raise ValueError("not a candidate: empty center pixel")
    k = inner_size(d_c, params, proj)
    half = (k - 1) // 2 + params.outer_band_px
    padded = np.pad(image.data, half)
    window = _window(padded, v, u, half, half)
    values = window[_band_mask(k, params.outer_band_px)]
    return _outer_term(values, d_c, params.depth_epsilon)


def detect(image: DepthImage, params: KernelParams, proj: ProjectionParams) -> Detection:
    """Score every non-zero pixel and return the global dissimilarity argmin.

    Ties break toward the smaller inner term, then row-major pixel order.
    """
    data = image.data
    vs, us = np.nonzero(data)
    if len(vs) == 0:
        raise NoCandidatesError("no candidates: depth image is empty")
    depths = data[vs, us]
    sizes = np.array([inner_size(d, params, proj) for d in depths])

    band = params.outer_band_px
    pad = (int(sizes.max()) - 1) // 2 + band
    padded = np.pad(data, pad)
    masks = {int(k): _band_mask(int(k), band) for k in np.unique(sizes)}

    n_cand = len(vs)
    e_inner = np.empty(n_cand)
    e_total = np.empty(n_cand)
    for i in range(n_cand):
        v, u, d_c, k = int(vs[i]), int(us[i]), float(depths[i]), int(sizes[i])
        half_in = (k - 1) // 2
        ei = _inner_term(_window(padded, v, u, half_in, pad), d_c, params.inner_skip_empty)
        outer = _window(padded, v, u, half_in + band, pad)
        eo = _outer_term(outer[masks[k]], d_c, params.depth_epsilon)
        e_inner[i] = ei
        e_total[i] = ei + eo

    best = np.lexsort((np.arange(n_cand), e_inner, e_total))[0]
    u, v, d_c = int(us[best]), int(vs[best]), float(depths[best])
    return Detection(
        pixel=(u, v),
        depth=d_c,
        dissimilarity=float(e_total[best]),
        position=unproject((u, v), d_c, proj),
    )
