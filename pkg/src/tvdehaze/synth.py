"""Synthetic haze and evaluation metric.

Haze is added with the homogeneous scattering model

    I = t * J + (1 - t) * A,    t = exp(-beta * d)

over a parametric depth map ``d``, so the true transmission is known exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_plane
from .exceptions import ConfigError, ShapeError

DEPTH_KINDS = ("linear-vertical", "linear-horizontal", "radial", "constant")


@dataclass(frozen=True)
class SynthSpec:
    depth_kind: str = "linear-vertical"
    beta_scatter: float = 1.0
    depth_min: float = 0.0
    depth_max: float = 1.0
    a: float = 255.0

    def __post_init__(self):
        if self.depth_kind not in DEPTH_KINDS:
            raise ConfigError(
                f"unknown depth kind {self.depth_kind!r}; choose from {', '.join(DEPTH_KINDS)}"
            )
        if not self.beta_scatter > 0:
            raise ConfigError("beta_scatter must be > 0")
        if not 0 <= self.depth_min <= self.depth_max:
            raise ConfigError("need 0 <= depth_min <= depth_max")
        if not self.a > 0:
            raise ConfigError("atmospheric light must be > 0")

    @classmethod
    def from_transmission(
        cls, t_min: float, t_max: float, depth_kind: str = "linear-vertical", a: float = 255.0
    ) -> "SynthSpec":
        """Spec with unit scattering whose transmission spans ``[t_min, t_max]``."""
        if not 0 < t_min <= t_max <= 1:
            raise ConfigError("need 0 < t_min <= t_max <= 1")
        return cls(depth_kind, 1.0, -math.log(t_max), -math.log(t_min), a)


def make_depth(rows: int, cols: int, spec: SynthSpec) -> np.ndarray:
    """Depth map in ``[depth_min, depth_max]``.

    ``linear-vertical`` is farthest on the top row and nearest on the bottom
    row, like a graduated fog; ``linear-horizontal`` goes from far (left) to
    near (right); ``radial`` grows with distance from the image centre.
    """
    if rows < 1 or cols < 1:
        raise ShapeError("depth map needs rows, cols >= 1")
    lo, hi = spec.depth_min, spec.depth_max
    if spec.depth_kind == "constant":
        return np.full((rows, cols), lo)
    if spec.depth_kind == "linear-vertical":
        frac = np.linspace(1.0, 0.0, rows) if rows > 1 else np.zeros(1)
        frac = np.repeat(frac[:, None], cols, axis=1)
    elif spec.depth_kind == "linear-horizontal":
        frac = np.linspace(1.0, 0.0, cols) if cols > 1 else np.zeros(1)
        frac = np.repeat(frac[None, :], rows, axis=0)
    else:
        yy, xx = np.mgrid[0:rows, 0:cols].astype(np.float64)
        r = np.hypot(yy - (rows - 1) / 2.0, xx - (cols - 1) / 2.0)
        rmax = r.max()
        frac = r / rmax if rmax > 0 else np.zeros_like(r)
    return lo + (hi - lo) * frac


def synthesize_haze(clean, depth, spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(hazy, t_true)``; ``clean`` may be ``(H, W)`` or ``(H, W, C)``."""
    clean = np.asarray(clean, dtype=np.float64)
    depth = as_plane(depth, "depth")
    if clean.shape[:2] != depth.shape:
        raise ShapeError(f"clean image {clean.shape} does not match depth {depth.shape}")
    t = np.exp(-spec.beta_scatter * depth)
    tb = t if clean.ndim == 2 else t[:, :, None]
    hazy = tb * clean + (1.0 - tb) * spec.a
    return hazy, t


def mse(result, truth) -> float:
    """Root of the channel-summed mean squared difference.

    ``sqrt(sum_c sum_x (I_c - G_c)^2 / (C * m * n))``; ``C`` is the channel
    count (1 for 2-D arrays).
    """
    result = np.asarray(result, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if result.shape != truth.shape:
        raise ShapeError(f"shape mismatch: {result.shape} vs {truth.shape}")
    d = result - truth
    return math.sqrt(float(np.sum(d * d)) / d.size)


def structured_scene(rows: int, cols: int, rng: np.random.Generator, channels: int = 3) -> np.ndarray:
    """Random piecewise-constant scene in ``[0, 255]``: a gradient backdrop with
    rectangles, discs and a stripe band, each with its own colour."""
    yy, xx = np.mgrid[0:rows, 0:cols].astype(np.float64)
    img = np.empty((rows, cols, channels))
    base = rng.uniform(20, 200, size=(2, channels))
    ramp = (xx / max(cols - 1, 1))[:, :, None]
    img[:] = base[0] + (base[1] - base[0]) * ramp

    for _ in range(int(rng.integers(3, 7))):
        colour = rng.uniform(0, 230, size=channels)
        if rng.random() < 0.5:
            r0, c0 = rng.integers(0, rows), rng.integers(0, cols)
            h, w = rng.integers(rows // 8 + 1, rows // 2 + 2), rng.integers(cols // 8 + 1, cols // 2 + 2)
            img[r0:r0 + h, c0:c0 + w] = colour
        else:
            cy, cx = rng.uniform(0, rows), rng.uniform(0, cols)
            rad = rng.uniform(min(rows, cols) / 10, min(rows, cols) / 3)
            img[(yy - cy) ** 2 + (xx - cx) ** 2 <= rad * rad] = colour

    period = int(rng.integers(4, 12))
    band = (slice(int(rows * 0.6), int(rows * 0.75)), slice(None))
    stripes = ((xx[band] // period) % 2 == 0)
    img[band][stripes] = rng.uniform(0, 60, size=channels)
    img = np.clip(img, 0.0, 255.0)
    return img[:, :, 0] if channels == 1 else img
