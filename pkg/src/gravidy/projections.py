"""Euclidean projections onto the three vector constraint sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def project_orthant(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def project_box(z: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(z, lo, hi)


def project_simplex(z: np.ndarray) -> np.ndarray:
    """Projection onto the unit simplex by the sorted threshold method.

    Sort z descending, find the largest k with u_k > (cumsum_k - 1)/k, and
    shift-clip by that threshold.  O(n log n).
    """
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, z.size + 1)
    mask = u > css / ks
    k = int(np.nonzero(mask)[0][-1])
    tau = css[k] / (k + 1)
    return np.maximum(z - tau, 0.0)


@dataclass(frozen=True)
class Projection:
    """Projection operator onto one of the supported sets."""

    target: str  # orthant | simplex | box
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if self.target not in ("orthant", "simplex", "box"):
            raise ValueError(f"unknown projection target {self.target!r}")
        if self.target == "box" and not self.lo < self.hi:
            raise ValueError("box projection needs lo < hi")

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self.target == "orthant":
            return project_orthant(z)
        if self.target == "box":
            return project_box(z, self.lo, self.hi)
        return project_simplex(z)
