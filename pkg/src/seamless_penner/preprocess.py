"""Metric interpolation toward the equilateral metric (``lam = 0``)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InterpolationFailed
from .mesh import Mesh
from .metric import EPS_DELAUNAY, corner_angles, make_delaunay


@dataclass
class PreprocessOptions:
    alpha_min: float = 0.0  # radians; 0 disables interpolation
    beta: float = 0.9
    enabled: bool = True
    max_steps: int = 500

    def __post_init__(self):
        if not 0 <= self.alpha_min <= np.pi / 3 + 1e-15:
            raise ValueError("alpha_min must lie in [0, pi/3]")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")


class Interpolation(NamedTuple):
    lam: np.ndarray
    steps: int
    min_angle: float


def delaunay_min_angle(mesh: Mesh, lam, eps: float = EPS_DELAUNAY) -> float:
    tr = make_delaunay(mesh, lam, eps)
    return float(corner_angles(tr.mesh, tr.lam).min())


def interpolate_metric(mesh: Mesh, lam0, options: PreprocessOptions | None = None) -> Interpolation:
    """Smallest n with min angle of Del(M, beta^n lam0) >= alpha_min, recentred
    so the mean coordinate equals that of ``lam0``."""
    options = options or PreprocessOptions()
    lam0 = np.asarray(lam0, dtype=float)
    if not options.enabled or options.alpha_min <= 0:
        return Interpolation(lam0.copy(), 0, delaunay_min_angle(mesh, lam0))
    for n in range(options.max_steps + 1):
        lam = options.beta ** n * lam0
        amin = delaunay_min_angle(mesh, lam)
        if amin >= options.alpha_min:
            lam = lam + (lam0.mean() - lam.mean())
            return Interpolation(lam, n, amin)
    raise InterpolationFailed(
        f"min angle still below {options.alpha_min:g} after {options.max_steps} steps")
