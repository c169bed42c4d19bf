"""Global and axis-specific normalisation into [-0.5, 0.5], plus seeded rotations.

Both schemes first shift each axis by its minimum and divide by a scale
factor; the result is then re-centred on the midpoint of its bounding box so
that the cloud is symmetric about the origin. No plane alignment is done.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._types import as_points

DEGENERATE_TOL = 1e-12


class NormKind(str, Enum):
    GLOBAL = "global"
    AXIS = "axis"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower().replace("_", "-")
        if v in ("axis", "axis-specific"):
            return cls.AXIS
        if v == "global":
            return cls.GLOBAL
        raise ValueError(f"unknown normalization kind {value!r} (expected 'global' or 'axis')")


@dataclass(frozen=True)
class NormalizationParams:
    """Everything needed to reproduce (or invert) a normalisation.

    ``scale`` holds the per-axis divisor (three copies of the global factor for
    :attr:`NormKind.GLOBAL`); ``offset`` is the bounding-box midpoint removed
    after scaling.
    """

    kind: NormKind
    scale: np.ndarray
    mins: np.ndarray
    maxs: np.ndarray
    offset: np.ndarray

    @property
    def k_global(self):
        if self.kind is not NormKind.GLOBAL:
            raise AttributeError("k_global is only defined for global normalization")
        return float(self.scale[0])

    def apply(self, points):
        return (np.asarray(points, dtype=np.float64) - self.mins) / self.scale - self.offset

    def invert(self, points):
        return (np.asarray(points, dtype=np.float64) + self.offset) * self.scale + self.mins


def _degenerate(ranges):
    return (ranges < DEGENERATE_TOL) | (ranges < DEGENERATE_TOL * ranges.max())


def normalize(points, kind="global"):
    """Normalise ``points`` and return ``(normalised, params)``.

    For ``global`` every axis is divided by the largest axis range, which
    keeps proportions; for ``axis`` each axis is divided by its own range. A
    degenerate axis (range below ``1e-12`` absolutely or relative to the
    largest range) gets a divisor of 1 and collapses onto 0.

    Raises:
        ValueError: fewer than two points, or every axis range is degenerate.
    """
    kind = NormKind.parse(kind)
    pts = as_points(points, min_count=2)
    mins = pts.min(axis=0)
    maxs = pts.max(axis=0)
    ranges = maxs - mins
    degenerate = _degenerate(ranges)
    if degenerate.all():
        raise ValueError("all three axis ranges are degenerate; cannot normalize")

    if kind is NormKind.GLOBAL:
        scale = np.full(3, ranges.max())
    else:
        scale = np.where(degenerate, 1.0, ranges)
    shifted = (pts - mins) / scale
    offset = 0.5 * (shifted.min(axis=0) + shifted.max(axis=0))
    out = shifted - offset
    params = NormalizationParams(kind, scale, mins, maxs, offset)
    return out, params


@dataclass(frozen=True)
class Rotation:
    """A proper rotation given by z-y-z Euler angles (radians) and its matrix."""

    angles: tuple
    matrix: np.ndarray

    def apply(self, points):
        return np.asarray(points, dtype=np.float64) @ self.matrix.T


def rotation_from_angles(alpha, beta, gamma):
    """Rotation ``Rz(alpha) @ Ry(beta) @ Rz(gamma)``; ``(0, 0, 0)`` is the identity."""

    def rz(a):
        c, s = np.cos(a), np.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def ry(a):
        c, s = np.cos(a), np.sin(a)
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])

    m = rz(alpha) @ ry(beta) @ rz(gamma)
    return Rotation((float(alpha), float(beta), float(gamma)), m)


def random_rotation(seed):
    """Haar-uniform rotation drawn deterministically from ``seed``.

    Uniform ``alpha, gamma`` on [0, 2pi) and ``beta = arccos(1 - 2u)`` give the
    uniform measure on SO(3) for z-y-z Euler angles.
    """
    rng = np.random.default_rng(seed)
    alpha, u, gamma = rng.random(3)
    return rotation_from_angles(2.0 * np.pi * alpha, np.arccos(1.0 - 2.0 * u), 2.0 * np.pi * gamma)


def rotate(points, seed):
    """Rotate ``points`` about the origin by :func:`random_rotation` ``(seed)``."""
    pts = as_points(points)
    rot = random_rotation(seed)
    return rot.apply(pts), rot
