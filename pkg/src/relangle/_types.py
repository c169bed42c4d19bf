"""Shared containers and input validation."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

UNDAMAGED = 0
DAMAGED = 1


def as_points(points, min_count=1):
    """Validate and return an (N, 3) C-contiguous float64 copy."""
    pts = np.array(points, dtype=np.float64, copy=True, order="C")
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) array of points, got shape {pts.shape}")
    if pts.shape[0] < min_count:
        raise ValueError(f"need at least {min_count} point(s), got {pts.shape[0]}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


def as_labels(labels, n=None):
    lab = np.asarray(labels)
    if lab.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if lab.size and not np.all((lab == 0) | (lab == 1)):
        raise ValueError("labels must be 0 (undamaged) or 1 (damaged)")
    lab = lab.astype(np.int8)
    if n is not None and lab.shape[0] != n:
        raise ValueError(f"label count {lab.shape[0]} does not match point count {n}")
    return lab


@dataclass
class NormalField:
    """Unit normals, index-aligned with a cloud."""

    normals: np.ndarray
    k: Optional[int] = None

    def __len__(self):
        return self.normals.shape[0]


@dataclass
class RelativeAngleField:
    """Per-point angles in radians against the average normal ``n_avg``."""

    angles: np.ndarray
    n_avg: np.ndarray

    def __len__(self):
        return self.angles.shape[0]


@dataclass
class CloudData:
    """A point cloud plus whichever per-point fields accompany it."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None
    angles: Optional[np.ndarray] = None

    @property
    def n(self):
        return self.points.shape[0]

    def subset(self, idx):
        take = (lambda a: None if a is None else a[idx])
        return CloudData(self.points[idx], take(self.labels), take(self.normals), take(self.angles))
