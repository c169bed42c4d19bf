"""Per-point normals from local covariance, and the relative-angle feature.

The relative angle of a point is the angle between its normal and the
(renormalised) mean normal of the cloud it belongs to, folded into
``[0, pi/2]`` so that it does not depend on the sign of either vector.
"""

import logging

import numpy as np

from . import _kernels
from . import spatial_index
from ._types import NormalField, RelativeAngleField, as_points

logger = logging.getLogger(__name__)

DEFAULT_K = 30
MIN_MEAN_NORM = 1e-9
_ORIENT_TOL = 1e-12


def eigh_sym3(mats):
    """Ascending eigenvalues and column eigenvectors of symmetric 3x3 matrices.

    Accepts a single ``(3, 3)`` matrix or a stack ``(M, 3, 3)``.
    """
    mats = np.asarray(mats, dtype=np.float64)
    single = mats.ndim == 2
    stack = np.ascontiguousarray(mats.reshape(-1, 3, 3))
    evals, evecs = _kernels.sym3_eigh(stack)
    if single:
        return evals[0], evecs[0]
    return evals, evecs


def local_covariances(points, neighbors):
    """Centroids and ``1/k`` covariance matrices of each neighbourhood.

    ``neighbors`` is an ``(N, k)`` index array; row ``i`` lists the point
    itself and its ``k - 1`` nearest neighbours.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    nbr = np.ascontiguousarray(neighbors, dtype=np.int64)
    return _kernels.neighborhood_covariances(pts, nbr)


def reference_direction(points):
    """Dominant plane normal of the whole cloud, signed toward +z.

    Falls back to +y, then +x when the normal has no z component.
    """
    pts = as_points(points)
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / pts.shape[0]
    _, vecs = eigh_sym3(cov)
    r = vecs[:, 0]
    for axis in (2, 1, 0):
        if abs(r[axis]) > _ORIENT_TOL:
            return r if r[axis] > 0 else -r
    return r  # pragma: no cover - unit vector always has a nonzero component


def orient(normals, reference):
    """Flip normals so each has a non-negative dot product with ``reference``."""
    normals = np.asarray(normals, dtype=np.float64)
    flip = normals @ np.asarray(reference, dtype=np.float64) < 0.0
    out = normals.copy()
    out[flip] *= -1.0
    return out


def estimate_normals(points, tree=None, k=DEFAULT_K, reference=None):
    """Estimate a unit normal for every point.

    Each point's neighbourhood is the point itself plus its ``k - 1`` nearest
    neighbours; the normal is the eigenvector of the smallest covariance
    eigenvalue. Normals are then oriented toward ``reference`` (by default
    :func:`reference_direction` of the cloud).

    Args:
        points: ``(N, 3)`` coordinates.
        tree: KD-tree over ``points``; built here when omitted.
        k: neighbourhood size including the point itself.
        reference: orientation direction, or ``None`` for the default.

    Returns:
        NormalField
    """
    pts = as_points(points)
    k = int(k)
    if k < 3:
        raise ValueError("k must be at least 3 for a defined normal")
    if k > pts.shape[0]:
        raise ValueError(f"k={k} exceeds the number of points ({pts.shape[0]})")
    if tree is None:
        tree = spatial_index.build(pts)
    elif tree.n != pts.shape[0]:
        raise ValueError("tree was built over a different cloud")

    nbr = spatial_index.knn_batch(tree, pts, k)
    _, covs = local_covariances(pts, nbr)
    _, vecs = eigh_sym3(covs)
    normals = vecs[:, :, 0]
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    if reference is None:
        reference = reference_direction(pts)
    return NormalField(orient(normals, reference), k=k)


def _as_normal_array(normals):
    if isinstance(normals, NormalField):
        normals = normals.normals
    arr = np.asarray(normals, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] == 0:
        raise ValueError("expected a non-empty (N, 3) array of normals")
    return arr


def average_normal(normals):
    """Arithmetic mean of the normals, rescaled to unit length.

    Raises:
        ValueError: the mean is (near) zero, i.e. the normals cancel out.
    """
    arr = _as_normal_array(normals)
    mean = arr.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm <= MIN_MEAN_NORM:
        raise ValueError("average normal is undefined: normals cancel out")
    return mean / norm


def relative_angles(normals, n_avg=None):
    """``arccos(|n_i . n_avg|)`` for every normal, in radians within [0, pi/2]."""
    arr = _as_normal_array(normals)
    if n_avg is None:
        n_avg = average_normal(arr)
    n_avg = np.asarray(n_avg, dtype=np.float64)
    cos = np.clip(np.abs(arr @ n_avg), 0.0, 1.0)
    return RelativeAngleField(np.arccos(cos), n_avg)


def compute_features(points, k=DEFAULT_K, tree=None):
    """Normals and relative angles for one cloud, with the mean taken over that cloud."""
    nf = estimate_normals(points, tree=tree, k=k)
    return nf, relative_angles(nf)
