"""Exact k-nearest-neighbour search over 3D points with a median-split KD-tree."""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._types import as_points

DEFAULT_LEAF_SIZE = 16


@dataclass(frozen=True)
class KdTree:
    """Immutable KD-tree.

    Nodes are stored in flat arrays. ``axis[i] == -1`` marks a leaf whose
    points are ``perm[start[i]:end[i]]``. Internal nodes split on ``axis``
    (cycling x, y, z with depth) at ``split``: the left child holds
    coordinates ``<= split`` and the right child ``>= split``.
    """

    points: np.ndarray
    perm: np.ndarray
    start: np.ndarray
    end: np.ndarray
    axis: np.ndarray
    split: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_size: int

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def n_nodes(self):
        return self.start.shape[0]

    def depth(self):
        """Length of the longest root-to-leaf path (a single leaf has depth 0)."""
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.axis[node] < 0:
                best = max(best, d)
            else:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def leaves(self):
        return [self.perm[self.start[i]:self.end[i]] for i in range(self.n_nodes) if self.axis[i] < 0]

    def _arrays(self):
        return (self.points, self.perm, self.start, self.end, self.axis, self.split, self.left, self.right)


def build(points, leaf_size=DEFAULT_LEAF_SIZE):
    """Build a KD-tree over ``points`` (N x 3).

    Splits at the median of the current axis; equal coordinates are ordered
    by original index, so the tree is a deterministic function of the input.
    """
    pts = as_points(points)
    if leaf_size < 1:
        raise ValueError("leaf_size must be >= 1")
    arrays = _kernels.kdtree_build(pts, int(leaf_size))
    for a in (pts, *arrays):
        a.setflags(write=False)
    return KdTree(pts, *arrays, leaf_size=int(leaf_size))


def knn_batch(tree, queries, k, return_distance=False):
    """k nearest indices for every row of ``queries``.

    Rows are ordered by ascending Euclidean distance; equal distances are
    ordered by lower index.
    """
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > tree.n:
        raise ValueError(f"k={k} exceeds the number of indexed points ({tree.n})")
    q = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 3))
    idx, d2 = _kernels.kdtree_knn(*tree._arrays(), q, k)
    if return_distance:
        return idx, np.sqrt(d2)
    return idx


def knn(tree, query, k):
    """Indices of the ``k`` nearest points to a single ``query``."""
    return knn_batch(tree, np.asarray(query, dtype=np.float64).reshape(1, 3), k)[0]
