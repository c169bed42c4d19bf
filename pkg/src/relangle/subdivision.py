"""Split a reconstruction into fixed-size subsets around farthest-point references."""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import spatial_index
from ._types import as_points

DEFAULT_N_INPUT = 4096
DEFAULT_GRAPH_K = 8


def subset_count(n_all, n_input):
    """``ceil(n_all / n_input)``."""
    n_all, n_input = int(n_all), int(n_input)
    if n_all <= 0 or n_input <= 0:
        raise ValueError("point counts must be positive")
    return -(-n_all // n_input)


def farthest_point_sample(points, m):
    """Greedy farthest point sampling.

    The first pick is the point farthest from the centroid; each later pick
    maximises its minimum distance to those already chosen. Ties go to the
    lowest index, so the result is deterministic and prefix-stable in ``m``.
    """
    pts = as_points(points)
    m = int(m)
    if m < 1 or m > pts.shape[0]:
        raise ValueError(f"m must be in [1, {pts.shape[0]}], got {m}")
    centroid = pts.mean(axis=0)
    return _kernels.farthest_point_sample(pts, m, centroid)


@dataclass
class SubsetPlan:
    n_input: int
    num_s: int
    references: np.ndarray
    subsets: list = field(default_factory=list)
    connectivity: bool = False


def _connected_gather(ref, n_input, graph_nbrs, order_fallback):
    # breadth-first over the mutual-kNN graph starting at ref
    n = graph_nbrs.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[ref] = True
    out = [ref]
    queue = deque([ref])
    while queue and len(out) < n_input:
        i = queue.popleft()
        for j in graph_nbrs[i]:
            if j < 0 or seen[j]:
                continue
            seen[j] = True
            out.append(int(j))
            queue.append(int(j))
            if len(out) == n_input:
                break
    if len(out) < n_input:
        for j in order_fallback:
            if not seen[j]:
                seen[j] = True
                out.append(int(j))
                if len(out) == n_input:
                    break
    return np.asarray(out, dtype=np.int64)


def mutual_knn_graph(tree, k=DEFAULT_GRAPH_K):
    """Adjacency lists of the mutual k-NN graph; ``-1`` pads absent edges.

    ``j`` is adjacent to ``i`` when each is among the other's ``k`` nearest
    neighbours (self excluded). Rows keep the distance order of the kNN query.
    """
    kk = min(int(k) + 1, tree.n)
    nbr = spatial_index.knn_batch(tree, tree.points, kk)[:, 1:]
    back = (nbr[nbr] == np.arange(tree.n)[:, None, None]).any(axis=2)
    return np.where(back, nbr, -1)


def extract_subsets(points, n_input=DEFAULT_N_INPUT, tree=None, connectivity=False, graph_k=DEFAULT_GRAPH_K):
    """Plan subsets of exactly ``n_input`` points.

    References are chosen by :func:`farthest_point_sample`. By default a
    subset is the reference plus its ``n_input - 1`` nearest neighbours. With
    ``connectivity=True`` the subset is grown breadth-first over the mutual
    ``graph_k``-NN graph from the reference, topped up from the plain kNN
    ordering when the connected component is too small.
    """
    pts = as_points(points)
    n_input = int(n_input)
    if n_input < 1:
        raise ValueError("n_input must be positive")
    if pts.shape[0] < n_input:
        raise ValueError(f"cloud has {pts.shape[0]} points, fewer than n_input={n_input}")
    if tree is None:
        tree = spatial_index.build(pts)
    num_s = subset_count(pts.shape[0], n_input)
    refs = farthest_point_sample(pts, num_s)
    knn_sets = spatial_index.knn_batch(tree, pts[refs], n_input)
    if not connectivity:
        subsets = [row.copy() for row in knn_sets]
    else:
        graph = mutual_knn_graph(tree, graph_k)
        subsets = [_connected_gather(int(r), n_input, graph, row) for r, row in zip(refs, knn_sets)]
    return SubsetPlan(n_input=n_input, num_s=num_s, references=refs, subsets=subsets, connectivity=connectivity)
