"""Glue that runs normalisation, features and entropy evaluation over subsets."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import entropy_eval, features, normalization, spatial_index, subdivision

logger = logging.getLogger(__name__)

THREADS_ENV = "RELANGLE_THREADS"


def default_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return 1


def parallel_map(fn, items, threads=None):
    """Ordered map; kernels release the GIL so threads overlap the numeric work."""
    threads = default_threads() if threads is None else max(1, int(threads))
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class SubsetFeatures:
    points: np.ndarray
    params: normalization.NormalizationParams
    normals: np.ndarray
    angles: np.ndarray
    n_avg: np.ndarray


def subset_features(points, kind="global", k=features.DEFAULT_K):
    """Normalise one subset, then estimate normals and relative angles on it."""
    norm_pts, params = normalization.normalize(points, kind)
    tree = spatial_index.build(norm_pts)
    nf, af = features.compute_features(norm_pts, k=k, tree=tree)
    return SubsetFeatures(norm_pts, params, nf.normals, af.angles, af.n_avg)


def evaluate_subsets(
    points,
    labels,
    subsets,
    kinds=("global", "axis"),
    k=features.DEFAULT_K,
    bins=entropy_eval.DEFAULT_BINS,
    min_count=entropy_eval.DEFAULT_MIN_COUNT,
    threads=None,
):
    """Per-subset entropy rows for every normalisation kind, plus their aggregate."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    jobs = [(normalization.NormKind.parse(kind), idx) for kind in kinds for idx in subsets]

    def run(job):
        kind, idx = job
        sf = subset_features(points[idx], kind, k)
        return entropy_eval.evaluate_subset(sf.points, labels[idx], sf.normals, sf.angles, kind, bins, min_count)

    per_subset = parallel_map(run, jobs, threads)
    rows = [r for rs in per_subset for r in rs]
    return entropy_eval.aggregate(rows), per_subset


def entropy_for_cloud(points, labels, n_input=subdivision.DEFAULT_N_INPUT, connectivity=False, **kwargs):
    plan = subdivision.extract_subsets(points, n_input, connectivity=connectivity)
    report, _ = evaluate_subsets(points, labels, plan.subsets, **kwargs)
    return report, plan
