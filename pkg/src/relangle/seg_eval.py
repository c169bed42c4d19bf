"""Binary segmentation scoring (accuracy, per-class IoU, mIoU) and a threshold baseline."""

import math
from dataclasses import dataclass

import numpy as np

from . import spatial_index
from ._types import DAMAGED, UNDAMAGED, as_labels


@dataclass(frozen=True)
class ConfusionCounts:
    """Point tallies with ``damaged`` as the positive class."""

    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    @classmethod
    def from_labels(cls, predicted, truth):
        pred = as_labels(predicted)
        gt = as_labels(truth)
        if pred.shape != gt.shape:
            raise ValueError(f"prediction length {pred.shape[0]} != ground truth length {gt.shape[0]}")
        if pred.size == 0:
            raise ValueError("cannot score empty label sets")
        pos_p = pred == DAMAGED
        pos_t = gt == DAMAGED
        return cls(
            tp=int(np.sum(pos_p & pos_t)),
            tn=int(np.sum(~pos_p & ~pos_t)),
            fp=int(np.sum(pos_p & ~pos_t)),
            fn=int(np.sum(~pos_p & pos_t)),
        )

    def scores(self):
        if self.total == 0:
            raise ValueError("no scored points")
        return SegScores(
            accuracy=(self.tp + self.tn) / self.total,
            iou_damaged=_iou(self.tp, self.tp + self.fp + self.fn),
            iou_undamaged=_iou(self.tn, self.tn + self.fn + self.fp),
        )


def _iou(intersection, union):
    # class absent from both prediction and truth counts as perfectly predicted
    return 1.0 if union == 0 else intersection / union


@dataclass(frozen=True)
class SegScores:
    accuracy: float
    iou_damaged: float
    iou_undamaged: float

    @property
    def miou(self):
        return 0.5 * (self.iou_damaged + self.iou_undamaged)

    def as_dict(self):
        return {
            "accuracy": self.accuracy,
            "iou_damaged": self.iou_damaged,
            "iou_undamaged": self.iou_undamaged,
            "miou": self.miou,
        }


def score(predicted, truth):
    """Return ``(ConfusionCounts, SegScores)`` for two label arrays."""
    counts = ConfusionCounts.from_labels(predicted, truth)
    return counts, counts.scores()


def majority_smooth(labels, tree, k, neighbors=None):
    """Replace each label by the majority label among its ``k`` nearest points.

    The neighbourhood includes the point itself; an exact tie keeps the
    current label. Pass precomputed ``neighbors`` (N x k) to skip the query.
    """
    if neighbors is None:
        lab = as_labels(labels, tree.n)
        neighbors = spatial_index.knn_batch(tree, tree.points, k)
    else:
        lab = as_labels(labels, neighbors.shape[0])
    damaged_votes = lab[neighbors].sum(axis=1, dtype=np.int64)
    undamaged_votes = neighbors.shape[1] - damaged_votes
    out = lab.copy()
    out[damaged_votes > undamaged_votes] = DAMAGED
    out[undamaged_votes > damaged_votes] = UNDAMAGED
    return out


def threshold_segment(angles, tau, tree=None, smooth_k=None, neighbors=None):
    """Label points with relative angle above ``tau`` as damaged.

    Optionally follow with one :func:`majority_smooth` pass over ``tree``.
    """
    ang = np.asarray(getattr(angles, "angles", angles), dtype=np.float64)
    tau = float(tau)
    if not 0.0 <= tau <= math.pi / 2:
        raise ValueError(f"threshold {tau} outside [0, pi/2]")
    labels = (ang > tau).astype(np.int8)
    if smooth_k:
        if tree is None and neighbors is None:
            raise ValueError("smoothing needs a KD-tree over the cloud")
        labels = majority_smooth(labels, tree, smooth_k, neighbors)
    return labels


def sweep_threshold(angles, truth, taus=None, tree=None, smooth_k=None):
    """Pick the threshold with the best mIoU against ``truth``.

    Returns ``(best_tau, best_scores)``; ties keep the smallest threshold.
    """
    if taus is None:
        taus = np.linspace(0.0, math.pi / 2, 91)
    neighbors = None
    if smooth_k:
        if tree is None:
            raise ValueError("smoothing needs a KD-tree over the cloud")
        neighbors = spatial_index.knn_batch(tree, tree.points, smooth_k)
    best = None
    for tau in taus:
        _, sc = score(threshold_segment(angles, tau, tree, smooth_k, neighbors), truth)
        if best is None or sc.miou > best[1].miou:
            best = (float(tau), sc)
    return best
