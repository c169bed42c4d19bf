"""Binned (Shannon, base-2) entropy of point features per damage section."""

import csv
import json
import math
from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from ._types import DAMAGED, UNDAMAGED

DEFAULT_BINS = 10
DEFAULT_MIN_COUNT = 50
DOMAIN_TOL = 1e-9

FEATURES = ("position", "normal", "angle")
SECTIONS = ("overall", "undamaged", "damaged")
DOMAINS = {
    "position": (-0.5, 0.5),
    "normal": (-1.0, 1.0),
    "angle": (0.0, math.pi / 2),
}


def histogram(values, bins=DEFAULT_BINS, domain=(0.0, 1.0)):
    """Counts of ``values`` in ``bins`` equal-width bins over ``domain``.

    The upper edge belongs to the last bin. Values up to ``1e-9`` outside the
    domain are clamped onto it; anything further out is an error.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ValueError("domain must satisfy lo < hi")
    bins = int(bins)
    if bins < 1:
        raise ValueError("bins must be positive")
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot bin an empty sequence")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if v.min() < lo - DOMAIN_TOL or v.max() > hi + DOMAIN_TOL:
        raise ValueError(f"values fall outside the domain [{lo}, {hi}]")
    v = np.clip(v, lo, hi)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    return np.bincount(idx, minlength=bins)


def entropy_from_counts(counts):
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("histogram is empty")
    p = counts[counts > 0] / total
    h = float(-(p * np.log2(p)).sum())
    return h if h > 0.0 else 0.0


def entropy(values, bins=DEFAULT_BINS, domain=(0.0, 1.0)):
    """Entropy in bits of the ``bins``-bin histogram of ``values``."""
    return entropy_from_counts(histogram(values, bins, domain))


@dataclass(frozen=True)
class EntropyRow:
    normalization: str
    feature: str
    section: str
    components: tuple
    mean: float
    n_subsets: int = 1

    @property
    def key(self):
        return (self.normalization, self.feature, self.section)


def evaluate_subset(points, labels, normals, angles, normalization, bins=DEFAULT_BINS, min_count=DEFAULT_MIN_COUNT):
    """Entropy rows for one subset.

    ``points`` must already be normalised. Each section (all points, the
    undamaged ones, the damaged ones) yields rows only if it holds at least
    ``min_count`` points. Three-component features report one entropy per
    component and their mean.
    """
    pts = np.asarray(points, dtype=np.float64)
    nrm = np.asarray(normals, dtype=np.float64)
    ang = np.asarray(angles, dtype=np.float64)
    lab = np.asarray(labels)
    n = pts.shape[0]
    if not (lab.shape[0] == nrm.shape[0] == ang.shape[0] == n):
        raise ValueError("points, labels, normals and angles must be index-aligned")
    norm_name = getattr(normalization, "value", str(normalization))
    masks = {
        "overall": np.ones(n, dtype=bool),
        "undamaged": lab == UNDAMAGED,
        "damaged": lab == DAMAGED,
    }
    data = {"position": pts, "normal": nrm, "angle": ang[:, None]}
    rows = []
    for feature in FEATURES:
        domain = DOMAINS[feature]
        for section in SECTIONS:
            mask = masks[section]
            if mask.sum() < max(int(min_count), 1):
                continue
            vals = data[feature][mask]
            comps = tuple(entropy(vals[:, c], bins, domain) for c in range(vals.shape[1]))
            rows.append(EntropyRow(norm_name, feature, section, comps, float(np.mean(comps))))
    return rows


@dataclass
class EntropyReport:
    rows: list

    def get(self, normalization, feature, section):
        norm_name = getattr(normalization, "value", str(normalization))
        for row in self.rows:
            if row.key == (norm_name, feature, section):
                return row
        raise KeyError((norm_name, feature, section))

    def to_records(self):
        out = []
        for r in self.rows:
            rec = asdict(r)
            rec["components"] = list(r.components)
            out.append(rec)
        return out

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump({"rows": self.to_records()}, fh, indent=2)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["normalization", "feature", "section", "h1", "h2", "h3", "mean", "n_subsets"])
            for r in self.rows:
                comps = [f"{c:.6f}" for c in r.components] + [""] * (3 - len(r.components))
                w.writerow([r.normalization, r.feature, r.section, *comps, f"{r.mean:.6f}", r.n_subsets])

    def format_table(self):
        lines = [f"{'normalization':<14}{'feature':<10}{'overall':>24}{'undamaged':>24}{'damaged':>24}"]
        keys = OrderedDict()
        for r in self.rows:
            keys.setdefault((r.normalization, r.feature), {})[r.section] = r
        for (norm, feat), cells in keys.items():
            out = []
            for section in SECTIONS:
                r = cells.get(section)
                if r is None:
                    out.append("-")
                elif len(r.components) == 1:
                    out.append(f"{r.mean:.2f}")
                else:
                    out.append(", ".join(f"{c:.2f}" for c in r.components) + f" ({r.mean:.2f})")
            lines.append(f"{norm:<14}{feat:<10}" + "".join(f"{c:>24}" for c in out))
        return "\n".join(lines)


def aggregate(rows):
    """Mean of per-subset rows, key by key (normalisation, feature, section)."""
    rows = list(rows)
    if not rows:
        raise ValueError("no entropy rows to aggregate")
    groups = OrderedDict()
    for r in rows:
        groups.setdefault(r.key, []).append(r)
    out = []
    for (norm, feat, section), group in groups.items():
        comps = np.mean([g.components for g in group], axis=0)
        means = float(np.mean([g.mean for g in group]))
        out.append(EntropyRow(norm, feat, section, tuple(float(c) for c in comps), means, len(group)))
    out.sort(key=lambda r: (r.normalization != "global", r.normalization, FEATURES.index(r.feature), SECTIONS.index(r.section)))
    return EntropyReport(out)
