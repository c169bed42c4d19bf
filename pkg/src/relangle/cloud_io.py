"""Point-cloud text formats, feature-combination files and storage accounting.

``xyz`` files are whitespace-separated text, one point per line, with an
optional self-describing header::

    # cols: x y z nx ny nz angle label

Scalars are written with six decimals; labels are bare ``0``/``1``. ``ply``
support covers the ASCII variant only.
"""

import csv
import json
import os
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from ._types import CloudData, as_labels

FLOAT_FMT = "%.6f"
POSITION_COLS = ("x", "y", "z")
NORMAL_COLS = ("nx", "ny", "nz")
ANGLE_COL = "angle"
LABEL_COL = "label"
KNOWN_COLS = POSITION_COLS + NORMAL_COLS + (ANGLE_COL, LABEL_COL)

# column layouts assumed for headerless files, keyed by column count
_HEADERLESS = {
    3: POSITION_COLS,
    4: POSITION_COLS + (LABEL_COL,),
    5: POSITION_COLS + (ANGLE_COL, LABEL_COL),
    6: POSITION_COLS + NORMAL_COLS,
    7: POSITION_COLS + NORMAL_COLS + (LABEL_COL,),
    8: POSITION_COLS + NORMAL_COLS + (ANGLE_COL, LABEL_COL),
}

LOW_COLOR = (0, 0, 255)
HIGH_COLOR = (255, 0, 0)


class CloudFormatError(ValueError):
    """Malformed point-cloud file; ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class FeatureCombination(IntEnum):
    """The six position/normal/angle combinations compared for storage."""

    POSITION = 1
    POSITION_NORMAL = 2
    POSITION_ANGLE = 3
    POSITION_NORMAL_ANGLE = 4
    MAPPING_ANGLE = 5
    MAPPING_NORMAL = 6

    @property
    def uses_normal(self):
        return self in (2, 4, 6)

    @property
    def uses_angle(self):
        return self in (3, 4, 5)

    @property
    def position_mapping_only(self):
        return self in (5, 6)

    @property
    def uses_position_as_input(self):
        return not self.position_mapping_only

    @property
    def channels(self):
        return 3 * self.uses_position_as_input + 3 * self.uses_normal + 1 * self.uses_angle

    @property
    def columns(self):
        cols = list(POSITION_COLS)
        if self.uses_normal:
            cols += NORMAL_COLS
        if self.uses_angle:
            cols.append(ANGLE_COL)
        cols.append(LABEL_COL)
        return tuple(cols)

    @property
    def description(self):
        return {
            1: "position",
            2: "position + normal",
            3: "position + angle",
            4: "position + normal + angle",
            5: "position (mapping) + angle",
            6: "position (mapping) + normal",
        }[int(self)]


BASE_COMBINATION = FeatureCombination.POSITION_NORMAL


def _header(cols):
    return "# cols: " + " ".join(cols) + "\n"


def format_rows(data, label_col=None):
    """Format a 2-D float array (and optional int label column) as text lines."""
    ncols = data.shape[1]
    fmt = " ".join([FLOAT_FMT] * ncols)
    if label_col is not None:
        fmt += " %d"
        rows = [fmt % (*row, lab) for row, lab in zip(data.tolist(), label_col.tolist())]
    else:
        rows = [fmt % tuple(row) for row in data.tolist()]
    return "\n".join(rows) + ("\n" if rows else "")


def write_cloud(path, points, labels=None, normals=None, angles=None, header=True):
    """Write whichever fields are given, in canonical column order. Returns bytes written."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValueError("expected a non-empty (N, 3) point array")
    n = pts.shape[0]
    cols = list(POSITION_COLS)
    blocks = [pts]
    if normals is not None:
        nrm = np.asarray(getattr(normals, "normals", normals), dtype=np.float64)
        if nrm.shape != (n, 3):
            raise ValueError("normals are not index-aligned with the points")
        cols += NORMAL_COLS
        blocks.append(nrm)
    if angles is not None:
        ang = np.asarray(getattr(angles, "angles", angles), dtype=np.float64).reshape(-1)
        if ang.shape[0] != n:
            raise ValueError("angles are not index-aligned with the points")
        cols.append(ANGLE_COL)
        blocks.append(ang[:, None])
    lab = None
    if labels is not None:
        lab = as_labels(labels, n)
        cols.append(LABEL_COL)
    data = np.hstack(blocks)
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to write non-finite values")
    text = (_header(cols) if header else "") + format_rows(data, lab)
    payload = text.encode("ascii")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(payload)
    return len(payload)


def write_feature_file(points, labels, combo, normals=None, angles=None, path=None):
    """Write the columns demanded by ``combo``; returns the exact byte count.

    Combinations that use position only for mapping store the same columns as
    their position-as-input counterparts, so their files are identical in size.
    """
    combo = FeatureCombination(combo)
    if path is None:
        raise ValueError("an output path is required")
    if labels is None:
        raise ValueError("feature files carry labels; none given")
    if combo.uses_normal and normals is None:
        raise ValueError(f"combination {int(combo)} needs normals")
    if combo.uses_angle and angles is None:
        raise ValueError(f"combination {int(combo)} needs relative angles")
    return write_cloud(
        path,
        points,
        labels=labels,
        normals=normals if combo.uses_normal else None,
        angles=angles if combo.uses_angle else None,
    )


def _parse_header_cols(line, lineno, path):
    cols = tuple(line.split(":", 1)[1].split())
    unknown = [c for c in cols if c not in KNOWN_COLS]
    if unknown:
        raise CloudFormatError(f"unknown column(s) {unknown}", lineno, path)
    if cols[:3] != POSITION_COLS or len(set(cols)) != len(cols):
        raise CloudFormatError("header must start with 'x y z' and not repeat columns", lineno, path)
    has_n = [c in cols for c in NORMAL_COLS]
    if any(has_n) and not all(has_n):
        raise CloudFormatError("normal columns must come as nx ny nz", lineno, path)
    return cols


def _assemble(cols, table, linenos, path):
    """Turn a string table (rows x cols) into a CloudData, checking values."""
    index = {c: i for i, c in enumerate(cols)}
    float_cols = [i for i, c in enumerate(cols) if c != LABEL_COL]
    try:
        values = table[:, float_cols].astype(np.float64)
    except ValueError:
        for r in range(table.shape[0]):
            for c in float_cols:
                try:
                    float(table[r, c])
                except ValueError:
                    raise CloudFormatError(f"not a number: {table[r, c]!r}", linenos[r], path) from None
        raise  # pragma: no cover
    bad = ~np.isfinite(values)
    if bad.any():
        r = int(np.argmax(bad.any(axis=1)))
        raise CloudFormatError("non-finite value", linenos[r], path)
    fpos = {c: j for j, c in enumerate(c for c in cols if c != LABEL_COL)}
    points = values[:, [fpos[c] for c in POSITION_COLS]]
    normals = values[:, [fpos[c] for c in NORMAL_COLS]] if "nx" in index else None
    angles = values[:, fpos[ANGLE_COL]] if ANGLE_COL in index else None
    labels = None
    if LABEL_COL in index:
        raw = table[:, index[LABEL_COL]]
        ok = (raw == "0") | (raw == "1")
        if not ok.all():
            r = int(np.argmin(ok))
            raise CloudFormatError(f"label must be 0 or 1, got {raw[r]!r}", linenos[r], path)
        labels = (raw == "1").astype(np.int8)
    return CloudData(np.ascontiguousarray(points), labels, normals, angles)


def _read_xyz(path):
    cols = None
    rows = []
    linenos = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                if cols is None and not rows and s[1:].strip().startswith("cols:"):
                    cols = _parse_header_cols(s[1:].strip(), lineno, path)
                continue
            toks = s.split()
            if cols is None:
                if len(toks) not in _HEADERLESS:
                    raise CloudFormatError(f"cannot infer layout from {len(toks)} columns", lineno, path)
                cols = _HEADERLESS[len(toks)]
            if len(toks) != len(cols):
                raise CloudFormatError(f"expected {len(cols)} columns, found {len(toks)}", lineno, path)
            rows.append(toks)
            linenos.append(lineno)
    if not rows:
        raise CloudFormatError("file contains no points", None, path)
    return _assemble(cols, np.array(rows, dtype=str), linenos, path)


_PLY_NAMES = {"red", "green", "blue", "alpha"}


def _read_ply(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise CloudFormatError("missing 'ply' magic", 1, path)
    n_vertex = None
    props = []
    in_vertex = False
    end = None
    for i, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if not toks:
            continue
        if toks[0] == "format":
            if len(toks) < 2 or toks[1] != "ascii":
                raise CloudFormatError("only ascii PLY is supported", i, path)
        elif toks[0] == "element":
            in_vertex = toks[1] == "vertex"
            if in_vertex:
                if props or n_vertex is not None:
                    raise CloudFormatError("duplicate vertex element", i, path)
                n_vertex = int(toks[2])
            elif n_vertex is None:
                raise CloudFormatError("vertex element must come first", i, path)
        elif toks[0] == "property" and in_vertex:
            if toks[1] == "list":
                raise CloudFormatError("list properties on vertices are not supported", i, path)
            props.append(toks[-1])
        elif toks[0] == "end_header":
            end = i
            break
    if end is None or n_vertex is None:
        raise CloudFormatError("incomplete PLY header", None, path)
    keep = [p for p in props if p in KNOWN_COLS]
    for c in POSITION_COLS:
        if c not in keep:
            raise CloudFormatError(f"PLY vertex lacks property {c!r}", end, path)
    rows, linenos = [], []
    for i, line in enumerate(lines[end:end + n_vertex], start=end + 1):
        toks = line.split()
        if len(toks) != len(props):
            raise CloudFormatError(f"expected {len(props)} values, found {len(toks)}", i, path)
        rows.append([toks[props.index(c)] for c in keep])
        linenos.append(i)
    if len(rows) != n_vertex:
        raise CloudFormatError(f"expected {n_vertex} vertices, found {len(rows)}", None, path)
    if n_vertex == 0:
        raise CloudFormatError("file contains no points", None, path)
    order = [c for c in KNOWN_COLS if c in keep]
    table = np.array(rows, dtype=str)[:, [keep.index(c) for c in order]]
    return _assemble(tuple(order), table, linenos, path)


def read_cloud(path, fmt=None):
    """Read an ``xyz`` text or ASCII ``ply`` file into a :class:`CloudData`.

    ``fmt`` defaults to the file extension (``.ply`` means PLY, anything else
    xyz text).

    Raises:
        CloudFormatError: malformed line (with line number), non-finite
            value, or a label token other than 0/1.
    """
    path = Path(path)
    if fmt is None:
        fmt = "ply" if path.suffix.lower() == ".ply" else "xyz"
    fmt = fmt.lower()
    if fmt in ("xyz", "xyz-text", "txt"):
        return _read_xyz(path)
    if fmt in ("ply", "ply-ascii"):
        return _read_ply(path)
    raise ValueError(f"unknown format {fmt!r}")


def colorize(values, low=LOW_COLOR, high=HIGH_COLOR):
    """Map values linearly from their [min, max] onto a two-colour ramp (uint8 RGB)."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    lo, hi = v.min(), v.max()
    t = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    rgb = low + t[:, None] * (high - low)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def write_colored_cloud(points, values, path, low=LOW_COLOR, high=HIGH_COLOR):
    """Write an ASCII PLY coloured by a per-point scalar field."""
    pts = np.asarray(points, dtype=np.float64)
    vals = np.asarray(getattr(values, "angles", values), dtype=np.float64).reshape(-1)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValueError("cannot export an empty cloud")
    if vals.shape[0] != pts.shape[0]:
        raise ValueError("scalar field is not index-aligned with the points")
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(pts))):
        raise ValueError("scalar field and coordinates must be finite")
    rgb = colorize(vals, low, high)
    header = (
        "ply\nformat ascii 1.0\n"
        f"element vertex {pts.shape[0]}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
    )
    body = "\n".join(
        f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b}" for (x, y, z), (r, g, b) in zip(pts.tolist(), rgb.tolist())
    )
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(header + body + "\n")


@dataclass(frozen=True)
class StorageRow:
    combination: FeatureCombination
    path: str
    bytes: int
    ratio: float
    channels: int
    channel_ratio: float


@dataclass
class StorageReport:
    rows: list

    def row(self, combo):
        combo = FeatureCombination(combo)
        for r in self.rows:
            if r.combination == combo:
                return r
        raise KeyError(combo)

    def to_records(self):
        return [
            {
                "combination": int(r.combination),
                "description": r.combination.description,
                "bytes": r.bytes,
                "ratio_to_base": r.ratio,
                "channels": r.channels,
                "channel_ratio_to_base": r.channel_ratio,
            }
            for r in self.rows
        ]

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump({"base": int(BASE_COMBINATION), "rows": self.to_records()}, fh, indent=2)
            fh.write("\n")

    def write_csv(self, path):
        recs = self.to_records()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(recs[0]))
            w.writeheader()
            for rec in recs:
                w.writerow({**rec, "ratio_to_base": f"{rec['ratio_to_base']:.4f}",
                            "channel_ratio_to_base": f"{rec['channel_ratio_to_base']:.4f}"})

    def format_table(self):
        lines = [f"{'#':<3}{'combination':<30}{'kB':>10}{'% base':>9}{'channels':>10}{'% base':>9}"]
        for r in self.rows:
            lines.append(
                f"{int(r.combination):<3}{r.combination.description:<30}{r.bytes / 1000:>10.1f}"
                f"{100 * r.ratio:>8.1f}%{r.channels:>10}{100 * r.channel_ratio:>8.1f}%"
            )
        return "\n".join(lines)


def storage_report(points, labels, normals, angles, scratch_dir):
    """Write all six combination files into ``scratch_dir`` and compare their sizes.

    Ratios are relative to position + normal, for bytes and for input channels.
    """
    if normals is None or angles is None or labels is None:
        raise ValueError("storage accounting needs labels, normals and angles")
    scratch = Path(scratch_dir)
    scratch.mkdir(parents=True, exist_ok=True)
    sizes = {}
    paths = {}
    for combo in FeatureCombination:
        p = scratch / f"combination_{int(combo)}.xyz"
        sizes[combo] = write_feature_file(points, labels, combo, normals, angles, p)
        if sizes[combo] != os.path.getsize(p):  # pragma: no cover - sanity guard
            raise OSError(f"short write to {p}")
        paths[combo] = str(p)
    base_bytes = sizes[BASE_COMBINATION]
    base_ch = BASE_COMBINATION.channels
    rows = [
        StorageRow(c, paths[c], sizes[c], sizes[c] / base_bytes, c.channels, c.channels / base_ch)
        for c in FeatureCombination
    ]
    return StorageReport(rows)
