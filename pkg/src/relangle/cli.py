"""Command-line front-end: ``relangle <subcommand> [options]``.

Exit status is 0 on success, 1 for bad input (usage errors, malformed files,
violated preconditions) and 2 for unexpected internal errors.
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import (
    cloud_io,
    entropy_eval,
    features,
    normalization,
    pipeline,
    seg_eval,
    spatial_index,
    subdivision,
    synth_surface,
)
from ._types import CloudData

logger = logging.getLogger("relangle")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class InputError(Exception):
    """Raised for problems the user can fix (bad flags, files, preconditions)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cloud_files(path):
    p = Path(path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix in (".xyz", ".txt", ".ply") and f.is_file())
        if not files:
            raise InputError(f"no point-cloud files in {p}")
        return files
    if not p.exists():
        raise InputError(f"no such file: {p}")
    return [p]


def _need_labels(cloud, path):
    if cloud.labels is None:
        raise InputError(f"{path} has no label column")
    return cloud.labels


# -- subcommands -------------------------------------------------------------


def cmd_synth(args):
    spec = synth_surface.default_spec(
        seed=args.seed,
        width=args.width,
        height=args.height,
        density=args.density,
        target_fraction=args.damage_fraction,
        origin=tuple(args.origin),
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    pts, labels = synth_surface.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cloud_io.write_cloud(out / "cloud.xyz", pts, labels=labels)
    _write_json(out / "spec.json", spec.to_dict())
    logger.info("wrote %d points (%.1f%% damaged) to %s", len(pts), 100 * labels.mean(), out)


def cmd_normalize(args):
    cloud = cloud_io.read_cloud(args.input)
    norm_pts, params = normalization.normalize(cloud.points, args.norm)
    out = Path(args.out)
    cloud_io.write_cloud(out, norm_pts, labels=cloud.labels)
    _write_json(
        out.with_name(out.name + ".params.json"),
        {
            "kind": params.kind.value,
            "scale": params.scale.tolist(),
            "mins": params.mins.tolist(),
            "maxs": params.maxs.tolist(),
            "offset": params.offset.tolist(),
        },
    )


def cmd_subdivide(args):
    cloud = cloud_io.read_cloud(args.input)
    if cloud.n < args.n_input:
        raise InputError(f"cloud has {cloud.n} points, fewer than --n-input {args.n_input}")
    plan = subdivision.extract_subsets(
        cloud.points, args.n_input, connectivity=args.connectivity, graph_k=args.graph_k
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, idx in enumerate(plan.subsets):
        sub = cloud.subset(idx)
        cloud_io.write_cloud(out / f"subset_{i:04d}.xyz", sub.points, labels=sub.labels)
    _write_json(
        out / "plan.json",
        {
            "n_all": cloud.n,
            "n_input": plan.n_input,
            "num_s": plan.num_s,
            "connectivity": plan.connectivity,
            "references": plan.references.tolist(),
            "subsets": [s.tolist() for s in plan.subsets],
        },
    )
    logger.info("wrote %d subsets to %s", plan.num_s, out)


def _features_for(cloud, kind, k):
    if cloud.n < k:
        raise InputError(f"cloud has {cloud.n} points, fewer than --k {k}")
    return pipeline.subset_features(cloud.points, kind, k)


def cmd_features(args):
    files = _cloud_files(args.input)
    clouds = [cloud_io.read_cloud(f) for f in files]
    for f, c in zip(files, clouds):
        _need_labels(c, f)
        if c.n < args.k:
            raise InputError(f"{f} has {c.n} points, fewer than --k {args.k}")
    results = pipeline.parallel_map(lambda c: _features_for(c, args.norm, args.k), clouds, args.threads)
    if args.scope == "cloud":
        n_avg = features.average_normal(np.vstack([r.normals for r in results]))
        angles = [features.relative_angles(r.normals, n_avg).angles for r in results]
    else:
        angles = [r.angles for r in results]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for f, c, r, a in zip(files, clouds, results, angles):
        cloud_io.write_cloud(out / (f.stem + ".xyz"), c.points, labels=c.labels, normals=r.normals, angles=a)


def _entropy_inputs(args):
    files = _cloud_files(args.input)
    if len(files) == 1 and not Path(args.input).is_dir():
        cloud = cloud_io.read_cloud(files[0])
        labels = _need_labels(cloud, files[0])
        if cloud.n < args.n_input:
            raise InputError(f"cloud has {cloud.n} points, fewer than --n-input {args.n_input}")
        plan = subdivision.extract_subsets(cloud.points, args.n_input)
        return cloud.points, labels, plan.subsets
    pts, labs, subsets, offset = [], [], [], 0
    for f in files:
        c = cloud_io.read_cloud(f)
        labs.append(_need_labels(c, f))
        pts.append(c.points)
        subsets.append(np.arange(offset, offset + c.n))
        offset += c.n
    return np.vstack(pts), np.concatenate(labs), subsets


def cmd_entropy(args):
    kinds = ("global", "axis") if args.norm == "both" else (args.norm,)
    points, labels, subsets = _entropy_inputs(args)
    if min(len(s) for s in subsets) < args.k:
        raise InputError(f"every subset needs at least --k {args.k} points")
    report, _ = pipeline.evaluate_subsets(
        points, labels, subsets, kinds, k=args.k, bins=args.bins, min_count=args.min_count, threads=args.threads
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "entropy.csv")
    report.write_json(out / "entropy.json")
    (out / "entropy.txt").write_text(report.format_table() + "\n")
    print(report.format_table())


def cmd_storage(args):
    cloud = cloud_io.read_cloud(args.input)
    _need_labels(cloud, args.input)
    normals, angles = cloud.normals, cloud.angles
    if normals is None or angles is None:
        sf = _features_for(cloud, args.norm, args.k)
        normals = sf.normals if normals is None else normals
        angles = sf.angles if angles is None else angles
    out = Path(args.out)
    report = cloud_io.storage_report(cloud.points, cloud.labels, normals, angles, out / "combinations")
    report.write_csv(out / "storage.csv")
    report.write_json(out / "storage.json")
    (out / "storage.txt").write_text(report.format_table() + "\n")
    print(report.format_table())


def cmd_segment(args):
    cloud = cloud_io.read_cloud(args.input)
    angles = cloud.angles
    if angles is None:
        angles = _features_for(cloud, args.norm, args.k).angles
    if args.tau is None and not args.sweep:
        raise InputError("give --tau or --sweep")
    if args.tau is not None and not 0.0 <= args.tau <= math.pi / 2:
        raise InputError("--tau must lie in [0, pi/2]")
    tree = spatial_index.build(cloud.points) if args.smooth_k else None
    if args.smooth_k and args.smooth_k > cloud.n:
        raise InputError("--smooth-k exceeds the number of points")
    if args.sweep:
        truth = _need_labels(cloud, args.input)
        tau, sc = seg_eval.sweep_threshold(angles, truth, tree=tree, smooth_k=args.smooth_k)
        logger.info("swept tau=%.4f rad, mIoU=%.4f", tau, sc.miou)
    else:
        tau = args.tau
    pred = seg_eval.threshold_segment(angles, tau, tree=tree, smooth_k=args.smooth_k)
    out = Path(args.out)
    cloud_io.write_cloud(out, cloud.points, labels=pred)
    _write_json(out.with_name(out.name + ".json"), {"tau": tau, "smooth_k": args.smooth_k, "sweep": args.sweep})


def cmd_score(args):
    pred = cloud_io.read_cloud(args.pred)
    truth = cloud_io.read_cloud(args.truth)
    p = _need_labels(pred, args.pred)
    t = _need_labels(truth, args.truth)
    if p.shape != t.shape:
        raise InputError(f"label counts differ: {p.shape[0]} vs {t.shape[0]}")
    counts, sc = seg_eval.score(p, t)
    rec = {"tp": counts.tp, "tn": counts.tn, "fp": counts.fp, "fn": counts.fn, **sc.as_dict()}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "scores.json", rec)
    with open(out / "scores.csv", "w") as fh:
        fh.write(",".join(rec) + "\n")
        fh.write(",".join(str(v) if isinstance(v, int) else f"{v:.6f}" for v in rec.values()) + "\n")
    text = "\n".join(f"{k:<14}{v}" if isinstance(v, int) else f"{k:<14}{v:.4f}" for k, v in rec.items())
    (out / "scores.txt").write_text(text + "\n")
    print(text)


def cmd_export_colored(args):
    cloud = cloud_io.read_cloud(args.input)
    if args.field == "angle":
        values = cloud.angles
        if values is None:
            values = _features_for(cloud, args.norm, args.k).angles
    elif args.field == "label":
        values = _need_labels(cloud, args.input).astype(np.float64)
    else:
        values = cloud.points[:, 2]
    cloud_io.write_colored_cloud(cloud.points, values, args.out)


# -- parser ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults (flags win)")
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--threads", type=int, default=None, help=f"worker cap (env {pipeline.THREADS_ENV})")
    common.add_argument("-v", "--verbose", action="store_true")

    feat = argparse.ArgumentParser(add_help=False)
    feat.add_argument("--norm", choices=["global", "axis"], default="global")
    feat.add_argument("--k", type=int, default=features.DEFAULT_K, help="neighbourhood size for normals")

    parser = _Parser(prog="relangle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    def add(name, fn, parents, help_):
        p = sub.add_parser(name, parents=parents, help=help_)
        p.set_defaults(func=fn)
        subs[name] = p
        return p

    p = add("synth", cmd_synth, [common], "generate a labelled synthetic surface")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=float, default=314.16)
    p.add_argument("--height", type=float, default=200.0)
    p.add_argument("--density", type=float, default=7.5, help="points per unit area")
    p.add_argument("--damage-fraction", type=float, default=0.28)
    p.add_argument(
        "--origin", type=float, nargs=3, default=synth_surface.SCANNER_ORIGIN, metavar=("X", "Y", "Z"),
        help="translation applied to the generated cloud",
    )

    p = add("normalize", cmd_normalize, [common], "normalise a cloud into [-0.5, 0.5]")
    p.add_argument("--input", required=True)
    p.add_argument("--norm", choices=["global", "axis"], default="global")
    p.add_argument("--out", required=True)

    p = add("subdivide", cmd_subdivide, [common], "split a cloud into fixed-size subsets")
    p.add_argument("--input", required=True)
    p.add_argument("--n-input", type=int, default=subdivision.DEFAULT_N_INPUT)
    p.add_argument("--connectivity", action="store_true", help="grow subsets over the mutual-kNN graph")
    p.add_argument("--graph-k", type=int, default=subdivision.DEFAULT_GRAPH_K)
    p.add_argument("--out", required=True)

    p = add("features", cmd_features, [common, feat], "normals and relative angles per file")
    p.add_argument("--input", required=True, help="file or directory of subset files")
    p.add_argument("--scope", choices=["subset", "cloud"], default="subset", help="where the mean normal is taken")
    p.add_argument("--out", required=True)

    p = add("entropy", cmd_entropy, [common], "binned entropy report per feature and section")
    p.add_argument("--input", required=True, help="full cloud (subdivided here) or directory of subsets")
    p.add_argument("--norm", choices=["global", "axis", "both"], default="both")
    p.add_argument("--k", type=int, default=features.DEFAULT_K)
    p.add_argument("--bins", type=int, default=entropy_eval.DEFAULT_BINS)
    p.add_argument("--min-count", type=int, default=entropy_eval.DEFAULT_MIN_COUNT)
    p.add_argument("--n-input", type=int, default=subdivision.DEFAULT_N_INPUT)
    p.add_argument("--out", required=True)

    p = add("storage", cmd_storage, [common, feat], "storage and channel accounting of the six combinations")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = add("segment", cmd_segment, [common, feat], "threshold-on-angle baseline segmentation")
    p.add_argument("--input", required=True)
    p.add_argument("--tau", type=float, default=None, help="threshold in radians")
    p.add_argument("--sweep", action="store_true", help="choose tau by best mIoU against the input labels")
    p.add_argument("--smooth-k", type=int, default=None)
    p.add_argument("--out", required=True)

    p = add("score", cmd_score, [common], "accuracy, per-class IoU and mIoU")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)

    p = add("export-colored", cmd_export_colored, [common, feat], "PLY coloured by a per-point field")
    p.add_argument("--input", required=True)
    p.add_argument("--field", choices=["angle", "label", "z"], default="angle")
    p.add_argument("--out", required=True)

    return parser, subs


def _apply_config(parser, subs, argv):
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a subcommand is required")
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config file must hold a JSON object")
        known = {a.dest for a in subs[args.command]._actions}
        unknown = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        subs[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def _check_numbers(args):
    for name in ("k", "n_input", "bins", "min_count", "graph_k", "smooth_k", "threads"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise InputError(f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "k", None) is not None and args.k < 3:
        raise InputError("--k must be at least 3")


def main(argv=None):
    parser, subs = build_parser()
    try:
        args = _apply_config(parser, subs, argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        _check_numbers(args)
        args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"relangle: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    except Exception:  # noqa: BLE001 - top-level guard maps to exit 2
        logger.exception("internal error")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
