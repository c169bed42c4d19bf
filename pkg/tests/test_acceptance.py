"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (printed in the terminal summary)
with the measured quantity next to its pinned tolerance, then asserts.
"""

import math
import time

import numpy as np
import pytest

from conftest import grid_plane, sphere_patch
from oracles import brute_knn, charpoly_eigenvalues, greedy_fps
from relangle import (
    cli,
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
from relangle.cloud_io import FeatureCombination

RESULTS = []


def record(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def synth_subset():
    """One 4096-point subset of a default-style synthetic cloud, with features."""
    pts, labels = synth_surface.generate(synth_surface.default_spec(seed=11, width=90, height=60))
    plan = subdivision.extract_subsets(pts, 4096)
    idx = plan.subsets[0]
    return pts[idx], labels[idx]


def test_criterion_01_storage_ratio(synth_subset, tmp_path):
    pts, labels = synth_subset
    t0 = time.perf_counter()
    sf = pipeline.subset_features(pts, "global", features.DEFAULT_K)
    t_feat = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = cloud_io.storage_report(pts, labels, sf.normals, sf.angles, tmp_path)
    elapsed = time.perf_counter() - t0
    r3 = rep.row(3).ratio
    r4 = rep.row(4).ratio
    ok = 0.69 <= r3 <= 0.76 and 1.10 <= r4 <= 1.18 and elapsed < 1.0
    record(1, "storage ratio", ok,
           f"combo3/combo2={r3:.4f} in [0.69,0.76], combo4/combo2={r4:.4f} in [1.10,1.18], "
           f"storage accounting {elapsed:.3f}s < 1s (feature estimation beforehand {t_feat:.3f}s)")


def test_criterion_02_channel_accounting(synth_subset, tmp_path):
    pts, labels = synth_subset
    sf = pipeline.subset_features(pts, "global", features.DEFAULT_K)
    rep = cloud_io.storage_report(pts, labels, sf.normals, sf.angles, tmp_path)
    channels = [r.channels for r in rep.rows]
    c5 = rep.row(5).channel_ratio
    ok = channels == [3, 6, 4, 7, 1, 3] and round(100 * c5, 1) == 16.7
    ok = ok and [FeatureCombination(i).channels for i in range(1, 7)] == channels
    record(2, "channel accounting", ok, f"channels={channels}, combo5 ratio={100 * c5:.1f}%")


def test_criterion_03_entropy_oracle():
    uniform = entropy_eval.entropy(np.arange(10) / 10 + 0.05, 10, (0.0, 1.0))
    single = entropy_eval.entropy(np.full(100, 0.42), 10, (0.0, 1.0))
    skew = entropy_eval.entropy([0.05] * 8 + [0.15] * 2, 10, (0.0, 1.0))
    ok = abs(uniform - math.log2(10)) <= 1e-9 and single == 0.0 and abs(skew - 0.7219) <= 1e-4
    record(3, "entropy oracle", ok,
           f"uniform={uniform:.12f} (log2 10 +-1e-9), single-bin={single}, 0.8/0.2={skew:.6f} (0.7219 +-1e-4)")


def test_criterion_04_entropy_directionality():
    pts, labels = synth_surface.generate(synth_surface.default_spec(seed=0, width=160, height=110))
    t0 = time.perf_counter()
    plan = subdivision.extract_subsets(pts, 4096)
    report, _ = pipeline.evaluate_subsets(pts, labels, plan.subsets, ("global", "axis"))
    elapsed = time.perf_counter() - t0
    g_dam = report.get("global", "angle", "damaged").mean
    g_und = report.get("global", "angle", "undamaged").mean
    a_dam = report.get("axis", "angle", "damaged").mean
    a_und = report.get("axis", "angle", "undamaged").mean
    gap_g, gap_a = g_dam - g_und, a_dam - a_und
    n_sub = report.get("global", "angle", "damaged").n_subsets
    ok = plan.num_s >= 20 and gap_g >= 0.5 and gap_g > gap_a and elapsed < 60
    record(4, "entropy directionality", ok,
           f"{plan.num_s} subsets ({n_sub} with damaged rows); global {g_dam:.3f}-{g_und:.3f}={gap_g:.3f} >= 0.5; "
           f"axis gap {gap_a:.3f} < global gap; {elapsed:.1f}s < 60s")


def test_criterion_05_normal_estimation():
    plane = grid_plane(40, spacing=0.5)
    nf = features.estimate_normals(plane, k=30)
    interior = np.all((plane[:, :2] > 3) & (plane[:, :2] < 16.5), axis=1)
    plane_err = np.arccos(np.clip(nf.normals[interior] @ [0.0, 0.0, 1.0], -1, 1)).max()

    sph = sphere_patch(1500, seed=1)
    sn = features.estimate_normals(sph, k=30)
    sph_err = np.arccos(np.clip(np.abs(np.sum(sn.normals * sph, axis=1)), 0, 1)).max()

    rng = np.random.default_rng(2024)
    a = rng.normal(size=(1000, 3, 3)) * rng.uniform(0.01, 10.0, size=(1000, 1, 1))
    mats = a @ np.swapaxes(a, 1, 2)
    evals, _ = features.eigh_sym3(mats)
    eig_err = max(np.max(np.abs(ev - charpoly_eigenvalues(m))) for m, ev in zip(mats, evals))

    ok = plane_err < 1e-6 and sph_err < 0.05 and eig_err < 1e-9
    record(5, "normal estimation", ok,
           f"plane max err={plane_err:.2e} rad < 1e-6; sphere (1500 pts, k=30) max err={sph_err:.4f} rad < 0.05; "
           f"eigen vs char. polynomial max err={eig_err:.2e} < 1e-9 on 1000 PSD")


def test_criterion_06_relative_angle(synth_subset):
    pts, _ = synth_subset
    cloud, _ = normalization.normalize(pts, "global")
    _, base = features.compute_features(cloud, k=30)
    in_range = bool(np.all((base.angles >= 0) & (base.angles <= math.pi / 2)))

    _, planar = features.compute_features(grid_plane(40, spacing=0.5), k=30)
    planar_max = planar.angles.max()

    worst = 0.0
    for seed in range(10):
        moved, _ = normalization.rotate(cloud, seed)
        _, af = features.compute_features(moved, k=30)
        worst = max(worst, np.max(np.abs(af.angles - base.angles)))
    ok = in_range and planar_max < 1e-4 and worst < 1e-6
    record(6, "relative angle", ok,
           f"all in [0,pi/2]={in_range}; planar max={planar_max:.2e} < 1e-4; "
           f"max change over 10 rotations={worst:.2e} < 1e-6")


def test_criterion_07_knn_exactness():
    rng = np.random.default_rng(77)
    pts = rng.random((1000, 3))
    queries = rng.random((100, 3))
    tree = spatial_index.build(pts)
    got = spatial_index.knn_batch(tree, queries, 16)
    mism = sum(got[i].tolist() != brute_knn(pts, q, 16) for i, q in enumerate(queries))
    record(7, "kNN exactness", mism == 0, f"{100 - mism}/100 queries identical to linear scan (k=16, N=1000)")


def test_criterion_08_fps_oracle():
    rng = np.random.default_rng(88)
    mism = 0
    prefix_bad = 0
    for _ in range(50):
        n = int(rng.integers(8, 65))
        pts = rng.normal(size=(n, 3))
        full = subdivision.farthest_point_sample(pts, 8).tolist()
        mism += full != greedy_fps(pts, 8)
        prefix_bad += sum(subdivision.farthest_point_sample(pts, m).tolist() != full[:m] for m in range(1, 9))
    ok = mism == 0 and prefix_bad == 0
    record(8, "FPS oracle", ok, f"{50 - mism}/50 clouds match exhaustive greedy; prefix violations={prefix_bad}")


def _lexsort_knn(pts, q, k):
    d2 = np.sum((pts - q) ** 2, axis=1)
    return np.lexsort((np.arange(len(pts)), d2))[:k].tolist()


def test_criterion_09_subdivision():
    fixtures = [subdivision.subset_count(a, b) for a, b in [(4096, 4096), (8192, 4096), (474830, 4096)]]
    rng = np.random.default_rng(99)
    syn, _ = synth_surface.generate(synth_surface.default_spec(seed=9, width=70, height=50))
    clouds = [(rng.random((5000, 3)), 1024), (rng.normal(size=(3001, 3)), 500), (syn, 4096)]
    exact = True
    covering = True
    for pts, n_input in clouds:
        plan = subdivision.extract_subsets(pts, n_input)
        covering &= plan.num_s * n_input >= len(pts)
        for ref, sub in zip(plan.references, plan.subsets):
            exact &= sub.tolist() == _lexsort_knn(pts, pts[ref], n_input)
    ok = fixtures == [1, 2, 116] and exact and covering
    record(9, "subdivision", ok,
           f"subset_count={fixtures} (1,2,116); subsets == brute kNN: {exact}; num_s*n_input >= N: {covering}")


def test_criterion_10_metrics_oracle():
    pred = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    truth = [1, 1, 1, 0, 1, 0, 0, 0, 0, 0]
    counts, sc = seg_eval.score(pred, truth)
    fixture_ok = (
        (counts.tp, counts.tn, counts.fp, counts.fn) == (3, 5, 1, 1)
        and abs(sc.accuracy - 0.8) <= 1e-9
        and abs(sc.iou_damaged - 0.6) <= 1e-9
        and abs(sc.iou_undamaged - 5 / 7) <= 1e-9
        and abs(sc.miou - (0.6 + 5 / 7) / 2) <= 1e-9
    )
    rng = np.random.default_rng(10)
    swap_ok = True
    for _ in range(100):
        n = int(rng.integers(1, 500))
        p, t = rng.integers(0, 2, n), rng.integers(0, 2, n)
        _, a = seg_eval.score(p, t)
        _, b = seg_eval.score(1 - p, 1 - t)
        swap_ok &= (
            abs(a.accuracy - b.accuracy) <= 1e-12
            and abs(a.miou - b.miou) <= 1e-12
            and abs(a.iou_damaged - b.iou_undamaged) <= 1e-12
        )
    record(10, "metrics oracle", fixture_ok and swap_ok,
           f"acc={sc.accuracy:.3f} IoU_d={sc.iou_damaged:.3f} IoU_u={sc.iou_undamaged:.4f} mIoU={sc.miou:.4f}; "
           f"polarity swap on 100 pairs: {swap_ok}")


def test_criterion_11_normalization():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(400, 3)) * [20.0, 3.0, 0.7] + [-600.0, 250.0, 9.0]
    ax, _ = normalization.normalize(pts, "axis")
    span_err = max(np.abs(ax.min(axis=0) + 0.5).max(), np.abs(ax.max(axis=0) - 0.5).max())

    gl, _ = normalization.normalize(pts, "global")
    i, j = rng.integers(0, 400, (2, 2000))
    keep = i != j
    ratio = np.linalg.norm(gl[i] - gl[j], axis=1)[keep] / np.linalg.norm(pts[i] - pts[j], axis=1)[keep]
    ratio_err = np.max(np.abs(ratio / ratio[0] - 1))

    idem = 0.0
    for kind in ("global", "axis"):
        once, _ = normalization.normalize(pts, kind)
        twice, _ = normalization.normalize(once, kind)
        idem = max(idem, np.abs(twice - once).max())

    tri = np.array([[0.0, 0, 0], [4, 0, 0], [4, 2, 0]])
    g, gp = normalization.normalize(tri, "global")
    a, _ = normalization.normalize(tri, "axis")
    hand = (
        np.allclose(g, [[-0.5, -0.25, 0], [0.5, -0.25, 0], [0.5, 0.25, 0]], atol=1e-15, rtol=0)
        and gp.k_global == 4.0
        and np.allclose(a, [[-0.5, -0.5, 0], [0.5, -0.5, 0], [0.5, 0.5, 0]], atol=1e-15, rtol=0)
    )
    ok = span_err <= 1e-12 and ratio_err <= 1e-9 and idem <= 1e-12 and hand
    record(11, "normalization", ok,
           f"axis span err={span_err:.1e} <= 1e-12; distance-ratio rel err={ratio_err:.1e} <= 1e-9; "
           f"idempotence={idem:.1e} <= 1e-12; hand fixtures={hand}")


def _pipeline_bytes(root):
    argv = [
        ["synth", "--seed", "3", "--width", "60", "--height", "45", "--out", root / "d"],
        ["subdivide", "--input", root / "d" / "cloud.xyz", "--out", root / "sub"],
        ["features", "--input", root / "sub", "--out", root / "feat"],
        ["entropy", "--input", root / "sub", "--out", root / "ent"],
        ["storage", "--input", root / "feat" / "subset_0000.xyz", "--out", root / "st"],
        ["segment", "--input", root / "feat" / "subset_0000.xyz", "--sweep", "--out", root / "seg.xyz"],
        ["score", "--pred", root / "seg.xyz", "--truth", root / "feat" / "subset_0000.xyz", "--out", root / "sc"],
        ["export-colored", "--input", root / "feat" / "subset_0000.xyz", "--out", root / "c.ply"],
    ]
    for a in argv:
        assert cli.main([str(x) for x in a]) == 0, a
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_12_end_to_end(tmp_path):
    pts, labels = synth_surface.generate(synth_surface.default_spec(seed=0))
    sf = pipeline.subset_features(pts, "global", features.DEFAULT_K)
    tau, sc = seg_eval.sweep_threshold(sf.angles, labels)

    first = _pipeline_bytes(tmp_path / "a")
    second = _pipeline_bytes(tmp_path / "b")
    identical = first == second
    ok = sc.miou >= 0.7 and identical
    record(12, "end-to-end smoke", ok,
           f"default cloud ({len(pts)} pts) swept tau={tau:.4f} mIoU={sc.miou:.4f} >= 0.7; "
           f"{len(first)} artifacts byte-identical across reruns: {identical}")
