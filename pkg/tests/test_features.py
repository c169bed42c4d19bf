import math

import numpy as np
import pytest

from conftest import grid_plane, sphere_patch
from oracles import charpoly_eigenvalues
from relangle import features, normalization, spatial_index


def random_psd(rng, n):
    a = rng.normal(size=(n, 3, 3)) * rng.uniform(0.01, 10.0, size=(n, 1, 1))
    m = a @ np.swapaxes(a, 1, 2)
    # include rank-deficient ones, which is what planar neighbourhoods produce
    m[: n // 10] = np.einsum("ni,nj->nij", a[: n // 10, :, 0], a[: n // 10, :, 0])
    return m


def test_eigen_solver_matches_characteristic_polynomial():
    rng = np.random.default_rng(7)
    mats = random_psd(rng, 1000)
    evals, evecs = features.eigh_sym3(mats)
    worst = 0.0
    for m, ev in zip(mats, evals):
        worst = max(worst, np.max(np.abs(ev - charpoly_eigenvalues(m))))
    assert worst < 1e-9
    eye = np.broadcast_to(np.eye(3), mats.shape)
    np.testing.assert_allclose(np.swapaxes(evecs, 1, 2) @ evecs, eye, atol=1e-9)
    np.testing.assert_allclose(mats @ evecs, evecs * evals[:, None, :], atol=1e-9 * np.abs(mats).max())
    np.testing.assert_allclose(evals.sum(axis=1), np.trace(mats, axis1=1, axis2=2), rtol=1e-12, atol=1e-12)


def test_eigen_solver_diagonal_and_single():
    vals, vecs = features.eigh_sym3(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(vals, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(vecs), [[0, 0, 1], [1, 0, 0], [0, 1, 0]])


def test_cross_neighbourhood_covariance():
    pts = np.array([[1.0, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]])
    nbr = np.arange(4)[None, :]
    centroids, covs = features.local_covariances(pts, nbr)
    np.testing.assert_allclose(centroids[0], 0.0)
    np.testing.assert_allclose(covs[0], np.diag([0.5, 0.5, 0.0]))
    _, vecs = features.eigh_sym3(covs[0])
    np.testing.assert_allclose(np.abs(vecs[:, 0]), [0, 0, 1])


def test_plane_normals_are_exact():
    pts = grid_plane(40, spacing=0.5)
    nf = features.estimate_normals(pts, k=30)
    interior = np.all((pts[:, :2] > 3) & (pts[:, :2] < 16.5), axis=1)
    err = np.arccos(np.clip(nf.normals[interior] @ [0, 0, 1.0], -1, 1))
    assert err.max() < 1e-6
    # orientation with r = +z makes them exactly +z
    np.testing.assert_array_equal(nf.normals[:, 2] > 0, True)
    np.testing.assert_allclose(np.linalg.norm(nf.normals, axis=1), 1.0, atol=1e-12)
    assert nf.k == 30


def test_tilted_plane_normals(rng):
    pts = grid_plane(30)
    rot = normalization.random_rotation(3)
    nf = features.estimate_normals(rot.apply(pts), k=20)
    true = rot.matrix[:, 2]
    err = np.arccos(np.clip(np.abs(nf.normals @ true), 0, 1))
    assert err.max() < 1e-6


@pytest.mark.parametrize("n", [100, 300, 600])
def test_sphere_patch_interior_normals_are_radial(n):
    pts = sphere_patch(n, seed=1)
    nf = features.estimate_normals(pts, k=30)
    err = np.arccos(np.clip(np.abs(np.sum(nf.normals * pts, axis=1)), 0, 1))
    # rim points see a one-sided neighbourhood; judge those at least one
    # neighbourhood radius away from the patch boundary
    radius = np.sqrt(30 / n * 2 * (1 - np.cos(0.35)))
    interior = np.arccos(pts[:, 2]) < 0.35 - radius
    assert interior.sum() >= 10
    assert err[interior].max() < 0.05


def test_dense_sphere_patch_every_normal_is_radial():
    pts = sphere_patch(1500, seed=1)
    nf = features.estimate_normals(pts, k=30)
    err = np.arccos(np.clip(np.abs(np.sum(nf.normals * pts, axis=1)), 0, 1))
    assert err.max() < 0.05


def test_orientation_follows_reference(rng):
    pts = grid_plane(15) + rng.normal(scale=0.01, size=(225, 3))
    nf = features.estimate_normals(pts, k=10, reference=[0, 0, -1])
    assert np.all(nf.normals[:, 2] <= 0)
    r = features.reference_direction(pts)
    assert r[2] > 0.99


def test_estimate_normals_errors(rng):
    pts = rng.random((10, 3))
    with pytest.raises(ValueError):
        features.estimate_normals(pts, k=2)
    with pytest.raises(ValueError):
        features.estimate_normals(pts, k=11)
    with pytest.raises(ValueError):
        features.estimate_normals(pts, tree=spatial_index.build(pts[:5]), k=3)


def test_average_normal_fixtures():
    np.testing.assert_allclose(features.average_normal([[0, 0, 1.0]] * 5), [0, 0, 1])
    np.testing.assert_allclose(
        features.average_normal([[0, 0, 1.0], [0, 0, 1.0], [1.0, 0, 0]]), np.array([1, 0, 2]) / math.sqrt(5)
    )
    with pytest.raises(ValueError):
        features.average_normal([[0, 0, 1.0], [0, 0, -1.0]])


def test_relative_angle_fixtures():
    n_avg = np.array([1.0, 0, 2.0]) / math.sqrt(5)
    field = features.relative_angles([[0, 0, 1.0], [1.0, 0, 0], [0, 0, -1.0]], n_avg)
    np.testing.assert_allclose(field.angles, [math.acos(2 / math.sqrt(5)), math.acos(1 / math.sqrt(5)), 0.4636476], atol=1e-7)
    assert field.angles[0] == pytest.approx(0.4636, abs=1e-4)
    assert field.angles[1] == pytest.approx(1.1071, abs=1e-4)
    same = features.relative_angles([n_avg, -n_avg], n_avg).angles
    np.testing.assert_allclose(same, [0.0, 0.0], atol=1e-7)


def test_angles_sign_invariant(rng):
    n = rng.normal(size=(200, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    n_avg = np.array([0.0, 0.6, 0.8])
    flip = np.where(rng.random(200) < 0.5, -1.0, 1.0)[:, None]
    a = features.relative_angles(n, n_avg).angles
    b = features.relative_angles(n * flip, n_avg).angles
    np.testing.assert_array_equal(a, b)
    assert np.all((a >= 0) & (a <= math.pi / 2))


def test_relative_angle_rotation_invariance():
    rng = np.random.default_rng(5)
    pts = grid_plane(35, spacing=0.3)
    pts[:, 2] = 0.2 * np.sin(pts[:, 0]) * np.cos(0.7 * pts[:, 1]) + rng.normal(scale=0.01, size=len(pts))
    pts -= pts.mean(axis=0)
    _, base = features.compute_features(pts, k=20)
    for seed in range(10):
        moved, _ = normalization.rotate(pts, seed)
        _, af = features.compute_features(moved, k=20)
        assert np.max(np.abs(af.angles - base.angles)) < 1e-6
