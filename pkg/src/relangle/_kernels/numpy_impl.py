"""Pure-numpy reference kernels.

Vectorised where the algorithm allows it (Jacobi sweeps, covariances, FPS),
plain Python control flow where it does not (tree traversal).
"""

import numpy as np

JACOBI_MAX_SWEEPS = 50
_PAIRS = ((0, 1), (0, 2), (1, 2))


def kdtree_build(points, leaf_size):
    n = points.shape[0]
    perm = np.arange(n, dtype=np.int64)
    start, end, axis, split, left, right = [0], [n], [-1], [0.0], [-1], [-1]
    stack = [(0, 0, n, 0)]
    while stack:
        node, s, e, depth = stack.pop()
        if e - s <= leaf_size:
            continue
        ax = depth % 3
        seg = np.sort(perm[s:e])
        order = np.argsort(points[seg, ax], kind="stable")
        perm[s:e] = seg[order]
        mid = s + (e - s) // 2
        axis[node] = ax
        split[node] = points[perm[mid], ax]
        lo = len(start)
        hi = lo + 1
        start += [s, mid]
        end += [mid, e]
        axis += [-1, -1]
        split += [0.0, 0.0]
        left += [-1, -1]
        right += [-1, -1]
        left[node] = lo
        right[node] = hi
        stack.append((hi, mid, e, depth + 1))
        stack.append((lo, s, mid, depth + 1))
    return (
        perm,
        np.asarray(start, dtype=np.int64),
        np.asarray(end, dtype=np.int64),
        np.asarray(axis, dtype=np.int64),
        np.asarray(split, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
    )


def _knn_one(points, perm, start, end, axis, split, left, right, q, k):
    best_d = np.empty(0)
    best_i = np.empty(0, dtype=np.int64)
    stack = [(0, 0.0)]
    while stack:
        node, bound = stack.pop()
        if best_d.size == k and bound > best_d[-1]:
            continue
        ax = axis[node]
        if ax < 0:
            idx = perm[start[node]:end[node]]
            diff = points[idx] - q
            d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1] + diff[:, 2] * diff[:, 2]
            cand_d = np.concatenate([best_d, d2])
            cand_i = np.concatenate([best_i, idx])
            order = np.lexsort((cand_i, cand_d))[:k]
            best_d = cand_d[order]
            best_i = cand_i[order]
            continue
        diff = q[ax] - split[node]
        near, far = (left[node], right[node]) if diff <= 0.0 else (right[node], left[node])
        stack.append((far, max(bound, diff * diff)))
        stack.append((near, bound))
    return best_i, best_d


# Below this many indexed points a chunked linear scan beats walking the tree
# one query at a time from Python. Both paths compute squared distances the
# same way and order by (distance, index), so their output is identical.
BRUTE_MAX_POINTS = 8192
_BRUTE_CHUNK_ELEMS = 1 << 21


def _knn_brute(points, queries, k):
    n = points.shape[0]
    nq = queries.shape[0]
    out_i = np.empty((nq, k), dtype=np.int64)
    out_d = np.empty((nq, k), dtype=np.float64)
    step = max(1, _BRUTE_CHUNK_ELEMS // n)
    for s in range(0, nq, step):
        q = queries[s:s + step]
        dx = points[None, :, 0] - q[:, None, 0]
        dy = points[None, :, 1] - q[:, None, 1]
        dz = points[None, :, 2] - q[:, None, 2]
        d2 = dx * dx + dy * dy + dz * dz
        if k < n:
            # everything past the k-th smallest value can be pushed out of the sort
            kth = np.partition(d2, k - 1, axis=1)[:, k - 1:k]
            keyed = np.where(d2 <= kth, d2, np.inf)
        else:
            keyed = d2
        order = np.argsort(keyed, axis=1, kind="stable")[:, :k]
        out_i[s:s + step] = order
        out_d[s:s + step] = np.take_along_axis(d2, order, axis=1)
    return out_i, out_d


def kdtree_knn(points, perm, start, end, axis, split, left, right, queries, k):
    if points.shape[0] <= BRUTE_MAX_POINTS:
        return _knn_brute(points, queries, k)
    nq = queries.shape[0]
    out_i = np.empty((nq, k), dtype=np.int64)
    out_d = np.empty((nq, k), dtype=np.float64)
    for j in range(nq):
        out_i[j], out_d[j] = _knn_one(points, perm, start, end, axis, split, left, right, queries[j], k)
    return out_i, out_d


def sym3_eigh(mats):
    """Cyclic Jacobi on a stack of symmetric 3x3 matrices (upper triangle is read).

    Returns ascending eigenvalues ``(M, 3)`` and eigenvectors as columns ``(M, 3, 3)``.
    """
    mats = np.asarray(mats, dtype=np.float64)
    m = mats.shape[0]
    diag = [mats[:, 0, 0].copy(), mats[:, 1, 1].copy(), mats[:, 2, 2].copy()]
    off = {(0, 1): mats[:, 0, 1].copy(), (0, 2): mats[:, 0, 2].copy(), (1, 2): mats[:, 1, 2].copy()}
    v = np.zeros((m, 3, 3))
    v[:, 0, 0] = v[:, 1, 1] = v[:, 2, 2] = 1.0

    for sweep in range(JACOBI_MAX_SWEEPS):
        if not (np.any(off[(0, 1)]) or np.any(off[(0, 2)]) or np.any(off[(1, 2)])):
            break
        for p, q in _PAIRS:
            r = 3 - p - q
            apq = off[(p, q)]
            app, aqq = diag[p], diag[q]
            if sweep > 3:
                g = 100.0 * np.abs(apq)
                tiny = (np.abs(app) + g == np.abs(app)) & (np.abs(aqq) + g == np.abs(aqq))
                apq = np.where(tiny, 0.0, apq)
                off[(p, q)] = apq
            rot = apq != 0.0
            if not np.any(rot):
                continue
            safe = np.where(rot, apq, 1.0)
            # a subnormal apq overflows theta to inf; the big branch below gives t = 0 then
            with np.errstate(over="ignore"):
                theta = (aqq - app) / (2.0 * safe)
            big = np.abs(theta) > 1e150
            small = np.where(big, 0.0, theta)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), 1.0 / (np.abs(small) + np.sqrt(small * small + 1.0)))
            t = np.where(big, t, np.where(theta < 0.0, -t, t))
            t = np.where(rot, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            rp = (min(r, p), max(r, p))
            rq = (min(r, q), max(r, q))
            arp, arq = off[rp], off[rq]
            diag[p] = app - t * apq
            diag[q] = aqq + t * apq
            off[(p, q)] = np.where(rot, 0.0, apq)
            off[rp] = c * arp - s * arq
            off[rq] = s * arp + c * arq
            vp = v[:, :, p].copy()
            vq = v[:, :, q]
            v[:, :, p] = c[:, None] * vp - s[:, None] * vq
            v[:, :, q] = s[:, None] * vp + c[:, None] * vq

    evals = np.stack(diag, axis=1)
    order = np.argsort(evals, axis=1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=1)
    evecs = np.take_along_axis(v, order[:, None, :], axis=2)
    return evals, evecs


def neighborhood_covariances(points, nbr):
    """Centroid and biased (1/k) covariance of each neighborhood row in ``nbr``."""
    k = nbr.shape[1]
    pts = points[nbr]
    centroids = pts.sum(axis=1) / k
    d = pts - centroids[:, None, :]
    covs = np.einsum("nki,nkj->nij", d, d) / k
    return centroids, covs


def farthest_point_sample(points, m, centroid):
    diff = points - centroid
    d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1] + diff[:, 2] * diff[:, 2]
    out = np.empty(m, dtype=np.int64)
    cur = int(np.argmax(d2))
    out[0] = cur
    mind = np.full(points.shape[0], np.inf)
    for j in range(1, m):
        diff = points - points[cur]
        d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1] + diff[:, 2] * diff[:, 2]
        np.minimum(mind, d2, out=mind)
        mind[out[:j]] = -1.0
        cur = int(np.argmax(mind))
        out[j] = cur
    return out
