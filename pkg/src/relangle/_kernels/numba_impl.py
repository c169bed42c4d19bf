"""numba-compiled kernels; same algorithms as :mod:`numpy_impl`, written as loops."""

import numpy as np
from numba import njit

JACOBI_MAX_SWEEPS = 50

_jit = njit(cache=True, nogil=True)


@_jit
def _stable_partition(arr, s, e, side, tmp):
    # move side==0 entries of arr[s:e] to the front, keeping relative order
    w = s
    t = 0
    for j in range(s, e):
        v = arr[j]
        if side[v] == 0:
            arr[w] = v
            w += 1
        else:
            tmp[t] = v
            t += 1
    for j in range(t):
        arr[w + j] = tmp[j]


@_jit
def kdtree_build(points, leaf_size):
    # Each axis is sorted once by (coordinate, index); a node's segment in
    # ords[a] then lists its points in that order for every axis a, and
    # splitting a node is a stable partition of the other two lists.
    n = points.shape[0]
    cap = 2 * n + 1
    ords = np.empty((3, n), np.int64)
    for a in range(3):
        ords[a] = np.argsort(points[:, a], kind="mergesort")
    perm = np.arange(n).astype(np.int64)
    side = np.zeros(n, np.int8)
    tmp = np.empty(n, np.int64)
    start = np.zeros(cap, np.int64)
    end = np.zeros(cap, np.int64)
    axis = np.full(cap, -1, np.int64)
    split = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    start[0] = 0
    end[0] = n
    n_nodes = 1

    st_node = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node[0] = 0
    st_depth[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        depth = st_depth[top]
        s = start[node]
        e = end[node]
        if e - s <= leaf_size:
            if depth > 0:
                src = ords[(depth - 1) % 3]
                for j in range(s, e):
                    perm[j] = src[j]
            continue
        ax = depth % 3
        mid = s + (e - s) // 2
        cur = ords[ax]
        for j in range(s, mid):
            side[cur[j]] = 0
        for j in range(mid, e):
            side[cur[j]] = 1
        for a in range(3):
            if a != ax:
                _stable_partition(ords[a], s, e, side, tmp)
        axis[node] = ax
        split[node] = points[cur[mid], ax]
        lo = n_nodes
        hi = n_nodes + 1
        n_nodes += 2
        start[lo] = s
        end[lo] = mid
        start[hi] = mid
        end[hi] = e
        left[node] = lo
        right[node] = hi
        st_node[top] = hi
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lo
        st_depth[top] = depth + 1
        top += 1
    return (
        perm,
        start[:n_nodes].copy(),
        end[:n_nodes].copy(),
        axis[:n_nodes].copy(),
        split[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
    )


@_jit
def _less(da, ia, db, ib):
    return da < db or (da == db and ia < ib)


@_jit
def _sift_down(hd, hi, size, pos):
    # max-heap on (distance, index)
    while True:
        child = 2 * pos + 1
        if child >= size:
            return
        if child + 1 < size and _less(hd[child], hi[child], hd[child + 1], hi[child + 1]):
            child += 1
        if _less(hd[pos], hi[pos], hd[child], hi[child]):
            hd[pos], hd[child] = hd[child], hd[pos]
            hi[pos], hi[child] = hi[child], hi[pos]
            pos = child
        else:
            return


@_jit
def _sift_up(hd, hi, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if _less(hd[parent], hi[parent], hd[pos], hi[pos]):
            hd[pos], hd[parent] = hd[parent], hd[pos]
            hi[pos], hi[parent] = hi[parent], hi[pos]
            pos = parent
        else:
            return


@_jit
def kdtree_knn(points, perm, start, end, axis, split, left, right, queries, k):
    nq = queries.shape[0]
    out_i = np.empty((nq, k), np.int64)
    out_d = np.empty((nq, k), np.float64)
    depth_cap = 2 * start.shape[0] + 2
    st_node = np.empty(depth_cap, np.int64)
    st_bound = np.empty(depth_cap, np.float64)
    hd = np.empty(k, np.float64)
    hi = np.empty(k, np.int64)
    for j in range(nq):
        qx = queries[j, 0]
        qy = queries[j, 1]
        qz = queries[j, 2]
        size = 0
        top = 1
        st_node[0] = 0
        st_bound[0] = 0.0
        while top > 0:
            top -= 1
            node = st_node[top]
            bound = st_bound[top]
            if size == k and bound > hd[0]:
                continue
            ax = axis[node]
            if ax < 0:
                for t in range(start[node], end[node]):
                    idx = perm[t]
                    dx = points[idx, 0] - qx
                    dy = points[idx, 1] - qy
                    dz = points[idx, 2] - qz
                    d2 = dx * dx + dy * dy + dz * dz
                    if size < k:
                        hd[size] = d2
                        hi[size] = idx
                        _sift_up(hd, hi, size)
                        size += 1
                    elif _less(d2, idx, hd[0], hi[0]):
                        hd[0] = d2
                        hi[0] = idx
                        _sift_down(hd, hi, size, 0)
                continue
            if ax == 0:
                diff = qx - split[node]
            elif ax == 1:
                diff = qy - split[node]
            else:
                diff = qz - split[node]
            if diff <= 0.0:
                near = left[node]
                far = right[node]
            else:
                near = right[node]
                far = left[node]
            fb = diff * diff
            if fb < bound:
                fb = bound
            st_node[top] = far
            st_bound[top] = fb
            top += 1
            st_node[top] = near
            st_bound[top] = bound
            top += 1
        # drain the heap largest-first into ascending output
        for pos in range(k - 1, -1, -1):
            out_d[j, pos] = hd[0]
            out_i[j, pos] = hi[0]
            size -= 1
            hd[0] = hd[size]
            hi[0] = hi[size]
            _sift_down(hd, hi, size, 0)
    return out_i, out_d


@_jit
def _jacobi3(a, v):
    # a: 3x3 work copy (upper triangle meaningful), v: identity on entry
    for sweep in range(JACOBI_MAX_SWEEPS):
        if a[0, 1] == 0.0 and a[0, 2] == 0.0 and a[1, 2] == 0.0:
            break
        for pair in range(3):
            if pair == 0:
                p, q, r = 0, 1, 2
            elif pair == 1:
                p, q, r = 0, 2, 1
            else:
                p, q, r = 1, 2, 0
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            if sweep > 3:
                g = 100.0 * abs(apq)
                if abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    continue
            if apq == 0.0:
                continue
            theta = (aqq - app) / (2.0 * apq)
            if abs(theta) > 1e150:
                t = 0.5 / theta
            else:
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rp0, rp1 = (r, p) if r < p else (p, r)
            rq0, rq1 = (r, q) if r < q else (q, r)
            arp = a[rp0, rp1]
            arq = a[rq0, rq1]
            a[p, p] = app - t * apq
            a[q, q] = aqq + t * apq
            a[p, q] = 0.0
            a[rp0, rp1] = c * arp - s * arq
            a[rq0, rq1] = s * arp + c * arq
            for row in range(3):
                vp = v[row, p]
                vq = v[row, q]
                v[row, p] = c * vp - s * vq
                v[row, q] = s * vp + c * vq


@_jit
def sym3_eigh(mats):
    m = mats.shape[0]
    evals = np.empty((m, 3), np.float64)
    evecs = np.empty((m, 3, 3), np.float64)
    a = np.empty((3, 3), np.float64)
    v = np.empty((3, 3), np.float64)
    for i in range(m):
        for r in range(3):
            for c in range(3):
                a[r, c] = mats[i, r, c]
                v[r, c] = 1.0 if r == c else 0.0
        _jacobi3(a, v)
        # stable ascending sort of three values
        o0, o1, o2 = 0, 1, 2
        d = (a[0, 0], a[1, 1], a[2, 2])
        if d[o1] < d[o0]:
            o0, o1 = o1, o0
        if d[o2] < d[o1]:
            o1, o2 = o2, o1
            if d[o1] < d[o0]:
                o0, o1 = o1, o0
        order = (o0, o1, o2)
        for c in range(3):
            evals[i, c] = d[order[c]]
            for r in range(3):
                evecs[i, r, c] = v[r, order[c]]
    return evals, evecs


@_jit
def neighborhood_covariances(points, nbr):
    n, k = nbr.shape
    centroids = np.zeros((n, 3), np.float64)
    covs = np.zeros((n, 3, 3), np.float64)
    for i in range(n):
        cx = 0.0
        cy = 0.0
        cz = 0.0
        for j in range(k):
            p = nbr[i, j]
            cx += points[p, 0]
            cy += points[p, 1]
            cz += points[p, 2]
        cx /= k
        cy /= k
        cz /= k
        centroids[i, 0] = cx
        centroids[i, 1] = cy
        centroids[i, 2] = cz
        sxx = sxy = sxz = syy = syz = szz = 0.0
        for j in range(k):
            p = nbr[i, j]
            dx = points[p, 0] - cx
            dy = points[p, 1] - cy
            dz = points[p, 2] - cz
            sxx += dx * dx
            sxy += dx * dy
            sxz += dx * dz
            syy += dy * dy
            syz += dy * dz
            szz += dz * dz
        covs[i, 0, 0] = sxx / k
        covs[i, 0, 1] = covs[i, 1, 0] = sxy / k
        covs[i, 0, 2] = covs[i, 2, 0] = sxz / k
        covs[i, 1, 1] = syy / k
        covs[i, 1, 2] = covs[i, 2, 1] = syz / k
        covs[i, 2, 2] = szz / k
    return centroids, covs


@_jit
def farthest_point_sample(points, m, centroid):
    n = points.shape[0]
    out = np.empty(m, np.int64)
    best = -1.0
    cur = 0
    for i in range(n):
        dx = points[i, 0] - centroid[0]
        dy = points[i, 1] - centroid[1]
        dz = points[i, 2] - centroid[2]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 > best:
            best = d2
            cur = i
    out[0] = cur
    mind = np.full(n, np.inf)
    taken = np.zeros(n, np.bool_)
    taken[cur] = True
    for j in range(1, m):
        px = points[cur, 0]
        py = points[cur, 1]
        pz = points[cur, 2]
        best = -1.0
        nxt = -1
        for i in range(n):
            if taken[i]:
                continue
            dx = points[i, 0] - px
            dy = points[i, 1] - py
            dz = points[i, 2] - pz
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < mind[i]:
                mind[i] = d2
            if mind[i] > best:
                best = mind[i]
                nxt = i
        cur = nxt
        out[j] = cur
        taken[cur] = True
    return out
