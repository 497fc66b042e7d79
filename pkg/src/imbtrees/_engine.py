"""Numba kernels for growing purity-fit CART trees and evaluating forests.

Trees are flat arrays in preorder. ``feature[i] == -1`` marks a leaf; internal
nodes route ``x[feature] <= threshold`` to ``left``, otherwise to ``right``.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True)
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def _randbelow(state, m):
    u = float(_next_u64(state) >> _S11) * _INV53
    r = int(u * m)
    return r if r < m else m - 1


@njit(cache=True, nogil=True)
def midpoint(a, b):
    mid = 0.5 * (a + b)
    if mid >= b or mid < a:
        return a
    return mid


@njit(cache=True, nogil=True)
def split_score(pl, nl, pr, nr):
    """Sum over children of (pos^2 + neg^2) / size; larger means lower weighted Gini."""
    ql = nl - pl
    qr = nr - pr
    return (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr


@njit(cache=True, nogil=True)
def _better(score, f, thr, best_score, best_f, best_thr):
    if best_f < 0 or score > best_score:
        return True
    if score < best_score:
        return False
    if f != best_f:
        return f < best_f
    return thr < best_thr


@njit(cache=True, nogil=True)
def build_tree(XT, y, sample, mtry, seed):
    """Grow one tree on rows ``sample`` (duplicates allowed) of ``XT`` (d, n).

    ``mtry`` features are tried per node in a random order; if none gives a
    Gini decrease the search continues through the remaining features one at
    a time. A node becomes a leaf only when pure or when every row has the
    same feature vector.

    Each feature keeps the node's rows in sorted order; a split stably
    partitions every list, so no sorting happens below the root.
    """
    d = XT.shape[0]
    m_total = sample.size
    cap = 2 * m_total - 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros(cap, np.float64)
    count = np.zeros(cap, np.int64)

    order = np.empty((d, m_total), np.int64)
    vals = np.empty(m_total, np.float64)
    for f in range(d):
        for i in range(m_total):
            vals[i] = XT[f, sample[i]]
        perm = np.argsort(vals, kind="mergesort")
        for i in range(m_total):
            order[f, i] = sample[perm[i]]
    goes_left = np.zeros(XT.shape[1], np.bool_)
    buf = np.empty(m_total, np.int64)
    feats = np.arange(d)
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)

    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_parent = np.empty(cap, np.int64)
    st_left = np.empty(cap, np.bool_)
    st_start[0] = 0
    st_end[0] = m_total
    st_parent[0] = -1
    st_left[0] = True
    sp = 1
    n_nodes = 0

    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        parent = st_parent[sp]
        nid = n_nodes
        n_nodes += 1
        if parent >= 0:
            if st_left[sp]:
                left[parent] = nid
            else:
                right[parent] = nid

        m = end - start
        pos = 0
        for i in range(start, end):
            pos += y[order[0, i]]
        count[nid] = m
        value[nid] = pos / m
        if pos == 0 or pos == m:
            continue

        for i in range(d - 1, 0, -1):
            j = _randbelow(state, i + 1)
            tmp = feats[i]
            feats[i] = feats[j]
            feats[j] = tmp

        best_f = -1
        best_thr = 0.0
        best_score = 0.0
        best_nl = 0
        flat_f = -1
        flat_thr = 0.0
        flat_score = 0.0
        flat_nl = 0
        for r in range(d):
            if r >= mtry and best_f >= 0:
                break
            f = feats[r]
            row = XT[f]
            ord_f = order[f]
            pl = 0
            b = row[ord_f[start]]
            for i in range(start, end - 1):
                pl += y[ord_f[i]]
                a = b
                b = row[ord_f[i + 1]]
                if not a < b:
                    continue
                nl = i + 1 - start
                score = split_score(pl, nl, pos - pl, m - nl)
                thr = midpoint(a, b)
                if pl * m != pos * nl:
                    if _better(score, f, thr, best_score, best_f, best_thr):
                        best_f = f
                        best_thr = thr
                        best_score = score
                        best_nl = nl
                elif best_f < 0 and _better(score, f, thr, flat_score, flat_f, flat_thr):
                    flat_f = f
                    flat_thr = thr
                    flat_score = score
                    flat_nl = nl

        if best_f < 0:
            if flat_f < 0:
                continue  # identical feature vectors with mixed labels
            best_f = flat_f
            best_thr = flat_thr
            best_nl = flat_nl

        ord_b = order[best_f]
        for i in range(start, start + best_nl):
            goes_left[ord_b[i]] = True
        for i in range(start + best_nl, end):
            goes_left[ord_b[i]] = False
        for f in range(d):
            if f == best_f:
                continue
            ord_f = order[f]
            nl = 0
            nr = 0
            for i in range(start, end):
                k = ord_f[i]
                if goes_left[k]:
                    ord_f[start + nl] = k
                    nl += 1
                else:
                    buf[nr] = k
                    nr += 1
            for i in range(nr):
                ord_f[start + nl + i] = buf[i]

        feature[nid] = best_f
        threshold[nid] = best_thr
        # right pushed first so left is popped next (preorder numbering)
        st_start[sp] = start + best_nl
        st_end[sp] = end
        st_parent[sp] = nid
        st_left[sp] = False
        sp += 1
        st_start[sp] = start
        st_end[sp] = start + best_nl
        st_parent[sp] = nid
        st_left[sp] = True
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def predict_block(X, feature, threshold, left, right, value, roots, out, start, stop):
    """Mean leaf value over all trees for rows ``start:stop``; trees summed in order."""
    n_trees = roots.size
    for i in range(start, stop):
        out[i] = 0.0
    for t in range(n_trees):
        root = roots[t]
        for i in range(start, stop):
            node = root
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += value[node]
    for i in range(start, stop):
        out[i] /= n_trees
