"""Hot numeric kernels with two interchangeable backends.

Tree fitting, tree traversal, and per-row SHAP walks dominate runtime, so each
kernel exists twice: a numba ``@njit`` version and a pure-numpy version. The
active backend is chosen at import time; set ``STROKEKIT_NO_NUMBA=1`` to force
the numpy path (also used automatically when numba is not installed). Both
backends are kept bit-for-bit compatible for the Gini split search and tree
routing: split scores are derived from exact int64 class counts, so the float
comparisons see identical operands in either path. ``benchmarks/bench_kernels.py``
times the two backends against each other.

The forest RNG is splitmix64 used as a counter-based stream, so any backend
(or any language) reproduces identical bootstrap samples and feature draws.
"""

from __future__ import annotations

import os

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _numba_disabled_by_env() -> bool:
    return os.environ.get("STROKEKIT_NO_NUMBA", "").strip().lower() not in ("", "0", "false")


NUMBA_ENABLED = False
if not _numba_disabled_by_env():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):  # noqa: D103 - identity decorator stand-in
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# ---------------------------------------------------------------------------
# splitmix64 stream
# ---------------------------------------------------------------------------

def splitmix64(seed: int) -> int:
    """One splitmix64 step: derives a well-mixed 64-bit value from ``seed``."""
    z = (int(seed) + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def stream_block(base: int, start: int, count: int) -> np.ndarray:
    """Draws ``count`` consecutive values from the counter-based stream.

    Value ``j`` of the stream seeded by ``base`` is
    ``mix(base + (j+1) * GOLDEN)`` with the splitmix64 finalizer; ``start`` is
    the number of values already consumed. Vectorized, exact uint64 wrapping.
    """
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = (np.uint64(base) + idx * np.uint64(_GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMixStream:
    """Stateful reader over the counter-based splitmix64 stream."""

    def __init__(self, base: int):
        self.base = int(base) & _MASK
        self.consumed = 0

    def next_block(self, count: int) -> np.ndarray:
        out = stream_block(self.base, self.consumed, count)
        self.consumed += count
        return out

    def randints(self, count: int, bound: int) -> np.ndarray:
        """count draws in [0, bound) by modulo reduction (documented bias)."""
        return (self.next_block(count) % np.uint64(bound)).astype(np.int64)

    def choose_subset(self, n_total: int, k: int) -> np.ndarray:
        """k distinct values from range(n_total) via partial Fisher-Yates, sorted."""
        if k >= n_total:
            return np.arange(n_total, dtype=np.int64)
        pool = np.arange(n_total, dtype=np.int64)
        raw = self.next_block(k)
        for i in range(k):
            j = i + int(raw[i] % np.uint64(n_total - i))
            pool[i], pool[j] = pool[j], pool[i]
        return np.sort(pool[:k])


# ---------------------------------------------------------------------------
# Best-split search (Gini and entropy criteria)
# ---------------------------------------------------------------------------
# Contract shared by both backends: scan features in the given order and, per
# feature, candidate thresholds in ascending value order (midpoints between
# consecutive distinct values). Keep a candidate only if both children have at
# least min_leaf rows. Adopt a new best only on strict score improvement, so
# ties resolve to the lowest feature index, then the lowest threshold. The
# Gini score is the proxy sum(left_counts^2)/n_left + sum(right_counts^2)/n_right
# computed from exact int64 counts (larger proxy == larger impurity decrease).


def _best_split_gini_py(X, y, idx, feats, n_classes, min_leaf):
    n = idx.shape[0]
    ysub = y[idx]
    counts = np.bincount(ysub, minlength=n_classes).astype(np.int64)
    best_proxy = -np.inf
    best_feat = -1
    best_thr = 0.0
    nl = np.arange(1, n, dtype=np.int64)
    nr = n - nl
    for f in feats:
        col = X[idx, f]
        order = np.argsort(col)
        vals = col[order]
        ys = ysub[order]
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), ys] = 1
        cum_left = np.cumsum(onehot, axis=0)[:-1]
        cum_right = counts[None, :] - cum_left
        sl = np.sum(cum_left * cum_left, axis=1)
        sr = np.sum(cum_right * cum_right, axis=1)
        proxy = sl / nl + sr / nr
        valid = (vals[:-1] != vals[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        proxy = np.where(valid, proxy, -np.inf)
        i = int(np.argmax(proxy))
        if proxy[i] > best_proxy:
            best_proxy = float(proxy[i])
            best_feat = int(f)
            best_thr = float((vals[i] + vals[i + 1]) * 0.5)
    return best_feat, best_thr, best_proxy


@njit(cache=True)
def _best_split_gini_nb(X, y, idx, feats, n_classes, min_leaf):  # pragma: no cover - numba path
    n = idx.shape[0]
    counts = np.zeros(n_classes, dtype=np.int64)
    for i in range(n):
        counts[y[idx[i]]] += 1
    best_proxy = -np.inf
    best_feat = -1
    best_thr = 0.0
    col = np.empty(n, dtype=np.float64)
    left = np.empty(n_classes, dtype=np.int64)
    right = np.empty(n_classes, dtype=np.int64)
    for fpos in range(feats.shape[0]):
        f = feats[fpos]
        for i in range(n):
            col[i] = X[idx[i], f]
        order = np.argsort(col)
        for k in range(n_classes):
            left[k] = 0
            right[k] = counts[k]
        sl = 0
        sr = 0
        for k in range(n_classes):
            sr += counts[k] * counts[k]
        for i in range(n - 1):
            c = y[idx[order[i]]]
            sl += 2 * left[c] + 1
            sr -= 2 * right[c] - 1
            left[c] += 1
            right[c] -= 1
            v0 = col[order[i]]
            v1 = col[order[i + 1]]
            if v0 == v1:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            proxy = sl / nl + sr / nr
            if proxy > best_proxy:
                best_proxy = proxy
                best_feat = f
                best_thr = (v0 + v1) * 0.5
    return best_feat, best_thr, best_proxy


def _xlogx(c):
    out = np.zeros_like(c, dtype=np.float64)
    pos = c > 0
    out[pos] = c[pos] * np.log(c[pos])
    return out


def _best_split_entropy_py(X, y, idx, feats, n_classes, min_leaf):
    # Score is -(nl*H_left + nr*H_right) = sum(c*log c) - nl*log nl - nr*log nr
    # summed over the two children; larger is better.
    n = idx.shape[0]
    ysub = y[idx]
    counts = np.bincount(ysub, minlength=n_classes).astype(np.int64)
    best_score = -np.inf
    best_feat = -1
    best_thr = 0.0
    nl = np.arange(1, n, dtype=np.int64)
    nr = n - nl
    nlogn = _xlogx(nl.astype(np.float64)) + _xlogx(nr.astype(np.float64))
    for f in feats:
        col = X[idx, f]
        order = np.argsort(col)
        vals = col[order]
        ys = ysub[order]
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), ys] = 1
        cum_left = np.cumsum(onehot, axis=0)[:-1].astype(np.float64)
        cum_right = counts[None, :].astype(np.float64) - cum_left
        score = _xlogx(cum_left).sum(axis=1) + _xlogx(cum_right).sum(axis=1) - nlogn
        valid = (vals[:-1] != vals[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_feat = int(f)
            best_thr = float((vals[i] + vals[i + 1]) * 0.5)
    return best_feat, best_thr, best_score


@njit(cache=True)
def _best_split_entropy_nb(X, y, idx, feats, n_classes, min_leaf):  # pragma: no cover - numba path
    n = idx.shape[0]
    counts = np.zeros(n_classes, dtype=np.int64)
    for i in range(n):
        counts[y[idx[i]]] += 1
    best_score = -np.inf
    best_feat = -1
    best_thr = 0.0
    col = np.empty(n, dtype=np.float64)
    left = np.empty(n_classes, dtype=np.int64)
    right = np.empty(n_classes, dtype=np.int64)
    for fpos in range(feats.shape[0]):
        f = feats[fpos]
        for i in range(n):
            col[i] = X[idx[i], f]
        order = np.argsort(col)
        for k in range(n_classes):
            left[k] = 0
            right[k] = counts[k]
        for i in range(n - 1):
            c = y[idx[order[i]]]
            left[c] += 1
            right[c] -= 1
            v0 = col[order[i]]
            v1 = col[order[i + 1]]
            if v0 == v1:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            score = -(nl * np.log(nl) + nr * np.log(nr))
            for k in range(n_classes):
                if left[k] > 0:
                    score += left[k] * np.log(left[k])
                if right[k] > 0:
                    score += right[k] * np.log(right[k])
            if score > best_score:
                best_score = score
                best_feat = f
                best_thr = (v0 + v1) * 0.5
    return best_feat, best_thr, best_score


# ---------------------------------------------------------------------------
# Tree routing
# ---------------------------------------------------------------------------

def _route_leaves_py(children_left, children_right, feature, threshold, X):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = children_left[node] >= 0
    rows = np.arange(n)
    while active.any():
        cur = node[active]
        r = rows[active]
        go_left = X[r, feature[cur]] <= threshold[cur]
        node[active] = np.where(go_left, children_left[cur], children_right[cur])
        active = children_left[node] >= 0
    return node


@njit(cache=True)
def _route_leaves_nb(children_left, children_right, feature, threshold, X):  # pragma: no cover
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while children_left[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = children_left[node]
            else:
                node = children_right[node]
        out[i] = node
    return out


# ---------------------------------------------------------------------------
# Path-dependent TreeSHAP (cover-weighted conditional expectations)
# ---------------------------------------------------------------------------
# Port of the classic tree-ensemble SHAP recursion: a "unique path" of
# (feature, zero_fraction, one_fraction, pweight) elements is extended on the
# way down and unwound when a feature repeats; leaf values are attributed to
# each path feature with the unwound permutation weights.


def _ts_extend(pfi, pz, po, pw, depth, zero_fraction, one_fraction, feature_index):
    pfi[depth] = feature_index
    pz[depth] = zero_fraction
    po[depth] = one_fraction
    pw[depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        pw[i + 1] += one_fraction * pw[i] * (i + 1.0) / (depth + 1.0)
        pw[i] = zero_fraction * pw[i] * (depth - i) / (depth + 1.0)


def _ts_unwind(pfi, pz, po, pw, depth, path_index):
    one_fraction = po[path_index]
    zero_fraction = pz[path_index]
    next_one = pw[depth]
    for i in range(depth - 1, -1, -1):
        if one_fraction != 0.0:
            tmp = pw[i]
            pw[i] = next_one * (depth + 1.0) / ((i + 1.0) * one_fraction)
            next_one = tmp - pw[i] * zero_fraction * (depth - i) / (depth + 1.0)
        else:
            pw[i] = pw[i] * (depth + 1.0) / (zero_fraction * (depth - i))
    for i in range(path_index, depth):
        pfi[i] = pfi[i + 1]
        pz[i] = pz[i + 1]
        po[i] = po[i + 1]


def _ts_unwound_sum(pz, po, pw, depth, path_index):
    one_fraction = po[path_index]
    zero_fraction = pz[path_index]
    next_one = pw[depth]
    total = 0.0
    if one_fraction != 0.0:
        for i in range(depth - 1, -1, -1):
            tmp = next_one * (depth + 1.0) / ((i + 1.0) * one_fraction)
            total += tmp
            next_one = pw[i] - tmp * zero_fraction * (depth - i) / (depth + 1.0)
    else:
        for i in range(depth - 1, -1, -1):
            total += pw[i] / (zero_fraction * (depth - i) / (depth + 1.0))
    return total


def _ts_recurse(children_left, children_right, feature, threshold, cover, value,
                x, phi, node, pfi_in, pz_in, po_in, pw_in, depth,
                parent_zero_fraction, parent_one_fraction, parent_feature_index):
    pfi = np.empty(depth + 1, dtype=np.int64)
    pz = np.empty(depth + 1, dtype=np.float64)
    po = np.empty(depth + 1, dtype=np.float64)
    pw = np.empty(depth + 1, dtype=np.float64)
    for i in range(depth):
        pfi[i] = pfi_in[i]
        pz[i] = pz_in[i]
        po[i] = po_in[i]
        pw[i] = pw_in[i]
    _ts_extend(pfi, pz, po, pw, depth, parent_zero_fraction, parent_one_fraction,
               parent_feature_index)
    if children_left[node] < 0:
        leaf_v = value[node]
        for i in range(1, depth + 1):
            w = _ts_unwound_sum(pz, po, pw, depth, i)
            phi[pfi[i]] += w * (po[i] - pz[i]) * leaf_v
    else:
        f = feature[node]
        if x[f] <= threshold[node]:
            hot = children_left[node]
            cold = children_right[node]
        else:
            hot = children_right[node]
            cold = children_left[node]
        hot_zero = cover[hot] / cover[node]
        cold_zero = cover[cold] / cover[node]
        incoming_zero = 1.0
        incoming_one = 1.0
        k = -1
        for i in range(1, depth + 1):
            if pfi[i] == f:
                k = i
                break
        ud = depth
        if k >= 0:
            incoming_zero = pz[k]
            incoming_one = po[k]
            _ts_unwind(pfi, pz, po, pw, ud, k)
            ud -= 1
        _ts_recurse(children_left, children_right, feature, threshold, cover, value,
                    x, phi, hot, pfi, pz, po, pw, ud + 1,
                    incoming_zero * hot_zero, incoming_one, f)
        _ts_recurse(children_left, children_right, feature, threshold, cover, value,
                    x, phi, cold, pfi, pz, po, pw, ud + 1,
                    incoming_zero * cold_zero, 0.0, f)


def _treeshap_py(children_left, children_right, feature, threshold, cover, value,
                 x, n_features):
    phi = np.zeros(n_features, dtype=np.float64)
    empty_i = np.empty(0, dtype=np.int64)
    empty_f = np.empty(0, dtype=np.float64)
    _ts_recurse(children_left, children_right, feature, threshold, cover, value,
                x, phi, 0, empty_i, empty_f, empty_f, empty_f, 0, 1.0, 1.0, -1)
    return phi


if NUMBA_ENABLED:
    _ts_extend_nb = njit(cache=True)(_ts_extend)
    _ts_unwind_nb = njit(cache=True)(_ts_unwind)
    _ts_unwound_sum_nb = njit(cache=True)(_ts_unwound_sum)

    # cache=False: numba's on-disk cache keys self-recursive functions
    # unreliably (stale entries can segfault after source edits).
    @njit(cache=False)
    def _ts_recurse_nb(children_left, children_right, feature, threshold, cover, value,
                       x, phi, node, pfi_in, pz_in, po_in, pw_in, depth,
                       parent_zero_fraction, parent_one_fraction, parent_feature_index):  # pragma: no cover
        pfi = np.empty(depth + 1, dtype=np.int64)
        pz = np.empty(depth + 1, dtype=np.float64)
        po = np.empty(depth + 1, dtype=np.float64)
        pw = np.empty(depth + 1, dtype=np.float64)
        for i in range(depth):
            pfi[i] = pfi_in[i]
            pz[i] = pz_in[i]
            po[i] = po_in[i]
            pw[i] = pw_in[i]
        _ts_extend_nb(pfi, pz, po, pw, depth, parent_zero_fraction,
                      parent_one_fraction, parent_feature_index)
        if children_left[node] < 0:
            leaf_v = value[node]
            for i in range(1, depth + 1):
                w = _ts_unwound_sum_nb(pz, po, pw, depth, i)
                phi[pfi[i]] += w * (po[i] - pz[i]) * leaf_v
        else:
            f = feature[node]
            if x[f] <= threshold[node]:
                hot = children_left[node]
                cold = children_right[node]
            else:
                hot = children_right[node]
                cold = children_left[node]
            hot_zero = cover[hot] / cover[node]
            cold_zero = cover[cold] / cover[node]
            incoming_zero = 1.0
            incoming_one = 1.0
            k = -1
            for i in range(1, depth + 1):
                if pfi[i] == f:
                    k = i
                    break
            ud = depth
            if k >= 0:
                incoming_zero = pz[k]
                incoming_one = po[k]
                _ts_unwind_nb(pfi, pz, po, pw, ud, k)
                ud -= 1
            _ts_recurse_nb(children_left, children_right, feature, threshold, cover, value,
                           x, phi, hot, pfi, pz, po, pw, ud + 1,
                           incoming_zero * hot_zero, incoming_one, f)
            _ts_recurse_nb(children_left, children_right, feature, threshold, cover, value,
                           x, phi, cold, pfi, pz, po, pw, ud + 1,
                           incoming_zero * cold_zero, 0.0, f)

    @njit(cache=False)
    def _treeshap_nb(children_left, children_right, feature, threshold, cover, value,
                     x, n_features):  # pragma: no cover
        phi = np.zeros(n_features, dtype=np.float64)
        empty_i = np.empty(0, dtype=np.int64)
        empty_f = np.empty(0, dtype=np.float64)
        _ts_recurse_nb(children_left, children_right, feature, threshold, cover, value,
                       x, phi, 0, empty_i, empty_f, empty_f, empty_f, 0, 1.0, 1.0, -1)
        return phi


# Active backend --------------------------------------------------------------

if NUMBA_ENABLED:
    best_split_gini = _best_split_gini_nb
    best_split_entropy = _best_split_entropy_nb
    route_leaves = _route_leaves_nb
    treeshap_single = _treeshap_nb
else:
    best_split_gini = _best_split_gini_py
    best_split_entropy = _best_split_entropy_py
    route_leaves = _route_leaves_py
    treeshap_single = _treeshap_py

BACKEND = "numba" if NUMBA_ENABLED else "numpy"
