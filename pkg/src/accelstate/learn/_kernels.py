"""Compiled inner loops: greedy tree induction, tree traversal, SMO.

Feature subsampling inside trees draws from splitmix64 (Steele, Lea & Flood
2014) seeded per tree, so a tree is a pure function of its inputs and seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)

SVM_TAU = 1e-12


@njit(cache=True)
def splitmix64_next(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return state, z


@njit(cache=True)
def build_tree(X, target, sample_idx, classification, max_depth, min_split, min_leaf, max_features, seed):
    """Grow one binary tree depth-first.

    ``classification`` selects Gini on a 0/1 target, otherwise squared error.
    ``max_depth < 0`` means unlimited. Candidate thresholds are midpoints of
    consecutive distinct values; equal criteria keep the lower feature index,
    then the lower threshold.

    Returns parallel node arrays (feature, threshold, left, right, value,
    n_node, impurity, decrease); ``feature == -1`` marks a leaf and
    ``decrease`` is the node-weighted impurity decrease divided by the root
    sample count.
    """
    n_total = sample_idx.shape[0]
    n_feat = X.shape[1]
    cap = 2 * n_total + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    n_node = np.zeros(cap, dtype=np.int64)
    impurity = np.zeros(cap)
    decrease = np.zeros(cap)

    work = sample_idx.copy()
    tmp = np.empty(n_total, dtype=sample_idx.dtype)
    vals = np.empty(n_total)
    svals = np.empty(n_total)
    stgt = np.empty(n_total)
    pool = np.arange(n_feat)
    cand = np.empty(n_feat, dtype=np.int64)
    k = max_features if 0 < max_features < n_feat else n_feat
    rng = np.uint64(seed)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_total
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        cnt = end - start

        s = 0.0
        ss = 0.0
        tmin = np.inf
        tmax = -np.inf
        for q in range(start, end):
            v = target[work[q]]
            s += v
            ss += v * v
            if v < tmin:
                tmin = v
            if v > tmax:
                tmax = v
        mean = s / cnt
        if classification:
            imp = 2.0 * mean * (1.0 - mean)
        else:
            imp = ss / cnt - mean * mean
            if imp < 0.0:
                imp = 0.0
        value[node] = mean
        n_node[node] = cnt
        impurity[node] = imp

        if (max_depth >= 0 and depth >= max_depth) or cnt < min_split or cnt < 2 * min_leaf or tmin == tmax:
            continue

        # candidate features
        if k < n_feat:
            for q in range(n_feat):
                pool[q] = q
            for q in range(k):
                rng, r = splitmix64_next(rng)
                pick = q + np.int64(r % np.uint64(n_feat - q))
                tmpf = pool[q]
                pool[q] = pool[pick]
                pool[pick] = tmpf
            cand[:k] = np.sort(pool[:k])
        else:
            for q in range(n_feat):
                cand[q] = q

        best_crit = np.inf
        best_f = -1
        best_thr = 0.0
        best_nl = 0
        for ci in range(k):
            f = cand[ci]
            for q in range(cnt):
                vals[q] = X[work[start + q], f]
            order = np.argsort(vals[:cnt], kind="mergesort")
            for q in range(cnt):
                svals[q] = vals[order[q]]
                stgt[q] = target[work[start + order[q]]]
            if svals[0] == svals[cnt - 1]:
                continue
            sl = 0.0
            for q in range(cnt - 1):
                sl += stgt[q]
                nl = q + 1
                nr = cnt - nl
                if svals[q] == svals[q + 1]:
                    continue
                if nl < min_leaf or nr < min_leaf:
                    continue
                sr = s - sl
                if classification:
                    crit = 2.0 * sl * (nl - sl) / nl + 2.0 * sr * (nr - sr) / nr
                else:
                    crit = -(sl * sl / nl + sr * sr / nr)
                if crit < best_crit:
                    best_crit = crit
                    best_f = f
                    best_nl = nl
                    mid = 0.5 * (svals[q] + svals[q + 1])
                    if mid >= svals[q + 1] or not np.isfinite(mid):
                        mid = svals[q]
                    best_thr = mid
        if best_f < 0:
            continue

        # partition work[start:end] by the winning feature (stable)
        for q in range(cnt):
            vals[q] = X[work[start + q], best_f]
        order = np.argsort(vals[:cnt], kind="mergesort")
        for q in range(cnt):
            tmp[q] = work[start + order[q]]
        for q in range(cnt):
            work[start + q] = tmp[q]

        if classification:
            child = best_crit
        else:
            # SSE of children = ss - (sl^2/nl + sr^2/nr)
            child = ss + best_crit
        decrease[node] = (cnt * imp - child) / n_total
        if decrease[node] < 0.0:
            decrease[node] = 0.0

        feature[node] = best_f
        threshold[node] = best_thr
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        mid_idx = start + best_nl
        # right pushed first so the left child is expanded next
        st_node[sp] = rid
        st_start[sp] = mid_idx
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lid
        st_start[sp] = start
        st_end[sp] = mid_idx
        st_depth[sp] = depth + 1
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        n_node[:n_nodes].copy(),
        impurity[:n_nodes].copy(),
        decrease[:n_nodes].copy(),
    )


@njit(cache=True)
def apply_tree(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@njit(cache=True)
def dual_objective(alpha, G):
    # D = sum(a) - 1/2 a'Qa, with G = Qa - 1
    return -0.5 * (np.dot(alpha, G) - np.sum(alpha))


@njit(cache=True)
def smo_solve(Q, y, C, eps, max_iter, record_every):
    """Second-order working-set SMO for the soft-margin SVM dual.

    Minimises ``1/2 a'Qa - sum(a)`` subject to ``0 <= a <= C`` and
    ``y'a = 0`` with ``Q[i, j] = y_i y_j K(x_i, x_j)``. Stops when the
    maximal KKT violation ``m(a) - M(a)`` drops below ``eps``.

    Returns ``(alpha, rho, iterations, converged, objective_trace)``; the
    trace holds the dual objective every ``record_every`` iterations
    (empty when ``record_every <= 0``).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    QD = np.empty(n)
    for t in range(n):
        QD[t] = Q[t, t]
    n_trace = max_iter // record_every + 2 if record_every > 0 else 0
    trace = np.empty(n_trace)
    n_rec = 0
    if record_every > 0:
        trace[0] = 0.0
        n_rec = 1
    it = 0
    converged = False
    while True:
        Gmax = -np.inf
        Gmax2 = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C:
                    if -G[t] >= Gmax:
                        Gmax = -G[t]
                        i = t
            else:
                if alpha[t] > 0:
                    if G[t] >= Gmax:
                        Gmax = G[t]
                        i = t
        j = -1
        obj_min = np.inf
        for t in range(n):
            if y[t] > 0:
                if alpha[t] > 0:
                    grad_diff = Gmax + G[t]
                    if G[t] >= Gmax2:
                        Gmax2 = G[t]
                    if grad_diff > 0 and i >= 0:
                        quad = QD[i] + QD[t] - 2.0 * y[i] * Q[i, t]
                        if quad <= 0:
                            quad = SVM_TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
            else:
                if alpha[t] < C:
                    grad_diff = Gmax - G[t]
                    if -G[t] >= Gmax2:
                        Gmax2 = -G[t]
                    if grad_diff > 0 and i >= 0:
                        quad = QD[i] + QD[t] + 2.0 * y[i] * Q[i, t]
                        if quad <= 0:
                            quad = SVM_TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
        if Gmax + Gmax2 < eps or j == -1 or i == -1:
            converged = True
            break
        if it >= max_iter:
            break

        old_ai = alpha[i]
        old_aj = alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = SVM_TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = SVM_TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(n):
            G[t] += Q[i, t] * dai + Q[j, t] * daj
        it += 1
        if record_every > 0 and it % record_every == 0:
            trace[n_rec] = dual_objective(alpha, G)
            n_rec += 1

    if record_every > 0:
        trace[n_rec] = dual_objective(alpha, G)
        n_rec += 1

    # rho: mean of y*G over free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(n):
        yG = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            n_free += 1
            sum_free += yG
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, it, converged, trace[:n_rec].copy()
