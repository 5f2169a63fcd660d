"""Compiled CART kernels shared by the tree-based classifiers.

Trees are stored as parallel node arrays (feature, threshold, left, right,
payload); feature -1 marks a leaf. Growing is iterative over an explicit
stack with in-place sample-index partitioning. Per-split feature
subsampling uses a 64-bit LCG so the whole procedure is reproducible from
one integer seed.
"""

import numpy as np
from numba import njit

LCG_MULT = np.uint64(6364136223846793005)
LCG_INC = np.uint64(1442695040888963407)


@njit(cache=True)
def _lcg_step(state):
    return state * LCG_MULT + LCG_INC


@njit(cache=True)
def _lcg_below(state, bound):
    """Advance the LCG and reduce to [0, bound)."""
    state = _lcg_step(state)
    return state, np.int64((state >> np.uint64(11)) % np.uint64(bound))


@njit(cache=True)
def _impurity(counts, total, criterion):
    # criterion 0 = gini, 1 = entropy
    if criterion == 0:
        acc = 1.0
        for c in range(counts.shape[0]):
            p = counts[c] / total
            acc -= p * p
        return acc
    acc = 0.0
    for c in range(counts.shape[0]):
        if counts[c] > 0:
            p = counts[c] / total
            acc -= p * np.log(p)
    return acc


@njit(cache=True)
def grow_classification_tree(
    X, y, n_classes, max_depth, min_samples_split, criterion, max_features, seed
):
    """Greedy CART over (X, y); returns the packed node arrays.

    Splits maximize impurity decrease; a node becomes a leaf when it is
    pure, too small, too deep, or no split has strictly positive gain.
    Thresholds sit halfway between adjacent distinct feature values and
    send x <= threshold to the left child.
    """
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    leaf_counts = np.zeros((cap, n_classes), np.float64)

    idx = np.arange(n)
    stack = np.empty((cap, 4), np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    state = np.uint64(seed)

    feat_order = np.arange(d)
    node_counts = np.zeros(n_classes, np.float64)
    left_counts = np.zeros(n_classes, np.float64)
    right_counts = np.zeros(n_classes, np.float64)
    vals = np.empty(n, np.float64)
    tmp = np.empty(n, np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        node_counts[:] = 0.0
        for t in range(start, end):
            node_counts[y[idx[t]]] += 1.0
        for c in range(n_classes):
            leaf_counts[node, c] = node_counts[c]

        pure = False
        for c in range(n_classes):
            if node_counts[c] == m:
                pure = True
        if pure or m < min_samples_split or depth >= max_depth:
            continue

        parent_imp = _impurity(node_counts, m, criterion)
        n_try = max_features if max_features < d else d
        if n_try < d:
            for i in range(n_try):
                state, j = _lcg_below(state, d - i)
                swap = feat_order[i]
                feat_order[i] = feat_order[i + j]
                feat_order[i + j] = swap

        best_gain = 1e-12
        best_feat = np.int64(-1)
        best_thr = 0.0
        for fi in range(n_try):
            f = feat_order[fi]
            for t in range(m):
                vals[t] = X[idx[start + t], f]
            order = np.argsort(vals[:m])
            left_counts[:] = 0.0
            nl = 0.0
            for pos in range(m - 1):
                row = idx[start + order[pos]]
                left_counts[y[row]] += 1.0
                nl += 1.0
                v_here = vals[order[pos]]
                v_next = vals[order[pos + 1]]
                if v_here == v_next:
                    continue
                nr = m - nl
                imp_l = _impurity(left_counts, nl, criterion)
                for c in range(n_classes):
                    right_counts[c] = node_counts[c] - left_counts[c]
                imp_r = _impurity(right_counts, nr, criterion)
                gain = parent_imp - (nl * imp_l + nr * imp_r) / m
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = 0.5 * (v_here + v_next)
        if best_feat < 0:
            continue

        li = start
        ri = 0
        for t in range(start, end):
            if X[idx[t], best_feat] <= best_thr:
                idx[li] = idx[t]
                li += 1
            else:
                tmp[ri] = idx[t]
                ri += 1
        for t in range(ri):
            idx[li + t] = tmp[t]

        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = li
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = n_nodes + 1
        stack[top + 1, 1] = li
        stack[top + 1, 2] = end
        stack[top + 1, 3] = depth + 1
        top += 2
        n_nodes += 2

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        leaf_counts[:n_nodes],
    )


@njit(cache=True)
def grow_regression_tree(
    X, grad, hess, max_depth, min_samples_split, hess_floor
):
    """Least-squares CART on grad with Newton leaf values grad_sum/hess_sum.

    Split gain is the increase in sum of squared means; features are always
    scanned in ascending index order.
    """
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)

    idx = np.arange(n)
    stack = np.empty((cap, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    vals = np.empty(n, np.float64)
    tmp = np.empty(n, np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        g_sum = 0.0
        h_sum = 0.0
        for t in range(start, end):
            g_sum += grad[idx[t]]
            h_sum += hess[idx[t]]
        value[node] = g_sum / (h_sum + hess_floor)

        if m < min_samples_split or depth >= max_depth:
            continue

        best_gain = 1e-12
        best_feat = np.int64(-1)
        best_thr = 0.0
        base = g_sum * g_sum / m
        for f in range(d):
            for t in range(m):
                vals[t] = X[idx[start + t], f]
            order = np.argsort(vals[:m])
            gl = 0.0
            nl = 0.0
            for pos in range(m - 1):
                gl += grad[idx[start + order[pos]]]
                nl += 1.0
                v_here = vals[order[pos]]
                v_next = vals[order[pos + 1]]
                if v_here == v_next:
                    continue
                gr = g_sum - gl
                nr = m - nl
                gain = gl * gl / nl + gr * gr / nr - base
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = 0.5 * (v_here + v_next)
        if best_feat < 0:
            continue

        li = start
        ri = 0
        for t in range(start, end):
            if X[idx[t], best_feat] <= best_thr:
                idx[li] = idx[t]
                li += 1
            else:
                tmp[ri] = idx[t]
                ri += 1
        for t in range(ri):
            idx[li + t] = tmp[t]

        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = li
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = n_nodes + 1
        stack[top + 1, 1] = li
        stack[top + 1, 2] = end
        stack[top + 1, 3] = depth + 1
        top += 2
        n_nodes += 2

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
    )


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf index reached by every row; the leaves partition the space."""
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
