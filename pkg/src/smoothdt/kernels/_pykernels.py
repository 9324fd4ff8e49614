"""Pure numpy implementations of the hot loops.

These must produce results bit-identical to the compiled versions in
``_ckernels.pyx``; both use the same adjacent-pair summation tree.
"""

import numpy as np


def pairwise_sum(values):
    """Sum a 1-d float64 array by repeated adjacent-pair reduction.

    At every level element ``k`` becomes ``a[2k] + a[2k+1]``; an odd trailing
    element is carried unchanged to the next level.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        return 0.0
    while a.size > 1:
        half = a.size // 2
        paired = a[0:2 * half:2] + a[1:2 * half:2]
        if a.size & 1:
            paired = np.append(paired, a[-1])
        a = paired
    return float(a[0])


def subset_sums(zt, y, members_list):
    """For each member tuple, return ``sum_j y[j] * prod_{i in members} zt[i, j]``.

    ``zt`` is the (n, m) transposed z matrix. Products are taken in the order
    given (callers pass ascending variable order).
    """
    out = np.empty(len(members_list), dtype=np.float64)
    for k, members in enumerate(members_list):
        col = np.array(y, dtype=np.float64)
        for i in members:
            col = col * zt[i]
        out[k] = pairwise_sum(col)
    return out


def evaluate_tree(var, neg, pos, value, X):
    """Evaluate a flattened tree on every row of ``X``.

    Node ``k`` is internal when ``var[k] >= 0``; ``neg``/``pos`` hold child
    node ids and ``value`` holds leaf outputs.
    """
    X = np.asarray(X)
    rows = np.arange(X.shape[0])
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        v = var[node]
        active = v >= 0
        if not active.any():
            break
        idx = rows[active]
        bits = X[idx, v[active]]
        node[idx] = np.where(bits > 0, pos[node[idx]], neg[node[idx]])
    return value[node].astype(np.int8)
