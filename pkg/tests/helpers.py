"""Shared dataset builders and independent oracles used across tests.

Oracles are deliberately written as literal loops over the metric and
optimality definitions so they stay independent of the library's
vectorized implementations.
"""

from __future__ import annotations

import numpy as np

from pmltk import Dataset


def fix_label_rows(T, rng):
    """Force every row to carry between 1 and l-1 labels."""
    l = T.shape[1]
    for i in range(T.shape[0]):
        if T[i].sum() == 0:
            T[i, rng.integers(l)] = 1
        if T[i].sum() == l:
            T[i, rng.integers(l)] = 0
    return T


def random_dataset(n=30, d=5, l=4, seed=0, density=0.3):
    """Unstructured dataset with valid label rows; truth equals candidates."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    T = (rng.random((n, l)) < density).astype(np.int8)
    T = fix_label_rows(T, rng)
    return Dataset(X, T, T)


def clustered_dataset(n=60, d=6, l=5, groups=4, seed=0, scale=0.25):
    """Separable dataset: tight clusters sharing a label set per cluster."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(groups, d)) * 4.0
    label_sets = np.zeros((groups, l), dtype=np.int8)
    for g in range(groups):
        size = int(rng.integers(1, min(3, l - 1) + 1))
        label_sets[g, rng.choice(l, size=size, replace=False)] = 1
    gid = rng.integers(groups, size=n)
    X = centers[gid] + rng.normal(size=(n, d)) * scale
    return Dataset(X, label_sets[gid].copy(), label_sets[gid].copy())


def brute_force_knn(X, k):
    """O(n^2) neighbor scan; ties broken toward the smaller index."""
    n = len(X)
    out = []
    for i in range(n):
        scored = []
        for j in range(n):
            if j == i:
                continue
            dist = sum((float(X[i][t]) - float(X[j][t])) ** 2 for t in range(len(X[i])))
            scored.append((dist, j))
        scored.sort()
        out.append([j for _, j in scored[:k]])
    return np.array(out, dtype=np.int64)


def nnls_kkt_residual(A, b, v):
    """Worst KKT violation of ``min ||Av-b||^2 s.t. v >= 0`` at v."""
    grad = 2.0 * A.T @ (A @ v - b)
    worst = 0.0
    for j in range(len(v)):
        if v[j] > 0:
            worst = max(worst, abs(grad[j]))
        else:
            worst = max(worst, max(0.0, -grad[j]))
    return worst


def nnls_objective(A, b, v):
    r = A @ v - b
    return float(r @ r)


def svt_objective(B, M, t):
    """Proximal objective the thresholding operator is supposed to minimize."""
    sing = np.linalg.svd(B, compute_uv=False)
    return float(t * sing.sum() + 0.5 * ((B - M) ** 2).sum())


def brute_force_metrics(scores, labels, truth):
    """All seven metrics by direct enumeration; returns a plain dict."""
    m, l = scores.shape
    sacc = sum(
        1 for i in range(m) if all(labels[i][j] == truth[i][j] for j in range(l))
    ) / m
    hl = sum(
        1 for i in range(m) for j in range(l) if labels[i][j] != truth[i][j]
    ) / (m * l)

    oerr, rloss, ap = [], [], []
    skipped = 0
    for i in range(m):
        rel = [j for j in range(l) if truth[i][j] == 1]
        irr = [j for j in range(l) if truth[i][j] == 0]
        if not rel or not irr:
            skipped += 1
            continue
        best = max(range(l), key=lambda j: (scores[i][j], -j))
        oerr.append(0.0 if best in rel else 1.0)
        violations = sum(
            1 for u in rel for v in irr if scores[i][u] <= scores[i][v]
        )
        rloss.append(violations / (len(rel) * len(irr)))
        order = sorted(range(l), key=lambda j: (-scores[i][j], j))
        rank = {j: p + 1 for p, j in enumerate(order)}
        total = 0.0
        for u in rel:
            above = sum(1 for v in rel if rank[v] <= rank[u])
            total += above / rank[u]
        ap.append(total / len(rel))

    per_label = []
    for j in range(l):
        tp = sum(1 for i in range(m) if labels[i][j] == 1 and truth[i][j] == 1)
        fp = sum(1 for i in range(m) if labels[i][j] == 1 and truth[i][j] == 0)
        fn = sum(1 for i in range(m) if labels[i][j] == 0 and truth[i][j] == 1)
        denom = 2 * tp + fp + fn
        per_label.append(2 * tp / denom if denom > 0 else 0.0)
    tp = sum(1 for i in range(m) for j in range(l) if labels[i][j] == 1 and truth[i][j] == 1)
    fp = sum(1 for i in range(m) for j in range(l) if labels[i][j] == 1 and truth[i][j] == 0)
    fn = sum(1 for i in range(m) for j in range(l) if labels[i][j] == 0 and truth[i][j] == 1)
    denom = 2 * tp + fp + fn

    return {
        "saccuracy": sacc,
        "hloss": hl,
        "oerror": float(np.mean(oerr)) if oerr else 0.0,
        "rloss": float(np.mean(rloss)) if rloss else 0.0,
        "ap": float(np.mean(ap)) if ap else 0.0,
        "macro_f1": float(np.mean(per_label)),
        "micro_f1": 2 * tp / denom if denom > 0 else 0.0,
        "skipped_instances": skipped,
    }
