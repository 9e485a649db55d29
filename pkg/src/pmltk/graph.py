"""Weighted k-nearest-neighbor graph with reconstruction weights.

Each instance is expressed as a non-negative combination of its k
nearest neighbors (Euclidean distance, brute force by design at desk
scale). The per-instance weights solve a non-negative least squares
problem via an exact active-set method, then rows are normalized to
sum to one, yielding the propagation weight matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigError, NumericError, ShapeError, ValidationError

#: Row sums at or below this are treated as degenerate during normalization.
DEGENERATE_ROW_SUM = 1e-12


@dataclass(frozen=True)
class KnnConfig:
    k: int = 10
    distance: str = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"neighbor count must be >= 1, got {self.k}")
        if self.distance != "euclidean":
            raise ConfigError(f"unsupported distance {self.distance!r}")


@dataclass(frozen=True)
class WeightGraph:
    """Neighbor lists plus aligned reconstruction weights.

    ``neighbors[i]`` holds the k neighbor indices of instance i (never
    including i itself) and ``weights[i]`` the matching non-negative
    weights. After :func:`normalize_rows` every weight row sums to one.
    """

    neighbors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nb = np.asarray(self.neighbors, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if nb.ndim != 2 or nb.shape != w.shape:
            raise ShapeError(
                f"neighbors {nb.shape} and weights {w.shape} must be equal 2-d shapes"
            )
        n = nb.shape[0]
        if (nb < 0).any() or (nb >= n).any():
            raise ValidationError("neighbor index out of range")
        if (nb == np.arange(n)[:, None]).any():
            raise ValidationError("self-loops are not allowed")
        if (w < 0).any():
            raise ValidationError("weights must be non-negative")
        object.__setattr__(self, "neighbors", nb)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]

    def matrix(self) -> sparse.csr_matrix:
        """The n x n weight matrix in CSR form (row-sparse, k entries per row)."""
        n, k = self.neighbors.shape
        indptr = np.arange(0, n * k + 1, k)
        return sparse.csr_matrix(
            (self.weights.ravel(), self.neighbors.ravel(), indptr), shape=(n, n)
        )

    def dumps(self) -> str:
        """Debug text form, one ``i: j=w j=w ...`` line per instance."""
        lines = []
        for i in range(self.n):
            pairs = " ".join(
                f"{int(j)}={float(w)!r}"
                for j, w in zip(self.neighbors[i], self.weights[i])
            )
            lines.append(f"{i}: {pairs}")
        return "\n".join(lines) + "\n"


def build_knn(X: np.ndarray, cfg: KnnConfig) -> np.ndarray:
    """Neighbor lists: for each row the k nearest other rows.

    Distance ties are broken toward the smaller index, which makes the
    result deterministic and lets duplicated rows resolve predictably.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if cfg.k >= n:
        raise ConfigError(f"k={cfg.k} must be smaller than the instance count {n}")
    neighbors = np.empty((n, cfg.k), dtype=np.int64)
    for i in range(n):
        diff = X - X[i]
        d2 = np.einsum("ij,ij->i", diff, diff)
        d2[i] = np.inf
        # stable sort keeps ascending index order among exact ties
        neighbors[i] = np.argsort(d2, kind="stable")[: cfg.k]
    return neighbors


def nnls(A: np.ndarray, b: np.ndarray, tol: float = 1e-10, max_iter: int | None = None) -> np.ndarray:
    """Exact active-set non-negative least squares.

    Minimizes ``||A v - b||**2`` subject to ``v >= 0``. On return the
    KKT conditions hold up to roundoff: coordinates in the passive set
    satisfy the unconstrained normal equations, coordinates pinned at
    zero have gradient ``>= -2*tol``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ShapeError(f"incompatible shapes A{A.shape}, b{b.shape}")
    if not np.isfinite(A).all() or not np.isfinite(b).all():
        raise NumericError("non-finite input to nnls")
    k = A.shape[1]
    if max_iter is None:
        max_iter = 3 * k + 10
    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)

    def least_squares_on_passive():
        cols = np.flatnonzero(passive)
        z = np.zeros(k)
        sol, *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
        z[cols] = sol
        return z

    for _ in range(max_iter):
        w = A.T @ (b - A @ x)
        w[passive] = -np.inf
        j = int(np.argmax(w))  # ties resolve to the smaller index
        if w[j] <= tol:
            break
        passive[j] = True
        z = least_squares_on_passive()
        while True:
            blocking = passive & (z <= 0.0)
            if not blocking.any():
                break
            denom = x[blocking] - z[blocking]
            steps = np.where(denom > 0.0, x[blocking] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = float(steps.min())
            x = x + alpha * (z - x)
            x[blocking] = np.where(steps == alpha, 0.0, x[blocking])
            passive &= x > 0.0
            z = least_squares_on_passive()
        x = z
    return x


def solve_weights(x: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """Non-negative weights reconstructing ``x`` from the given neighbor rows."""
    nb = np.asarray(neighbors, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if nb.ndim != 2 or x.ndim != 1 or nb.shape[1] != x.shape[0]:
        raise ShapeError(f"incompatible shapes: x{x.shape}, neighbors{nb.shape}")
    return nnls(nb.T, x)


def normalize_rows(neighbors: np.ndarray, raw_weights: np.ndarray) -> WeightGraph:
    """Scale each weight row to sum to one.

    Rows whose sum is at most ``DEGENERATE_ROW_SUM`` (all neighbors
    anti-correlated, so every raw weight is zero) fall back to uniform
    1/k weights over the neighbor list.
    """
    w = np.asarray(raw_weights, dtype=np.float64)
    if (w < 0).any():
        raise ValidationError("raw weights must be non-negative")
    sums = w.sum(axis=1, keepdims=True)
    degenerate = sums[:, 0] <= DEGENERATE_ROW_SUM
    normalized = w / np.where(degenerate[:, None], 1.0, sums)
    if degenerate.any():
        normalized[degenerate] = 1.0 / w.shape[1]
    return WeightGraph(neighbors, normalized)


def build_graph(X: np.ndarray, cfg: KnnConfig) -> WeightGraph:
    """End to end: neighbor search, per-instance weight solve, row normalization."""
    X = np.asarray(X, dtype=np.float64)
    if not np.isfinite(X).all():
        raise NumericError("non-finite feature matrix")
    neighbors = build_knn(X, cfg)
    raw = np.empty_like(neighbors, dtype=np.float64)
    for i in range(X.shape[0]):
        raw[i] = solve_weights(X[i], X[neighbors[i]])
    return normalize_rows(neighbors, raw)
