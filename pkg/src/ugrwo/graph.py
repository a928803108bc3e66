"""Mutual k-nearest-neighbour graphs over the samples of a single class.

Two samples share an edge when each is among the other's ``k`` nearest
neighbours. A vertex is kept (coefficient 1) when its degree reaches ``k``;
because a vertex can have at most ``k`` mutual neighbours this means only
vertices whose whole neighbour list is reciprocated survive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

# Upper bound on the temporary (rows, n, m) difference tensor.
_CHUNK_ELEMENTS = 1 << 22


class GraphError(ValueError):
    pass


def pairwise_sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``A`` and rows of ``B``.

    Uses explicit differences rather than the ``|a|^2 + |b|^2 - 2ab`` expansion
    so that ``d(a, b) == d(b, a)`` bit for bit and coincident points sit at
    exactly zero. Neighbour ties are then decided by index, not rounding.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise GraphError(f"incompatible shapes {A.shape} and {B.shape}")
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _CHUNK_ELEMENTS // max(1, B.shape[0] * B.shape[1]))
    for start in range(0, A.shape[0], step):
        diff = A[start:start + step, None, :] - B[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=out[start:start + step])
    return out


def nearest(dists: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row, lower index first on ties."""
    # stable sort keeps equal distances in index order
    return np.argsort(dists, axis=1, kind="stable")[:, :k]


def _check(points: np.ndarray, k: int) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise GraphError(f"points must be a 2-D array, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise GraphError(f"need at least 2 points for a neighbour graph, got {n}")
    if not 1 <= k <= n - 1:
        raise GraphError(f"k must lie in [1, {n - 1}] for {n} points, got {k}")
    return X


def knn_lists(points: np.ndarray, k: int) -> np.ndarray:
    """(n, k) array; row ``i`` lists the ``k`` nearest other points of ``i``."""
    X = _check(points, k)
    D = pairwise_sq_dists(X, X)
    np.fill_diagonal(D, np.inf)
    return nearest(D, k)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric 0/1 adjacency (edge weight fixed to 1) with its ``k``."""

    k: int
    adjacency: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def write_edges(self, fh) -> None:
        """Dump the edge list as ``i,j`` rows with ``i < j``."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("i", "j"))
        writer.writerows(self.edges())


def mutual_adjacency(points: np.ndarray, k: int) -> AdjacencyGraph:
    neighbours = knn_lists(points, k)
    n = neighbours.shape[0]
    member = np.zeros((n, n), dtype=bool)
    member[np.repeat(np.arange(n), k), neighbours.ravel()] = True
    adjacency = member & member.T
    adjacency.setflags(write=False)
    return AdjacencyGraph(k=k, adjacency=adjacency)


def keep_coefficients(g: AdjacencyGraph) -> np.ndarray:
    """0/1 vector: 1 where the vertex degree is at least ``k``."""
    return (g.degrees >= g.k).astype(np.int8)


def select_dense(points: np.ndarray, k: int) -> np.ndarray:
    """Indices of the points whose keep coefficient is 1."""
    return np.flatnonzero(keep_coefficients(mutual_adjacency(points, k)))
