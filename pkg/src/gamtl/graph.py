"""Graph primitives shared by the solvers.

A task graph is a dense symmetric ``(T, T)`` adjacency matrix with zero
diagonal and nonnegative off-diagonal weights.  Solvers work on the strict
upper triangle flattened row-major into an edge vector of length
``T*(T-1)/2``; the degree operator maps that vector to per-node degrees and
is only ever applied edge-wise, never materialized.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "validate_adjacency",
    "pairwise_sq_distances",
    "laplacian",
    "smoothness",
    "vectorform",
    "matrixform",
    "apply_degree_operator",
    "degree_adjoint",
    "edge_endpoints",
    "num_edges",
    "num_nodes_from_edges",
]


def num_edges(n_nodes: int) -> int:
    """Number of undirected edges on ``n_nodes`` nodes (strict upper triangle)."""
    return n_nodes * (n_nodes - 1) // 2


def num_nodes_from_edges(n_edges: int) -> int:
    """Invert ``num_edges``; raises if ``n_edges`` is not triangular."""
    n = int(round((1.0 + np.sqrt(1.0 + 8.0 * n_edges)) / 2.0))
    if num_edges(n) != n_edges:
        raise ValueError(f"edge vector length {n_edges} is not T*(T-1)/2 for any integer T")
    return n


@lru_cache(maxsize=None)
def edge_endpoints(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint index arrays ``(I, J)`` of the row-major strict upper triangle."""
    i, j = np.triu_indices(n_nodes, k=1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def validate_adjacency(A: np.ndarray) -> np.ndarray:
    """Check that ``A`` is a valid weighted adjacency matrix.

    Valid means: square with at least two nodes, finite, exactly symmetric,
    zero diagonal, and nonnegative off-diagonal entries.  Returns ``A``
    unchanged so calls can be chained.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {A.shape}")
    if A.shape[0] < 2:
        raise ValueError("adjacency needs at least 2 nodes")
    if not np.isfinite(A).all():
        raise ValueError("adjacency contains non-finite entries")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency is not symmetric")
    if np.any(np.diagonal(A) != 0.0):
        raise ValueError("adjacency diagonal must be zero")
    if np.any(A < 0.0):
        raise ValueError("adjacency has negative edge weights")
    return A


def pairwise_sq_distances(W: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between the columns of ``W``.

    Parameters
    ----------
    W : ndarray, shape (d, T)
        Per-task parameter vectors stacked as columns, T >= 2.

    Returns
    -------
    ndarray, shape (T, T)
        ``Z[i, j] = ||W[:, i] - W[:, j]||^2``.  Exactly symmetric with a
        zero diagonal (computed from explicit column differences, not the
        Gram-matrix shortcut, so no cancellation can drive entries
        negative).
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValueError(f"weight matrix must be 2-d, got shape {W.shape}")
    if W.shape[1] < 2:
        raise ValueError("need at least 2 task columns")
    if not np.isfinite(W).all():
        raise ValueError("weight matrix contains non-finite entries")
    diff = W[:, :, None] - W[:, None, :]
    return np.einsum("dij,dij->ij", diff, diff)


def laplacian(A: np.ndarray) -> np.ndarray:
    """Combinatorial Laplacian ``L = D - A`` with ``D = diag(A @ 1)``."""
    A = validate_adjacency(A)
    L = -A.copy()
    np.fill_diagonal(L, A.sum(axis=1))
    return L


def smoothness(W: np.ndarray, A: np.ndarray, form: str = "hadamard") -> float:
    """Weighted sum of squared parameter distances across edges.

    Three equivalent computations are exposed for cross-checking:

    - ``"hadamard"``: ``sum(A * Z)`` with ``Z`` from
      :func:`pairwise_sq_distances` (the default),
    - ``"double_sum"``: explicit loop over ordered node pairs,
    - ``"trace"``: ``2 * tr(W L W^T)`` through the Laplacian.

    All count each undirected edge twice, matching the neighbor-sum
    convention of the joint objective.
    """
    W = np.asarray(W, dtype=float)
    A = validate_adjacency(A)
    if W.ndim != 2 or W.shape[1] != A.shape[0]:
        raise ValueError(
            f"dimension mismatch: W has shape {W.shape}, adjacency has {A.shape[0]} nodes"
        )
    if form == "hadamard":
        return float(np.sum(A * pairwise_sq_distances(W)))
    if form == "double_sum":
        total = 0.0
        T = A.shape[0]
        for i in range(T):
            for j in range(T):
                d = W[:, i] - W[:, j]
                total += A[i, j] * float(d @ d)
        return total
    if form == "trace":
        L = laplacian(A)
        return 2.0 * float(np.sum((W @ L) * W))
    raise ValueError(f"unknown smoothness form {form!r}")


def vectorform(A: np.ndarray) -> np.ndarray:
    """Strict upper triangle of ``A`` flattened row-major."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    i, j = edge_endpoints(A.shape[0])
    return A[i, j].copy()


def matrixform(w: np.ndarray) -> np.ndarray:
    """Symmetric zero-diagonal matrix whose upper triangle is ``w``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError(f"edge vector must be 1-d, got shape {w.shape}")
    T = num_nodes_from_edges(w.size)
    A = np.zeros((T, T))
    i, j = edge_endpoints(T)
    A[i, j] = w
    A[j, i] = w
    return A


def apply_degree_operator(w: np.ndarray, n_nodes: int | None = None) -> np.ndarray:
    """Degree vector ``S w`` (each edge contributes to both endpoints)."""
    w = np.asarray(w, dtype=float)
    T = num_nodes_from_edges(w.size) if n_nodes is None else n_nodes
    if w.size != num_edges(T):
        raise ValueError(f"edge vector length {w.size} does not match {T} nodes")
    i, j = edge_endpoints(T)
    return np.bincount(i, weights=w, minlength=T) + np.bincount(j, weights=w, minlength=T)


def degree_adjoint(v: np.ndarray) -> np.ndarray:
    """Adjoint ``S^T v``: per edge, the sum of its endpoint values."""
    v = np.asarray(v, dtype=float)
    i, j = edge_endpoints(v.size)
    return v[i] + v[j]
