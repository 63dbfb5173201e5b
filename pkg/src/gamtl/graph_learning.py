"""Learning a sparse task graph from pairwise parameter distances.

Solves, over valid adjacency matrices ``A`` (symmetric, zero diagonal,
nonnegative),

    minimize  sum(A * Z) - alpha * sum(log(A @ 1)) + beta * ||A||_F^2

The log barrier on the degree vector keeps every node connected without
forbidding individual edges from vanishing; the Frobenius term controls how
evenly the remaining weight spreads.  The problem is strictly convex on the
edge vector, so the minimizer is unique and the initial graph only affects
iteration count.

The solver is a forward-backward-forward primal-dual iteration on the edge
vector ``w`` (primal) and the degree vector (dual).  Both proximal steps are
closed-form: a shifted nonnegativity clip on the primal and the root of a
scalar quadratic for the barrier's conjugate on the dual.  Non-smooth
coupling happens only through the degree operator, applied edge-wise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import (
    apply_degree_operator,
    degree_adjoint,
    matrixform,
    validate_adjacency,
    vectorform,
)

__all__ = [
    "GraphLearningParams",
    "GraphSolveReport",
    "graph_objective",
    "learn_graph",
    "default_initial_graph",
]


@dataclass(frozen=True)
class GraphLearningParams:
    """Hyperparameters of the graph subproblem.

    ``alpha`` scales the log-degree barrier, ``beta`` the squared Frobenius
    penalty.  ``step`` is the primal-dual step size; ``None`` selects it
    automatically as the smaller of ``0.5 / (1 + max initial degree)`` and
    the stability bound ``0.9 / (4 * beta + ||S||)`` of the splitting
    scheme, where ``S`` is the degree operator.  ``tol`` is the relative
    iterate-change threshold applied to both primal and dual variables.
    """

    alpha: float = 1.0
    beta: float = 1.0
    step: float | None = None
    tol: float = 1e-6
    max_iter: int = 10000

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.step is not None and self.step <= 0.0:
            raise ValueError("step must be positive")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tol must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class GraphSolveReport:
    """Convergence record of one :func:`learn_graph` call."""

    iterations: int
    converged: bool
    final_relative_change: float
    objective_trace: np.ndarray = field(repr=False)


def _validate_distances(Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {Z.shape}")
    if Z.shape[0] < 2:
        raise ValueError("distance matrix needs at least 2 tasks")
    if not np.isfinite(Z).all():
        raise ValueError("distance matrix contains non-finite entries")
    if not np.array_equal(Z, Z.T):
        raise ValueError("distance matrix is not symmetric")
    if np.any(np.diagonal(Z) != 0.0):
        raise ValueError("distance matrix diagonal must be zero")
    if np.any(Z < 0.0):
        raise ValueError("distance matrix has negative entries")
    return Z


def graph_objective(A: np.ndarray, Z: np.ndarray, params: GraphLearningParams) -> float:
    """Graph subproblem objective at ``A``; degrees must be strictly positive."""
    A = validate_adjacency(A)
    Z = _validate_distances(Z)
    if A.shape != Z.shape:
        raise ValueError(f"shape mismatch: A {A.shape} vs Z {Z.shape}")
    degrees = A.sum(axis=1)
    if np.any(degrees <= 0.0):
        raise ValueError("graph objective undefined: some node has zero degree")
    return (
        float(np.sum(A * Z))
        - params.alpha * float(np.sum(np.log(degrees)))
        + params.beta * float(np.sum(A * A))
    )


def _edge_objective(w: np.ndarray, z: np.ndarray, alpha: float, beta: float, T: int) -> float:
    """Objective on the edge vector; +inf outside the barrier's domain."""
    deg = apply_degree_operator(w, T)
    if np.any(deg <= 0.0):
        return np.inf
    return 2.0 * float(z @ w) - alpha * float(np.sum(np.log(deg))) + 2.0 * beta * float(w @ w)


def default_initial_graph(Z: np.ndarray) -> np.ndarray:
    """Fully connected warm start with similarity weights ``exp(-Z / mean(Z))``.

    Distances must be turned into similarities here: positive weights on
    every edge guarantee the positive degrees the barrier needs, and closer
    task pairs start with stronger edges.  When all distances are zero the
    weights are uniformly 1.
    """
    Z = _validate_distances(Z)
    z = vectorform(Z)
    scale = float(z.mean())
    w0 = np.exp(-z / scale) if scale > 0.0 else np.ones_like(z)
    return matrixform(w0)


def learn_graph(
    Z: np.ndarray,
    params: GraphLearningParams,
    A0: np.ndarray | None = None,
) -> tuple[np.ndarray, GraphSolveReport]:
    """Minimize the graph objective over valid adjacency matrices.

    Parameters
    ----------
    Z : ndarray, shape (T, T)
        Pairwise squared distances (already scaled by any outer coupling
        weight).
    params : GraphLearningParams
    A0 : ndarray, optional
        Warm start; must be a valid adjacency with strictly positive
        degrees.  Defaults to :func:`default_initial_graph`.

    Returns
    -------
    (A, report)
        ``A`` is the best feasible iterate found (the proximal-step output,
        so nonnegativity and positive degrees hold exactly).  If the
        relative-change test never fires within ``max_iter`` the report is
        flagged ``converged=False`` and ``A`` is still the best iterate
        seen.  ``report.objective_trace[k]`` is the objective of the
        incumbent after iteration ``k+1``; it is non-increasing and starts
        no higher than the objective at ``A0``.
    """
    Z = _validate_distances(Z)
    T = Z.shape[0]
    if A0 is None:
        A0 = default_initial_graph(Z)
    else:
        A0 = validate_adjacency(A0)
        if A0.shape != Z.shape:
            raise ValueError(f"warm start shape {A0.shape} does not match Z {Z.shape}")
        if np.any(A0.sum(axis=1) <= 0.0):
            raise ValueError("warm start must have strictly positive degrees")

    alpha, beta = params.alpha, params.beta
    z = vectorform(Z)
    w = vectorform(A0)
    degrees0 = apply_degree_operator(w, T)
    # Dual warm start at the barrier-consistent value for A0: at any optimum
    # the dual equals -alpha/degree, so a warm-started solve (A0 near the
    # previous optimum) begins with both variables near their fixed point.
    v = -alpha / degrees0

    if params.step is not None:
        step = params.step
    else:
        operator_norm = np.sqrt(2.0 * (T - 1))
        step = min(
            0.5 / (1.0 + float(degrees0.max())),
            0.9 / (4.0 * beta + operator_norm),
        )

    best_w = w.copy()
    best_obj = _edge_objective(w, z, alpha, beta, T)
    trace = []
    rel_change = np.inf
    iterations = 0
    converged = False

    for iterations in range(1, params.max_iter + 1):
        y = w - step * (4.0 * beta * w + degree_adjoint(v))
        y_dual = v + step * apply_degree_operator(w, T)
        p = np.maximum(y - 2.0 * step * z, 0.0)
        p_dual = 0.5 * (y_dual - np.sqrt(y_dual * y_dual + 4.0 * alpha * step))
        q = p - step * (4.0 * beta * p + degree_adjoint(p_dual))
        q_dual = p_dual + step * apply_degree_operator(p, T)
        w_next = w - y + q
        v_next = v - y_dual + q_dual

        obj = _edge_objective(p, z, alpha, beta, T)
        if obj < best_obj:
            best_obj = obj
            best_w = p
        trace.append(best_obj)

        norm_w = float(np.linalg.norm(w))
        norm_v = float(np.linalg.norm(v))
        rel_primal = float(np.linalg.norm(w_next - w)) / max(norm_w, 1e-300)
        rel_dual = float(np.linalg.norm(v_next - v)) / max(norm_v, 1e-300)
        rel_change = max(rel_primal, rel_dual)
        w, v = w_next, v_next
        if rel_change <= params.tol:
            converged = True
            break

    report = GraphSolveReport(
        iterations=iterations,
        converged=converged,
        final_relative_change=rel_change,
        objective_trace=np.asarray(trace),
    )
    return matrixform(best_w), report
