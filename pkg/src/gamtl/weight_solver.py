"""Graph-regularized least squares for the per-task weight vectors.

With the task graph ``A`` held fixed, the joint objective is quadratic in the
stacked weight vector ``v = [w_1; ...; w_T]`` and its minimizer solves

    (C + gamma * B + mu * I) v = rhs

where ``C`` is the block diagonal of the per-task Gram matrices ``X_t X_t^T``,
``B = 2 (L kron I_d)`` couples tasks through the graph Laplacian ``L`` (the
factor 2 because the smoothness term counts each undirected edge twice), and
``rhs`` stacks ``X_t y_t``.  A small ridge ``mu`` keeps the system positive
definite when task data are rank deficient.

The system is solved by preconditioned conjugate gradient with a Jacobi
(diagonal) preconditioner.  Matrix-vector products exploit the Kronecker
structure implicitly: per-task data products plus a Laplacian product on the
task axis, never materializing the dT x dT matrix.  :func:`assemble_system`
builds the sparse matrix explicitly for small instances and tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .graph import laplacian, validate_adjacency

__all__ = [
    "TaskDataset",
    "validate_tasks",
    "ridge_independent",
    "SystemAssembly",
    "assemble_system",
    "WeightSolveReport",
    "solve_weights",
]

# Relative size of the automatic ridge floor; see ridge_floor().
RIDGE_FLOOR_SCALE = 1e-8


@dataclass(frozen=True)
class TaskDataset:
    """One task: design matrix ``X`` (d x N, columns are samples), targets ``y``.

    ``N = 0`` is allowed here so that pure-regularizer systems can be
    assembled; collections entering a fit must pass :func:`validate_tasks`,
    which requires at least one sample per task.
    """

    task_id: int
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"task {self.task_id}: X must be 2-d, got ndim={X.ndim}")
        if y.ndim != 1:
            raise ValueError(f"task {self.task_id}: y must be 1-d, got ndim={y.ndim}")
        if X.shape[1] != y.shape[0]:
            raise ValueError(
                f"task {self.task_id}: X has {X.shape[1]} samples (columns) "
                f"but y has {y.shape[0]}"
            )
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError(f"task {self.task_id}: non-finite entries in data")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return self.X.shape[0]

    @property
    def n_samples(self) -> int:
        return self.X.shape[1]


def validate_tasks(tasks, require_samples: bool = True) -> tuple[int, int]:
    """Check a task collection for fitting; return (feature dim, task count)."""
    tasks = list(tasks)
    if len(tasks) < 2:
        raise ValueError(f"need at least 2 tasks, got {len(tasks)}")
    d = tasks[0].dim
    seen_ids = set()
    for t in tasks:
        if t.dim != d:
            raise ValueError(
                f"task {t.task_id}: feature dimension {t.dim} differs from {d}"
            )
        if require_samples and t.n_samples < 1:
            raise ValueError(f"task {t.task_id}: has no samples")
        if t.task_id in seen_ids:
            raise ValueError(f"duplicate task_id {t.task_id}")
        seen_ids.add(t.task_id)
    return d, len(tasks)


def ridge_independent(tasks, lam: float) -> np.ndarray:
    """Per-task ridge solutions, stacked as columns of a d x T matrix.

    Column t minimizes ``||X_t^T w - y_t||^2 + lam * ||w||^2``.  With
    ``lam = 0`` the normal equations must be nonsingular.
    """
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    tasks = list(tasks)
    d, T = validate_tasks(tasks)
    W = np.empty((d, T))
    for t, task in enumerate(tasks):
        G = task.X @ task.X.T + lam * np.eye(d)
        b = task.X @ task.y
        try:
            factor = scipy.linalg.cho_factor(G)
        except scipy.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"task {task.task_id}: normal equations are singular; "
                "use lam > 0 or provide full-row-rank data"
            ) from exc
        W[:, t] = scipy.linalg.cho_solve(factor, b)
    return W


@dataclass(frozen=True)
class SystemAssembly:
    """Explicit sparse form of the weight-step linear system."""

    M: sp.csr_matrix
    rhs: np.ndarray
    ridge: float


def ridge_floor(tasks, A: np.ndarray, gamma: float) -> float:
    """Automatic ridge: 1e-8 times the mean diagonal entry of C + gamma*B."""
    d = tasks[0].dim
    T = len(tasks)
    trace = sum(float(np.sum(t.X * t.X)) for t in tasks)
    trace += 2.0 * gamma * d * float(A.sum())  # trace of the Laplacian coupling
    if trace <= 0.0:
        return 1e-12
    return RIDGE_FLOOR_SCALE * trace / (d * T)


def _check_fit_inputs(tasks, A: np.ndarray, gamma: float):
    tasks = list(tasks)
    d, T = validate_tasks(tasks, require_samples=False)
    A = validate_adjacency(A)
    if A.shape[0] != T:
        raise ValueError(f"adjacency is {A.shape[0]} x {A.shape[0]} but there are {T} tasks")
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    return tasks, A, d, T


def assemble_system(tasks, A: np.ndarray, gamma: float, ridge: float | None = None) -> SystemAssembly:
    """Build the sparse dT x dT system matrix and right-hand side explicitly.

    ``ridge=None`` selects the automatic floor; pass an explicit value
    (0 allowed) to override.
    """
    tasks, A, d, T = _check_fit_inputs(tasks, A, gamma)
    if ridge is None:
        ridge = ridge_floor(tasks, A, gamma)
    elif ridge < 0.0:
        raise ValueError("ridge must be nonnegative")
    C = sp.block_diag([t.X @ t.X.T for t in tasks], format="csr")
    B = 2.0 * sp.kron(sp.csr_matrix(laplacian(A)), sp.identity(d), format="csr")
    M = (C + gamma * B + ridge * sp.identity(d * T)).tocsr()
    rhs = np.concatenate([t.X @ t.y for t in tasks])
    return SystemAssembly(M=M, rhs=rhs, ridge=ridge)


@dataclass
class WeightSolveReport:
    """Convergence record of one :func:`solve_weights` call."""

    cg_iterations: int
    converged: bool
    relative_residual: float
    ridge: float


def solve_weights(
    tasks,
    A: np.ndarray,
    gamma: float,
    solver_tol: float = 1e-8,
    max_cg_iter: int | None = None,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, WeightSolveReport]:
    """Minimize data loss plus ``gamma`` times graph smoothness over W.

    Returns ``(W, report)`` with W of shape (d, T).  The residual satisfies
    ``||M v - rhs|| <= solver_tol * ||rhs||`` on convergence; if the iteration
    budget runs out first, the last iterate is returned with
    ``report.converged = False``.
    """
    tasks, A, d, T = _check_fit_inputs(tasks, A, gamma)
    if solver_tol <= 0.0:
        raise ValueError("solver_tol must be positive")
    mu = ridge_floor(tasks, A, gamma)
    L = laplacian(A)
    coupled = gamma > 0.0 and A.any()

    xs = [t.X for t in tasks]
    ys = [t.y for t in tasks]

    def matvec(v: np.ndarray) -> np.ndarray:
        V = v.reshape(T, d)
        out = mu * V
        for t in range(T):
            out[t] += xs[t] @ (xs[t].T @ V[t])
        if coupled:
            out += (2.0 * gamma) * (L @ V)
        return out.ravel()

    diag = np.concatenate([np.einsum("ij,ij->i", X, X) + mu for X in xs])
    if coupled:
        diag += np.repeat(2.0 * gamma * A.sum(axis=1), d)
    rhs = np.concatenate([X @ y for X, y in zip(xs, ys)])

    n = d * T
    operator = LinearOperator((n, n), matvec=matvec, dtype=float)
    precond = LinearOperator((n, n), matvec=lambda r: r / diag, dtype=float)
    x0 = None
    if warm_start is not None:
        warm_start = np.asarray(warm_start, dtype=float)
        if warm_start.shape != (d, T):
            raise ValueError(f"warm_start must have shape {(d, T)}, got {warm_start.shape}")
        x0 = warm_start.T.ravel()

    iterations = 0

    def count(_xk):
        nonlocal iterations
        iterations += 1

    x, info = cg(
        operator,
        rhs,
        x0=x0,
        rtol=solver_tol,
        atol=0.0,
        maxiter=max_cg_iter,
        M=precond,
        callback=count,
    )
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(matvec(x) - rhs)) / max(rhs_norm, 1e-300)
    report = WeightSolveReport(
        cg_iterations=iterations,
        converged=(info == 0),
        relative_residual=residual,
        ridge=mu,
    )
    return x.reshape(T, d).T, report
