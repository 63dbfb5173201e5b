"""Tests for the graph-regularized least-squares weight solver.

The conjugate-gradient path is checked against a dense solver built
independently with np.kron, against per-task ridge regression when the graph
is empty, and against pooled least squares in the infinite-coupling limit.
"""

import time

import numpy as np
import pytest

import oracles
from gamtl.weight_solver import (
    SystemAssembly,
    TaskDataset,
    assemble_system,
    ridge_floor,
    ridge_independent,
    solve_weights,
    validate_tasks,
)


def make_tasks(rng, d=3, T=4, N=20):
    tasks = []
    for t in range(T):
        X = rng.standard_normal((d, N))
        w = rng.standard_normal(d)
        y = X.T @ w + 0.1 * rng.standard_normal(N)
        tasks.append(TaskDataset(task_id=t, X=X, y=y))
    return tasks


def random_adjacency(rng, T):
    A = rng.uniform(0.0, 1.0, size=(T, T))
    A = 0.5 * (A + A.T)
    np.fill_diagonal(A, 0.0)
    return A


def quadratic_value(tasks, A, gamma, mu, W):
    M, rhs = oracles.dense_weight_system(tasks, A, gamma, mu)
    v = W.T.ravel()
    return float(v @ (M @ v) - 2.0 * rhs @ v)


# --------------------------------------------------------------------------
# TaskDataset and validation


def test_task_dataset_accepts_empty_sample_set():
    t = TaskDataset(task_id=0, X=np.zeros((3, 0)), y=np.zeros(0))
    assert t.dim == 3
    assert t.n_samples == 0


@pytest.mark.parametrize(
    "X,y",
    [
        (np.zeros(3), np.zeros(3)),  # X not 2-d
        (np.zeros((2, 3)), np.zeros((3, 1))),  # y not 1-d
        (np.zeros((2, 3)), np.zeros(4)),  # sample count mismatch
        (np.full((2, 3), np.nan), np.zeros(3)),  # non-finite X
        (np.zeros((2, 3)), np.array([1.0, np.inf, 0.0])),  # non-finite y
    ],
)
def test_task_dataset_rejects_invalid(X, y):
    with pytest.raises(ValueError):
        TaskDataset(task_id=0, X=X, y=y)


def test_validate_tasks_shapes_and_ids():
    rng = np.random.default_rng(0)
    tasks = make_tasks(rng, d=3, T=4)
    assert validate_tasks(tasks) == (3, 4)

    with pytest.raises(ValueError, match="at least 2 tasks"):
        validate_tasks(tasks[:1])

    mixed = tasks[:2] + [TaskDataset(task_id=9, X=np.zeros((5, 2)), y=np.zeros(2))]
    with pytest.raises(ValueError, match="feature dimension"):
        validate_tasks(mixed)

    dup = tasks[:2] + [TaskDataset(task_id=0, X=np.zeros((3, 2)), y=np.zeros(2))]
    with pytest.raises(ValueError, match="duplicate task_id"):
        validate_tasks(dup)

    empty = tasks[:2] + [TaskDataset(task_id=7, X=np.zeros((3, 0)), y=np.zeros(0))]
    with pytest.raises(ValueError, match="no samples"):
        validate_tasks(empty)
    assert validate_tasks(empty, require_samples=False) == (3, 3)


# --------------------------------------------------------------------------
# Independent ridge


def test_ridge_independent_recovers_exact_solution():
    rng = np.random.default_rng(1)
    d, N = 4, 30
    tasks = []
    truth = []
    for t in range(3):
        X = rng.standard_normal((d, N))
        w = rng.standard_normal(d)
        tasks.append(TaskDataset(task_id=t, X=X, y=X.T @ w))
        truth.append(w)
    W = ridge_independent(tasks, lam=0.0)
    np.testing.assert_allclose(W, np.column_stack(truth), atol=1e-9)


def test_ridge_independent_huge_lambda_shrinks_to_zero():
    rng = np.random.default_rng(2)
    tasks = make_tasks(rng, d=3, T=2, N=10)
    W = ridge_independent(tasks, lam=1e8)
    assert np.linalg.norm(W) < 1e-3


def test_ridge_independent_matches_dense_oracle():
    rng = np.random.default_rng(3)
    tasks = make_tasks(rng, d=5, T=3, N=12)
    lam = 0.37
    W = ridge_independent(tasks, lam=lam)
    for t, task in enumerate(tasks):
        expected = np.linalg.solve(
            task.X @ task.X.T + lam * np.eye(5), task.X @ task.y
        )
        np.testing.assert_allclose(W[:, t], expected, rtol=1e-8)


def test_ridge_independent_singular_raises():
    # One sample cannot determine three coefficients without a ridge.
    X = np.array([[1.0], [2.0], [3.0]])
    tasks = [
        TaskDataset(task_id=0, X=X, y=np.array([1.0])),
        TaskDataset(task_id=1, X=X, y=np.array([2.0])),
    ]
    with pytest.raises(np.linalg.LinAlgError):
        ridge_independent(tasks, lam=0.0)
    W = ridge_independent(tasks, lam=1e-3)
    assert np.isfinite(W).all()


def test_ridge_independent_rejects_negative_lambda():
    rng = np.random.default_rng(4)
    with pytest.raises(ValueError):
        ridge_independent(make_tasks(rng), lam=-1.0)


# --------------------------------------------------------------------------
# Ridge floor


def test_ridge_floor_manual_value():
    # [DERIVED] trace = ||X_1||^2 + ||X_2||^2 + 2*gamma*d*sum(A)
    #                 = 2 + 4 + 2*0.5*2*2 = 10, floor = 1e-8 * 10 / (2 * 2).
    t1 = TaskDataset(task_id=0, X=np.eye(2), y=np.zeros(2))
    t2 = TaskDataset(task_id=1, X=np.array([[2.0, 0.0], [0.0, 0.0]]), y=np.zeros(2))
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert ridge_floor([t1, t2], A, gamma=0.5) == pytest.approx(2.5e-8, rel=1e-12)


def test_ridge_floor_zero_data_fallback():
    tasks = [
        TaskDataset(task_id=0, X=np.zeros((1, 0)), y=np.zeros(0)),
        TaskDataset(task_id=1, X=np.zeros((1, 0)), y=np.zeros(0)),
    ]
    assert ridge_floor(tasks, np.zeros((2, 2)), gamma=0.0) == 1e-12


# --------------------------------------------------------------------------
# Explicit assembly


def test_assemble_system_block_diagonal_when_uncoupled():
    rng = np.random.default_rng(5)
    tasks = make_tasks(rng, d=2, T=3, N=8)
    sys = assemble_system(tasks, np.zeros((3, 3)), gamma=1.0, ridge=0.0)
    M = sys.M.toarray()
    expected = np.zeros((6, 6))
    for t, task in enumerate(tasks):
        expected[2 * t : 2 * t + 2, 2 * t : 2 * t + 2] = task.X @ task.X.T
    np.testing.assert_allclose(M, expected, atol=1e-12)
    np.testing.assert_allclose(
        sys.rhs, np.concatenate([t.X @ t.y for t in tasks]), atol=0.0
    )


def test_assemble_system_pure_coupling_two_tasks():
    # Two sample-free scalar tasks joined by a unit edge: the system reduces
    # to twice the graph Laplacian.
    tasks = [
        TaskDataset(task_id=0, X=np.zeros((1, 0)), y=np.zeros(0)),
        TaskDataset(task_id=1, X=np.zeros((1, 0)), y=np.zeros(0)),
    ]
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    sys = assemble_system(tasks, A, gamma=1.0, ridge=0.0)
    np.testing.assert_allclose(
        sys.M.toarray(), np.array([[2.0, -2.0], [-2.0, 2.0]]), atol=0.0
    )
    np.testing.assert_allclose(sys.rhs, np.zeros(2), atol=0.0)
    assert sys.ridge == 0.0


def test_assemble_system_matches_dense_oracle():
    rng = np.random.default_rng(6)
    tasks = make_tasks(rng, d=3, T=4, N=10)
    A = random_adjacency(rng, 4)
    gamma, mu = 0.7, 1e-4
    sys = assemble_system(tasks, A, gamma=gamma, ridge=mu)
    M_ref, rhs_ref = oracles.dense_weight_system(tasks, A, gamma, mu)
    np.testing.assert_allclose(sys.M.toarray(), M_ref, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(sys.rhs, rhs_ref, atol=0.0)


def test_assemble_system_symmetric_positive_definite():
    rng = np.random.default_rng(7)
    tasks = make_tasks(rng, d=3, T=4, N=6)
    A = random_adjacency(rng, 4)
    sys = assemble_system(tasks, A, gamma=1.3)
    M = sys.M.toarray()
    assert np.array_equal(M, M.T)
    assert np.linalg.eigvalsh(M).min() > 0.0
    assert sys.ridge > 0.0  # automatic floor engaged


def test_assemble_system_rejects_negative_ridge():
    rng = np.random.default_rng(8)
    tasks = make_tasks(rng, d=2, T=2, N=4)
    with pytest.raises(ValueError):
        assemble_system(tasks, np.zeros((2, 2)), gamma=1.0, ridge=-1e-9)


# --------------------------------------------------------------------------
# Iterative solver


def test_solve_weights_empty_graph_equals_independent_ridge():
    rng = np.random.default_rng(9)
    tasks = make_tasks(rng, d=4, T=3, N=15)
    W, report = solve_weights(tasks, np.zeros((3, 3)), gamma=1.0, solver_tol=1e-10)
    assert report.converged
    W_ref = ridge_independent(tasks, lam=report.ridge)
    np.testing.assert_allclose(W, W_ref, atol=1e-7)


def test_solve_weights_infinite_coupling_pools_tasks():
    rng = np.random.default_rng(10)
    tasks = make_tasks(rng, d=3, T=4, N=12)
    A = np.ones((4, 4)) - np.eye(4)
    W, report = solve_weights(tasks, A, gamma=1e6, solver_tol=1e-12)
    assert report.converged
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.linalg.norm(W[:, i] - W[:, j]) < 1e-3
    pooled = oracles.pooled_ls(tasks, mu=report.ridge)
    for t in range(4):
        assert np.linalg.norm(W[:, t] - pooled) < 1e-3


def test_solve_weights_matches_dense_oracle():
    rng = np.random.default_rng(11)
    tasks = make_tasks(rng, d=3, T=4, N=20)
    A = random_adjacency(rng, 4)
    gamma = 0.7
    W, report = solve_weights(tasks, A, gamma=gamma, solver_tol=1e-12)
    assert report.converged
    W_ref = oracles.dense_weight_solve(tasks, A, gamma, mu=report.ridge)
    np.testing.assert_allclose(W, W_ref, rtol=1e-8, atol=1e-10)
    assert report.relative_residual <= 1e-10


def test_solve_weights_permutation_invariant():
    rng = np.random.default_rng(12)
    tasks = make_tasks(rng, d=3, T=5, N=10)
    A = random_adjacency(rng, 5)
    gamma = 0.5
    W, _ = solve_weights(tasks, A, gamma=gamma, solver_tol=1e-12)
    perm = np.array([3, 0, 4, 1, 2])
    tasks_p = [tasks[p] for p in perm]
    A_p = A[np.ix_(perm, perm)]
    W_p, _ = solve_weights(tasks_p, A_p, gamma=gamma, solver_tol=1e-12)
    np.testing.assert_allclose(W_p, W[:, perm], atol=1e-10)


def test_solve_weights_iteration_budget_flagged():
    rng = np.random.default_rng(13)
    tasks = make_tasks(rng, d=6, T=4, N=15)
    A = random_adjacency(rng, 4)
    W, report = solve_weights(tasks, A, gamma=2.0, solver_tol=1e-14, max_cg_iter=1)
    assert not report.converged
    assert report.cg_iterations == 1
    assert np.isfinite(W).all()
    assert report.relative_residual > 1e-14


def test_solve_weights_warm_start_at_solution_is_free():
    rng = np.random.default_rng(14)
    tasks = make_tasks(rng, d=3, T=3, N=10)
    A = random_adjacency(rng, 3)
    W, report = solve_weights(tasks, A, gamma=1.0, solver_tol=1e-12)
    assert report.converged
    W2, report2 = solve_weights(
        tasks, A, gamma=1.0, solver_tol=1e-6, warm_start=W
    )
    assert report2.converged
    assert report2.cg_iterations <= 1
    np.testing.assert_allclose(W2, W, atol=1e-8)


def test_solve_weights_descends_from_warm_start():
    rng = np.random.default_rng(15)
    tasks = make_tasks(rng, d=3, T=4, N=10)
    A = random_adjacency(rng, 4)
    gamma = 1.0
    W0 = rng.standard_normal((3, 4))
    W, report = solve_weights(tasks, A, gamma=gamma, solver_tol=1e-10, warm_start=W0)
    q0 = quadratic_value(tasks, A, gamma, report.ridge, W0)
    q1 = quadratic_value(tasks, A, gamma, report.ridge, W)
    assert q1 <= q0 + 1e-8 * (1.0 + abs(q0))


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"solver_tol": 0.0}, "solver_tol"),
        ({"solver_tol": -1e-3}, "solver_tol"),
        ({"gamma": -0.1}, "gamma"),
    ],
)
def test_solve_weights_rejects_bad_scalars(kwargs, match):
    rng = np.random.default_rng(16)
    tasks = make_tasks(rng, d=2, T=2, N=4)
    full = {"gamma": 1.0}
    full.update(kwargs)
    with pytest.raises(ValueError, match=match):
        solve_weights(tasks, np.zeros((2, 2)), **full)


def test_solve_weights_rejects_mismatches():
    rng = np.random.default_rng(17)
    tasks = make_tasks(rng, d=2, T=3, N=4)
    with pytest.raises(ValueError, match="adjacency"):
        solve_weights(tasks, np.zeros((4, 4)), gamma=1.0)
    with pytest.raises(ValueError, match="warm_start"):
        solve_weights(tasks, np.zeros((3, 3)), gamma=1.0, warm_start=np.zeros((3, 2)))


def test_solve_weights_wall_time_scales_mildly_with_tasks():
    # Implicit matvecs keep the per-solve cost near linear in T for a
    # bounded-degree graph; allow a generous quadratic envelope to keep the
    # check robust on shared machines.
    rng = np.random.default_rng(18)
    d, N = 5, 20
    times = {}
    for T in (8, 16, 32, 64):
        tasks = make_tasks(rng, d=d, T=T, N=N)
        A = np.zeros((T, T))
        for t in range(T):  # ring: constant degree as T grows
            A[t, (t + 1) % T] = A[(t + 1) % T, t] = 1.0
        best = np.inf
        for _ in range(3):
            start = time.perf_counter()
            _, report = solve_weights(tasks, A, gamma=0.5, solver_tol=1e-8)
            best = min(best, time.perf_counter() - start)
        assert report.converged
        times[T] = best
    ratio = times[64] / max(times[8], 1e-3)
    assert ratio < 4.0 * (64 / 8) ** 2
