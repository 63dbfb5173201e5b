"""Shared radial-basis feature lift for the nonlinear model variant.

All tasks share one unsupervised first layer: centers picked by k-means on
the pooled inputs of every task, Gaussian widths set from nearest-center
distances.  The lifted datasets (features phi_p(x) plus a constant bias
feature) then go through the ordinary alternating fit, so the nonlinear
variant inherits its convergence behavior unchanged.

k-means is implemented here rather than imported so that center selection is
bit-reproducible from a single integer seed across environments: k-means++
seeding and Lloyd updates draw only from ``numpy.random.default_rng(seed)``
and all reductions run in a fixed order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import GamtlConfig, GamtlModel, fit
from .weight_solver import TaskDataset, validate_tasks

__all__ = [
    "RbfFeatureMap",
    "kmeans_centers",
    "optimal_widths",
    "transform",
    "lift_matrix",
    "lift_tasks",
    "default_center_count",
    "fit_rbf",
]

KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class RbfFeatureMap:
    """Gaussian RBF layer: ``centers`` has shape (P, q), ``widths`` shape (P,)."""

    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("centers must be a (P, q) array with P >= 1")
        if widths.shape != (centers.shape[0],):
            raise ValueError("widths must be one positive value per center")
        if not np.isfinite(centers).all():
            raise ValueError("centers must be finite")
        if not (np.isfinite(widths).all() and (widths > 0.0).all()):
            raise ValueError("widths must be finite and strictly positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)

    @property
    def num_centers(self) -> int:
        return self.centers.shape[0]

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]


def _sq_distances_to(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared distances, shape (n_points, n_centers), fixed evaluation order."""
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("npq,npq->np", diff, diff)


def kmeans_centers(pooled_inputs: np.ndarray, P: int, seed: int) -> np.ndarray:
    """k-means centers of pooled samples (rows), deterministic per seed.

    k-means++ seeding followed by Lloyd iterations; stops when assignments
    stabilize or after 300 rounds.  Empty clusters are reseeded to the point
    currently farthest from its center.
    """
    points = np.asarray(pooled_inputs, dtype=float)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("pooled_inputs must be a nonempty (N, q) array")
    if not np.isfinite(points).all():
        raise ValueError("pooled_inputs must be finite")
    N = points.shape[0]
    if not 1 <= P <= N:
        raise ValueError(f"P must lie in [1, {N}], got {P}")

    rng = np.random.default_rng(seed)
    centers = np.empty((P, points.shape[1]))
    centers[0] = points[rng.integers(N)]
    closest_sq = _sq_distances_to(points, centers[:1])[:, 0]
    for p in range(1, P):
        total = float(closest_sq.sum())
        if total > 0.0:
            idx = rng.choice(N, p=closest_sq / total)
        else:
            idx = rng.integers(N)  # all points coincide with a center
        centers[p] = points[idx]
        np.minimum(
            closest_sq, _sq_distances_to(points, centers[p : p + 1])[:, 0], out=closest_sq
        )

    assign = np.argmin(_sq_distances_to(points, centers), axis=1)
    for _ in range(KMEANS_MAX_ITER):
        for p in range(P):
            members = assign == p
            if members.any():
                centers[p] = points[members].mean(axis=0)
            else:
                # reseed to the point worst served by its current center
                dist = _sq_distances_to(points, centers)
                farthest = int(np.argmax(dist[np.arange(N), assign]))
                centers[p] = points[farthest]
                assign[farthest] = p
        new_assign = np.argmin(_sq_distances_to(points, centers), axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centers


def optimal_widths(
    centers: np.ndarray,
    pooled_inputs: np.ndarray | None = None,
    width_factor: float = 1.0,
    single_width: float | None = None,
) -> np.ndarray:
    """Per-center widths: ``width_factor`` times nearest-other-center distance.

    Centers with a duplicate (nearest distance zero) fall back to the mean of
    the nonzero nearest distances, with a warning.  A single center has no
    neighbor: pass ``single_width`` explicitly, or ``pooled_inputs`` to use
    the RMS point-to-center distance instead.
    """
    centers = np.asarray(centers, dtype=float)
    if width_factor <= 0.0:
        raise ValueError("width_factor must be positive")
    P = centers.shape[0]

    def data_width() -> float:
        if single_width is not None:
            if single_width <= 0.0:
                raise ValueError("single_width must be positive")
            return float(single_width) / width_factor  # factor applied below
        if pooled_inputs is None:
            raise ValueError(
                "width is underdetermined: provide single_width or pooled_inputs"
            )
        points = np.asarray(pooled_inputs, dtype=float)
        rms = float(np.sqrt(_sq_distances_to(points, centers).mean()))
        if rms <= 0.0:
            raise ValueError("all samples coincide with the centers; width undefined")
        return rms

    if P == 1:
        return np.array([width_factor * data_width()])

    dist = np.sqrt(_sq_distances_to(centers, centers))
    np.fill_diagonal(dist, np.inf)
    nearest = dist.min(axis=1)
    zero = nearest == 0.0
    if zero.any():
        warnings.warn(
            f"{int(zero.sum())} duplicate center(s): widths fall back to the "
            "mean nonzero nearest-center distance",
            stacklevel=2,
        )
        if zero.all():
            nearest[:] = data_width()
        else:
            nearest[zero] = nearest[~zero].mean()
    return width_factor * nearest


def transform(feature_map: RbfFeatureMap, x: np.ndarray) -> np.ndarray:
    """Gaussian activations exp(-||x - c_p||^2 / (2 sigma_p^2)), each in (0, 1].

    Accepts a single input vector (returns shape (P,)) or a matrix with
    samples as columns (returns (P, n)).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    points = x[None, :] if single else x.T
    if points.shape[1] != feature_map.input_dim:
        raise ValueError(
            f"input dimension {points.shape[1]} does not match centers "
            f"({feature_map.input_dim})"
        )
    if not np.isfinite(points).all():
        raise ValueError("inputs must be finite")
    sq = _sq_distances_to(points, feature_map.centers)
    phi = np.exp(-sq / (2.0 * feature_map.widths**2))
    return phi[0] if single else phi.T


def lift_matrix(feature_map: RbfFeatureMap, X: np.ndarray) -> np.ndarray:
    """Lift a (q, n) design matrix to (P+1, n): RBF features plus a bias row."""
    phi = transform(feature_map, X)
    return np.vstack([phi, np.ones((1, phi.shape[1]))])


def lift_tasks(feature_map: RbfFeatureMap, tasks) -> list[TaskDataset]:
    return [
        TaskDataset(t.task_id, lift_matrix(feature_map, t.X), t.y) for t in tasks
    ]


def default_center_count(pooled_count: int) -> int:
    return max(1, min(50, int(np.sqrt(pooled_count))))


def fit_rbf(
    tasks,
    config: GamtlConfig,
    P: int | None = None,
    width_factor: float = 1.0,
) -> GamtlModel:
    """Fit the nonlinear variant: shared RBF lift, then the alternating fit.

    ``P`` defaults to ``min(50, floor(sqrt(pooled sample count)))``.  The
    returned model carries the feature map, so its predictions take raw
    inputs.
    """
    tasks = list(tasks)
    validate_tasks(tasks)
    pooled = np.concatenate([t.X.T for t in tasks], axis=0)
    if P is None:
        P = default_center_count(pooled.shape[0])
    centers = kmeans_centers(pooled, P, seed=config.seed)
    widths = optimal_widths(centers, pooled_inputs=pooled, width_factor=width_factor)
    feature_map = RbfFeatureMap(centers=centers, widths=widths)
    model = fit(lift_tasks(feature_map, tasks), config)
    model.feature_map = feature_map
    return model
