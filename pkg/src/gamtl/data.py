"""Synthetic benchmark generators, CSV ingestion, and splitting.

Two linear benchmarks share a common shape (20 tasks, 30 features, shared
inputs, unit Gaussian target noise):

* ``gen_syn1`` -- two tight parameter groups (12 and 6 tasks) plus two
  unrelated tasks, one of them high variance.  Exercises group recovery and
  outlier isolation.
* ``gen_syn2`` -- one parameter vector whose first two coordinates rotate by
  evenly spaced angles, closing a full circle at the last task; the remaining
  coordinates are shared verbatim.  Exercises ring-structure recovery.

``gen_wiener_network`` simulates a 10-agent sensor network, each agent
running the same Wiener system (second-order linear memory followed by a
saturating nonlinearity) with cluster-dependent coefficients mixed across
the network topology by a Metropolis matrix.  Regression features embed the
two raw inputs and the two lagged observed outputs.

All generators draw exclusively from ``numpy.random.default_rng(seed)`` in a
fixed documented order, so outputs are bit-reproducible per seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.signal

from .weight_solver import TaskDataset

__all__ = [
    "SynSpec",
    "gen_syn1",
    "gen_syn2",
    "WienerNetworkSpec",
    "WienerTruth",
    "metropolis_mixing",
    "wiener_nonlinearity",
    "default_wiener_topology",
    "gen_wiener_network",
    "CsvSchema",
    "Standardizer",
    "LoadedTasks",
    "load_csv_tasks",
    "save_tasks_csv",
    "write_dataset",
    "train_test_split",
]

SYN_TASKS = 20
SYN_DIM = 30


@dataclass(frozen=True)
class SynSpec:
    """Sampling plan for the linear synthetic benchmarks."""

    seed: int = 0
    n_train: int = 20
    n_test: int = 80
    noise_std: float = 1.0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("sample counts must be at least 1")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be nonnegative")


def _split_shared_inputs(spec: SynSpec, W: np.ndarray, rng):
    """Shared-input sampling: one X for all tasks, independent noise per task."""
    n = spec.n_train + spec.n_test
    X = rng.standard_normal((SYN_DIM, n))
    noise = spec.noise_std * rng.standard_normal((n, SYN_TASKS))
    Y = X.T @ W + noise
    train = [
        TaskDataset(t, X[:, : spec.n_train], Y[: spec.n_train, t])
        for t in range(SYN_TASKS)
    ]
    test = [
        TaskDataset(t, X[:, spec.n_train :], Y[spec.n_train :, t])
        for t in range(SYN_TASKS)
    ]
    return train, test


def gen_syn1(spec: SynSpec):
    """Grouped-tasks benchmark; returns (train tasks, test tasks, true W).

    Draw order: group centers (normal around +1 then around -1), then one
    uniform [0, 1) perturbation vector per group task in task order, then the
    two outlier parameter vectors, then inputs, then noise.  Tasks 0-11 sit
    within 0.1 (sup norm) of the first center, tasks 12-17 within 0.1 of the
    second; task 18 is an unrelated unit-variance draw and task 19 an
    unrelated draw with tenfold variance.
    """
    rng = np.random.default_rng(spec.seed)
    w_g1 = 1.0 + rng.standard_normal(SYN_DIM)
    w_g2 = -1.0 + rng.standard_normal(SYN_DIM)
    W = np.empty((SYN_DIM, SYN_TASKS))
    for t in range(12):
        W[:, t] = w_g1 + 0.1 * rng.random(SYN_DIM)
    for t in range(12, 18):
        W[:, t] = w_g2 + 0.1 * rng.random(SYN_DIM)
    W[:, 18] = rng.standard_normal(SYN_DIM)
    W[:, 19] = math.sqrt(10.0) * rng.standard_normal(SYN_DIM)
    train, test = _split_shared_inputs(spec, W, rng)
    return train, test, W


def gen_syn2(spec: SynSpec):
    """Rotating-tasks benchmark; returns (train tasks, test tasks, true W).

    Task t (0-based) rotates the first two coordinates of task 0's parameter
    vector by ``2 pi t / 19`` and copies the rest.  Task 19 completes the
    full circle and is assigned task 0's vector verbatim, so their equality
    is exact rather than up to rounding.
    """
    rng = np.random.default_rng(spec.seed)
    w1 = rng.standard_normal(SYN_DIM)
    W = np.tile(w1[:, None], (1, SYN_TASKS))
    for t in range(1, SYN_TASKS - 1):
        theta = 2.0 * math.pi * t / 19.0
        c, s = math.cos(theta), math.sin(theta)
        W[0, t] = c * w1[0] - s * w1[1]
        W[1, t] = s * w1[0] + c * w1[1]
    train, test = _split_shared_inputs(spec, W, rng)
    return train, test, W


def default_wiener_topology(clusters) -> tuple:
    """Complete intra-cluster edges plus a ring of inter-cluster bridges.

    Each bridge joins the last agent of one cluster to the first agent of
    the next, wrapping around.  For the default 10-agent layout this gives
    bridges (2,3), (5,6), (7,8) and (9,0).
    """
    edges = set()
    for cluster in clusters:
        members = sorted(cluster)
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                edges.add((a, b))
    k = len(clusters)
    for i in range(k):
        a = sorted(clusters[i])[-1]
        b = sorted(clusters[(i + 1) % k])[0]
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return tuple(sorted(edges))


@dataclass(frozen=True)
class WienerNetworkSpec:
    """Network simulation plan; defaults reproduce the 10-agent benchmark."""

    seed: int = 0
    n_agents: int = 10
    n_samples: int = 1000
    burn_in: int = 200
    clusters: tuple = ((0, 1, 2), (3, 4, 5), (6, 7), (8, 9))
    base_coeff: tuple = (0.5, -0.4)
    cluster_offsets: tuple = ((0.2, -0.1), (0.2, 0.1), (-0.3, 0.1), (0.0, 0.1))
    input_var_range: tuple = (0.005, 0.015)
    noise_var_range: tuple = (0.0005, 0.0015)
    rho: float = 0.5
    topology: tuple | None = None

    def __post_init__(self):
        if self.n_agents < 2 or self.n_samples < 1 or self.burn_in < 2:
            raise ValueError("need n_agents >= 2, n_samples >= 1, burn_in >= 2")
        flat = sorted(a for c in self.clusters for a in c)
        if flat != list(range(self.n_agents)):
            raise ValueError("clusters must partition the agent ids 0..n_agents-1")
        if len(self.cluster_offsets) != len(self.clusters):
            raise ValueError("one coefficient offset is required per cluster")
        for lo, hi in (self.input_var_range, self.noise_var_range):
            if not 0.0 < lo <= hi:
                raise ValueError("variance ranges must be positive and ordered")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if self.topology is not None:
            for i, j in self.topology:
                if not (0 <= i < self.n_agents and 0 <= j < self.n_agents and i != j):
                    raise ValueError(f"invalid topology edge ({i}, {j})")

    def topology_edges(self) -> tuple:
        if self.topology is not None:
            return tuple(sorted({(min(i, j), max(i, j)) for i, j in self.topology}))
        return default_wiener_topology(self.clusters)


@dataclass(frozen=True)
class WienerTruth:
    """Ground truth embedded in a generated network dataset."""

    coeff_matrix: np.ndarray  # per-cluster coefficients, column per agent
    mixed_coeff_matrix: np.ndarray  # after Metropolis mixing; drives the system
    mixing: np.ndarray
    topology: tuple
    input_var: np.ndarray
    noise_var: np.ndarray


def metropolis_mixing(edges, n_agents: int) -> np.ndarray:
    """Symmetric doubly stochastic mixing matrix from an undirected topology.

    Off-diagonal weight 1/(1 + max(deg_i, deg_j)) per edge (neighborhoods
    count the agent itself); the diagonal absorbs the remainder so every row
    sums to 1 exactly.
    """
    A = np.zeros((n_agents, n_agents))
    for i, j in edges:
        A[i, j] = A[j, i] = 1.0
    deg = A.sum(axis=1)
    M = np.zeros_like(A)
    for i, j in edges:
        M[i, j] = M[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(M, 1.0 - M.sum(axis=1))
    # nudge the diagonal by the rounding residual so row sums are exactly 1
    for _ in range(10):
        err = M.sum(axis=1) - 1.0
        if not err.any():
            break
        np.fill_diagonal(M, np.diagonal(M) - err)
    return M


def wiener_nonlinearity(y: np.ndarray) -> np.ndarray:
    """Saturating output map: odd-side square-root law, even-side quadratic."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    pos = y >= 0.0
    yp = y[pos]
    out[pos] = yp / (3.0 * np.sqrt(0.1 + 0.9 * yp * yp))
    yn = y[~pos]
    out[~pos] = -(yn * yn) * (1.0 - np.exp(0.7 * yn)) / 3.0
    return out


def gen_wiener_network(spec: WienerNetworkSpec):
    """Simulate the agent network; returns (tasks, truth).

    Per agent k the inputs are correlated Gaussian pairs
    ``x1 = rho * x2 + v`` with matching variances, the hidden state follows
    ``y_i = w_k^T x_i - 0.2 y_{i-1} + 0.35 y_{i-2}`` (roots 0.5 and -0.7,
    stable), and the observed target is ``d_i = psi(y_i) + noise``.  Each
    regression sample embeds the system's second-order memory:
    features ``(x1_i, x2_i, d_{i-1}, d_{i-2})``, target ``d_i``.  The first
    ``burn_in`` steps are discarded.

    Draw order: both variance vectors up front, then per agent (in id
    order) the input stream, the correlation innovations, and the output
    noise.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_agents
    W = np.empty((2, n))
    for cluster, offset in zip(spec.clusters, spec.cluster_offsets):
        w = np.asarray(spec.base_coeff, dtype=float) + np.asarray(offset, dtype=float)
        for agent in cluster:
            W[:, agent] = w
    edges = spec.topology_edges()
    mixing = metropolis_mixing(edges, n)
    W_star = W @ mixing

    input_var = rng.uniform(*spec.input_var_range, size=n)
    noise_var = rng.uniform(*spec.noise_var_range, size=n)

    total = spec.burn_in + spec.n_samples
    tasks = []
    for k in range(n):
        x2 = math.sqrt(input_var[k]) * rng.standard_normal(total)
        v = math.sqrt((1.0 - spec.rho**2) * input_var[k]) * rng.standard_normal(total)
        x1 = spec.rho * x2 + v
        z = math.sqrt(noise_var[k]) * rng.standard_normal(total)
        drive = W_star[0, k] * x1 + W_star[1, k] * x2
        # y_i + 0.2 y_{i-1} - 0.35 y_{i-2} = drive_i, zero initial state
        y = scipy.signal.lfilter([1.0], [1.0, 0.2, -0.35], drive)
        d = wiener_nonlinearity(y) + z
        idx = np.arange(spec.burn_in, total)
        X = np.vstack([x1[idx], x2[idx], d[idx - 1], d[idx - 2]])
        tasks.append(TaskDataset(k, X, d[idx]))

    truth = WienerTruth(
        coeff_matrix=W,
        mixed_coeff_matrix=W_star,
        mixing=mixing,
        topology=edges,
        input_var=input_var,
        noise_var=noise_var,
    )
    return tasks, truth


# --------------------------------------------------------------------------
# CSV ingestion and persistence


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of a multi-task CSV (header row required)."""

    task_column: str
    target_column: str
    feature_columns: tuple
    standardize: bool = False
    standardize_target: bool = False

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if len(self.feature_columns) == 0:
            raise ValueError("feature_columns must not be empty")
        names = (self.task_column, self.target_column, *self.feature_columns)
        if len(set(names)) != len(names):
            raise ValueError("schema columns must be distinct")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature (and optionally target) z-score statistics from one split."""

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float = 0.0
    target_std: float = 1.0

    def apply(self, X: np.ndarray, y: np.ndarray):
        Xs = (X - self.feature_mean[:, None]) / self.feature_std[:, None]
        ys = (y - self.target_mean) / self.target_std
        return Xs, ys


@dataclass(frozen=True)
class LoadedTasks:
    tasks: tuple
    task_labels: tuple
    standardizer: Standardizer | None


def _fit_standardizer(xs: np.ndarray, ys: np.ndarray, schema: CsvSchema) -> Standardizer:
    mean = xs.mean(axis=1)
    std = xs.std(axis=1)
    std = np.where(std > 0.0, std, 1.0)  # constant features pass through
    if not schema.standardize:
        mean, std = np.zeros_like(mean), np.ones_like(std)
    t_mean, t_std = 0.0, 1.0
    if schema.standardize_target:
        t_mean = float(ys.mean())
        spread = float(ys.std())
        t_std = spread if spread > 0.0 else 1.0
    return Standardizer(mean, std, t_mean, t_std)


def load_csv_tasks(path, schema: CsvSchema, standardizer: Standardizer | None = None) -> LoadedTasks:
    """Group CSV rows into one task per distinct task-column value.

    Task ids are assigned in order of first appearance.  When the schema
    requests standardization and no ``standardizer`` is supplied, statistics
    are fitted on the rows of this file (so fit it on the training split and
    pass the result when loading the test split).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, expected a header row")
        missing = [
            c
            for c in (schema.task_column, schema.target_column, *schema.feature_columns)
            if c not in reader.fieldnames
        ]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        labels = []
        rows_by_label = {}
        for line_no, row in enumerate(reader, start=2):
            label = row[schema.task_column]
            try:
                y = float(row[schema.target_column])
                x = [float(row[c]) for c in schema.feature_columns]
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: non-numeric cell ({exc})") from None
            if label not in rows_by_label:
                labels.append(label)
                rows_by_label[label] = []
            rows_by_label[label].append((x, y))
    if not labels:
        raise ValueError(f"{path}: no data rows")

    raw = []
    for label in labels:
        pairs = rows_by_label[label]
        X = np.array([x for x, _ in pairs], dtype=float).T
        y = np.array([y for _, y in pairs], dtype=float)
        raw.append((X, y))

    if standardizer is None and (schema.standardize or schema.standardize_target):
        all_x = np.concatenate([X for X, _ in raw], axis=1)
        all_y = np.concatenate([y for _, y in raw])
        standardizer = _fit_standardizer(all_x, all_y, schema)

    tasks = []
    for task_id, (label, (X, y)) in enumerate(zip(labels, raw)):
        if standardizer is not None:
            X, y = standardizer.apply(X, y)
        tasks.append(TaskDataset(task_id, X, y))
    return LoadedTasks(tasks=tuple(tasks), task_labels=tuple(labels), standardizer=standardizer)


def save_tasks_csv(tasks, path):
    """Write tasks as rows ``task,y,x0..x{d-1}`` at full float precision."""
    tasks = list(tasks)
    d = tasks[0].dim
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task", "y", *(f"x{i}" for i in range(d))])
        for task in tasks:
            for j in range(task.n_samples):
                writer.writerow(
                    [
                        task.task_id,
                        repr(float(task.y[j])),
                        *(repr(float(val)) for val in task.X[:, j]),
                    ]
                )


def canonical_csv_schema(d: int, standardize: bool = False) -> CsvSchema:
    """Schema matching :func:`save_tasks_csv` output."""
    return CsvSchema(
        task_column="task",
        target_column="y",
        feature_columns=tuple(f"x{i}" for i in range(d)),
        standardize=standardize,
    )


def write_dataset(out_dir, name: str, seed: int, splits: dict) -> dict:
    """Write one CSV per split plus a manifest; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    first_split = next(iter(splits.values()))
    manifest = {
        "name": name,
        "seed": seed,
        "tasks": len(first_split),
        "d": first_split[0].dim,
        "counts": {
            split: [t.n_samples for t in tasks] for split, tasks in splits.items()
        },
    }
    for split, tasks in splits.items():
        save_tasks_csv(tasks, out_dir / f"{split}.csv")
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def train_test_split(tasks, ratio: float, seed: int):
    """Per-task shuffled split with ``ceil(ratio * N)`` training samples.

    Every task keeps at least one sample on each side, so tasks need at
    least 2 samples.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    tasks = list(tasks)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for task in tasks:
        n = task.n_samples
        if n < 2:
            raise ValueError(f"task {task.task_id}: needs >= 2 samples to split")
        n_train = min(max(math.ceil(ratio * n), 1), n - 1)
        perm = rng.permutation(n)
        tr = np.sort(perm[:n_train])
        te = np.sort(perm[n_train:])
        train.append(TaskDataset(task.task_id, task.X[:, tr], task.y[tr]))
        test.append(TaskDataset(task.task_id, task.X[:, te], task.y[te]))
    return train, test
