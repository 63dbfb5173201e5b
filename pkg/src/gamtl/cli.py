"""Command-line interface: seeded batch commands driven by JSON configs.

Commands
--------
synth   generate a synthetic benchmark dataset (CSV splits + manifest)
fit     fit a model from a JSON config (model.json + trace.json)
eval    score a saved model on a CSV split (RMSE report JSON)
export  write the learned task graph (edge-csv, dot, or json)
bench   repeated seeded fits with mean/std RMSE (report JSON)

All randomness flows from the single ``seed`` in the config or flags;
replicate r of a benchmark uses ``base_seed + r``, and the k-means seed of
an RBF fit equals the model seed.  Outputs carry no timestamps, so rerunning
a command with identical inputs produces byte-identical artifacts.

Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import jsonschema

from . import data as data_mod
from .evaluate import (
    benchmark,
    export_graph,
    fit_independent_ridge,
    report_to_dict,
    rmse,
)
from .graph_learning import GraphLearningParams
from .model import GamtlConfig, fit, load_model, model_to_dict, save_model
from .rbf import fit_rbf

__all__ = ["main"]


class UsageError(Exception):
    """Bad flags, config, or input files; exits with code 1."""


class RuntimeFailure(Exception):
    """Failure while computing; exits with code 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2 for
    # runtime failures, so route usage problems through UsageError instead.
    def error(self, message):
        raise UsageError(message)


_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "gamma": _NONNEG,
        "alpha": _POSITIVE,
        "beta": _POSITIVE,
        "step": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "graph_tol": _POSITIVE,
        "graph_max_iter": {"type": "integer", "minimum": 1},
        "outer_tol": _POSITIVE,
        "max_outer_iter": {"type": "integer", "minimum": 1},
        "weight_solver_tol": _POSITIVE,
        "ridge_lambda": _NONNEG,
        "seed": {"type": "integer"},
    },
}

RBF_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "enabled": {"type": "boolean"},
        "num_centers": {"type": ["integer", "null"], "minimum": 1},
        "width_factor": _POSITIVE,
    },
}

DATA_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["train_csv"],
    "properties": {
        "train_csv": {"type": "string"},
        "task_column": {"type": "string"},
        "target_column": {"type": "string"},
        "feature_columns": {
            "type": ["array", "null"],
            "items": {"type": "string"},
            "minItems": 1,
        },
        "standardize": {"type": "boolean"},
        "standardize_target": {"type": "boolean"},
    },
}

FIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["data"],
    "properties": {
        "data": DATA_SCHEMA,
        "model": MODEL_SCHEMA,
        "rbf": RBF_SCHEMA,
        "out_dir": {"type": "string"},
    },
}

BENCH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["benchmark"],
    "properties": {
        "benchmark": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["syn1", "syn2", "wiener"]},
                "n_runs": {"type": "integer", "minimum": 1},
                "base_seed": {"type": "integer"},
                "n_train": {"type": "integer", "minimum": 1},
                "n_test": {"type": "integer", "minimum": 1},
                "noise_std": _NONNEG,
                "n_samples": {"type": "integer", "minimum": 4},
                "split_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "include_baseline": {"type": "boolean"},
            },
        },
        "model": MODEL_SCHEMA,
        "rbf": RBF_SCHEMA,
        "out_dir": {"type": "string"},
    },
}


def _validate_config(config: dict, schema: dict):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path
        )
        raise UsageError(f"config error at {path}: {e.message}")


def _load_config(path: str, overrides) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("config root must be a JSON object")
    for item in overrides or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"--set path {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return config


def _gamtl_config(model_cfg: dict) -> GamtlConfig:
    graph = GraphLearningParams(
        alpha=model_cfg.get("alpha", 1.0),
        beta=model_cfg.get("beta", 1.0),
        step=model_cfg.get("step"),
        tol=model_cfg.get("graph_tol", 1e-6),
        max_iter=model_cfg.get("graph_max_iter", 10000),
    )
    return GamtlConfig(
        gamma=model_cfg.get("gamma", 1.0),
        graph_params=graph,
        outer_tol=model_cfg.get("outer_tol", 1e-5),
        max_outer_iter=model_cfg.get("max_outer_iter", 50),
        weight_solver_tol=model_cfg.get("weight_solver_tol", 1e-8),
        ridge_lambda=model_cfg.get("ridge_lambda", 1.0),
        seed=model_cfg.get("seed", 0),
    )


def _apply_flag_overrides(config: dict, args):
    model = config.setdefault("model", {})
    for key in ("gamma", "alpha", "beta", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            model[key] = value
    if getattr(args, "rbf", False):
        config.setdefault("rbf", {})["enabled"] = True
    if getattr(args, "out", None):
        config["out_dir"] = args.out


def _csv_schema_from_config(data_cfg: dict, csv_path: Path) -> data_mod.CsvSchema:
    task_col = data_cfg.get("task_column", "task")
    target_col = data_cfg.get("target_column", "y")
    features = data_cfg.get("feature_columns")
    if not features:
        try:
            with open(csv_path, "r", encoding="utf-8") as fh:
                header = fh.readline().strip().split(",")
        except OSError as exc:
            raise UsageError(f"cannot read dataset: {exc}") from None
        features = [c for c in header if c not in (task_col, target_col)]
        if not features:
            raise UsageError(f"{csv_path}: no feature columns besides {task_col}/{target_col}")
    return data_mod.CsvSchema(
        task_column=task_col,
        target_column=target_col,
        feature_columns=tuple(features),
        standardize=data_cfg.get("standardize", False),
        standardize_target=data_cfg.get("standardize_target", False),
    )


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    try:
        if args.name in ("syn1", "syn2"):
            spec = data_mod.SynSpec(
                seed=args.seed,
                n_train=args.n_train,
                n_test=args.n_test,
                noise_std=args.noise_std,
            )
            generator = data_mod.gen_syn1 if args.name == "syn1" else data_mod.gen_syn2
            train, test, _ = generator(spec)
        else:
            spec = data_mod.WienerNetworkSpec(seed=args.seed, n_samples=args.n_samples)
            tasks, _ = data_mod.gen_wiener_network(spec)
            train, test = data_mod.train_test_split(tasks, args.split_ratio, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        data_mod.write_dataset(out_dir, args.name, args.seed, {"train": train, "test": test})
    except OSError as exc:
        raise UsageError(f"cannot write dataset: {exc}") from None
    print(f"wrote {out_dir / 'train.csv'}, {out_dir / 'test.csv'}, {out_dir / 'manifest.json'}")
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args.config, args.set)
    _apply_flag_overrides(config, args)
    _validate_config(config, FIT_SCHEMA)

    data_cfg = config["data"]
    csv_path = Path(data_cfg["train_csv"])
    schema = _csv_schema_from_config(data_cfg, csv_path)
    try:
        loaded = data_mod.load_csv_tasks(csv_path, schema)
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    gamtl_config = _gamtl_config(config.get("model", {}))
    rbf_cfg = config.get("rbf", {})
    try:
        if rbf_cfg.get("enabled", False):
            model = fit_rbf(
                loaded.tasks,
                gamtl_config,
                P=rbf_cfg.get("num_centers"),
                width_factor=rbf_cfg.get("width_factor", 1.0),
            )
        else:
            model = fit(loaded.tasks, gamtl_config)
    except Exception as exc:
        raise RuntimeFailure(f"fit failed: {exc}") from exc

    out_dir = Path(config.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(model, out_dir / "model.json")
    _write_json(out_dir / "trace.json", {"config": config, "trace": model.trace.to_dict()})
    print(f"wrote {out_dir / 'model.json'}, {out_dir / 'trace.json'}")
    return 0


def cmd_eval(args) -> int:
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise UsageError(f"cannot read model: {exc}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed model file: {exc}") from None
    data_cfg = {
        "task_column": args.task_column,
        "target_column": args.target_column,
        "feature_columns": args.feature_columns.split(",") if args.feature_columns else None,
    }
    csv_path = Path(args.data)
    schema = _csv_schema_from_config(data_cfg, csv_path)
    try:
        loaded = data_mod.load_csv_tasks(csv_path, schema)
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    model_ids = set(model.task_ids)
    data_ids = {t.task_id for t in loaded.tasks}
    if not data_ids <= model_ids:
        raise UsageError(
            f"task ids in data not covered by model: {sorted(data_ids - model_ids)}"
        )
    try:
        result = rmse(model, loaded.tasks)
    except Exception as exc:
        raise RuntimeFailure(f"evaluation failed: {exc}") from exc
    report = {
        "aggregate_rmse": result.aggregate,
        "per_task_mean_rmse": result.per_task_mean,
        "per_task_rmse": [
            [label, value]
            for label, value in zip(loaded.task_labels, result.per_task.tolist())
        ],
        "n_samples": int(sum(t.n_samples for t in loaded.tasks)),
        "config": {"model": str(args.model), "data": str(args.data)},
    }
    if args.out:
        _write_json(Path(args.out), report)
        print(f"wrote {args.out}")
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def cmd_export(args) -> int:
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise UsageError(f"cannot read model: {exc}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed model file: {exc}") from None
    try:
        document = export_graph(model.A, threshold=args.threshold, format=args.format)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(document, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(document)
    return 0


def _bench_data_factory(bench_cfg: dict):
    name = bench_cfg["name"]
    if name in ("syn1", "syn2"):
        generator = data_mod.gen_syn1 if name == "syn1" else data_mod.gen_syn2

        def make_data(seed):
            spec = data_mod.SynSpec(
                seed=seed,
                n_train=bench_cfg.get("n_train", 20),
                n_test=bench_cfg.get("n_test", 80),
                noise_std=bench_cfg.get("noise_std", 1.0),
            )
            train, test, _ = generator(spec)
            return train, test

        return make_data

    def make_data(seed):
        spec = data_mod.WienerNetworkSpec(
            seed=seed, n_samples=bench_cfg.get("n_samples", 1000)
        )
        tasks, _ = data_mod.gen_wiener_network(spec)
        return data_mod.train_test_split(
            tasks, bench_cfg.get("split_ratio", 0.5), seed=seed
        )

    return make_data


def cmd_bench(args) -> int:
    config = _load_config(args.config, args.set)
    _apply_flag_overrides(config, args)
    _validate_config(config, BENCH_SCHEMA)

    bench_cfg = config["benchmark"]
    gamtl_config = _gamtl_config(config.get("model", {}))
    rbf_cfg = config.get("rbf", {})
    make_data = _bench_data_factory(bench_cfg)
    n_runs = bench_cfg.get("n_runs", 10)
    base_seed = bench_cfg.get("base_seed", 0)

    if rbf_cfg.get("enabled", False):
        method = "rbf-gamtl"

        def make_model(train_tasks, seed):
            return fit_rbf(
                train_tasks,
                replace(gamtl_config, seed=seed),
                P=rbf_cfg.get("num_centers"),
                width_factor=rbf_cfg.get("width_factor", 1.0),
            )

    else:
        method = "gamtl"

        def make_model(train_tasks, seed):
            return fit(train_tasks, replace(gamtl_config, seed=seed))

    try:
        reports = [
            report_to_dict(
                benchmark(make_data, make_model, method, n_runs, base_seed, config=config)
            )
        ]
        if bench_cfg.get("include_baseline", False):
            reports.append(
                report_to_dict(
                    benchmark(
                        make_data,
                        lambda tasks, seed: fit_independent_ridge(
                            tasks, gamtl_config.ridge_lambda
                        ),
                        "independent-ridge",
                        n_runs,
                        base_seed,
                        config=config,
                    )
                )
            )
    except Exception as exc:
        raise RuntimeFailure(f"benchmark failed: {exc}") from exc

    payload = {"reports": reports}
    out_dir = Path(config.get("out_dir", "."))
    _write_json(out_dir / "benchmark.json", payload)
    print(f"wrote {out_dir / 'benchmark.json'}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gamtl", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("name", choices=["syn1", "syn2", "wiener"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-train", type=int, default=20)
    p.add_argument("--n-test", type=int, default=80)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--n-samples", type=int, default=1000, help="wiener samples per agent")
    p.add_argument("--split-ratio", type=float, default=0.5, help="wiener train fraction")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[])
    p.add_argument("--rbf", action="store_true", help="fit the RBF variant")
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory override")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score a saved model on a CSV split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task-column", default="task")
    p.add_argument("--target-column", default="y")
    p.add_argument("--feature-columns", help="comma-separated; default: all other columns")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export the learned task graph")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=["edge-csv", "dot", "json"], default="json")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", help="document path (default: stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("bench", help="repeated seeded benchmark from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[])
    p.add_argument("--rbf", action="store_true")
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", help="output directory override")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- exit-code contract over tracebacks
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
