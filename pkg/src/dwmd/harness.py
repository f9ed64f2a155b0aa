"""Synthetic tasks, CSV ingestion, experiment orchestration, and reports.

Experiments train `repeats` models with seeds 1..repeats, evaluate target
accuracy for each, and aggregate mean and standard deviation. Reports are
written as plain CSV plus a JSON config snapshot, byte-identical across
re-runs.
"""

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, replace

import numpy as np

from .discrepancy import DwmdConfig
from .nettrain import NetworkSpec, TrainConfig, evaluate, train_uda

__all__ = [
    "UdaExperiment",
    "ExperimentReport",
    "gen_moons",
    "gen_gaussian_shift",
    "load_csv",
    "run_experiment",
    "write_report",
    "experiment_from_dict",
    "experiment_to_dict",
]


@dataclass(frozen=True)
class UdaExperiment:
    """One experiment: a task description, a network, a training config,
    a number of seeded repeats, and an output directory."""

    task: dict
    spec: NetworkSpec
    cfg: TrainConfig
    repeats: int = 5
    outputs: str = "reports"

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        kind = self.task.get("kind")
        if kind not in ("moons", "gaussian_shift", "csv"):
            raise ValueError(f"unknown task kind {kind!r}")


@dataclass
class ExperimentReport:
    """Per-seed accuracies, their aggregate, per-epoch traces, and the
    resolved configuration snapshot."""

    per_seed: list  # [{"seed", "accuracy" or "error"}]
    mean_accuracy: float
    std_accuracy: float
    traces: dict  # seed -> {"source_loss": [...], "regularizer": {layer: [...]}, "target_accuracy": [...]}
    config_snapshot: dict


def gen_moons(m_per_domain, rotation_degrees, noise, seed):
    """Two interleaved half-circles per domain; the target cloud is the same
    construction rotated about the origin.

    Base point positions are deterministic (evenly spaced arc angles); only
    the additive noise is random, so rotation 0 with noise 0 gives identical
    domains. Labels are exactly balanced. Returns
    (source, source_labels, target, target_labels); target labels are for
    evaluation only.
    """
    if m_per_domain < 40:
        raise ValueError(f"need m_per_domain >= 40, got {m_per_domain}")
    if m_per_domain % 2 != 0:
        raise ValueError(f"m_per_domain must be even, got {m_per_domain}")
    if not 0.0 <= rotation_degrees <= 90.0:
        raise ValueError(f"rotation must be in [0, 90] degrees, got {rotation_degrees}")
    if noise < 0.0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    half = m_per_domain // 2
    angles = np.linspace(0.0, np.pi, half)
    outer = np.column_stack([np.cos(angles), np.sin(angles)])
    inner = np.column_stack([1.0 - np.cos(angles), -np.sin(angles) + 0.5])
    base = np.vstack([outer, inner])
    base = base - base.mean(axis=0)
    labels = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(half, dtype=np.int64)])

    rng = np.random.default_rng(seed)
    source = base + noise * rng.standard_normal(base.shape)
    target = base + noise * rng.standard_normal(base.shape)
    theta = math.radians(rotation_degrees)
    rot = np.array(
        [[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]]
    )
    target = target @ rot
    return source, labels, target, labels.copy()


def gen_gaussian_shift(m, d, offset, scale, seed):
    """Two-class Gaussian blobs; target samples are scaled then offset per
    dimension.

    Classes are separated along the last dimension symmetrically about 0, so
    each dimension's overall mean is ~0 in the source and ~offset[j] in the
    target, making the robust-mean gap track |offset|. Returns
    (source, source_labels, target, target_labels).
    """
    offset = np.asarray(offset, dtype=np.float64)
    scale = np.asarray(scale, dtype=np.float64)
    if m < 2 or d < 1:
        raise ValueError(f"need m >= 2 and d >= 1, got m={m}, d={d}")
    if offset.shape != (d,) or scale.shape != (d,):
        raise ValueError(f"offset and scale must be {d}-vectors")
    if np.any(scale <= 0.0):
        raise ValueError("scale entries must be > 0")
    half = m // 2
    centers = np.zeros(d)
    sep = np.zeros(d)
    sep[-1] = 1.0
    labels = np.concatenate(
        [np.zeros(half, dtype=np.int64), np.ones(m - half, dtype=np.int64)]
    )
    signs = np.where(labels == 0, -1.0, 1.0)[:, None]

    rng = np.random.default_rng(seed)
    source = centers + signs * sep + rng.standard_normal((m, d))
    target_base = centers + signs * sep + rng.standard_normal((m, d))
    target = target_base * scale + offset
    return source, labels, target, labels.copy()


def load_csv(path, label_column=None):
    """Read a rectangular numeric CSV with a header row.

    Returns (matrix, labels) where labels is None unless label_column names a
    column, which is then parsed as integers and excluded from the features.
    Errors carry row/column coordinates (1-based, header = row 1).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise ValueError(f"{path}: no column named {label_column!r} in header")
            label_idx = header.index(label_column)
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            feats = []
            for col, cell in enumerate(row):
                if col == label_idx:
                    try:
                        labels.append(int(cell))
                    except ValueError:
                        raise ValueError(
                            f"{path}: row {lineno}, column {col + 1}: "
                            f"label {cell!r} is not an integer"
                        ) from None
                else:
                    try:
                        feats.append(float(cell))
                    except ValueError:
                        raise ValueError(
                            f"{path}: row {lineno}, column {col + 1}: "
                            f"{cell!r} is not numeric"
                        ) from None
            rows.append(feats)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    matrix = np.asarray(rows, dtype=np.float64)
    return matrix, (np.asarray(labels, dtype=np.int64) if label_idx is not None else None)


def save_csv(path, matrix, labels=None, label_column="label"):
    """Write a sample matrix (optionally with an integer label column) in the
    format load_csv reads back."""
    matrix = np.asarray(matrix, dtype=np.float64)
    header = [f"f{j}" for j in range(matrix.shape[1])]
    if labels is not None:
        header.append(label_column)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(matrix.shape[0]):
            row = [repr(float(v)) for v in matrix[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)


def _materialize_task(task, seed):
    kind = task["kind"]
    if kind == "moons":
        return gen_moons(
            task.get("m_per_domain", 400),
            task.get("rotation_degrees", 40.0),
            task.get("noise", 0.1),
            seed,
        )
    if kind == "gaussian_shift":
        d = task["d"]
        return gen_gaussian_shift(
            task.get("m", 1000), d, task["offset"], task.get("scale", [1.0] * d), seed
        )
    source, s_labels = load_csv(task["source_path"], task.get("label_column", "label"))
    target, t_labels = load_csv(task["target_path"], task.get("label_column", "label"))
    if s_labels is None:
        raise ValueError(f"{task['source_path']}: source file needs a label column")
    return source, s_labels, target, t_labels


def run_experiment(exp):
    """Train one model per seed 1..repeats and aggregate target accuracy.

    Each seed regenerates the task (synthetic tasks resample) and trains with
    that seed. Per-seed failures are recorded and excluded from aggregates;
    the run errors only when every seed fails.
    """
    per_seed, traces = [], {}
    for seed in range(1, exp.repeats + 1):
        try:
            source, y_s, target, y_t = _materialize_task(exp.task, seed)
            cfg = replace(exp.cfg, seed=seed)
            model = train_uda(source, y_s, target, exp.spec, cfg, target_labels=y_t)
            acc = evaluate(model, target, y_t) if y_t is not None else float("nan")
            per_seed.append({"seed": seed, "accuracy": acc})
            traces[seed] = model.history
        except (ValueError, RuntimeError) as exc:
            per_seed.append({"seed": seed, "error": str(exc)})
    accs = [r["accuracy"] for r in per_seed if "accuracy" in r]
    if not accs:
        raise RuntimeError(
            "all seeds failed: " + "; ".join(r["error"] for r in per_seed)
        )
    return ExperimentReport(
        per_seed=per_seed,
        mean_accuracy=float(np.mean(accs)),
        std_accuracy=float(np.std(accs)),
        traces=traces,
        config_snapshot=experiment_to_dict(exp),
    )


def write_report(report, out_dir):
    """Emit per_seed.csv, summary.csv, trace_seed<k>.csv, and
    config_snapshot.json into out_dir. Deterministic byte-for-byte."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "per_seed.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "target_accuracy", "status"])
        for row in report.per_seed:
            if "accuracy" in row:
                writer.writerow([row["seed"], repr(row["accuracy"]), "ok"])
            else:
                writer.writerow([row["seed"], "", "error: " + row["error"]])
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mean_accuracy", "std_accuracy", "n_seeds_ok", "n_seeds_total"])
        n_ok = sum(1 for r in report.per_seed if "accuracy" in r)
        writer.writerow(
            [repr(report.mean_accuracy), repr(report.std_accuracy), n_ok, len(report.per_seed)]
        )
    for seed in sorted(report.traces):
        trace = report.traces[seed]
        layers = sorted(trace["regularizer"])
        with open(
            os.path.join(out_dir, f"trace_seed{seed}.csv"), "w", newline="", encoding="utf-8"
        ) as fh:
            writer = csv.writer(fh)
            header = ["epoch", "source_loss"]
            header += [f"regularizer_layer{layer}" for layer in layers]
            if trace["target_accuracy"]:
                header.append("target_accuracy")
            writer.writerow(header)
            for epoch in range(len(trace["source_loss"])):
                row = [epoch + 1, repr(trace["source_loss"][epoch])]
                row += [repr(trace["regularizer"][layer][epoch]) for layer in layers]
                if trace["target_accuracy"]:
                    row.append(repr(trace["target_accuracy"][epoch]))
                writer.writerow(row)
    with open(os.path.join(out_dir, "config_snapshot.json"), "w", encoding="utf-8") as fh:
        json.dump(report.config_snapshot, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cfg_to_dict(cfg):
    d = asdict(cfg)
    d["dwmd"] = asdict(cfg.dwmd)
    return d


def experiment_to_dict(exp):
    """Lossless mapping of an experiment onto plain JSON-able types."""
    return {
        "task": dict(exp.task),
        "spec": {
            "layer_sizes": list(exp.spec.layer_sizes),
            "activations": list(exp.spec.activations),
            "matched_layers": list(exp.spec.matched_layers),
        },
        "cfg": _cfg_to_dict(exp.cfg),
        "repeats": exp.repeats,
        "outputs": exp.outputs,
    }


def _checked_kwargs(data, allowed, where):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    return data


def experiment_from_dict(data):
    """Inverse of experiment_to_dict; unknown keys anywhere are errors."""
    data = _checked_kwargs(
        dict(data), ("task", "spec", "cfg", "repeats", "outputs"), "experiment"
    )
    spec_data = _checked_kwargs(
        dict(data["spec"]), ("layer_sizes", "activations", "matched_layers"), "spec"
    )
    cfg_data = dict(data.get("cfg", {}))
    dwmd_data = _checked_kwargs(
        dict(cfg_data.pop("dwmd", {})),
        ("n", "psi", "beta", "c_policy", "c_value", "alpha", "standardize"),
        "cfg.dwmd",
    )
    cfg_data = _checked_kwargs(
        cfg_data,
        (
            "lam",
            "regularizer",
            "cmd_order",
            "mmd_bandwidth",
            "epochs",
            "batch_size",
            "learning_rate",
            "momentum",
            "optimizer",
            "seed",
        ),
        "cfg",
    )
    return UdaExperiment(
        task=dict(data["task"]),
        spec=NetworkSpec(**spec_data),
        cfg=TrainConfig(dwmd=DwmdConfig(**dwmd_data), **cfg_data),
        repeats=data.get("repeats", 5),
        outputs=data.get("outputs", "reports"),
    )
