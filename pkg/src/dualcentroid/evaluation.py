"""Hierarchy-aware evaluation metrics.

Hierarchical F1 augments each top-1 prediction and each ground truth with
all ancestor categories (the virtual root excluded) and micro-averages
precision/recall over those extended sets, so an error inside the right
subtree still earns partial credit. Hierarchical top-k applies the same
per-instance credit to the best of the top-k predictions. All metrics
consume paths only, never scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .scoring import Prediction
from .taxonomy import ancestor_set

METRIC_KEYS = ("h_f1", "top_k_accuracy", "h_top_k_accuracy", "exact_match")
_COLUMNS = {"h_f1": "H-F1", "top_k_accuracy": "Top-k", "h_top_k_accuracy": "H-Top-k", "exact_match": "Exact"}


@dataclass
class EvalInstance:
    true_path: str
    prediction: Prediction


def instance_hf1(true_path: str, pred_path: str) -> float:
    """Per-instance hierarchical F1 between two ancestor-augmented paths."""
    pred = ancestor_set(pred_path)
    true = ancestor_set(true_path)
    overlap = len(pred & true)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(true)
    return 2.0 * precision * recall / (precision + recall)


def hierarchical_f1(pairs: list[tuple[str, str]]) -> float:
    """Micro-averaged hierarchical F1 over (true, predicted top-1) pairs:
    intersections and set sizes are summed across instances before the
    precision/recall ratio is taken."""
    if not pairs:
        raise ValidationError("hierarchical_f1 requires at least one instance")
    inter = pred_total = true_total = 0
    for true_path, pred_path in pairs:
        pred = ancestor_set(pred_path)
        true = ancestor_set(true_path)
        inter += len(pred & true)
        pred_total += len(pred)
        true_total += len(true)
    if inter == 0:
        return 0.0
    precision = inter / pred_total
    recall = inter / true_total
    return 2.0 * precision * recall / (precision + recall)


def top_k_accuracy(instances: list[EvalInstance], k: int) -> float:
    """Fraction of instances whose true path appears among the top-k
    predicted paths (exact path equality)."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if not instances:
        return 0.0
    hits = sum(1 for inst in instances if inst.true_path in inst.prediction.paths()[:k])
    return hits / len(instances)


def hierarchical_top_k(instances: list[EvalInstance], k: int) -> float:
    """Mean over instances of the best per-instance hierarchical F1 achieved
    by any of the top-k predictions (graded partial credit)."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if not instances:
        return 0.0
    total = 0.0
    for inst in instances:
        total += max(
            (instance_hf1(inst.true_path, p) for p in inst.prediction.paths()[:k]),
            default=0.0,
        )
    return total / len(instances)


def exact_match(instances: list[EvalInstance]) -> float:
    """Fraction of instances whose top-1 path equals the truth exactly."""
    if not instances:
        return 0.0
    hits = sum(1 for inst in instances if inst.prediction.top_path == inst.true_path)
    return hits / len(instances)


@dataclass
class EvalReport:
    """Metric values with mean and sample standard deviation across runs.
    A single-run report has zero stds and one per_run entry."""

    k: int
    h_f1: float
    top_k_accuracy: float
    h_top_k_accuracy: float
    exact_match: float
    stds: dict[str, float] = field(default_factory=lambda: {m: 0.0 for m in METRIC_KEYS})
    per_run: list[dict[str, float]] = field(default_factory=list)

    def values(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRIC_KEYS}

    def to_record(self, name: str | None = None) -> dict:
        rec: dict = {"k": self.k, "n_runs": max(1, len(self.per_run))}
        if name is not None:
            rec["method"] = name
        for m in METRIC_KEYS:
            rec[m] = getattr(self, m)
            rec[f"{m}_std"] = self.stds[m]
        rec["per_run"] = self.per_run
        return rec


def evaluate(instances: list[EvalInstance], k: int) -> EvalReport:
    """Single-run report over evaluated instances."""
    if not instances:
        raise ValidationError("cannot evaluate an empty instance list")
    values = {
        "h_f1": hierarchical_f1([(i.true_path, i.prediction.top_path) for i in instances]),
        "top_k_accuracy": top_k_accuracy(instances, k),
        "h_top_k_accuracy": hierarchical_top_k(instances, k),
        "exact_match": exact_match(instances),
    }
    return EvalReport(k=k, **values, per_run=[values])


def aggregate_runs(reports: list[EvalReport]) -> EvalReport:
    """Mean and sample standard deviation (n-1 denominator; zero for a
    single run) per metric across runs."""
    if not reports:
        raise ValidationError("aggregate_runs requires at least one report")
    ks = {r.k for r in reports}
    if len(ks) != 1:
        raise ValidationError(f"cannot aggregate reports with different k: {sorted(ks)}")
    per_run = [run for r in reports for run in r.per_run]
    n = len(per_run)
    means = {m: sum(run[m] for run in per_run) / n for m in METRIC_KEYS}
    stds = {m: 0.0 for m in METRIC_KEYS}
    if n > 1:
        for m in METRIC_KEYS:
            var = sum((run[m] - means[m]) ** 2 for run in per_run) / (n - 1)
            stds[m] = math.sqrt(var)
    return EvalReport(k=ks.pop(), **means, stds=stds, per_run=per_run)


def evaluate_predictions(
    true_paths: list[str], predictions: list[Prediction], k: int
) -> EvalReport:
    if len(true_paths) != len(predictions):
        raise ValidationError(
            f"got {len(true_paths)} truths for {len(predictions)} predictions"
        )
    instances = [EvalInstance(t, p) for t, p in zip(true_paths, predictions)]
    return evaluate(instances, k)


def render_table(rows: dict[str, EvalReport]) -> str:
    """Aligned text table, one row per method, mean +/- std per metric."""
    if not rows:
        return ""
    k = next(iter(rows.values())).k
    headers = ["Method"] + [_COLUMNS[m].replace("k", str(k)) for m in METRIC_KEYS]
    table = [headers]
    for name, report in rows.items():
        cells = [name]
        for m in METRIC_KEYS:
            cells.append(f"{getattr(report, m):.3f} ± {report.stds[m]:.3f}")
        table.append(cells)
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = []
    for r, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
