"""Metrics, per-method aggregation across seeds, and artifact emission.

Summaries pick one learning rate per method (highest convergence rate, ties
broken by lower mean epochs for the logic experiments; best validation score
for the image experiments) and then aggregate mean +/- population standard
deviation over seeds.  Emitted files are byte-deterministic: float cells use
``repr`` (exact round-trip) and no timestamps are written.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .numkit import DimensionError

__all__ = [
    "MetricRow",
    "SummaryRow",
    "ExperimentReport",
    "classification_accuracy",
    "reconstruction_mse",
    "summarize",
    "render_summary_csv",
    "render_summary_json",
    "render_trace_csv",
    "emit",
    "SCHEMA_VERSION",
    "SUMMARY_CSV_HEADER",
]

SCHEMA_VERSION = 1

# Canonical method ordering for tables (singles first, tensioned last).
METHOD_ORDER = [
    "single_and", "single_xor", "single_cls", "single_rec",
    "uniform", "minnorm", "central", "minnorm_tensor", "central_tensor",
]

SUMMARY_CSV_HEADER = [
    "method", "lr", "n_seeds", "convergence_rate_pct",
    "epochs_mean", "epochs_std",
    "accuracy_mean", "accuracy_std", "mse_mean", "mse_std",
]


def classification_accuracy(preds, labels) -> float:
    """Fraction of correct predictions; ``preds`` may be class ids or a score
    matrix (argmax over the last axis)."""
    p = np.asarray(preds)
    t = np.asarray(labels)
    if p.size == 0 or t.size == 0:
        raise ValueError("empty input")
    if p.ndim == 2:
        p = p.argmax(axis=1)
    if p.shape != t.shape:
        raise DimensionError(f"prediction shape {p.shape} does not match labels {t.shape}")
    return float(np.mean(p == t))


def reconstruction_mse(pred, target) -> float:
    """Mean squared error over all pixels of all images."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    d = p - t
    return float(np.mean(d * d))


@dataclass
class MetricRow:
    """One seeded run at one learning rate."""

    method: str
    lr: float
    seed: int
    converged: bool
    epochs: int
    accuracy: float | None = None
    reconstruction_mse: float | None = None
    val_accuracy: float | None = None
    val_mse: float | None = None

    def val_score(self) -> float:
        """Scalar validation quality for best-lr selection (higher is better)."""
        if not self.converged:
            return -np.inf
        acc = self.val_accuracy if self.val_accuracy is not None else self.accuracy
        mse = self.val_mse if self.val_mse is not None else self.reconstruction_mse
        score = 0.0
        if acc is not None:
            score += acc
        if mse is not None:
            score -= mse
        return score


@dataclass
class SummaryRow:
    """Per-method aggregate at that method's selected learning rate."""

    method: str
    lr: float
    n_seeds: int
    convergence_rate_pct: float
    epochs_mean: float
    epochs_std: float
    accuracy_mean: float | None = None
    accuracy_std: float | None = None
    mse_mean: float | None = None
    mse_std: float | None = None


@dataclass
class ExperimentReport:
    """Everything one experiment produced: raw rows, per-method summaries,
    representative per-iteration traces, and the echoed configuration."""

    meta: dict
    rows: list
    summary: list
    traces: dict = field(default_factory=dict)


def _method_sort_key(method: str):
    try:
        return (0, METHOD_ORDER.index(method))
    except ValueError:
        return (1, method)


def _aggregate(method: str, lr: float, rows: list[MetricRow]) -> SummaryRow:
    epochs = np.array([r.epochs for r in rows], dtype=np.float64)
    rate = 100.0 * float(np.mean([r.converged for r in rows]))
    summary = SummaryRow(
        method=method,
        lr=lr,
        n_seeds=len(rows),
        convergence_rate_pct=rate,
        epochs_mean=float(epochs.mean()),
        epochs_std=float(epochs.std()),
    )
    accs = [r.accuracy for r in rows if r.accuracy is not None]
    mses = [r.reconstruction_mse for r in rows if r.reconstruction_mse is not None]
    if accs:
        summary.accuracy_mean = float(np.mean(accs))
        summary.accuracy_std = float(np.std(accs))
    if mses:
        summary.mse_mean = float(np.mean(mses))
        summary.mse_std = float(np.std(mses))
    return summary


def summarize(rows: list[MetricRow], rule: str = "logic") -> list[SummaryRow]:
    """Group rows by method, select each method's best learning rate, and
    aggregate over seeds at that rate.

    ``rule='logic'``: highest convergence rate, then lowest mean epochs, then
    lower lr.  ``rule='image'``: highest mean validation score, then lower lr.
    """
    if not rows:
        raise ValueError("no rows to summarize")
    if rule not in ("logic", "image"):
        raise ValueError(f"unknown selection rule {rule!r}")
    by_method: dict[str, dict[float, list[MetricRow]]] = {}
    for row in rows:
        by_method.setdefault(row.method, {}).setdefault(row.lr, []).append(row)

    out = []
    for method in sorted(by_method, key=_method_sort_key):
        candidates = []
        for lr, lr_rows in sorted(by_method[method].items()):
            agg = _aggregate(method, lr, lr_rows)
            if rule == "logic":
                key = (-agg.convergence_rate_pct, agg.epochs_mean, lr)
            else:
                key = (-float(np.mean([r.val_score() for r in lr_rows])), lr)
            candidates.append((key, agg))
        candidates.sort(key=lambda c: c[0])
        out.append(candidates[0][1])
    return out


# ---------------------------------------------------------------------------
# Rendering.  Header layouts are frozen; bump SCHEMA_VERSION on change.
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_summary_csv(summary: list[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(SUMMARY_CSV_HEADER)
    for s in summary:
        w.writerow([_cell(getattr(s, col)) for col in SUMMARY_CSV_HEADER])
    return buf.getvalue()


def render_rows_csv(rows: list[MetricRow]) -> str:
    header = ["method", "lr", "seed", "converged", "epochs",
              "accuracy", "reconstruction_mse", "val_accuracy", "val_mse"]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(getattr(r, col)) for col in header])
    return buf.getvalue()


def render_summary_json(report: ExperimentReport) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "meta": report.meta,
        "summary": [asdict(s) for s in report.summary],
        "rows": [asdict(r) for r in report.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def trace_header(tasks: int) -> list[str]:
    cols = ["iter"]
    for prefix in ("loss", "grad_norm", "angle_deg", "k", "c"):
        cols += [f"{prefix}_{m}" for m in range(tasks)]
    cols += ["v_norm", "beta"]
    return cols


def render_trace_csv(record) -> str:
    """Per-iteration trace of a single run (the learning-curve quantities:
    per-task losses, gradient norms, angles to the applied direction, weights,
    tension factors, direction norm and backtrack scale)."""
    tasks = record.losses.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(trace_header(tasks))
    for i in range(record.losses.shape[0]):
        row = [i]
        for arr in (record.losses, record.grad_norms, record.angles_deg,
                    record.weights, record.factors):
            row += [repr(float(x)) for x in arr[i]]
        row += [repr(float(record.v_norms[i])), repr(float(record.betas[i]))]
        w.writerow(row)
    return buf.getvalue()


def render_files(report: ExperimentReport, fmt: str = "csv") -> dict[str, str]:
    """All artifact files for a report, name -> content."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    files = {"meta.json": json.dumps(
        {"schema_version": SCHEMA_VERSION, "meta": report.meta}, indent=2, sort_keys=True) + "\n"}
    if fmt == "csv":
        files["summary.csv"] = render_summary_csv(report.summary)
        files["rows.csv"] = render_rows_csv(report.rows)
    else:
        files["summary.json"] = render_summary_json(report)
    for method, record in sorted(report.traces.items()):
        files[f"trace_{method}.csv"] = render_trace_csv(record)
    return files


def emit(report: ExperimentReport, fmt: str, outdir) -> list[Path]:
    """Write the report's artifact files under ``outdir``; returns the paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, content in sorted(render_files(report, fmt).items()):
        p = out / name
        p.write_text(content)
        paths.append(p)
    return paths
