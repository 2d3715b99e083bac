"""Metric files: per-run learning curves plus a summary table.

All numbers are written with ``repr`` so the same results always produce the
same bytes.
"""

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

__all__ = ["RUN_HEADER", "SUMMARY_HEADER", "SummaryRow", "summarize", "emit_csv", "emit_summary", "emit_all"]

RUN_HEADER = ("epoch", "test_acc", "train_acc", "sup_loss", "consistency", "objective", "lr")
SUMMARY_HEADER = ("name", "method", "alpha", "beta", "n", "mean_test_acc", "std_test_acc", "runs", "aborted")


@dataclass(frozen=True)
class SummaryRow:
    """Accuracy over seeds for one trainer.

    ``mean`` averages the final test accuracy of the runs that finished;
    ``std`` (sample standard deviation) is ``None`` unless at least two did.
    """

    name: str
    method: str
    alpha: float
    beta: float
    n: int
    mean: float
    std: float
    runs: int
    aborted: int
    abort_epochs: tuple = ()

    def as_dict(self):
        return {
            "name": self.name,
            "method": self.method,
            "alpha": self.alpha,
            "beta": self.beta,
            "n": self.n,
            "mean_test_acc": self.mean,
            "std_test_acc": self.std,
            "runs": self.runs,
            "aborted": self.aborted,
            "abort_epochs": list(self.abort_epochs),
        }


def _num(v):
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def summarize(results):
    groups = {}
    for r in results:
        groups.setdefault(r.name, []).append(r)
    rows = []
    for name, rs in groups.items():
        cfg = rs[0].config
        ok = [r.metrics.final_test_acc for r in rs if not r.metrics.aborted]
        mean = float(np.mean(ok)) if ok else None
        std = float(np.std(ok, ddof=1)) if len(ok) >= 2 else None
        rows.append(
            SummaryRow(
                name=name,
                method=cfg.method,
                alpha=float(cfg.alpha),
                beta=float(cfg.beta),
                n=int(cfg.n_aug),
                mean=mean,
                std=std,
                runs=len(rs),
                aborted=len(rs) - len(ok),
                abort_epochs=tuple(r.metrics.abort_epoch for r in rs if r.metrics.aborted),
            )
        )
    return rows


def run_filename(result):
    return f"{result.name}_{result.seed}.csv"


def emit_csv(results, out_dir):
    """Write ``runs/<name>_<seed>.csv`` for every run; returns the paths written."""
    run_dir = os.path.join(out_dir, "runs")
    os.makedirs(run_dir, exist_ok=True)
    paths = []
    for r in results:
        path = os.path.join(run_dir, run_filename(r))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RUN_HEADER)
            for rec in r.metrics.records:
                w.writerow(
                    [rec.epoch]
                    + [_num(getattr(rec, k)) for k in ("test_acc", "train_acc", "sup_loss", "consistency", "objective", "lr")]
                )
        paths.append(path)
    return paths


def _json_num(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return v


def emit_summary(results, out_dir):
    """Write ``summary.csv`` and ``summary.json``; returns the summary rows."""
    os.makedirs(out_dir, exist_ok=True)
    rows = summarize(results)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for row in rows:
            w.writerow(
                [row.name, row.method, repr(row.alpha), repr(row.beta), row.n, _num(row.mean), _num(row.std), row.runs, row.aborted]
            )
    doc = {
        "summary": [row.as_dict() for row in rows],
        "runs": [
            {
                "name": r.name,
                "method": r.config.method,
                "seed": r.seed,
                "final_test_acc": _json_num(r.metrics.final_test_acc),
                "epochs_completed": len(r.metrics.records),
                "aborted": r.metrics.aborted,
                "abort_epoch": r.metrics.abort_epoch,
                "abort_reason": r.metrics.abort_reason,
            }
            for r in results
        ],
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return rows


def emit_all(spec, results, out_dir):
    from .config import serialize

    os.makedirs(out_dir, exist_ok=True)
    # the output path is left out so the tree does not depend on where it lives
    with open(os.path.join(out_dir, "spec.yaml"), "w") as fh:
        fh.write(serialize(spec, include_output=False))
    if spec.emit_runs:
        emit_csv(results, out_dir)
    rows = emit_summary(results, out_dir) if spec.emit_summary else summarize(results)
    return rows
