"""Experiment orchestration: spec files, seed sweeps, metric files and the CLI."""

from .config import DatasetSpec, ExperimentSpec, apply_overrides, build_spec, parse_spec, parse_text, serialize
from .emit import RUN_HEADER, SUMMARY_HEADER, SummaryRow, emit_all, emit_csv, emit_summary, summarize
from .runner import RunResult, run_experiment

__all__ = [
    "DatasetSpec",
    "ExperimentSpec",
    "apply_overrides",
    "build_spec",
    "parse_spec",
    "parse_text",
    "serialize",
    "RUN_HEADER",
    "SUMMARY_HEADER",
    "SummaryRow",
    "emit_all",
    "emit_csv",
    "emit_summary",
    "summarize",
    "RunResult",
    "run_experiment",
]
