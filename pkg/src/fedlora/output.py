"""Deterministic run outputs: a summary document and a long-format round trace.

Every numeric value is serialized in scientific notation with 13 significant
digits, and nothing time- or host-dependent is written, so identical
(config, seed) pairs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Sequence

from .config import config_to_mapping
from .orchestrator import RunSummary, SweepCell

SCHEMA_VERSION = 1

# marker survives json.dumps unescaped; stripped (with the quotes) afterwards
_FLOAT_SENTINEL = "@float@:"


def fmt_float(value: float) -> str:
    """Fixed-width float form with 13 significant digits."""
    return format(float(value), ".12e")


def run_id(summary: RunSummary) -> str:
    """Stable identifier derived from the full configuration (seed included)."""
    canonical = json.dumps(config_to_mapping(summary.config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _tag_floats(obj):
    if isinstance(obj, float):
        return _FLOAT_SENTINEL + fmt_float(obj)
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """json.dumps, but floats are rendered through fmt_float as JSON numbers."""
    return _strip_sentinels(json.dumps(_tag_floats(obj), indent=2, sort_keys=True))


def _strip_sentinels(text: str) -> str:
    out = []
    i = 0
    marker = '"' + _FLOAT_SENTINEL
    while True:
        j = text.find(marker, i)
        if j < 0:
            out.append(text[i:])
            return "".join(out)
        out.append(text[i:j])
        end = text.index('"', j + len(marker))
        out.append(text[j + len(marker) : end])
        i = end + 1


def summary_document(summary: RunSummary) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": run_id(summary),
        "config": config_to_mapping(summary.config),
        "metrics": {
            "global_accuracy_mean": summary.global_accuracy_mean,
            "local_accuracy_mean": summary.local_accuracy_mean,
            "utility_mean": summary.utility_mean,
            "noise_level_mean": summary.noise_level_mean,
        },
        "stabilization_round": summary.stabilization_round,
        "rounds": len(summary.records),
    }


def round_rows(summary: RunSummary) -> list[tuple[str, int, str, float]]:
    """Long-format trace: (run_id, round, metric, value), one row per metric per round."""
    rid = run_id(summary)
    rows = []
    for rec in summary.records:
        rows.append((rid, rec.round, "global_accuracy", rec.global_accuracy))
        per_client = [
            ("local_accuracy", rec.local_accuracy),
            ("level", rec.levels),
            ("true_std", rec.true_stds),
            ("sigma_hat", rec.sigma_hat),
            ("weight", rec.weights),
            ("utility", rec.utilities),
        ]
        for name, values in per_client:
            for i, v in enumerate(values):
                rows.append((rid, rec.round, f"{name}_{i}", float(v)))
        for i, row in enumerate(rec.mu_hat):
            for k, v in enumerate(row):
                rows.append((rid, rec.round, f"mu_hat_{i}_{k}", float(v)))
    return rows


def write_run(out_dir: str | os.PathLike, summary: RunSummary) -> None:
    """Write summary.json and rounds.csv under out_dir (created if needed)."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="ascii") as fh:
        fh.write(dumps(summary_document(summary)) + "\n")
    with open(os.path.join(out_dir, "rounds.csv"), "w", encoding="ascii") as fh:
        fh.write("run_id,round,metric,value\n")
        for rid, rnd, metric, value in round_rows(summary):
            fh.write(f"{rid},{rnd},{metric},{fmt_float(value)}\n")


def cell_dirname(axis: str, value) -> str:
    return f"{axis}_{value}".replace("/", "_").replace(" ", "")


def write_sweep(out_dir: str | os.PathLike, axis: str, cells: Sequence[SweepCell]) -> None:
    """One subdirectory per cell plus an index.json listing statuses."""
    os.makedirs(out_dir, exist_ok=True)
    index = {"schema_version": SCHEMA_VERSION, "axis": axis, "cells": []}
    for cell in cells:
        name = cell_dirname(axis, cell.value)
        entry = {"value": cell.value, "dir": name, "status": "ok" if cell.summary else "error"}
        if cell.summary is not None:
            write_run(os.path.join(out_dir, name), cell.summary)
            entry["run_id"] = run_id(cell.summary)
        else:
            entry["error"] = cell.error
        index["cells"].append(entry)
    with open(os.path.join(out_dir, "index.json"), "w", encoding="ascii") as fh:
        fh.write(dumps(index) + "\n")
