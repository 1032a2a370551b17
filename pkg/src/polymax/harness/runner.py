"""Experiment execution, result persistence, and summaries."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import __version__
from .._kernels import BACKEND
from ..errors import ParseError, PolymaxError
from .config import ExperimentConfig, ResultRecord
from .scenarios import SCENARIO_FUNCTIONS

_FIXED_COLUMNS = ("scenario", "replicate", "seed", "estimator", "sample_size", "error")


def _run_one(config: ExperimentConfig, replicate: int):
    """One replicate; estimator failures become error rows, never aborts."""
    fn = SCENARIO_FUNCTIONS[config.scenario][0]
    seed = config.replicate_seed(replicate)
    try:
        return fn(config, replicate, seed)
    except PolymaxError as exc:
        return [ResultRecord(config.scenario, replicate, seed, "error",
                             config.sample_sizes[0], {}, error=str(exc))]


def run_experiment(config: ExperimentConfig):
    """Run all replicates; returns (rows, summary) and writes them if
    config.output_dir is set. Worker count never changes the output:
    replicates are independently seeded and merged by index."""
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_one, [config] * config.replicates,
                                   range(config.replicates)))
    else:
        chunks = [_run_one(config, r) for r in range(config.replicates)]
    rows = [row for chunk in chunks for row in chunk]

    failures = sum(1 for r in rows if r.error)
    summary_fn = SCENARIO_FUNCTIONS[config.scenario][1]
    summary = {
        "scenario": config.scenario,
        "config": config.as_dict(),
        "package_version": __version__,
        "kernel_backend": BACKEND,
        "replicates": config.replicates,
        "failed_replicates": failures,
        "metrics": summary_fn(config, rows),
    }
    _attach_halfwidths(rows, summary)

    if config.output_dir:
        write_results(config.output_dir, rows, summary)
    return rows, summary


def _attach_halfwidths(rows, summary):
    """95% normal-approximation half-widths of per-estimator squared errors."""
    groups = {}
    for r in rows:
        if r.error:
            continue
        for key, val in r.values.items():
            if key.startswith("sq_error"):
                groups.setdefault((r.estimator, r.sample_size, key), []).append(val)
    hw = {}
    for (est, n, key), vals in sorted(groups.items()):
        if len(vals) > 1:
            hw[f"{est}/n={n}/{key}"] = 1.96 * float(np.std(vals, ddof=1)) / np.sqrt(len(vals))
    if hw:
        summary["mse_halfwidths"] = hw


def _value_columns(rows):
    keys = set()
    for r in rows:
        keys.update(r.values)
    return sorted(keys)


def write_results(output_dir, rows, summary):
    """results.csv (one row per replicate x estimator) + summary.json."""
    os.makedirs(output_dir, exist_ok=True)
    csv_path = os.path.join(output_dir, "results.csv")
    value_cols = _value_columns(rows)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(_FIXED_COLUMNS) + value_cols)
        for r in rows:
            writer.writerow(
                [r.scenario, r.replicate, r.seed, r.estimator, r.sample_size, r.error]
                + [repr(r.values[k]) if k in r.values else "" for k in value_cols])
    json_path = os.path.join(output_dir, "summary.json")
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def read_results(csv_path):
    """Rows back from results.csv."""
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ParseError(f"{csv_path}: empty file, 0 rows")
            raw = list(reader)
    except OSError as exc:
        raise ParseError(f"cannot read results {csv_path}: {exc}") from exc
    if not raw:
        raise ParseError(f"{csv_path}: no result rows (0 rows)")
    value_cols = header[len(_FIXED_COLUMNS):]
    rows = []
    for line in raw:
        fixed, rest = line[: len(_FIXED_COLUMNS)], line[len(_FIXED_COLUMNS):]
        values = {}
        for key, cell in zip(value_cols, rest):
            if cell != "":
                values[key] = float(cell)
        rows.append(ResultRecord(scenario=fixed[0], replicate=int(fixed[1]),
                                 seed=int(fixed[2]), estimator=fixed[3],
                                 sample_size=int(fixed[4]), values=values,
                                 error=fixed[5]))
    return rows


def summarize(csv_path) -> str:
    """Deterministic per-(estimator, n) mean table from a results file."""
    rows = read_results(csv_path)
    value_cols = _value_columns(rows)
    lines = [f"scenario: {rows[0].scenario}   rows: {len(rows)}"]
    failures = sum(1 for r in rows if r.error)
    lines.append(f"failed rows: {failures}")
    lines.append(f"{'estimator':>16} {'n':>8} " + " ".join(f"{c:>18}" for c in value_cols))
    for est, n in sorted({(r.estimator, r.sample_size) for r in rows}):
        sub = [r for r in rows if r.estimator == est and r.sample_size == n and not r.error]
        cells = []
        for c in value_cols:
            vals = [r.values[c] for r in sub if c in r.values]
            cells.append(f"{np.mean(vals):>18.6g}" if vals else f"{'-':>18}")
        lines.append(f"{est:>16} {n:>8} " + " ".join(cells))
    return "\n".join(lines) + "\n"
