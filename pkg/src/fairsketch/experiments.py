"""Unfairness / price-of-fairness / efficiency sweeps over CM, FCM and RP.

Each (sketch, sweep value, trial) produces one row per group plus one
``group=all`` row carrying the sketch-wide numbers.  Summary rows with
``trial=mean`` average the ``ok`` rows over trials.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .allocation import fair_widths, solve_row_partition
from .datagen import StreamDataset, generate_from_genspec, group_by_rank, group_equi_width
from .errors import InfeasibleAllocationError
from .hashing import derive_seeds
from .metrics import FrequencyOracle, GroupReport, group_report
from .sketch import CountMinSketch, FairCountMinSketch, RowPartitionSketch

logger = logging.getLogger(__name__)

EXPERIMENTS = ("unfairness", "pof", "efficiency")
SWEEPS = ("n_l", "w", "d", "groups")
RESULT_COLUMNS = [
    "experiment",
    "sketch",
    "sweep_var",
    "sweep_value",
    "trial",
    "group",
    "mean_alpha",
    "unfairness",
    "total_additive_error",
    "pof",
    "build_ms",
    "query_ns",
    "status",
]

DataSource = Union[StreamDataset, dict]


@dataclass
class RunConfig:
    experiment: str
    sweep: str
    values: Sequence[int]
    source: DataSource
    w: int
    d: int
    trials: int = 5
    seed: int = 0
    with_rp: bool = False
    precision: str = "exact"
    sketches: tuple[str, ...] = field(default=("cm", "fcm"))

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.with_rp and "rp" not in self.sketches:
            self.sketches = (*self.sketches, "rp")


@dataclass
class SketchRun:
    """Outcome of building and querying one sketch on one dataset."""

    estimates: np.ndarray
    build_ms: float
    query_ns: float
    widths: list[int] | None = None


def _timed_build(make, insert) -> tuple[object, float]:
    t0 = time.perf_counter()
    sk = make()
    insert(sk)
    return sk, (time.perf_counter() - t0) * 1e3


def _timed_query(query, n: int) -> tuple[np.ndarray, float]:
    query()  # warm-up
    t0 = time.perf_counter()
    est = query()
    elapsed = time.perf_counter() - t0
    return est, elapsed * 1e9 / max(n, 1)


def run_cm(oracle: FrequencyOracle, w: int, d: int, seed: int) -> SketchRun:
    sk, build_ms = _timed_build(
        lambda: CountMinSketch(w, d, seed), lambda s: s.update_many(oracle.keys, oracle.freqs)
    )
    est, query_ns = _timed_query(lambda: sk.estimate_many(oracle.keys), oracle.n)
    return SketchRun(est, build_ms, query_ns)


def run_fcm(oracle: FrequencyOracle, widths: Sequence[int], d: int, seed: int) -> SketchRun:
    sk, build_ms = _timed_build(
        lambda: FairCountMinSketch(widths, d, seed),
        lambda s: s.update_many(oracle.keys, oracle.groups, oracle.freqs),
    )
    est, query_ns = _timed_query(lambda: sk.estimate_many(oracle.keys, oracle.groups), oracle.n)
    return SketchRun(est, build_ms, query_ns, list(widths))


def run_rp(oracle: FrequencyOracle, w: int, rows: Sequence[int], seed: int) -> SketchRun:
    sk, build_ms = _timed_build(
        lambda: RowPartitionSketch(w, rows, seed),
        lambda s: s.update_many(oracle.keys, oracle.groups, oracle.freqs),
    )
    est, query_ns = _timed_query(lambda: sk.estimate_many(oracle.keys, oracle.groups), oracle.n)
    return SketchRun(est, build_ms, query_ns)


def _densify(labels: np.ndarray) -> np.ndarray:
    present = np.unique(labels)
    if len(present) == labels.max() + 1:
        return labels
    logger.info("dropping %d empty group(s)", int(labels.max()) + 1 - len(present))
    return np.searchsorted(present, labels)


def dataset_for(cfg: RunConfig, value: int, trial: int) -> StreamDataset:
    """The dataset for one sweep point and trial (regenerated per trial for genspecs)."""
    data_seed = derive_seeds(cfg.seed, 1, trial)[0]
    src = cfg.source
    if isinstance(src, dict):
        if cfg.sweep == "n_l":
            return generate_from_genspec(src, data_seed, n_low=int(value))
        ds = generate_from_genspec(src, data_seed)
    else:
        ds = src
        if cfg.sweep == "n_l":
            return ds.regroup(group_by_rank(ds.freqs, int(value)))
    if cfg.sweep == "groups" and isinstance(src, dict):
        return ds.regroup(_densify(group_equi_width(ds.freqs, int(value))))
    return ds


def _sweep_params(cfg: RunConfig, value) -> tuple[int, int]:
    w = int(value) if cfg.sweep == "w" else cfg.w
    d = int(value) if cfg.sweep == "d" else cfg.d
    return w, d


def _rows_for(cfg, sketch, value, trial, report: GroupReport | None, run, L_cm, status):
    base = {
        "experiment": cfg.experiment,
        "sketch": sketch,
        "sweep_var": cfg.sweep,
        "sweep_value": value,
        "trial": trial,
    }
    if report is None:
        return [{**base, "group": "all", "status": status}]
    rows = []
    for gs in report.groups:
        rows.append(
            {
                **base,
                "group": gs.group,
                "mean_alpha": gs.mean_alpha,
                "total_additive_error": gs.total_additive_error,
                "status": status,
            }
        )
    total = report.total_additive_error
    rows.append(
        {
            **base,
            "group": "all",
            "mean_alpha": float(np.mean(report.mean_alphas)),
            "unfairness": report.unfairness,
            "total_additive_error": total,
            "pof": total - L_cm,
            "build_ms": run.build_ms,
            "query_ns": run.query_ns,
            "status": status,
        }
    )
    return rows


def run_point(cfg: RunConfig, value, trial: int) -> list[dict]:
    """All sketches at one sweep value and trial."""
    ds = dataset_for(cfg, value, trial)
    if cfg.sweep == "groups" and not isinstance(cfg.source, dict) and int(value) != ds.num_groups:
        logger.warning(
            "ingested dataset has %d groups; sweep value %s replaced", ds.num_groups, value
        )
        value = ds.num_groups
    oracle = ds.oracle()
    w, d = _sweep_params(cfg, value)
    sketch_seed = derive_seeds(cfg.seed, 1, trial, 1)[0]
    sizes = oracle.group_sizes()
    rows = []

    cm = run_cm(oracle, w, d, sketch_seed)
    L_cm = int((cm.estimates - oracle.freqs).sum())
    rows += _rows_for(cfg, "cm", value, trial, group_report(oracle, cm.estimates), cm, L_cm, "ok")

    if "fcm" in cfg.sketches:
        try:
            widths = fair_widths(sizes, w, d, cfg.precision)
        except InfeasibleAllocationError as exc:
            logger.warning("fcm infeasible at %s=%s: %s", cfg.sweep, value, exc)
            rows += _rows_for(cfg, "fcm", value, trial, None, None, L_cm, "infeasible")
        else:
            run = run_fcm(oracle, widths, d, sketch_seed)
            rep = group_report(oracle, run.estimates, widths)
            rows += _rows_for(cfg, "fcm", value, trial, rep, run, L_cm, "ok")

    if "rp" in cfg.sketches:
        if len(sizes) != 2 or d < 2:
            rows += _rows_for(cfg, "rp", value, trial, None, None, L_cm, "infeasible")
        else:
            d_l, d_h, _ = solve_row_partition(sizes[0], sizes[1], w, d)
            run = run_rp(oracle, w, (d_l, d_h), sketch_seed)
            rep = group_report(oracle, run.estimates)
            rows += _rows_for(cfg, "rp", value, trial, rep, run, L_cm, "ok")
    return rows


_NUMERIC = ("mean_alpha", "unfairness", "total_additive_error", "pof", "build_ms", "query_ns")


def summarize(rows: Iterable[dict]) -> list[dict]:
    """``trial=mean`` rows per (sketch, sweep value, group) over ok trials."""
    buckets: dict[tuple, list[dict]] = {}
    for r in rows:
        if r.get("status") != "ok":
            continue
        key = (r["experiment"], r["sketch"], r["sweep_var"], r["sweep_value"], str(r["group"]))
        buckets.setdefault(key, []).append(r)
    out = []
    for (exp, sketch, var, value, group), rs in buckets.items():
        row = {
            "experiment": exp,
            "sketch": sketch,
            "sweep_var": var,
            "sweep_value": value,
            "trial": "mean",
            "group": group,
            "status": "ok",
        }
        for col in _NUMERIC:
            vals = [r[col] for r in rs if r.get(col) not in (None, "")]
            if vals:
                row[col] = float(np.mean(vals))
        out.append(row)
    return out


def run_experiment(cfg: RunConfig) -> list[dict]:
    """Every sweep value and trial, ordered by (sweep value, trial), then summaries."""
    rows = []
    for value in cfg.values:
        for t in range(cfg.trials):
            rows.extend(run_point(cfg, value, t))
    return rows + summarize(rows)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: Iterable[dict], path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in RESULT_COLUMNS])
    finally:
        if own:
            fh.close()
