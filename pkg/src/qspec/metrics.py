"""Spectral divergences and the simulation benchmark harness."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import simulate
from .errors import LengthMismatch, NonPositiveEntry, NotNormalized, QSpecError
from .estimator import estimate, normalize_columns
from .qperiodogram import QuantileGrid, quantile_periodogram

MEASURES = ("kl", "rmse")
ESTIMATORS = ("parametric", "spline", "gamma_gcv", "kernel2d", "oracle")
# reporting units: KL in 1e-1, RMSE in 1e-3
REPORT_SCALE = {"kl": 10.0, "rmse": 1000.0}
SUM_TOL = 1e-9
FLOOR = 1e-12


def _check_normalized(f, name):
    f = np.asarray(f, dtype=float)
    if abs(f.sum() - 1.0) > SUM_TOL:
        raise NotNormalized(f"{name} sums to {f.sum()!r}, not 1")
    if np.any(f <= 0):
        raise NonPositiveEntry(f"{name} has non-positive entries")
    return f


def kl_divergence(f1, f2):
    """``sum f1 log(f1 / f2)`` for two normalized, strictly positive columns."""
    f1 = _check_normalized(f1, "f1")
    f2 = _check_normalized(f2, "f2")
    if f1.shape != f2.shape:
        raise LengthMismatch(f"lengths differ: {f1.size} vs {f2.size}")
    return float(max(np.sum(f1 * np.log(f1 / f2)), 0.0))


def rmse(f1, f2):
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if f1.shape != f2.shape:
        raise LengthMismatch(f"lengths differ: {f1.shape} vs {f2.shape}")
    return float(np.sqrt(np.mean((f1 - f2) ** 2)))


def floor_renormalize(f, floor=FLOOR):
    f = np.maximum(np.asarray(f, dtype=float), floor)
    return f / f.sum()


def column_divergences(truth, est, measure):
    """Per-quantile divergence between two normalized (L, m) matrices."""
    out = np.empty(truth.shape[1])
    for i in range(truth.shape[1]):
        a, b = truth[:, i], est[:, i]
        if measure == "kl":
            out[i] = kl_divergence(floor_renormalize(a), floor_renormalize(b))
        else:
            out[i] = rmse(a, b)
    return out


def frequency_rows(kind, n):
    """Number of leading evaluation frequencies used for a model."""
    L = n // 2 - 1
    return L // 5 if kind == "garch11" else L


def renormalize_rows(values, rows):
    V = np.asarray(values, dtype=float)[:rows]
    return V / V.sum(axis=0, keepdims=True)


@dataclass
class DivergenceReport:
    model: str
    n: int
    estimator: str
    measure: str
    mean: float
    se: float
    runs: int
    failed: int = 0
    per_run: list = field(default_factory=list)


def summarize(values):
    """Mean and standard error ``std(ddof=1) / sqrt(N)`` of per-run values."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(np.mean(v)), se


def benchmark(
    models,
    estimators,
    n,
    runs=200,
    truth_reps=2000,
    grid=None,
    seed=0,
    threads=None,
    truths=None,
    estimator_options=None,
    on_estimate=None,
):
    """Mean-over-quantiles divergences for each model/estimator/measure.

    ``truths`` may map model kind to a precomputed :class:`GroundTruth`;
    ``on_estimate(kind, run, estimate)`` is called for every fitted estimate.
    """
    grid = QuantileGrid.default() if grid is None else grid
    if not isinstance(grid, QuantileGrid):
        grid = QuantileGrid(grid)
    estimators = [e.replace("-", "_") for e in estimators]
    for e in estimators:
        if e not in ESTIMATORS:
            raise ValueError(f"unknown estimator {e!r}; choose from {', '.join(ESTIMATORS)}")
    estimator_options = estimator_options or {}
    truths = dict(truths or {})
    reports = []
    for kind in models:
        truth = truths.get(kind)
        if truth is None:
            truth = simulate.ground_truth(kind, n, grid, truth_reps, seed, threads=threads)
        rows = frequency_rows(kind, n)
        T = renormalize_rows(truth.values, rows)
        per = {(e, m): [] for e in estimators for m in MEASURES}
        failed = {e: 0 for e in estimators}
        spec = simulate.ModelSpec(kind, int(n), int(seed))
        for r in range(runs):
            y = simulate.generate(spec, rep=r, purpose=simulate.RUN)
            qp = quantile_periodogram(y, grid, threads=threads)
            for e in estimators:
                try:
                    if e == "oracle":
                        E = T
                    else:
                        est = estimate(qp, method=e, normalize=False, **estimator_options.get(e, {}))
                        if on_estimate is not None:
                            on_estimate(kind, r, est)
                        E = normalize_columns(est.values[:rows])
                    for m in MEASURES:
                        per[(e, m)].append(float(np.mean(column_divergences(T, E, m))))
                except QSpecError:
                    failed[e] += 1
        for e in estimators:
            for m in MEASURES:
                vals = per[(e, m)]
                mean, se = summarize(vals)
                reports.append(DivergenceReport(kind, int(n), e, m, mean, se, len(vals), failed[e], vals))
    return reports


def write_report_csv(path, reports):
    """Table layout: values scaled by 10 (KL) or 1000 (RMSE), SE in parentheses."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "n", "estimator", "measure", "scale", "mean", "se", "runs", "failed"])
        for r in reports:
            k = REPORT_SCALE[r.measure]
            w.writerow([r.model, r.n, r.estimator, r.measure, f"{k:g}",
                        f"{r.mean * k:.3f}", f"{r.se * k:.3f}", r.runs, r.failed])


def write_report_json(path, reports, meta=None):
    payload = {"meta": meta or {}, "reports": [asdict(r) for r in reports]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
