"""Shared fixtures.  The Monte-Carlo fixtures are session scoped: each ground
truth and benchmark is computed once and reused by every test that needs it."""

import numpy as np
import pytest

from qspec import metrics, simulate
from qspec.qperiodogram import QuantileGrid

SEED = 20240601
BENCH_RUNS = 50
TRUTH_REPS = 500

_results = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo checks that take minutes")
    config.addinivalue_line("markers", "acceptance: acceptance criteria")


@pytest.fixture(scope="session")
def criteria():
    """Acceptance outcomes, printed in the terminal summary."""
    return _results


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results):
        ok, detail = _results[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'} - {detail}")


class Bench:
    """A benchmark run plus every parametric estimate it produced."""

    def __init__(self, kind, n, estimators, grid=None, runs=BENCH_RUNS, reps=TRUTH_REPS, seed=SEED):
        self.grid = QuantileGrid.default() if grid is None else grid
        self.truth = simulate.ground_truth(kind, n, self.grid, reps, seed)
        self.estimates = []

        def keep(kind_, run, est):
            if est.method == "parametric":
                self.estimates.append(est)

        reports = metrics.benchmark([kind], estimators, n, runs, reps, self.grid, seed,
                                    truths={kind: self.truth}, on_estimate=keep)
        self.reports = {(r.estimator, r.measure): r for r in reports}

    def mean(self, estimator, measure="kl"):
        return self.reports[(estimator, measure)].mean


@pytest.fixture(scope="session")
def ar2_500():
    return Bench("ar2", 500, ["parametric", "spline", "gamma_gcv", "kernel2d"])


@pytest.fixture(scope="session")
def arma22_500():
    return Bench("arma22", 500, ["parametric", "gamma_gcv"])


@pytest.fixture(scope="session")
def ar2_1000():
    return Bench("ar2", 1000, ["parametric"])
