"""Seeded simulators for the benchmark models and Monte-Carlo ground truth.

Every draw comes from a Philox stream keyed by ``(seed, purpose, rep,
component)``, so a replication is reproducible on its own and does not
depend on which other replications ran, or in what order.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ._parallel import pmap, resolve_threads
from .arfit import is_causal, normalize_spectrum
from .errors import TooShort
from .qperiodogram import QuantileGrid, quantile_periodogram
from .signal import evaluation_indices

MODEL_KINDS = ("ar2", "arma22", "garch11", "mixture")
_TEST_KINDS = ("white",)
BURN_IN = 1000

# stream purposes
SINGLE, TRUTH, RUN = 0, 1, 2

AR2 = np.array([0.9, -0.9])
ARMA22_AR = np.array([0.8897, -0.4858])
ARMA22_MA = np.array([-0.2279, 0.2488])
GARCH_OMEGA, GARCH_ALPHA, GARCH_BETA = 1e-6, 0.35, 0.35

for _phi in (AR2, ARMA22_AR, np.array([0.8]), np.array([-0.75]), np.array([0.0, -0.81])):
    assert is_causal(_phi), _phi


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS + _TEST_KINDS:
            raise ValueError(f"unknown model {self.kind!r}; valid kinds: {', '.join(MODEL_KINDS)}")
        if int(self.n) < 8:
            raise TooShort(f"series length must be at least 8, got {self.n}")


@dataclass(frozen=True)
class GroundTruth:
    """Mean raw quantile periodogram on the evaluation frequencies."""

    kind: str
    n: int
    grid: QuantileGrid
    freq_indices: np.ndarray
    values: np.ndarray  # (L, m)
    reps: int

    @property
    def freqs(self):
        return self.freq_indices / self.n

    def normalized(self, rows=None):
        """Columns scaled to unit sum, optionally over the first ``rows`` frequencies."""
        V = self.values if rows is None else self.values[:rows]
        return np.column_stack([normalize_spectrum(V[:, i]) for i in range(V.shape[1])])


def rng(seed, *path):
    """Philox generator keyed by the seed and a path of non-negative integers."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(p) for p in path]])
    return np.random.Generator(np.random.Philox(ss))


def w1(x):
    """0.9 below -0.8, 0.25 above 0.8, linear in between."""
    return np.interp(x, [-0.8, 0.8], [0.9, 0.25])


def w2(x):
    """0.5 below -0.4, 1 above 0, linear in between."""
    return np.interp(x, [-0.4, 0.0], [0.5, 1.0])


def _ar(phi, noise):
    return lfilter([1.0], np.concatenate([[1.0], -np.asarray(phi)]), noise)


def _garch(z):
    y = np.empty(z.size)
    s2 = GARCH_OMEGA / (1.0 - GARCH_ALPHA - GARCH_BETA)
    prev_y2 = s2
    for t in range(z.size):
        s2 = GARCH_OMEGA + GARCH_ALPHA * prev_y2 + GARCH_BETA * s2
        y[t] = np.sqrt(s2) * z[t]
        prev_y2 = y[t] * y[t]
    return y


def generate(spec, rep=0, purpose=SINGLE):
    """Length-``spec.n`` series after a 1000-sample burn-in."""
    if not isinstance(spec, ModelSpec):
        spec = ModelSpec(*spec)
    total = spec.n + BURN_IN

    def normals(component):
        return rng(spec.seed, purpose, rep, component).standard_normal(total)

    if spec.kind == "white":
        y = normals(0)
    elif spec.kind == "ar2":
        y = _ar(AR2, normals(0))
    elif spec.kind == "arma22":
        y = lfilter(np.concatenate([[1.0], ARMA22_MA]), np.concatenate([[1.0], -ARMA22_AR]), normals(0))
    elif spec.kind == "garch11":
        y = _garch(normals(0))
    else:
        x1 = _ar([0.8], normals(1))
        x2 = _ar([-0.75], normals(2))
        x3 = _ar([0.0, -0.81], normals(3))
        a = w1(x1)
        b = w2(x2)
        y = a * x1 + (1.0 - a) * (b * x2 + (1.0 - b) * x3)
    return np.ascontiguousarray(y[BURN_IN:])


def simulate(kind, n, seed=0, rep=0):
    return generate(ModelSpec(kind, int(n), int(seed)), rep=rep)


def pairwise_sum(arrays):
    """Deterministic pairwise (binary-counter) sum of a sequence of arrays."""
    stack = []  # (level, partial)
    for a in arrays:
        node = (0, np.array(a, dtype=float))
        while stack and stack[-1][0] == node[0]:
            lvl, left = stack.pop()
            node = (lvl + 1, left + node[1])
        stack.append(node)
    if not stack:
        raise ValueError("nothing to sum")
    total = stack.pop()[1]
    while stack:
        total = stack.pop()[1] + total
    return total


def ground_truth(kind, n, grid=None, reps=2000, seed=0, threads=None, block=16):
    """Mean raw quantile periodogram over ``reps`` independent replications."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    grid = QuantileGrid.default() if grid is None else grid
    if not isinstance(grid, QuantileGrid):
        grid = QuantileGrid(grid)
    spec = ModelSpec(kind, int(n), int(seed))
    idx = evaluation_indices(spec.n)
    threads = resolve_threads(threads)

    def one(r):
        y = generate(spec, rep=r, purpose=TRUTH)
        return quantile_periodogram(y, grid, threads=1).ordinates[idx]

    def partials():
        for start in range(0, reps, block):
            rs = range(start, min(start + block, reps))
            yield from pmap(one, rs, threads)

    total = pairwise_sum(partials())
    return GroundTruth(kind, spec.n, grid, idx, total / reps, int(reps))
