"""Quantile periodograms, the ordinary periodogram and the quantile ACF."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import qregression
from ._parallel import chunks, pmap, resolve_threads
from .errors import AsymmetricInput, NoConvergence
from .signal import fourier_frequencies, validate


@dataclass(frozen=True)
class QuantileGrid:
    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float).ravel()
        if lv.size < 1:
            raise ValueError("a quantile grid needs at least one level")
        if not np.all((lv > 0.0) & (lv < 1.0)):
            raise ValueError("quantile levels must lie strictly inside (0, 1)")
        if np.any(np.diff(lv) <= 0.0):
            raise ValueError("quantile levels must be strictly increasing")
        lv.flags.writeable = False
        object.__setattr__(self, "levels", lv)

    def __len__(self):
        return self.levels.size

    @classmethod
    def default(cls):
        """The 91 levels 0.05, 0.06, ..., 0.95."""
        return cls.parse("0.05:0.95:0.01")

    @classmethod
    def parse(cls, spec):
        """Parse ``start:stop:step`` (both ends inclusive) or a comma list."""
        spec = spec.strip()
        if ":" not in spec:
            return cls(np.array([float(v) for v in spec.split(",") if v.strip()]))
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid spec must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"invalid grid spec {spec!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        levels = np.round(start + step * np.arange(count), 12)
        return cls(levels)

    def to_list(self):
        return [float(v) for v in self.levels]


@dataclass(frozen=True)
class QuantilePeriodogram:
    """Ordinates ``Q[l, i]`` at frequency ``l / n`` and level ``grid[i]``.

    ``grid`` is ``None`` for the ordinary periodogram (one column).
    """

    n: int
    grid: Optional[QuantileGrid]
    ordinates: np.ndarray

    @property
    def freqs(self):
        return fourier_frequencies(self.n)


@dataclass(frozen=True)
class QACF:
    gamma: np.ndarray  # (n, m), lag along axis 0

    def at_level(self, i):
        return self.gamma[:, i]


def _one_sided_indices(n):
    """Indices 1..floor(n/2): interior frequencies plus Nyquist for even n."""
    return np.arange(1, n // 2 + 1, dtype=np.int64)


def _extend_symmetric(n, half):
    """Fill ``Q[l] = Q[n - l]`` from rows for l = 1..floor(n/2); ``Q[0] = 0``."""
    m = half.shape[1]
    Q = np.zeros((n, m))
    ls = _one_sided_indices(n)
    Q[ls] = half
    Q[n - ls] = half
    return Q


def _slopes(y, taus, warm, threads):
    n = y.size
    ls = _one_sided_indices(n)

    def work(block):
        block = np.asarray(block, dtype=np.int64)
        out = np.empty((block.size, taus.size, 2))
        status, k, i = qregression._slopes_grid(y, block, taus, warm, out)
        if status != qregression._OK:
            raise NoConvergence(
                f"quantile regression failed at frequency index l={block[k]} "
                f"(omega={block[k] / n:g}), tau={taus[max(i, 0)]:g}"
            )
        return out

    threads = resolve_threads(threads)
    parts = pmap(work, chunks(ls, threads * 4 if threads > 1 else 1), threads)
    beta = np.concatenate(parts, axis=0)
    # coefficients at rounding level (e.g. a constant series) are exactly zero
    beta[np.abs(beta) <= 64 * np.finfo(float).eps * np.max(np.abs(y))] = 0.0
    return beta


def quantile_periodogram(ts, grid, threads=None):
    """Raw quantile periodogram ``(n/4) ||beta||^2`` over all Fourier indices.

    Computed for l = 1..floor(n/2) and mirrored to [0, 1); the zero-frequency
    ordinate is 0.
    """
    y = validate(ts)
    if not isinstance(grid, QuantileGrid):
        grid = QuantileGrid(grid)
    beta = _slopes(y, np.ascontiguousarray(grid.levels), True, threads)
    half = 0.25 * y.size * np.sum(beta * beta, axis=2)
    return QuantilePeriodogram(y.size, grid, _extend_symmetric(y.size, half))


def laplace_periodogram(ts, threads=None):
    """Median (tau = 0.5) periodogram, each frequency fitted from a cold start."""
    y = validate(ts)
    grid = QuantileGrid([0.5])
    beta = _slopes(y, np.array([0.5]), False, threads)
    half = 0.25 * y.size * np.sum(beta * beta, axis=2)
    return QuantilePeriodogram(y.size, grid, _extend_symmetric(y.size, half))


def ordinary_periodogram(ts):
    """``|sum_t (Y_t - mean) e^{-2 pi i t l/n}|^2 / n`` at every Fourier index."""
    y = validate(ts)
    yc = y - y.mean()
    I = np.abs(np.fft.fft(yc)) ** 2 / y.size
    I[0] = 0.0
    return QuantilePeriodogram(y.size, None, I[:, None])


def qacf(qp, tol=1e-9):
    """Quantile autocovariances as the inverse DFT of each periodogram column.

    ``gamma[h, i] = n^-1 sum_l exp(2 pi i l h / n) Q[l, i]`` for h = 0..n-1.
    """
    Q = np.asarray(qp.ordinates if isinstance(qp, QuantilePeriodogram) else qp, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    n = Q.shape[0]
    mirrored = Q[(-np.arange(n)) % n]
    scale = max(np.max(np.abs(Q)), 1e-300)
    if np.max(np.abs(Q - mirrored)) > 1e-12 * scale:
        raise AsymmetricInput("periodogram ordinates are not symmetric: Q[l] != Q[n - l]")
    g = np.fft.ifft(Q, axis=0)
    if np.max(np.abs(g.imag)) > tol * scale:
        raise AsymmetricInput("inverse transform has a non-negligible imaginary part")
    return QACF(np.ascontiguousarray(g.real))


def write_long_csv(path, freqs, taus, values):
    """Long-format ``freq,tau,value`` CSV with 17 significant digits."""
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write("freq,tau,value\n")
        for i, tau in enumerate(taus):
            for l, f in enumerate(freqs):
                fh.write(f"{float(f):.17g},{float(tau):.17g},{values[l, i]:.17g}\n")
