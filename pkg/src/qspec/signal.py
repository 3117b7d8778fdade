"""Series validation, Fourier grids, CSV input and spline detrending."""

import csv
from functools import lru_cache

import numpy as np
from scipy import linalg

from .errors import NonFinite, TooShort

MIN_LENGTH = 8
DEFAULT_DETREND_DF = 4.0


def validate(ts, min_length=MIN_LENGTH):
    """Return ``ts`` as a float array after checking length and finiteness."""
    y = np.asarray(ts, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"expected a one-dimensional series, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise NonFinite("series contains NaN or infinite values")
    if y.size < min_length:
        raise TooShort(f"series has {y.size} samples; at least {min_length} are required")
    return y


def fourier_frequencies(n):
    """Fourier frequencies ``l / n`` for l = 0..n-1 in cycles per sample."""
    return np.arange(n) / n


def evaluation_indices(n):
    """One-sided Fourier indices l = 1..floor(n/2)-1 (no zero, no Nyquist)."""
    return np.arange(1, n // 2)


def read_series_csv(path):
    """Read a single-column ``value`` CSV. A non-numeric first row is a header."""
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            cell = row[0].strip()
            try:
                values.append(float(cell))
            except ValueError:
                if lineno == 1 or (not values and cell.lower() == "value"):
                    continue
                raise ValueError(f"{path}:{lineno}: non-numeric value {cell!r}") from None
    return np.array(values)


def write_series_csv(path, values):
    with open(path, "w", newline="") as fh:
        fh.write("value\n")
        for v in values:
            fh.write(f"{float(v):.17g}\n")


# ----------------------------------------------------------------------------
# cubic smoothing spline on t = 1..n


def _penalty_bands(n):
    """Banded pieces of the natural cubic spline penalty for unit spacing.

    Returns (QtQ, R) in upper banded storage for ``solveh_banded``: ``R`` is the
    (n-2)x(n-2) tridiagonal Gram matrix and ``QtQ`` the pentadiagonal product of
    the second-difference operator with itself.
    """
    m = n - 2
    R = np.zeros((2, m))
    R[1] = 2.0 / 3.0
    R[0, 1:] = 1.0 / 6.0
    QtQ = np.zeros((3, m))
    QtQ[2] = 6.0
    QtQ[1, 1:] = -4.0
    QtQ[0, 2:] = 1.0
    return QtQ, R


def _second_difference(y):
    return y[:-2] - 2.0 * y[1:-1] + y[2:]


def _second_difference_adjoint(g, n):
    out = np.zeros(n)
    out[:-2] += g
    out[1:-1] -= 2.0 * g
    out[2:] += g
    return out


def spline_fit_uniform(y, stiffness):
    """Natural cubic smoothing spline on unit-spaced knots.

    Minimises ``sum (y - g)^2 + stiffness * int g''^2`` via the Reinsch
    system ``(R + stiffness Q'Q) c = Q'y``, ``g = y - stiffness Q c``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    QtQ, R = _penalty_bands(n)
    ab = stiffness * QtQ
    ab[1:] += R
    c = linalg.solveh_banded(ab, _second_difference(y))
    return y - stiffness * _second_difference_adjoint(c, n)


@lru_cache(maxsize=32)
def _penalty_eigenvalues(n):
    """Nonzero eigenvalues of the spline penalty operator for unit spacing."""
    if n <= 2500:
        m = n - 2
        R = np.diag(np.full(m, 2.0 / 3.0)) + np.diag(np.full(m - 1, 1.0 / 6.0), 1)
        R = R + np.triu(R, 1).T
        D = np.zeros((m, n))
        idx = np.arange(m)
        D[idx, idx] = 1.0
        D[idx, idx + 1] = -2.0
        D[idx, idx + 2] = 1.0
        return linalg.eigh(D @ D.T, R, eigvals_only=True)
    # Toeplitz symbol of R^{-1} Q'Q; boundary effects are negligible here
    theta = np.pi * np.arange(1, n - 1) / (n - 1)
    return (2.0 - 2.0 * np.cos(theta)) ** 2 / (2.0 / 3.0 + np.cos(theta) / 3.0)


def stiffness_for_df(n, df=DEFAULT_DETREND_DF):
    """Penalty weight giving the spline ``df`` equivalent degrees of freedom."""
    if n < 4:
        raise TooShort("spline detrending needs at least 4 samples")
    if not 2.0 < df < n:
        raise ValueError(f"degrees of freedom must lie in (2, {n}), got {df}")
    d = np.clip(_penalty_eigenvalues(n), 0.0, None)

    def excess(loglam):
        return 2.0 + np.sum(1.0 / (1.0 + np.exp(loglam) * d)) - df

    lo, hi = -60.0, 80.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(np.exp(0.5 * (lo + hi)))


def detrend_spline(ts, stiffness=None):
    """Subtract a cubic smoothing-spline trend fitted over t = 1..n.

    ``stiffness`` is the roughness-penalty weight; by default it is chosen so
    the trend has about four equivalent degrees of freedom.
    """
    y = validate(ts)
    if stiffness is None:
        stiffness = stiffness_for_df(y.size)
    if not stiffness > 0:
        raise ValueError(f"stiffness must be positive, got {stiffness!r}")
    # centring first keeps the subtraction exact for constant inputs
    yc = y - np.mean(y)
    return yc - spline_fit_uniform(yc, stiffness)
