"""One- and two-dimensional smoothers.

* :func:`supersmooth` - Friedman's variable-span running-line smoother.
* :func:`spline_smooth_cv` - cubic smoothing spline with LOOCV/GCV penalty.
* :func:`gamma_gcv_smooth` - running mean with span chosen by gamma-deviance GCV.
* :func:`kernel2d_smooth` - separable Gaussian kernel over a matrix.
"""

from functools import lru_cache

import numpy as np
from scipy import linalg, ndimage

from .errors import NegativeOrdinate, NonPositiveBandwidth, TooFewPoints, UnorderedX

PRIMARY_SPANS = (0.05, 0.2, 0.5)
MIDDLE_SPAN = 0.2
FINAL_SPAN = 0.05
N_PENALTIES = 100


def _as_xy(x, y, min_len):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be one-dimensional and of equal length")
    if x.size < min_len:
        raise TooFewPoints(f"need at least {min_len} points, got {x.size}")
    if np.any(np.diff(x) <= 0):
        raise UnorderedX("x must be strictly increasing")
    return x, y


# ----------------------------------------------------------------------------
# running lines and the SuperSmoother


def _window_bounds(n, span):
    """Start/stop of the k-point window around each index, shifted at the ends."""
    k = min(n, max(3, int(round(span * n))))
    half = k // 2
    start = np.clip(np.arange(n) - half, 0, n - k)
    return start, start + k


def running_linear(x, y, span, cv=False):
    """Local least-squares line over a fixed-size window at every point.

    With ``cv=True`` the leave-one-out residuals ``(y - yhat) / (1 - h_ii)``
    are returned alongside the fit.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    start, stop = _window_bounds(n, span)
    fit = np.empty(n)
    lev = np.empty(n)
    for i in range(n):
        xs = x[start[i]:stop[i]]
        ys = y[start[i]:stop[i]]
        mx, my = xs.mean(), ys.mean()
        sxx = np.sum((xs - mx) ** 2)
        dx = x[i] - mx
        if sxx > 0:
            fit[i] = my + np.sum((xs - mx) * (ys - my)) / sxx * dx
            lev[i] = 1.0 / xs.size + dx * dx / sxx
        else:
            fit[i] = my
            lev[i] = 1.0 / xs.size
    if not cv:
        return fit
    return fit, (y - fit) / np.maximum(1.0 - lev, 1e-12)


def supersmooth(x, y, spans=PRIMARY_SPANS):
    """Friedman's SuperSmoother (no bass enhancement).

    Three running-line smooths are cross-validated point by point, the
    best span is itself smoothed, the fits are interpolated at that span
    and the result gets a final pass with the smallest span.
    """
    x, y = _as_xy(x, y, 5)
    spans = np.sort(np.asarray(spans, dtype=float))
    fits, cvres = [], []
    for s in spans:
        f, e = running_linear(x, y, s, cv=True)
        fits.append(f)
        cvres.append(np.abs(e))
    fits = np.array(fits)
    smoothed_res = np.array([running_linear(x, e, MIDDLE_SPAN) for e in cvres])
    best = spans[np.argmin(smoothed_res, axis=0)]
    best = np.clip(running_linear(x, best, MIDDLE_SPAN), spans[0], spans[-1])
    # linear interpolation between neighbouring primary fits in span
    idx = np.clip(np.searchsorted(spans, best, side="right") - 1, 0, spans.size - 2)
    lo, hi = spans[idx], spans[idx + 1]
    w = (best - lo) / (hi - lo)
    cols = np.arange(x.size)
    blended = (1.0 - w) * fits[idx, cols] + w * fits[idx + 1, cols]
    return running_linear(x, blended, FINAL_SPAN)


# ----------------------------------------------------------------------------
# cubic smoothing splines


def penalty_matrix(x):
    """Dense roughness penalty ``K = Q R^-1 Q'`` of the natural cubic spline.

    ``y' K y`` equals the integrated squared second derivative of the natural
    cubic interpolant of ``(x, y)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = np.diff(x)
    Q = np.zeros((n, n - 2))
    j = np.arange(n - 2)
    Q[j, j] = 1.0 / h[:-1]
    Q[j + 1, j] = -1.0 / h[:-1] - 1.0 / h[1:]
    Q[j + 2, j] = 1.0 / h[1:]
    R = np.diag((h[:-1] + h[1:]) / 3.0)
    if n > 3:
        off = h[1:-1] / 6.0
        R += np.diag(off, 1) + np.diag(off, -1)
    return Q @ linalg.solve(R, Q.T, assume_a="pos")


@lru_cache(maxsize=64)
def _spline_eigen(xkey):
    x = np.frombuffer(xkey)
    K = penalty_matrix(x)
    d, U = linalg.eigh(0.5 * (K + K.T))
    d[: 2] = 0.0  # null space: constants and lines
    d = np.clip(d, 0.0, None)
    return d, U


def spline_eigen(x):
    x = np.ascontiguousarray(x, dtype=float)
    return _spline_eigen(x.tobytes())


def penalty_grid(d, size=N_PENALTIES):
    """Log-spaced penalties spanning nearly-interpolating to nearly-linear fits."""
    pos = d[d > 0]
    lo = 1e-3 / pos.max()
    hi = 1e4 / pos.min()
    return np.exp(np.linspace(np.log(lo), np.log(hi), size))


def spline_smooth(x, y, penalty):
    """Smoothing spline with a fixed penalty weight (a linear smoother)."""
    x, y = _as_xy(x, y, 4)
    d, U = spline_eigen(x)
    return U @ ((U.T @ y) / (1.0 + penalty * d))


def spline_cv_scores(x, y, penalties=None, criterion="loocv"):
    """CV score of the smoothing spline at each penalty in the grid."""
    x, y = _as_xy(x, y, 4)
    d, U = spline_eigen(x)
    if penalties is None:
        penalties = penalty_grid(d)
    penalties = np.asarray(penalties, dtype=float)
    shrink = 1.0 / (1.0 + np.outer(penalties, d))  # (grid, n)
    uy = U.T @ y
    fits = (shrink * uy) @ U.T
    resid = y - fits
    n = y.size
    if criterion == "loocv":
        diag = shrink @ (U * U).T
        scores = np.mean((resid / np.maximum(1.0 - diag, 1e-12)) ** 2, axis=1)
    elif criterion == "gcv":
        tr = shrink.sum(axis=1)
        scores = n * np.sum(resid * resid, axis=1) / np.maximum(n - tr, 1e-12) ** 2
    else:
        raise ValueError(f"criterion must be 'loocv' or 'gcv', got {criterion!r}")
    return penalties, scores, fits


def spline_smooth_cv(x, y, criterion="loocv", return_penalty=False):
    """Smoothing spline whose penalty minimises LOOCV or GCV on a log grid."""
    penalties, scores, fits = spline_cv_scores(x, y, criterion=criterion)
    best = int(np.argmin(scores))
    if return_penalty:
        return fits[best], float(penalties[best])
    return fits[best]


def spline_smooth_columns(x, Y, criterion="loocv"):
    """Apply :func:`spline_smooth_cv` to every column of ``Y``."""
    Y = np.asarray(Y, dtype=float)
    out = np.empty_like(Y)
    for j in range(Y.shape[1]):
        out[:, j] = spline_smooth_cv(x, Y[:, j], criterion=criterion)
    return out


# ----------------------------------------------------------------------------
# running mean with gamma-deviance GCV


def default_spans(n):
    """Odd spans 3, 5, ..., up to floor(n/4)."""
    top = n // 4
    if top % 2 == 0:
        top -= 1
    return np.arange(3, max(top, 3) + 1, 2)


def running_mean(y, span):
    """Centred moving average with mirror reflection at both ends."""
    y = np.asarray(y, dtype=float)
    return ndimage.uniform_filter1d(y, size=int(span), mode="mirror")


def _running_mean_trace(n, span):
    """Sum of self-weights under mirror reflection (trace of the smoother)."""
    half = int(span) // 2
    i = np.arange(n)
    count = np.ones(n)
    # mirror images of i about 0 and n-1 that fall inside the window of i
    count += (2 * i <= half) & (i > 0)
    count += (2 * (n - 1 - i) <= half) & (i < n - 1)
    return float(np.sum(count) / span)


def gamma_deviance(y, mu):
    ratio = y / mu
    return 2.0 * (ratio - np.log(ratio) - 1.0)


def gamma_gcv_score(y, span):
    n = y.size
    mu = np.maximum(running_mean(y, span), 1e-300)
    yy = np.maximum(y, 1e-12 * max(np.mean(y), 1e-300))
    dev = np.mean(gamma_deviance(yy, mu))
    return dev / (1.0 - _running_mean_trace(n, span) / n) ** 2


def gamma_gcv_smooth(row, spans=None, return_span=False):
    """Running-mean smooth of a periodogram row with GCV-selected span."""
    y = np.asarray(row, dtype=float)
    if np.any(y < 0):
        raise NegativeOrdinate("periodogram ordinates must be nonnegative")
    if spans is None:
        spans = default_spans(y.size)
    spans = [int(s) for s in spans if int(s) <= y.size]
    if not spans:
        raise TooFewPoints("no admissible span for a row this short")
    scores = [gamma_gcv_score(y, s) for s in spans]
    best = spans[int(np.argmin(scores))]
    out = running_mean(y, best)
    return (out, best) if return_span else out


# ----------------------------------------------------------------------------
# 2D Gaussian kernel


def kernel2d_smooth(matrix, bw_freq=2.0, bw_tau=3.0):
    """Separable Gaussian smoothing (bandwidths in cells), reflected edges."""
    if not (bw_freq > 0 and bw_tau > 0):
        raise NonPositiveBandwidth("kernel bandwidths must be positive")
    M = np.asarray(matrix, dtype=float)
    return ndimage.gaussian_filter(M, sigma=(bw_freq, bw_tau), mode="reflect")
