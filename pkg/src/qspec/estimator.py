"""Quantile spectrum estimators.

The parametric estimator turns each column of the raw quantile periodogram
into autocovariances, fits AR models by Levinson-Durbin with AIC orders,
smooths orders, scales and partial autocorrelations across quantile levels,
and evaluates the resulting AR spectra. The baselines smooth the raw
periodogram directly.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import arfit, smooth
from .errors import QSpecError, StageError
from .qperiodogram import QuantileGrid, QuantilePeriodogram, qacf, quantile_periodogram
from .signal import evaluation_indices

METHODS = ("parametric", "spline", "gamma_gcv", "kernel2d")
BASELINES = ("spline", "gamma_gcv", "kernel2d")
FLOOR = 1e-12


@dataclass(frozen=True)
class QuantileSpectrumEstimate:
    """Spectral values ``values[l, i]`` on the one-sided evaluation frequencies."""

    n: int
    grid: QuantileGrid
    freq_indices: np.ndarray
    values: np.ndarray
    normalized: bool
    method: str
    fits: Optional[list] = None
    options: dict = field(default_factory=dict)

    @property
    def freqs(self):
        return self.freq_indices / self.n

    @property
    def pacf_matrix(self):
        if self.fits is None:
            return None
        width = max((f.pacf.size for f in self.fits), default=0)
        M = np.zeros((len(self.fits), width))
        for i, f in enumerate(self.fits):
            M[i, : f.pacf.size] = f.pacf
        return M

    def sidecar(self):
        meta = {
            "method": self.method,
            "n": self.n,
            "grid": self.grid.to_list(),
            "normalized": self.normalized,
            "options": self.options,
        }
        if self.fits is not None:
            meta["orders"] = [int(f.order) for f in self.fits]
            meta["scales"] = [float(f.scale) for f in self.fits]
        return meta


def default_p_max(n):
    return max(1, min(30, n // 10))


def normalize_columns(values, floor=FLOOR):
    """Floor each column at ``floor * max`` and scale it to unit sum."""
    V = np.array(values, dtype=float)
    for i in range(V.shape[1]):
        col = V[:, i]
        top = np.max(np.abs(col))
        col = np.maximum(col, floor * top if top > 0 else floor)
        V[:, i] = arfit.normalize_spectrum(col)
    return V


def _periodogram(ts_or_qp, grid, threads):
    if isinstance(ts_or_qp, QuantilePeriodogram):
        return ts_or_qp
    if grid is None:
        grid = QuantileGrid.default()
    try:
        return quantile_periodogram(ts_or_qp, grid, threads=threads)
    except QSpecError as exc:
        raise StageError("periodogram", None, exc) from exc


def smooth_orders(taus, orders, p_max):
    """SuperSmoother over levels, rounded and clamped to [1, p_max]."""
    orders = np.asarray(orders, dtype=float)
    if orders.size >= 5:
        orders = smooth.supersmooth(taus, orders)
    return np.clip(np.rint(orders), 1, p_max).astype(int)


def smooth_scales(taus, scales):
    """SuperSmoother on log scale, so the result stays positive."""
    scales = np.asarray(scales, dtype=float)
    if scales.size < 5:
        return scales.copy()
    return np.exp(smooth.supersmooth(taus, np.log(scales)))


def smooth_pacf_matrix(taus, Psi, criterion="loocv"):
    """Spline-smooth each lag's column across levels, then clamp inside (-1, 1)."""
    Psi = np.array(Psi, dtype=float)
    if Psi.shape[0] >= 4:
        for k in range(Psi.shape[1]):
            Psi[:, k] = smooth.spline_smooth_cv(taus, Psi[:, k], criterion=criterion)
    return np.clip(Psi, -arfit.PACF_CLAMP, arfit.PACF_CLAMP)


def estimate_parametric(
    ts,
    grid=None,
    *,
    order_mode="aic",
    normalize=True,
    p_max=None,
    pacf_criterion="loocv",
    threads=None,
):
    """AR-approximation estimate of the quantile spectrum.

    ``ts`` may be a series or a precomputed :class:`QuantilePeriodogram`.
    ``order_mode`` is ``"aic"`` (per level) or ``"common"`` (one order
    minimising the AIC averaged over levels).
    """
    qp = _periodogram(ts, grid, threads)
    grid = qp.grid
    n = qp.n
    taus = grid.levels
    m = taus.size
    if p_max is None:
        p_max = default_p_max(n)
    p_max = int(min(p_max, n - 1))

    gamma = qacf(qp).gamma
    ladders = []
    for i, tau in enumerate(taus):
        try:
            ladders.append(arfit.levinson_durbin(gamma[: p_max + 1, i], p_max))
        except QSpecError as exc:
            raise StageError("levinson_durbin", tau, exc) from exc

    if order_mode == "aic":
        orders = [arfit.select_order_aic(lev.residual_variances, n) for lev in ladders]
    elif order_mode == "common":
        depth = min(lev.order for lev in ladders)
        common = arfit.select_common_order([lev.residual_variances[: depth + 1] for lev in ladders], n)
        orders = [common] * m
    else:
        raise ValueError(f"order_mode must be 'aic' or 'common', got {order_mode!r}")
    scales = np.array([lev.residual_variances[p] for lev, p in zip(ladders, orders)])

    s_orders = smooth_orders(taus, orders, p_max)
    s_scales = smooth_scales(taus, scales)

    width = int(s_orders.max())
    Psi = np.zeros((m, width))
    for i, lev in enumerate(ladders):
        k = min(int(s_orders[i]), lev.order)
        Psi[i, :k] = lev.pacf[:k]
    try:
        Psi = smooth_pacf_matrix(taus, Psi, pacf_criterion)
    except QSpecError as exc:
        raise StageError("pacf_smoothing", None, exc) from exc

    idx = evaluation_indices(n)
    freqs = idx / n
    values = np.empty((idx.size, m))
    fits = []
    for i, tau in enumerate(taus):
        try:
            phi = arfit.pacf_to_ar(Psi[i])
            values[:, i] = arfit.ar_spectrum(phi, freqs, s_scales[i])
        except QSpecError as exc:
            raise StageError("ar_spectrum", tau, exc) from exc
        fits.append(
            arfit.ARFit(
                tau=float(tau),
                order=width,
                pacf=Psi[i].copy(),
                coeffs=phi,
                scale=float(s_scales[i]),
                meta={"aic_order": int(orders[i]), "smoothed_order": int(s_orders[i]),
                      "raw_scale": float(scales[i])},
            )
        )
    if normalize:
        values = normalize_columns(values)
    options = {"order_mode": order_mode, "p_max": p_max, "pacf_criterion": pacf_criterion}
    return QuantileSpectrumEstimate(n, grid, idx, values, bool(normalize), "parametric", fits, options)


def estimate_baseline(
    ts,
    grid=None,
    method="spline",
    *,
    normalize=True,
    bw_freq=2.0,
    bw_tau=3.0,
    spans=None,
    criterion="loocv",
    threads=None,
):
    """Smoothed raw periodogram: spline, Gamma-GCV or 2D Gaussian kernel."""
    if method not in BASELINES:
        raise ValueError(f"unknown baseline {method!r}; choose from {', '.join(BASELINES)}")
    qp = _periodogram(ts, grid, threads)
    n = qp.n
    taus = qp.grid.levels
    idx = evaluation_indices(n)
    freqs = idx / n
    P = qp.ordinates[idx, :]
    options = {}
    try:
        if method == "kernel2d":
            S = smooth.kernel2d_smooth(P, bw_freq, bw_tau)
            options.update(bw_freq=float(bw_freq), bw_tau=float(bw_tau))
        else:
            S = np.empty_like(P)
            chosen = []
            for i in range(taus.size):
                if method == "spline":
                    S[:, i], lam = smooth.spline_smooth_cv(freqs, P[:, i], criterion=criterion,
                                                           return_penalty=True)
                    chosen.append(lam)
                else:
                    S[:, i], span = smooth.gamma_gcv_smooth(P[:, i], spans=spans, return_span=True)
                    chosen.append(int(span))
            if taus.size >= 4:
                S = smooth.spline_smooth_columns(taus, S.T, criterion=criterion).T
            options["criterion"] = criterion
            options["penalties" if method == "spline" else "spans"] = chosen
    except QSpecError as exc:
        raise StageError(method, None, exc) from exc
    if normalize:
        S = normalize_columns(S)
    return QuantileSpectrumEstimate(n, qp.grid, idx, S, bool(normalize), method, None, options)


def estimate(ts, grid=None, method="parametric", **options):
    """Dispatch to the parametric estimator or one of the baselines."""
    method = method.replace("-", "_")
    if method == "parametric":
        return estimate_parametric(ts, grid, **options)
    return estimate_baseline(ts, grid, method, **options)
