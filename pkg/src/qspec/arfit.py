"""Yule-Walker fitting by Levinson-Durbin, AIC order choice, PACF <-> AR maps
and the AR spectral density."""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyLadder,
    MismatchedLadders,
    NonCausalCoeffs,
    NonCausalPacf,
    SingularToeplitz,
    ZeroSpectrum,
)

PACF_CLAMP = 1.0 - 1e-6
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class LevinsonResult:
    """Output of :func:`levinson_durbin`.

    ``coeffs[k]`` holds the order-k AR coefficients (``coeffs[0]`` is empty),
    so any intermediate order can be read off without refitting.
    ``truncated`` is set when the recursion stopped early because the
    residual variance collapsed.
    """

    pacf: np.ndarray
    residual_variances: np.ndarray
    coeffs: list
    truncated: bool = False

    @property
    def order(self):
        return self.pacf.size

    @property
    def ar_coeffs(self):
        return self.coeffs[-1]


@dataclass(frozen=True)
class ARFit:
    tau: float
    order: int
    pacf: np.ndarray
    coeffs: np.ndarray
    scale: float
    meta: dict = field(default_factory=dict)


def levinson_durbin(acf, p_max):
    """Solve the Yule-Walker equations for orders 1..p_max recursively.

    Stops early (``truncated=True``) once the residual variance drops to
    ``1e-12 * acf[0]`` or below, returning the ladder up to the last valid
    order.
    """
    r = np.asarray(acf, dtype=float)
    if p_max < 0 or p_max >= r.size:
        raise ValueError(f"p_max must lie in [0, {r.size - 1}], got {p_max}")
    if not r[0] > 0:
        raise SingularToeplitz(f"lag-0 autocovariance must be positive, got {r[0]!r}")
    sig = [r[0]]
    pacf = []
    phi = np.zeros(0)
    coeffs = [phi]
    truncated = False
    for i in range(1, p_max + 1):
        k = (r[i] - phi @ r[i - 1:0:-1]) / sig[-1]
        s_new = sig[-1] * (1.0 - k * k)
        if s_new <= SINGULAR_RTOL * r[0] or abs(k) >= 1.0:
            truncated = True
            break
        phi = np.append(phi - k * phi[::-1], k)
        pacf.append(k)
        sig.append(s_new)
        coeffs.append(phi)
    return LevinsonResult(np.array(pacf), np.array(sig), coeffs, truncated)


def aic_curve(variance_ladder, n):
    ladder = np.asarray(variance_ladder, dtype=float)
    return n * np.log(ladder) + 2.0 * np.arange(ladder.size)


def select_order_aic(variance_ladder, n):
    """Order minimising ``n log(sigma2_p) + 2p``; ties go to the smaller p."""
    ladder = np.asarray(variance_ladder, dtype=float)
    if ladder.size == 0:
        raise EmptyLadder("variance ladder is empty")
    if np.any(ladder <= 0):
        raise ValueError("residual variances must be positive")
    return int(np.argmin(aic_curve(ladder, n)))


def select_common_order(ladders, n):
    """Order minimising the AIC averaged over quantile levels."""
    ladders = [np.asarray(l, dtype=float) for l in ladders]
    if not ladders or ladders[0].size == 0:
        raise EmptyLadder("no variance ladders supplied")
    if any(l.size != ladders[0].size for l in ladders):
        raise MismatchedLadders("variance ladders must share the same maximum order")
    mean_aic = np.mean([aic_curve(l, n) for l in ladders], axis=0)
    return int(np.argmin(mean_aic))


def pacf_to_ar(pacf):
    """AR coefficients from partial autocorrelations (step-up recursion)."""
    psi = np.asarray(pacf, dtype=float).ravel()
    if np.any(np.abs(psi) >= 1.0):
        raise NonCausalPacf("partial autocorrelations must lie strictly inside (-1, 1)")
    # extended precision keeps the roundtrip with ar_to_pacf exact to ~1e-16
    phi = np.zeros(0, dtype=np.longdouble)
    for k in psi.astype(np.longdouble):
        phi = np.append(phi - k * phi[::-1], k)
    return phi.astype(float)


def ar_to_pacf(coeffs):
    """Partial autocorrelations from AR coefficients (step-down recursion)."""
    phi = np.asarray(coeffs, dtype=float).ravel().astype(np.longdouble)
    psi = np.empty(phi.size)
    for p in range(phi.size, 0, -1):
        k = phi[p - 1]
        if abs(k) >= 1.0:
            raise NonCausalCoeffs("AR polynomial has a root on or inside the unit circle")
        psi[p - 1] = float(k)
        prev = phi[: p - 1]
        phi = (prev + k * prev[::-1]) / (1.0 - k * k)
    return psi


def ar_roots(coeffs):
    """Roots of ``1 - sum_k phi_k z^k``."""
    phi = np.asarray(coeffs, dtype=float)
    if phi.size == 0:
        return np.zeros(0, dtype=complex)
    # numpy wants highest degree first: -phi_p z^p - ... - phi_1 z + 1
    return np.roots(np.concatenate([-phi[::-1], [1.0]]))


def is_causal(coeffs, margin=1e-9):
    roots = ar_roots(coeffs)
    return bool(np.all(np.abs(roots) > 1.0 + margin))


def ar_acf(coeffs, scale, nlags):
    """Autocovariances of the causal AR(p) model at lags 0..nlags.

    Solves the stationary Yule-Walker system for lags 0..p directly, then
    extends by the AR recursion.
    """
    phi = np.asarray(coeffs, dtype=float)
    p = phi.size
    if p == 0:
        out = np.zeros(nlags + 1)
        out[0] = scale
        return out
    # gamma(h) - sum_k phi_k gamma(|h - k|) = scale * 1{h = 0}, h = 0..p
    A = np.zeros((p + 1, p + 1))
    for h in range(p + 1):
        A[h, h] += 1.0
        for k in range(1, p + 1):
            A[h, abs(h - k)] -= phi[k - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = scale
    g = np.linalg.solve(A, rhs)
    out = np.zeros(max(nlags, p) + 1)
    out[: p + 1] = g
    for h in range(p + 1, out.size):
        out[h] = phi @ out[h - 1::-1][:p]
    return out[: nlags + 1]


def ar_spectrum(fit_or_coeffs, freqs, scale=None):
    """``scale / |1 - sum_k phi_k e^{-2 pi i k omega}|^2`` at each frequency."""
    if isinstance(fit_or_coeffs, ARFit):
        phi = np.asarray(fit_or_coeffs.coeffs, dtype=float)
        scale = fit_or_coeffs.scale if scale is None else scale
    else:
        phi = np.asarray(fit_or_coeffs, dtype=float)
        scale = 1.0 if scale is None else scale
    if phi.size and not is_causal(phi, margin=0.0):
        raise NonCausalCoeffs("AR coefficients are not causal")
    freqs = np.asarray(freqs, dtype=float)
    k = np.arange(1, phi.size + 1)
    g = 1.0 - np.exp(-2j * np.pi * np.outer(freqs, k)) @ phi
    return scale / np.abs(g) ** 2


def normalize_spectrum(values):
    """Scale to unit sum; the last entry absorbs the rounding residual."""
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise ValueError("spectral values must be nonnegative")
    total = v.sum()
    if not total > 0:
        raise ZeroSpectrum("spectrum sums to zero")
    out = v / total
    out[-1] = 1.0 - np.sum(out[:-1])
    return out


def fit_from_acf(acf, n, p_max, tau=float("nan"), order=None):
    """Single-level AR fit: Levinson-Durbin ladder plus AIC (or fixed) order."""
    lev = levinson_durbin(acf, min(p_max, len(acf) - 1))
    p = select_order_aic(lev.residual_variances, n) if order is None else min(order, lev.order)
    return ARFit(
        tau=tau,
        order=p,
        pacf=lev.pacf[:p].copy(),
        coeffs=lev.coeffs[p].copy(),
        scale=float(lev.residual_variances[p]),
    )
