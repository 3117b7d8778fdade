"""Trigonometric quantile regression at a single frequency.

Minimises ``sum_t rho_tau(y_t - lam - x_t(omega)' beta)`` with
``x_t = (cos 2 pi omega t, sin 2 pi omega t)`` and ``t = 1..n``.

The problem is a tiny linear program (three unknowns), solved exactly by a
vertex-descent simplex: every iterate interpolates ``p`` observations, the
steepest feasible edge is chosen from the one-sided directional derivatives,
and an exact line search (a weighted-median scan over residual breakpoints)
moves to the best vertex along that edge. Fits for an increasing sequence of
quantile levels warm-start from the previous optimal basis, which is the hot
path of the quantile periodogram.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidFrequency, InvalidTau, NoConvergence
from .signal import validate

MAX_ITER = 5000

_OK = 0
_NOCONV = 1
_SINGULAR = 2


@dataclass(frozen=True)
class QuantRegFit:
    beta: np.ndarray
    lambda_tau: float
    objective: float
    tau: float
    omega: float
    residuals: np.ndarray
    basis: np.ndarray


def _check_tau(tau):
    if not (0.0 < tau < 1.0) or not np.isfinite(tau):
        raise InvalidTau(f"quantile level must lie in (0, 1), got {tau!r}")


def check_loss(u, tau):
    """Check (pinball) loss ``u * (tau - 1{u < 0})``, elementwise."""
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = u * (tau - (u < 0))
    return float(out) if out.ndim == 0 else out


def design_matrix(n, omega):
    """Columns ``1, cos(2 pi omega t), sin(2 pi omega t)`` for t = 1..n.

    At the Nyquist frequency the sine column vanishes and is dropped, leaving
    a two-column design.
    """
    t = np.arange(1, n + 1, dtype=float)
    arg = 2.0 * np.pi * omega * t
    if _is_nyquist(omega):
        return np.column_stack([np.ones(n), np.cos(np.pi * t)])
    return np.column_stack([np.ones(n), np.cos(arg), np.sin(arg)])


def _is_nyquist(omega):
    return abs(omega - 0.5) < 1e-12


# ----------------------------------------------------------------------------
# numba kernels


@njit(cache=True, nogil=True)
def _invert(A, out):
    """Gauss-Jordan inverse with partial pivoting; returns False if singular."""
    p = A.shape[0]
    M = np.empty((p, 2 * p))
    for i in range(p):
        for j in range(p):
            M[i, j] = A[i, j]
            M[i, p + j] = 1.0 if i == j else 0.0
    scale = 0.0
    for i in range(p):
        for j in range(p):
            scale = max(scale, abs(A[i, j]))
    if scale == 0.0:
        return False
    for c in range(p):
        piv = c
        best = abs(M[c, c])
        for r in range(c + 1, p):
            if abs(M[r, c]) > best:
                best = abs(M[r, c])
                piv = r
        if best <= 1e-13 * scale:
            return False
        if piv != c:
            for j in range(2 * p):
                tmp = M[c, j]
                M[c, j] = M[piv, j]
                M[piv, j] = tmp
        d = M[c, c]
        for j in range(2 * p):
            M[c, j] /= d
        for r in range(p):
            if r != c:
                f = M[r, c]
                if f != 0.0:
                    for j in range(2 * p):
                        M[r, j] -= f * M[c, j]
    for i in range(p):
        for j in range(p):
            out[i, j] = M[i, p + j]
    return True


@njit(cache=True, nogil=True)
def _initial_basis(X, y):
    """Pick p well-conditioned rows close to the least-squares fit."""
    n, p = X.shape
    beta = np.linalg.lstsq(X, y)[0]
    res = np.abs(y - X @ beta)
    order = np.argsort(res, kind="mergesort")
    basis = np.empty(p, dtype=np.int64)
    Q = np.zeros((p, p))
    k = 0
    for idx in order:
        v = X[idx].copy()
        norm0 = np.sqrt(np.sum(v * v))
        for q in range(k):
            v -= np.dot(v, Q[q]) * Q[q]
        nv = np.sqrt(np.sum(v * v))
        if nv > 1e-6 * norm0:
            Q[k] = v / nv
            basis[k] = idx
            k += 1
            if k == p:
                break
    if k < p:
        basis[:] = -1
    return basis


@njit(cache=True, nogil=True)
def _zero_tol(y):
    # residuals below this are treated as exact interpolation
    return 1e-11 * (np.max(y) - np.min(y)) + 1e-14 * np.max(np.abs(y))


@njit(cache=True, nogil=True)
def _heap_push_down(keys, items, size, pos):
    while True:
        left = 2 * pos + 1
        if left >= size:
            return
        child = left
        right = left + 1
        if right < size and keys[right] < keys[left]:
            child = right
        if keys[child] < keys[pos]:
            tk = keys[pos]
            keys[pos] = keys[child]
            keys[child] = tk
            ti = items[pos]
            items[pos] = items[child]
            items[child] = ti
            pos = child
        else:
            return


@njit(cache=True, nogil=True)
def _better(bnew, bold):
    """Tie-break: smaller ||beta||_2 (slope part), then lexicographic."""
    p = bnew.shape[0]
    sn = 0.0
    so = 0.0
    for i in range(1, p):
        sn += bnew[i] * bnew[i]
        so += bold[i] * bold[i]
    if sn < so * (1.0 - 1e-12) - 1e-300:
        return True
    if sn > so * (1.0 + 1e-12) + 1e-300:
        return False
    for i in range(1, p):
        if bnew[i] < bold[i] - 1e-12 * (abs(bold[i]) + 1e-300):
            return True
        if bnew[i] > bold[i] + 1e-12 * (abs(bold[i]) + 1e-300):
            return False
    return False


@njit(cache=True, nogil=True)
def _solve_one(X, y, tau, basis, beta_out, res_out, maxit):
    """Vertex descent for one quantile level, starting from ``basis``.

    ``basis`` is updated in place to the optimal basis. Returns
    (status, objective, iterations).
    """
    n, p = X.shape
    Xh = np.empty((p, p))
    Binv = np.empty((p, p))
    Z = np.empty((n, p))
    r = np.empty(n)
    b = np.empty(p)
    inb = np.zeros(n, dtype=np.bool_)
    S = np.empty(p)
    Kp = np.empty(p)
    Km = np.empty(p)
    absz = np.empty(p)
    keys = np.empty(n)
    items = np.empty(n, dtype=np.int64)

    eps_r = _zero_tol(y)
    tiebreak = False
    it = 0
    while True:
        if it >= maxit:
            return _NOCONV, 0.0, it
        it += 1
        for a in range(p):
            for c in range(p):
                Xh[a, c] = X[basis[a], c]
        if not _invert(Xh, Binv):
            return _SINGULAR, 0.0, it
        for a in range(p):
            s = 0.0
            for c in range(p):
                s += Binv[a, c] * y[basis[c]]
            b[a] = s
        inb[:] = False
        for a in range(p):
            inb[basis[a]] = True
        for j in range(p):
            S[j] = 0.0
            Kp[j] = 0.0
            Km[j] = 0.0
            absz[j] = 0.0
        for t in range(n):
            fit = 0.0
            for c in range(p):
                fit += X[t, c] * b[c]
            rt = y[t] - fit
            if inb[t]:
                r[t] = 0.0
                for j in range(p):
                    Z[t, j] = 0.0
                continue
            if abs(rt) <= eps_r:
                rt = 0.0
            r[t] = rt
            for j in range(p):
                z = 0.0
                for c in range(p):
                    z += X[t, c] * Binv[c, j]
                Z[t, j] = z
                absz[j] += abs(z)
                if rt > 0.0:
                    S[j] -= z * tau
                elif rt < 0.0:
                    S[j] -= z * (tau - 1.0)
                else:
                    # zero residual off the basis: kink already at delta = 0
                    if z > 0.0:
                        Kp[j] += z * (1.0 - tau)
                        Km[j] += z * tau
                    else:
                        Kp[j] -= z * tau
                        Km[j] -= z * (1.0 - tau)

        # most negative directional derivative over the 2p edges
        best_g = 0.0
        best_j = -1
        best_s = 1.0
        for j in range(p):
            tol = 1e-11 * (1.0 + absz[j])
            gp = S[j] + Kp[j] + (1.0 - tau)
            gm = -S[j] + Km[j] + tau
            if gp < -tol and gp < best_g:
                best_g = gp
                best_j = j
                best_s = 1.0
            if gm < -tol and gm < best_g:
                best_g = gm
                best_j = j
                best_s = -1.0

        if best_j < 0:
            # optimal vertex; look for an equally good neighbour with smaller beta
            tiebreak = False
            for j in range(p):
                tol = 1e-11 * (1.0 + absz[j])
                for si in range(2):
                    s = 1.0 if si == 0 else -1.0
                    g = (S[j] + Kp[j] + (1.0 - tau)) if si == 0 else (-S[j] + Km[j] + tau)
                    if g > tol:
                        continue
                    # first breakpoint along this flat edge
                    dmin = np.inf
                    kmin = -1
                    for t in range(n):
                        if inb[t] or r[t] == 0.0:
                            continue
                        c = s * Z[t, j]
                        if c == 0.0:
                            continue
                        d = r[t] / c
                        if d > 0.0 and (d < dmin or (d == dmin and abs(c) > abs(s * Z[kmin, j]))):
                            dmin = d
                            kmin = t
                    if kmin < 0:
                        continue
                    bnew = b.copy()
                    for c in range(p):
                        bnew[c] += dmin * s * Binv[c, j]
                    if _better(bnew, b):
                        basis[j] = kmin
                        tiebreak = True
                        break
                if tiebreak:
                    break
            if tiebreak:
                continue
            break

        # exact line search along the chosen edge
        j = best_j
        s = best_s
        size = 0
        for t in range(n):
            if inb[t] or r[t] == 0.0:
                continue
            c = s * Z[t, j]
            if c == 0.0:
                continue
            d = r[t] / c
            if d > 0.0:
                keys[size] = d
                items[size] = t
                size += 1
        if size == 0:
            return _NOCONV, 0.0, it
        for pos in range(size // 2 - 1, -1, -1):
            _heap_push_down(keys, items, size, pos)
        slope = best_g
        k = -1
        while size > 0:
            t = items[0]
            slope += abs(Z[t, j])
            k = t
            size -= 1
            keys[0] = keys[size]
            items[0] = items[size]
            _heap_push_down(keys, items, size, 0)
            if slope >= 0.0:
                break
        basis[j] = k

    # final solution from the sorted basis so equal vertices give equal bits
    basis.sort()
    for a in range(p):
        for c in range(p):
            Xh[a, c] = X[basis[a], c]
    if not _invert(Xh, Binv):
        return _SINGULAR, 0.0, it
    for a in range(p):
        s = 0.0
        for c in range(p):
            s += Binv[a, c] * y[basis[c]]
        beta_out[a] = s
    obj = 0.0
    for t in range(n):
        fit = 0.0
        for c in range(p):
            fit += X[t, c] * beta_out[c]
        rt = y[t] - fit
        res_out[t] = rt
        obj += rt * (tau - 1.0) if rt < 0.0 else rt * tau
    return _OK, obj, it


@njit(cache=True, nogil=True)
def _inv3(h, cs, sn, B):
    """Inverse of the 3x3 basis matrix with rows (1, cs[h_i], sn[h_i])."""
    a0, a1, a2 = cs[h[0]], cs[h[1]], cs[h[2]]
    s0, s1, s2 = sn[h[0]], sn[h[1]], sn[h[2]]
    # cofactors of [[1, a0, s0], [1, a1, s1], [1, a2, s2]]
    c00 = a1 * s2 - s1 * a2
    c01 = -(s2 - s1)
    c02 = a2 - a1
    c10 = -(a0 * s2 - s0 * a2)
    c11 = s2 - s0
    c12 = -(a2 - a0)
    c20 = a0 * s1 - s0 * a1
    c21 = -(s1 - s0)
    c22 = a1 - a0
    det = c00 + c10 + c20
    scale = 1.0 + abs(a0) + abs(a1) + abs(a2) + abs(s0) + abs(s1) + abs(s2)
    if abs(det) <= 1e-13 * scale * scale:
        return False
    inv = 1.0 / det
    # B = adj / det, adj = cofactor^T
    B[0, 0] = c00 * inv
    B[0, 1] = c10 * inv
    B[0, 2] = c20 * inv
    B[1, 0] = c01 * inv
    B[1, 1] = c11 * inv
    B[1, 2] = c21 * inv
    B[2, 0] = c02 * inv
    B[2, 1] = c12 * inv
    B[2, 2] = c22 * inv
    return True


@njit(cache=True, nogil=True)
def _edge_breakpoints(cs, sn, r, Bj0, Bj1, Bj2, s, keys, items, wts):
    """Collect positive step lengths at which residuals change sign."""
    size = 0
    for t in range(r.shape[0]):
        rt = r[t]
        if rt == 0.0:
            continue
        c = s * (Bj0 + cs[t] * Bj1 + sn[t] * Bj2)
        if c == 0.0:
            continue
        d = rt / c
        if d > 0.0:
            keys[size] = d
            items[size] = t
            wts[t] = abs(c)
            size += 1
    return size


@njit(cache=True, nogil=True)
def _walk_breakpoints(keys, items, wts, size, slope):
    """Index of the breakpoint where the edge slope first becomes >= 0.

    Breakpoints are consumed in increasing order. Warm-started steps
    usually stop after a handful, so the first few are found by linear
    scans and a heap takes over only for long steps.
    """
    k = -1
    for _ in range(8):
        if size == 0:
            return k
        best = 0
        for q in range(1, size):
            if keys[q] < keys[best]:
                best = q
        k = items[best]
        slope += wts[k]
        size -= 1
        keys[best] = keys[size]
        items[best] = items[size]
        if slope >= 0.0:
            return k
    for pos in range(size // 2 - 1, -1, -1):
        _heap_push_down(keys, items, size, pos)
    while size > 0:
        k = items[0]
        slope += wts[k]
        size -= 1
        keys[0] = keys[size]
        items[0] = items[size]
        _heap_push_down(keys, items, size, 0)
        if slope >= 0.0:
            break
    return k


@njit(cache=True, nogil=True)
def _solve3(cs, sn, y, tau, basis, b, r, keys, items, wts, maxit):
    """Vertex descent specialised to the (1, cos, sin) design.

    Same algorithm as :func:`_solve_one`, but the directional derivatives
    are formed from three weighted sums instead of the full direction matrix.
    ``b`` receives (intercept, cos, sin); ``r`` the residuals.
    """
    n = y.shape[0]
    B = np.empty((3, 3))
    S = np.empty(3)
    Kp = np.empty(3)
    Km = np.empty(3)
    tol = np.empty(3)
    zeros = np.empty(n, dtype=np.int64)
    eps_r = _zero_tol(y)
    it = 0
    while True:
        if it >= maxit:
            return _NOCONV, 0.0, it
        it += 1
        h0, h1, h2 = basis[0], basis[1], basis[2]
        if not _inv3(basis, cs, sn, B):
            return _SINGULAR, 0.0, it
        y0, y1, y2 = y[h0], y[h1], y[h2]
        b0 = B[0, 0] * y0 + B[0, 1] * y1 + B[0, 2] * y2
        b1 = B[1, 0] * y0 + B[1, 1] * y1 + B[1, 2] * y2
        b2 = B[2, 0] * y0 + B[2, 1] * y1 + B[2, 2] * y2
        W0 = 0.0
        Wc = 0.0
        Ws = 0.0
        nz = 0
        for t in range(n):
            rt = y[t] - b0 - b1 * cs[t] - b2 * sn[t]
            if t == h0 or t == h1 or t == h2 or abs(rt) <= eps_r:
                r[t] = 0.0
                if not (t == h0 or t == h1 or t == h2):
                    zeros[nz] = t
                    nz += 1
                continue
            r[t] = rt
            w = tau if rt > 0.0 else tau - 1.0
            W0 += w
            Wc += w * cs[t]
            Ws += w * sn[t]
        b[0] = b0
        b[1] = b1
        b[2] = b2
        for j in range(3):
            S[j] = -(B[0, j] * W0 + B[1, j] * Wc + B[2, j] * Ws)
            Kp[j] = 0.0
            Km[j] = 0.0
            tol[j] = 1e-11 * (1.0 + n * (abs(B[0, j]) + abs(B[1, j]) + abs(B[2, j])))
        for q in range(nz):
            t = zeros[q]
            for j in range(3):
                z = B[0, j] + cs[t] * B[1, j] + sn[t] * B[2, j]
                # zero residual off the basis: kink already at delta = 0
                if z > 0.0:
                    Kp[j] += z * (1.0 - tau)
                    Km[j] += z * tau
                else:
                    Kp[j] -= z * tau
                    Km[j] -= z * (1.0 - tau)

        best_g = 0.0
        best_j = -1
        best_s = 1.0
        for j in range(3):
            gp = S[j] + Kp[j] + (1.0 - tau)
            gm = -S[j] + Km[j] + tau
            if gp < -tol[j] and gp < best_g:
                best_g = gp
                best_j = j
                best_s = 1.0
            if gm < -tol[j] and gm < best_g:
                best_g = gm
                best_j = j
                best_s = -1.0

        if best_j < 0:
            # optimal; step to an equally good neighbour if it has smaller beta
            moved = False
            for j in range(3):
                for si in range(2):
                    s = 1.0 if si == 0 else -1.0
                    g = (S[j] + Kp[j] + (1.0 - tau)) if si == 0 else (-S[j] + Km[j] + tau)
                    if g > tol[j]:
                        continue
                    size = _edge_breakpoints(cs, sn, r, B[0, j], B[1, j], B[2, j], s, keys, items, wts)
                    if size == 0:
                        continue
                    kmin = items[0]
                    for q in range(1, size):
                        t = items[q]
                        if keys[q] < keys[0] or (keys[q] == keys[0] and wts[t] > wts[kmin]):
                            keys[0] = keys[q]
                            kmin = t
                    bnew = b.copy()
                    for c in range(3):
                        bnew[c] += keys[0] * s * B[c, j]
                    if _better(bnew, b):
                        basis[j] = kmin
                        moved = True
                        break
                if moved:
                    break
            if moved:
                continue
            break

        # exact line search: walk breakpoints in order until the slope turns
        j = best_j
        size = _edge_breakpoints(cs, sn, r, B[0, j], B[1, j], B[2, j], best_s, keys, items, wts)
        if size == 0:
            return _NOCONV, 0.0, it
        k = _walk_breakpoints(keys, items, wts, size, best_g)
        basis[j] = k

    basis.sort()
    if not _inv3(basis, cs, sn, B):
        return _SINGULAR, 0.0, it
    y0, y1, y2 = y[basis[0]], y[basis[1]], y[basis[2]]
    for a in range(3):
        b[a] = B[a, 0] * y0 + B[a, 1] * y1 + B[a, 2] * y2
    obj = 0.0
    for t in range(n):
        rt = y[t] - b[0] - b[1] * cs[t] - b[2] * sn[t]
        r[t] = rt
        obj += rt * (tau - 1.0) if rt < 0.0 else rt * tau
    return _OK, obj, it


@njit(cache=True, nogil=True)
def _solve_path(X, y, taus, warm, betas, objs):
    """Fit every level in ``taus`` (sorted), warm-starting when ``warm``."""
    n, p = X.shape
    res = np.empty(n)
    basis0 = _initial_basis(X, y)
    if basis0[0] < 0:
        return _SINGULAR, 0
    basis = basis0.copy()
    if p == 3:
        cs = np.ascontiguousarray(X[:, 1])
        sn = np.ascontiguousarray(X[:, 2])
        keys = np.empty(n)
        items = np.empty(n, dtype=np.int64)
        wts = np.empty(n)
    for i in range(taus.shape[0]):
        if not warm:
            basis[:] = basis0
        if p == 3:
            status, obj, _ = _solve3(cs, sn, y, taus[i], basis, betas[i], res, keys, items, wts, MAX_ITER)
        else:
            status, obj, _ = _solve_one(X, y, taus[i], basis, betas[i], res, MAX_ITER)
        if status != _OK:
            return status, i
        objs[i] = obj
    return _OK, -1


@njit(cache=True, nogil=True)
def _slopes_grid(y, ls, taus, warm, out):
    """Slope coefficients for Fourier indices ``ls`` and all levels.

    ``out[k, i]`` receives (cos, sin) at index ``ls[k]`` and level ``taus[i]``.
    Returns (status, failing k, failing i).
    """
    n = y.shape[0]
    m = taus.shape[0]
    t = np.arange(1, n + 1).astype(np.float64)
    objs = np.empty(m)
    for k in range(ls.shape[0]):
        l = ls[k]
        if 2 * l == n:
            X = np.empty((n, 2))
            X[:, 0] = 1.0
            for q in range(n):
                X[q, 1] = 1.0 if (q + 1) % 2 == 0 else -1.0
        else:
            X = np.empty((n, 3))
            X[:, 0] = 1.0
            arg = 2.0 * np.pi * (l / n) * t
            X[:, 1] = np.cos(arg)
            X[:, 2] = np.sin(arg)
        p = X.shape[1]
        betas = np.empty((m, p))
        status, where = _solve_path(X, y, taus, warm, betas, objs)
        if status != _OK:
            return status, k, where
        for i in range(m):
            out[k, i, 0] = betas[i, 1]
            out[k, i, 1] = betas[i, 2] if p == 3 else 0.0
    return _OK, -1, -1


# ----------------------------------------------------------------------------
# public API


def _check_omega(n, omega):
    if not np.isfinite(omega) or not (0.0 < omega <= 0.5):
        raise InvalidFrequency(f"frequency must lie in (0, 1/2], got {omega!r}")
    if _is_nyquist(omega) and n % 2:
        raise InvalidFrequency("the Nyquist frequency 1/2 requires an even series length")


def _raise_status(status, omega, tau):
    if status == _NOCONV:
        raise NoConvergence(f"quantile regression did not converge at omega={omega:g}, tau={tau:g}")
    if status == _SINGULAR:
        raise NoConvergence(f"degenerate design at omega={omega:g}, tau={tau:g}")


def fit(ts, omega, tau):
    """Trigonometric quantile regression of ``ts`` at one frequency and level.

    Returns the exact L1 optimum as a :class:`QuantRegFit`. At ``omega = 1/2``
    (even n) the sine coefficient is reported as 0.
    """
    y = validate(ts)
    _check_tau(tau)
    _check_omega(y.size, omega)
    X = design_matrix(y.size, omega)
    p = X.shape[1]
    betas = np.empty((1, p))
    objs = np.empty(1)
    status, _ = _solve_path(X, y, np.array([float(tau)]), True, betas, objs)
    _raise_status(status, omega, tau)
    coef = betas[0]
    beta = np.array([coef[1], coef[2] if p == 3 else 0.0])
    resid = y - X @ coef
    return QuantRegFit(
        beta=beta,
        lambda_tau=float(coef[0]),
        objective=float(objs[0]),
        tau=float(tau),
        omega=float(omega),
        residuals=resid,
        basis=_basis_of(resid, p),
    )


def _basis_of(resid, p):
    return np.sort(np.argsort(np.abs(resid), kind="stable")[:p])


def fit_levels(y, omega, taus, warm=True):
    """Slope coefficients for each level in ``taus`` at one frequency.

    ``y`` must already be validated and ``taus`` sorted ascending. Returns an
    ``(len(taus), 2)`` array of (cosine, sine) coefficients and the objectives.
    With ``warm=False`` every level starts from the same cold basis.
    """
    X = design_matrix(y.size, omega)
    p = X.shape[1]
    taus = np.ascontiguousarray(taus, dtype=float)
    betas = np.empty((taus.size, p))
    objs = np.empty(taus.size)
    status, where = _solve_path(X, y, taus, warm, betas, objs)
    if status != _OK:
        _raise_status(status, omega, taus[max(where, 0)])
    out = np.zeros((taus.size, 2))
    out[:, 0] = betas[:, 1]
    if p == 3:
        out[:, 1] = betas[:, 2]
    return out, objs
