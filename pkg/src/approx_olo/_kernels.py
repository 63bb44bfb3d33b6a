"""Compiled inner loops for explicitly enumerated feasible sets.

The generic modules (``oracles``, ``ellipsoid``, ``sod``, ``online``) hold the
reference implementations that work with any oracle.  The routines here repeat
the same steps for a finite point list so that an Ellipsoid run of a few
hundred iterations costs microseconds instead of milliseconds.  Every kernel
is cross-checked against its generic counterpart in the test suite.
"""

import numpy as np
from numba import njit

# status codes returned by ``sod_finite``
SEPARATION = 0
DECOMPOSITION = 1
DECOMPOSITION_EARLY = 2
BREAKDOWN = 3
DECOMPOSITION_THIN = 4

# ``fw_finite`` status codes
FW_DONE = 0
FW_CAP = 1

ZERO_NORM = 1e-12
SELECT_RTOL = 1e-12


@njit(cache=True)
def _dot(points, i, c):
    s = 0.0
    for j in range(c.shape[0]):
        s += points[i, j] * c[j]
    return s


@njit(cache=True)
def select_finite(points, c, alpha, loss):
    """Index of the degraded-oracle answer for a nonnegative direction ``c``.

    Among the points whose value satisfies the alpha guarantee, return the
    one with the worst value (ties by lowest index).
    """
    m = points.shape[0]
    opt = _dot(points, 0, c)
    for i in range(1, m):
        val = _dot(points, i, c)
        if (loss and val < opt) or (not loss and val > opt):
            opt = val
    thr = alpha * opt
    best = -1
    if loss:
        thr += SELECT_RTOL * max(1.0, abs(thr))
        bestval = -np.inf
        for i in range(m):
            val = _dot(points, i, c)
            if val <= thr and val > bestval:
                best = i
                bestval = val
    else:
        thr -= SELECT_RTOL * max(1.0, abs(thr))
        bestval = np.inf
        for i in range(m):
            val = _dot(points, i, c)
            if val >= thr and val < bestval:
                best = i
                bestval = val
    return best


@njit(cache=True)
def extend_finite(points, c, alpha, R, loss, v_out):
    """Extended oracle on a finite set; writes v into ``v_out``, returns s's index.

    ``v_out`` doubles as scratch space for the raw query direction.
    """
    d = c.shape[0]
    nrm = 0.0
    # losses query c+ and correct along c-; payoffs query -c- and correct along c+
    for j in range(d):
        if (c[j] >= 0.0) == loss:
            v_out[j] = abs(c[j])
        else:
            v_out[j] = 0.0
            nrm += c[j] * c[j]
    idx = select_finite(points, v_out, alpha, loss)
    nrm = np.sqrt(nrm)
    scale = alpha * R if loss else R
    for j in range(d):
        v_out[j] = points[idx, j]
        if nrm >= ZERO_NORM and (c[j] >= 0.0) != loss:
            v_out[j] -= scale * c[j] / nrm
    return idx


@njit(cache=True)
def ellipsoid_cut_inplace(center, A, g):
    """Central cut keeping {x : g.(x - center) <= 0}.  Returns False on breakdown."""
    d = center.shape[0]
    Ag = A @ g
    gAg = 0.0
    for j in range(d):
        gAg += g[j] * Ag[j]
    if not gAg > 0.0:
        return False
    b = Ag / np.sqrt(gAg)
    if d == 1:
        center[0] -= 0.5 * b[0]
        A[0, 0] *= 0.25
        return True
    for j in range(d):
        center[j] -= b[j] / (d + 1)
    f = d * d / (d * d - 1.0)
    t = 2.0 / (d + 1)
    for i in range(d):
        for j in range(i, d):
            val = f * (A[i, j] - t * b[i] * b[j])
            # symmetrize by construction
            A[i, j] = val
            A[j, i] = val
    return True


@njit(cache=True)
def _half_width_sq(A, g):
    # squared half-width of the ellipsoid along g, times ||g||^2
    d = g.shape[0]
    gAg = 0.0
    gg = 0.0
    for i in range(d):
        t = 0.0
        for j in range(d):
            t += A[i, j] * g[j]
        gAg += g[i] * t
        gg += g[i] * g[i]
    return gAg, gg


@njit(cache=True)
def sod_finite(x, eps, points, alpha, R, loss, N, r):
    """Separation-or-decomposition loop on a finite set.

    ``r`` is the witness-ball radius: once the ellipsoid is thinner than r
    along a cut direction no separator ball fits and the run stops with
    DECOMPOSITION_THIN.  Returns (status, w, V, S_idx, iterations); V and
    S_idx hold the oracle outputs of every iteration that ran.
    """
    d = x.shape[0]
    center = np.zeros(d)
    A = np.eye(d)
    V = np.empty((N, d))
    S_idx = np.empty(N, dtype=np.int64)
    w = np.zeros(d)
    neg = np.empty(d)
    g = np.empty(d)
    scale_x = 1.0 + np.sqrt((x * x).sum())
    for it in range(N):
        for j in range(d):
            w[j] = center[j]
            neg[j] = -center[j]
        S_idx[it] = extend_finite(points, neg, alpha, R, loss, V[it])
        margin = 0.0
        gnorm = 0.0
        wnorm = 0.0
        for j in range(d):
            margin += (x[j] - V[it, j]) * w[j]
            g[j] = V[it, j] - x[j]
            gnorm += g[j] * g[j]
            wnorm += w[j] * w[j]
        if margin < eps:
            if np.sqrt(gnorm) <= 1e-14 * scale_x:
                return DECOMPOSITION_EARLY, w, V[: it + 1], S_idx[: it + 1], it + 1
        elif wnorm > 1.0:
            for j in range(d):
                g[j] = w[j]
        else:
            return SEPARATION, w, V[: it + 1], S_idx[: it + 1], it + 1
        gAg, gg = _half_width_sq(A, g)
        if gAg < r * r * gg:
            return DECOMPOSITION_THIN, w, V[: it + 1], S_idx[: it + 1], it + 1
        if not ellipsoid_cut_inplace(center, A, g):
            return BREAKDOWN, w, V[: it + 1], S_idx[: it + 1], it + 1
    return DECOMPOSITION, w, V, S_idx, N


@njit(cache=True)
def _affine_minimizer(P, S, k):
    # argmin ||sum mu_i P_i|| subject to sum mu_i = 1 over the active set
    B = np.empty((k, P.shape[1]))
    for i in range(k):
        B[i] = P[S[i]]
    G = B @ B.T
    s = 0.0
    for i in range(k):
        s += G[i, i]
    s = max(s / k, 1e-300)
    M = G + s
    rhs = np.ones(k)
    z = np.linalg.lstsq(M, rhs, rcond=-1.0)[0]
    return z / z.sum()


@njit(cache=True)
def min_norm_point(P, tol, max_iter):
    """Wolfe's min-norm-point method on conv(rows of P).

    Returns (weights, residual, iterations, converged).  The residual is
    max over the support of P_i.p minus min over all rows of P_j.p, which is
    the optimality gap of the simplex-constrained least-squares problem.
    """
    N, d = P.shape
    lam = np.zeros(N)
    active = np.zeros(N, dtype=np.bool_)
    S = np.empty(N + 1, dtype=np.int64)
    norms = np.empty(N)
    for i in range(N):
        norms[i] = (P[i] * P[i]).sum()
    i0 = np.argmin(norms)
    S[0] = i0
    k = 1
    lam[i0] = 1.0
    active[i0] = True
    p = P[i0].copy()
    residual = np.inf
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        dots = P @ p
        j = np.argmin(dots)
        hi = -np.inf
        for a in range(k):
            if dots[S[a]] > hi:
                hi = dots[S[a]]
        residual = max(0.0, hi - dots[j])
        if residual <= tol:
            converged = True
            break
        if active[j] or k > N:
            break
        S[k] = j
        k += 1
        active[j] = True
        stalled = False
        for _minor in range(4 * N + 10):
            mu = _affine_minimizer(P, S, k)
            if mu.min() > 1e-15:
                for a in range(k):
                    lam[S[a]] = mu[a]
                break
            theta = 1.0
            for a in range(k):
                if mu[a] <= 1e-15:
                    la = lam[S[a]]
                    t = la / (la - mu[a])
                    if t < theta:
                        theta = t
            for a in range(k):
                lam[S[a]] = (1.0 - theta) * lam[S[a]] + theta * mu[a]
            # drop atoms whose weight vanished
            kk = 0
            for a in range(k):
                if lam[S[a]] > 1e-15:
                    S[kk] = S[a]
                    kk += 1
                else:
                    lam[S[a]] = 0.0
                    active[S[a]] = False
            if kk == k:
                stalled = True
                break
            k = kk
            if k == 1:
                lam[S[0]] = 1.0
                break
        tot = 0.0
        for a in range(k):
            tot += lam[S[a]]
        p[:] = 0.0
        for a in range(k):
            lam[S[a]] /= tot
            p += lam[S[a]] * P[S[a]]
        if stalled:
            break
    if not converged:
        dots = P @ p
        hi = -np.inf
        for a in range(k):
            if dots[S[a]] > hi:
                hi = dots[S[a]]
        residual = max(0.0, hi - dots.min())
        converged = residual <= tol
    return lam, residual, it, converged


@njit(cache=True)
def fw_finite(y, x0, eps, lam, points, alpha, R, loss, weights, cap, radius):
    """Frank-Wolfe approximate projection with fixed step on a finite set.

    ``weights`` is the dense mixture over the rows of ``points`` dominating
    ``x0``; it is updated in place.  Returns (x, iterations, status,
    ball_violations).
    """
    d = y.shape[0]
    x = x0.copy()
    v = np.empty(d)
    c = np.empty(d)
    violations = 0
    for i in range(cap):
        xn = 0.0
        for j in range(d):
            c[j] = x[j] - y[j]
            xn += x[j] * x[j]
        if np.sqrt(xn) > radius * (1.0 + 1e-12):
            violations += 1
        idx = extend_finite(points, c, alpha, R, loss, v)
        gap = 0.0
        for j in range(d):
            gap += c[j] * (x[j] - v[j])
        if gap <= eps:
            return x, i + 1, FW_DONE, violations
        for j in range(d):
            x[j] += lam * (v[j] - x[j])
        weights *= 1.0 - lam
        weights[idx] += lam
    return x, cap, FW_CAP, violations
