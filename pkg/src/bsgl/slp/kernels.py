"""Compiled inner loop for the structured column and feasibility LPs.

Same iteration as the reference loop in :mod:`bsgl.slp.admm` with the main
step done by block elimination; written against flat block vectors so the
interpreter is out of the hot path. The loop hands control back whenever the
zero pattern of the auxiliary iterate has been stable for a few iterations
and has not been tried yet, so the caller can attempt an exact polish.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ST_CONVERGED = 0
ST_PATTERN = 1
ST_MAX_ITER = 2
ST_INFEASIBLE = 3

_CUT = 1e-12


@njit(cache=True)
def _solve_dense(Q, QT, lam, g, p, beta, l, Y):
    n = lam.size
    G = QT @ g
    P = QT @ p
    dmax = 0.0
    for k in range(n):
        v = lam[k] * lam[k] + 2.0 * beta
        if v > dmax:
            dmax = v
    cut = _CUT * max(1.0, dmax)
    coef = np.empty(n)
    lc = np.empty(n)
    for k in range(n):
        den = lam[k] * lam[k] + 2.0 * beta
        if den > cut:
            coef[k] = (lam[k] * G[k] + 2.0 * beta * P[k]) / den
        else:
            coef[k] = 0.0
        lc[k] = lam[k] * coef[k]
    l[:] = Q @ coef
    Y[:] = Q @ lc


@njit(cache=True)
def _solve_tall(U, UT, s, Vt, V, kap, g, dphi, p, beta, l, phi, Y):
    gU = UT @ g
    pU = UT @ p
    delta = Vt @ dphi
    r = s.size
    f = np.empty(r)
    t = np.empty(r)
    a = np.empty(r)
    ys = np.empty(r)
    for k in range(r):
        s2 = s[k] * s[k]
        if beta > 0:
            om = beta / (s2 + beta)
            f[k] = (0.5 * kap * s[k] * gU[k] + om * (s[k] * pU[k] - delta[k])) / (
                0.5 * kap * kap * s2 + om)
        else:
            f[k] = gU[k] / (kap * s[k])
        t[k] = f[k] + delta[k]
        a[k] = (s[k] * t[k] + beta * pU[k]) / (s2 + beta)
        ys[k] = kap * s[k] * f[k]
        if beta > 0:
            a[k] -= pU[k]
    if beta > 0:
        l[:] = p + U @ a
    else:
        l[:] = U @ a
    Y[:] = U @ ys
    phi[:] = V @ t - dphi


@njit(cache=True)
def _signature(qt, nsl):
    h = np.int64(1469598103934665603)
    for k in range(nsl):
        bit = np.int64(1) if qt[k] == 0.0 else np.int64(0)
        h = (h ^ (bit + k * 2)) * np.int64(1099511628211)
    return h


@njit(cache=True)
def run(feas, tall, hasS, Q, QT, lam, U, UT, s, Vt, V, Xc, XcT, kap, S, i, rho,
        gamma, alpha, x, q, qt, mu1, mu2, max_iter, tol, window, tried, stable_need,
        best_x, best_qt):
    """Iterate in place; returns ``(status, iters, primal_res, objective, signature)``."""
    n = S.size
    K = XcT.shape[0] if tall else 0
    nsl = q.size
    nrow = mu1.size
    off = n + K  # first slack row
    e = np.zeros(n)
    e[i] = 1.0
    g = np.empty(n)
    pv = np.empty(n)
    l = np.empty(n)
    Y = np.empty(n)
    phi = np.empty(K)
    dphi = np.empty(K)
    R = np.empty(nrow)
    best_res = np.inf
    obj_prev = np.inf
    win_best = np.inf
    prev_win_best = np.inf
    mu_snap = mu1.copy()
    sig_prev = np.int64(0)
    sig_count = 0
    pres = np.inf
    obj = 0.0
    for it in range(1, max_iter + 1):
        ig = 1.0 / gamma
        # d = b - mu1/gamma, h = qt - mu2/gamma, a_k = d_{k+1} + h_k
        for k in range(K):
            dphi[k] = -mu1[n + k] * ig
        if not feas:
            for j in range(n):
                d1 = e[j] - mu1[j] * ig
                a1 = -rho - mu1[off + j] * ig + qt[j] - mu2[j] * ig
                a2 = -rho - mu1[off + n + j] * ig + qt[n + j] - mu2[n + j] * ig
                a3 = -mu1[off + 2 * n + j] * ig + qt[2 * n + j] - mu2[2 * n + j] * ig
                a4 = -mu1[off + 3 * n + j] * ig + qt[3 * n + j] - mu2[3 * n + j] * ig
                w = 0.5 * (a1 - a2)
                m = 0.5 * (a4 - a3)
                x[j] = 0.5 * (a3 + a4) - ig
                g[j] = d1 + w
                if hasS:
                    a5 = -mu1[off + 4 * n + j] * ig + qt[4 * n + j] - mu2[4 * n + j] * ig
                    pv[j] = (2.0 * m - S[j] * a5) / 3.0
                else:
                    pv[j] = m
            beta = 1.5 if hasS else 1.0
        else:
            for j in range(n):
                d1 = e[j] - mu1[j] * ig
                a1 = -mu1[off + j] * ig + qt[j] - mu2[j] * ig
                a2 = -mu1[off + n + j] * ig + qt[n + j] - mu2[n + j] * ig
                g[j] = d1 + 0.5 * (a1 - a2)
                if hasS:
                    a3 = -mu1[off + 2 * n + j] * ig + qt[2 * n + j] - mu2[2 * n + j] * ig
                    pv[j] = -S[j] * a3
                else:
                    pv[j] = 0.0
            beta = 0.5 if hasS else 0.0
        if tall:
            _solve_tall(U, UT, s, Vt, V, kap, g, dphi, pv, beta, l, phi, Y)
        else:
            _solve_dense(Q, QT, lam, g, pv, beta, l, Y)

        # r, q from the eliminated blocks, then residuals R = A y - b
        if not feas:
            for j in range(n):
                d1 = e[j] - mu1[j] * ig
                h1 = qt[j] - mu2[j] * ig
                h2 = qt[n + j] - mu2[n + j] * ig
                h3 = qt[2 * n + j] - mu2[2 * n + j] * ig
                h4 = qt[3 * n + j] - mu2[3 * n + j] * ig
                d2 = -rho - mu1[off + j] * ig
                d3 = -rho - mu1[off + n + j] * ig
                d4 = -mu1[off + 2 * n + j] * ig
                d5 = -mu1[off + 3 * n + j] * ig
                w = 0.5 * ((d2 + h1) - (d3 + h2))
                rj = 0.5 * (Y[j] - d1 + w)
                lt = x[j]
                x[n + j] = l[j]
                x[2 * n + j] = rj
                q[j] = 0.5 * (rj - d2 + h1)
                q[n + j] = 0.5 * (-rj - d3 + h2)
                q[2 * n + j] = 0.5 * (lt - l[j] - d4 + h3)
                q[3 * n + j] = 0.5 * (lt + l[j] - d5 + h4)
                R[j] = Y[j] - rj - e[j]
                R[off + j] = rj - q[j] + rho
                R[off + n + j] = -rj - q[n + j] + rho
                R[off + 2 * n + j] = lt - l[j] - q[2 * n + j]
                R[off + 3 * n + j] = lt + l[j] - q[3 * n + j]
                if hasS:
                    h5 = qt[4 * n + j] - mu2[4 * n + j] * ig
                    d6 = -mu1[off + 4 * n + j] * ig
                    q[4 * n + j] = 0.5 * (-S[j] * l[j] - d6 + h5)
                    R[off + 4 * n + j] = -S[j] * l[j] - q[4 * n + j]
            if tall:
                for k in range(K):
                    x[3 * n + k] = phi[k]
        else:
            sa = 0.0
            for j in range(n):
                a1 = -mu1[off + j] * ig + qt[j] - mu2[j] * ig
                a2 = -mu1[off + n + j] * ig + qt[n + j] - mu2[n + j] * ig
                sa += a1 + a2
            d5 = -mu1[nrow - 1] * ig
            h4 = qt[nsl - 1] - mu2[nsl - 1] * ig
            rh = (0.5 * sa + 0.5 * (d5 + h4) - ig) / (n + 0.5)
            for j in range(n):
                d1 = e[j] - mu1[j] * ig
                h1 = qt[j] - mu2[j] * ig
                h2 = qt[n + j] - mu2[n + j] * ig
                d2 = -mu1[off + j] * ig
                d3 = -mu1[off + n + j] * ig
                w = 0.5 * ((d2 + h1) - (d3 + h2))
                rj = 0.5 * (Y[j] - d1 + w)
                x[j] = l[j]
                x[n + j] = rj
                q[j] = 0.5 * (rj + rh - d2 + h1)
                q[n + j] = 0.5 * (-rj + rh - d3 + h2)
                R[j] = Y[j] - rj - e[j]
                R[off + j] = rj + rh - q[j]
                R[off + n + j] = -rj + rh - q[n + j]
                if hasS:
                    h3 = qt[2 * n + j] - mu2[2 * n + j] * ig
                    d4 = -mu1[off + 2 * n + j] * ig
                    q[2 * n + j] = 0.5 * (-S[j] * l[j] - d4 + h3)
                    R[off + 2 * n + j] = -S[j] * l[j] - q[2 * n + j]
            q[nsl - 1] = 0.5 * (rh - d5 + h4)
            R[nrow - 1] = rh - q[nsl - 1]
            x[2 * n] = rh
            if tall:
                for k in range(K):
                    x[2 * n + 1 + k] = phi[k]
        if tall:
            XtL = XcT @ l
            for k in range(K):
                R[n + k] = XtL[k] - phi[k]

        # auxiliary and multiplier steps
        pres = 0.0
        dres = 0.0
        for k in range(nrow):
            mu1[k] += gamma * R[k]
            v = abs(R[k])
            if v > pres:
                pres = v
        for k in range(nsl):
            qh = alpha * q[k] + (1.0 - alpha) * qt[k]
            t = qh + mu2[k] * ig
            nt = t if t > 0.0 else 0.0
            v = abs(nt - qt[k]) * gamma
            if v > dres:
                dres = v
            qt[k] = nt
            mu2[k] += gamma * (qh - nt)
            v = abs(q[k] - nt)
            if v > pres:
                pres = v
        if feas:
            obj = x[2 * n]
        else:
            obj = 0.0
            for j in range(n):
                obj += x[j]
        if pres < best_res:
            best_res = pres
            best_x[:] = x
            best_qt[:] = qt
        if pres <= tol and abs(obj - obj_prev) <= tol * (1.0 + abs(obj)) and dres <= tol:
            return ST_CONVERGED, it, pres, obj, np.int64(0)
        obj_prev = obj

        if stable_need > 0:
            sig = _signature(qt, nsl)
            if sig == sig_prev:
                sig_count += 1
            else:
                sig_prev = sig
                sig_count = 0
            if sig_count == stable_need:
                seen = False
                for k in range(tried.size):
                    if tried[k] == sig:
                        seen = True
                        break
                if not seen:
                    return ST_PATTERN, it, pres, obj, sig

        if pres < win_best:
            win_best = pres
        if it % window == 0:
            drift = 0.0
            for k in range(nrow):
                v = abs(mu1[k] - mu_snap[k])
                if v > drift:
                    drift = v
                mu_snap[k] = mu1[k]
            drift /= gamma * window
            if (win_best > 10.0 * tol and prev_win_best < np.inf
                    and win_best > 0.99 * prev_win_best and drift > 0.5 * win_best):
                return ST_INFEASIBLE, it, best_res, obj, np.int64(0)
            if win_best < prev_win_best:
                prev_win_best = win_best
            win_best = np.inf
    return ST_MAX_ITER, max_iter, pres, obj, np.int64(0)
