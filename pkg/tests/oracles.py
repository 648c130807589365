"""Brute-force reference implementations used only by the tests.

Nothing here imports the package's solver code; these are the slow,
obviously-correct counterparts the fast paths are checked against.
"""

from itertools import combinations

import numpy as np


def covariance_two_loop(X):
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    mean = [sum(X[i]) / k for i in range(n)]
    C = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for t in range(k):
                s += (X[i, t] - mean[i]) * (X[j, t] - mean[j])
            C[i, j] = s / (k - 1)
    return C


def voc_loop(X):
    """Per-entry variance of the centred products around the covariance."""
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    Xc = X - X.mean(axis=1, keepdims=True)
    C = covariance_two_loop(X)
    V = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            V[i, j] = sum((Xc[i, t] * Xc[j, t] - C[i, j]) ** 2 for t in range(k)) / (k - 1)
    return V


def arrangement_vertices(H, g, G, h, tol=1e-9):
    """Points where ``n`` rows of ``H z = g`` hold and ``G z <= h`` is satisfied.

    ``n`` is the dimension of ``z``. Every subset of ``n`` hyperplanes is
    tried; singular subsets are skipped.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = H.shape[1]
    subsets = np.array(list(combinations(range(H.shape[0]), n)))
    M = H[subsets]
    rhs = g[subsets]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    if not ok.any():
        return np.zeros((0, n))
    Z = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    scale = 1.0 + np.abs(h)
    feas = np.all(Z @ G.T <= h + tol * scale, axis=1)
    return Z[feas]


def column_lp_oracle(C, i, rho, S=None):
    """``min ||l||_1  s.t.  |C l - e_i| <= rho,  S l <= 0`` by vertex enumeration.

    The l1 objective is linear on each orthant, so its minimum sits on a
    vertex of the arrangement formed by the box faces and the coordinate
    hyperplanes ``l_j = 0``. Returns ``(objective, l)``; objective is ``inf``
    when infeasible.
    """
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    e = np.zeros(n)
    e[i] = 1.0
    I = np.eye(n)
    H = np.vstack([C, C, I])
    g = np.r_[e + rho, e - rho, np.zeros(n)]
    G = [C, -C]
    h = [e + rho, rho - e]
    if S is not None:
        G.append(np.diag(S))
        h.append(np.zeros(n))
    V = arrangement_vertices(H, g, np.vstack(G), np.concatenate(h))
    if V.shape[0] == 0:
        return np.inf, None
    obj = np.abs(V).sum(axis=1)
    k = int(np.argmin(obj))
    return float(obj[k]), V[k]


def floor_lp_oracle(C, i, S=None):
    """``min rho  s.t.  |C l - e_i| <= rho,  S l <= 0,  rho >= 0`` over ``z = [l; rho]``."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    e = np.zeros(n)
    e[i] = 1.0
    one = np.ones((n, 1))
    rows = [np.hstack([C, -one]), np.hstack([C, one])]
    rhs = [e, e]
    G = [np.hstack([C, -one]), np.hstack([-C, -one])]
    h = [e, -e]
    if S is not None:
        D = np.hstack([np.diag(S), np.zeros((n, 1))])
        keep = np.asarray(S) != 0
        rows.append(np.hstack([np.eye(n), np.zeros((n, 1))])[keep])
        rhs.append(np.zeros(int(keep.sum())))
        G.append(D)
        h.append(np.zeros(n))
    last = np.zeros((1, n + 1))
    last[0, n] = 1.0
    rows.append(last)
    rhs.append(np.zeros(1))
    G.append(-last)
    h.append(np.zeros(1))
    V = arrangement_vertices(np.vstack(rows), np.concatenate(rhs), np.vstack(G),
                             np.concatenate(h))
    if V.shape[0] == 0:
        return np.inf
    return float(V[:, n].min())


def sorted_eigs(M):
    return np.sort(np.linalg.eigvals(np.asarray(M, dtype=float)).real)
