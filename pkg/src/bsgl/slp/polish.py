"""Active-set polishing with a KKT certificate.

The auxiliary variables of the splitting method hit zero exactly on active
bounds, so after a few hundred iterations they usually reveal which entries
of ``l`` vanish and which residual rows sit on ``+rho`` or ``-rho``. Given
that guess, the vertex is one small linear solve away, and a dual vector on
the tight rows certifies optimality:

column LP   ``(C z)_F = -sign(l_F)``; off the support ``(C z)_j <= 1`` if
            ``l_j <= 0`` is imposed, ``>= -1`` if ``l_j >= 0`` is imposed,
            ``|(C z)_j| <= 1`` otherwise;
feasibility ``sum |z| = 1``, ``(C z)_F = 0``; off the support ``(C z)_j <= 0``,
            ``>= 0`` or ``= 0`` by the same case split;

with ``z_k >= 0`` on rows at ``+rho`` and ``z_k <= 0`` on rows at ``-rho``.
Anything that fails a check is simply rejected and the iteration goes on.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
from scipy.optimize import lsq_linear

from .problems import LpProblem, column_layout

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
GAP_TOL = 1e-8


class ActiveSet(NamedTuple):
    F: np.ndarray      # support indices
    sF: np.ndarray     # signs on the support
    Tp: np.ndarray     # rows at +rho
    Tm: np.ndarray     # rows at -rho


class Certified(NamedTuple):
    l: np.ndarray
    rho: float
    z: np.ndarray
    bound: float
    active: ActiveSet


def supports(p: LpProblem) -> bool:
    return p.info is not None and p.structure in (
        "dense_column", "tall_column", "feasibility_initial")


def _zero_masks(p, qt):
    lay = column_layout(p)
    masks = [qt[lay["q_lo"]] == 0, qt[lay["q_hi"]] == 0]
    if "q_neg" in lay:
        masks.append((qt[lay["q_neg"]] == 0) & (qt[lay["q_pos"]] == 0))
    if "q_sign" in lay:
        masks.append(qt[lay["q_sign"]] == 0)
    return lay, masks


def pattern_signature(p: LpProblem, st) -> bytes:
    _, masks = _zero_masks(p, st.qt)
    return np.packbits(np.concatenate(masks)).tobytes()


def guess_from_aux(p: LpProblem, st) -> ActiveSet:
    """Active set read from exact zeros of the auxiliary iterate."""
    lay, masks = _zero_masks(p, st.qt)
    S = p.info.S
    l = st.x[lay["l"]]
    if "q_neg" in lay:
        zero = masks[2].copy()
        sgn = np.sign(st.qt[lay["q_pos"]] - st.qt[lay["q_neg"]])
    else:
        zero = np.abs(l) <= 1e-9 * max(1.0, np.abs(l).max(initial=0.0))
        sgn = np.sign(l)
    if S is not None:
        zero |= masks[-1] & (S != 0)
    sgn = np.where(sgn == 0, np.sign(l), sgn)
    F = np.flatnonzero(~zero & (sgn != 0))
    return ActiveSet(F, sgn[F], np.flatnonzero(masks[1]), np.flatnonzero(masks[0]))


def guess_from_threshold(p: LpProblem, st, rel: float = 1e-5) -> ActiveSet:
    lay = column_layout(p)
    l = st.x[lay["l"]]
    r = st.x[lay["r"]]
    rho = p.info.rho if p.structure != "feasibility_initial" else st.x[lay["rho"]]
    sc = max(np.abs(l).max(initial=0.0), 1e-12)
    F = np.flatnonzero(np.abs(l) > rel * sc)
    tol = rel * max(abs(rho), 1e-6)
    return ActiveSet(F, np.sign(l[F]), np.flatnonzero(r >= rho - tol),
                     np.flatnonzero(r <= -rho + tol))


def _rows(active: ActiveSet):
    T = np.concatenate([active.Tp, active.Tm]).astype(int)
    sT = np.concatenate([np.ones(active.Tp.size), -np.ones(active.Tm.size)])
    return T, sT


def _off_bounds(S, O, kind):
    """Bounds on ``(C z)_j`` for off-support ``j``."""
    s = np.zeros(O.size) if S is None else S[O]
    if kind == "column":
        lo = np.where(s > 0, -np.inf, -1.0)
        hi = np.where(s < 0, np.inf, 1.0)
    else:
        lo = np.where(s > 0, -np.inf, 0.0)
        hi = np.where(s < 0, np.inf, 0.0)
    return lo, hi


def _dual(fac, F, T, sT, O, eq_rhs, lo, hi, sum_one: bool):
    """Find ``z = sT * w, w >= 0`` meeting the stationarity conditions."""
    nT = T.size
    C_FT = fac.submatrix(F, T) if F.size else np.zeros((0, nT))
    C_OT = fac.submatrix(O, T) if O.size else np.zeros((0, nT))
    M_eq = C_FT * sT
    rhs = eq_rhs
    if sum_one:
        M_eq = np.vstack([M_eq, np.ones((1, nT))])
        rhs = np.r_[rhs, 1.0]
    M_off = C_OT * sT
    if M_eq.shape[0] == nT and nT > 0:
        try:
            w = scipy.linalg.solve(M_eq, rhs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            w = None
        if w is not None and np.all(np.isfinite(w)):
            sc = max(1.0, np.abs(w).max())
            v = M_off @ w
            if (w.min(initial=0.0) >= -DUAL_TOL * sc and np.all(v >= lo - DUAL_TOL * sc)
                    and np.all(v <= hi + DUAL_TOL * sc)):
                return sT * np.maximum(w, 0.0)
            if M_off.shape[0] == 0 or np.linalg.cond(M_eq) < 1e10:
                return None
    # non-square or degenerate: bounded least squares over (w, u)
    nO = O.size
    top = np.hstack([M_eq, np.zeros((M_eq.shape[0], nO))])
    bot = np.hstack([M_off, -np.eye(nO)])
    M = np.vstack([top, bot])
    b = np.r_[rhs, np.zeros(nO)]
    if M.shape[1] == 0:
        return sT * np.zeros(0) if np.all(np.abs(b) <= DUAL_TOL) else None
    res = lsq_linear(M, b, bounds=(np.r_[np.zeros(nT), lo], np.r_[np.full(nT, np.inf), hi]),
                     method="bvls", tol=1e-14, max_iter=50 * M.shape[1])
    if not np.all(np.isfinite(res.x)):
        return None
    if np.abs(M @ res.x - b).max(initial=0.0) > DUAL_TOL * max(1.0, np.abs(res.x).max()):
        return None
    return sT * res.x[:nT]


def certify_column(info, active: ActiveSet) -> Optional[Certified]:
    fac = info.factor
    n, i, rho, S = info.n, info.i, info.rho, info.S
    F = np.asarray(active.F, dtype=int)
    T, sT = _rows(active)
    e = np.zeros(n)
    e[i] = 1.0
    l = np.zeros(n)
    if F.size:
        if T.size < F.size:
            return None
        A_TF = fac.submatrix(T, F)
        rhs = e[T] + rho * sT
        lF, *_ = np.linalg.lstsq(A_TF, rhs, rcond=None)
        if np.abs(A_TF @ lF - rhs).max() > PRIMAL_TOL * (1 + np.abs(rhs).max()):
            return None
        if np.any(np.sign(lF) != active.sF) or np.any(lF == 0):
            return None
        if S is not None and np.any(S[F] * lF > 0):
            return None
        l[F] = lF
    res = fac.matvec(l) - e
    if np.abs(res).max() > rho + PRIMAL_TOL * (1 + rho):
        return None
    O = np.setdiff1d(np.arange(n), F)
    lo, hi = _off_bounds(S, O, "column")
    z = _dual(fac, F, T, sT, O, -np.sign(l[F]), lo, hi, sum_one=False)
    if z is None:
        return None
    zi = z[T == i].sum()
    bound = -zi - rho * np.abs(z).sum()
    obj = np.abs(l).sum()
    if abs(obj - bound) > GAP_TOL * (1 + obj):
        return None
    return Certified(l, rho, z, float(bound), active)


def certify_feasibility(info, active: ActiveSet) -> Optional[Certified]:
    fac = info.factor
    n, i, S = info.n, info.i, info.S
    F = np.asarray(active.F, dtype=int)
    T, sT = _rows(active)
    e = np.zeros(n)
    e[i] = 1.0
    if T.size < F.size + 1 and T.size < F.size:
        return None
    M = np.hstack([fac.submatrix(T, F) if F.size else np.zeros((T.size, 0)), -sT[:, None]])
    if M.shape[0] == 0:
        return None
    sol, *_ = np.linalg.lstsq(M, e[T], rcond=None)
    if np.abs(M @ sol - e[T]).max() > PRIMAL_TOL * 10:
        return None
    lF, rho = sol[:-1], float(sol[-1])
    if rho < -PRIMAL_TOL:
        return None
    rho = max(rho, 0.0)
    if F.size and np.any(np.sign(lF) != active.sF):
        return None
    if S is not None and np.any(S[F] * lF > 0):
        return None
    l = np.zeros(n)
    l[F] = lF
    res = fac.matvec(l) - e
    if np.abs(res).max() > rho + PRIMAL_TOL * (1 + rho):
        return None
    if rho <= PRIMAL_TOL:
        # rho >= 0 is itself a bound, so a feasible point at zero is optimal
        return Certified(l, 0.0, np.zeros(T.size), 0.0, active)
    O = np.setdiff1d(np.arange(n), F)
    lo, hi = _off_bounds(S, O, "feasibility")
    z = _dual(fac, F, T, sT, O, np.zeros(F.size), lo, hi, sum_one=True)
    if z is None:
        return None
    bound = -z[T == i].sum()
    if abs(rho - bound) > GAP_TOL * (1 + rho):
        return None
    return Certified(l, rho, z, float(bound), active)


def assemble(p: LpProblem, cert: Certified):
    """Main and slack vectors of the standard-form LP for a certified ``l``."""
    info = p.info
    fac = info.factor
    l = cert.l
    if info.tall:
        phi = fac.Xc.T @ l
        Cl = fac.kappa * (fac.Xc @ phi)
    else:
        Cl = fac.matvec(l)
    r = Cl.copy()
    r[info.i] -= 1.0
    if p.structure == "feasibility_initial":
        parts = [l, r, np.array([cert.rho])]
    else:
        parts = [np.abs(l), l, r]
    if info.tall:
        parts.append(phi)
    x = np.concatenate(parts)
    y = np.concatenate([x, np.zeros(p.n_slack)])
    q = (p.A @ y - p.b)[p.n_rows - p.n_slack:]
    q = np.maximum(q, 0.0)
    return x, q


def try_polish(p: LpProblem, st, use_hint: bool = False):
    """Return ``(x, q, bound)`` for a certified optimum, else ``None``.

    A successful active set is stored in ``st.cache`` so a later solve of
    the same family (e.g. at the next ``rho``) can try it first.
    """
    cert_fn = certify_feasibility if p.structure == "feasibility_initial" else certify_column
    guesses = []
    if use_hint:
        hint = st.cache.get("active")
        if hint is not None:
            guesses.append(hint)
    else:
        guesses.append(guess_from_aux(p, st))
        guesses.append(guess_from_threshold(p, st))
    seen = []
    for g in guesses:
        key = (g.F.tobytes(), g.sF.tobytes(), g.Tp.tobytes(), g.Tm.tobytes())
        if key in seen:
            continue
        seen.append(key)
        cert = cert_fn(p.info, g)
        if cert is not None:
            st.cache["active"] = cert.active
            x, q = assemble(p, cert)
            return x, q, cert.bound
    return None
