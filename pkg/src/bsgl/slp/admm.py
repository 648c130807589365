"""ADMM for standard-form LPs with a non-negativity split on the slacks.

The augmented Lagrangian couples ``A [x; q] = b`` (multiplier ``mu1``) and
``q = qt`` (multiplier ``mu2``) with ``qt >= 0``. One iteration is

1. main step: minimize over ``y = [x; q]``
   ``c^T x / gamma + 1/2 ||A y - d||^2 + 1/2 ||q - h||^2`` with
   ``d = b - mu1 / gamma`` and ``h = qt - mu2 / gamma``, i.e. solve
   ``Psi y = A^T d + [-c / gamma; h]`` with ``Psi = A^T A + blockdiag(0, I)``;
2. auxiliary step: ``qt = max(q + mu2 / gamma, 0)``;
3. multiplier step: ``mu += gamma * (residuals)``.

The main step can be solved by preconditioned CG, by a cached dense
Cholesky factor of ``Psi``, or (for the column and feasibility LPs) in
closed form by eliminating the auxiliary blocks and working in the
spectral basis of the covariance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional

import numpy as np
import scipy.linalg

from ..errors import ParameterError, SolverError
from . import polish as _polish
from .problems import LpProblem

Method = Literal["auto", "structured", "direct", "cg"]

CG_TOL = 1e-10
PSI_JITTER = 1e-12


def threshold(q, mu2, gamma):
    """Auxiliary update ``max(q + mu2 / gamma, 0)`` (projection onto ``q >= 0``)."""
    return np.maximum(q + mu2 / gamma, 0.0)


@dataclass
class AdmmState:
    x: np.ndarray
    q: np.ndarray
    qt: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    gamma: float = 1.0
    iter: int = 0
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def zeros(cls, p: LpProblem, gamma: float = 1.0) -> "AdmmState":
        return cls(np.zeros(p.n_main), np.zeros(p.n_slack), np.zeros(p.n_slack),
                   np.zeros(p.n_rows), np.zeros(p.n_slack), float(gamma))

    def copy(self) -> "AdmmState":
        return AdmmState(self.x.copy(), self.q.copy(), self.qt.copy(), self.mu1.copy(),
                         self.mu2.copy(), self.gamma, self.iter, self.cache)

    def compatible(self, p: LpProblem) -> bool:
        return (self.x.shape == (p.n_main,) and self.q.shape == (p.n_slack,)
                and self.mu1.shape == (p.n_rows,))


@dataclass
class SolveReport:
    objective: float
    primal_residual: float
    iterations: int
    converged: bool
    wall_time: float
    status: str = "max_iter"
    polished: bool = False
    infeasible: bool = False
    gamma: float = 1.0
    dual_bound: Optional[float] = None


class AdmmResult(NamedTuple):
    x: np.ndarray
    q: np.ndarray
    report: SolveReport
    state: AdmmState


# ---------------------------------------------------------------------------
# main step


def _psi_diag(p: LpProblem) -> np.ndarray:
    A = p.A
    d = np.asarray(A.multiply(A).sum(axis=0)).ravel()
    d[p.n_main:] += 1.0
    return d


def _psi_matvec(p: LpProblem, v: np.ndarray, jitter: float) -> np.ndarray:
    out = p.A.T @ (p.A @ v)
    out[p.n_main:] += v[p.n_main:]
    if jitter:
        out += jitter * v
    return out


def _main_rhs(p: LpProblem, d: np.ndarray, h: np.ndarray, gamma: float) -> np.ndarray:
    rhs = p.A.T @ d
    rhs[: p.n_main] -= p.c / gamma
    rhs[p.n_main:] += h
    return rhs


def pcg(matvec, rhs, x0, diag, tol=CG_TOL, max_iter=None):
    """Jacobi-preconditioned conjugate gradients; returns ``(x, rel_residual, iters)``."""
    n = rhs.size
    max_iter = 10 * n if max_iter is None else max_iter
    nb = np.linalg.norm(rhs)
    if nb == 0:
        return np.zeros(n), 0.0, 0
    x = x0.copy()
    r = rhs - matvec(x)
    inv = 1.0 / diag
    z = inv * r
    pdir = z.copy()
    rz = r @ z
    it = 0
    rel = np.linalg.norm(r) / nb
    while rel > tol and it < max_iter:
        Ap = matvec(pdir)
        den = pdir @ Ap
        if den <= 0:
            break
        alpha = rz / den
        x += alpha * pdir
        r -= alpha * Ap
        z = inv * r
        rz_new = r @ z
        pdir = z + (rz_new / rz) * pdir
        rz = rz_new
        it += 1
        rel = np.linalg.norm(r) / nb
    return x, rel, it


def _solve_cg(p, state, rhs):
    y0 = np.concatenate([state.x, state.q])
    diag = state.cache.get("psi_diag")
    if diag is None or diag.size != y0.size:
        diag = _psi_diag(p) + PSI_JITTER
        state.cache["psi_diag"] = diag
    jitter = PSI_JITTER
    for _ in range(2):
        y, rel, _ = pcg(lambda v: _psi_matvec(p, v, jitter), rhs, y0, diag)
        if rel <= CG_TOL:
            return y
        jitter *= 1e4
    raise SolverError(f"CG stagnated at relative residual {rel:.3e}")


def _direct_factor(p: LpProblem):
    Psi = (p.A.T @ p.A).toarray()
    Psi[np.diag_indices_from(Psi)] += np.r_[np.zeros(p.n_main), np.ones(p.n_slack)] + PSI_JITTER
    return scipy.linalg.cho_factor(Psi, check_finite=False)


def _solve_direct(p, state, rhs):
    key = ("cho", id(p.A))
    fac = state.cache.get(key)
    if fac is None:
        fac = _direct_factor(p)
        state.cache.clear()
        state.cache[key] = fac
    return scipy.linalg.cho_solve(fac, rhs, check_finite=False)


def _step_column(p: LpProblem, d, h, gamma):
    info = p.info
    n = info.n
    f = info.factor
    S = info.S
    d1 = d[:n]
    off = n
    if info.tall:
        K = info.n_obs
        dphi = d[n:n + K]
        off += K
    d2, d3, d4, d5 = (d[off + k * n: off + (k + 1) * n] for k in range(4))
    h1, h2, h3, h4 = (h[k * n:(k + 1) * n] for k in range(4))
    a1, a2, a3, a4 = d2 + h1, d3 + h2, d4 + h3, d5 + h4
    w = 0.5 * (a1 - a2)
    m = 0.5 * (a4 - a3)
    lt = 0.5 * (a3 + a4) - 1.0 / gamma
    if S is not None:
        d6 = d[off + 4 * n: off + 5 * n]
        h5 = h[4 * n:5 * n]
        a5 = d6 + h5
        beta, pv = 1.5, (2.0 * m - S * a5) / 3.0
    else:
        beta, pv = 1.0, m
    g = d1 + w
    if info.tall:
        l, phi, Y = f.solve_tall(g, dphi, pv, beta)
    else:
        l, Y = f.solve_dense(g, pv, beta)
    r = 0.5 * (Y - d1 + w)
    qs = [0.5 * (r - d2 + h1), 0.5 * (-r - d3 + h2),
          0.5 * (lt - l - d4 + h3), 0.5 * (lt + l - d5 + h4)]
    if S is not None:
        qs.append(0.5 * (-S * l - d6 + h5))
    xs = [lt, l, r] + ([phi] if info.tall else [])
    return np.concatenate(xs), np.concatenate(qs)


def _step_feasibility(p: LpProblem, d, h, gamma):
    info = p.info
    n = info.n
    f = info.factor
    S = info.S
    d1 = d[:n]
    off = n
    if info.tall:
        K = info.n_obs
        dphi = d[n:n + K]
        off += K
    d2 = d[off:off + n]
    d3 = d[off + n:off + 2 * n]
    h1 = h[:n]
    h2 = h[n:2 * n]
    a1, a2 = d2 + h1, d3 + h2
    if S is not None:
        d4 = d[off + 2 * n:off + 3 * n]
        h3 = h[2 * n:3 * n]
        a3 = d4 + h3
        beta, pv = 0.5, -S * a3
    else:
        beta, pv = 0.0, np.zeros(n)
    d5 = d[-1]
    h4 = h[-1]
    a4 = d5 + h4
    w = 0.5 * (a1 - a2)
    g = d1 + w
    if info.tall:
        l, phi, Y = f.solve_tall(g, dphi, pv, beta)
    else:
        l, Y = f.solve_dense(g, pv, beta)
    r = 0.5 * (Y - d1 + w)
    rho = (0.5 * (a1.sum() + a2.sum()) + 0.5 * a4 - 1.0 / gamma) / (n + 0.5)
    qs = [0.5 * (r + rho - d2 + h1), 0.5 * (-r + rho - d3 + h2)]
    if S is not None:
        qs.append(0.5 * (-S * l - d4 + h3))
    qs.append(np.array([0.5 * (rho - d5 + h4)]))
    xs = [l, r, np.array([rho])] + ([phi] if info.tall else [])
    return np.concatenate(xs), np.concatenate(qs)


_STRUCTURED = {
    "dense_column": _step_column,
    "tall_column": _step_column,
    "feasibility_initial": _step_feasibility,
}


def _resolve_method(p: LpProblem, method: Method) -> str:
    if method == "auto":
        if p.structure in _STRUCTURED and p.info is not None:
            return "structured"
        return "direct" if p.A.shape[1] <= 3000 else "cg"
    if method == "structured" and p.structure not in _STRUCTURED:
        raise ParameterError(f"no structured solver for {p.structure!r}")
    if method not in ("structured", "direct", "cg"):
        raise ParameterError(f"unknown main-step method {method!r}")
    return method


def _main_step(p, state, d, h, method):
    if method == "structured":
        return _STRUCTURED[p.structure](p, d, h, state.gamma)
    rhs = _main_rhs(p, d, h, state.gamma)
    y = _solve_cg(p, state, rhs) if method == "cg" else _solve_direct(p, state, rhs)
    return y[: p.n_main], y[p.n_main:]


def solve_main_system(p: LpProblem, state: AdmmState, method: Method = "cg"):
    """One main step from ``state``: returns the minimizing ``(x, q)``."""
    if not state.compatible(p):
        raise ParameterError("state dimensions do not match the problem")
    d = p.b - state.mu1 / state.gamma
    h = state.qt - state.mu2 / state.gamma
    return _main_step(p, state, d, h, _resolve_method(p, method))


def main_system_matrix(p: LpProblem) -> np.ndarray:
    """Dense ``Psi`` (tests and diagnostics only)."""
    Psi = (p.A.T @ p.A).toarray()
    Psi[np.diag_indices_from(Psi)] += np.r_[np.zeros(p.n_main), np.ones(p.n_slack)]
    return Psi


def main_system_rhs(p: LpProblem, state: AdmmState) -> np.ndarray:
    d = p.b - state.mu1 / state.gamma
    h = state.qt - state.mu2 / state.gamma
    return _main_rhs(p, d, h, state.gamma)


# ---------------------------------------------------------------------------
# driver


def _finish(p, x, q, t0, it, status, converged, polished, gamma, state, infeasible=False,
            dual_bound=None):
    res = max(np.abs(p.A @ np.concatenate([x, q]) - p.b).max(initial=0.0),
              max(-q.min(initial=0.0), 0.0))
    rep = SolveReport(float(p.c @ x), float(res), it, converged, time.perf_counter() - t0,
                      status, polished, infeasible, gamma, dual_bound)
    return AdmmResult(x, q, rep, state)


def _kernel_args(p: LpProblem):
    f = p.info.factor
    cached = getattr(f, "_kernel_arrays", None)
    if cached is None:
        z2 = np.zeros((0, 0))
        z1 = np.zeros(0)
        if f.kind == "dense":
            Q = np.ascontiguousarray(f.Q)
            cached = (Q, np.ascontiguousarray(f.Q.T), f.lam, z2, z2, z1, z2, z2, z2, z2, 1.0)
        else:
            cached = (z2, z2, z1, np.ascontiguousarray(f.U), np.ascontiguousarray(f.U.T), f.s,
                      np.ascontiguousarray(f.Vt), np.ascontiguousarray(f.Vt.T),
                      np.ascontiguousarray(f.Xc), np.ascontiguousarray(f.Xc.T), f.kappa)
        f._kernel_arrays = cached
    return cached


def _resolve_engine(p, meth, engine):
    if engine == "numpy":
        return "numpy"
    ok = meth == "structured" and p.info is not None and (
        p.info.tall == (p.info.factor.kind == "tall"))
    if engine == "numba" and not ok:
        raise ParameterError("the compiled engine needs a structured column or feasibility LP")
    return "numba" if ok else "numpy"


def admm_solve(
    p: LpProblem,
    gamma: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
    warm: Optional[AdmmState] = None,
    method: Method = "auto",
    polish: bool = True,
    relaxation: float = 1.0,
    adapt_gamma: bool = False,
    plateau_window: int = 500,
    engine: Literal["auto", "numba", "numpy"] = "auto",
    pattern_stable: int = 20,
) -> AdmmResult:
    """Run the splitting method on ``p``.

    Stops when the primal residual (both constraint groups, infinity norm)
    is at most ``tol``, the objective moved by at most ``tol * (1 + |obj|)``
    and the auxiliary iterate moved by at most ``tol / gamma`` in the last
    iteration. With ``polish=True`` the active set read off the auxiliary
    variables is handed to an exact KKT solve whenever it settles; a
    certified optimum ends the run early.

    A residual that stays above ``10 * tol``, improves by less than 1% over
    ``plateau_window`` iterations and keeps pushing the multipliers in a
    fixed direction flags the problem as infeasible.

    ``pattern_stable`` is how many consecutive iterations the zero pattern
    must hold before a polish is attempted.
    """
    if not (np.isfinite(gamma) and gamma > 0):
        raise ParameterError("gamma must be positive")
    if not 0 < relaxation < 2:
        raise ParameterError("relaxation must lie in (0, 2)")
    t0 = time.perf_counter()
    meth = _resolve_method(p, method)
    eng = _resolve_engine(p, meth, engine)
    if warm is not None and warm.compatible(p):
        st = warm.copy()
        st.iter = 0
        st.cache = dict(warm.cache)
        if not adapt_gamma:
            st.gamma = float(gamma)
    else:
        st = AdmmState.zeros(p, gamma)
        if warm is not None and "active" in warm.cache:
            st.cache["active"] = warm.cache["active"]
    can_polish = polish and _polish.supports(p)

    if can_polish and "active" in st.cache:
        sol = _polish.try_polish(p, st, use_hint=True)
        if sol is not None:
            x, q, bound = sol
            return _finish(p, x, q, t0, 0, "polished", True, True, st.gamma, st,
                           dual_bound=bound)
    if eng == "numba":
        return _run_compiled(p, st, tol, max_iter, relaxation, plateau_window,
                             pattern_stable if can_polish else 0, t0)
    return _run_reference(p, st, meth, tol, max_iter, relaxation, adapt_gamma,
                          plateau_window, pattern_stable if can_polish else 0, t0)


def _run_compiled(p, st, tol, max_iter, relaxation, window, stable, t0):
    from . import kernels
    info = p.info
    S = info.S if info.S is not None else np.zeros(info.n)
    arrs = _kernel_args(p)
    best_x = st.x.copy()
    best_qt = st.qt.copy()
    best = (np.inf, st.x.copy(), st.qt.copy())
    tried: list = []
    done = 0
    feas = p.structure == "feasibility_initial"
    while done < max_iter:
        status, it, pres, obj, sig = kernels.run(
            feas, info.tall, info.S is not None, *arrs, S, info.i, info.rho,
            st.gamma, relaxation, st.x, st.q, st.qt, st.mu1, st.mu2, max_iter - done, tol,
            window, np.array(tried, dtype=np.int64), stable, best_x, best_qt)
        done += it
        st.iter = done
        if status != kernels.ST_CONVERGED:
            r_now = _primal_residual(p, best_x, best_qt)
            if r_now < best[0]:
                best = (r_now, best_x.copy(), best_qt.copy())
        if status == kernels.ST_CONVERGED:
            return _finish(p, st.x.copy(), st.qt.copy(), t0, done, "converged", True, False,
                           st.gamma, st)
        if status == kernels.ST_PATTERN:
            tried.append(int(sig))
            sol = _polish.try_polish(p, st)
            if sol is not None:
                xs, qs, bound = sol
                return _finish(p, xs, qs, t0, done, "polished", True, True, st.gamma, st,
                               dual_bound=bound)
            continue
        if status == kernels.ST_INFEASIBLE:
            return _finish(p, best[1], best[2], t0, done, "infeasible", False, False,
                           st.gamma, st, infeasible=True)
        break
    return _finish(p, best[1], best[2], t0, done, "max_iter", False, False, st.gamma, st)


def _primal_residual(p, x, q):
    return float(np.abs(p.A @ np.concatenate([x, q]) - p.b).max(initial=0.0))


def _run_reference(p, st, meth, tol, max_iter, relaxation, adapt_gamma, window,
                   stable, t0):
    b = p.b
    obj_prev = np.inf
    best = (np.inf, st.x.copy(), st.qt.copy())
    win_best = prev_win_best = np.inf
    mu_snap = st.mu1.copy()
    sig_prev, sig_count, tried = None, 0, set()
    for it in range(1, max_iter + 1):
        g = st.gamma
        d = b - st.mu1 / g
        h = st.qt - st.mu2 / g
        x, q = _main_step(p, st, d, h, meth)
        r1 = p.A @ np.concatenate([x, q]) - b
        qh = relaxation * q + (1.0 - relaxation) * st.qt
        qt_old = st.qt
        st.qt = threshold(qh, st.mu2, g)
        st.mu1 += g * r1
        st.mu2 += g * (qh - st.qt)
        st.x, st.q, st.iter = x, q, it
        pres = max(np.abs(r1).max(initial=0.0), np.abs(q - st.qt).max(initial=0.0))
        dres = g * np.abs(st.qt - qt_old).max(initial=0.0)
        obj = float(p.c @ x)
        if pres < best[0]:
            best = (pres, x.copy(), st.qt.copy())
        if pres <= tol and abs(obj - obj_prev) <= tol * (1 + abs(obj)) and dres <= tol:
            return _finish(p, x, st.qt.copy(), t0, it, "converged", True, False, g, st)
        obj_prev = obj

        if stable:
            sig = _polish.pattern_signature(p, st)
            if sig == sig_prev:
                sig_count += 1
            else:
                sig_prev, sig_count = sig, 0
            if sig_count == stable and sig not in tried:
                tried.add(sig)
                sol = _polish.try_polish(p, st)
                if sol is not None:
                    xs, qs, bound = sol
                    return _finish(p, xs, qs, t0, it, "polished", True, True, g, st,
                                   dual_bound=bound)

        win_best = min(win_best, pres)
        if it % window == 0:
            drift = np.abs(st.mu1 - mu_snap).max(initial=0.0) / (g * window)
            mu_snap = st.mu1.copy()
            if (win_best > 10 * tol and prev_win_best < np.inf
                    and win_best > 0.99 * prev_win_best and drift > 0.5 * win_best):
                return _finish(p, best[1], best[2], t0, it, "infeasible", False, False, g, st,
                               infeasible=True)
            prev_win_best = min(prev_win_best, win_best)
            win_best = np.inf

        if adapt_gamma and it % 50 == 0:
            if pres > 10 * dres:
                st.gamma *= 2.0
            elif dres > 10 * pres:
                st.gamma *= 0.5

    return _finish(p, best[1], best[2], t0, max_iter, "max_iter", False, False, st.gamma, st)
