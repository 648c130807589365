"""Column-LP service shared by the learner and the baselines.

Holds the covariance factor, the solver settings, and per-``(i, S)`` warm
states so repeated solves of one family (increasing ``rho``, later sweeps)
start from the last iterate and its certified active set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np

from ..errors import ParameterError
from .admm import SolveReport, admm_solve
from .factor import CovarianceFactor
from .problems import (build_column_lp_dense, build_column_lp_tall, build_feasibility_lp,
                       warm_feasibility_floor)


@dataclass(frozen=True)
class SolverConfig:
    """ADMM settings for the column service.

    ``gamma`` is the penalty for column LPs. The floor LP converges best
    with a penalty near ``3 / ||l||_1`` of its solution, which is
    estimated as ``feas_gamma * C_ii / sqrt(N)`` unless ``feas_gamma_fixed``
    is set.

    A solve that ends without convergence is restarted from scratch with
    the penalty multiplied by each entry of ``retry_gamma`` in turn until
    one converges (each restart gets ``retry_max_iter`` iterations); the
    first run's result is kept if none does.
    """

    gamma: float = 100.0
    feas_gamma: float = 7.5
    feas_gamma_fixed: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 5000
    relaxation: float = 1.6
    polish: bool = True
    plateau_window: int = 500
    pattern_stable: int = 20
    engine: Literal["auto", "numba", "numpy"] = "auto"
    method: Literal["auto", "structured", "direct", "cg"] = "auto"
    retry_gamma: Tuple[float, ...] = (0.1, 10.0, 0.01, 100.0, 0.001)
    retry_max_iter: int = 2000

    def __post_init__(self):
        if not (self.gamma > 0 and self.feas_gamma > 0):
            raise ParameterError("gamma must be positive")
        if self.feas_gamma_fixed is not None and not self.feas_gamma_fixed > 0:
            raise ParameterError("gamma must be positive")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.max_iter < 1 or self.retry_max_iter < 1:
            raise ParameterError("iteration limits must be at least 1")
        if any(not m > 0 for m in self.retry_gamma):
            raise ParameterError("retry factors must be positive")


@dataclass
class ColumnStats:
    n_lp: int = 0
    n_polished: int = 0
    n_unconverged: int = 0
    n_retries: int = 0
    iterations: int = 0
    time: float = 0.0

    def add(self, rep: SolveReport):
        self.n_lp += 1
        self.n_polished += int(rep.polished)
        self.n_unconverged += int(not rep.converged)
        self.iterations += rep.iterations
        self.time += rep.wall_time

    def as_dict(self) -> dict:
        return dict(n_lp=self.n_lp, n_polished=self.n_polished,
                    n_unconverged=self.n_unconverged, n_retries=self.n_retries,
                    iterations=self.iterations,
                    time=self.time)


def _skey(S):
    return None if S is None else np.asarray(S, dtype=np.int8).tobytes()


class ColumnSolver:
    """Solves column and feasibility LPs for one covariance."""

    def __init__(self, factor: CovarianceFactor, tall: bool = False,
                 cfg: Optional[SolverConfig] = None):
        if tall and factor.kind != "tall":
            raise ParameterError("tall mode needs a factor built from observations")
        self.factor = factor
        self.tall = tall
        self.cfg = cfg or SolverConfig()
        self.stats = ColumnStats()
        self._states: dict = {}
        self._floors: dict = {}
        self._problems: dict = {}

    def feas_gamma(self, i: int) -> float:
        c = self.cfg
        if c.feas_gamma_fixed is not None:
            return c.feas_gamma_fixed
        cii = float(self.factor.diagonal()[i])
        return c.feas_gamma * max(cii, 1e-12) / np.sqrt(self.factor.n)

    def _admm(self, p, gamma, warm, max_iter=None):
        c = self.cfg
        return admm_solve(p, gamma=gamma, tol=c.tol, max_iter=max_iter or c.max_iter, warm=warm,
                          method=c.method, polish=c.polish, relaxation=c.relaxation,
                          plateau_window=c.plateau_window, engine=c.engine,
                          pattern_stable=c.pattern_stable)

    def _run(self, p, key, gamma=None):
        gamma = self.cfg.gamma if gamma is None else gamma
        res = self._admm(p, gamma, self._states.get(key))
        for m in () if res.report.converged else self.cfg.retry_gamma:
            self.stats.n_retries += 1
            alt = self._admm(p, gamma * m, None, self.cfg.retry_max_iter)
            self.stats.time += alt.report.wall_time
            if alt.report.converged:
                res = alt
                break
        self._states[key] = res.state
        self.stats.add(res.report)
        return res

    def _clean(self, p, res, l, S):
        l = l.copy()
        if not res.report.polished:
            qt = res.state.qt
            n = self.factor.n
            if p.structure == "feasibility_initial":
                if S is not None:
                    l[(qt[2 * n:3 * n] == 0) & (S != 0)] = 0.0
            else:
                l[(qt[2 * n:3 * n] == 0) & (qt[3 * n:4 * n] == 0)] = 0.0
                if S is not None:
                    l[(qt[4 * n:5 * n] == 0) & (S != 0)] = 0.0
        if S is not None:
            l[S * l > 0] = 0.0
        return l

    def feasibility_floor(self, i: int, S=None, warm_l=None):
        """Smallest admissible ``rho`` for column ``i``; returns ``(rho, report)``.

        With ``warm_l`` the floor is the closed-form residual of that column
        and no LP is solved (``report`` is then ``None``).
        """
        if warm_l is not None:
            return warm_feasibility_floor(self.factor, i, S, warm_l), None
        key = ("feas", i, _skey(S))
        if key in self._floors:
            return self._floors[key]
        p = build_feasibility_lp(self.factor, i, S, tall=self.tall)
        res = self._run(p, key, self.feas_gamma(i))
        rho = max(float(res.x[2 * self.factor.n]), 0.0)
        if not res.report.converged:
            # an inexact floor must still leave the column LP feasible
            rho = max(rho, warm_feasibility_floor(
                self.factor, i, None, self._clean(p, res, res.x[: self.factor.n], S)))
        out = (rho, res.report)
        if res.report.converged:
            self._floors[key] = out
        return out

    def solve(self, i: int, S, rho: float):
        """Column LP at ``rho``; returns ``(l, report)`` with ``l`` sign-clean."""
        key = ("col", i, _skey(S))
        pkey = (i, _skey(S))
        base = self._problems.get(pkey)
        if base is None:
            build = build_column_lp_tall if self.tall else build_column_lp_dense
            base = build(self.factor, i, rho, S)
            self._problems[pkey] = base
        p = base.with_rho(rho) if base.info.rho != rho else base
        res = self._run(p, key)
        n = self.factor.n
        l = self._clean(p, res, res.x[n:2 * n], S)
        return l, res.report

    def forget(self):
        self._states.clear()
        self._problems.clear()
