"""Balanced signed-graph Laplacian learning by column-wise sign-constrained LPs.

Each sweep visits the columns in order. For column ``i`` the LP is solved
under the sign pattern implied by the current polarities (and, when
polarity updates are enabled, under the flipped ``beta_i``), ``rho`` is
chosen by the information criterion, and the winning column is written
symmetrically into row and column ``i``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import IO, Callable, List, Literal, Optional, Union

import numpy as np

from .core import (ObservationMatrix, SampleCovariance, SignedLaplacian,
                   build_sample_covariance, build_voc_weighted_covariance, certificate_holds)
from .errors import InputError, ParameterError, SolverError
from .polarity import initialize_polarities
from .selection import RhoSearchConfig, select_rho
from .slp.column import ColumnSolver, SolverConfig
from .slp.factor import CovarianceFactor
from .slp.problems import sign_matrix

PolarityRule = Literal["l1", "l1+hqic", "hqic", "fixed"]


@dataclass(frozen=True)
class LearnConfig:
    """Settings of the outer loop.

    ``polarity_rule`` decides when a node switches camps: ``"l1"`` on a
    strictly smaller column l1 norm, ``"l1+hqic"`` only if the criterion
    improves as well, ``"hqic"`` on the criterion alone, and
    ``"fixed"`` never. Switches are considered from sweep
    ``polarity_from_sweep`` on (1-based).
    """

    mode: Literal["auto", "dense", "tall"] = "auto"
    tol_outer: float = 1e-4
    max_sweeps: int = 20
    search: RhoSearchConfig = field(default_factory=RhoSearchConfig)
    # restarts cost twice the run time inside the loop without moving the result
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(retry_gamma=()))
    polarity_rule: PolarityRule = "l1+hqic"
    polarity_from_sweep: int = 2
    use_incumbent: bool = True
    monotone_guard: bool = True
    diag_sign: Literal["nonneg", "free"] = "nonneg"
    eps_diag: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.tol_outer > 0:
            raise ParameterError("tol_outer must be positive")
        if self.max_sweeps < 1:
            raise ParameterError("max_sweeps must be at least 1")
        if self.mode not in ("auto", "dense", "tall"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.polarity_rule not in ("l1", "l1+hqic", "hqic", "fixed"):
            raise ParameterError(f"unknown polarity rule {self.polarity_rule!r}")

    def resolve_mode(self, n: int, k: Optional[int]) -> str:
        if self.mode != "auto":
            return self.mode
        return "tall" if (k is not None and k < n / 2) else "dense"


@dataclass
class LearnState:
    L: np.ndarray
    beta: np.ndarray
    sweep: int = 0
    l1_history: List[float] = field(default_factory=list)
    rho_history: List[np.ndarray] = field(default_factory=list)
    flips: List[int] = field(default_factory=list)
    guard_rejections: int = 0


@dataclass
class LearnResult:
    L: SignedLaplacian
    beta: np.ndarray
    report: dict


class _Context:
    def __init__(self, C, n_obs, solver: ColumnSolver, cfg: LearnConfig):
        self.C = C
        self.n_obs = n_obs
        self.solver = solver
        self.cfg = cfg


def _matrix_l1_delta(old_col, new_col, i):
    """Change of ``||L||_1`` when row and column ``i`` are overwritten."""
    d = np.abs(new_col) - np.abs(old_col)
    return 2.0 * d.sum() - d[i]


def learn_column(state: LearnState, i: int, ctx: _Context) -> dict:
    """Update row/column ``i`` of ``state.L`` (and possibly ``beta_i``) in place."""
    cfg = ctx.cfg
    sweep = state.sweep
    cur_b = int(state.beta[i])
    trials = [cur_b]
    if cfg.polarity_rule != "fixed" and sweep >= cfg.polarity_from_sweep:
        trials.append(-cur_b)
    results = {}
    for bi in trials:
        beta_t = state.beta.copy()
        beta_t[i] = bi
        S = sign_matrix(beta_t, i, cfg.diag_sign)
        incumbent = None
        if bi == cur_b and sweep >= 2:
            incumbent = state.L[:, i].copy()
            rho_floor, _ = ctx.solver.feasibility_floor(i, S, warm_l=incumbent)
        else:
            rho_floor, _ = ctx.solver.feasibility_floor(i, S)

        def solve(rho, S=S):
            return ctx.solver.solve(i, S, rho)[0]

        sel = select_rho(i, state.L, ctx.C, ctx.n_obs, rho_floor, solve, cfg.search,
                         incumbent if cfg.use_incumbent else None)
        results[bi] = sel
    cur = results[cur_b]
    choice = cur_b
    if len(trials) == 2:
        opp = results[-cur_b]
        l1c = np.abs(cur.column).sum()
        l1o = np.abs(opp.column).sum()
        rule = cfg.polarity_rule
        if rule == "l1":
            flip = l1o < l1c
        elif rule == "l1+hqic":
            flip = l1o < l1c and opp.record.hqic < cur.record.hqic
        else:
            flip = opp.record.hqic < cur.record.hqic
        if flip:
            choice = -cur_b
    sel = results[choice]
    new_col = sel.column
    if cfg.monotone_guard and sweep >= 2:
        old = state.L[:, i]
        if _matrix_l1_delta(old, new_col, i) > 1e-12 * max(1.0, np.abs(state.L).sum()):
            state.guard_rejections += 1
            choice = cur_b
            new_col = old.copy()
            sel = results[cur_b]._replace(column=new_col)
    flipped = choice != cur_b
    state.beta[i] = choice
    state.L[:, i] = new_col
    state.L[i, :] = new_col
    return dict(rho=sel.rho, flipped=flipped, hqic=sel.record.hqic)


def _prepare(data):
    """Returns ``(C, n_obs, X)``; ``X`` is ``None`` when only a covariance is given."""
    if isinstance(data, SampleCovariance):
        return data.C, (data.n_obs or None), None
    X = data if isinstance(data, ObservationMatrix) else ObservationMatrix(
        np.asarray(data, dtype=float))
    return build_sample_covariance(X).C, X.n_obs, X


def learn(
    data: Union[np.ndarray, ObservationMatrix, SampleCovariance],
    cfg: Optional[LearnConfig] = None,
    progress: Optional[Union[IO[str], Callable[[dict], None]]] = None,
    beta0=None,
) -> LearnResult:
    """Learn a balanced Laplacian from observations (or a covariance).

    ``data`` is an ``N x K`` observation array, an :class:`ObservationMatrix`
    or a :class:`SampleCovariance` (``n_obs`` must then be set; tall mode
    and the reliability-weighted polarity start need observations).
    ``progress`` receives one record per sweep, either as a callback or as
    JSON lines written to a text stream. ``beta0`` overrides the polarity
    initialization.
    """
    cfg = cfg or LearnConfig()
    t0 = time.perf_counter()
    C, n_obs, X = _prepare(data)
    n = C.shape[0]
    if n < 2:
        raise InputError("need at least 2 nodes")
    if n_obs is None:
        raise ParameterError("the number of observations is required for model selection")
    mode = cfg.resolve_mode(n, n_obs if X is not None else None)
    if mode == "tall":
        if X is None:
            raise ParameterError("tall mode needs the observations, not just C")
        factor = CovarianceFactor.from_observations(X.data, center=not X.centered)
    else:
        factor = CovarianceFactor.from_covariance(C)
    solver = ColumnSolver(factor, tall=(mode == "tall"), cfg=cfg.solver)
    ctx = _Context(C, n_obs, solver, cfg)

    if beta0 is not None:
        beta = np.asarray(beta0).astype(np.int8).copy()
    else:
        Cp = C if X is None else build_voc_weighted_covariance(X, C).Cprime
        beta = initialize_polarities(Cp).astype(np.int8)
    L0 = np.diag(1.0 / np.maximum(np.diag(C), cfg.eps_diag))
    state = LearnState(L0, beta)

    emit = _emitter(progress)
    t_init = time.perf_counter() - t0
    col_times = []
    for sweep in range(1, cfg.max_sweeps + 1):
        state.sweep = sweep
        flips = 0
        rhos = np.empty(n)
        for i in range(n):
            tc = time.perf_counter()
            try:
                out = learn_column(state, i, ctx)
            except SolverError as exc:
                raise SolverError(f"column {i}, sweep {sweep}: {exc}") from exc
            col_times.append(time.perf_counter() - tc)
            flips += int(out["flipped"])
            rhos[i] = out["rho"]
        l1 = float(np.abs(state.L).sum())
        state.l1_history.append(l1)
        state.rho_history.append(rhos)
        state.flips.append(flips)
        emit(dict(sweep=sweep, l1=l1, flips=flips))
        h = state.l1_history
        if len(h) > 1 and abs(h[-2] - h[-1]) <= cfg.tol_outer * h[-2]:
            break

    L = state.L
    beta = state.beta.astype(np.int8)
    if beta[0] == -1:
        beta = -beta
    if not certificate_holds(L, beta):
        raise SolverError("learned Laplacian violates its own polarity certificate")
    report = dict(
        mode=mode,
        sweeps=state.sweep,
        l1_history=state.l1_history,
        flips=state.flips,
        guard_rejections=state.guard_rejections,
        rho_last=state.rho_history[-1].tolist(),
        solver=solver.stats.as_dict(),
        time_total=time.perf_counter() - t0,
        time_init=t_init,
        time_per_column=float(np.mean(col_times)) if col_times else 0.0,
    )
    return LearnResult(SignedLaplacian(L, beta), beta, report)


def _emitter(progress):
    if progress is None:
        return lambda rec: None
    if callable(progress):
        return progress

    def write(rec):
        progress.write(json.dumps(rec) + "\n")
        progress.flush()
    return write
