"""Two-step baseline: unconstrained CLIME columns, then greedy balancing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import EDGE_TOL, SignedLaplacian, adjacency_from_laplacian
from .errors import InputError, ParameterError
from .selection import RhoSearchConfig, select_rho
from .slp.column import ColumnSolver, SolverConfig
from .slp.factor import CovarianceFactor


def _factor(src) -> CovarianceFactor:
    if isinstance(src, CovarianceFactor):
        return src
    return CovarianceFactor.from_covariance(np.asarray(getattr(src, "C", src), dtype=float))


def clime_column(src, i: int, rho: float, solver: Optional[ColumnSolver] = None,
                 cfg: Optional[SolverConfig] = None) -> np.ndarray:
    """``argmin ||l||_1  s.t.  ||C l - e_i||_inf <= rho`` (no sign rows)."""
    if not rho > 0:
        raise ParameterError("rho must be positive")
    solver = solver or ColumnSolver(_factor(src), cfg=cfg)
    return solver.solve(i, None, rho)[0]


@dataclass(frozen=True)
class ClimeConfig:
    search: RhoSearchConfig = field(default_factory=RhoSearchConfig)
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(retry_gamma=()))
    eps_diag: float = 1e-8


class ClimeResult(NamedTuple):
    L: np.ndarray
    rho: np.ndarray


def clime(C, n_obs: int, cfg: Optional[ClimeConfig] = None) -> ClimeResult:
    """Column-wise CLIME with a per-column criterion search, then ``(L + L^T) / 2``.

    Every column is scored against the same diagonal starting matrix, so
    the columns stay independent of each other. The search for column ``i``
    starts at the smallest ``rho`` for which the unconstrained LP is feasible.
    """
    cfg = cfg or ClimeConfig()
    C = np.asarray(getattr(C, "C", C), dtype=float)
    n = C.shape[0]
    solver = ColumnSolver(CovarianceFactor.from_covariance(C), cfg=cfg.solver)
    L0 = np.diag(1.0 / np.maximum(np.diag(C), cfg.eps_diag))
    cols = np.empty((n, n))
    rhos = np.empty(n)
    for i in range(n):
        floor, _ = solver.feasibility_floor(i, None)
        start = max(floor, cfg.search.delta_floor)

        def solve(rho, i=i):
            return solver.solve(i, None, rho)[0]

        sel = select_rho(i, L0, C, n_obs, start, solve, cfg.search)
        cols[:, i] = sel.column
        rhos[i] = sel.rho
    return ClimeResult(0.5 * (cols + cols.T), rhos)


class GreedyResult(NamedTuple):
    W: np.ndarray
    beta: np.ndarray
    removed: list


def greedy_balance(W, seed: Optional[int] = None, rng: Optional[np.random.Generator] = None,
                   edge_tol: float = 0.0) -> GreedyResult:
    """Grow a polarized set from a seed node along the heaviest edges.

    The seed is ``seed`` if given, a random node if ``rng`` is given, and
    otherwise the node of largest weighted degree. Each newly attached node
    takes the polarity implied by its heaviest edge into the set; its other
    edges into the set that disagree with that polarity are dropped. Nodes
    the growth cannot reach start a new region from the lowest unpolarized
    index.
    """
    W = np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise InputError("adjacency must be square")
    if np.abs(W - W.T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(W).max(initial=0.0)):
        raise InputError("adjacency must be symmetric")
    n = W.shape[0]
    diag = np.diag(W).copy()
    np.fill_diagonal(W, 0.0)
    W[np.abs(W) <= edge_tol] = 0.0
    A = np.abs(W)
    beta = np.zeros(n, dtype=np.int8)
    removed = []
    if seed is None:
        seed = int(rng.integers(n)) if rng is not None else int(np.argmax(A.sum(axis=1)))
    elif not 0 <= seed < n:
        raise IndexError(f"seed node {seed} out of range")
    # best[k] = heaviest edge from unpolarized k into the set, via[k] its endpoint
    best = np.full(n, -1.0)
    via = np.full(n, -1)

    def attach(k):
        for j in np.flatnonzero(A[k] > 0):
            if beta[j] == 0 and A[k, j] > best[j]:
                best[j] = A[k, j]
                via[j] = k

    start = seed
    while start is not None:
        beta[start] = 1
        attach(start)
        while True:
            cand = np.where(beta == 0, best, -1.0)
            k = int(np.argmax(cand))
            if cand[k] <= 0:
                break
            p = via[k]
            beta[k] = int(np.sign(W[k, p])) * beta[p]
            for j in np.flatnonzero((A[k] > 0) & (beta != 0)):
                if j != k and np.sign(W[k, j]) != beta[k] * beta[j]:
                    W[k, j] = W[j, k] = 0.0
                    A[k, j] = A[j, k] = 0.0
                    removed.append((int(min(j, k)), int(max(j, k))))
            attach(k)
        rest = np.flatnonzero(beta == 0)
        start = int(rest[0]) if rest.size else None
    np.fill_diagonal(W, diag)
    return GreedyResult(W, beta, sorted(removed))


def clime_greedy(C, n_obs: int, cfg: Optional[ClimeConfig] = None) -> SignedLaplacian:
    """Full baseline: CLIME estimate, greedy balancing, diagonal kept."""
    L = clime(C, n_obs, cfg).L
    g = greedy_balance(adjacency_from_laplacian(L), edge_tol=EDGE_TOL)
    Lb = np.diag(np.diag(L)) - g.W + np.diag(np.diag(g.W))
    Lb = 0.5 * (Lb + Lb.T)
    return SignedLaplacian(Lb, g.beta)
