"""Standard-form LPs ``min c^T x  s.t.  A [x; q] = b, q >= 0``.

Builders for the sign-constrained column LP (dense covariance or tall
observation form), its unconstrained variant, and the feasibility LP that
finds the smallest admissible box radius. Each problem keeps a
:class:`ColumnInfo` so the solver can use the structured main-step solve and
the active-set polish.

Block layouts (``N`` nodes, ``K`` observations, ``e = e_i``)::

    column, dense   x = [lt; l; r]            rows: C l - r          = e
                    q = [q1..q5]                    r        - q1    = -rho
                                                   -r        - q2    = -rho
                                                    lt - l   - q3    = 0
                                                    lt + l   - q4    = 0
                                                   -S l      - q5    = 0
    column, tall    x = [lt; l; r; phi]         first row block becomes
                                                    kappa X phi - r  = e
                                                    X^T l - phi      = 0
    feasibility     x = [l; r; rho(; phi)]          C l - r          = e
                    q = [q1; q2; q3; q4]            r + rho  - q1    = 0
                                                   -r + rho  - q2    = 0
                                                   -S l      - q3    = 0
                                                    rho      - q4    = 0

Without a sign matrix the ``-S l`` rows and their slacks are dropped.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError, ParameterError, PreconditionError
from .factor import CovarianceFactor

Structure = Literal["dense_column", "tall_column", "feasibility_initial",
                    "feasibility_warm", "generic"]


@dataclass(frozen=True)
class ColumnInfo:
    """What the structured solver and the polish need to know."""

    i: int
    rho: float
    S: Optional[np.ndarray]
    factor: CovarianceFactor
    tall: bool

    @property
    def n(self) -> int:
        return self.factor.n

    @property
    def n_obs(self) -> int:
        return self.factor.n_obs or 0


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    n_main: int
    n_slack: int
    structure: Structure = "generic"
    slack_sign: int = -1
    info: Optional[ColumnInfo] = None

    def __post_init__(self):
        m, ncol = self.A.shape
        if ncol != self.n_main + self.n_slack:
            raise DimensionError("A must have n_main + n_slack columns")
        if self.b.shape != (m,):
            raise DimensionError("b length must equal the number of rows of A")
        if self.c.shape != (self.n_main,):
            raise DimensionError("c length must equal n_main")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def with_rho(self, rho: float) -> "LpProblem":
        """Same problem at a new box radius (only ``b`` moves)."""
        if self.structure not in ("dense_column", "tall_column"):
            raise ParameterError("only column LPs are parametrized by rho")
        _check_rho(rho)
        info = dataclasses.replace(self.info, rho=float(rho))
        return dataclasses.replace(self, b=_column_rhs(info), info=info)

    def slack_rows(self) -> np.ndarray:
        """Row index attached to each slack column (its ``-1`` entry)."""
        return self.n_rows - self.n_slack + np.arange(self.n_slack)


def _check_rho(rho):
    # rho = 0 is allowed: it is the feasibility floor when C l = e_i is attainable
    if not np.isfinite(rho) or rho < 0:
        raise ParameterError(f"rho must be a finite non-negative scalar, got {rho}")


def sign_matrix(beta, i: int, diag: Literal["nonneg", "free"] = "nonneg") -> np.ndarray:
    """Diagonal of ``S`` for column ``i``: ``beta_i beta_j`` off the diagonal.

    ``S_ii = -1`` turns the ``i``-th row into ``l_ii >= 0``. ``diag="free"``
    marks it 0 instead, which drops the constraint on the diagonal entry.
    """
    b = np.asarray(beta, dtype=float)
    S = b[i] * b
    S[i] = -1.0 if diag == "nonneg" else 0.0
    return S


def _as_factor(src, tall: bool) -> CovarianceFactor:
    if isinstance(src, CovarianceFactor):
        return src
    if hasattr(src, "C") and not isinstance(src, np.ndarray):
        return CovarianceFactor.from_covariance(src.C)
    if hasattr(src, "data") and not isinstance(src, np.ndarray):
        return CovarianceFactor.from_observations(src.data, center=not src.centered)
    if tall:
        return CovarianceFactor.from_observations(src)
    return CovarianceFactor.from_covariance(src)


def _check_index(i, n):
    if not (0 <= int(i) < n):
        raise IndexError(f"column index {i} out of range for N={n}")


def _check_S(S, n):
    if S is None:
        return None
    S = np.asarray(S, dtype=float)
    if S.ndim == 2:
        S = np.diag(S).copy()
    if S.shape != (n,):
        raise DimensionError("sign diagonal has the wrong length")
    if not np.all(np.isin(S, (-1.0, 0.0, 1.0))):
        raise ParameterError("sign diagonal entries must be -1, 0 or +1")
    return S


def _column_rhs(info: ColumnInfo) -> np.ndarray:
    n, K = info.n, info.n_obs
    e = np.zeros(n)
    e[info.i] = 1.0
    parts = [e]
    if info.tall:
        parts.append(np.zeros(K))
    parts += [np.full(n, -info.rho), np.full(n, -info.rho), np.zeros(2 * n)]
    if info.S is not None:
        parts.append(np.zeros(n))
    return np.concatenate(parts)


def _column_matrix(info: ColumnInfo) -> sp.csr_matrix:
    n = info.n
    I = sp.identity(n, format="csr")
    Z = None
    f = info.factor
    blocks = []
    if info.tall:
        K = info.n_obs
        Xs = sp.csr_matrix(f.Xc)
        blocks.append([Z, Z, -I, f.kappa * Xs])
        blocks.append([Z, Xs.T.tocsr(), Z, -sp.identity(K, format="csr")])
        tail = [Z]
    else:
        blocks.append([sp.csr_matrix((n, n)), sp.csr_matrix(f.C), -I])
        tail = []
    blocks.append([Z, Z, I] + tail)
    blocks.append([Z, Z, -I] + tail)
    blocks.append([I, -I, Z] + tail)
    blocks.append([I, I, Z] + tail)
    if info.S is not None:
        blocks.append([Z, -sp.diags(info.S), Z] + tail)
    Ax = sp.bmat(blocks, format="csr")
    n_slack = (5 if info.S is not None else 4) * n
    m = Ax.shape[0]
    Aq = sp.vstack([sp.csr_matrix((m - n_slack, n_slack)), -sp.identity(n_slack)])
    return sp.hstack([Ax, Aq], format="csr")


def _build_column(factor, i, rho, S, tall) -> LpProblem:
    n = factor.n
    _check_index(i, n)
    _check_rho(rho)
    S = _check_S(S, n)
    info = ColumnInfo(int(i), float(rho), S, factor, tall)
    A = _column_matrix(info)
    n_main = 3 * n + (info.n_obs if tall else 0)
    n_slack = (5 if S is not None else 4) * n
    c = np.concatenate([np.ones(n), np.zeros(n_main - n)])
    return LpProblem(c, A, _column_rhs(info), n_main, n_slack,
                     "tall_column" if tall else "dense_column", -1, info)


def build_column_lp_dense(C, i: int, rho: float, S=None) -> LpProblem:
    """Column LP ``min ||l||_1 s.t. ||C l - e_i||_inf <= rho, S l <= 0``.

    ``S=None`` omits the sign rows (plain CLIME column).
    """
    return _build_column(_as_factor(C, tall=False), i, rho, S, tall=False)


def build_column_lp_tall(X, i: int, rho: float, S=None) -> LpProblem:
    """Same LP with ``C l`` routed through ``phi = X^T l`` (``O(N K)`` non-zeros)."""
    f = _as_factor(X, tall=True)
    if f.kind != "tall":
        raise ParameterError("tall build needs observations, not a covariance")
    return _build_column(f, i, rho, S, tall=True)


def build_feasibility_lp(src, i: int, S=None, tall: Optional[bool] = None) -> LpProblem:
    """LP for the smallest ``rho >= 0`` admitting a sign-consistent column."""
    f = _as_factor(src, tall=bool(tall))
    tall = f.kind == "tall" if tall is None else tall
    if tall and f.kind != "tall":
        raise ParameterError("tall build needs observations, not a covariance")
    n = f.n
    _check_index(i, n)
    S = _check_S(S, n)
    info = ColumnInfo(int(i), 0.0, S, f, tall)
    K = info.n_obs if tall else 0
    I = sp.identity(n, format="csr")
    one = sp.csr_matrix(np.ones((n, 1)))
    Z = None
    tail = [Z] if tall else []
    if tall:
        Xs = sp.csr_matrix(f.Xc)
        rows = [[sp.csr_matrix((n, n)), -I, sp.csr_matrix((n, 1)), f.kappa * Xs],
                [Xs.T.tocsr(), Z, Z, -sp.identity(K, format="csr")]]
    else:
        rows = [[sp.csr_matrix(f.C), -I, sp.csr_matrix((n, 1))]]
    rows.append([Z, I, one] + tail)
    rows.append([Z, -I, one] + tail)
    if S is not None:
        rows.append([-sp.diags(S), Z, Z] + tail)
    rows.append([Z, Z, sp.csr_matrix([[1.0]])] + tail)
    Ax = sp.bmat(rows, format="csr")
    n_slack = (3 if S is not None else 2) * n + 1
    m = Ax.shape[0]
    A = sp.hstack([Ax, sp.vstack([sp.csr_matrix((m - n_slack, n_slack)),
                                  -sp.identity(n_slack)])], format="csr")
    n_main = 2 * n + 1 + K
    c = np.zeros(n_main)
    c[2 * n] = 1.0
    b = np.zeros(m)
    b[i] = 1.0
    return LpProblem(c, A, b, n_main, n_slack, "feasibility_initial", -1, info)


def warm_feasibility_floor(src, i: int, S, l_prev, tol: float = 1e-9) -> float:
    """Closed-form floor ``||C l' - e_i||_inf`` at which ``l'`` stays feasible."""
    f = src if isinstance(src, CovarianceFactor) else _as_factor(src, tall=False)
    n = f.n
    _check_index(i, n)
    l_prev = np.asarray(l_prev, dtype=float)
    if l_prev.shape != (n,):
        raise DimensionError("previous column has the wrong length")
    S = _check_S(S, n)
    if S is not None:
        viol = S * l_prev
        if viol.max(initial=0.0) > tol * max(1.0, np.abs(l_prev).max()):
            raise PreconditionError("previous column violates the sign constraints")
    res = f.matvec(l_prev)
    res[i] -= 1.0
    return float(np.abs(res).max())


def column_layout(p: LpProblem) -> dict:
    """Slices of the main vector and slack vector by block name."""
    n = p.info.n if p.info is not None else None
    if p.structure in ("dense_column", "tall_column"):
        lay = {"lt": slice(0, n), "l": slice(n, 2 * n), "r": slice(2 * n, 3 * n)}
        if p.structure == "tall_column":
            lay["phi"] = slice(3 * n, p.n_main)
        lay["q_lo"] = slice(0, n)
        lay["q_hi"] = slice(n, 2 * n)
        lay["q_neg"] = slice(2 * n, 3 * n)
        lay["q_pos"] = slice(3 * n, 4 * n)
        if p.info.S is not None:
            lay["q_sign"] = slice(4 * n, 5 * n)
        return lay
    if p.structure == "feasibility_initial":
        lay = {"l": slice(0, n), "r": slice(n, 2 * n), "rho": 2 * n,
               "q_lo": slice(0, n), "q_hi": slice(n, 2 * n)}
        if p.info.tall:
            lay["phi"] = slice(2 * n + 1, p.n_main)
        if p.info.S is not None:
            lay["q_sign"] = slice(2 * n, 3 * n)
        lay["q_rho"] = p.n_slack - 1
        return lay
    raise ParameterError(f"no block layout for structure {p.structure!r}")
