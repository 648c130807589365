"""Graph and matrix domain types.

Covariance construction, balance checking, and the diagonal +/-1 similarity
transform that maps a balanced signed Laplacian onto the Laplacian of its
positive counterpart.

Conventions
-----------
A signed adjacency ``W`` is symmetric with non-negative self-loops on the
diagonal. Its generalized Laplacian is ``L = D - W + diag(W)`` with
``D_ii = sum_j W_ij``; the self-loop therefore contributes once to ``L_ii``.
Off-diagonal Laplacian entries are ``L_ij = -W_ij``, so an edge between nodes
of polarities ``beta_i, beta_j`` is consistent iff ``beta_i beta_j L_ij <= 0``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional, Union

import numpy as np

from .errors import DimensionError, InputError, ParameterError, PreconditionError

EDGE_TOL = 1e-8
SIGN_TOL = 1e-9
SYM_TOL = 1e-9


def as_polarity(beta) -> np.ndarray:
    """Validate and return a polarity vector as an int8 array of +/-1."""
    b = np.asarray(beta)
    if b.ndim != 1 or b.size == 0:
        raise InputError("polarity vector must be a non-empty 1-D array")
    if not np.all((b == 1) | (b == -1)):
        raise InputError("polarity entries must be exactly -1 or +1")
    return b.astype(np.int8)


@dataclass(frozen=True)
class ObservationMatrix:
    """``N x K`` matrix of K signal observations on N nodes (rows = nodes)."""

    data: np.ndarray
    centered: bool = False

    def __post_init__(self):
        d = np.array(self.data, dtype=float)
        if d.ndim != 2:
            raise DimensionError(f"observations must be 2-D, got shape {d.shape}")
        n, k = d.shape
        if n < 2:
            raise DimensionError("need at least 2 nodes")
        if k < 2:
            raise DimensionError("need at least 2 observations (K >= 2)")
        if not np.all(np.isfinite(d)):
            raise InputError("observations contain non-finite values")
        if self.centered and np.any(np.abs(d.sum(axis=1)) > 1e-9 * k * max(1.0, np.abs(d).max())):
            raise InputError("rows are flagged centered but do not sum to zero")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def n_nodes(self) -> int:
        return self.data.shape[0]

    @property
    def n_obs(self) -> int:
        return self.data.shape[1]

    def centered_data(self) -> np.ndarray:
        if self.centered:
            return self.data
        return self.data - self.data.mean(axis=1, keepdims=True)


def _as_observations(X) -> ObservationMatrix:
    if isinstance(X, ObservationMatrix):
        return X
    return ObservationMatrix(np.asarray(X, dtype=float))


@dataclass(frozen=True)
class SampleCovariance:
    C: np.ndarray
    ridge: float = 0.0
    n_obs: int = 0

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionError("covariance must be square")
        if np.abs(C - C.T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(C).max(initial=0.0)):
            raise InputError("covariance is not symmetric")
        C = 0.5 * (C + C.T)
        C.setflags(write=False)
        object.__setattr__(self, "C", C)

    @property
    def n_nodes(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class WeightedCovariance:
    """Reliability-weighted covariance ``Cprime = U * C`` (elementwise)."""

    Cprime: np.ndarray
    U: np.ndarray
    sigma_v: float
    V: np.ndarray


def build_sample_covariance(
    X,
    ridge: float = 0.0,
    divisor: Literal["K-1", "N"] = "K-1",
) -> SampleCovariance:
    """``C = X X^T / divisor + ridge * I`` after centering each row.

    ``divisor="K-1"`` is the unbiased estimator used for learning; ``"N"``
    divides by the number of nodes instead (the restoration experiments use
    that variant together with a small ridge).
    """
    obs = _as_observations(X)
    if not np.isfinite(ridge) or ridge < 0:
        raise ParameterError("ridge must be a finite non-negative scalar")
    Xc = obs.centered_data()
    if divisor == "K-1":
        den = obs.n_obs - 1
    elif divisor == "N":
        den = obs.n_nodes
    else:
        raise ParameterError(f"unknown divisor {divisor!r}")
    C = Xc @ Xc.T / den
    C = 0.5 * (C + C.T)
    if ridge:
        C = C + ridge * np.eye(obs.n_nodes)
    return SampleCovariance(C, ridge=float(ridge), n_obs=obs.n_obs)


def variance_of_covariance(X, C: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-entry spread of the products ``X_ik X_jk`` around ``C_ij``.

    Uses ``sum_k (a_k - c)^2 = sum_k a_k^2 - 2 c sum_k a_k + K c^2`` so the
    whole matrix costs two ``N x N x K`` products.
    """
    obs = _as_observations(X)
    Xc = obs.centered_data()
    k = obs.n_obs
    if C is None:
        C = Xc @ Xc.T / (k - 1)
    C = np.asarray(C, dtype=float)
    X2 = Xc * Xc
    S1 = Xc @ Xc.T
    V = (X2 @ X2.T - 2.0 * C * S1 + k * C * C) / (k - 1)
    V = 0.5 * (V + V.T)
    return np.maximum(V, 0.0)


def build_voc_weighted_covariance(X, C=None, sigma_v: Optional[float] = None) -> WeightedCovariance:
    """Down-weight covariance entries whose products fluctuate a lot.

    ``u_ij = exp(-V_ij / sigma_v^2)``. When ``sigma_v`` is omitted it is set
    to the square root of the median positive ``V_ij`` so the kernel argument
    is scale free.
    """
    obs = _as_observations(X)
    if C is None:
        C = build_sample_covariance(obs).C
    elif isinstance(C, SampleCovariance):
        C = C.C
    C = np.asarray(C, dtype=float)
    V = variance_of_covariance(obs, C)
    if sigma_v is None:
        pos = V[V > 0]
        sigma_v = float(np.sqrt(np.median(pos))) if pos.size else 1.0
    if not np.isfinite(sigma_v) or sigma_v <= 0:
        raise ParameterError("sigma_v must be positive")
    U = np.exp(-V / sigma_v**2)
    # keep weights strictly inside (0, 1] even when V / sigma_v^2 underflows
    U = np.clip(U, np.finfo(float).tiny, 1.0)
    return WeightedCovariance(Cprime=U * C, U=U, sigma_v=float(sigma_v), V=V)


# ---------------------------------------------------------------------------
# Laplacian / adjacency plumbing


def laplacian_from_adjacency(W) -> np.ndarray:
    """Generalized Laplacian ``D - W + diag(W)``."""
    W = np.asarray(W, dtype=float)
    L = -W.copy()
    np.fill_diagonal(L, W.sum(axis=1))
    return L


def adjacency_from_laplacian(L, self_loops: bool = False) -> np.ndarray:
    """Invert :func:`laplacian_from_adjacency`.

    With ``self_loops=False`` this is the metric convention ``diag(L) - L``
    (zero diagonal).
    """
    L = np.asarray(L, dtype=float)
    W = -L.copy()
    if self_loops:
        np.fill_diagonal(W, L.sum(axis=1))
    else:
        np.fill_diagonal(W, 0.0)
    return W


@dataclass(frozen=True)
class SignedLaplacian:
    """Symmetric generalized Laplacian with an optional balance certificate."""

    L: np.ndarray
    beta: Optional[np.ndarray] = None

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise DimensionError("Laplacian must be square")
        scale = max(1.0, np.abs(L).max(initial=0.0))
        if np.abs(L - L.T).max(initial=0.0) > SYM_TOL * scale:
            raise InputError("Laplacian is not symmetric")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)
        if self.beta is not None:
            b = as_polarity(self.beta)
            if b.size != L.shape[0]:
                raise DimensionError("polarity length does not match Laplacian size")
            object.__setattr__(self, "beta", b)
            if not certificate_holds(L, b):
                raise PreconditionError("polarity certificate is inconsistent with edge signs")

    @property
    def n_nodes(self) -> int:
        return self.L.shape[0]

    def adjacency(self, self_loops: bool = False) -> np.ndarray:
        return adjacency_from_laplacian(self.L, self_loops=self_loops)


def certificate_holds(L, beta, tol: float = SIGN_TOL) -> bool:
    """``beta_i beta_j L_ij <= tol`` for every ``i != j``."""
    L = np.asarray(L, dtype=float)
    b = np.asarray(beta, dtype=float)
    M = (b[:, None] * b[None, :]) * L
    np.fill_diagonal(M, -np.inf)
    return bool(M.max(initial=-np.inf) <= tol)


class BalanceResult(NamedTuple):
    balanced: bool
    beta: Optional[np.ndarray]


def check_balance(W, edge_tol: float = EDGE_TOL, laplacian: bool = False) -> BalanceResult:
    """Two-colour the graph so positive edges join equal polarities.

    ``W`` is a signed adjacency, or a Laplacian when ``laplacian=True``
    (edge signs are then the negated off-diagonals). Entries with magnitude
    at most ``edge_tol`` are treated as absent. Isolated nodes and the root
    of every component get polarity +1.
    """
    M = np.asarray(W, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("adjacency must be square")
    sign = np.sign(-M if laplacian else M)
    present = np.abs(M) > edge_tol
    np.fill_diagonal(present, False)
    n = M.shape[0]
    beta = np.zeros(n, dtype=np.int8)
    nbrs = [np.flatnonzero(present[i]) for i in range(n)]
    for root in range(n):
        if beta[root]:
            continue
        beta[root] = 1
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                want = beta[u] * sign[u, v]
                if beta[v] == 0:
                    beta[v] = want
                    queue.append(v)
                elif beta[v] != want:
                    return BalanceResult(False, None)
    return BalanceResult(True, beta)


@dataclass(frozen=True)
class TransformT:
    """Diagonal similarity transform ``T = diag(t)`` with ``t = beta``."""

    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "t", as_polarity(self.t))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.t.astype(float))

    def apply(self, y: np.ndarray) -> np.ndarray:
        """``T y`` for a vector or the columns of a matrix."""
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return self.t * y
        return self.t[:, None] * y

    def conjugate(self, M: np.ndarray) -> np.ndarray:
        """``T M T``."""
        t = self.t.astype(float)
        return t[:, None] * np.asarray(M, dtype=float) * t[None, :]


def to_positive_laplacian(Lb: Union[SignedLaplacian, np.ndarray], beta=None):
    """Map a balanced Laplacian to ``L+ = T Lb T``.

    Returns ``(Lplus, T)``. The certificate may be passed separately when
    ``Lb`` is a plain array.
    """
    if isinstance(Lb, SignedLaplacian):
        L = Lb.L
        beta = Lb.beta if beta is None else beta
    else:
        L = np.asarray(Lb, dtype=float)
    if beta is None:
        raise PreconditionError("a balance certificate (polarity vector) is required")
    b = as_polarity(beta)
    if b.size != L.shape[0]:
        raise PreconditionError("certificate length does not match the Laplacian")
    if not certificate_holds(L, b):
        raise PreconditionError("Laplacian is not balanced under the given polarities")
    T = TransformT(b)
    Lplus = T.conjugate(L)
    return Lplus, T


def positivity_selfloop_floor(W, factor: float = 2.5) -> np.ndarray:
    """Set ``W_ii = factor * sum_j [-W_ij]_+`` (off-diagonal negatives only).

    ``factor >= 2`` keeps the positive counterpart's self-loops
    ``W_ii - 2 sum_j [-W_ij]_+`` non-negative, so ``L+`` is PSD by Gershgorin.
    """
    if factor < 2:
        raise ParameterError("self-loop factor must be at least 2")
    W = np.array(W, dtype=float)
    off = W.copy()
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(W, factor * np.clip(-off, 0.0, None).sum(axis=1))
    return W


def positive_counterpart_adjacency(W) -> np.ndarray:
    """``W+``: ``|W_ij|`` off the diagonal, ``W_ii - 2 sum_j [-W_ij]_+`` on it."""
    W = np.asarray(W, dtype=float)
    off = W.copy()
    np.fill_diagonal(off, 0.0)
    Wp = np.abs(off)
    np.fill_diagonal(Wp, np.diag(W) - 2.0 * np.clip(-off, 0.0, None).sum(axis=1))
    return Wp
