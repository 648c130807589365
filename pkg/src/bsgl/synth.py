"""Synthetic balanced Erdos-Renyi graphs and Gaussian signals drawn on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional

import numpy as np
import scipy.linalg

from .core import SignedLaplacian, laplacian_from_adjacency, positivity_selfloop_floor
from .errors import InputError, ParameterError


@dataclass(frozen=True)
class SynthSpec:
    n_nodes: int = 50
    n_obs: int = 500
    edge_prob: float = 0.2
    weight_lo: float = 0.01
    weight_hi: float = 1.0
    selfloop_factor: float = 2.5
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ParameterError("need at least 2 nodes")
        if self.n_obs < 2:
            raise ParameterError("need at least 2 observations")
        if not 0 < self.edge_prob <= 1:
            raise ParameterError("edge probability must lie in (0, 1]")
        if not (self.weight_lo > 0 and self.weight_hi >= self.weight_lo):
            raise ParameterError("weight range must satisfy 0 < lo <= hi")
        if self.noise_sigma < 0:
            raise ParameterError("noise sigma must be non-negative")
        if self.selfloop_factor < 2:
            raise ParameterError("self-loop factor must be at least 2")


class GroundTruth(NamedTuple):
    L: SignedLaplacian
    beta: np.ndarray
    W: np.ndarray


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_er_balanced(spec: SynthSpec, rng=None, max_draws: int = 1000) -> GroundTruth:
    """Random balanced graph with signs ``beta_i beta_j`` and self-loop floor.

    A component without negative edges gets no self-loops and leaves the
    Laplacian singular; such draws are discarded and redrawn from the same
    stream, so the result is conditioned on positive definiteness.
    """
    rng = _rng(spec.seed if rng is None else rng)
    for _ in range(max_draws):
        gt = _draw(spec, rng)
        # Cholesky can succeed on a singular matrix through roundoff
        lam = np.linalg.eigvalsh(gt.L.L)
        if lam[0] > 1e-9 * max(1.0, lam[-1]):
            return gt
    raise ParameterError(f"no positive definite draw in {max_draws} attempts; "
                         "raise the edge probability or the node count")


def _draw(spec: SynthSpec, rng: np.random.Generator) -> GroundTruth:
    n = spec.n_nodes
    beta = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    iu = np.triu_indices(n, 1)
    present = rng.random(iu[0].size) < spec.edge_prob
    mag = rng.uniform(spec.weight_lo, spec.weight_hi, size=iu[0].size)
    sgn = beta[iu[0]].astype(float) * beta[iu[1]]
    W = np.zeros((n, n))
    W[iu] = present * mag * sgn
    W = W + W.T
    W = positivity_selfloop_floor(W, spec.selfloop_factor)
    L = laplacian_from_adjacency(W)
    return GroundTruth(SignedLaplacian(L, beta), beta, W)


def sample_gmrf(L, n_obs: int, seed=None) -> np.ndarray:
    """Draw ``n_obs`` columns from ``N(0, L^{-1})``.

    With ``L = R^T R`` (upper Cholesky) the samples are ``R^{-1} z``.
    """
    if isinstance(L, SignedLaplacian):
        L = L.L
    L = np.asarray(L, dtype=float)
    rng = _rng(seed)
    try:
        R = scipy.linalg.cholesky(L, lower=False)
    except np.linalg.LinAlgError as exc:
        raise InputError("precision matrix is not positive definite") from exc
    Z = rng.standard_normal((L.shape[0], int(n_obs)))
    return scipy.linalg.solve_triangular(R, Z, lower=False)


def corrupt(
    X,
    model: Literal["awgn", "bernoulli_drop"] = "awgn",
    level: float = 0.0,
    seed=None,
) -> np.ndarray:
    """Additive white Gaussian noise (``level`` = sigma) or random node dropout.

    ``bernoulli_drop`` zeroes ``floor(level * N)`` distinct, uniformly chosen
    nodes in every column.
    """
    X = np.array(X, dtype=float)
    rng = _rng(seed)
    if model == "awgn":
        if level < 0:
            raise ParameterError("sigma must be non-negative")
        if level == 0:
            return X
        return X + level * rng.standard_normal(X.shape)
    if model == "bernoulli_drop":
        if not 0 <= level <= 1:
            raise ParameterError("drop fraction must lie in [0, 1]")
        n = X.shape[0]
        m = int(np.floor(level * n))
        if m == 0:
            return X
        cols = X.reshape(n, -1)
        for k in range(cols.shape[1]):
            cols[rng.choice(n, size=m, replace=False), k] = 0.0
        return cols.reshape(X.shape)
    raise ParameterError(f"unknown corruption model {model!r}")


def make_instance(spec: SynthSpec, rng: Optional[np.random.Generator] = None):
    """Ground truth plus (optionally noisy) observations from one generator stream."""
    rng = _rng(spec.seed if rng is None else rng)
    gt = generate_er_balanced(spec, rng)
    X = sample_gmrf(gt.L, spec.n_obs, rng)
    if spec.noise_sigma > 0:
        X = corrupt(X, "awgn", spec.noise_sigma, rng)
    return gt, X
