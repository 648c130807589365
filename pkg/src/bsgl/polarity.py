"""Initial node polarities from a reliability-weighted covariance.

Region growing: start from the strongest correlated pair and keep attaching
the unassigned node with the strongest link into the assigned set, copying
that link's sign into the new node's polarity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import WeightedCovariance
from .errors import DimensionError, InputError


@dataclass
class PolaritySeedState:
    """Bookkeeping for the greedy growth; ``order`` lists nodes as assigned."""

    beta: np.ndarray
    order: list = field(default_factory=list)
    best_mag: np.ndarray = None
    best_src: np.ndarray = None


class DegenerateCovarianceWarning(UserWarning):
    pass


def initialize_polarities(Cprime, return_state: bool = False):
    """Greedy sign-preserving polarity assignment.

    Ties on link magnitude go to the lowest node index. Zero links carry no
    information; a node whose links into the assigned set are all zero waits
    until a non-zero link appears. If nothing is reachable the lowest-index
    unassigned node starts a new region with polarity +1.
    """
    if isinstance(Cprime, WeightedCovariance):
        Cprime = Cprime.Cprime
    Cp = np.asarray(Cprime, dtype=float)
    if Cp.ndim != 2 or Cp.shape[0] != Cp.shape[1]:
        raise DimensionError("weighted covariance must be square")
    n = Cp.shape[0]
    if n < 2:
        raise DimensionError("need at least 2 nodes")
    if not np.all(np.isfinite(Cp)):
        raise InputError("weighted covariance has non-finite entries")

    A = np.abs(Cp)
    np.fill_diagonal(A, 0.0)
    beta = np.zeros(n, dtype=np.int8)
    st = PolaritySeedState(beta=beta, best_mag=np.zeros(n), best_src=np.full(n, -1))

    if A.max() == 0.0:
        warnings.warn("all off-diagonal links are zero; polarities default to +1",
                      DegenerateCovarianceWarning, stacklevel=2)
        beta[:] = 1
        st.order = list(range(n))
        return (beta, st) if return_state else beta

    # row-major argmax over the upper triangle = lowest (i, j) on ties
    iu = np.triu_indices(n, 1)
    flat = int(np.argmax(A[iu]))
    i, j = int(iu[0][flat]), int(iu[1][flat])
    beta[i] = 1
    beta[j] = 1 if Cp[i, j] >= 0 else -1

    def attach(a):
        st.order.append(a)
        un = beta == 0
        m = A[a]
        better = un & ((m > st.best_mag) | ((m == st.best_mag) & (m > 0) & (a < st.best_src)))
        st.best_mag[better] = m[better]
        st.best_src[better] = a

    attach(i)
    attach(j)
    while len(st.order) < n:
        cand = np.where(beta == 0, st.best_mag, -1.0)
        k = int(np.argmax(cand))
        if cand[k] <= 0.0:
            k = int(np.flatnonzero(beta == 0)[0])
            beta[k] = 1
        else:
            p = st.best_src[k]
            beta[k] = beta[p] if Cp[k, p] >= 0 else -beta[p]
        attach(k)
    return (beta, st) if return_state else beta
