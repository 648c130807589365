"""Hypothesis strategies for random signed graphs."""

import numpy as np
from hypothesis import strategies as st


@st.composite
def signed_graphs(draw, min_nodes=2, max_nodes=12):
    """Symmetric signed adjacency with zero diagonal (not necessarily balanced)."""
    n = draw(st.integers(min_nodes, max_nodes))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.1, 1.0))
    rng = np.random.default_rng(seed)
    M = rng.uniform(0.01, 1.0, (n, n)) * rng.choice([-1.0, 1.0], (n, n))
    M *= rng.random((n, n)) < p
    W = np.triu(M, 1)
    return W + W.T


@st.composite
def balanced_graphs(draw, min_nodes=2, max_nodes=12):
    """``(W, beta)`` with ``sign(W_ij) = beta_i beta_j`` on every edge."""
    n = draw(st.integers(min_nodes, max_nodes))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.1, 1.0))
    rng = np.random.default_rng(seed)
    beta = rng.choice(np.array([-1, 1], dtype=np.int8), n)
    M = rng.uniform(0.01, 1.0, (n, n)) * (rng.random((n, n)) < p)
    W = np.triu(M, 1) * np.outer(beta, beta)
    return W + W.T, beta
