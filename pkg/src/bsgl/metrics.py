"""Graph-recovery and signal-restoration error measures."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InputError


def _mat(M):
    # accepts plain arrays and Laplacian wrappers alike
    return np.asarray(getattr(M, "L", M), dtype=float)


def _pair(a, b):
    a = _mat(a)
    b = _mat(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def edge_support(M, edge_tol: float = 1e-6) -> np.ndarray:
    """Boolean mask of strictly-upper-triangular entries with ``|M_ij| > edge_tol``."""
    M = np.asarray(M, dtype=float)
    iu = np.triu_indices(M.shape[0], 1)
    return np.abs(M[iu]) > edge_tol


def f_measure(W_est, W_true, edge_tol: float = 1e-6) -> float:
    """Edge-support F-measure ``2tp / (2tp + fn + fp)``.

    Works on adjacencies or Laplacians alike since only off-diagonal
    magnitudes matter. Two empty edge sets score 1.
    """
    a, b = _pair(W_est, W_true)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("f_measure expects square matrices")
    est = edge_support(a, edge_tol)
    tru = edge_support(b, edge_tol)
    tp = int(np.sum(est & tru))
    fp = int(np.sum(est & ~tru))
    fn = int(np.sum(~est & tru))
    den = 2 * tp + fp + fn
    if den == 0:
        return 1.0
    return 2 * tp / den


def relative_error(L_est, L_true) -> float:
    """``||L_est - L_true||_F / ||L_true||_F``."""
    a, b = _pair(L_est, L_true)
    nt = np.linalg.norm(b)
    if nt == 0:
        raise InputError("relative error undefined for an all-zero reference")
    return float(np.linalg.norm(a - b) / nt)


def _offdiag_adjacency(L):
    W = np.diag(np.diag(L)) - L
    return W


def adjacency_error(L_est, L_true) -> float:
    """Relative Frobenius error of the zero-diagonal adjacencies ``diag(L) - L``."""
    a, b = _pair(L_est, L_true)
    Wa, Wb = _offdiag_adjacency(a), _offdiag_adjacency(b)
    nt = np.linalg.norm(Wb)
    if nt == 0:
        raise InputError("adjacency error undefined for an edgeless reference")
    return float(np.linalg.norm(Wa - Wb) / nt)


def mse(x_hat, x) -> float:
    a, b = _pair(x_hat, x)
    return float(np.mean((a - b) ** 2))
