"""Cached spectral factorizations of the covariance used by the LP builders.

Every column LP of one learning run shares the same covariance, and the
main linear system of the splitting method reduces (after eliminating the
auxiliary blocks) to ``(C^2 + 2 beta I) l = C g + 2 beta p``. Diagonalizing
``C`` once, or taking a thin SVD of the observations when ``K << N``, turns
every such solve into a few matrix-vector products.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import DimensionError, InputError

_REL_CUT = 1e-12


class CovarianceFactor:
    """``C`` held either as an eigendecomposition (dense) or via ``X`` (tall).

    In tall form ``C = kappa * Xc Xc^T`` with ``kappa = 1 / (K - 1)`` and
    ``Xc`` the row-centred observations; ``C`` itself is never formed unless
    :attr:`C` is requested.
    """

    def __init__(self, kind: str, n: int, *, C=None, lam=None, Q=None,
                 Xc=None, U=None, s=None, Vt=None, kappa=None):
        self.kind = kind
        self.n = n
        self._C = C
        self.lam, self.Q = lam, Q
        self.Xc, self.U, self.s, self.Vt, self.kappa = Xc, U, s, Vt, kappa

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_covariance(cls, C) -> "CovarianceFactor":
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionError("covariance must be square")
        if not np.all(np.isfinite(C)):
            raise InputError("covariance has non-finite entries")
        C = 0.5 * (C + C.T)
        lam, Q = np.linalg.eigh(C)
        return cls("dense", C.shape[0], C=C, lam=lam, Q=Q)

    @classmethod
    def from_observations(cls, X, center: bool = True) -> "CovarianceFactor":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionError("observations must be 2-D")
        n, k = X.shape
        if k < 2:
            raise DimensionError("need K >= 2 observations")
        if not np.all(np.isfinite(X)):
            raise InputError("observations contain non-finite values")
        Xc = X - X.mean(axis=1, keepdims=True) if center else X.copy()
        U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        keep = s > _REL_CUT * max(s.max(initial=0.0), 1e-300)
        return cls("tall", n, Xc=Xc, U=U[:, keep], s=s[keep], Vt=Vt[keep],
                   kappa=1.0 / (k - 1))

    # -- basic access -----------------------------------------------------
    @property
    def n_obs(self) -> Optional[int]:
        return None if self.Xc is None else self.Xc.shape[1]

    @property
    def C(self) -> np.ndarray:
        if self._C is None:
            C = self.kappa * (self.Xc @ self.Xc.T)
            self._C = 0.5 * (C + C.T)
        return self._C

    def diagonal(self) -> np.ndarray:
        if self._C is None and self.kind == "tall":
            return self.kappa * np.einsum("ij,ij->i", self.Xc, self.Xc)
        return np.diag(self.C).copy()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "dense":
            return self._C @ v
        return self.kappa * (self.Xc @ (self.Xc.T @ v))

    def submatrix(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        if self.kind == "dense" or self._C is not None:
            return self.C[np.ix_(rows, cols)]
        return self.kappa * (self.Xc[rows] @ self.Xc[cols].T)

    def as_dense(self) -> "CovarianceFactor":
        """Eigen-factorized twin of this factor (same ``C``)."""
        if self.kind == "dense":
            return self
        return CovarianceFactor.from_covariance(self.C)

    # -- structured solves ------------------------------------------------
    def solve_dense(self, g: np.ndarray, p: np.ndarray, beta: float):
        """Minimizer of ``1/4 ||C l - g||^2 + beta/2 ||l - p||^2``.

        Returns ``(l, C l)``. Directions with a zero denominator (possible
        only when ``beta = 0``) are set to zero.
        """
        G = self.Q.T @ np.column_stack((g, p))
        lam = self.lam
        den = lam * lam + 2.0 * beta
        num = lam * G[:, 0] + 2.0 * beta * G[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(den > _REL_CUT * max(1.0, den.max()), num / den, 0.0)
        out = self.Q @ np.column_stack((coef, lam * coef))
        return out[:, 0], out[:, 1]

    def solve_tall(self, g: np.ndarray, dphi: np.ndarray, p: np.ndarray, beta: float):
        """Minimizer over ``(l, phi)`` of

        ``1/4 ||kappa X phi - g||^2 + 1/2 ||X^T l - phi - dphi||^2 + beta/2 ||l - p||^2``.

        Returns ``(l, phi, kappa X phi)``; everything runs in the singular
        basis of ``X`` at ``O(N K)`` cost.
        """
        U, s, Vt, kap = self.U, self.s, self.Vt, self.kappa
        GP = U.T @ np.column_stack((g, p))
        gU, pU = GP[:, 0], GP[:, 1]
        delta = Vt @ dphi
        s2 = s * s
        if beta > 0:
            om = beta / (s2 + beta)
            f = (0.5 * kap * s * gU + om * (s * pU - delta)) / (0.5 * kap * kap * s2 + om)
        else:
            f = gU / (kap * s)
        t = f + delta
        a = (s * t + beta * pU) / (s2 + beta)
        if beta > 0:
            W = U @ np.column_stack((a - pU, kap * s * f))
            l = p + W[:, 0]
        else:
            W = U @ np.column_stack((a, kap * s * f))
            l = W[:, 0]
        phi = Vt.T @ t - dphi
        return l, phi, W[:, 1]
