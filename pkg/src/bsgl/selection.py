"""Per-column choice of the box radius ``rho`` by an information criterion.

The search starts at the feasibility floor, where the column is dense, and
walks ``rho`` upward in steps of ``delta`` until the Hannan-Quinn score of
the full Laplacian (with the candidate column written into row and column
``i``) stops improving.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, List, Literal, NamedTuple, Optional, Union

import numpy as np
import scipy.linalg

from .errors import ParameterError, SolverError

FitScale = Union[float, Literal["gaussian"]]


@dataclass(frozen=True)
class RhoSearchConfig:
    """``delta`` fixes the step; otherwise it is ``rel_delta * rho_floor`` (floored)."""

    delta: Optional[float] = None
    rel_delta: float = 0.05
    delta_floor: float = 1e-3
    max_steps: int = 50
    nnz_tol: float = 1e-8
    patience: int = 2
    fit_scale: FitScale = "gaussian"

    def __post_init__(self):
        if self.delta is not None and not self.delta > 0:
            raise ParameterError("delta must be positive")
        if not (self.rel_delta > 0 and self.delta_floor > 0):
            raise ParameterError("relative step and its floor must be positive")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be at least 1")
        if self.patience < 1:
            raise ParameterError("patience must be at least 1")

    def step(self, rho_floor: float) -> float:
        if self.delta is not None:
            return self.delta
        return max(self.rel_delta * rho_floor, self.delta_floor)

    def scale_for(self, n_obs: int) -> float:
        return n_obs / 2.0 if self.fit_scale == "gaussian" else float(self.fit_scale)


class HqicRecord(NamedTuple):
    rho: float
    hqic: float
    k: int
    logdet: float
    pd: bool


def _loglnk(n_obs) -> float:
    if not n_obs > np.e:
        raise ParameterError("the criterion needs K > e so that ln(ln K) > 0")
    return float(np.log(np.log(n_obs)))


def count_edges(L, nnz_tol: float = 1e-8) -> int:
    L = np.asarray(L)
    iu = np.triu_indices(L.shape[0], 1)
    return int(np.count_nonzero(np.abs(L[iu]) > nnz_tol))


def hqic(L, C, n_obs, nnz_tol: float = 1e-8, fit_scale: float = 1.0,
         rho: float = float("nan")) -> HqicRecord:
    """``-2 s (logdet L - tr(C L)) + 2 k ln ln K``.

    ``s = 1`` is the bare criterion; ``s = K / 2`` weights the fit term as
    the Gaussian log-likelihood of ``K`` samples does. ``k`` counts
    strictly-upper-triangular entries above ``nnz_tol``. Non-PD ``L`` scores
    ``+inf``.
    """
    L = np.asarray(L, dtype=float)
    C = np.asarray(C, dtype=float)
    k = count_edges(L, nnz_tol)
    pen = 2.0 * k * _loglnk(n_obs)
    try:
        R = scipy.linalg.cholesky(L, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        return HqicRecord(rho, np.inf, k, -np.inf, False)
    ld = 2.0 * np.log(np.diag(R)).sum()
    tr = float(np.einsum("ij,ij->", C, L))
    return HqicRecord(rho, -2.0 * fit_scale * (ld - tr) + pen, k, float(ld), True)


class ColumnScorer:
    """Scores candidate columns against a fixed current Laplacian.

    Precomputes the parts of ``tr(C L)`` and the edge count that do not
    involve row and column ``i``.
    """

    def __init__(self, L, C, i, n_obs, nnz_tol, fit_scale):
        self.L = np.asarray(L, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.i = i
        self.nnz_tol = nnz_tol
        self.fit_scale = fit_scale
        self.pen = _loglnk(n_obs)
        n = self.L.shape[0]
        mask = np.ones(n, bool)
        mask[i] = False
        sub = self.L[np.ix_(mask, mask)]
        self._k_rest = count_edges(sub, nnz_tol)
        self._tr_rest = float(np.einsum("ij,ij->", self.C[np.ix_(mask, mask)], sub))
        self._mask = mask

    def __call__(self, col, rho=float("nan")) -> HqicRecord:
        i = self.i
        col = np.asarray(col, dtype=float)
        off = col[self._mask]
        k = self._k_rest + int(np.count_nonzero(np.abs(off) > self.nnz_tol))
        tr = self._tr_rest + 2.0 * float(self.C[i][self._mask] @ off) + self.C[i, i] * col[i]
        Lc = self.L.copy()
        Lc[:, i] = col
        Lc[i, :] = col
        try:
            R = scipy.linalg.cholesky(Lc, lower=False, check_finite=False)
        except np.linalg.LinAlgError:
            return HqicRecord(rho, np.inf, k, -np.inf, False)
        ld = 2.0 * float(np.log(np.diag(R)).sum())
        val = -2.0 * self.fit_scale * (ld - tr) + 2.0 * k * self.pen
        return HqicRecord(rho, val, k, ld, True)


class RhoSelection(NamedTuple):
    rho: float
    column: np.ndarray
    record: HqicRecord
    records: List[HqicRecord]
    rho_floor: float
    from_incumbent: bool


def select_rho(
    i: int,
    L,
    C,
    n_obs: int,
    rho_floor: float,
    solve: Callable[[float], np.ndarray],
    cfg: Optional[RhoSearchConfig] = None,
    incumbent: Optional[np.ndarray] = None,
) -> RhoSelection:
    """Walk ``rho = rho_floor, rho_floor + delta, ...`` and keep the best score.

    ``solve(rho)`` returns the column LP solution. Stops after ``patience``
    consecutive non-improving steps or ``max_steps`` solves. An
    ``incumbent`` column (feasible at ``rho_floor`` by construction) enters
    the comparison as an extra candidate at the floor.
    """
    cfg = cfg or RhoSearchConfig()
    if not np.isfinite(rho_floor) or rho_floor < 0:
        raise SolverError(f"invalid feasibility floor {rho_floor!r} for column {i}")
    scorer = ColumnScorer(L, C, i, n_obs, cfg.nnz_tol, cfg.scale_for(n_obs))
    delta = cfg.step(rho_floor)
    records: List[HqicRecord] = []
    best = None
    if incumbent is not None:
        rec = scorer(incumbent, rho_floor)
        best = (rec, np.asarray(incumbent, dtype=float).copy(), True)
    rho = rho_floor
    bad = 0
    for _ in range(cfg.max_steps):
        col = solve(rho)
        rec = scorer(col, rho)
        records.append(rec)
        if best is None or rec.hqic < best[0].hqic:
            best = (rec, col, False)
            bad = 0
        else:
            bad += 1
            if bad >= cfg.patience:
                break
        rho += delta
    rec, col, inc = best
    return RhoSelection(rec.rho, col, rec, records, float(rho_floor), inc)


def records_to_csv(records, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rho", "hqic", "k", "logdet", "pd"])
    for r in records:
        w.writerow([repr(float(r.rho)), repr(float(r.hqic)), r.k, repr(float(r.logdet)),
                    int(r.pd)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
