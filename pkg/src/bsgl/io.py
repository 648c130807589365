"""File formats: dense CSV matrices/vectors, Matrix Market, JSON reports, JSON lines."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import InputError

SCHEMA_VERSION = 1

PathLike = Union[str, os.PathLike]


def _fmt(v: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(float(v))


def read_matrix_csv(path: PathLike, header: bool = False) -> np.ndarray:
    """Comma-separated numeric matrix; every row must have the same length."""
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            vals = []
            for col, cell in enumerate(rec, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(f"{path}: line {lineno}, column {col}: "
                                     f"not a number: {cell.strip()!r}") from None
                if not np.isfinite(v):
                    raise InputError(f"{path}: line {lineno}, column {col}: non-finite value")
                vals.append(v)
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputError(f"{path}: line {lineno}: expected {width} columns, "
                                 f"found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_matrix_csv(path: PathLike, M, header: Optional[Iterable[str]] = None) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in M:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_vector_csv(path: PathLike, header: bool = False) -> np.ndarray:
    """A vector stored as one row or one column."""
    M = read_matrix_csv(path, header)
    if M.shape[0] != 1 and M.shape[1] != 1:
        raise InputError(f"{path}: expected a single row or column, got shape {M.shape}")
    return M.ravel()


def write_vector_csv(path: PathLike, v) -> None:
    write_matrix_csv(path, np.asarray(v, dtype=float).reshape(-1, 1))


def read_matrix_mm(path: PathLike) -> np.ndarray:
    try:
        M = scipy.io.mmread(str(path))
    except (ValueError, OSError) as exc:
        raise InputError(f"{path}: unreadable Matrix Market file: {exc}") from exc
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    return np.asarray(M, dtype=float)


def write_matrix_mm(path: PathLike, M, symmetric: bool = True) -> None:
    M = np.asarray(M, dtype=float)
    S = sp.coo_matrix(np.where(M != 0, M, 0.0))
    sym = "symmetric" if symmetric and np.array_equal(M, M.T) else "general"
    scipy.io.mmwrite(str(path), S, symmetry=sym, precision=17)


def read_matrix(path: PathLike, fmt: str = "csv", header: bool = False) -> np.ndarray:
    if fmt == "csv":
        return read_matrix_csv(path, header)
    if fmt == "mm":
        return read_matrix_mm(path)
    raise InputError(f"unknown matrix format {fmt!r}")


def write_matrix(path: PathLike, M, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_matrix_csv(path, M)
    elif fmt == "mm":
        write_matrix_mm(path, M)
    else:
        raise InputError(f"unknown matrix format {fmt!r}")


def read_polarity(path: PathLike) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read polarity JSON: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("beta")
    if not isinstance(data, list) or not all(v in (1, -1) for v in data):
        raise InputError(f"{path}: polarity must be a JSON array of +1/-1")
    return np.array(data, dtype=np.int8)


def write_polarity(path: PathLike, beta) -> None:
    Path(path).write_text(json.dumps([int(b) for b in beta]) + "\n", encoding="utf-8")


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(path: PathLike, report: dict) -> None:
    """JSON report with a schema version; keys sorted so output is stable."""
    body = {"schema_version": SCHEMA_VERSION, **_jsonable(report)}
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_report(path: PathLike) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def dump_lp(prefix: PathLike, problem) -> None:
    """Write ``A`` as Matrix Market plus ``b``, ``c`` and sizes as JSON, for debugging."""
    prefix = str(prefix)
    scipy.io.mmwrite(prefix + ".mtx", problem.A, precision=17)
    meta = dict(structure=problem.structure, n_main=problem.n_main, n_slack=problem.n_slack,
                b=problem.b, c=problem.c)
    if problem.info is not None:
        meta.update(column=problem.info.i, rho=problem.info.rho,
                    S=None if problem.info.S is None else problem.info.S)
    Path(prefix + ".json").write_text(json.dumps(_jsonable(meta)) + "\n", encoding="utf-8")
