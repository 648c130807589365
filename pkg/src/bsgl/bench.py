"""Synthetic benchmark: generate, learn, score, aggregate."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Literal, Optional

import numpy as np

from .baselines import ClimeConfig, clime_greedy
from .core import (adjacency_from_laplacian, build_sample_covariance, certificate_holds,
                   check_balance)
from .learner import LearnConfig, learn
from .metrics import adjacency_error, f_measure, relative_error
from .synth import SynthSpec, make_instance

METRICS = ("fm", "re", "ae")


@dataclass(frozen=True)
class BenchConfig:
    spec: SynthSpec = field(default_factory=SynthSpec)
    runs: int = 1
    baseline: Literal["none", "clime-greedy"] = "none"
    learn: LearnConfig = field(default_factory=LearnConfig)
    clime: ClimeConfig = field(default_factory=ClimeConfig)


def thread_cap(default: int = 1) -> int:
    """Worker count from ``BGL_THREADS`` (at least 1)."""
    raw = os.environ.get("BGL_THREADS")
    if raw is None or not raw.strip():
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def run_seed(base_seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(run)]))


def _score(L, gt) -> dict:
    L = np.asarray(getattr(L, "L", L))
    return dict(fm=f_measure(adjacency_from_laplacian(L), gt.W),
                re=relative_error(L, gt.L), ae=adjacency_error(L, gt.L))


def run_one(cfg: BenchConfig, run: int) -> dict:
    """One synthetic instance; returns metrics and (separately) timings."""
    gt, X = make_instance(cfg.spec, run_seed(cfg.spec.seed, run))
    t0 = time.perf_counter()
    res = learn(X, cfg.learn)
    t_prop = time.perf_counter() - t0
    L = res.L.L
    row = dict(run=run, balanced=bool(check_balance(L, laplacian=True).balanced
                                      and certificate_holds(L, res.beta)),
               sweeps=res.report["sweeps"], flips=int(sum(res.report["flips"])))
    row.update({f"proposed_{k}": v for k, v in _score(L, gt).items()})
    timing = dict(run=run, proposed_total=t_prop,
                  proposed_per_column=res.report["time_per_column"],
                  solver=res.report["solver"])
    if cfg.baseline == "clime-greedy":
        t0 = time.perf_counter()
        Lb = clime_greedy(build_sample_covariance(X).C, X.shape[1], cfg.clime)
        timing["baseline_total"] = time.perf_counter() - t0
        row.update({f"baseline_{k}": v for k, v in _score(Lb.L, gt).items()})
    return dict(row=row, timing=timing)


def aggregate(rows: List[dict]) -> dict:
    out = {}
    keys = [k for k in rows[0] if k.startswith(("proposed_", "baseline_"))]
    for k in keys:
        v = np.array([r[k] for r in rows], dtype=float)
        out[k] = dict(mean=float(v.mean()), std=float(v.std(ddof=0)))
    out["balanced_fraction"] = float(np.mean([r["balanced"] for r in rows]))
    return out


def run_bench(cfg: BenchConfig, workers: Optional[int] = None) -> dict:
    """All runs (in parallel when ``workers > 1``), aggregated.

    The returned ``report`` depends only on the configuration; wall-clock
    numbers live under ``timing`` so reports can be compared byte for byte.
    """
    workers = thread_cap() if workers is None else max(1, workers)
    idx = list(range(cfg.runs))
    if workers > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.runs)) as ex:
            outs = list(ex.map(run_one, [cfg] * cfg.runs, idx))
    else:
        outs = [run_one(cfg, r) for r in idx]
    rows = [o["row"] for o in outs]
    report = dict(config=asdict(cfg), runs=rows, aggregate=aggregate(rows))
    return dict(report=report, timing=[o["timing"] for o in outs])
