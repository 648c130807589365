"""Command line: ``bsgl learn | synth-bench | restore``.

Exit codes: 0 success, 2 bad input, 3 solver failure, 4 violated precondition.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import List, Optional


from . import io as bio
from .bench import BenchConfig, run_bench
from .core import ObservationMatrix, SignedLaplacian
from .errors import InputError, ParameterError, PreconditionError, SolverError
from .learner import LearnConfig, learn
from .metrics import mse
from .restore import bandlimited_denoise, interpolate
from .selection import RhoSearchConfig
from .slp.column import SolverConfig
from .synth import SynthSpec

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_PRECONDITION = 0, 2, 3, 4


def _learn_config(a) -> LearnConfig:
    solver = SolverConfig(retry_gamma=(), **{k: v for k, v in dict(gamma=a.gamma, tol=a.tol).items()
                                             if v is not None})
    search = RhoSearchConfig(delta=a.delta)
    return LearnConfig(mode=a.mode, max_sweeps=a.max_sweeps, search=search, solver=solver,
                       seed=a.seed)


def cmd_learn(a) -> int:
    X = bio.read_matrix(a.input, a.input_format, header=a.header)
    obs = ObservationMatrix(X)
    progress = open(a.progress, "w", encoding="utf-8") if a.progress else None
    try:
        res = learn(obs, _learn_config(a), progress=progress)
    finally:
        if progress is not None:
            progress.close()
    bio.write_matrix(a.out, res.L.L, a.format)
    if a.polarity:
        bio.write_polarity(a.polarity, res.beta)
    if a.report:
        bio.write_report(a.report, dict(command="learn", config=_echo(a), result=res.report))
    return EXIT_OK


def cmd_synth_bench(a) -> int:
    spec = SynthSpec(n_nodes=a.nodes, n_obs=a.obs, edge_prob=a.edge_prob,
                     noise_sigma=a.noise, seed=a.seed)
    cfg = BenchConfig(spec=spec, runs=a.runs, baseline=a.baseline,
                      learn=_learn_config(a))
    out = run_bench(cfg)
    report = out["report"]
    bio.write_report(a.report, report)
    if a.runs_csv:
        _write_rows(a.runs_csv, report["runs"])
    if a.timing:
        bio.write_report(a.timing, dict(timing=out["timing"]))
    return EXIT_OK


def _write_rows(path, rows: List[dict]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def cmd_restore(a) -> int:
    L = bio.read_matrix(a.laplacian, a.format)
    beta = bio.read_polarity(a.polarity)
    Lb = SignedLaplacian(L, beta)  # an inconsistent certificate raises PreconditionError
    y = bio.read_vector_csv(a.signal)
    if y.size != Lb.n_nodes:
        raise InputError(f"signal has {y.size} entries, Laplacian has {Lb.n_nodes} nodes")
    info = {}
    if a.task == "denoise":
        x = bandlimited_denoise(Lb, y, a.band)
    else:
        if not a.mask:
            raise InputError("interpolate needs --mask")
        mask = bio.read_vector_csv(a.mask) != 0
        r = interpolate(Lb, y, mask, cutoff_frac=a.band, iters=a.iters, tol=a.itol,
                        response=a.response)
        x = r.x
        info = dict(iterations=r.iterations, converged=r.converged)
    bio.write_vector_csv(a.out, x)
    if a.report:
        rep = dict(command="restore", task=a.task, config=_echo(a), **info)
        if a.truth:
            t = bio.read_vector_csv(a.truth)
            rep.update(mse=mse(x, t), mse_input=mse(y, t))
        bio.write_report(a.report, rep)
    return EXIT_OK


def _echo(a) -> dict:
    return {k: v for k, v in vars(a).items() if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bsgl", description="Balanced signed graph learning.")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_opts(sp):
        sp.add_argument("--mode", choices=["auto", "dense", "tall"], default="auto")
        sp.add_argument("--delta", type=float, default=None,
                        help="fixed rho step (default: relative to the floor)")
        sp.add_argument("--gamma", type=float, default=None, help="ADMM penalty")
        sp.add_argument("--tol", type=float, default=None, help="ADMM tolerance")
        sp.add_argument("--max-sweeps", type=int, default=20)
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("learn", help="learn a balanced Laplacian from observations")
    s.add_argument("--input", required=True, help="N x K observations (rows = nodes)")
    s.add_argument("--input-format", choices=["csv", "mm"], default="csv")
    s.add_argument("--header", action="store_true", help="skip a header line in the input")
    s.add_argument("--out", required=True, help="output Laplacian")
    s.add_argument("--format", choices=["csv", "mm"], default="csv")
    s.add_argument("--polarity", help="output polarity JSON")
    s.add_argument("--progress", help="per-sweep JSON lines")
    s.add_argument("--report", help="run report JSON")
    solver_opts(s)
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("synth-bench", help="synthetic benchmark")
    s.add_argument("--nodes", type=int, default=50)
    s.add_argument("--obs", type=int, default=500)
    s.add_argument("--edge-prob", type=float, default=0.2)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--baseline", choices=["none", "clime-greedy"], default="none")
    s.add_argument("--report", required=True, help="aggregate report JSON")
    s.add_argument("--runs-csv", help="per-run metrics CSV")
    s.add_argument("--timing", help="wall-clock timings JSON (kept out of the report)")
    solver_opts(s)
    s.set_defaults(func=cmd_synth_bench)

    s = sub.add_parser("restore", help="denoise or interpolate a signal")
    s.add_argument("task", choices=["denoise", "interpolate"])
    s.add_argument("--laplacian", required=True)
    s.add_argument("--format", choices=["csv", "mm"], default="csv")
    s.add_argument("--polarity", required=True)
    s.add_argument("--signal", required=True)
    s.add_argument("--mask", help="0/1 vector of observed nodes (interpolate)")
    s.add_argument("--band", type=float, default=0.3)
    s.add_argument("--response", choices=["smooth", "band"], default="smooth",
                   help="interpolation filter: smooth roll-off or ideal band projection")
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--itol", type=float, default=1e-8)
    s.add_argument("--truth", help="clean signal for the MSE report")
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_restore)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"bsgl: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SolverError as exc:
        print(f"bsgl: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, ParameterError, OSError, json.JSONDecodeError) as exc:
        print(f"bsgl: bad input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
