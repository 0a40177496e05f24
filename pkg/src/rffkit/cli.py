"""Command-line front end.

    rffkit gram       --data pts.csv --kernel "gaussian(sigma=1)" [--out gram.csv]
    rffkit check-pd   --data pts.csv --kernel K [--tol T] [--out report.json]
    rffkit check-cnd  --data pts.csv --kernel K [--tol T] [--out report.json]
    rffkit mercer     --input gram.csv [--out features.csv]
    rffkit rff-approx --data pts.csv --sigma 1.0 --dim 1024 --seed 7 --out report.json
    rffkit bounds     hoeffding|bernstein|rff-d [--json] ...
    rffkit verify     rff-pair|rff-gram --trials T --seed S [--out report.json]
    rffkit svm-demo   --data train.csv --kernel K [--rff-dim D --seed S] --out model.json

Exit codes: 0 success, 1 a checked property failed (not p.d., not c.n.d.,
bound violated), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import concentration as conc
from . import datasets, rff
from .grammar import KernelSyntaxError, parse_kernel
from .kernels import Gaussian, KernelExpr, certify_cnd, certify_pd, gram
from .linalg import (
    Definiteness,
    HermitianMatrix,
    intrinsic_dim,
    read_matrix_csv,
    spectral_norm,
    stable_rank,
    write_matrix_csv,
)
from .report import VERSION_STRING, atomic_write, dumps
from .rkhs import mercer_factorize
from .svm import TrainingSet, predict_many, solve_dual, training_accuracy

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "RFFKIT_SEED"

FINITE_SET_NOTE = "verdict covers the given points only; it is evidence, not proof, for the whole domain"


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    kernel: Optional[str] = None
    sigma: Optional[float] = None
    D: Optional[int] = None
    eps: Optional[float] = None
    delta: Optional[float] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    output_format: str = "json"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("extra", "out") and v is not None}
        d.update({k: v for k, v in self.extra.items() if v is not None})
        return d


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _report(config: ExperimentConfig, body: dict) -> str:
    return dumps({"version": VERSION_STRING, "config": config.to_dict(), **body})


def _load_points(path: str, labels: bool = False) -> datasets.Dataset:
    return datasets.parse_dataset(path, has_labels=labels)


def _kernel(text: str, points) -> KernelExpr:
    return parse_kernel(text, points)


# --- subcommands ------------------------------------------------------------------


def cmd_gram(args) -> int:
    ds = _load_points(args.data)
    k = _kernel(args.kernel, ds.points)
    g = gram(k, ds.points, threads=args.threads)
    if args.format == "json":
        cfg = ExperimentConfig("gram", kernel=k.to_text(), extra={"data": args.data, "n": ds.n_rows, "d": ds.n_cols})
        ent = g.entries
        body = {"gram": ent.tolist() if g.is_real else [[[z.real, z.imag] for z in row] for row in ent]}
        _emit(_report(cfg, body), args.out)
    else:
        _emit(write_matrix_csv(g), args.out)
    return EXIT_OK


def _cmd_certify(args, mode: str) -> int:
    ds = _load_points(args.data)
    k = _kernel(args.kernel, ds.points)
    if mode == "pd":
        verdict = certify_pd(k, ds.points, args.tol, threads=args.threads)
        failed = verdict.kind is Definiteness.NOT_PD
    else:
        if ds.n_rows < 2:
            raise UsageError("check-cnd needs at least 2 points (n >= 2)")
        verdict = certify_cnd(k, ds.points, args.tol, threads=args.threads)
        failed = verdict.kind is Definiteness.NOT_CND
    cfg = ExperimentConfig(
        f"check-{mode}", kernel=k.to_text(), extra={"data": args.data, "n": ds.n_rows, "d": ds.n_cols, "tol": args.tol}
    )
    body = {"verdict": verdict.to_dict(), "note": FINITE_SET_NOTE}
    _emit(_report(cfg, body), args.out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_check_pd(args) -> int:
    return _cmd_certify(args, "pd")


def cmd_check_cnd(args) -> int:
    return _cmd_certify(args, "cnd")


def cmd_mercer(args) -> int:
    with open(args.input) as fh:
        g = HermitianMatrix(read_matrix_csv(fh))
    mm = mercer_factorize(g)
    if args.report:
        cfg = ExperimentConfig("mercer", extra={"input": args.input, "n": g.dim})
        body = {"reconstruction_max_error": mm.reconstruction_error(), "max_abs_gram": float(np.max(np.abs(g.entries)))}
        atomic_write(args.report, _report(cfg, body))
    _emit(write_matrix_csv(mm.features), args.out)
    return EXIT_OK


def cmd_rff_approx(args) -> int:
    ds = _load_points(args.data)
    seed = args.seed if args.seed is not None else _default_seed()
    fm = rff.sample_feature_map(ds.n_cols, args.dim, args.sigma, seed)
    est = rff.estimate_gram(fm, ds.points)
    exact = rff.exact_gaussian_gram(ds.points, args.sigma, threads=args.threads)
    diff = est.entries - exact.entries
    gnorm = spectral_norm(exact)
    cfg = ExperimentConfig("rff-approx", sigma=args.sigma, D=args.dim, seed=seed, extra={"data": args.data, "n": ds.n_rows})
    body = {
        "feature_map": fm.to_dict(),
        "max_abs_entry_error": float(np.max(np.abs(diff))),
        "spectral_error": spectral_norm(HermitianMatrix(diff)),
        "relative_spectral_error": spectral_norm(HermitianMatrix(diff)) / gnorm,
        "gram_norm": gnorm,
        "intrinsic_dim": intrinsic_dim(exact),
        "relative_error_bound": conc.rff_relative_error_bound(ds.n_rows, intrinsic_dim(exact), args.dim),
    }
    _emit(_report(cfg, body), args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    which = args.which
    cfg = ExperimentConfig(f"bounds {which}")
    if which == "hoeffding":
        if args.range:
            ranges = [tuple(r) for r in args.range]
        else:
            if args.n is None:
                raise UsageError("hoeffding needs --range A B (repeatable) or --n with --a/--b")
            ranges = [(args.a, args.b)] * args.n
        cfg.extra = {"ranges": [list(r) for r in ranges], "t": args.t, "sides": args.sides}
        body = {"bound": conc.hoeffding_tail(ranges, args.t, sides=args.sides)}
    elif which == "bernstein":
        q = conc.MatrixBernsteinQuery(args.n_summands, args.L, args.v, args.d1, args.d2)
        cfg.extra = {"n_summands": q.n_summands, "L": q.L, "v": q.v, "d1": q.d1, "d2": q.d2, "t": args.t}
        body = {"expectation_bound": conc.bernstein_expectation_bound(q)}
        if args.t is not None:
            body["tail_bound"] = conc.bernstein_tail_bound(q, args.t)
    else:
        if args.n is None or args.eps is None:
            raise UsageError("rff-d needs --n and --eps")
        if args.method == "hoeffding":
            if args.delta is None:
                raise UsageError("rff-d --method hoeffding needs --delta in (0, 1)")
            D = conc.rff_min_D_hoeffding(args.n, args.eps, args.delta)
        else:
            if args.intdim is None:
                raise UsageError("rff-d --method bernstein needs --intdim in [1, n]")
            D = conc.rff_min_D_bernstein(args.n, args.intdim, args.eps, statement_constant=args.statement_constant)
        cfg.eps, cfg.delta = args.eps, args.delta
        cfg.extra = {"n": args.n, "method": args.method, "intdim": args.intdim}
        body = {"D": D}
    if args.text:
        for k, v in body.items():
            sys.stdout.write(f"{k} = {v!r}\n")
    else:
        _emit(_report(cfg, body), args.out)
    return EXIT_OK


def _write_tidy(path: str, values: np.ndarray, name: str) -> None:
    lines = [f"trial,{name}"] + [f"{i},{format(float(v), '.17g')}" for i, v in enumerate(values)]
    atomic_write(path, "\n".join(lines) + "\n")


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.trials is None:
        args.trials = 1000 if args.which == "rff-pair" else 50
    if args.which == "rff-pair":
        if args.trials < 100:
            raise UsageError("verify rff-pair needs --trials >= 100")
        if args.data:
            pts = _load_points(args.data).points[:2]
            if pts.shape[0] < 2:
                raise UsageError("verify rff-pair needs a dataset with at least 2 rows")
        else:
            pts = datasets.gaussian_points(2, 5, seed, 0.5)
        eps = args.eps if args.eps is not None else 0.3
        delta = args.delta if args.delta is not None else 0.05
        D = args.dim if args.dim is not None else conc.rff_min_D_hoeffding(1, eps, delta)
        sampler = conc.rff_pair_error(pts[0], pts[1], args.sigma, D)
        values = conc.run_trials(sampler, args.trials, seed, threads=args.threads)
        tail = conc.tail_from_values(values, eps, strict=True)
        bound = conc.hoeffding_tail([(-2.0, 2.0)] * D, D * eps, sides="two")
        cfg = ExperimentConfig(
            "verify rff-pair", sigma=args.sigma, D=D, eps=eps, delta=delta, trials=args.trials, seed=seed,
            extra={"x": pts[0].tolist(), "y": pts[1].tolist(), "data": args.data},
        )
        rep = conc.tail_report(bound, tail, cfg.to_dict())
        body = rep.to_dict()
        body["statistic"] = "P(|estimate - kernel| > eps)"
    else:
        if args.trials < 10:
            raise UsageError("verify rff-gram needs --trials >= 10")
        pts = _load_points(args.data).points if args.data else datasets.clustered_points(16, 3, seed)
        g = rff.exact_gaussian_gram(pts, args.sigma)
        idim = intrinsic_dim(g)
        eps = args.eps if args.eps is not None else 0.5
        D = args.dim if args.dim is not None else conc.rff_min_D_bernstein(len(pts), idim, eps)
        res = conc.empirical_matrix_error(pts, args.sigma, D, args.trials, seed, threads=args.threads)
        values = res.relative_errors
        bound = conc.rff_relative_error_bound(len(pts), idim, D)
        cfg = ExperimentConfig(
            "verify rff-gram", sigma=args.sigma, D=D, eps=eps, trials=args.trials, seed=seed,
            extra={"n": len(pts), "d": pts.shape[1], "data": args.data},
        )
        rep = conc.mean_report(bound, values, cfg.to_dict())
        body = rep.to_dict()
        body["interval_method"] = "normal approximation to the mean"
        body["statistic"] = "E||R_D - G|| / ||G||"
        body["intrinsic_dim"] = idim
        body["gram_norm"] = res.gram_norm
    body.pop("config", None)
    body.pop("trials", None)
    if args.tidy:
        _write_tidy(args.tidy, values, "value")
    _emit(_report(cfg, body), args.out)
    return EXIT_FAIL if body["verdict"] == "violated" else EXIT_OK


def cmd_svm_demo(args) -> int:
    ds = _load_points(args.data, labels=True)
    ts = TrainingSet(ds.points, ds.labels)
    k = _kernel(args.kernel, ds.points)
    seed = args.seed if args.seed is not None else _default_seed()
    extra = {"data": args.data, "n": ds.n_rows, "d": ds.n_cols, "C": None if math.isinf(args.C) else args.C}
    if args.rff_dim is not None:
        if not isinstance(k, Gaussian):
            raise UsageError("--rff-dim needs a plain gaussian(sigma=...) kernel")
        fm = rff.sample_feature_map(ds.n_cols, args.rff_dim, k.sigma, seed)
        train_kernel: KernelExpr = rff.RffKernel(fm)
        extra["feature_map"] = fm.to_dict()
    else:
        train_kernel = k
    sol = solve_dual(ts, train_kernel, C=args.C, max_iter=args.max_iter, tol=args.tol)
    cfg = ExperimentConfig("svm-demo", kernel=k.to_text(), seed=seed if args.rff_dim is not None else None, D=args.rff_dim, extra=extra)
    body = {
        "model": sol.to_dict(),
        "training_accuracy": training_accuracy(sol, ts, train_kernel),
        "train_predictions": [int(v) for v in predict_many(sol, ts, train_kernel, ds.points)],
    }
    _emit(_report(cfg, body), args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def _pos_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _pos_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rffkit", description="Kernel algebra, random Fourier features and concentration bounds.")
    p.add_argument("--version", action="version", version=VERSION_STRING)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_pos_int, default=1, help="cap on worker threads (>= 1); output does not depend on it")
    common.add_argument("--out", help="output path, written atomically (default: stdout)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("gram", parents=[common], help="Gram matrix of a kernel on a dataset")
    g.add_argument("--data", required=True, help="CSV of points, one per row")
    g.add_argument("--kernel", required=True, help='kernel expression, e.g. "gaussian(sigma=1)"')
    g.add_argument("--format", choices=("csv", "json"), default="csv", help="csv: matrix exchange format (default); json: report")
    g.set_defaults(func=cmd_gram)

    for name, func, what in (("check-pd", cmd_check_pd, "positive definite"), ("check-cnd", cmd_check_cnd, "conditionally negative definite (n >= 2)")):
        c = sub.add_parser(name, parents=[common], help=f"certify a kernel {what} on a dataset")
        c.add_argument("--data", required=True, help="CSV of points")
        c.add_argument("--kernel", required=True, help="kernel expression")
        c.add_argument("--tol", type=_nonneg_float, default=None, help="eigenvalue tolerance >= 0 (default 1e-8 * max(1, ||A||))")
        c.set_defaults(func=func)

    m = sub.add_parser("mercer", parents=[common], help="Mercer feature map of a p.d. Gram matrix")
    m.add_argument("--input", required=True, help="Gram matrix CSV (n real or 2n interleaved re/im columns)")
    m.add_argument("--report", help="optional JSON report with the reconstruction error")
    m.set_defaults(func=cmd_mercer)

    r = sub.add_parser("rff-approx", parents=[common], help="RFF estimate of a Gaussian Gram matrix")
    r.add_argument("--data", required=True, help="CSV of points")
    r.add_argument("--sigma", type=_pos_float, default=1.0, help="Gaussian bandwidth (> 0)")
    r.add_argument("--dim", type=_pos_int, required=True, help="number of random features D (>= 1)")
    r.add_argument("--seed", type=int, default=None, help=f"feature seed (default ${SEED_ENV} or 0)")
    r.set_defaults(func=cmd_rff_approx)

    b = sub.add_parser("bounds", parents=[common], help="evaluate an analytic bound")
    b.add_argument("which", choices=("hoeffding", "bernstein", "rff-d"))
    fmt = b.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (the default)")
    fmt.add_argument("--text", action="store_true", help="plain key = value lines on stdout")
    b.add_argument("--t", type=_pos_float, default=None, help="deviation threshold t (> 0)")
    b.add_argument("--range", nargs=2, type=float, action="append", metavar=("A", "B"), help="hoeffding: summand range [A, B], B > A (repeatable)")
    b.add_argument("--n", type=_pos_int, default=None, help="hoeffding: number of summands; rff-d: number of points")
    b.add_argument("--a", type=float, default=0.0, help="hoeffding: common lower end")
    b.add_argument("--b", type=float, default=1.0, help="hoeffding: common upper end (> a)")
    b.add_argument("--sides", choices=("one", "two"), default="one", help="hoeffding: one- or two-sided event")
    b.add_argument("--n-summands", type=_pos_int, default=1, help="bernstein: number of summands")
    b.add_argument("--L", type=_pos_float, default=1.0, help="bernstein: norm bound L (> 0)")
    b.add_argument("--v", type=_nonneg_float, default=1.0, help="bernstein: variance statistic v (>= 0)")
    b.add_argument("--d1", type=_pos_int, default=1, help="bernstein: row dimension")
    b.add_argument("--d2", type=_pos_int, default=1, help="bernstein: column dimension")
    b.add_argument("--eps", type=_pos_float, default=None, help="rff-d: accuracy eps (> 0; < 1 for bernstein)")
    b.add_argument("--delta", type=_pos_float, default=None, help="rff-d: failure probability in (0, 1)")
    b.add_argument("--method", choices=("hoeffding", "bernstein"), default="hoeffding", help="rff-d: entrywise (hoeffding) or spectral (bernstein) guarantee")
    b.add_argument("--intdim", type=float, default=None, help="rff-d bernstein: intrinsic dimension in [1, n]")
    b.add_argument("--statement-constant", action="store_true", help="rff-d bernstein: constant 16 instead of 4")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", parents=[common], help="Monte Carlo check of an RFF bound")
    v.add_argument("which", choices=("rff-pair", "rff-gram"))
    v.add_argument("--trials", type=_pos_int, default=None, help="trials (rff-pair >= 100, default 1000; rff-gram >= 10, default 50)")
    v.add_argument("--seed", type=int, default=None, help=f"base seed (default ${SEED_ENV} or 0)")
    v.add_argument("--dim", type=_pos_int, default=None, help="features D (default: from the matching D formula)")
    v.add_argument("--sigma", type=_pos_float, default=1.0, help="Gaussian bandwidth (> 0)")
    v.add_argument("--eps", type=_pos_float, default=None, help="accuracy eps (rff-pair default 0.3, rff-gram default 0.5)")
    v.add_argument("--delta", type=_pos_float, default=None, help="rff-pair: failure probability in (0, 1), default 0.05")
    v.add_argument("--data", help="optional points CSV (default: seeded synthetic points)")
    v.add_argument("--tidy", help="optional tidy CSV of per-trial statistics")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("svm-demo", parents=[common], help="train the kernel SVM dual on a labelled CSV")
    s.add_argument("--data", required=True, help="CSV: feature columns then a +1/-1 label column")
    s.add_argument("--kernel", required=True, help="kernel expression")
    s.add_argument("--rff-dim", type=_pos_int, default=None, help="replace a gaussian kernel by D random features")
    s.add_argument("--seed", type=int, default=None, help=f"feature seed (default ${SEED_ENV} or 0)")
    s.add_argument("--C", type=_pos_float, default=math.inf, help="box bound C > 0 (default: hard margin)")
    s.add_argument("--tol", type=_pos_float, default=1e-6, help="KKT tolerance (> 0)")
    s.add_argument("--max-iter", type=_pos_int, default=100_000, help="cap on pair updates")
    s.set_defaults(func=cmd_svm_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, KernelSyntaxError, datasets.DatasetError, ValueError) as exc:
        sys.stderr.write(f"rffkit {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"rffkit {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
