"""Command-line harness: ``run``, ``stats``, ``verify`` and ``plot``.

Examples:

    bpgmf run --algo cocain --data synthetic:200x200 --k 5 --reg l2 --lam0 0.1 \\
        --iters 1000 --seed 1 --out cocain.csv --plot cocain.svg
    bpgmf stats --data synthetic:200x200 --k 5 --reg r2 --seeds 50 --out-dir stats/
    bpgmf verify --suite prox-oracle --n 100 --seed 7
    bpgmf plot bpg.csv cocain.csv --y gap --out gap.svg

Any subcommand accepts ``--config PATH``: a file of ``key=value`` lines with
the same keys as the long flags (``true``/``false`` for switches). Values on
the command line win over the file.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .data import (
    DataFormatError,
    init_factors,
    load_movielens_with_ids,
    split_train_test,
    synthetic_dense,
    test_rmse,
)
from .kernels import kernel_for_problem
from .matrix import MaskedMatrix, atomic_write_text, read_dense_csv
from .optimizers import (
    BacktrackingError,
    BpgConfig,
    CoCaInConfig,
    PalmConfig,
    Trace,
    run_bpg,
    run_bpg_wb,
    run_cocain,
    run_ipalm,
    run_palm,
)
from .problems import BlockReg, Full, Masked, ProblemSpec

ALGOS = ("bpg", "bpg-wb", "cocain", "palm", "ipalm")
STATS_ALGOS = ("bpg", "bpg-wb", "cocain", "palm", "ipalm-0.2", "ipalm-0.4")
SUITES = ("cubic", "prox-oracle", "gradients", "lsmad", "hessian-bound", "cocain-certs")
# R1 = no regularizer, R2 = L2, R3 = L1
_REG_ALIASES = {"r1": "none", "r2": "l2", "r3": "l1"}


class CliError(Exception):
    """A user-facing error: printed without a traceback, exit status 2."""


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


# ---------------------------------------------------------------- config files


def _switches(parser: argparse.ArgumentParser) -> tuple[set[str], set[str]]:
    flags, switches = set(), set()
    for act in parser._actions:
        for opt in act.option_strings:
            if opt.startswith("--"):
                flags.add(opt)
                if act.nargs == 0:
                    switches.add(opt)
    return flags, switches


def config_tokens(path: str, parser: argparse.ArgumentParser) -> list[str]:
    """Translate a ``key=value`` file into long-flag tokens for ``parser``."""
    flags, switches = _switches(parser)
    tokens = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag not in flags or flag == "--config":
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        if flag in switches:
            if value.lower() not in ("true", "false"):
                raise CliError(f"{path}:{lineno}: {key} takes true or false, got {value!r}")
            if value.lower() == "true":
                tokens.append(flag)
        else:
            tokens += [flag, *value.split()]
    return tokens


def _expand_config(argv: list[str], subparsers: dict[str, argparse.ArgumentParser]) -> list[str]:
    # config values go right after the subcommand so later command-line flags override them
    if not argv or argv[0] not in subparsers:
        return argv
    rest, path = [], None
    it = iter(argv[1:])
    for tok in it:
        if tok == "--config":
            path = next(it, None)
            if path is None:
                raise CliError("--config needs a path")
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            rest.append(tok)
    if path is None:
        return argv
    return [argv[0], *config_tokens(path, subparsers[argv[0]]), *rest]


# ---------------------------------------------------------------- problem setup


@dataclass
class Setup:
    problem: ProblemSpec
    test: Optional[MaskedMatrix]
    default_iters: int


def _regs(args) -> tuple[BlockReg, BlockReg]:
    kind = _REG_ALIASES.get(args.reg, args.reg)
    w_u = args.lam0 if args.lam1 is None else args.lam1
    w_z = args.lam0 if args.lam2 is None else args.lam2
    def one(w):
        if kind == "none":
            return BlockReg(nonneg=args.nonneg)
        return BlockReg(nonneg=args.nonneg, **{kind: w})
    return one(w_u), one(w_z)


def load_setup(args) -> Setup:
    """Build the problem named by ``--data`` and the regularizer flags."""
    kind, _, rest = args.data.partition(":")
    if not rest:
        raise CliError(f"--data {args.data!r}: expected synthetic:MxN, csv:PATH, masked:PATH or movielens:PATH")
    test = None
    default_iters = 1000
    if kind == "synthetic":
        try:
            m, n = (int(v) for v in rest.lower().split("x"))
        except ValueError:
            raise CliError(f"--data {args.data!r}: size must look like 200x200") from None
        if m < 1 or n < 1:
            raise CliError("--data synthetic sizes must be >= 1")
        data = Full(synthetic_dense(m, n, args.data_seed))
    elif kind in ("csv", "masked", "movielens"):
        if not Path(rest).is_file():
            raise CliError(f"--data {args.data!r}: file {rest} does not exist")
        try:
            if kind == "csv":
                data = Full(read_dense_csv(rest))
            else:
                if kind == "masked":
                    mm = MaskedMatrix.load(rest)
                else:
                    mm, ids = load_movielens_with_ids(rest, args.ml_format)
                    if args.out:
                        ids.save(args.idmap or f"{args.out}.idmap.csv")
                    default_iters = 500
                if args.no_split:
                    train = mm
                else:
                    ds = split_train_test(mm, args.split_frac, args.split_seed)
                    train, test = ds.train, ds.test
                data = Masked(train)
        except (DataFormatError, ValueError) as exc:
            raise CliError(str(exc)) from None
    else:
        raise CliError(f"--data: unknown source {kind!r} (synthetic, csv, masked, movielens)")
    reg_u, reg_z = _regs(args)
    try:
        p = ProblemSpec.build(data, args.k, reg_u, reg_z, l2_in_smooth=args.l2_in_smooth)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return Setup(p, test, default_iters)


def _algo_runner(algo: str, args, iters: int, seed: int) -> Callable:
    init = (args.init_lo, args.init_hi)
    if algo == "bpg":
        cfg = BpgConfig(lam=args.lam, max_iters=iters, seed=seed, init_range=init, tol=args.tol)
        return lambda p, **kw: run_bpg(p, cfg, **kw)
    if algo in ("cocain", "bpg-wb"):
        cfg = CoCaInConfig(delta=args.delta, eps=args.eps, lbar0=args.lbar0, nu=args.nu,
                           max_iters=iters, seed=seed, init_range=init, tol=args.tol)
        fn = run_cocain if algo == "cocain" else run_bpg_wb
        return lambda p, **kw: fn(p, cfg, **kw)
    if algo == "palm":
        cfg = PalmConfig(beta=0.0, max_iters=iters, seed=seed, init_range=init)
        return lambda p, **kw: run_palm(p, cfg, **kw)
    if algo.startswith("ipalm"):
        beta = float(algo.split("-", 1)[1]) if "-" in algo else args.beta
        cfg = PalmConfig(beta=beta, max_iters=iters, seed=seed, init_range=init)
        return lambda p, **kw: run_ipalm(p, cfg, **kw)
    raise CliError(f"unknown algorithm {algo!r}")


def run_algo(algo: str, setup: Setup, args, seed: int, x0=None) -> Trace:
    iters = args.iters or setup.default_iters
    runner = _algo_runner(algo, args, iters, seed)
    eval_fn = (lambda x: test_rmse(x, setup.test)) if setup.test is not None else None
    try:
        return runner(setup.problem, x0=x0, eval_fn=eval_fn)
    except (ValueError, BacktrackingError) as exc:
        raise CliError(f"{algo}: {exc}") from None


# ---------------------------------------------------------------- subcommands


def cmd_run(args) -> int:
    from .plotting import plot_traces
    from .tracefile import read_trace, write_trace

    setup = load_setup(args)
    trace = run_algo(args.algo, setup, args, args.seed)
    write_trace(args.out, trace, record_time=args.record_time)
    if args.plot:
        y = "test_rmse" if setup.test is not None and args.plot_y == "test_rmse" else "objective"
        plot_traces([read_trace(args.out)], [trace.algo], "iter", y, args.plot)
    print(f"{trace.algo}: {len(trace.records)} iterations, final objective {trace.final_objective!r} -> {args.out}")
    return 0


def _stats_worker(payload):
    args, seed = payload
    setup = load_setup(args)
    m, n, k = setup.problem.dims
    x0 = init_factors(m, n, k, seed, args.init_lo, args.init_hi)
    return [(seed, algo, run_algo(algo, setup, args, seed, x0=x0).final_objective) for algo in args.algos]


def cmd_stats(args) -> int:
    from .plotting import plot_final_objectives

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    args.out = None  # no id map per seed
    payloads = [(args, s) for s in range(args.seed, args.seed + args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_stats_worker, payloads))
    else:
        results = [_stats_worker(pl) for pl in payloads]
    rows = [r for chunk in results for r in chunk]
    lines = ["seed,algo,final_objective"] + [f"{s},{a},{v!r}" for s, a, v in rows]
    atomic_write_text(out / "finals.csv", "\n".join(lines) + "\n")
    finals = {a: [v for _, b, v in rows if b == a] for a in args.algos}
    summary = ["algo,n,min,q25,median,q75,max,mean"]
    for a, vals in finals.items():
        q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
        summary.append(",".join([a, str(len(vals)), *(repr(float(v)) for v in q), repr(float(np.mean(vals)))]))
    atomic_write_text(out / "summary.csv", "\n".join(summary) + "\n")
    plot_final_objectives(finals, out / "finals.svg")
    print("\n".join(summary))
    return 0


def _verify_reports(suite: str, n: int, seed: int):
    from . import oracle

    if suite == "cubic":
        return [oracle.cubic_residual_check(n, seed), oracle.quintic_residual_check(n, seed + 1),
                oracle.quintic_parity_check(min(n, 100), seed + 2)]
    if suite == "prox-oracle":
        return [oracle.prox_oracle_check(kind, n, seed) for kind in oracle.PROX_KINDS]
    probs = oracle.matched_problems(seed)
    if suite == "gradients":
        return [oracle.grad_check(p, n, seed) for p in probs.values()]
    if suite == "lsmad":
        return [oracle.lsmad_check(p, kernel_for_problem(p), 1.0, n, seed) for p in probs.values()]
    if suite == "hessian-bound":
        return [oracle.hessian_bound_check(p, n, seed) for p in probs.values()]
    if suite == "cocain-certs":
        reports = []
        a = synthetic_dense(30, 20, seed)
        for name in ("none", "l2", "l1"):
            reg = BlockReg() if name == "none" else BlockReg(**{name: 0.1})
            p = ProblemSpec.build(Full(a), 3, reg, reg)
            rep = oracle.cocain_certificate_check(p, CoCaInConfig(max_iters=n, seed=seed))
            rep.name = f"cocain-certs-{name}"
            reports.append(rep)
        return reports
    raise CliError(f"unknown suite {suite!r}")


def cmd_verify(args) -> int:
    reports = _verify_reports(args.suite, args.n, args.seed)
    for r in reports:
        print(r.line())
    if args.report:
        lines = ["check,samples,worst_violation,passed"]
        lines += [f"{r.name},{r.samples},{r.worst_violation!r},{int(r.passed)}" for r in reports]
        atomic_write_text(args.report, "\n".join(lines) + "\n")
    failed = [r.name for r in reports if not r.passed]
    print(f"{args.suite}: {len(reports) - len(failed)}/{len(reports)} checks passed")
    return 1 if failed else 0


def cmd_plot(args) -> int:
    from .plotting import plot_traces
    from .tracefile import read_trace

    labels = args.labels.split(",") if args.labels else [Path(t).stem for t in args.traces]
    if len(labels) != len(args.traces):
        raise CliError(f"--labels has {len(labels)} names for {len(args.traces)} traces")
    try:
        traces = [read_trace(t) for t in args.traces]
        plot_traces(traces, labels, args.x, args.y, args.out)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc)) from None
    return 0


# ---------------------------------------------------------------- parser


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--data", required=True,
                   help="synthetic:MxN | csv:PATH (dense) | masked:PATH | movielens:PATH")
    g.add_argument("--data-seed", type=int, default=0, help="generator seed for synthetic data")
    g.add_argument("--ml-format", default="ml100k", choices=("ml100k", "ml1m", "ml10m"))
    g.add_argument("--k", type=_positive_int, default=5, help="factor rank K")
    g.add_argument("--reg", default="none", choices=("none", "l2", "l1", "nuclear", "r1", "r2", "r3"),
                   help="block regularizer (r1=none, r2=l2, r3=l1)")
    g.add_argument("--lam0", type=_nonneg_float, default=0.1, help="regularization weight")
    g.add_argument("--lam1", type=_nonneg_float, help="U-block weight (default --lam0)")
    g.add_argument("--lam2", type=_nonneg_float, help="Z-block weight (default --lam0)")
    g.add_argument("--nonneg", action="store_true", help="constrain both factors to be nonnegative")
    g.add_argument("--l2-in-smooth", action="store_true", help="treat the L2 term as part of g")
    g.add_argument("--split-frac", type=float, default=0.8)
    g.add_argument("--split-seed", type=int, default=0)
    g.add_argument("--no-split", action="store_true", help="train on all observed entries")
    o = p.add_argument_group("optimizer")
    o.add_argument("--iters", type=_positive_int, help="iterations (default 1000, 500 for MovieLens)")
    o.add_argument("--lam", type=float, default=0.99, help="BPG-MF step size")
    o.add_argument("--beta", type=_nonneg_float, default=0.0, help="iPALM inertia")
    o.add_argument("--delta", type=float, default=0.99)
    o.add_argument("--eps", type=float, default=1e-4)
    o.add_argument("--lbar0", type=float, default=1e-3)
    o.add_argument("--nu", type=float, default=2.0)
    o.add_argument("--tol", type=float, help="stop when ||x+ - x|| / step < tol")
    o.add_argument("--init-lo", type=float, default=0.0)
    o.add_argument("--init-hi", type=float, default=0.1)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="bpgmf", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("run", help="run one optimizer and write its trace CSV")
    p.add_argument("--algo", required=True, choices=ALGOS)
    p.add_argument("--seed", type=int, default=0, help="initialization seed")
    _add_problem_flags(p)
    p.add_argument("--out", required=True, help="trace CSV path")
    p.add_argument("--plot", help="also write an SVG plot of the trace")
    p.add_argument("--plot-y", default="objective", choices=("objective", "test_rmse"))
    p.add_argument("--idmap", help="id map path for MovieLens (default OUT.idmap.csv)")
    p.add_argument("--record-time", action="store_true",
                   help="fill elapsed_sec (makes the CSV run-dependent)")
    p.add_argument("--config", help="key=value file with defaults for these flags")
    p.set_defaults(func=cmd_run)
    subs["run"] = p

    p = sub.add_parser("stats", help="final objectives of several optimizers over many seeds")
    p.add_argument("--algos", nargs="+", default=list(STATS_ALGOS))
    p.add_argument("--seeds", type=_positive_int, default=50)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    _add_problem_flags(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_stats, idmap=None, record_time=False)
    subs["stats"] = p

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--n", type=_positive_int, default=100, help="samples per check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="CSV report path")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p

    p = sub.add_parser("plot", help="SVG chart of trace files")
    p.add_argument("traces", nargs="+")
    p.add_argument("--x", default="iter", choices=("iter", "time"))
    p.add_argument("--y", default="objective", choices=("objective", "gap", "test_rmse"))
    p.add_argument("--labels", help="comma-separated legend names")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_plot)
    subs["plot"] = p
    return parser, subs


def main(argv: Optional[list[str]] = None) -> int:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_expand_config(argv, subs))
        if args.command == "stats":
            unknown = [a for a in args.algos if a not in ALGOS and not _is_ipalm(a)]
            if unknown:
                parser.error(f"unknown algorithms {unknown}; use {', '.join(ALGOS)} or ipalm-BETA")
        return args.func(args)
    except CliError as exc:
        print(f"bpgmf: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bpgmf: error: {exc}", file=sys.stderr)
        return 1


def _is_ipalm(name: str) -> bool:
    head, _, beta = name.partition("-")
    if head != "ipalm" or not beta:
        return False
    try:
        return 0 <= float(beta) < 1 and math.isfinite(float(beta))
    except ValueError:
        return False


if __name__ == "__main__":
    sys.exit(main())
