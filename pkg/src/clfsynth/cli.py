"""Command-line entry point: ``clfsynth solve|verify|bench|simulate``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cegis import CegisConfig, choose_level, synthesize, verify_clf
from .falsifier import FalsifierUnknown
from .model import ProblemError, ProblemInstance, benchmark_path, read_problem
from .report import (
    RunReport,
    bench_row,
    build_report,
    exit_code,
    format_table,
    read_clf,
    write_bench_csv,
)
from .runtime import CertificateViolation, check_rws, dwell, make_controller, simulate, write_trace_csv

# bound on boxes spent on dwell-time bounds after a solve
DWELL_BUDGET = 2_000_000


class CliError(Exception):
    def __init__(self, status: str, message: str):
        super().__init__(message)
        self.status = status


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load(path: str) -> ProblemInstance:
    p = Path(path)
    if not p.exists():
        # bare names such as "sys06" refer to the bundled suite
        bundled = benchmark_path(path) if p.suffix == "" and p.parent == Path(".") else None
        if bundled is None or not bundled.exists():
            raise CliError("file-not-found", f"{path}: no such file")
        p = bundled
    try:
        return read_problem(p)
    except ProblemError as exc:
        raise CliError("parse-error", f"{p}: {exc}") from exc


def _with_overrides(inst: ProblemInstance, args) -> ProblemInstance:
    changes = {}
    if getattr(args, "eps_q", None) is not None:
        changes["eps_q"] = args.eps_q
    if getattr(args, "lam", None) is not None:
        changes["lam"] = args.lam
    return replace(inst, **changes) if changes else inst


def _config(inst: ProblemInstance, args) -> CegisConfig:
    eps_t = None
    if args.eps_t1 is not None or args.eps_t3 is not None:
        e1 = inst.eps_t1 if args.eps_t1 is None else args.eps_t1
        e3 = inst.eps_t3 if args.eps_t3 is None else args.eps_t3
        eps_t = (e1, e1, e3)
    seeds = None
    if not args.seed_corners:
        seeds = (tuple(inst.spec.I.center),)
    try:
        return CegisConfig.for_instance(
            inst,
            eps_t=eps_t,
            delta=args.delta,
            gamma_schedule=args.gamma_schedule,
            max_iterations=args.max_iter,
            timeout=args.timeout,
            seeds=seeds,
        )
    except ValueError as exc:
        raise CliError("parse-error", str(exc)) from exc


def _clf(inst: ProblemInstance, path: str, delta: float | None) -> tuple[list[float], float, bool]:
    """Coefficients and level; a missing level is chosen and flagged."""
    p = Path(path)
    if not p.exists():
        raise CliError("file-not-found", f"{path}: no such file")
    try:
        a, beta = read_clf(p)
    except (ValueError, json.JSONDecodeError) as exc:
        raise CliError("parse-error", f"{path}: {exc}") from exc
    if len(a) != inst.template.size:
        raise CliError("parse-error", f"{path}: {len(a)} coefficients, template has {inst.template.size}")
    if beta is not None:
        return a, beta, False
    try:
        beta, _, _ = choose_level(inst, inst.template.polynomial(a), delta)
    except ValueError as exc:
        raise CliError("refuted", f"no level set works for these coefficients: {exc}") from exc
    return a, beta, True


def solve_problem(inst: ProblemInstance, cfg: CegisConfig) -> RunReport:
    result = synthesize(inst, cfg)
    dw, spent = None, 0.0
    if result.success:
        t0 = time.perf_counter()
        spec = make_controller(inst, result.a, result.beta, verified=True)
        try:
            dw = dwell(inst, spec, delta=cfg.delta, budget=DWELL_BUDGET)
        except FalsifierUnknown:
            dw = None
        spent = time.perf_counter() - t0
    return build_report(inst, cfg, result, dw, dwell_time=spent)


# -- subcommands -------------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = _with_overrides(_load(args.problem), args)
    cfg = _config(inst, args)
    report = solve_problem(inst, cfg)
    path = report.write(args.out)
    r = report.result
    print(f"{inst.name}: {report.status} after {r['iterations']} iterations ({r['timing']['total']:.2f} s)")
    if r["a"] is not None:
        print(f"  a = {r['a']}")
        print(f"  beta = {r['beta']}")
    if report.dwell is not None:
        print(f"  tau = {report.dwell['tau']:.6g}")
    print(f"  report: {path}")
    return report.exit_code


def cmd_verify(args) -> int:
    inst = _with_overrides(_load(args.problem), args)
    delta = inst.delta if args.delta is None else args.delta
    a, beta, chosen = _clf(inst, args.clf, delta)
    v = verify_clf(inst, a, beta, delta)
    print(f"{inst.name}: {v.status} at delta = {delta:g}")
    print(f"  beta = {beta:.6g}{' (chosen)' if chosen else ''}")
    print(f"  boxes per condition: {list(v.boxes)}")
    if v.counterexample is not None:
        cex = v.counterexample
        print(f"  condition {cex.condition} fails at x = {cex.witness.x.tolist()}")
    if v.message:
        print(f"  {v.message}")
    if args.out is not None:
        RunReport(
            problem=inst.name,
            command="verify",
            status=v.status,
            config={"delta": delta, "a": a, "beta": beta, "beta_chosen": chosen},
            verification=v.to_dict(),
        ).write(args.out)
    return exit_code(v.status)


def _bench_one(job):
    path, args = job
    try:
        inst = _with_overrides(_load(str(path)), args)
    except CliError as exc:
        return {"problem": Path(path).stem, "status": exc.status, "message": str(exc)}
    cfg = _config(inst, args)
    try:
        result = synthesize(inst, cfg)
    except Exception as exc:  # one bad problem must not stop the suite
        return {"problem": inst.name, "n": inst.n, "modes": inst.nmodes, "status": "error", "message": str(exc)}
    return bench_row(inst, cfg, result)


def cmd_bench(args) -> int:
    root = Path(args.directory) if args.directory else benchmark_path("sys01").parent
    if not root.is_dir():
        raise CliError("file-not-found", f"{root}: not a directory")
    files = sorted(root.glob("*.json"))
    jobs = [(f, args) for f in files]
    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.threads) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = []
        for job in jobs:
            rows.append(_bench_one(job))
            if not args.quiet:
                print(f"{rows[-1]['problem']}: {rows[-1]['status']}", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bench_csv(rows, out / "bench.csv")
    print(format_table(rows))
    return 0


def cmd_simulate(args) -> int:
    inst = _with_overrides(_load(args.problem), args)
    delta = inst.delta if args.delta is None else args.delta
    a, beta, _ = _clf(inst, args.clf, delta)
    try:
        spec = make_controller(inst, a, beta, delta=delta)
    except CertificateViolation as exc:
        raise CliError("refuted", str(exc)) from exc
    x0 = np.array(args.x0, dtype=float)
    if x0.shape != (inst.n,):
        raise CliError("parse-error", f"x0 needs {inst.n} components, got {x0.size}")
    if not spec.in_goal(x0) and not spec.in_w(x0):
        raise CliError("outside-W", f"x0 is not in W: V(x0) = {spec.V.eval(x0):.6g} > beta = {beta:.6g}")
    dw = dwell(inst, spec, delta=args.dwell_delta)
    trace = simulate(inst, spec, dw, x0, args.horizon)
    verdict = check_rws(trace, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv", inst.system.vars, inst.system.modes)
    status = "rws-pass" if verdict.ok else "rws-fail"
    RunReport(
        problem=inst.name,
        command="simulate",
        status=status,
        config={"x0": x0.tolist(), "horizon": args.horizon, "a": a, "beta": beta, "lambda": spec.lam},
        dwell=dw.to_dict(),
        result={"verdict": verdict.to_dict(), "switch_times": trace.switch_times.tolist(), "samples": len(trace)},
    ).write(out)
    print(f"{inst.name}: {'RWS pass' if verdict.ok else 'RWS fail'} ({verdict.reason} at t = {trace.t[-1]:.4g})")
    print(f"  tau = {dw.tau:.6g}, switches = {trace.switch_times.size}, min gap = {verdict.min_switch_gap:.6g}")
    print(f"  trace: {out / 'trace.csv'}")
    return exit_code(status)


# -- parser ------------------------------------------------------------------------------


def _synthesis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps-q", type=float, help="required decrease rate of V (problem default)")
    p.add_argument("--eps-t1", type=float, help="strengthening for the boundary and initial conditions")
    p.add_argument("--eps-t3", type=float, help="strengthening for the decrease condition")
    p.add_argument("--delta", type=float, help="falsifier precision (problem default)")
    p.add_argument("--gamma-schedule", type=_floats, help="descending violation levels ending at 0, e.g. 1,0.1,0.01,0")
    p.add_argument("--max-iter", type=int, default=500, help="iteration limit (default 500)")
    p.add_argument("--timeout", type=float, help="wall-clock limit per problem, seconds")
    p.add_argument(
        "--seed-corners",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="seed the candidate space with the corners of S (default on)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clfsynth", description="Synthesize and check control Lyapunov functions.")
    parser.add_argument("--version", action="version", version=f"clfsynth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="synthesize a CLF for one problem")
    p.add_argument("problem", help="problem file, or a bundled name such as sys01")
    _synthesis_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, help="switching threshold factor, > 1")
    p.add_argument("--threads", type=int, default=1, help="accepted for symmetry with bench; solve is sequential")
    p.add_argument("--out", default="out", help="output directory for report.json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a given CLF")
    p.add_argument("problem")
    p.add_argument("clf", help="JSON with 'a' and optionally 'beta', or a solve report")
    p.add_argument("--delta", type=float)
    p.add_argument("--eps-q", type=float)
    p.add_argument("--out", help="also write report.json here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run synthesis over a directory of problems")
    p.add_argument("directory", nargs="?", help="problem directory (default: bundled suite)")
    _synthesis_flags(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--threads", type=int, default=1, help="problems solved in parallel")
    p.add_argument("--out", default="out", help="output directory for bench.csv")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="run the switching controller from one state")
    p.add_argument("problem")
    p.add_argument("clf")
    p.add_argument("--x0", type=_floats, required=True, help="start state, e.g. --x0=1,-2")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--delta", type=float, help="precision for checking the CLF")
    p.add_argument("--dwell-delta", type=float, default=1e-5, help="precision of the dwell-time bounds")
    p.add_argument("--eps-q", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--out", default="out", help="output directory for trace.csv and report.json")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc.status)


if __name__ == "__main__":
    sys.exit(main())
