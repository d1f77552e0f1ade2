"""Batch experiment driver.

Subcommands: ``solve``, ``converge``, ``noise-study``, ``dsm``, ``verify``.
Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numerical abort.

Problem specs::

    rank_deficient:M,N,R[,seed=S]   hilbert:N   derivative:N
    symmetric:N[,seed=S]            diag:S1,S2,...   file:A.txt,f.txt
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from contextlib import nullcontext
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg as la

from . import matrix_io, oracle, problems, verification
from .solvers import (
    DsmSchedule,
    NumericalError,
    dsm_solve,
    fixed_point_iteration,
    selfadjoint_iteration,
    tikhonov_minimizer,
)
from .stopping import NoisyData, ScheduleParams, discrepancy_stop, noise_study, stopping_index

log = logging.getLogger("shiftreg")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

METHODS = {"fixed-point": "fixed-point", "eq5": "fixed-point", "tikhonov": "tikhonov",
           "selfadjoint": "selfadjoint", "dsm": "dsm"}

DEFAULTS = {
    "problem": None, "method": None, "a": None, "delta": 0.0, "seed": 0, "out": None,
    "steps": 1000, "tol": 1e-12, "gamma": 0.5, "c": 1.0,
    "eps0": 1.0, "p": 0.5, "tmax": 50.0, "h": 0.01, "discrepancy_C": 1.5, "record_every": 1,
}


class ConfigError(ValueError):
    pass


class Problem(NamedTuple):
    A: np.ndarray
    f: np.ndarray
    y: np.ndarray | None
    label: str


def _split_args(text):
    pos, kw = [], {}
    for tok in filter(None, (t.strip() for t in text.split(","))):
        if "=" in tok:
            k, v = tok.split("=", 1)
            kw[k.strip()] = v.strip()
        else:
            pos.append(tok)
    return pos, kw


def parse_problem(spec: str) -> Problem:
    if not spec:
        raise ConfigError("--problem is required")
    name, _, rest = spec.partition(":")
    pos, kw = _split_args(rest)
    try:
        if name == "file":
            if len(pos) != 2:
                raise ConfigError("file problems need file:A.txt,f.txt")
            A = matrix_io.read_matrix(pos[0])
            f = matrix_io.read_vector(pos[1])
            if f.shape[0] != A.shape[0]:
                raise ConfigError(f"f has length {f.shape[0]} but A has {A.shape[0]} rows")
            y, cons = oracle.minimal_norm_solution(A, f)
            consistent = cons <= 1e-10 * max(np.linalg.norm(f), 1.0)
            return Problem(A, f, y if consistent else None, f"file({pos[0]},{pos[1]})")
        seed = int(kw.pop("seed", 0))
        if kw:
            raise ConfigError(f"unknown problem options {sorted(kw)}")
        if name == "rank_deficient":
            m, n, r = (int(v) for v in pos)
            P = problems.rank_deficient(m, n, r, seed)
        elif name == "hilbert":
            P = problems.hilbert(int(pos[0]))
        elif name in ("derivative", "discretized_derivative"):
            P = problems.discretized_derivative(int(pos[0]))
        elif name in ("symmetric", "symmetric_singular"):
            P = problems.symmetric_singular(int(pos[0]), seed)
        elif name == "diag":
            P = problems.diagonal([float(v) for v in pos])
        else:
            raise ConfigError(f"unknown problem family {name!r}")
    except (ValueError, IndexError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad problem spec {spec!r}: {exc}") from None
    return Problem(P.A.entries, P.f, P.y, P.label)


def _resolve(args) -> dict:
    """Merge flags over the JSON config file over defaults."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    if out["method"] is not None:
        if out["method"] not in METHODS:
            raise ConfigError(f"unknown method {out['method']!r}")
        out["method"] = METHODS[out["method"]]
    return out


def _require_a(cfg):
    a = cfg["a"]
    if a is None:
        raise ConfigError("--a is required for this method")
    a = float(a)
    if not a > 0:
        raise ConfigError("--a must be positive")
    return a


def _noisy(problem, cfg) -> NoisyData:
    delta = float(cfg["delta"])
    if delta < 0:
        raise ConfigError("--delta must be non-negative")
    return problems.add_noise(problem.f, delta, int(cfg["seed"]))


def _schedule(cfg) -> DsmSchedule:
    try:
        return DsmSchedule(float(cfg["eps0"]), float(cfg["p"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _open_out(path):
    # never let the with-block close stdout
    return nullcontext(sys.stdout) if path in (None, "-") else open(path, "w", newline="")


def _error(u, y):
    return None if y is None else float(np.linalg.norm(u - y))


def cmd_solve(cfg) -> int:
    P = parse_problem(cfg["problem"])
    method = cfg["method"]
    if method is None:
        raise ConfigError("--method is required")
    data = _noisy(P, cfg)
    f = data.f_delta
    summary = {"problem": P.label, "method": method, "delta": data.delta, "seed": int(cfg["seed"])}
    if method in ("fixed-point", "tikhonov", "selfadjoint"):
        a = _require_a(cfg)
        summary["a"] = a
    if method == "fixed-point":
        if data.delta > 0:
            n = stopping_index(data.delta, ScheduleParams(float(cfg["gamma"]), float(cfg["c"])))
            trace = fixed_point_iteration(P.A, a, f, max_steps=n, tol=0.0)
        else:
            trace = fixed_point_iteration(P.A, a, f, max_steps=int(cfg["steps"]), tol=float(cfg["tol"]))
        u = trace.final
        summary.update(steps=trace.steps, converged=trace.converged)
        if P.y is not None and data.delta == 0:
            summary["predicted_error"] = oracle.spectral_iteration_error(P.A, a, -P.y, trace.steps)
    elif method == "tikhonov":
        u = tikhonov_minimizer(P.A, a, f)
    elif method == "selfadjoint":
        try:
            trace = selfadjoint_iteration(P.A, a, f, max_steps=int(cfg["steps"]), tol=float(cfg["tol"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        u, imag = trace.realize()
        summary.update(steps=trace.steps, converged=trace.converged, imag_norm=imag)
    else:
        sched = _schedule(cfg)
        stop = float(cfg["discrepancy_C"]) * data.delta if data.delta > 0 else None
        trace = dsm_solve(P.A, f, sched, t_max=float(cfg["tmax"]), h=float(cfg["h"]),
                          record_every=max(1, int(cfg["record_every"])), stop_residual=stop)
        u = trace.final
        summary.update(time=float(trace.times[-1]), eps0=sched.eps0, p=sched.p)
        if data.delta > 0:
            res = discrepancy_stop(trace, data, float(cfg["discrepancy_C"]))
            summary["discrepancy_reached"] = res.reached
    summary["error"] = _error(u, P.y)
    summary["residual"] = float(np.linalg.norm(P.A @ u - f))
    if summary.get("a"):
        a = summary["a"]
        norm = oracle.smoothing_norm_exact(P.A, a)
        bound = 0.5 / math.sqrt(a)
        summary["smoothing_norm"] = {"exact": norm, "bound": bound,
                                     "holds": bool(norm <= bound * (1 + 1e-12))}
    out = Path(cfg["out"] or "solution.txt")
    matrix_io.write_vector(out, u)
    text = json.dumps(summary, indent=2)
    out.with_suffix(".json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_converge(cfg) -> int:
    P = parse_problem(cfg["problem"])
    if P.y is None:
        raise ConfigError("converge needs a consistent problem with a known solution")
    a = _require_a(cfg)
    steps = int(cfg["steps"])
    trace = fixed_point_iteration(P.A, a, P.f, max_steps=steps, tol=0.0, y_ref=P.y,
                                  record_every=max(1, int(cfg["record_every"])))
    pred = oracle.spectral_iteration_error(P.A, a, -np.asarray(P.y), trace.indices)
    with _open_out(cfg["out"]) as fh:
        w = csv.writer(fh)
        w.writerow(("n", "error", "residual", "spectral_prediction"))
        for row in zip(trace.indices, trace.errors, trace.residuals, pred):
            w.writerow((int(row[0]),) + tuple(repr(float(x)) for x in row[1:]))
    return EXIT_OK


def _delta_list(value):
    if value is None:
        raise ConfigError("--delta list is required for noise-study")
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        value = value.split(",")
    try:
        deltas = [float(v) for v in value]
    except ValueError:
        raise ConfigError(f"bad delta list {value!r}") from None
    if any(d <= 0 for d in deltas):
        raise ConfigError("every delta must be positive for the a-priori stopping rule")
    return deltas


def cmd_noise_study(cfg, raw_delta) -> int:
    P = parse_problem(cfg["problem"])
    if P.y is None:
        raise ConfigError("noise-study needs a consistent problem with a known solution")
    a = _require_a(cfg)
    deltas = _delta_list(raw_delta)
    try:
        params = ScheduleParams(float(cfg["gamma"]), float(cfg["c"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = noise_study(problems.TestProblem(P.A, P.f, P.y, P.label), deltas, a, params,
                       int(cfg["seed"]))
    with _open_out(cfg["out"]) as fh:
        w = csv.writer(fh)
        w.writerow(("delta", "n_delta", "error_stopped", "envelope"))
        for r in rows:
            w.writerow((repr(r["delta"]), r["n_delta"], repr(r["error_stopped"]), repr(r["envelope"])))
    return EXIT_OK


def cmd_dsm(cfg) -> int:
    P = parse_problem(cfg["problem"])
    data = _noisy(P, cfg)
    sched = _schedule(cfg)
    C = float(cfg["discrepancy_C"])
    if not C > 1:
        raise ConfigError("--discrepancy-C must exceed 1")
    h = float(cfg["h"])
    if not (0 < h <= 0.1):
        raise ConfigError("--h must lie in (0, 0.1]")
    trace = dsm_solve(P.A, data.f_delta, sched, t_max=float(cfg["tmax"]), h=h, y_ref=P.y,
                      record_every=max(1, int(cfg["record_every"])))
    summary = {"problem": P.label, "delta": data.delta, "eps0": sched.eps0, "p": sched.p,
               "t_max": float(trace.times[-1]), "h": h,
               "final_error": _error(trace.final, P.y),
               "final_residual": float(trace.residuals[-1])}
    if data.delta > 0:
        stop = discrepancy_stop(trace, data, C)
        summary.update(discrepancy_C=C, t_delta=stop.time, reached=stop.reached,
                       stopped_error=_error(trace.states[stop.index], P.y))
    if cfg["out"] in (None, "-"):
        trace.to_csv(sys.stdout)
        print(json.dumps(summary), file=sys.stderr)
    else:
        trace.to_csv(cfg["out"])
        Path(cfg["out"]).with_suffix(".json").write_text(json.dumps(summary, indent=2) + "\n")
        print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_verify(full: bool = False) -> int:
    suite = verification.FULL_SUITE if full else verification.QUICK_SUITE
    results = verification.run_suite(suite)
    print(verification.format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftreg", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(sp):
        sp.add_argument("--problem")
        sp.add_argument("--method")
        sp.add_argument("--a", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--config", help="JSON file with defaults for any flag")
        sp.add_argument("--steps", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--c", type=float)
        sp.add_argument("--record-every", dest="record_every", type=int)

    def dsm_flags(sp):
        sp.add_argument("--eps0", type=float)
        sp.add_argument("--p", type=float)
        sp.add_argument("--tmax", type=float)
        sp.add_argument("--h", type=float)
        sp.add_argument("--discrepancy-C", dest="discrepancy_C", type=float)

    sp = sub.add_parser("solve", help="run one method and write the solution")
    shared(sp)
    dsm_flags(sp)
    sp.add_argument("--delta", type=float)
    sp = sub.add_parser("converge", help="convergence table of the fixed-point iteration")
    shared(sp)
    sp.add_argument("--delta", type=float)
    sp = sub.add_parser("noise-study", help="stopped-iteration error versus noise level")
    shared(sp)
    sp.add_argument("--delta", help="comma-separated noise levels")
    sp = sub.add_parser("dsm", help="integrate the DSM flow and write its trace")
    shared(sp)
    dsm_flags(sp)
    sp.add_argument("--delta", type=float)
    sp = sub.add_parser("verify", help="run the property suite")
    sp.add_argument("--full", action="store_true", help="include the slower solver checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.full)
        cfg = _resolve(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "converge":
            return cmd_converge(cfg)
        if args.command == "noise-study":
            raw = args.delta
            if raw is None:
                raw = cfg["delta"] if cfg["delta"] != DEFAULTS["delta"] else None
            return cmd_noise_study(cfg, raw)
        return cmd_dsm(cfg)
    except ConfigError as exc:
        print(f"shiftreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, la.LinAlgError, FloatingPointError) as exc:
        print(f"shiftreg: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
