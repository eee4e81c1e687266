"""``lspline`` command-line front end.

Exit codes: 0 success, 1 selftest failure, 2 bad input, 3 step bound
violated, 4 numerical or solver failure.  Documents go to stdout (or
``--out``); diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import io as lio
from .errors import ConditionViolation, DomainError, NumericalError
from .expcore import FrequencyVector, classify
from .kernel import (
    DEFAULT_SAMPLES,
    dominance_bound,
    kernel_build,
    local_max_at_zero,
    rho_is_odd,
    rho_odd_condition,
    sigma_is_odd,
    tau_eval,
    tau_taylor2,
)
from .assembly import build_Q, build_R, row_dominance

log = logging.getLogger("lspline")

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_PARSE = 2
EXIT_CONDITION = 3
EXIT_SOLVER = 4

DEFAULT_GRID = 101
# options whose value may begin with "-" (e.g. --lambda "-1,1,0,0")
_VALUE_FLAGS = ("--lambda", "--at", "--knots", "--delta")
_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    lam: FrequencyVector | None = None
    input_path: str | None = None
    grid: int | None = None
    at: np.ndarray | None = None
    knots: np.ndarray | None = None
    output_path: str | None = None
    delta: float | None = None
    samples: int = DEFAULT_SAMPLES


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lspline", description="Natural L-spline interpolation for order-4 operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lam_help = 'four complex literals, e.g. "0,0,1i,-1i"'
    pi = sub.add_parser("interp", help="fit a natural L-spline to CSV data")
    pi.add_argument("--lambda", dest="lam", required=True, help=lam_help)
    pi.add_argument("--input", required=True, help="CSV file with columns t,value")
    g = pi.add_mutually_exclusive_group()
    g.add_argument("--grid", type=int, help=f"number of uniform evaluation points (default {DEFAULT_GRID})")
    g.add_argument("--at", help="comma-separated evaluation abscissae")
    pi.add_argument("--out", help="output JSON path (default stdout)")

    pd = sub.add_parser("diag", help="kernel and dominance diagnostics")
    pd.add_argument("--lambda", dest="lam", required=True, help=lam_help)
    pd.add_argument("--delta", type=float, help="window half-width (default: the step bound)")
    pd.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    pd.add_argument("--out", help="output JSON path (default stdout)")

    pm = sub.add_parser("matrices", help="emit R and Q for given knots")
    pm.add_argument("--lambda", dest="lam", required=True, help=lam_help)
    src = pm.add_mutually_exclusive_group(required=True)
    src.add_argument("--knots", help="comma-separated knots")
    src.add_argument("--input", help="CSV file; its first column is used as knots")
    pm.add_argument("--out", help="output JSON path (default stdout)")

    sub.add_parser("selftest", help="run built-in invariant checks")
    return p


def _join_values(argv: list[str]) -> list[str]:
    out, it = [], iter(argv)
    for a in it:
        if a in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def parse_config(argv: list[str]) -> JobConfig:
    ns = build_parser().parse_args(_join_values(argv))
    cfg = JobConfig(command=ns.command)
    if ns.command == "selftest":
        return cfg
    cfg.lam = lio.parse_lambda(ns.lam)
    cfg.output_path = getattr(ns, "out", None)
    cfg.input_path = getattr(ns, "input", None)
    if ns.command == "interp":
        if ns.at is not None:
            cfg.at = lio.parse_reals(ns.at)
        else:
            cfg.grid = DEFAULT_GRID if ns.grid is None else ns.grid
            if cfg.grid < 2:
                raise DomainError(f"--grid must be at least 2, got {cfg.grid}")
    elif ns.command == "diag":
        cfg.delta = ns.delta
        cfg.samples = ns.samples
        if cfg.samples < 2:
            raise DomainError(f"--samples must be at least 2, got {cfg.samples}")
    elif ns.command == "matrices" and ns.knots is not None:
        cfg.knots = lio.parse_reals(ns.knots)
    return cfg


def _emit(doc: dict, path: str | None) -> None:
    text = lio.dumps(doc)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_input(path: str):
    try:
        return lio.read_csv(path)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror or exc}") from exc


def cmd_interp(cfg: JobConfig) -> int:
    from .splinefit import interpolate, spline_eval

    t, v = _read_input(cfg.input_path)
    s = interpolate(cfg.lam, t, v)
    if s.solver != "thomas":
        log.warning("R is not strictly row dominant; solved with %s", s.solver)
    grid = cfg.at if cfg.at is not None else np.linspace(t[0], t[-1], cfg.grid)
    values = spline_eval(s, grid)
    _emit(lio.spline_document(s, grid, values), cfg.output_path)
    return EXIT_OK


def _grows_unboundedly(ctx, window: float) -> bool:
    """|tau| keeps increasing past 1 as the window is doubled (infinite step bound only)."""
    probes = window * np.array([1.0, 2.0, 4.0, 8.0])
    with np.errstate(all="ignore"):
        mags = [max(abs(complex(tau_eval(ctx, x))), abs(complex(tau_eval(ctx, -x)))) for x in probes]
    return all(np.isfinite(mags)) and mags[-1] > 1 and all(b > a for a, b in zip(mags, mags[1:]))


def _verdict(ctx, rep, cls) -> str:
    m = rep.M_delta_estimate
    unbounded = rep.edge_maximum and math.isinf(ctx.delta) and _grows_unboundedly(ctx, rep.delta)
    proven = cls.is_conjugation_invariant and rep.hypothesis_checked
    if proven and m < 1:
        note = "; tau grows without bound on wider windows" if unbounded else ""
        return f"dominance guaranteed for steps below {rep.delta:.6g} (M_delta = {m:.6g} < 1){note}"
    if unbounded:
        return "dominance NOT guaranteed (tau appears unbounded)"
    if not cls.is_conjugation_invariant:
        return "dominance not established (kernel signs unverified for complex frequencies)"
    if not rep.hypothesis_checked:
        return "dominance not established (rho changes sign in the window)"
    if m <= 1 + 1e-9:
        return f"dominance guaranteed for steps below {rep.delta:.6g} (M_delta = 1, attained only at the window edge)"
    return f"dominance NOT guaranteed (M_delta = {m:.6g} >= 1)"


def cmd_diag(cfg: JobConfig) -> int:
    ctx = kernel_build(cfg.lam)
    cls = classify(ctx.lam)
    rep = dominance_bound(ctx, delta=cfg.delta, samples=cfg.samples)
    c0, c1, c2 = tau_taylor2(ctx)
    doc = {
        "lambda": [lio.encode_complex(z) for z in ctx.lam],
        "delta": lio.encode_real(ctx.delta),
        "classification": {
            "real": cls.is_real,
            "conjugation_invariant": cls.is_conjugation_invariant,
            "symmetric": cls.is_symmetric,
        },
        "tau_taylor": {"c0": lio.encode_complex(c0), "c1": lio.encode_complex(c1), "c2": lio.encode_complex(c2)},
        "local_max_at_zero": local_max_at_zero(ctx.lam) if cls.is_real else None,
        "M_delta": {
            "estimate": rep.M_delta_estimate,
            "window": rep.delta,
            "grid_points": rep.grid_points,
            "argmax": rep.argmax,
            "edge_maximum": rep.edge_maximum,
            "rho_sign_hypothesis": rep.hypothesis_checked,
            "kind": rep.kind,
        },
        "symmetry": {
            "sigma_odd": sigma_is_odd(ctx),
            "rho_odd": rho_is_odd(ctx),
            "rho_odd_condition": rho_odd_condition(ctx.lam),
        },
        "verdict": _verdict(ctx, rep, cls),
    }
    log.info("delta = %s, M_delta ~ %.6g: %s", doc["delta"], rep.M_delta_estimate, doc["verdict"])
    _emit(doc, cfg.output_path)
    return EXIT_OK


def cmd_matrices(cfg: JobConfig) -> int:
    knots = cfg.knots if cfg.knots is not None else _read_input(cfg.input_path)[0]
    ctx = kernel_build(cfg.lam)
    R = build_R(ctx, knots)
    Q = build_Q(ctx.lam, knots)
    doc = {
        "lambda": [lio.encode_complex(z) for z in ctx.lam],
        "delta": lio.encode_real(ctx.delta),
        "knots": [float(t) for t in knots],
        "R": {
            "sub": [lio.encode_complex(z) for z in R.sub],
            "diag": [lio.encode_complex(z) for z in R.diag],
            "super": [lio.encode_complex(z) for z in R.sup],
        },
        "Q": {"columns": [[lio.encode_complex(z) for z in col] for col in Q.columns]},
        "row_ratios": [float(r) for r in row_dominance(R)],
    }
    _emit(doc, cfg.output_path)
    return EXIT_OK


def cmd_selftest(cfg: JobConfig) -> int:
    from .selftest import format_table, run_selftest

    results = run_selftest()
    sys.stdout.write(format_table(results) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


COMMANDS = {"interp": cmd_interp, "diag": cmd_diag, "matrices": cmd_matrices, "selftest": cmd_selftest}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("LSPLINE_LOG", "warn").strip().lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("lspline: %(levelname)s: %(message)s"))
    root = logging.getLogger("lspline")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"lspline: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConditionViolation as exc:
        print(f"lspline: step bound violated: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except DomainError as exc:
        print(f"lspline: invalid input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"lspline: numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
