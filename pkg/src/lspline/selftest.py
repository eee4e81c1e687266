"""Built-in invariant checks that need no input files."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import KnotVector, build_Q, build_R, row_dominance
from .errors import ConditionViolation
from .expcore import classify, ep_mul, ep_shift_op, max_step_delta
from .kernel import dominance_bound, kernel_build, sigma_is_odd, tau_eval, tau_taylor2
from .splinefit import interpolate, oracle_interpolate, identity_residual


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _knots(rng, n, hmax, lo=0.3):
    return np.concatenate([[0.0], np.cumsum(rng.uniform(lo, 1.0, n - 1) * hmax)])


def check_classical(rng):
    worst = 0.0
    ctx = kernel_build((0, 0, 0, 0))
    for _ in range(10):
        t = _knots(rng, 8, 2.0)
        h = np.diff(t)
        R = build_R(ctx, t)
        want_d = (h[:-1] + h[1:]) / 3
        want_o = h[1:-1] / 6
        worst = max(worst, np.max(np.abs(R.diag - want_d) / want_d), np.max(np.abs(R.sup - want_o) / want_o))
    return worst <= 1e-14, f"max rel err {worst:.2e}"


def check_identity(rng):
    worst = 0.0
    for lam in [(0, 0, 0, 0), (1, -1, -2, 2), (0.5 + 1j, 0.5 - 1j, -0.3, 0.7), (1j, 0.2, -0.5 - 0.5j, 1)]:
        t = _knots(rng, 15, min(1.0, 0.9 * max_step_delta(lam)))
        s = interpolate(lam, t, rng.normal(size=t.size) + 1j * rng.normal(size=t.size))
        worst = max(worst, identity_residual(s))
    return worst <= 1e-9, f"max residual {worst:.2e}"


def check_rho0(rng):
    worst = 0.0
    for _ in range(10):
        lam = tuple(rng.uniform(-2, 2, 4) + 1j * rng.uniform(-2, 2, 4))
        ctx = kernel_build(lam)
        lhs = ep_shift_op(ctx.rho0, ctx.C)
        rhs = ep_mul(ctx.phi01, ctx.phi23)
        if not lhs.is_close(rhs, rtol=1e-10):
            return False, f"D rho0 != Phi01 Phi23 for {lam}"
        d3 = ctx.rho0.deriv_at(0.0, 3)
        d4 = ctx.rho0.deriv_at(0.0, 4)
        want4 = 5 * (lam[0] + lam[1]) + 3 * (lam[2] + lam[3])
        worst = max(worst, abs(d3 - 2), abs(d4 - want4) / max(1, abs(want4)))
    return worst <= 1e-10, f"max initial-data err {worst:.2e}"


def check_positivity(rng):
    for _ in range(20):
        lam = tuple(rng.uniform(-3, 3, 4))
        R = build_R(kernel_build(lam), _knots(rng, 10, 1.5))
        if not all(np.all(np.asarray(v) > 0) for v in (R.diag, R.sub, R.sup)):
            return False, f"non-positive entry for {lam}"
    return True, "20 real vectors"


def check_symmetric_half(rng):
    worst = 0.0
    for _ in range(20):
        a, b = rng.uniform(0, 5, 2)
        R = build_R(kernel_build((a, -a, -b, b)), _knots(rng, 10, 1.5))
        worst = max(worst, float(np.max(row_dominance(R))))
    return worst <= 0.5 + 1e-10, f"max row ratio {worst:.6f}"


def _f(d):
    return (math.sin(d) - d) / (d * math.cos(d) - math.sin(d))


def check_imaginary_pair(rng):
    ctx = kernel_build((0, 0, -1j, 1j))
    worst = 0.0
    for d in (0.5, 1.0, 2.0, 3.0, math.pi):
        est = dominance_bound(ctx, delta=d).M_delta_estimate
        worst = max(worst, abs(est - max(0.5, _f(d))))
    return worst <= 1e-6, f"max |M - f| {worst:.2e}"


def check_symmetry(rng):
    fams = [(1, -1, -2, 2), (0.5j, -0.5j, 1, -1), (3, 3, -1, -1), (0.2, 1, -0.4, 0.3), (1 + 1j, -1 - 1j, 2, -2)]
    for lam in fams:
        R = build_R(kernel_build(lam), _knots(rng, 8, min(1.0, 0.9 * max_step_delta(lam))))
        r_sym = np.allclose(R.sub, R.sup, rtol=1e-10, atol=0)
        flags = {r_sym, classify(lam).is_symmetric, sigma_is_odd(kernel_build(lam))}
        if len(flags) != 1:
            return False, f"disagreement for {lam}"
    return True, f"{len(fams)} vectors"


def check_tau_taylor(rng):
    worst = 0.0
    h = 1e-3
    for _ in range(10):
        a, b = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        lam = (complex(*a), complex(*a).conjugate(), complex(*b), complex(*b).conjugate())
        ctx = kernel_build(lam)
        c0, c1, c2 = tau_taylor2(ctx)
        tp, t0, tm = (complex(tau_eval(ctx, x)) for x in (h, 0.0, -h))
        fd1 = (tp - tm) / (2 * h)
        fd2 = (tp - 2 * t0 + tm) / (2 * h * h)
        worst = max(worst, abs(t0 - 0.5), abs(fd1 - c1), abs(fd2 - c2))
    return worst <= 1e-6, f"max err {worst:.2e}"


def check_reproduction(rng):
    worst = 0.0
    for _ in range(5):
        l0, l1 = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
        lam = (l0, l1, complex(rng.uniform(-1, 1)), complex(rng.uniform(-1, 1)))
        t = _knots(rng, 12, min(0.8, 0.9 * max_step_delta(lam)))
        x = np.linspace(t[0], t[-1], 200)
        u = lambda s: np.exp(l0 * s) + 2 * np.exp(l1 * s)
        s = interpolate(lam, t, u(t))
        worst = max(worst, float(np.max(np.abs(s(x) - u(x)) / np.abs(u(x)))))
    return worst <= 1e-9, f"max rel err {worst:.2e}"


def check_condition1(rng):
    lam = (0, 0, 1j, -1j)
    try:
        KnotVector([0.0, math.pi, 4.0]).check_condition(lam)
        return False, "step pi accepted"
    except ConditionViolation:
        pass
    KnotVector([0.0, math.pi - 1e-3, 4.0]).check_condition(lam)
    return True, "pi rejected, pi - 1e-3 accepted"


def check_oracle(rng):
    worst = 0.0
    for lam in [(0.3, -1.2, 0.8, 1.5), (0.4 + 1j, 0.4 - 1j, -0.2 + 0.5j, -0.2 - 0.5j), (1j, -0.5, 0.3 + 0.2j, 1)]:
        t = _knots(rng, 20, min(1.0, 0.9 * max_step_delta(lam)))
        y = rng.normal(size=t.size)
        x = rng.uniform(t[0], t[-1], 100)
        a = interpolate(lam, t, y)(x)
        b = oracle_interpolate(lam, t, y)(x)
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    return worst <= 1e-8, f"max rel diff {worst:.2e}"


CHECKS: list[tuple[str, Callable]] = [
    ("classical cubic reduction", check_classical),
    ("Q^T g = R gamma", check_identity),
    ("rho0 structure", check_rho0),
    ("positivity for real frequencies", check_positivity),
    ("symmetric real rows <= R_jj / 2", check_symmetric_half),
    ("imaginary pair M_delta = f(delta)", check_imaginary_pair),
    ("symmetry equivalence", check_symmetry),
    ("tau Taylor coefficients", check_tau_taylor),
    ("reproduction of E(l0, l1)", check_reproduction),
    ("step bound enforcement", check_condition1),
    ("fast vs dense oracle", check_oracle),
]


def run_selftest(seed: int = 20240601) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, reported in the table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
