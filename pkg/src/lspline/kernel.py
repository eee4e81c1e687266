"""The scalar kernels rho, sigma, tau behind the matrix R, and dominance diagnostics.

For ``Lambda = (l0, l1, l2, l3)``::

    rho(x)   = rho0(x)  / (Phi_(l0,l1)(x) Phi_(l2,l3)(x))
    sigma(x) = sigma0(x) / (Phi_(l0,l1)(x) Phi_(l2,l3)(x))
    tau(x)   = -sigma(-x) / rho(x) = Phi_(A-l0,..,A-l3)(x) / rho0(x)

with ``rho0 = Phi' Phi_(l0,l1) - Phi Phi_(l0,l1)'`` and ``sigma0 = Phi``.

Numerically, ``rho0`` is never formed as that difference of products.  It
lies in the five-dimensional space with frequencies
``mu = (l0+l2, l0+l3, l1+l2, l1+l3, l0+l1)`` and is fixed there by its
initial data ``0, 0, 0, 2, 5(l0+l1)+3(l2+l3)``, hence

    rho0 = 2 Phi_mu[:4] + (2C - A) Phi_mu,      A = sum(l), C = l0 + l1,

which :func:`rho0_eval` evaluates through the accurate divided-difference
routine.  The :class:`ExpPoly` form built by :func:`kernel_build` is kept as
the algebraic certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .expcore import (
    CLUSTER_RTOL,
    ExpPoly,
    FrequencyVector,
    as_frequency_vector,
    classify,
    ep_derivative,
    ep_mul,
    max_step_delta,
    phi_eval,
    phi_expand,
    phi_taylor,
)

# below |x| * (1 + max|lambda|) the kernels are taken from their Taylor polynomials
TAYLOR_SWITCH = 1e-6
DEFAULT_SAMPLES = 2048
# half-width used by diagnostics when the step bound is infinite
DEFAULT_WINDOW = 10.0


@dataclass(frozen=True)
class KernelContext:
    lam: FrequencyVector
    delta: float
    rho0: ExpPoly
    sigma0: ExpPoly
    phi01: ExpPoly
    phi23: ExpPoly
    mu: tuple[complex, ...] = field(repr=False)

    @property
    def A(self) -> complex:
        return sum(self.lam.lambdas)

    @property
    def C(self) -> complex:
        return self.lam[0] + self.lam[1]

    @property
    def scale(self) -> float:
        return 1.0 + max(abs(v) for v in self.lam)


def kernel_build(lam) -> KernelContext:
    lam = as_frequency_vector(lam)
    if len(lam) != 4:
        raise DomainError(f"the kernels need 4 frequencies, got {len(lam)}")
    l0, l1, l2, l3 = lam.lambdas
    phi4 = phi_expand(lam)
    phi01 = phi_expand(lam[:2])
    phi23 = phi_expand(lam[2:])
    rho0 = ep_mul(ep_derivative(phi4), phi01) - ep_mul(phi4, ep_derivative(phi01))
    return KernelContext(
        lam=lam,
        delta=max_step_delta(lam),
        rho0=rho0,
        sigma0=phi4,
        phi01=phi01,
        phi23=phi23,
        mu=(l0 + l2, l0 + l3, l1 + l2, l1 + l3, l0 + l1),
    )


def _ctx(obj) -> KernelContext:
    return obj if isinstance(obj, KernelContext) else kernel_build(obj)


def _as_array(x):
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("non-finite abscissa")
    return xa


def _ret(vals):
    return complex(vals) if np.ndim(vals) == 0 else vals


def _check_window(ctx: KernelContext, xa: np.ndarray, closed: bool = False):
    if math.isinf(ctx.delta):
        return
    bad = np.abs(xa) > ctx.delta if closed else np.abs(xa) >= ctx.delta
    if np.any(bad):
        worst = float(np.max(np.abs(xa)))
        raise DomainError(f"|x| = {worst:.17g} outside the window of width delta = {ctx.delta:.17g}")


def rho0_eval(ctx, x):
    """Numerator ``rho0(x)`` (entire; no window restriction)."""
    ctx = _ctx(ctx)
    xa = _as_array(x)
    coef = 2 * ctx.C - ctx.A
    vals = 2.0 * phi_eval(ctx.mu[:4], xa)
    if coef != 0:
        vals = vals + coef * phi_eval(ctx.mu, xa)
    return _ret(np.asarray(vals))


def sigma0_eval(ctx, x):
    ctx = _ctx(ctx)
    return phi_eval(ctx.lam, _as_array(x))


def _denominator(ctx: KernelContext, xa: np.ndarray) -> np.ndarray:
    return np.asarray(phi_eval(ctx.lam[:2], xa) * phi_eval(ctx.lam[2:], xa))


def _quotient(num, den, xa, what):
    small = xa != 0
    bad = small & ((np.abs(den) == 0) | ~np.isfinite(den) | ~np.isfinite(num))
    if np.any(bad):
        x_bad = float(xa[bad].reshape(-1)[0])
        raise NumericalError(f"{what}: denominator underflow or overflow at x = {x_bad:.17g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(small, num / np.where(small, den, 1.0), 0.0)


def rho_eval(ctx, x):
    """``rho(x)`` for ``|x| < delta``; ``rho(0) = 0``."""
    ctx = _ctx(ctx)
    xa = _as_array(x)
    _check_window(ctx, xa)
    near = np.abs(xa) * ctx.scale < TAYLOR_SWITCH
    l0, l1, l2, l3 = ctx.lam.lambdas
    taylor = xa / 3 - (l2 + l3 - l0 - l1) / 24 * xa**2 + _rho_a2(ctx.lam) * xa**3
    out = _quotient(np.asarray(rho0_eval(ctx, xa)), _denominator(ctx, xa), np.where(near, 0.0, xa), "rho")
    return _ret(np.where(near, taylor, out))


def _rho_a2(lam) -> complex:
    l0, l1, l2, l3 = lam.lambdas
    return -(
        l0**2 + l1**2 + l2**2 + l3**2
        - 14 * l0 * l1 + 6 * l0 * l2 + 6 * l0 * l3 + 6 * l1 * l2 + 6 * l1 * l3
        - 14 * l2 * l3
    ) / 720


def sigma_eval(ctx, x):
    """``sigma(x)`` for ``|x| < delta``; ``sigma(0) = 0``."""
    ctx = _ctx(ctx)
    xa = _as_array(x)
    _check_window(ctx, xa)
    near = np.abs(xa) * ctx.scale < TAYLOR_SWITCH
    taylor = xa / 6 - ctx.A / 24 * xa**2
    out = _quotient(np.asarray(phi_eval(ctx.lam, xa)), _denominator(ctx, xa), np.where(near, 0.0, xa), "sigma")
    return _ret(np.where(near, taylor, out))


def tau_eval(ctx, x):
    """``tau(x) = Phi_(A - Lambda)(x) / rho0(x)`` on the closed window ``|x| <= delta``.

    Both factors are entire, so the value at the window edge (where
    ``rho`` and ``sigma`` themselves blow up) is still meaningful.
    """
    ctx = _ctx(ctx)
    xa = _as_array(x)
    _check_window(ctx, xa, closed=True)
    near = np.abs(xa) * ctx.scale < TAYLOR_SWITCH
    c0, c1, c2 = tau_taylor2(ctx)
    taylor = c0 + c1 * xa + c2 * xa**2
    shifted = FrequencyVector(tuple(ctx.A - v for v in ctx.lam))
    num = np.asarray(phi_eval(shifted, xa))
    den = np.asarray(rho0_eval(ctx, xa))
    out = _quotient(num, den, np.where(near, 0.0, xa), "tau")
    return _ret(np.where(near, taylor, out))


def tau_taylor2(ctx) -> tuple[complex, complex, complex]:
    """Degree-2 Taylor polynomial of ``tau`` at 0."""
    lam = ctx.lam if isinstance(ctx, KernelContext) else as_frequency_vector(ctx)
    t = phi_taylor(lam)
    a, b, c = t.A, t.B, t.C
    c1 = (1.5 * a - c) / 8
    c2 = (7 * a * a / 16 - a * c / 2 + c * c / 4 - b / 5) / 8
    return (0.5 + 0j, complex(c1), complex(c2))


def local_max_at_zero(lam, tol: float = 1e-9) -> bool:
    """Sufficient test for a local maximum of ``tau`` at 0 (real frequencies).

    Needs ``l0 + l1 = -3 (l2 + l3)`` and
    ``l0^2 - 4 l0 l1 + l1^2 + 3 (l2^2 + l3^2) > 0``.  The all-zero vector
    gives ``M = 0`` and returns False.
    """
    lam = as_frequency_vector(lam)
    if len(lam) != 4:
        raise DomainError(f"need 4 frequencies, got {len(lam)}")
    if not classify(lam).is_real:
        raise DomainError(f"frequencies must be real, got {lam}")
    l0, l1, l2, l3 = (v.real for v in lam)
    if abs((l0 + l1) + 3 * (l2 + l3)) > tol:
        return False
    m = l0 * l0 - 4 * l0 * l1 + l1 * l1 + 3 * (l2 * l2 + l3 * l3)
    return m > 0


@dataclass
class DominanceReport:
    """Grid estimate of ``M_delta = sup |sigma(-x)| / |rho(x)|`` on ``[-delta, delta]``.

    ``M_delta_estimate`` is a sampled maximum, not a certified bound.
    ``per_row_ratios`` is filled only when a knot vector was supplied; then
    ``is_strictly_dominant`` means every ratio is below 1.  Without knots it
    means ``M < 1`` together with the sign hypothesis on ``rho``.
    """

    M_delta_estimate: float
    grid_points: int
    per_row_ratios: list[float]
    is_strictly_dominant: bool
    hypothesis_checked: bool
    delta: float
    argmax: float
    edge_maximum: bool
    kind: str = "grid estimate"


def sample_grid(delta: float, samples: int) -> np.ndarray:
    """Positive abscissae in ``(0, delta]``, geometrically refined towards 0."""
    half = max(samples // 2, 2)
    lin = np.linspace(delta / half, delta, half)
    geo = np.geomspace(delta * 1e-6, delta, half)
    return np.unique(np.concatenate([geo, lin]))


def dominance_bound(ctx, delta: float | None = None, samples: int = DEFAULT_SAMPLES, knots=None) -> DominanceReport:
    """Estimate ``M_delta`` over both orientations ``|tau(x)|`` and ``|tau(-x)|``.

    ``delta`` may equal the step bound of the frequency vector (closed window);
    it defaults to that bound, or to ``DEFAULT_WINDOW`` when the bound is infinite.
    """
    ctx = _ctx(ctx)
    if samples < 2:
        raise DomainError("need at least 2 samples")
    if delta is None:
        delta = ctx.delta if math.isfinite(ctx.delta) else DEFAULT_WINDOW
    if not (delta > 0) or not math.isfinite(delta):
        raise DomainError(f"window half-width must be positive and finite, got {delta}")
    if delta > ctx.delta:
        raise DomainError(f"window {delta:.17g} exceeds the step bound delta = {ctx.delta:.17g}")
    xs = sample_grid(delta, samples)
    both = np.concatenate([-xs[::-1], xs])
    vals = np.abs(np.asarray(tau_eval(ctx, both)))
    k = int(np.argmax(vals))
    m_est = max(0.5, float(vals[k]))
    edge = k in (0, len(both) - 1) and vals[k] > 0.5

    hypothesis = False
    if classify(ctx.lam).is_conjugation_invariant:
        inner = xs[xs < ctx.delta]
        pos = np.asarray(rho_eval(ctx, inner))
        neg = -np.asarray(rho_eval(ctx, -inner))
        tol = 1e-10 * np.maximum(np.abs(pos), np.abs(neg))
        hypothesis = bool(
            np.all(pos.real > 0)
            and np.all(neg.real > 0)
            and np.all(np.abs(pos.imag) <= tol)
            and np.all(np.abs(neg.imag) <= tol)
        )

    ratios: list[float] = []
    if knots is not None:
        from .assembly import build_R, row_dominance

        ratios = [float(r) for r in row_dominance(build_R(ctx, knots))]
        strict = all(r < 1 for r in ratios)
    else:
        strict = hypothesis and m_est < 1
    return DominanceReport(
        M_delta_estimate=m_est,
        grid_points=int(both.size) + 1,
        per_row_ratios=ratios,
        is_strictly_dominant=strict,
        hypothesis_checked=hypothesis,
        delta=float(delta),
        argmax=float(both[k]),
        edge_maximum=bool(edge),
    )


def _odd_grid(ctx: KernelContext, xs):
    if xs is not None:
        return np.asarray(xs, dtype=float)
    hi = min(2.0, 0.9 * ctx.delta)
    return np.linspace(hi / 40, hi, 40)


def _is_odd(f, xs, rtol):
    plus = np.asarray(f(xs))
    minus = np.asarray(f(-xs))
    ref = np.maximum(np.abs(plus), np.abs(minus))
    return bool(np.all(np.abs(plus + minus) <= rtol * ref))


def sigma_is_odd(ctx, xs=None, rtol: float = 1e-9) -> bool:
    """Grid check of ``sigma(-x) = -sigma(x)``."""
    ctx = _ctx(ctx)
    return _is_odd(lambda x: sigma_eval(ctx, x), _odd_grid(ctx, xs), rtol)


def rho_is_odd(ctx, xs=None, rtol: float = 1e-9) -> bool:
    """Grid check of ``rho(-x) = -rho(x)``."""
    ctx = _ctx(ctx)
    return _is_odd(lambda x: rho_eval(ctx, x), _odd_grid(ctx, xs), rtol)


def rho_odd_condition(lam) -> bool:
    """``l0 + l1 == l2 + l3`` (the exact criterion for odd ``rho``)."""
    lam = as_frequency_vector(lam)
    l0, l1, l2, l3 = lam.lambdas
    return abs((l0 + l1) - (l2 + l3)) <= CLUSTER_RTOL * (1 + max(abs(v) for v in lam))
