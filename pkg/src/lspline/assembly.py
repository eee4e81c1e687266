"""Tridiagonal R, banded Q and the per-interval basis functions of a natural L-spline."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditionViolation, DomainError, NumericalError, ZeroDiagonal
from .expcore import as_frequency_vector, classify, max_step_delta, phi_deriv, phi_eval
from .kernel import KernelContext, kernel_build, rho_eval, sigma_eval

CONDITION_RTOL = 1e-12
REAL_RTOL = 1e-12


@dataclass(frozen=True)
class KnotVector:
    """Strictly increasing knots ``t_1 < ... < t_n`` with ``n >= 3``."""

    knots: np.ndarray

    def __post_init__(self):
        t = np.array(self.knots, dtype=float).reshape(-1)
        if t.size < 3:
            raise DomainError(f"need at least 3 knots, got {t.size}")
        if not np.all(np.isfinite(t)):
            raise DomainError("knots must be finite")
        steps = np.diff(t)
        if np.any(steps <= 0):
            j = int(np.flatnonzero(steps <= 0)[0])
            raise DomainError(f"knots must be strictly increasing (t[{j}] = {t[j]!r}, t[{j + 1}] = {t[j + 1]!r})")
        t.setflags(write=False)
        object.__setattr__(self, "knots", t)

    @classmethod
    def coerce(cls, obj) -> "KnotVector":
        return obj if isinstance(obj, cls) else cls(obj)

    def __len__(self):
        return self.knots.size

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.knots)

    def check_condition(self, lam) -> float:
        """Raise :class:`ConditionViolation` unless every step is below ``delta``.

        Returns ``delta``.  Steps equal to ``delta`` (up to a relative
        ``1e-12``) are rejected.
        """
        delta = max_step_delta(lam)
        if math.isinf(delta):
            return delta
        h = self.steps
        bad = np.flatnonzero(h >= delta * (1 - CONDITION_RTOL))
        if bad.size:
            j = int(bad[0])
            raise ConditionViolation(
                f"knot step h[{j}] = t[{j + 1}] - t[{j}] = {h[j]:.17g} is not below delta = {delta:.17g}",
                delta=delta,
                step=float(h[j]),
                index=j,
            )
        return delta


@dataclass(frozen=True)
class TridiagonalR:
    """``R`` by diagonals: ``sub[k] = R[k+1, k]``, ``sup[k] = R[k, k+1]``."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x)
        y = self.diag * x
        if self.size > 1:
            y = y.astype(np.result_type(y, self.sub, x))
            y[1:] += self.sub * x[:-1]
            y[:-1] += self.sup * x[1:]
        return y

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag).astype(np.result_type(self.diag, self.sub))
        if self.size > 1:
            m += np.diag(self.sub, -1) + np.diag(self.sup, 1)
        return m

    def inf_norm(self) -> float:
        row = np.abs(self.diag).astype(float)
        if self.size > 1:
            row[1:] += np.abs(self.sub)
            row[:-1] += np.abs(self.sup)
        return float(np.max(row))


@dataclass(frozen=True)
class BandedQ:
    """The ``n x (n-2)`` matrix ``Q``, three entries per column.

    Column ``k`` (knot ``j = k + 2`` in 1-based numbering) holds
    ``upper[k] = q_{j-1,j}``, ``mid[k] = q_{j,j}``, ``lower[k] = q_{j+1,j}``.
    """

    upper: np.ndarray
    mid: np.ndarray
    lower: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        m = self.mid.size
        return (m + 2, m)

    @property
    def columns(self) -> list[tuple[complex, complex, complex]]:
        return list(zip(self.upper, self.mid, self.lower))

    def rmatvec(self, g) -> np.ndarray:
        """``Q^T g``."""
        g = np.asarray(g)
        if g.size != self.mid.size + 2:
            raise DomainError(f"expected {self.mid.size + 2} values, got {g.size}")
        return self.upper * g[:-2] + self.mid * g[1:-1] + self.lower * g[2:]

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v)
        out = np.zeros(v.size + 2, dtype=np.result_type(v, self.mid))
        out[:-2] += self.upper * v
        out[1:-1] += self.mid * v
        out[2:] += self.lower * v
        return out

    def to_dense(self) -> np.ndarray:
        n, m = self.shape
        q = np.zeros((n, m), dtype=self.mid.dtype)
        k = np.arange(m)
        q[k, k] = self.upper
        q[k + 1, k] = self.mid
        q[k + 2, k] = self.lower
        return q


def _realify(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    imag = np.abs(values.imag)
    bad = imag > REAL_RTOL * np.abs(values)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"{what}[{k}] = {values[k]} should be real for a conjugation-invariant vector")
    return values.real.copy()


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        k = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NumericalError(f"{what}[{k}] is not finite")
    return values


def build_R(ctx, knots) -> TridiagonalR:
    """``R[j,j] = rho(h_{j-1}) - rho(-h_j)``, ``R[j,j+1] = sigma(h_j)``, ``R[j+1,j] = -sigma(-h_j)``."""
    ctx = ctx if isinstance(ctx, KernelContext) else kernel_build(ctx)
    knots = KnotVector.coerce(knots)
    knots.check_condition(ctx.lam)
    h = knots.steps
    rho_pos = np.asarray(rho_eval(ctx, h))
    rho_neg = np.asarray(rho_eval(ctx, -h))
    diag = rho_pos[:-1] - rho_neg[1:]
    inner = h[1:-1]
    sup = np.asarray(sigma_eval(ctx, inner)).reshape(-1)
    sub = -np.asarray(sigma_eval(ctx, -inner)).reshape(-1)
    parts = {"diag": diag, "sub": sub, "sup": sup}
    if classify(ctx.lam).is_conjugation_invariant:
        parts = {k: _realify(v, f"R.{k}") for k, v in parts.items()}
    parts = {k: _finite(v, f"R.{k}") for k, v in parts.items()}
    for v in parts.values():
        v.setflags(write=False)
    return TridiagonalR(sub=parts["sub"], diag=parts["diag"], sup=parts["sup"])


def build_Q(lam, knots) -> BandedQ:
    lam = lam.lam if isinstance(lam, KernelContext) else as_frequency_vector(lam)
    knots = KnotVector.coerce(knots)
    knots.check_condition(lam)
    h = knots.steps
    pair = lam[:2]
    phi_pos = np.asarray(phi_eval(pair, h))
    phi_neg = np.asarray(phi_eval(pair, -h))
    dphi_pos = np.asarray(phi_deriv(pair, h, 1))
    dphi_neg = np.asarray(phi_deriv(pair, -h, 1))
    upper = -1.0 / phi_neg[:-1]
    lower = 1.0 / phi_pos[1:]
    mid = dphi_neg[1:] / phi_neg[1:] - dphi_pos[:-1] / phi_pos[:-1]
    parts = {"upper": upper, "mid": mid, "lower": lower}
    if classify(lam).is_conjugation_invariant:
        parts = {k: _realify(v, f"Q.{k}") for k, v in parts.items()}
    parts = {k: _finite(v, f"Q.{k}") for k, v in parts.items()}
    return BandedQ(**parts)


BASIS_KINDS = ("A2", "B2", "A1", "B1")


def basis_eval(lam, tj: float, tj1: float, kind: str, t):
    """Local basis on ``[tj, tj1]``.

    ``A2``/``B2`` solve ``L1 u = 0`` with values ``(1, 0)``/``(0, 1)`` at the
    ends; ``A1``/``B1`` lie in the full space, vanish at both ends and have
    ``L1`` values ``(1, 0)``/``(0, 1)``.
    """
    lam = as_frequency_vector(lam)
    if kind not in BASIS_KINDS:
        raise DomainError(f"unknown basis kind {kind!r}; expected one of {BASIS_KINDS}")
    if not tj < tj1:
        raise DomainError(f"need tj < tj1, got {tj} and {tj1}")
    h = tj1 - tj
    delta = max_step_delta(lam)
    if h >= delta * (1 - CONDITION_RTOL):
        raise ConditionViolation(f"interval length {h:.17g} is not below delta = {delta:.17g}", delta=delta, step=h)
    ta = np.asarray(t, dtype=float)
    if np.any((ta < tj) | (ta > tj1)):
        raise DomainError(f"t outside [{tj}, {tj1}]")
    pair, rest = lam[:2], lam[2:]
    if kind in ("A2", "A1"):
        base, anchor, span = tj1, tj, -h
    else:
        base, anchor, span = tj, tj1, h
    two = phi_eval(pair, ta - base) / phi_eval(pair, span)
    if kind.endswith("2"):
        return two
    return (phi_eval(lam, ta - base) - two * phi_eval(lam, span)) / phi_eval(rest, span)


def row_dominance(R: TridiagonalR) -> np.ndarray:
    """Per-row ``(|sub| + |sup|) / |diag|``."""
    d = np.abs(R.diag)
    if np.any(d == 0):
        k = int(np.flatnonzero(d == 0)[0])
        raise ZeroDiagonal(f"R[{k},{k}] = 0")
    off = np.zeros(R.size)
    if R.size > 1:
        off[1:] += np.abs(R.sub)
        off[:-1] += np.abs(R.sup)
    return off / d
