"""O(n) natural L-spline interpolation, evaluation, and a dense collocation oracle."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import KnotVector, TridiagonalR, build_Q, build_R, row_dominance
from .errors import DomainError, SingularPivot, SingularSystem
from .expcore import FrequencyVector, as_frequency_vector, phi_deriv, phi_eval
from .kernel import KernelContext, kernel_build

log = logging.getLogger(__name__)

PIVOT_RTOL = 1e-13
ORACLE_MAX_KNOTS = 200

SOLVER_THOMAS = "thomas"
SOLVER_BANDED = "banded-pivoted"
SOLVER_ORACLE = "dense-collocation"


def thomas_solve(R: TridiagonalR, rhs) -> np.ndarray:
    """Solve ``R x = rhs`` by unpivoted tridiagonal elimination."""
    b = [complex(v) for v in np.asarray(rhs).reshape(-1)]
    m = R.size
    if len(b) != m:
        raise DomainError(f"right-hand side has length {len(b)}, R has size {m}")
    diag = [complex(v) for v in R.diag]
    sub = [complex(v) for v in R.sub]
    sup = [complex(v) for v in R.sup]
    scale = [abs(d) for d in diag]
    for i in range(m - 1):
        scale[i] += abs(sup[i])
        scale[i + 1] += abs(sub[i])

    cp = [0j] * m
    dp = [0j] * m
    piv = diag[0]
    if abs(piv) < PIVOT_RTOL * scale[0] or piv == 0:
        raise SingularPivot(f"pivot {abs(piv):.3g} at row 0", row=0)
    if m > 1:
        cp[0] = sup[0] / piv
    dp[0] = b[0] / piv
    for i in range(1, m):
        piv = diag[i] - sub[i - 1] * cp[i - 1]
        if abs(piv) < PIVOT_RTOL * scale[i] or piv == 0:
            raise SingularPivot(f"pivot {abs(piv):.3g} at row {i}", row=i)
        if i < m - 1:
            cp[i] = sup[i] / piv
        dp[i] = (b[i] - sub[i - 1] * dp[i - 1]) / piv
    x = dp
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x, dtype=complex)


def _banded_solve(R: TridiagonalR, rhs) -> np.ndarray:
    m = R.size
    ab = np.zeros((3, m), dtype=complex)
    ab[1] = R.diag
    if m > 1:
        ab[0, 1:] = R.sup
        ab[2, :-1] = R.sub
    try:
        return scipy.linalg.solve_banded((1, 1), ab, np.asarray(rhs, dtype=complex))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"banded solve failed: {exc}") from exc


@dataclass(frozen=True)
class IntervalCache:
    """Per-interval denominators of the local basis, indexed by interval."""

    h: np.ndarray
    phi01_pos: np.ndarray
    phi01_neg: np.ndarray
    phi23_pos: np.ndarray
    phi23_neg: np.ndarray
    phi_pos: np.ndarray
    phi_neg: np.ndarray

    @classmethod
    def build(cls, lam: FrequencyVector, knots: KnotVector) -> "IntervalCache":
        h = knots.steps
        arrays = {
            "phi01_pos": phi_eval(lam[:2], h),
            "phi01_neg": phi_eval(lam[:2], -h),
            "phi23_pos": phi_eval(lam[2:], h),
            "phi23_neg": phi_eval(lam[2:], -h),
            "phi_pos": phi_eval(lam, h),
            "phi_neg": phi_eval(lam, -h),
        }
        arrays = {k: np.atleast_1d(np.asarray(v, dtype=complex)) for k, v in arrays.items()}
        for v in arrays.values():
            v.setflags(write=False)
        return cls(h=h, **arrays)


@dataclass(frozen=True)
class NaturalLSpline:
    lam: FrequencyVector
    knots: KnotVector
    g: np.ndarray
    gamma: np.ndarray
    solver: str = SOLVER_THOMAS
    row_ratios: np.ndarray | None = None
    cache: IntervalCache | None = field(default=None, repr=False)
    # (n-1, 4) coefficients in the local chain Phi_(l0), .., Phi_(l0..l3); set by the oracle only
    newton_coeffs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.cache is None:
            object.__setattr__(self, "cache", IntervalCache.build(self.lam, self.knots))
        for name in ("g", "gamma"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.knots)

    @property
    def dominant(self) -> bool | None:
        if self.row_ratios is None:
            return None
        return bool(np.all(self.row_ratios < 1))

    def __call__(self, t, deriv: int = 0):
        return spline_eval(self, t, deriv)


def _check_values(values, n: int) -> np.ndarray:
    g = np.asarray(values, dtype=complex).reshape(-1)
    if g.size != n:
        raise DomainError(f"got {g.size} values for {n} knots")
    if not np.all(np.isfinite(g)):
        raise DomainError("data values must be finite")
    return g


def interpolate(lam, knots, values) -> NaturalLSpline:
    """Natural L-spline through ``(knots[i], values[i])``.

    Solves ``R gamma = Q^T g`` for the interior ``L1``-values.  The unpivoted
    sweep is used when ``R`` is strictly row dominant, otherwise (or on a tiny
    pivot) a pivoted banded LU takes over and ``solver`` records that.
    """
    ctx = lam if isinstance(lam, KernelContext) else kernel_build(lam)
    knots = KnotVector.coerce(knots)
    g = _check_values(values, len(knots))
    R = build_R(ctx, knots)
    Q = build_Q(ctx.lam, knots)
    rhs = Q.rmatvec(g)
    ratios = row_dominance(R)
    solver = SOLVER_THOMAS
    if np.all(ratios < 1):
        try:
            inner = thomas_solve(R, rhs)
        except SingularPivot as exc:
            log.warning("unpivoted sweep failed (%s); using pivoted banded solve", exc)
            solver = SOLVER_BANDED
    else:
        log.info("R is not strictly row dominant (max ratio %.3g); using pivoted banded solve", ratios.max())
        solver = SOLVER_BANDED
    if solver == SOLVER_BANDED:
        inner = _banded_solve(R, rhs)
    gamma = np.zeros(len(knots), dtype=complex)
    gamma[1:-1] = inner
    ratios.setflags(write=False)
    return NaturalLSpline(lam=ctx.lam, knots=knots, g=g, gamma=gamma, solver=solver, row_ratios=ratios)


def _locate(s: NaturalLSpline, t) -> tuple[np.ndarray, np.ndarray]:
    ta = np.asarray(t, dtype=float)
    knots = s.knots.knots
    if np.any(~np.isfinite(ta)) or np.any((ta < knots[0]) | (ta > knots[-1])):
        raise DomainError(f"evaluation points must lie in [{knots[0]!r}, {knots[-1]!r}]")
    idx = np.clip(np.searchsorted(knots, ta, side="right") - 1, 0, knots.size - 2)
    return ta, idx


def _phi_d(lam, x, deriv: int):
    return phi_eval(lam, x) if deriv == 0 else phi_deriv(lam, x, deriv)


def spline_eval(s: NaturalLSpline, t, deriv: int = 0):
    """Value (or ``deriv``-th derivative, ``deriv <= 3``) of the spline at ``t``."""
    if deriv not in (0, 1, 2, 3):
        raise DomainError(f"deriv must be 0..3, got {deriv}")
    ta, j = _locate(s, t)
    knots = s.knots.knots
    s0 = ta - knots[j]
    if s.newton_coeffs is not None:
        out = sum(s.newton_coeffs[j, k] * _phi_d(s.lam[: k + 1], s0, deriv) for k in range(4))
        return out[()] if np.ndim(out) == 0 else out
    s1 = ta - knots[j + 1]
    c = s.cache
    lam = s.lam
    a2 = _phi_d(lam[:2], s1, deriv) / c.phi01_neg[j]
    b2 = _phi_d(lam[:2], s0, deriv) / c.phi01_pos[j]
    a1 = (_phi_d(lam, s1, deriv) - a2 * c.phi_neg[j]) / c.phi23_neg[j]
    b1 = (_phi_d(lam, s0, deriv) - b2 * c.phi_pos[j]) / c.phi23_pos[j]
    out = s.gamma[j] * a1 + s.gamma[j + 1] * b1 + s.g[j] * a2 + s.g[j + 1] * b2
    return out[()] if np.ndim(out) == 0 else out


def spline_eval_L1(s: NaturalLSpline, t):
    """``(D - l0)(D - l1)`` applied to the spline at ``t``."""
    ta, j = _locate(s, t)
    knots = s.knots.knots
    s0 = ta - knots[j]
    if s.newton_coeffs is not None:
        l0, l1 = s.lam[0], s.lam[1]
        out = 0
        for k in range(2, 4):
            sub = s.lam[: k + 1]
            vals = phi_deriv(sub, s0, 2) - (l0 + l1) * phi_deriv(sub, s0, 1) + l0 * l1 * phi_eval(sub, s0)
            out = out + s.newton_coeffs[j, k] * vals
        return out[()] if np.ndim(out) == 0 else out
    s1 = ta - knots[j + 1]
    c = s.cache
    rest = s.lam[2:]
    out = s.gamma[j] * phi_eval(rest, s1) / c.phi23_neg[j] + s.gamma[j + 1] * phi_eval(rest, s0) / c.phi23_pos[j]
    return out[()] if np.ndim(out) == 0 else out


def identity_residual(s: NaturalLSpline) -> float:
    """``||Q^T g - R gamma||_inf / ||R gamma||_inf`` (absolute when ``R gamma = 0``)."""
    R = build_R(kernel_build(s.lam), s.knots)
    Q = build_Q(s.lam, s.knots)
    rg = R.matvec(s.gamma[1:-1])
    res = np.max(np.abs(Q.rmatvec(s.g) - rg))
    scale = np.max(np.abs(rg))
    return float(res / scale) if scale > 0 else float(res)


def _chain(lam: FrequencyVector, x: float, deriv: int) -> np.ndarray:
    return np.array([complex(_phi_d(lam[: k + 1], x, deriv)) for k in range(4)])


def _chain_L1(lam: FrequencyVector, x: float) -> np.ndarray:
    l0, l1 = lam[0], lam[1]
    return _chain(lam, x, 2) - (l0 + l1) * _chain(lam, x, 1) + l0 * l1 * _chain(lam, x, 0)


def oracle_interpolate(lam, knots, values) -> NaturalLSpline:
    """Dense collocation fit in a local Newton-type basis; independent of ``R`` and ``Q``.

    Unknowns are four coefficients per interval.  Equations: interpolation at
    both ends of each interval, continuity of the first two derivatives at
    interior knots, and ``L1 = 0`` at the two end knots.
    """
    lam = as_frequency_vector(lam)
    if len(lam) != 4:
        raise DomainError(f"need 4 frequencies, got {len(lam)}")
    knots = KnotVector.coerce(knots)
    n = len(knots)
    if n > ORACLE_MAX_KNOTS:
        raise DomainError(f"the dense oracle is limited to {ORACLE_MAX_KNOTS} knots, got {n}")
    knots.check_condition(lam)
    g = _check_values(values, n)
    h = knots.steps
    m = 4 * (n - 1)
    M = np.zeros((m, m), dtype=complex)
    b = np.zeros(m, dtype=complex)
    at0 = [_chain(lam, 0.0, d) for d in range(3)]
    row = 0
    for j in range(n - 1):
        cols = slice(4 * j, 4 * j + 4)
        M[row, cols] = at0[0]
        b[row] = g[j]
        row += 1
        M[row, cols] = _chain(lam, h[j], 0)
        b[row] = g[j + 1]
        row += 1
    for j in range(1, n - 1):
        left, right = slice(4 * (j - 1), 4 * j), slice(4 * j, 4 * j + 4)
        for d in (1, 2):
            M[row, left] = _chain(lam, h[j - 1], d)
            M[row, right] = -at0[d]
            row += 1
    M[row, 0:4] = _chain_L1(lam, 0.0)
    row += 1
    M[row, m - 4 : m] = _chain_L1(lam, h[-1])
    row += 1
    assert row == m

    # column equilibration keeps the k-th chain member (~ h^k / k!) comparable
    colscale = np.max(np.abs(M), axis=0)
    if np.any(colscale == 0):
        raise SingularSystem("collocation matrix has an empty column")
    Ms = M / colscale
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            coef = scipy.linalg.solve(Ms, b) / colscale
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularSystem(f"collocation system is numerically singular: {exc}") from exc
    coeffs = coef.reshape(n - 1, 4)

    gamma = np.zeros(n, dtype=complex)
    for j in range(1, n - 1):
        gamma[j] = coeffs[j] @ _chain_L1(lam, 0.0)
    return NaturalLSpline(lam=lam, knots=knots, g=g, gamma=gamma, solver=SOLVER_ORACLE, newton_coeffs=coeffs)


def oracle_eval(s: NaturalLSpline, t):
    if s.newton_coeffs is None:
        raise DomainError("spline was not produced by oracle_interpolate")
    return spline_eval(s, t)


__all__ = [
    "NaturalLSpline",
    "IntervalCache",
    "thomas_solve",
    "interpolate",
    "spline_eval",
    "spline_eval_L1",
    "identity_residual",
    "oracle_interpolate",
    "oracle_eval",
    "PIVOT_RTOL",
    "SOLVER_THOMAS",
    "SOLVER_BANDED",
    "SOLVER_ORACLE",
]
