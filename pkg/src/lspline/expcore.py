"""Exponential polynomials and the fundamental function of ``prod (d/dx - lambda_j)``.

The fundamental function ``Phi_Lambda`` of a frequency multiset
``Lambda = (lambda_0, ..., lambda_N)`` is the solution of ``L Phi = 0`` with
``Phi(0) = ... = Phi^(N-1)(0) = 0`` and ``Phi^(N)(0) = 1``.  Equivalently it
is the divided difference of ``z -> exp(x z)`` over the nodes ``Lambda``,
which is how :func:`phi_eval` computes it.  :func:`phi_expand` returns the
same function in closed form as an :class:`ExpPoly`.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

CLUSTER_RTOL = 1e-9
DROP_RTOL = 1e-14
# |x| * diam(nodes) below this radius -> centred power series
SERIES_RADIUS = 1.0
MAX_SERIES_TERMS = 40

INFINITE_DELTA = math.inf


def _cluster_tol(values: Sequence[complex]) -> float:
    scale = max((abs(v) for v in values), default=0.0)
    return CLUSTER_RTOL * (1.0 + scale)


def cluster_frequencies(values: Iterable[complex], tol: float | None = None):
    """Group nearly equal frequencies (single linkage).

    Returns a list of ``(centre, multiplicity)`` pairs, ordered by first
    appearance.  The centre is the mean of the cluster members.
    """
    vals = [complex(v) for v in values]
    if tol is None:
        tol = _cluster_tol(vals)
    parent = list(range(len(vals)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(vals)), 2):
        if abs(vals[i] - vals[j]) <= tol:
            parent[find(i)] = find(j)

    groups: dict[int, list[complex]] = {}
    order = []
    for i, v in enumerate(vals):
        root = find(i)
        if root not in groups:
            groups[root] = []
            order.append(root)
        groups[root].append(v)
    return [(sum(groups[r]) / len(groups[r]), len(groups[r])) for r in order]


def merged_multiset(values: Iterable[complex]) -> tuple[complex, ...]:
    """Replace every frequency by the centre of its cluster."""
    out = []
    for centre, mult in cluster_frequencies(values):
        out.extend([centre] * mult)
    return tuple(out)


def _multiset_close(a: Sequence[complex], b: Sequence[complex], tol: float) -> bool:
    if len(a) != len(b):
        return False
    for perm in itertools.permutations(range(len(b))):
        if all(abs(a[i] - b[p]) <= tol for i, p in enumerate(perm)):
            return True
    return False


@dataclass(frozen=True)
class FrequencyVector:
    """Ordered tuple of complex frequencies ``(lambda_0, ..., lambda_N)``.

    Order matters for the spline: the first pair fixes the natural boundary
    operator ``L1 = (D - lambda_0)(D - lambda_1)``.
    """

    lambdas: tuple[complex, ...]

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.lambdas)
        if not vals:
            raise DomainError("a frequency vector needs at least one entry")
        if not all(cmath.isfinite(v) for v in vals):
            raise DomainError(f"non-finite frequency in {vals}")
        object.__setattr__(self, "lambdas", vals)

    @classmethod
    def coerce(cls, obj) -> "FrequencyVector":
        if isinstance(obj, cls):
            return obj
        if np.isscalar(obj):
            return cls((obj,))
        return cls(tuple(obj))

    def __len__(self):
        return len(self.lambdas)

    def __iter__(self):
        return iter(self.lambdas)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return FrequencyVector(self.lambdas[item])
        return self.lambdas[item]

    @property
    def order(self) -> int:
        """``N`` for a vector of length ``N + 1``."""
        return len(self.lambdas) - 1

    def __neg__(self):
        return FrequencyVector(tuple(-v for v in self.lambdas))

    def conj(self) -> "FrequencyVector":
        return FrequencyVector(tuple(v.conjugate() for v in self.lambdas))

    def shifted(self, c: complex) -> "FrequencyVector":
        return FrequencyVector(tuple(c + v for v in self.lambdas))

    def as_array(self) -> np.ndarray:
        return np.array(self.lambdas, dtype=complex)

    def __str__(self):
        return "(" + ", ".join(_fmt_complex(v) for v in self.lambdas) + ")"


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}i"


def as_frequency_vector(lam) -> FrequencyVector:
    return FrequencyVector.coerce(lam)


@dataclass(frozen=True)
class Classification:
    is_real: bool
    is_conjugation_invariant: bool
    is_symmetric: bool


def classify(lam) -> Classification:
    """Realness, conjugation invariance and symmetry (``-Lambda == Lambda``).

    For a length-4 vector conjugation invariance is required of each half
    ``(lambda_0, lambda_1)`` and ``(lambda_2, lambda_3)`` separately, which
    is what makes ``R`` and ``Q`` real.
    """
    lam = as_frequency_vector(lam)
    vals = lam.lambdas
    tol = _cluster_tol(vals)
    is_real = all(abs(v.imag) <= tol for v in vals)
    conj = tuple(v.conjugate() for v in vals)
    if len(vals) == 4:
        conj_inv = _multiset_close(vals[:2], conj[:2], tol) and _multiset_close(
            vals[2:], conj[2:], tol
        )
    else:
        conj_inv = _multiset_close(vals, conj, tol)
    symmetric = _multiset_close(vals, tuple(-v for v in vals), tol)
    return Classification(is_real, conj_inv, symmetric)


def max_step_delta(lam) -> float:
    """Largest admissible knot step for a length-4 frequency vector.

    ``min(2 pi / |Im(l1 - l0)|, 2 pi / |Im(l3 - l2)|)``, with ``inf`` when
    both imaginary differences vanish.
    """
    lam = as_frequency_vector(lam)
    if len(lam) != 4:
        raise DomainError(f"step bound needs 4 frequencies, got {len(lam)}")
    bounds = []
    for a, b in ((lam[0], lam[1]), (lam[2], lam[3])):
        d = abs((b - a).imag)
        bounds.append(2.0 * math.pi / d if d > 0 else INFINITE_DELTA)
    return min(bounds)


# ---------------------------------------------------------------------------
# Exponential polynomials
# ---------------------------------------------------------------------------


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return c[:0]
    return c[: nz[-1] + 1]


class ExpPoly:
    """Finite sum ``sum_k P_k(x) exp(mu_k x)``.

    ``terms`` holds ``(mu_k, coeffs_k)`` with coefficients in ascending
    degree.  Construction merges frequencies closer than the cluster
    tolerance and discards empty terms; instances are treated as immutable.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=(), *, drop_rtol: float = 0.0, scale: float | None = None):
        raw = [(complex(mu), np.atleast_1d(np.asarray(c, dtype=complex))) for mu, c in terms]
        self._terms = _normalize(raw, drop_rtol, scale)

    @property
    def terms(self) -> tuple[tuple[complex, np.ndarray], ...]:
        return tuple((mu, c.copy()) for mu, c in self._terms)

    @property
    def frequencies(self) -> tuple[complex, ...]:
        return tuple(mu for mu, _ in self._terms)

    @property
    def dimension(self) -> int:
        return sum(len(c) for _, c in self._terms)

    def max_abs_coeff(self) -> float:
        return max((float(np.max(np.abs(c))) for _, c in self._terms), default=0.0)

    def coeffs_at(self, mu: complex, tol: float | None = None) -> np.ndarray:
        """Coefficients of the term with frequency ``mu`` (empty if absent)."""
        if tol is None:
            tol = _cluster_tol([mu, *self.frequencies])
        for nu, c in self._terms:
            if abs(nu - mu) <= tol:
                return c.copy()
        return np.zeros(0, dtype=complex)

    def __call__(self, x):
        return ep_eval(self, x)

    def __neg__(self):
        return ExpPoly([(mu, -c) for mu, c in self._terms])

    def __add__(self, other):
        if not isinstance(other, ExpPoly):
            return NotImplemented
        scale = max(self.max_abs_coeff(), other.max_abs_coeff())
        return ExpPoly([*self._terms, *other._terms], drop_rtol=DROP_RTOL, scale=scale)

    def __sub__(self, other):
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ExpPoly):
            return ep_mul(self, other)
        return ExpPoly([(mu, complex(other) * c) for mu, c in self._terms])

    __rmul__ = __mul__

    def derivative(self) -> "ExpPoly":
        return ep_derivative(self)

    def shift_op(self, lam: complex) -> "ExpPoly":
        return ep_shift_op(self, lam)

    def deriv_at(self, x: float, order: int) -> complex:
        p = self
        for _ in range(order):
            p = ep_derivative(p)
        return complex(ep_eval(p, x))

    def is_close(self, other: "ExpPoly", rtol: float = 1e-10, atol: float = 0.0) -> bool:
        """Coefficientwise comparison relative to the larger coefficient norm."""
        diff = ExpPoly([*self._terms, *(-other)._terms])
        ref = max(self.max_abs_coeff(), other.max_abs_coeff())
        return diff.max_abs_coeff() <= atol + rtol * ref

    def __repr__(self):
        parts = []
        for mu, c in self._terms:
            poly = " + ".join(f"({complex(v):.6g})x^{k}" for k, v in enumerate(c) if v != 0)
            parts.append(f"[{poly}]e^({mu:.6g}x)")
        return "ExpPoly(" + (" + ".join(parts) or "0") + ")"


def _normalize(raw, drop_rtol: float, scale: float | None):
    if not raw:
        return ()
    mus = [mu for mu, _ in raw]
    tol = _cluster_tol(mus)
    groups: list[tuple[list[complex], np.ndarray]] = []
    for mu, c in raw:
        for members, acc in groups:
            if any(abs(mu - m) <= tol for m in members):
                members.append(mu)
                if len(c) > len(acc):
                    acc.resize(len(c), refcheck=False)
                acc[: len(c)] += c
                break
        else:
            groups.append(([mu], np.array(c, dtype=complex)))
    if drop_rtol > 0:
        if scale is None:
            scale = max(float(np.max(np.abs(acc))) if acc.size else 0.0 for _, acc in groups)
        cut = drop_rtol * scale
        for _, acc in groups:
            acc[np.abs(acc) <= cut] = 0.0
    out = []
    for members, acc in groups:
        acc = _trim(acc)
        if acc.size:
            out.append((sum(members) / len(members), acc))
    return tuple(out)


def ep_eval(p: ExpPoly, x):
    """Evaluate ``sum P_k(x) exp(mu_k x)`` (Horner per term)."""
    xa = np.asarray(x, dtype=float)
    total = np.zeros(xa.shape, dtype=complex)
    for mu, c in p._terms:
        acc = np.zeros(xa.shape, dtype=complex)
        for coef in c[::-1]:
            acc = acc * xa + coef
        total += acc * np.exp(mu * xa)
    return complex(total) if total.ndim == 0 else total


def ep_derivative(p: ExpPoly) -> ExpPoly:
    """``(P e^{mu x})' = (P' + mu P) e^{mu x}`` termwise."""
    out = []
    for mu, c in p._terms:
        d = mu * c
        if len(c) > 1:
            d[:-1] += c[1:] * np.arange(1, len(c))
        out.append((mu, d))
    return ExpPoly(out, drop_rtol=DROP_RTOL, scale=_deriv_scale(p))


def _deriv_scale(p: ExpPoly) -> float:
    return max(
        (float(np.max(np.abs(c))) * max(abs(mu), len(c)) for mu, c in p._terms),
        default=0.0,
    )


def ep_mul(p: ExpPoly, q: ExpPoly) -> ExpPoly:
    out = []
    scale = 0.0
    for mu, a in p._terms:
        for nu, b in q._terms:
            out.append((mu + nu, np.convolve(a, b)))
            scale = max(scale, float(np.max(np.abs(a))) * float(np.max(np.abs(b))))
    return ExpPoly(out, drop_rtol=DROP_RTOL, scale=scale)


def ep_shift_op(p: ExpPoly, lam: complex) -> ExpPoly:
    """``D_lam p = p' - lam p``."""
    lam = complex(lam)
    out = []
    for mu, c in p._terms:
        d = (mu - lam) * c
        if len(c) > 1:
            d[:-1] += c[1:] * np.arange(1, len(c))
        out.append((mu, d))
    scale = max(_deriv_scale(p), abs(lam) * p.max_abs_coeff())
    return ExpPoly(out, drop_rtol=DROP_RTOL, scale=scale)


def _inverse_power_series(d: complex, m: int, order: int) -> np.ndarray:
    """Taylor coefficients in ``eps`` of ``(d + eps)^(-m)`` up to ``eps^order``."""
    r = np.arange(order + 1)
    binom = np.array([comb(m + k - 1, k) for k in r], dtype=float)
    return binom * (-1.0) ** r * d ** (-m - r)


def phi_expand(lam) -> ExpPoly:
    """Closed form of the fundamental function by partial fractions.

    Residues of ``exp(xz) / prod (z - mu_k)^{m_k}`` at each merged frequency.
    """
    lam = as_frequency_vector(lam)
    clusters = cluster_frequencies(lam.lambdas)
    terms = []
    for k, (mu, m) in enumerate(clusters):
        g = np.zeros(m, dtype=complex)
        g[0] = 1.0
        for j, (nu, mj) in enumerate(clusters):
            if j == k:
                continue
            g = np.convolve(g, _inverse_power_series(mu - nu, mj, m - 1))[:m]
        coeffs = np.array([g[m - 1 - s] / factorial(s) for s in range(m)], dtype=complex)
        terms.append((mu, coeffs))
    return ExpPoly(terms)


# ---------------------------------------------------------------------------
# Fundamental function by divided differences
# ---------------------------------------------------------------------------


def _complete_homogeneous(nodes: np.ndarray, mmax: int) -> np.ndarray:
    """``h_0 .. h_mmax`` of the given variables."""
    h = np.zeros(mmax + 1, dtype=complex)
    h[0] = 1.0
    for v in nodes:
        for m in range(1, mmax + 1):
            h[m] += v * h[m - 1]
    return h


def _series_dd(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Divided difference of ``exp(x z)`` by the power series about the node mean.

    ``Phi_nu(x) = sum_m h_m(nu) x^(N+m) / (N+m)!`` for the centred nodes
    ``nu``; only used while ``|x| * max|nu|`` is at most ``SERIES_RADIUS``.
    """
    n = len(nodes) - 1
    centre = nodes.mean()
    nu = nodes - centre
    r = float(np.max(np.abs(x))) * float(np.max(np.abs(nu))) if x.size else 0.0
    # |h_m| x^m / (N+m)! * N! <= C(N+m, m) r^m N!/(N+m)! = r^m / m!
    mmax = 0
    bound = 1.0
    while mmax < MAX_SERIES_TERMS and bound > 1e-18:
        mmax += 1
        bound *= r / mmax
    h = _complete_homogeneous(nu, mmax)
    p = x.astype(complex) ** n / factorial(n)
    total = h[0] * p
    for m in range(1, mmax + 1):
        p = p * x / (n + m)
        total = total + h[m] * p
    return total * np.exp(centre * x)


def _dd_exp(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Divided difference of ``z -> exp(x z)`` over ``nodes``, vectorised in ``x``.

    Subsets whose spread is small against ``1/|x|`` use the series; larger
    ones split off the two most distant nodes,
    ``f[S] = (f[S - a] - f[S - b]) / (b - a)``, so every division is by a
    well separated difference.
    """
    if len(nodes) == 1:
        return np.exp(nodes[0] * x)
    dist = np.abs(nodes[:, None] - nodes[None, :])
    a, b = np.unravel_index(np.argmax(dist), dist.shape)
    diam = dist[a, b]
    near = np.abs(x) * diam <= SERIES_RADIUS
    out = np.empty(x.shape, dtype=complex)
    if near.any():
        out[near] = _series_dd(nodes, x[near])
    far = ~near
    if far.any():
        xs = x[far]
        without_a = _dd_exp(np.delete(nodes, a), xs)
        without_b = _dd_exp(np.delete(nodes, b), xs)
        out[far] = (without_a - without_b) / (nodes[b] - nodes[a])
    return out


def phi_eval(lam, x):
    """Fundamental function ``Phi_lam(x)`` (scalar or array ``x``)."""
    lam = as_frequency_vector(lam)
    nodes = np.array(merged_multiset(lam.lambdas), dtype=complex)
    xa = np.asarray(x, dtype=float)
    flat = xa.reshape(-1)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = _dd_exp(nodes, flat).reshape(xa.shape)
    return complex(vals) if vals.ndim == 0 else vals


def phi_deriv(lam, x, order: int = 1):
    """``d^order/dx^order Phi_lam(x)``.

    Uses ``Phi_lam' = Phi_{lam[:-1]} + lam[-1] Phi_lam`` (the recurrence
    behind ``(D - lam_N) Phi_lam = Phi_{lam[:-1]}``) with ``Phi_() = 0``.
    """
    lam = as_frequency_vector(lam)
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    if order == 0:
        return phi_eval(lam, x)
    last = lam[-1]
    rest = last * phi_deriv(lam, x, order - 1)
    if len(lam) == 1:
        return rest
    return phi_deriv(lam[:-1], x, order - 1) + rest


def phi_series_coeffs(lam, kmax: int) -> np.ndarray:
    """Maclaurin coefficients ``c_0 .. c_kmax`` of ``Phi_lam``."""
    lam = as_frequency_vector(lam)
    n = lam.order
    c = np.zeros(kmax + 1, dtype=complex)
    if kmax < n:
        return c
    h = _complete_homogeneous(lam.as_array(), kmax - n)
    for k in range(n, kmax + 1):
        c[k] = h[k - n] / factorial(k)
    return c


@dataclass(frozen=True)
class TaylorCoeffs:
    """``Phi = x^3/3! + A x^4/4! + B x^5/5! + ...`` and ``Phi_(l0,l1) = x + C x^2/2 + D x^3/6 + ...``."""

    A: complex
    B: complex
    C: complex
    D: complex


def phi_taylor(lam) -> TaylorCoeffs:
    lam = as_frequency_vector(lam)
    if len(lam) != 4:
        raise DomainError(f"Taylor data needs 4 frequencies, got {len(lam)}")
    l0, l1, l2, l3 = lam.lambdas
    a = l0 + l1 + l2 + l3
    b = a * a / 2 + (l0 * l0 + l1 * l1 + l2 * l2 + l3 * l3) / 2
    return TaylorCoeffs(A=a, B=b, C=l0 + l1, D=l0 * l0 + l0 * l1 + l1 * l1)
