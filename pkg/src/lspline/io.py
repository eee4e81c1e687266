"""Complex literals, CSV ingestion and the JSON result document."""
from __future__ import annotations

import csv
import io as _io
import json
import math
import re
from pathlib import Path

import numpy as np

from .assembly import KnotVector
from .errors import DomainError
from .expcore import FrequencyVector, max_step_delta
from .splinefit import NaturalLSpline

_REAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"""^(?:
        (?P<re>[+-]?{_REAL})(?:(?P<isign>[+-])(?P<imag>{_REAL})?[ij])?   # a, a+bi, a-bi, a+i
      | (?P<only>[+-]?(?:{_REAL})?)[ij]                                  # bi, i, -i
    )$""",
    re.VERBOSE,
)


def parse_complex(text: str) -> complex:
    """Parse ``a``, ``bi``, ``a+bi``, ``a-bi`` (``j`` accepted for ``i``), ignoring whitespace."""
    s = re.sub(r"\s+", "", str(text))
    m = _COMPLEX_RE.match(s)
    if not s or m is None:
        raise DomainError(f"not a complex literal: {text!r}")
    if m.group("re") is not None:
        real = float(m.group("re"))
        if m.group("isign") is None:
            return complex(real, 0.0)
        mag = float(m.group("imag")) if m.group("imag") else 1.0
        return complex(real, mag if m.group("isign") == "+" else -mag)
    only = m.group("only")
    if only in ("", "+"):
        return 1j
    if only == "-":
        return -1j
    return complex(0.0, float(only))


def parse_lambda(text: str) -> FrequencyVector:
    parts = str(text).split(",")
    if len(parts) != 4:
        raise DomainError(f"expected 4 comma-separated frequencies, got {len(parts)}: {text!r}")
    return FrequencyVector(tuple(parse_complex(p) for p in parts))


def parse_reals(text: str) -> np.ndarray:
    try:
        vals = [float(p) for p in str(text).split(",") if p.strip()]
    except ValueError as exc:
        raise DomainError(f"not a list of reals: {text!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise DomainError(f"need finite reals: {text!r}")
    return np.array(vals)


def read_csv(source) -> tuple[np.ndarray, np.ndarray]:
    """Read ``t,value`` rows.  A non-numeric first row is a header; blank lines are skipped.

    Rows are sorted by ``t``; repeated abscissae are an error.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8-sig")
    else:
        text = source.read()
    rows = [r for r in csv.reader(_io.StringIO(text, newline="")) if any(c.strip() for c in r)]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    t, v = [], []
    for k, row in enumerate(rows):
        if len(row) != 2:
            raise DomainError(f"row {k + 1}: expected 2 columns, got {len(row)}")
        try:
            t.append(float(row[0]))
        except ValueError as exc:
            raise DomainError(f"row {k + 1}: bad abscissa {row[0]!r}") from exc
        v.append(parse_complex(row[1]))
    t_arr = np.array(t, dtype=float)
    order = np.argsort(t_arr, kind="stable")
    t_arr = t_arr[order]
    dup = np.flatnonzero(np.diff(t_arr) == 0)
    if dup.size:
        raise DomainError(f"duplicate abscissa t = {t_arr[dup[0]]!r}")
    return t_arr, np.array(v, dtype=complex)[order]


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    re_, im_ = pair
    return complex(re_, im_)


def encode_real(x: float):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode_real(x) -> float:
    return float(x)


def _complex_list(values) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(values).reshape(-1)]


def spline_document(s: NaturalLSpline, grid=None, values=None) -> dict:
    ratios = [] if s.row_ratios is None else [float(r) for r in s.row_ratios]
    doc = {
        "lambda": _complex_list(s.lam.lambdas),
        "delta": encode_real(max_step_delta(s.lam)),
        "knots": [float(t) for t in s.knots.knots],
        "g": _complex_list(s.g),
        "gamma": _complex_list(s.gamma),
        "dominance": {
            "row_ratios": ratios,
            "max_ratio": max(ratios) if ratios else None,
            "strict": s.dominant,
            "solver": s.solver,
        },
        "grid": [] if grid is None else [float(t) for t in grid],
        "values": [] if values is None else _complex_list(values),
    }
    return doc


def spline_from_document(doc: dict) -> NaturalLSpline:
    """Rebuild the spline from a result document without re-solving."""
    lam = FrequencyVector(tuple(decode_complex(z) for z in doc["lambda"]))
    knots = KnotVector(doc["knots"])
    knots.check_condition(lam)
    g = [decode_complex(z) for z in doc["g"]]
    gamma = [decode_complex(z) for z in doc["gamma"]]
    dom = doc.get("dominance") or {}
    ratios = dom.get("row_ratios")
    return NaturalLSpline(
        lam=lam,
        knots=knots,
        g=g,
        gamma=gamma,
        solver=dom.get("solver", "document"),
        row_ratios=None if not ratios else np.array(ratios),
    )


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"
