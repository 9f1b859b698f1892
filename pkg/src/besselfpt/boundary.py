"""Moving boundaries ``f(t) = a + int_0^t f'(u) du`` and the fixed-level hitting density.

Two boundary families are supported:

* :class:`PolynomialBoundary` -- ``f(t) = c0 + c1 t + ... + c4 t^4``.  All
  evaluators and both integrals are exact.
* :class:`TabulatedBoundary` -- user-supplied ``(t, f', f'')`` tables.  ``f'``
  and ``f''`` are each interpolated piecewise-linearly; the integrals of ``f'``
  and ``f'^2`` are then computed exactly segment by segment.

All boundaries are immutable and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ArgumentError, ConfigError, DomainError, ValidationError

__all__ = [
    "Boundary",
    "PolynomialBoundary",
    "TabulatedBoundary",
    "ValidationReport",
    "boundary_from_dict",
    "eval_f",
    "eval_fp",
    "eval_fpp",
    "integral_fp",
    "integral_fp_sq",
    "level_density",
    "validate",
    "require_valid",
]

MAX_DEGREE = 4
VALIDATION_POINTS = 1024
LINEAR_TOL = 1e-14


class Boundary:
    """Common interface of the boundary families.

    Subclasses provide vectorised ``f``, ``fp``, ``fpp`` and the cumulative
    integrals ``_cum_fp`` and ``_cum_fp_sq`` measured from ``t = 0``.
    """

    a: float
    horizon: float = math.inf

    def f(self, t):
        raise NotImplementedError

    def fp(self, t):
        raise NotImplementedError

    def fpp(self, t):
        raise NotImplementedError

    def _cum_fp(self, t):
        raise NotImplementedError

    def _cum_fp_sq(self, t):
        raise NotImplementedError

    @property
    def is_linear(self) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _check_time(self, t) -> np.ndarray:
        arr = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
            raise DomainError(f"time must be finite and >= 0, got {t!r}")
        if np.any(arr > self.horizon):
            raise DomainError(
                f"time {t!r} beyond the tabulated horizon {self.horizon}"
            )
        return arr

    def integral_fp(self, t0, t1):
        """``int_{t0}^{t1} f'(u) du``."""
        t0a, t1a = self._check_interval(t0, t1)
        return _maybe_scalar(self._cum_fp(t1a) - self._cum_fp(t0a))

    def integral_fp_sq(self, t0, t1):
        """``int_{t0}^{t1} f'(u)^2 du``."""
        t0a, t1a = self._check_interval(t0, t1)
        return _maybe_scalar(self._cum_fp_sq(t1a) - self._cum_fp_sq(t0a))

    def _check_interval(self, t0, t1):
        t0a = self._check_time(t0)
        t1a = self._check_time(t1)
        if np.any(t0a > t1a):
            raise ArgumentError(f"need t0 <= t1, got t0={t0!r}, t1={t1!r}")
        return t0a, t1a


def _maybe_scalar(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class PolynomialBoundary(Boundary):
    """``f(t) = sum_k coeffs[k] t^k`` with degree at most 4; ``a = coeffs[0]``."""

    coeffs: tuple[float, ...]
    _p: Polynomial = field(init=False, repr=False, compare=False)
    _dp: Polynomial = field(init=False, repr=False, compare=False)
    _ddp: Polynomial = field(init=False, repr=False, compare=False)
    _dp_sq_int: Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not 1 <= len(coeffs) <= MAX_DEGREE + 1:
            raise ArgumentError(
                f"polynomial boundary needs 1..{MAX_DEGREE + 1} coefficients, got {len(coeffs)}"
            )
        if not all(math.isfinite(c) for c in coeffs):
            raise ArgumentError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)
        p = Polynomial(coeffs)
        dp = p.deriv()
        object.__setattr__(self, "_p", p)
        object.__setattr__(self, "_dp", dp)
        object.__setattr__(self, "_ddp", dp.deriv())
        object.__setattr__(self, "_dp_sq_int", (dp * dp).integ())

    @property
    def a(self) -> float:
        return self.coeffs[0]

    @property
    def is_linear(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[2:])

    def f(self, t):
        return _maybe_scalar(self._p(self._check_time(t)))

    def fp(self, t):
        return _maybe_scalar(self._dp(self._check_time(t)))

    def fpp(self, t):
        return _maybe_scalar(self._ddp(self._check_time(t)))

    def _cum_fp(self, t):
        return self._p(t) - self.coeffs[0]

    def _cum_fp_sq(self, t):
        return self._dp_sq_int(t)

    def to_dict(self) -> dict:
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class TabulatedBoundary(Boundary):
    """Boundary given by tables of ``f'`` and ``f''`` on ``0 = t_0 < ... < t_m``.

    ``f'`` and ``f''`` are interpolated linearly and independently, so the
    user is responsible for their mutual consistency.  Evaluation beyond
    ``t_m`` raises :class:`DomainError`.
    """

    a: float
    times: tuple[float, ...]
    fp_values: tuple[float, ...]
    fpp_values: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        fp = np.asarray(self.fp_values, dtype=float)
        fpp = np.asarray(self.fpp_values, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ArgumentError("tabulated boundary needs at least two time points")
        if not (t.shape == fp.shape == fpp.shape):
            raise ArgumentError("times, fp and fpp must have equal lengths")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise ArgumentError("times must start at 0 and increase strictly")
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fpp)) and math.isfinite(self.a)):
            raise ArgumentError("tabulated values must be finite")
        for name, arr in (("times", t), ("fp_values", fp), ("fpp_values", fpp)):
            object.__setattr__(self, name, tuple(arr.tolist()))
        object.__setattr__(self, "a", float(self.a))
        # exact cumulative integrals at the nodes
        dt = np.diff(t)
        seg1 = 0.5 * dt * (fp[:-1] + fp[1:])
        seg2 = dt * (fp[:-1] ** 2 + fp[:-1] * fp[1:] + fp[1:] ** 2) / 3.0
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_fp", fp)
        object.__setattr__(self, "_fpp", fpp)
        object.__setattr__(self, "_c1", np.concatenate([[0.0], np.cumsum(seg1)]))
        object.__setattr__(self, "_c2", np.concatenate([[0.0], np.cumsum(seg2)]))

    @property
    def horizon(self) -> float:
        return self.times[-1]

    @property
    def is_linear(self) -> bool:
        return bool(np.all(self._fpp == 0.0))

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self._t, t, side="right") - 1, 0, self._t.size - 2)
        x = t - self._t[i]
        slope = (self._fp[i + 1] - self._fp[i]) / (self._t[i + 1] - self._t[i])
        return i, x, self._fp[i], slope

    def f(self, t):
        t = self._check_time(t)
        return _maybe_scalar(self.a + self._cum_fp(t))

    def fp(self, t):
        return _maybe_scalar(np.interp(self._check_time(t), self._t, self._fp))

    def fpp(self, t):
        return _maybe_scalar(np.interp(self._check_time(t), self._t, self._fpp))

    def _cum_fp(self, t):
        i, x, p0, m = self._locate(t)
        return self._c1[i] + p0 * x + 0.5 * m * x * x

    def _cum_fp_sq(self, t):
        i, x, p0, m = self._locate(t)
        return self._c2[i] + p0 * p0 * x + p0 * m * x * x + m * m * x ** 3 / 3.0

    def to_dict(self) -> dict:
        return {
            "kind": "tabulated",
            "a": self.a,
            "times": list(self.times),
            "fp": list(self.fp_values),
            "fpp": list(self.fpp_values),
        }


def boundary_from_dict(spec: Mapping[str, Any]) -> Boundary:
    """Build a boundary from its JSON form.

    ``{"kind": "polynomial", "coeffs": [c0, c1, ...]}`` or
    ``{"kind": "tabulated", "a": a, "times": [...], "fp": [...], "fpp": [...]}``.
    """
    if not isinstance(spec, Mapping):
        raise ConfigError("boundary must be a JSON object")
    kind = spec.get("kind")
    try:
        if kind == "polynomial":
            _reject_unknown(spec, {"kind", "coeffs"})
            return PolynomialBoundary(tuple(spec["coeffs"]))
        if kind == "tabulated":
            _reject_unknown(spec, {"kind", "a", "times", "fp", "fpp"})
            return TabulatedBoundary(
                a=spec["a"],
                times=tuple(spec["times"]),
                fp_values=tuple(spec["fp"]),
                fpp_values=tuple(spec["fpp"]),
            )
    except KeyError as exc:
        raise ConfigError(f"boundary is missing key {exc.args[0]!r}") from None
    except (ArgumentError, TypeError) as exc:
        raise ConfigError(f"bad boundary: {exc}") from None
    raise ConfigError(f"unknown boundary kind {kind!r}")


def _reject_unknown(spec, allowed):
    extra = set(spec) - allowed
    if extra:
        raise ConfigError(f"unknown boundary keys: {sorted(extra)}")


# -- functional interface ---------------------------------------------------


def eval_f(b: Boundary, t):
    return b.f(t)


def eval_fp(b: Boundary, t):
    return b.fp(t)


def eval_fpp(b: Boundary, t):
    return b.fpp(t)


def integral_fp(b: Boundary, t0, t1):
    return b.integral_fp(t0, t1)


def integral_fp_sq(b: Boundary, t0, t1):
    return b.integral_fp_sq(t0, t1)


def level_density(s, a):
    """Density of the first time a standard Brownian motion hits level ``a``.

    ``h(s, a) = |a| / sqrt(2 pi s^3) * exp(-a^2 / (2 s))``, vectorised over
    both arguments.
    """
    s_arr = np.asarray(s, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    if np.any(~(s_arr > 0.0)):
        raise DomainError(f"level density needs s > 0, got {s!r}")
    out = np.abs(a_arr) / np.sqrt(2.0 * np.pi * s_arr ** 3) * np.exp(-a_arr ** 2 / (2.0 * s_arr))
    return _maybe_scalar(out)


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    reasons: tuple[str, ...] = ()
    degenerate_linear: bool = False
    horizon: float = 0.0

    def __bool__(self) -> bool:
        return self.passed


def validate(b: Boundary, horizon: float) -> ValidationReport:
    """Check the convexity and integrability hypotheses on ``[0, horizon]``.

    Linear boundaries (``f'' == 0`` within 1e-14 on the whole grid) pass with
    ``degenerate_linear`` set.  Failures are reported, never raised.
    """
    if not horizon > 0.0:
        raise ArgumentError(f"horizon must be > 0, got {horizon!r}")
    reasons = []
    if b.horizon < horizon:
        reasons.append(f"horizon {horizon} exceeds tabulated range {b.horizon}")
        return ValidationReport(False, tuple(reasons), False, horizon)
    grid = np.linspace(0.0, horizon, VALIDATION_POINTS)
    fpp = np.asarray(b.fpp(grid))
    degenerate = bool(np.all(np.abs(fpp) <= LINEAR_TOL))
    if not degenerate and not np.all(fpp > 0.0):
        reasons.append("f″ ≤ 0 somewhere on [0, horizon]")
    if not math.isfinite(b.integral_fp_sq(0.0, horizon)):
        reasons.append("integral of f′² is not finite")
    if b.a == 0.0:
        reasons.append("a = 0: boundary starts at the process")
    elif b.a < 0.0:
        reasons.append("a < 0: boundary starts below the process")
    return ValidationReport(not reasons, tuple(reasons), degenerate, horizon)


def require_valid(b: Boundary, horizon: float) -> ValidationReport:
    """Like :func:`validate` but raise :class:`ValidationError` on failure."""
    report = validate(b, horizon)
    if not report.passed:
        raise ValidationError("; ".join(report.reasons), report)
    return report
