"""Finite-difference and Fourier solutions of the bridge Feynman-Kac problem.

Three equations on ``(t, a)`` with ``t`` in ``[0, s]``:

cauchy
    ``-v_t + f''(t) a v = 1/2 v_aa + (1/a - a/(s - t)) v_a``,  ``v(s, .) = 1``.
    Its solution is ``v(t, a) = E[exp(-int_t^s f''(u) X_u du)]`` for the
    Bessel(3) bridge started from ``a`` at time ``t``.
schrodinger
    ``-w_t + f''(t) a w = 1/2 w_aa``; ``v = w / h(s - t, a)`` maps its
    solutions to solutions of the cauchy equation.
heat
    ``omega_tau = 1/2 omega_xx`` (``t_grid`` holds ``tau``).  Solutions of the
    schrodinger equation are
    ``w = exp(1/2 int_t^s f'^2 + a f'(t)) omega(s - t, a + int_t^s f')``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import solve_banded

from .boundary import Boundary, level_density, require_valid
from .errors import ArgumentError, ConfigError, DomainError, NumericalError

__all__ = [
    "Field2D",
    "FourierData",
    "GridSpec",
    "EQUATIONS",
    "solve_cauchy",
    "solve_schrodinger",
    "v_from_w",
    "heat_omega",
    "heat_omega_complex",
    "w_from_heat",
    "pde_residual",
    "gaussian_weight",
    "bump_weight",
]

EQUATIONS = ("cauchy", "schrodinger", "heat")
RANNACHER_STEPS = 2


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``(n_t + 1) x (n_a + 1)`` grid; ``a_max=None`` means ``a + 6 sqrt(s)``."""

    n_t: int = 2000
    n_a: int = 400
    a_min: float = 1e-3
    a_max: float | None = None

    def grids(self, a: float, s: float) -> tuple[np.ndarray, np.ndarray]:
        a_max = a + 6.0 * np.sqrt(s) if self.a_max is None else float(self.a_max)
        if not 0.0 < self.a_min < a_max:
            raise ConfigError(f"need 0 < a_min < a_max, got {self.a_min}, {a_max}")
        if self.n_t < 20 or self.n_a < 16:
            raise ConfigError(f"grid too coarse: n_t={self.n_t} (>= 20), n_a={self.n_a} (>= 16)")
        da = (a_max - self.a_min) / self.n_a
        if da > np.sqrt(s) / 4.0:
            raise ConfigError(
                f"grid too coarse: da={da:.3g} does not resolve the bridge scale sqrt(s)/4={np.sqrt(s) / 4:.3g}"
            )
        return np.linspace(0.0, s, self.n_t + 1), np.linspace(self.a_min, a_max, self.n_a + 1)


@dataclass(frozen=True)
class Field2D:
    t_grid: np.ndarray
    a_grid: np.ndarray
    values: np.ndarray
    equation: str
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.equation not in EQUATIONS:
            raise ArgumentError(f"unknown equation {self.equation!r}")
        t = np.asarray(self.t_grid, dtype=float)
        a = np.asarray(self.a_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (t.size, a.size):
            raise ArgumentError(f"values shape {vals.shape} does not match grid ({t.size}, {a.size})")
        if not np.all(np.isfinite(vals)):
            raise NumericalError(f"{self.equation} field has non-finite entries")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "a_grid", a)
        object.__setattr__(self, "values", vals)

    def window(self, t_slice=slice(None), a_slice=slice(None)) -> "Field2D":
        return Field2D(
            self.t_grid[t_slice], self.a_grid[a_slice], self.values[t_slice, a_slice], self.equation, dict(self.info)
        )

    def value_at(self, t_index: int, a: float) -> float:
        """Linear interpolation in ``a`` along row ``t_index``."""
        return float(np.interp(a, self.a_grid, self.values[t_index]))


# -- cauchy problem ---------------------------------------------------------


def _mean_path_exponent(b: Boundary, s: float, t: np.ndarray, n_gl: int = 24) -> np.ndarray:
    """``int_t^s f''(u) (s - u) / (s - t) du``: the potential along the bridge's mean path per unit ``a``."""
    x, w = legendre.leggauss(n_gl)
    t = np.asarray(t, dtype=float)
    half = 0.5 * (s - t)
    u = t[:, None] + half[:, None] * (x[None, :] + 1.0)
    frac = 0.5 * (1.0 - x)  # (s - u) / (s - t)
    return half * (np.asarray(b.fpp(u)) * frac[None, :]) @ w


def _operator(a, da, drift, potential):
    """Tridiagonal coefficients ``(lower, diag, upper)`` of ``1/2 d_aa + drift d_a - potential``."""
    diff = 0.5 / da ** 2
    lower = np.full(a.size, diff)
    upper = np.full(a.size, diff)
    diag = np.full(a.size, -2.0 * diff) - potential
    central = np.abs(drift) * da <= 1.0
    lower -= np.where(central, drift / (2.0 * da), np.where(drift < 0.0, drift / da, 0.0))
    upper += np.where(central, drift / (2.0 * da), np.where(drift > 0.0, drift / da, 0.0))
    diag -= np.where(central, 0.0, np.abs(drift) / da)
    return lower, diag, upper


def _apply(lower, diag, upper, v):
    out = diag * v
    out[1:] += lower[1:] * v[:-1]
    out[:-1] += upper[:-1] * v[1:]
    return out


def _march(t_grid, a_grid, start_row, terminal, coeffs, dirichlet, theta_at):
    """Backward theta-scheme from row ``start_row`` down to row 0.

    ``coeffs(t)`` returns the operator on the unknown nodes (all but the last,
    or all but first and last when ``dirichlet`` gives two edges).
    ``dirichlet(t)`` returns ``(left, right)`` edge values, ``left`` may be None.
    """
    n_a = a_grid.size
    values = np.empty((t_grid.size, n_a))
    values[start_row] = terminal
    v = terminal.copy()
    left_fixed = dirichlet(t_grid[start_row])[0] is not None
    lo_idx = 1 if left_fixed else 0
    unknown = slice(lo_idx, n_a - 1)
    for n in range(start_row - 1, -1, -1):
        dt = t_grid[n + 1] - t_grid[n]
        theta = theta_at(start_row - n)
        l_new, d_new, u_new = coeffs(t_grid[n])
        l_old, d_old, u_old = coeffs(t_grid[n + 1])
        left_new, right_new = dirichlet(t_grid[n])
        rhs = v[unknown].copy()
        if theta < 1.0:
            full_old = _apply(l_old, d_old, u_old, v[unknown])
            if left_fixed:
                full_old[0] += l_old[0] * v[0]
            full_old[-1] += u_old[-1] * v[-1]
            rhs += (1.0 - theta) * dt * full_old
        if left_fixed:
            rhs[0] += theta * dt * l_new[0] * left_new
        rhs[-1] += theta * dt * u_new[-1] * right_new
        m = rhs.size
        ab = np.zeros((3, m))
        ab[0, 1:] = -theta * dt * u_new[:-1]
        ab[1] = 1.0 - theta * dt * d_new
        ab[2, :-1] = -theta * dt * l_new[1:]
        new = np.empty(n_a)
        new[unknown] = solve_banded((1, 1), ab, rhs)
        if left_fixed:
            new[0] = left_new
        new[-1] = right_new
        v = new
        values[n] = v
    return values


def _theta(step: int) -> float:
    return 1.0 if step <= RANNACHER_STEPS else 0.5


def solve_cauchy(b: Boundary, s: float, grid: GridSpec = GridSpec()) -> Field2D:
    """Backward Crank-Nicolson solution of the bridge Feynman-Kac problem.

    Marching starts at ``t_stop = s (1 - 1/n_t)`` where the terminal layer
    ``[t_stop, s]`` is bridged by the mean-path approximation
    ``v = exp(-a int f''(u) (s - u) / (s - t) du)``; the same expression is
    the Dirichlet value at ``a_max``.  Near ``a_min`` the bridge behaves like
    a Bessel(3) process at the origin, so the node uses the radial symmetry
    ``v_a = 0`` and the limiting generator ``3/2 v_aa``.  Drift is
    discretised centrally where the cell Peclet number allows and upwind
    elsewhere; the first steps are fully implicit to damp the singular
    start.
    """
    if not s > 0.0:
        raise ArgumentError(f"s must be > 0, got {s!r}")
    require_valid(b, s)
    t_grid, a_grid = grid.grids(b.a, s)
    da = a_grid[1] - a_grid[0]
    a_in = a_grid[:-1]
    a_max = a_grid[-1]

    def coeffs(t):
        drift = 1.0 / a_in - a_in / (s - t)
        lower, diag, upper = _operator(a_in, da, drift, float(b.fpp(t)) * a_in)
        # radial symmetry at the inner edge: ghost v_{-1} = v_1, generator -> 3/2 v_aa
        diag[0] = -3.0 / da ** 2 - float(b.fpp(t)) * a_in[0]
        upper[0] = 3.0 / da ** 2
        lower[0] = 0.0
        return lower, diag, upper

    def dirichlet(t):
        if t >= s:
            return None, 1.0
        return None, float(np.exp(-a_max * _mean_path_exponent(b, s, np.array([t]))[0]))

    start = t_grid.size - 2
    terminal = np.exp(-a_grid * _mean_path_exponent(b, s, t_grid[start : start + 1])[0])
    values = _march(t_grid, a_grid, start, terminal, coeffs, dirichlet, _theta)
    values[-1] = 1.0
    return Field2D(t_grid, a_grid, values, "cauchy", {"s": s, "n_t": grid.n_t, "n_a": grid.n_a})


# -- schrodinger form -------------------------------------------------------


def solve_schrodinger(b: Boundary, s: float, grid: GridSpec, terminal_w: np.ndarray) -> Field2D:
    """Backward Crank-Nicolson for ``-w_t + f''(t) a w = 1/2 w_aa`` with ``w(s, .) = terminal_w``.

    Edge values follow the potential alone,
    ``w(t, edge) = terminal_w[edge] exp(-edge (f'(s) - f'(t)))``, which is
    exact for data that has decayed at the edges.
    """
    if not s > 0.0:
        raise ArgumentError(f"s must be > 0, got {s!r}")
    require_valid(b, s)
    t_grid, a_grid = grid.grids(b.a, s)
    terminal = np.asarray(terminal_w, dtype=float)
    if terminal.shape != a_grid.shape:
        raise ArgumentError(f"terminal_w must have {a_grid.size} values on the a-grid")
    da = a_grid[1] - a_grid[0]
    a_in = a_grid[1:-1]
    fp_s = float(b.fp(s))

    def coeffs(t):
        return _operator(a_in, da, np.zeros_like(a_in), float(b.fpp(t)) * a_in)

    def dirichlet(t):
        decay = fp_s - float(b.fp(t))
        return (
            terminal[0] * np.exp(-a_grid[0] * decay),
            terminal[-1] * np.exp(-a_grid[-1] * decay),
        )

    values = _march(t_grid, a_grid, t_grid.size - 1, terminal, coeffs, dirichlet, lambda step: 0.5)
    return Field2D(t_grid, a_grid, values, "schrodinger", {"s": s, "n_t": grid.n_t, "n_a": grid.n_a})


def v_from_w(w: Field2D, s: float) -> Field2D:
    """``v(t, a) = w(t, a) / h(s - t, a)``; rows must satisfy ``t < s``."""
    if np.any(w.t_grid >= s):
        raise DomainError("v_from_w needs t < s on every row (h(0, a) is undefined)")
    if np.any(w.a_grid <= 0.0):
        raise DomainError("v_from_w needs a > 0 on every column")
    h = level_density((s - w.t_grid)[:, None], w.a_grid[None, :])
    return Field2D(w.t_grid, w.a_grid, w.values / h, "cauchy", dict(w.info, s=s))


# -- Fourier / heat representation -------------------------------------------


def gaussian_weight(y):
    return np.exp(-0.5 * np.asarray(y, dtype=float) ** 2)


def bump_weight(y, width: float = 4.0):
    """Smooth compactly supported ``exp(-1 / (1 - (y / width)^2))`` on ``|y| < width``."""
    z = np.asarray(y, dtype=float) / width
    inside = np.abs(z) < 1.0
    out = np.zeros_like(z)
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


@dataclass(frozen=True)
class FourierData:
    pi_fn: Callable = gaussian_weight
    y_max: float = 12.0
    n_y: int = 801
    tol: float = 1e-8


def _omega_quad(fd: FourierData, tau, x, n_y):
    y = np.linspace(-fd.y_max, fd.y_max, n_y)
    w = np.full(n_y, y[1] - y[0])
    w[0] = w[-1] = 0.5 * (y[1] - y[0])
    tau = np.asarray(tau, dtype=float)[..., None]
    x = np.asarray(x, dtype=float)[..., None]
    weight = w * np.asarray(fd.pi_fn(y), dtype=float)
    return (weight * np.exp(-0.5 * y * y * tau + 1j * y * x)).sum(axis=-1) / (2.0 * np.pi)


def heat_omega_complex(fd: FourierData, tau, x):
    """``(1/2 pi) int Pi(y) exp(-y^2 tau / 2 + i y x) dy`` by the trapezoid rule.

    Raises :class:`NumericalError` when doubling the resolution moves the
    result by more than ``fd.tol``.
    """
    if np.any(np.asarray(tau) < 0.0):
        raise DomainError("heat_omega needs tau >= 0")
    coarse = _omega_quad(fd, tau, x, fd.n_y)
    fine = _omega_quad(fd, tau, x, 2 * fd.n_y - 1)
    err = float(np.max(np.abs(fine - coarse)))
    if err > fd.tol:
        raise NumericalError(f"Fourier quadrature not converged (doubling changed result by {err:.2e})")
    return fine if fine.ndim else complex(fine)


def heat_omega(fd: FourierData, tau, x):
    """Real part of :func:`heat_omega_complex`: a solution of ``omega_tau = 1/2 omega_xx``."""
    val = np.real(heat_omega_complex(fd, tau, x))
    return float(val) if np.ndim(val) == 0 else val


def w_from_heat(b: Boundary, fd: FourierData, s: float, t, a):
    """Schrodinger-form solution built from the heat solution ``omega``.

    ``w(t, a) = exp(1/2 int_t^s f'^2 + a f'(t)) omega(s - t, a + int_t^s f')``.
    """
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(t < 0.0) or np.any(t > s):
        raise DomainError("w_from_heat needs 0 <= t <= s")
    t_b, a_b = np.broadcast_arrays(t, a)
    s_arr = np.full(t_b.shape, float(s))
    shift = np.asarray(b.integral_fp(t_b, s_arr))
    growth = np.exp(0.5 * np.asarray(b.integral_fp_sq(t_b, s_arr)) + a_b * np.asarray(b.fp(t_b)))
    out = growth * heat_omega(fd, s - t_b, a_b + shift)
    return float(out) if np.ndim(out) == 0 else out


# -- verification -----------------------------------------------------------


def pde_residual(fld: Field2D, b: Boundary | None = None, s: float | None = None) -> float:
    """Max centred-difference residual over interior nodes, divided by ``max|field|``.

    ``b`` is needed for the cauchy and schrodinger equations, ``s`` for cauchy.
    """
    t, a, v = fld.t_grid, fld.a_grid, fld.values
    if t.size < 3 or a.size < 3:
        raise ArgumentError("residual needs at least 3 points per axis")
    dt = t[2:] - t[:-2]
    da = a[1] - a[0]
    core = v[1:-1, 1:-1]
    v_t = (v[2:, 1:-1] - v[:-2, 1:-1]) / dt[:, None]
    v_a = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * da)
    v_aa = (v[1:-1, 2:] - 2.0 * core + v[1:-1, :-2]) / da ** 2
    tt = t[1:-1, None]
    aa = a[None, 1:-1]
    if fld.equation == "heat":
        res = v_t - 0.5 * v_aa
    else:
        if b is None:
            raise ArgumentError(f"{fld.equation} residual needs the boundary")
        pot = np.asarray(b.fpp(np.broadcast_to(tt, core.shape))) * aa
        res = -v_t + pot * core - 0.5 * v_aa
        if fld.equation == "cauchy":
            if s is None:
                raise ArgumentError("cauchy residual needs s")
            res -= (1.0 / aa - aa / (s - tt)) * v_a
    scale = float(np.max(np.abs(v)))
    if scale == 0.0:
        return float(np.max(np.abs(res)))
    return float(np.max(np.abs(res)) / scale)
