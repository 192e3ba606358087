"""Variable coefficients, the x -> y change of variables, and smallness checks.

Coefficients enter the wave equation as a(x) u_xx + b(x) u_x + c(x) u with
a -> 1 at infinity.  Straightening the second-order term with
y = int_0^x a^{-1/2} turns this into u_yy + b_y(y) u_y + c_y(y) u, and the
whole analysis downstream works with the y-form pair (b_y, c_y) plus the
weight omega = exp(int b_y), which makes the drifted operators self-adjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erf

from .errors import EllipticityViolation, NonInvertibleMap
from .grid import Grid
from .quadrature import norm_l1, prefix_integral


# --------------------------------------------------------------------------
# coefficient building blocks


@dataclass(frozen=True)
class Bump:
    """Localized coefficient bump with analytic derivative and antiderivative.

    Families: 'gaussian'  A exp(-((y-c)/w)^2)
              'sech2'     A sech((y-c)/w)^2
              'exp'       A exp(-|y-c|/w)   (corner at the center)
    """

    family: str
    amplitude: float
    width: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if self.family not in ("gaussian", "sech2", "exp"):
            raise ValueError(f"unknown coefficient family {self.family!r}")
        if self.width <= 0:
            raise ValueError("bump width must be positive")

    def __call__(self, y):
        s = (np.asarray(y, dtype=float) - self.center) / self.width
        if self.family == "gaussian":
            return self.amplitude * np.exp(-(s**2))
        if self.family == "sech2":
            return self.amplitude / np.cosh(s) ** 2
        return self.amplitude * np.exp(-np.abs(s))

    def deriv(self, y):
        s = (np.asarray(y, dtype=float) - self.center) / self.width
        if self.family == "gaussian":
            return self.amplitude * (-2.0 * s / self.width) * np.exp(-(s**2))
        if self.family == "sech2":
            return (
                -2.0
                * self.amplitude
                / self.width
                * np.tanh(s)
                / np.cosh(s) ** 2
            )
        # a.e. derivative; value 0 at the corner itself
        return -self.amplitude / self.width * np.sign(s) * np.exp(-np.abs(s))

    def antiderivative(self, y):
        """Antiderivative vanishing at -infinity."""
        s = (np.asarray(y, dtype=float) - self.center) / self.width
        a, w = self.amplitude, self.width
        if self.family == "gaussian":
            return a * w * 0.5 * math.sqrt(math.pi) * (erf(s) + 1.0)
        if self.family == "sech2":
            return a * w * (np.tanh(s) + 1.0)
        return a * w * np.where(s < 0, np.exp(s), 2.0 - np.exp(-s))

    @property
    def l1(self) -> float:
        a, w = abs(self.amplitude), self.width
        if self.family == "gaussian":
            return a * w * math.sqrt(math.pi)
        return 2.0 * a * w  # sech2 and exp both integrate to 2 a w


class SumCoefficient:
    """Sum of bumps (possibly empty) with the same callable protocol."""

    def __init__(self, terms: Sequence[Bump] = ()):
        self.terms = tuple(terms)

    def __call__(self, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for t in self.terms:
            out = out + t(y)
        return out

    def deriv(self, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for t in self.terms:
            out = out + t.deriv(y)
        return out

    def antiderivative(self, y):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for t in self.terms:
            out = out + t.antiderivative(y)
        return out

    @property
    def is_zero(self) -> bool:
        return all(t.amplitude == 0.0 for t in self.terms)


ZERO = SumCoefficient(())


class TabulatedCoefficient:
    """Coefficient from (position, value) samples; cubic inside the table,
    zero outside."""

    def __init__(self, positions: np.ndarray, values: np.ndarray):
        positions = np.asarray(positions, dtype=float)
        values = np.asarray(values, dtype=float)
        if positions.ndim != 1 or positions.shape != values.shape:
            raise ValueError("tabulated coefficient needs two equal 1-d columns")
        if np.any(np.diff(positions) <= 0):
            raise ValueError("tabulated positions must be strictly increasing")
        self.lo = positions[0]
        self.hi = positions[-1]
        self._spline = CubicSpline(positions, values)
        self._dspline = self._spline.derivative()
        self._aspline = self._spline.antiderivative()

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.lo) & (y <= self.hi)
        out = np.zeros_like(y)
        out[inside] = self._spline(y[inside])
        return out

    def deriv(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.lo) & (y <= self.hi)
        out = np.zeros_like(y)
        out[inside] = self._dspline(y[inside])
        return out

    def antiderivative(self, y):
        y = np.asarray(y, dtype=float)
        out = np.full_like(y, float(self._aspline(self.hi) - self._aspline(self.lo)))
        inside = y < self.hi
        out[inside & (y >= self.lo)] = self._aspline(y[inside & (y >= self.lo)]) - float(
            self._aspline(self.lo)
        )
        out[y < self.lo] = 0.0
        return out


# --------------------------------------------------------------------------
# profiles and the coordinate change


@dataclass(frozen=True)
class CoefficientProfile:
    """Coefficients of the original x-form equation.  `a` must stay positive
    and tend to 1; `da` is its derivative."""

    a: Callable
    da: Callable
    b: Callable
    c: Callable


@dataclass(frozen=True)
class DeltaReport:
    """L1/Linf norms of |b| + |c| in the working variable, against C0 * delta."""

    l1: float
    linf: float
    delta: float
    c0: float

    @property
    def bound(self) -> float:
        return self.c0 * self.delta

    @property
    def passed(self) -> bool:
        return self.l1 + self.linf <= self.bound


@dataclass(frozen=True)
class TransformedCoefficients:
    """Drift/potential coefficients of the straightened (y-form) equation."""

    b_y: Callable
    c_y: Callable
    omega: Callable  # exp(int_{-inf}^y b_y), normalized to 1 far left
    x_of_y: Callable
    y_of_x: Callable
    delta_report: DeltaReport
    grid: Grid
    b_y_deriv: Callable | None = None

    @property
    def is_trivial(self) -> bool:
        y = self.grid.y
        return float(np.max(np.abs(self.b_y(y))) + np.max(np.abs(self.c_y(y)))) == 0.0


def _measure_smallness(b: Callable, c: Callable, grid: Grid, delta: float, c0: float) -> DeltaReport:
    y = grid.y
    total = np.abs(b(y)) + np.abs(c(y))
    return DeltaReport(
        l1=norm_l1(total, grid.h),
        linf=float(np.max(total)),
        delta=delta,
        c0=c0,
    )


def check_smallness(tc: TransformedCoefficients, delta: float, c0: float = 2.0) -> DeltaReport:
    """Measure the L1 + Linf size of |b_y| + |c_y| against C0 * delta."""
    return _measure_smallness(tc.b_y, tc.c_y, tc.grid, delta, c0)


def from_y_form(
    b,
    c,
    grid: Grid,
    *,
    delta: float | None = None,
    c0: float = 2.0,
) -> TransformedCoefficients:
    """Coefficients given directly in the straightened variable (a == 1)."""
    b = b if b is not None else ZERO
    c = c if c is not None else ZERO

    if hasattr(b, "antiderivative"):
        bint = b.antiderivative

        def omega(y):
            return np.exp(bint(y))

    else:
        yy = grid.refined(4).y
        integral = prefix_integral(b(yy), grid.h / 4.0)
        spl = CubicSpline(yy, integral)

        def omega(y):
            y = np.clip(np.asarray(y, dtype=float), -grid.L, grid.L)
            return np.exp(spl(y))

    ident = lambda x: np.asarray(x, dtype=float)
    report = _measure_smallness(b, c, grid, delta if delta is not None else 0.0, c0)
    if delta is None:
        report = DeltaReport(report.l1, report.linf, report.l1 + report.linf, c0)
    return TransformedCoefficients(
        b_y=b,
        c_y=c,
        omega=omega,
        x_of_y=ident,
        y_of_x=ident,
        delta_report=report,
        grid=grid,
        b_y_deriv=b.deriv if hasattr(b, "deriv") else None,
    )


def trivial(grid: Grid) -> TransformedCoefficients:
    """b = c = 0 on the given grid."""
    return from_y_form(ZERO, ZERO, grid, delta=0.0)


def transform_to_y(
    profile: CoefficientProfile,
    grid: Grid,
    *,
    delta: float | None = None,
    c0: float = 2.0,
    refine: int = 4,
    x_margin: float = 1.25,
) -> TransformedCoefficients:
    """Straighten the second-order coefficient by y = int_0^x a^{-1/2}.

    The drift picked up by the change of variables is
    b_y = a^{-1/2} (b - a'/2) evaluated at x(y), and c_y = c(x(y)).
    The inverse map and the antiderivative of b_y are built as splines on a
    refined x-grid, so that omega'/omega reproduces b_y to discretization
    accuracy.
    """
    n_x = grid.n * refine
    # the x-window must cover y-range [-L, L]; since a ~ 1 a modest margin does
    for attempt in range(3):
        Lx = grid.L * x_margin * (1.3**attempt)
        x = np.linspace(-Lx, Lx, n_x + 1)
        hx = x[1] - x[0]
        a = np.asarray(profile.a(x), dtype=float)
        if np.any(a <= 0.0):
            raise EllipticityViolation(
                f"a(x) <= 0 at x = {x[int(np.argmin(a))]:.6g}"
            )
        y_nodes = prefix_integral(a ** (-0.5), hx)
        y_nodes -= y_nodes[n_x // 2]  # anchor y(0) = 0
        if np.any(np.diff(y_nodes) <= 0.0):
            raise NonInvertibleMap("y(x) is not strictly increasing")
        if y_nodes[0] < -grid.L and y_nodes[-1] > grid.L:
            break
    else:
        raise NonInvertibleMap(
            f"y-range ({y_nodes[0]:.3g}, {y_nodes[-1]:.3g}) does not cover the grid"
        )

    y_of_x_spl = CubicSpline(x, y_nodes)
    x_of_y_spl = CubicSpline(y_nodes, x)

    def x_of_y(y):
        return x_of_y_spl(np.clip(np.asarray(y, dtype=float), y_nodes[0], y_nodes[-1]))

    def y_of_x(xv):
        return y_of_x_spl(np.clip(np.asarray(xv, dtype=float), -Lx, Lx))

    def b_y(y):
        xv = x_of_y(y)
        av = np.asarray(profile.a(xv), dtype=float)
        return (np.asarray(profile.b(xv)) - 0.5 * np.asarray(profile.da(xv))) / np.sqrt(av)

    def c_y(y):
        return np.asarray(profile.c(x_of_y(y)), dtype=float)

    # int b_y dy = int (b - a'/2)/a dx = int b/a dx - (1/2) log a
    ba = np.asarray(profile.b(x), dtype=float) / a
    J = prefix_integral(ba, hx)
    log_omega_nodes = J - 0.5 * np.log(a) + 0.5 * math.log(float(a[0]))
    log_omega_spl = CubicSpline(x, log_omega_nodes)

    def omega(y):
        return np.exp(log_omega_spl(x_of_y(y)))

    # drift derivative: fourth-order differences of b_y on the refined y-grid
    yy = grid.refined(min(refine, 4)).y
    from .quadrature import deriv1

    db_spl = CubicSpline(yy, deriv1(b_y(yy), yy[1] - yy[0]))

    def b_y_deriv(y):
        return db_spl(np.clip(np.asarray(y, dtype=float), yy[0], yy[-1]))

    report = _measure_smallness(b_y, c_y, grid, delta if delta is not None else 0.0, c0)
    if delta is None:
        report = DeltaReport(report.l1, report.linf, report.l1 + report.linf, c0)
    return TransformedCoefficients(
        b_y=b_y,
        c_y=c_y,
        omega=omega,
        x_of_y=x_of_y,
        y_of_x=y_of_x,
        delta_report=report,
        grid=grid,
        b_y_deriv=b_y_deriv,
    )
