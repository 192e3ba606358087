"""Stationary kink of the variable-coefficient equation.

The corrected kink T = S + S_b solves -T'' - b T' - c T + F'(T) = 0.  The
correction satisfies a fixed-point equation driven by the inverse of the
background operator  L_b = -d^2/dy^2 - b d/dy + (F''(S) - c):

    S_b  =  G[b S' + c S]  -  G[N(S, S_b)],
    N(S, eta) = F'(S + eta) - F'(S) - F''(S) eta,

where G is the Green's operator built from the two decaying solutions of
L_b at spectral parameter zero.  The iteration starts from zero, so its
first iterate is the O(delta) approximation of S_b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .coeffs import TransformedCoefficients
from .errors import ContractionFailure, ZeroEigenvalueDetected
from .grid import Grid
from .jost import MINUS_INFINITY, PLUS_INFINITY, EigenProblem, JostSolution, jost
from .model import KinkS, Potential
from .quadrature import (
    deriv2_decaying,
    norm_l1,
    norm_linf,
    norm_x,
    prefix_integral,
    suffix_integral,
)


@dataclass
class GreensFunction:
    """Inverse of the background operator on the working grid.

    Stores the two one-sided decaying solutions at spectral parameter zero,
    their Wronskian along the grid, and the drift weight exp(int_0^y b)
    under which the weighted Wronskian is constant.
    """

    grid: Grid
    y_minus: JostSolution
    y_plus: JostSolution
    wronskian: np.ndarray
    abel_weight: np.ndarray
    S: np.ndarray
    dS: np.ndarray
    kink: KinkS
    abel_residual: float = field(init=False)

    def __post_init__(self):
        ow = self.abel_weight * self.wronskian
        scale = float(
            np.max(
                self.abel_weight
                * (
                    np.abs(self.y_minus.Y * self.y_plus.dY)
                    + np.abs(self.y_plus.Y * self.y_minus.dY)
                )
            )
        )
        self.abel_residual = float((np.max(ow) - np.min(ow)) / scale)

    @property
    def w0(self) -> float:
        return float(self.wronskian[self.grid.i_zero])

    def kernel(self, yi: np.ndarray, wj: np.ndarray) -> np.ndarray:
        """Tabulate G(y, w) on index subsets (diagnostics and tests)."""
        yp = self.y_plus.Y
        ym = self.y_minus.Y
        denom = -self.wronskian
        out = np.empty((len(yi), len(wj)))
        for r, i in enumerate(yi):
            for s, j in enumerate(wj):
                if i < j:
                    out[r, s] = ym[i] * yp[j] / denom[j]
                else:
                    out[r, s] = yp[i] * ym[j] / denom[j]
        return out

    def apply(self, eta: np.ndarray) -> np.ndarray:
        """Green's image  y -> int G(y, w) eta(w) dw."""
        q = eta / (-self.wronskian)
        c1 = prefix_integral(q * self.y_minus.Y, self.grid.h)
        c2 = suffix_integral(q * self.y_plus.Y, self.grid.h)
        return self.y_plus.Y * c1 + self.y_minus.Y * c2

    def apply_derivative(self, eta: np.ndarray) -> np.ndarray:
        """Derivative of the Green's image (the boundary terms cancel)."""
        q = eta / (-self.wronskian)
        c1 = prefix_integral(q * self.y_minus.Y, self.grid.h)
        c2 = suffix_integral(q * self.y_plus.Y, self.grid.h)
        return self.y_plus.dY * c1 + self.y_minus.dY * c2


@dataclass
class KinkT:
    """Corrected kink with diagnostics.

    norms = (L1, Linf of S_b, L1, Linf of S_b'); residual_inf is the
    sup-norm of the stationary equation evaluated with an independent
    finite-difference second derivative.
    """

    S: KinkS
    grid: Grid
    S_b: np.ndarray
    T: np.ndarray
    dT: np.ndarray
    residual_inf: float
    norms: tuple[float, float, float, float]
    first_order: np.ndarray
    iterations: int
    contraction_factors: list[float]
    tc: TransformedCoefficients
    residual: np.ndarray | None = None
    _spline: CubicSpline = field(init=False, repr=False)
    _dspline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        self._spline = CubicSpline(self.grid.y, self.S_b)
        dSb = self.dT - self.S.derivative(self.grid.y)
        self._dspline = CubicSpline(self.grid.y, dSb)

    def s_b_at(self, y) -> np.ndarray:
        """Correction at arbitrary points; zero beyond the working grid."""
        y = np.asarray(y, dtype=float)
        inside = np.abs(y) <= self.grid.L
        out = np.zeros_like(y)
        out[inside] = self._spline(y[inside])
        return out

    def t_at(self, y) -> np.ndarray:
        return np.asarray(self.S.profile(y), dtype=float) + self.s_b_at(y)

    def dt_at(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        inside = np.abs(y) <= self.grid.L
        out = np.zeros_like(y)
        out[inside] = self._dspline(y[inside])
        return np.asarray(self.S.derivative(y), dtype=float) + out

    @property
    def x_norm(self) -> float:
        return self.norms[0] + self.norms[1]

    @property
    def x_norm_full(self) -> float:
        return sum(self.norms)


def build_greens(
    pot: Potential,
    kink: KinkS,
    tc: TransformedCoefficients,
    grid: Grid,
    *,
    w_floor: float | None = 1e-8,
    refine: int = 4,
    cross_check: bool = True,
) -> GreensFunction:
    """Green's function of L_b = -d^2 - b d + (F''(S) - c) from its two
    one-sided decaying solutions at spectral parameter zero.

    With w_floor set (the default), a Wronskian at y = 0 below
    w_floor * 2 sqrt(m^2) raises ZeroEigenvalueDetected: zero is then an
    (approximate) eigenvalue of L_b and the inversion is invalid.  Pass
    w_floor=None for diagnostic construction only.
    """
    b = tc.b_y if not tc.is_trivial else None
    op = EigenProblem(
        V=lambda y: pot.d2F(kink.profile(y)) - pot.m_sq - tc.c_y(y),
        b=None if b is None or _is_zero_callable(b, grid) else b,
        m_sq=pot.m_sq,
    )
    y_plus = jost(op, 0.0, PLUS_INFINITY, grid, refine=refine, cross_check=cross_check)
    y_minus = jost(op, 0.0, MINUS_INFINITY, grid, refine=refine, cross_check=cross_check)
    W = y_minus.Y * y_plus.dY - y_plus.Y * y_minus.dY
    i0 = grid.i_zero
    scale = 2.0 * math.sqrt(pot.m_sq)
    if w_floor is not None and abs(W[i0]) < w_floor * scale:
        raise ZeroEigenvalueDetected(float(W[i0]), w_floor * scale)
    omega0 = float(np.asarray(tc.omega(0.0)))
    abel = np.asarray(tc.omega(grid.y), dtype=float) / omega0
    return GreensFunction(
        grid=grid,
        y_minus=y_minus,
        y_plus=y_plus,
        wronskian=W,
        abel_weight=abel,
        S=np.asarray(kink.profile(grid.y), dtype=float),
        dS=np.asarray(kink.derivative(grid.y), dtype=float),
        kink=kink,
    )


def _is_zero_callable(fn, grid: Grid) -> bool:
    return float(np.max(np.abs(fn(grid.y)))) == 0.0


def first_order_Sb(pot: Potential, tc: TransformedCoefficients, gf: GreensFunction) -> np.ndarray:
    """Leading-order correction: the Green's image of b S' + c S."""
    y = gf.grid.y
    rhs = np.asarray(tc.b_y(y), dtype=float) * gf.dS + np.asarray(tc.c_y(y), dtype=float) * gf.S
    return gf.apply(rhs)


def _trivial_kink(pot: Potential, kink: KinkS, tc: TransformedCoefficients, grid: Grid) -> KinkT:
    z = np.zeros(grid.n + 1)
    return KinkT(
        S=kink,
        grid=grid,
        S_b=z,
        T=np.asarray(kink.profile(grid.y), dtype=float),
        dT=np.asarray(kink.derivative(grid.y), dtype=float),
        residual_inf=0.0,
        norms=(0.0, 0.0, 0.0, 0.0),
        first_order=z,
        iterations=0,
        contraction_factors=[],
        tc=tc,
        residual=z,
    )


def _odd_sector_projector(pot: Potential, gf: GreensFunction, bv, cv, rhs0):
    """If the stationary problem commutes with the reflection
    u(y) -> 2 mid - u(-y) and the driving term is odd, the correction is odd
    and iterating inside the odd sector removes the marginally unstable
    direction along the shifted translation mode.  Returns the projector,
    or None when the symmetry is absent."""
    tol = 1e-9
    mid = pot.midpoint
    scale = max(1.0, float(np.max(np.abs(gf.S))))
    s_sym = float(np.max(np.abs(gf.S + gf.S[::-1] - 2.0 * mid))) / scale
    b_odd = float(np.max(np.abs(bv + bv[::-1]))) / max(1e-300, np.max(np.abs(bv)), 1.0)
    c_even = float(np.max(np.abs(cv - cv[::-1]))) / max(1e-300, np.max(np.abs(cv)), 1.0)
    rhs_odd = float(np.max(np.abs(rhs0 + rhs0[::-1]))) / max(1e-300, float(np.max(np.abs(rhs0))))
    s = np.linspace(0.0, 0.5 * (pot.a_plus - pot.a_minus), 101)
    f_odd = float(np.max(np.abs(pot.dF(mid + s) + pot.dF(mid - s))))
    if max(s_sym, b_odd, c_even, rhs_odd, f_odd) > tol:
        return None
    return lambda arr: 0.5 * (arr - arr[::-1])


def fixed_point_Sb(
    pot: Potential,
    tc: TransformedCoefficients,
    gf: GreensFunction,
    tol: float = 1e-12,
    *,
    max_iter: int = 80,
) -> KinkT:
    """Iterate the correction to its fixed point in the L1+Linf norm.

    Raises ContractionFailure when the measured update ratio reaches 1
    (coefficients too large, or the kink is being pushed off-center so no
    nearby stationary profile exists).
    """
    grid = gf.grid
    y = grid.y
    h = grid.h
    S, dS = gf.S, gf.dS
    bv = np.asarray(tc.b_y(y), dtype=float)
    cv = np.asarray(tc.c_y(y), dtype=float)
    rhs0 = bv * dS + cv * S
    if float(np.max(np.abs(rhs0))) == 0.0:
        return _trivial_kink(pot, gf.kink, tc, grid)

    project = _odd_sector_projector(pot, gf, bv, cv, rhs0)
    g = gf.apply(rhs0)
    if project is not None:
        g = project(g)
    Sb = np.zeros_like(g)
    factors: list[float] = []
    prev_update = None
    it = 0
    for it in range(1, max_iter + 1):
        N = np.asarray(pot.dF(S + Sb), dtype=float) - pot.dF(S) - pot.d2F(S) * Sb
        Sb_new = g - gf.apply(N)
        if project is not None:
            Sb_new = project(Sb_new)
        update = norm_x(Sb_new - Sb, h)
        if prev_update is not None and prev_update > 0:
            factor = update / prev_update
            factors.append(factor)
            if factor >= 1.0 and update > tol:
                raise ContractionFailure(factor)
        Sb = Sb_new
        if update <= tol:
            break
        prev_update = update
    else:
        raise ContractionFailure(factors[-1] if factors else math.inf)

    N = np.asarray(pot.dF(S + Sb), dtype=float) - pot.dF(S) - pot.d2F(S) * Sb
    dSb = gf.apply_derivative(rhs0 - N)
    if project is not None:
        dSb = 0.5 * (dSb + dSb[::-1])  # derivative of an odd field is even
    T = S + Sb
    dT = dS + dSb

    # residual of the stationary equation; S'' = F'(S) holds exactly for the
    # background kink, S_b'' from high-order differences of the samples
    Sb_pp = deriv2_decaying(Sb, h)
    residual = -(pot.dF(S) + Sb_pp) - bv * dT - cv * T + pot.dF(T)
    return KinkT(
        S=gf.kink,
        grid=grid,
        S_b=Sb,
        T=T,
        dT=dT,
        residual_inf=float(np.max(np.abs(residual))),
        norms=(norm_l1(Sb, h), norm_linf(Sb), norm_l1(dSb, h), norm_linf(dSb)),
        first_order=g,
        iterations=it,
        contraction_factors=factors,
        tc=tc,
        residual=residual,
    )


def build_kink(
    pot: Potential,
    kink: KinkS,
    tc: TransformedCoefficients,
    grid: Grid,
    tol: float = 1e-12,
    **greens_kwargs,
) -> KinkT:
    """Convenience pipeline: trivial coefficients pass S through unchanged,
    otherwise build the Green's function and run the fixed point."""
    if tc.is_trivial:
        return _trivial_kink(pot, kink, tc, grid)
    gf = build_greens(pot, kink, tc, grid, **greens_kwargs)
    return fixed_point_Sb(pot, tc, gf, tol)


def taylor_remainder_bound(pot: Potential, eta_max: float = 0.3) -> float:
    """K with |N(S, eta)| <= K eta^2 for |eta| <= eta_max: half the sup of
    |F'''| over the vacuum interval widened by eta_max."""
    s = np.linspace(pot.a_minus - eta_max, pot.a_plus + eta_max, 2001)
    return 0.5 * float(np.max(np.abs(pot.d3F(s))))
