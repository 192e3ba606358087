"""Field-theory potentials and the constant-coefficient kink.

A `Potential` is a double-well energy density F with two vacua where F and
F' vanish and F'' equals the common mass-squared m^2 > 0.  The associated
kink S is the increasing heteroclinic connecting the vacua; for the two
built-in models it is closed-form, otherwise it comes from integrating the
first-order reduction S' = sqrt(2 F(S)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NonPositivePotentialInterior, QuadratureDivergence
from .grid import Grid


@dataclass(frozen=True)
class Potential:
    """Double-well potential with analytic derivatives.

    `known_eigenvalues` holds the discrete spectrum of the flat-kink
    linearization when it is known exactly; `resonance` the bounded
    threshold profile (and its derivative), when one exists.
    """

    F: Callable[[np.ndarray], np.ndarray]
    dF: Callable[[np.ndarray], np.ndarray]
    d2F: Callable[[np.ndarray], np.ndarray]
    d3F: Callable[[np.ndarray], np.ndarray]
    a_minus: float
    a_plus: float
    m_sq: float
    name: str = "custom"
    known_eigenvalues: tuple[float, ...] | None = None
    resonance: Callable[[np.ndarray], np.ndarray] | None = None
    resonance_deriv: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a_minus + self.a_plus)

    def d3F_sup(self) -> float:
        """sup |F'''| over [a_minus, a_plus], sampled."""
        s = np.linspace(self.a_minus, self.a_plus, 2001)
        return float(np.max(np.abs(self.d3F(s))))


@dataclass(frozen=True)
class KinkS:
    """Flat-background kink: profile and derivative as global callables."""

    profile: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    source: str  # "closed_form" | "quadrature"


def validate_potential(pot: Potential, tol: float = 1e-9) -> None:
    """Check the double-well structure at the vacua and positivity inside."""
    for a in (pot.a_minus, pot.a_plus):
        if abs(float(pot.F(a))) > tol or abs(float(pot.dF(a))) > tol:
            raise NonPositivePotentialInterior(
                f"F or F' does not vanish at vacuum {a}: F={float(pot.F(a)):.2e}, "
                f"F'={float(pot.dF(a)):.2e}"
            )
        if abs(float(pot.d2F(a)) - pot.m_sq) > tol:
            raise NonPositivePotentialInterior(
                f"F''({a}) = {float(pot.d2F(a)):.6g} != m_sq = {pot.m_sq:.6g}"
            )
    if pot.m_sq <= 0:
        raise NonPositivePotentialInterior("m_sq must be positive")
    width = pot.a_plus - pot.a_minus
    s = np.linspace(pot.a_minus + 1e-3 * width, pot.a_plus - 1e-3 * width, 1001)
    if np.any(pot.F(s) <= 0):
        bad = s[np.argmin(pot.F(s))]
        raise NonPositivePotentialInterior(
            f"F(s) <= 0 at s = {bad:.6g} inside the well interval"
        )


def builtin_phi4() -> tuple[Potential, KinkS]:
    """Quartic double well F(u) = (1 - u^2)^2 / 4, vacua +-1, m^2 = 2.

    Kink tanh(y / sqrt 2); the linearization has discrete spectrum {0, 3/2}
    and an even bounded threshold profile 2 tanh^2 - sech^2 at m^2 = 2.
    """
    r2 = math.sqrt(2.0)
    pot = Potential(
        F=lambda u: 0.25 * (1.0 - np.asarray(u) ** 2) ** 2,
        dF=lambda u: np.asarray(u) ** 3 - np.asarray(u),
        d2F=lambda u: 3.0 * np.asarray(u) ** 2 - 1.0,
        d3F=lambda u: 6.0 * np.asarray(u),
        a_minus=-1.0,
        a_plus=1.0,
        m_sq=2.0,
        name="phi4",
        known_eigenvalues=(0.0, 1.5),
        resonance=lambda y: 2.0 * np.tanh(np.asarray(y) / r2) ** 2
        - _sech(np.asarray(y) / r2) ** 2,
        resonance_deriv=lambda y: (6.0 / r2)
        * np.tanh(np.asarray(y) / r2)
        * _sech(np.asarray(y) / r2) ** 2,
    )
    kink = KinkS(
        profile=lambda y: np.tanh(np.asarray(y) / r2),
        derivative=lambda y: (1.0 / r2) * _sech(np.asarray(y) / r2) ** 2,
        source="closed_form",
    )
    return pot, kink


def _sech(y: np.ndarray) -> np.ndarray:
    """Overflow-safe 1/cosh."""
    a = np.abs(y)
    e = np.exp(-a)
    return 2.0 * e / (1.0 + e * e)


def _sg_profile(y) -> np.ndarray:
    # 4 arctan(e^y), via arctan(e^y) = pi/2 - arctan(e^{-y}) on the right
    y = np.asarray(y, dtype=float)
    e = np.exp(-np.abs(y))
    half = 4.0 * np.arctan(e)
    return np.where(y >= 0, 2.0 * math.pi - half, half)


def builtin_sine_gordon() -> tuple[Potential, KinkS]:
    """F(u) = 1 - cos u, vacua 0 and 2 pi, m^2 = 1.

    Kink 4 arctan(e^y); single discrete eigenvalue 0 and an odd bounded
    threshold profile tanh(y) at m^2 = 1.
    """
    pot = Potential(
        F=lambda u: 1.0 - np.cos(np.asarray(u)),
        dF=lambda u: np.sin(np.asarray(u)),
        d2F=lambda u: np.cos(np.asarray(u)),
        d3F=lambda u: -np.sin(np.asarray(u)),
        a_minus=0.0,
        a_plus=2.0 * math.pi,
        m_sq=1.0,
        name="sine_gordon",
        known_eigenvalues=(0.0,),
        resonance=lambda y: np.tanh(np.asarray(y)),
        resonance_deriv=lambda y: _sech(np.asarray(y)) ** 2,
    )
    kink = KinkS(
        profile=_sg_profile,
        derivative=lambda y: 2.0 * _sech(np.asarray(y)),
        source="closed_form",
    )
    return pot, kink


def polynomial_potential(
    coefficients: Sequence[float],
    vacua: tuple[float, float],
    name: str = "polynomial",
) -> Potential:
    """Potential from ascending polynomial coefficients with explicit vacua."""
    p = np.polynomial.Polynomial(list(coefficients))
    d1, d2, d3 = p.deriv(1), p.deriv(2), p.deriv(3)
    a_minus, a_plus = float(vacua[0]), float(vacua[1])
    if not a_minus < a_plus:
        raise NonPositivePotentialInterior("vacua must satisfy a_minus < a_plus")
    m_sq = float(d2(a_minus))
    pot = Potential(
        F=lambda u: p(np.asarray(u, dtype=float)),
        dF=lambda u: d1(np.asarray(u, dtype=float)),
        d2F=lambda u: d2(np.asarray(u, dtype=float)),
        d3F=lambda u: d3(np.asarray(u, dtype=float)),
        a_minus=a_minus,
        a_plus=a_plus,
        m_sq=m_sq,
        name=name,
    )
    validate_potential(pot, tol=1e-8)
    return pot


def solve_constant_kink(
    pot: Potential,
    grid: Grid,
    *,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    tail_eps: float = 1e-10,
    approach_tol: float | None = None,
) -> KinkS:
    """Kink profile by integrating the first-order reduction S' = sqrt(2F(S)).

    Anchored at S(0) = (a_- + a_+) / 2; once the profile is within
    `tail_eps` of a vacuum the linearized exponential tail takes over, which
    avoids the degenerate endpoint of the square root.  The returned
    callables extend beyond the grid with the same exponential tails.
    """
    validate_potential(pot)
    mid = pot.midpoint
    m = math.sqrt(pot.m_sq)
    L = grid.L
    if approach_tol is None:
        approach_tol = 1e-3 * (pot.a_plus - pot.a_minus)

    def speed(_, s):
        return math.sqrt(max(2.0 * float(pot.F(s[0])), 0.0))

    def run(direction: float):
        # event: profile enters the tail band of the vacuum it approaches
        target = pot.a_plus if direction > 0 else pot.a_minus

        def close(_, s):
            return abs(target - s[0]) - tail_eps

        close.terminal = True
        sol = solve_ivp(
            speed,
            (0.0, direction * L),
            [mid],
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=True,
            events=close,
        )
        if not sol.success:
            raise QuadratureDivergence(f"profile integration failed: {sol.message}")
        y_stop = float(sol.t[-1])
        s_stop = float(sol.y[0, -1])
        return sol, y_stop, s_stop, target

    sol_r, y_r, s_r, _ = run(+1.0)
    sol_l, y_l, s_l, _ = run(-1.0)

    def profile(y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        right_tail = y > y_r
        left_tail = y < y_l
        mid_r = (y >= 0.0) & ~right_tail
        mid_l = (y < 0.0) & ~left_tail
        if np.any(mid_r):
            out[mid_r] = sol_r.sol(y[mid_r])[0]
        if np.any(mid_l):
            out[mid_l] = sol_l.sol(y[mid_l])[0]
        out[right_tail] = pot.a_plus - (pot.a_plus - s_r) * np.exp(-m * (y[right_tail] - y_r))
        out[left_tail] = pot.a_minus + (s_l - pot.a_minus) * np.exp(m * (y[left_tail] - y_l))
        return out if out.ndim else float(out)

    def derivative(y):
        # exact first-order reduction: S' = sqrt(2 F(S))
        s = np.asarray(profile(y), dtype=float)
        return np.sqrt(np.maximum(2.0 * pot.F(s), 0.0))

    end_err = max(
        abs(float(profile(L)) - pot.a_plus), abs(float(profile(-L)) - pot.a_minus)
    )
    if end_err > approach_tol:
        raise QuadratureDivergence(
            f"profile misses the vacua by {end_err:.3e} at |y| = {L}; enlarge the grid"
        )
    return KinkS(profile=profile, derivative=derivative, source="quadrature")


def kink_energy(pot: Potential, kink: KinkS, grid: Grid) -> float:
    """Static energy integral of the kink on the truncated grid."""
    y = grid.y
    sp = kink.derivative(y)
    return float(np.trapezoid(0.5 * sp**2 + pot.F(kink.profile(y)), dx=grid.h))
