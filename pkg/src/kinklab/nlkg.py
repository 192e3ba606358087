"""Time-domain simulation of the variable-coefficient wave equation.

Explicit velocity-Verlet stepping of
    u_tt = u_yy + b u_y + c u - F'(u)
with Dirichlet pinning to the stationary kink at the walls, the weighted
energy integral, the shift-minimized modulation distance d_q, and the
orbital-stability experiment built from them.  Runs must end before the
boundary reflections re-enter the comparison window, which callers enforce
through the t_end < L - y0 budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize_scalar

from .errors import CFLViolation, NonFiniteField
from .grid import Grid
from .kink import KinkT
from .model import Potential
from .quadrature import deriv1, integrate

CFL_FACTOR = 0.9


@dataclass
class FieldState:
    t: float
    u: np.ndarray
    u_t: np.ndarray
    grid: Grid

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.u.copy(), self.u_t.copy(), self.grid)


@dataclass
class EnergyReport:
    E: float
    E_p: float
    drift_rel: float


def _accel(u: np.ndarray, h: float, bv, cv, pot: Potential) -> np.ndarray:
    a = np.zeros_like(u)
    a[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
    if bv is not None:
        a[1:-1] += bv[1:-1] * (u[2:] - u[:-2]) / (2.0 * h)
    if cv is not None:
        a[1:-1] += cv[1:-1] * u[1:-1]
    a[1:-1] -= pot.dF(u[1:-1])
    return a


class Stepper:
    """Velocity-Verlet integrator with frozen coefficient samples."""

    def __init__(self, grid: Grid, tc, pot: Potential):
        self.grid = grid
        self.pot = pot
        y = grid.y
        if tc is None or tc.is_trivial:
            self.bv = None
            self.cv = None
            self.omega = np.ones_like(y)
        else:
            self.bv = np.asarray(tc.b_y(y), dtype=float)
            self.cv = np.asarray(tc.c_y(y), dtype=float)
            self.omega = np.asarray(tc.omega(y), dtype=float)
        self._acc_cache: tuple[int, np.ndarray] | None = None

    def accel(self, u: np.ndarray) -> np.ndarray:
        return _accel(u, self.grid.h, self.bv, self.cv, self.pot)

    def step(self, state: FieldState, dt: float) -> FieldState:
        if dt > CFL_FACTOR * self.grid.h:
            raise CFLViolation(
                f"dt = {dt:.4g} exceeds {CFL_FACTOR} h = {CFL_FACTOR * self.grid.h:.4g}"
            )
        u, v = state.u, state.u_t
        a0 = self.accel(u)
        v_half = v + 0.5 * dt * a0
        u_new = u + dt * v_half
        u_new[0] = u[0]
        u_new[-1] = u[-1]  # walls pinned
        a1 = self.accel(u_new)
        v_new = v_half + 0.5 * dt * a1
        v_new[0] = 0.0
        v_new[-1] = 0.0
        if not (math.isfinite(float(u_new[self.grid.i_zero])) and np.all(np.isfinite(u_new))):
            raise NonFiniteField(f"field overflow at t = {state.t + dt:.4g}")
        return FieldState(state.t + dt, u_new, v_new, state.grid)

    def energy(self, state: FieldState, e0: float | None = None) -> EnergyReport:
        u, v = state.u, state.u_t
        h = self.grid.h
        uy = deriv1(u, h)
        dens_p = 0.5 * uy**2 + self.pot.F(u)
        if self.cv is not None:
            dens_p -= 0.5 * self.cv * u**2
        E_p = float(np.trapezoid(self.omega * dens_p, dx=h))
        E = E_p + float(np.trapezoid(self.omega * 0.5 * v**2, dx=h))
        drift = 0.0 if e0 is None else abs(E - e0) / max(abs(e0), 1e-300)
        return EnergyReport(E=E, E_p=E_p, drift_rel=drift)


def step(state: FieldState, dt: float, tc, pot: Potential) -> FieldState:
    """One velocity-Verlet update (stateless convenience wrapper)."""
    return Stepper(state.grid, tc, pot).step(state, dt)


def energy(state: FieldState, tc, pot: Potential, e0: float | None = None) -> EnergyReport:
    """Weighted energy of a state (stateless convenience wrapper)."""
    return Stepper(state.grid, tc, pot).energy(state, e0)


def discrete_kink_equilibrium(kinkT: KinkT, tc, pot: Potential, grid: Grid) -> np.ndarray:
    """Newton-refine the sampled kink to the stationary state of the
    *discrete* scheme, so that a hold test measures stepping errors rather
    than the O(h^2) truncation of the stencil."""
    y = grid.y
    h = grid.h
    u = np.asarray(kinkT.t_at(y), dtype=float)
    if tc is None or tc.is_trivial:
        bv = np.zeros_like(y)
        cv = np.zeros_like(y)
    else:
        bv = np.asarray(tc.b_y(y), dtype=float)
        cv = np.asarray(tc.c_y(y), dtype=float)
    n = grid.n + 1
    for _ in range(30):
        r = np.zeros(n)
        r[1:-1] = (
            (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
            + bv[1:-1] * (u[2:] - u[:-2]) / (2.0 * h)
            + cv[1:-1] * u[1:-1]
            - pot.dF(u[1:-1])
        )
        if float(np.max(np.abs(r))) < 1e-13:
            break
        # tridiagonal Jacobian of the interior residual
        m = n - 2
        ab = np.zeros((3, m))
        ab[1] = -2.0 / (h * h) + cv[1:-1] - pot.d2F(u[1:-1])
        ab[0, 1:] = 1.0 / (h * h) + bv[2:-1] / (2.0 * h)
        ab[2, :-1] = 1.0 / (h * h) - bv[1:-2] / (2.0 * h)
        du = solve_banded((1, 1), ab, -r[1:-1])
        u[1:-1] += du
    return u


def dq_distance(
    psi: np.ndarray,
    kinkT: KinkT,
    q: float,
    *,
    grid: Grid | None = None,
    xi0: float = 0.0,
    psi_deriv: np.ndarray | None = None,
    xtol: float = 1e-10,
) -> tuple[float, float]:
    """Squared modulation distance  inf_xi int (psi' - T'(.+xi))^2
    + q (psi - T(.+xi))^2  and its minimizer, found by golden-section
    search seeded near xi0."""
    if q <= 0:
        raise ValueError("q must be positive")
    g = grid or kinkT.grid
    y = g.y
    dpsi = psi_deriv if psi_deriv is not None else deriv1(psi, g.h)

    def objective(xi: float) -> float:
        shifted = y + xi
        return integrate(
            (dpsi - kinkT.dt_at(shifted)) ** 2 + q * (psi - kinkT.t_at(shifted)) ** 2,
            g.h,
        )

    # two-point bracket: scipy expands it downhill before golden-section
    res = minimize_scalar(
        objective,
        bracket=(xi0 - 0.25, xi0 + 0.25),
        method="golden",
        options={"xtol": xtol},
    )
    return float(res.fun), float(res.x)


@dataclass
class OrbitRecord:
    t: float
    dq: float
    E: float
    drift_rel: float


@dataclass
class OrbitResult:
    records: list[OrbitRecord]
    eps: float
    q: float
    sup_dq: float
    sup_ratio: float  # sup_t d_q / eps

    def as_arrays(self) -> np.ndarray:
        return np.array([[r.t, r.dq, r.E, r.drift_rel] for r in self.records])


def h1_l2_norm(v1: np.ndarray, v2: np.ndarray, h: float) -> float:
    """Discrete H1 x L2 size of a perturbation pair."""
    dv1 = deriv1(v1, h)
    return math.sqrt(integrate(dv1**2 + v1**2 + v2**2, h))


def sech_bump_perturbation(grid: Grid, eps: float, width: float = 1.0, center: float = 0.0):
    """(v1, v2) localized bump pair, scaled to H1 x L2 size eps."""
    v1 = 1.0 / np.cosh((grid.y - center) / width)
    v2 = np.zeros_like(v1)
    scale = eps / h1_l2_norm(v1, v2, grid.h)
    return scale * v1, v2


def band_limited_perturbation(grid: Grid, eps: float, rng, k_max: float = 1.0,
                              window: float = 8.0, n_modes: int = 8):
    """Random smooth field localized by a Gaussian window, scaled to eps."""
    y = grid.y
    v1 = np.zeros_like(y)
    v2 = np.zeros_like(y)
    for _ in range(n_modes):
        k = rng.uniform(0.1, k_max)
        phase = rng.uniform(0, 2 * math.pi)
        amp = rng.normal()
        v1 += amp * np.cos(k * y + phase)
        v2 += rng.normal() * 0.3 * np.sin(k * y + rng.uniform(0, 2 * math.pi))
    env = np.exp(-((y / window) ** 2))
    v1 *= env
    v2 *= env
    scale = eps / h1_l2_norm(v1, v2, grid.h)
    return scale * v1, scale * v2


def orbital_experiment(
    kinkT: KinkT,
    perturbation: tuple[np.ndarray, np.ndarray],
    t_end: float,
    q: float,
    *,
    tc=None,
    pot: Potential | None = None,
    grid: Grid | None = None,
    dt_factor: float = 0.5,
    record_every: float = 0.5,
    refine_equilibrium: bool = True,
) -> OrbitResult:
    """Evolve the perturbed kink and record the modulation distance and
    energy drift.

    The caller must keep t_end below L - y0 (perturbation extent) so wall
    reflections cannot contaminate the distance records.
    """
    g = grid or kinkT.grid
    if pot is None:
        raise ValueError("pot is required")
    stepper = Stepper(g, tc, pot)
    base = (
        discrete_kink_equilibrium(kinkT, tc, pot, g)
        if refine_equilibrium
        else np.asarray(kinkT.t_at(g.y), dtype=float)
    )
    v1, v2 = perturbation
    eps = h1_l2_norm(v1, v2, g.h)
    u0 = base + v1
    u0[0] = base[0]
    u0[-1] = base[-1]
    w0 = v2.copy()
    w0[0] = 0.0
    w0[-1] = 0.0
    state = FieldState(0.0, u0, w0, g)
    dt = dt_factor * g.h
    n_steps = int(math.ceil(t_end / dt))
    rec_stride = max(1, int(round(record_every / dt)))

    e0 = stepper.energy(state).E
    dq0, xi = dq_distance(state.u, kinkT, q, grid=g)
    records = [OrbitRecord(0.0, math.sqrt(max(dq0, 0.0)), e0, 0.0)]
    for istep in range(1, n_steps + 1):
        state = stepper.step(state, dt)
        if istep % rec_stride == 0 or istep == n_steps:
            val, xi = dq_distance(state.u, kinkT, q, grid=g, xi0=xi)
            er = stepper.energy(state, e0)
            records.append(
                OrbitRecord(state.t, math.sqrt(max(val, 0.0)), er.E, er.drift_rel)
            )
    sup_dq = max(r.dq for r in records)
    return OrbitResult(
        records=records,
        eps=eps,
        q=q,
        sup_dq=sup_dq,
        sup_ratio=sup_dq / eps if eps > 0 else 0.0,
    )
