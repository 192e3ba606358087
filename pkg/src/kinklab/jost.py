"""Decaying solutions of the eigenvalue ODE on a truncated line.

For the operator  L u = -u'' - b u' + (m^2 + V) u  with V, b integrable and
decaying, and a spectral parameter lam = m^2 - k^2 (k >= 0), the Jost
solution at +infinity is the solution behaving like e^{-k y} (1, -k); its
mirror decays at -infinity.  Each one solves a Volterra integral equation
for the rescaled unknown Z = e^{+-k y} (Y, Y'):

    Z1(y) = 1   - 1/2 int_y^inf  q(w) (e^{2k(y-w)} - 1)/k dw,
    Z2(y) = -k  - 1/2 int_y^inf  q(w) (e^{2k(y-w)} + 1)   dw,
    q = V Z1 - b Z2,

solved here by Picard iteration with fourth-order panel quadrature; the
(e^{2ks}-1)/k weight is evaluated through expm1 so the threshold case k = 0
(weight 2s, boundary value (1, 0)) is the same code path.  Every solution
can be cross-checked against direct Runge-Kutta back-integration from the
boundary, which shares nothing with the integral-equation route.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    CrossCheckFailure,
    NoConvergence,
    ParallelSolutions,
    SlowDecayWarning,
    ThresholdParameter,
)
from .grid import Grid
from .quadrature import prefix_integral, suffix_integral, weighted_suffix_combo

PLUS_INFINITY = "plus_infinity"
MINUS_INFINITY = "minus_infinity"

_DEFAULT_CAP = 200
_THRESHOLD_CAP = 1500  # linear-growth kernels need far more terms than decaying ones


@dataclass(frozen=True)
class EigenProblem:
    """Eigenvalue ODE data: V is the potential relative to its value m^2 at
    infinity; b the drift (None for no drift)."""

    V: Callable
    b: Callable | None
    m_sq: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def samples(self, grid: Grid, refine: int) -> tuple[np.ndarray, np.ndarray | None]:
        key = (grid.L, grid.n, refine)
        if key not in self._cache:
            yf = grid.refined(refine).y
            Vf = np.asarray(self.V(yf), dtype=float)
            bf = np.asarray(self.b(yf), dtype=float) if self.b is not None else None
            self._cache[key] = (Vf, bf)
        return self._cache[key]


@dataclass
class JostSolution:
    """One-sided decaying solution sampled on the working grid.

    Y, dY are the plain values; Z1, Z2 the exponentially rescaled ones
    (bounded on the solution's home half-line).  `normalized` records that
    the boundary values match (1, -sign * k) at the relevant end.
    """

    lam: float
    k: float
    direction: str
    grid: Grid
    Y: np.ndarray
    dY: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray
    normalized: bool
    iterations: int
    mu_bound: float
    cross_check_error: float | None = None
    extended_by: str | None = None
    # rescaled fine-grid arrays in the iteration frame (reflected for the
    # minus direction); reusable as a warm start at nearby parameters
    fine: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == PLUS_INFINITY else -1.0

    def at_zero(self) -> tuple[float, float]:
        i0 = self.grid.i_zero
        return float(self.Y[i0]), float(self.dY[i0])

    def decay_constant(self) -> float:
        """Smallest C with |Y| <= C e^{-k|y|} on the home half-line."""
        half = self.grid.y * self.sign >= 0.0
        return float(np.max(np.abs(self.Z1[half])))


def _picard(
    Vf: np.ndarray,
    bf: np.ndarray | None,
    k: float,
    h: float,
    tol: float,
    cap: int,
    z0: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    m = Vf.shape[0]
    if z0 is not None:
        Z1 = z0[0].copy()
        Z2 = z0[1].copy()
    else:
        Z1 = np.ones(m)
        Z2 = np.full(m, -k)
    scale = max(1.0, k)
    diff = math.inf
    for it in range(1, cap + 1):
        q = Vf * Z1 if bf is None else Vf * Z1 - bf * Z2
        B = suffix_integral(q, h)
        W = weighted_suffix_combo(q, B, h, k)
        Z1n = 1.0 - 0.5 * W
        Z2n = -k - B - 0.5 * k * W
        diff = max(np.max(np.abs(Z1n - Z1)), np.max(np.abs(Z2n - Z2))) / scale
        Z1, Z2 = Z1n, Z2n
        if not math.isfinite(diff) or diff > 1e12:
            raise NoConvergence(
                f"Picard iterates blew up (update {diff:.3e} at iteration {it}); "
                "the kernel mass is too large for this domain"
            )
        if diff <= tol:
            return Z1, Z2, it
    raise NoConvergence(
        f"Picard update still {diff:.3e} after {cap} iterations (tol {tol:.1e})"
    )


def _rk4_back(Vf: np.ndarray, bf: np.ndarray | None, k: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Back-integrate the ODE from the right boundary over pairs of fine
    cells; returns values at even fine indices (ascending)."""
    m = Vf.shape[0]
    ksq = k * k
    V = Vf.tolist()
    b = bf.tolist() if bf is not None else None
    n_even = (m + 1) // 2
    U1 = [0.0] * n_even
    U2 = [0.0] * n_even
    L = 0.5 * h * (m - 1)
    u1 = math.exp(-k * L)
    u2 = -k * u1
    U1[-1], U2[-1] = u1, u2
    s = -2.0 * h
    for i in range(m - 1, 1, -2):
        if b is None:
            a1 = u2
            a2 = (V[i] + ksq) * u1
            m11 = u1 + 0.5 * s * a1
            m12 = u2 + 0.5 * s * a2
            b1 = m12
            b2 = (V[i - 1] + ksq) * m11
            m21 = u1 + 0.5 * s * b1
            m22 = u2 + 0.5 * s * b2
            c1 = m22
            c2 = (V[i - 1] + ksq) * m21
            m31 = u1 + s * c1
            m32 = u2 + s * c2
            d1 = m32
            d2 = (V[i - 2] + ksq) * m31
        else:
            a1 = u2
            a2 = (V[i] + ksq) * u1 - b[i] * u2
            m11 = u1 + 0.5 * s * a1
            m12 = u2 + 0.5 * s * a2
            b1 = m12
            b2 = (V[i - 1] + ksq) * m11 - b[i - 1] * m12
            m21 = u1 + 0.5 * s * b1
            m22 = u2 + 0.5 * s * b2
            c1 = m22
            c2 = (V[i - 1] + ksq) * m21 - b[i - 1] * m22
            m31 = u1 + s * c1
            m32 = u2 + s * c2
            d1 = m32
            d2 = (V[i - 2] + ksq) * m31 - b[i - 2] * m32
        u1 = u1 + (s / 6.0) * (a1 + 2.0 * (b1 + c1) + d1)
        u2 = u2 + (s / 6.0) * (a2 + 2.0 * (b2 + c2) + d2)
        U1[(i - 2) // 2] = u1
        U2[(i - 2) // 2] = u2
    return np.asarray(U1), np.asarray(U2)


def estimate_mu(Vf: np.ndarray, bf: np.ndarray | None, k: float, h: float) -> float:
    """Upper estimate of the kernel mass mu = int sup ||K|| for the rescaled
    Volterra kernel; finiteness of this is what guarantees solvability."""
    m = Vf.shape[0]
    w = np.arange(m) * h
    size = np.abs(Vf) if bf is None else np.hypot(Vf, bf)
    phi_sup = 2.0 * w if k == 0.0 else np.minimum(2.0 * w, 1.0 / k)
    weight = 0.5 * np.sqrt(phi_sup**2 + 4.0)
    return float(np.trapezoid(size * weight, dx=h))


def _solve_one_sided(
    op: EigenProblem,
    k: float,
    direction: str,
    grid: Grid,
    refine: int,
    tol: float,
    cap: int,
    cross_check: bool,
    cross_tol: float,
    z0=None,
) -> JostSolution:
    if refine % 2:
        raise ValueError("refine must be even")
    if k * grid.L > 650.0:
        raise ValueError(f"k*L = {k * grid.L:.1f} would overflow the exponential scaling")
    Vf, bf = op.samples(grid, refine)
    if direction == MINUS_INFINITY:
        Vf = Vf[::-1].copy()
        bf = -bf[::-1] if bf is not None else None
    elif direction != PLUS_INFINITY:
        raise ValueError(f"unknown direction {direction!r}")

    hf = grid.h / refine
    Z1f, Z2f, iters = _picard(Vf, bf, k, hf, tol, cap, z0)

    err = None
    if cross_check:
        U1, U2 = _rk4_back(Vf, bf, k, hf)
        yf_even = grid.refined(refine).y[::2]
        # compare in rescaled form on the home half-line of the (possibly
        # reflected) problem, where both routes are O(1)
        ef = np.exp(k * yf_even)
        right = yf_even >= 0.0
        scale = max(1.0, k)
        err = max(
            float(np.max(np.abs(Z1f[::2][right] - ef[right] * U1[right]))),
            float(np.max(np.abs(Z2f[::2][right] - ef[right] * U2[right]))),
        ) / scale
        if err > cross_tol:
            raise CrossCheckFailure(
                f"integral-equation and ODE routes differ by {err:.3e} "
                f"(tolerance {cross_tol:.1e}) at lam = {op.m_sq - k * k:.6g}"
            )

    if direction == MINUS_INFINITY:
        Z1 = Z1f[::-1][:: refine].copy()
        Z2 = -Z2f[::-1][:: refine]
    else:
        Z1 = Z1f[::refine].copy()
        Z2 = Z2f[::refine].copy()
    y = grid.y
    sgn = 1.0 if direction == PLUS_INFINITY else -1.0
    efac = np.exp(-sgn * k * y)
    boundary_i = -1 if direction == PLUS_INFINITY else 0
    normalized = (
        abs(Z1[boundary_i] - 1.0) < 1e-6 and abs(Z2[boundary_i] + sgn * k) < 1e-6
    )
    return JostSolution(
        lam=op.m_sq - k * k,
        k=k,
        direction=direction,
        grid=grid,
        Y=efac * Z1,
        dY=efac * Z2,
        Z1=Z1,
        Z2=Z2,
        normalized=normalized,
        iterations=iters,
        mu_bound=estimate_mu(Vf, bf, k, hf),
        cross_check_error=err,
        fine=(Z1f, Z2f),
    )


def _auto_cross_tol(grid: Grid) -> float:
    # both routes are O(h^4); the default tolerance tracks that so coarse
    # grids stay usable, while reference-resolution tests pin 1e-8 explicitly
    return max(1e-8, 100.0 * grid.h**4)


def jost(
    op: EigenProblem,
    lam: float,
    direction: str,
    grid: Grid,
    *,
    refine: int = 4,
    tol: float = 1e-13,
    cap: int = _DEFAULT_CAP,
    cross_check: bool = True,
    cross_tol: float | None = None,
    z0=None,
) -> JostSolution:
    """Decaying Jost solution for spectral parameter lam < m^2."""
    if cross_tol is None:
        cross_tol = _auto_cross_tol(grid)
    if lam >= op.m_sq:
        raise ThresholdParameter(
            f"lam = {lam} is not below the essential edge m^2 = {op.m_sq}; "
            "use jost_threshold for the edge itself"
        )
    k = math.sqrt(op.m_sq - lam)
    # slowly decaying weights (k L < 1) behave like the threshold kernel and
    # need the larger iteration budget
    if cap == _DEFAULT_CAP and k * grid.L < 1.0:
        cap = _THRESHOLD_CAP
    return _solve_one_sided(op, k, direction, grid, refine, tol, cap, cross_check, cross_tol, z0)


def jost_threshold(
    op: EigenProblem,
    direction: str,
    grid: Grid,
    *,
    refine: int = 4,
    tol: float = 1e-13,
    cap: int = _THRESHOLD_CAP,
    cross_check: bool = True,
    cross_tol: float | None = None,
    slow_decay_bound: float = 500.0,
) -> JostSolution:
    """Bounded solution at the essential-spectrum edge (k = 0), boundary
    value (1, 0).  Warns if the weighted-integrability quantity that the
    threshold theory needs looks large."""
    if cross_tol is None:
        cross_tol = _auto_cross_tol(grid)
    yf = grid.refined(refine).y
    Vf, bf = op.samples(grid, refine)
    total = np.abs(Vf) + (np.abs(bf) if bf is not None else 0.0)
    mu_w = float(np.trapezoid(np.sqrt(1.0 + yf**2) * total, dx=grid.h / refine))
    if mu_w > slow_decay_bound:
        warnings.warn(
            f"(1+y^2)^(1/2)-weighted coefficient mass {mu_w:.1f} exceeds "
            f"{slow_decay_bound:.0f}; threshold conclusions may be unreliable",
            SlowDecayWarning,
        )
    return _solve_one_sided(op, 0.0, direction, grid, refine, tol, cap, cross_check, cross_tol)


def wronskian_at(a: JostSolution, b: JostSolution, index: int) -> float:
    """det of the column pair (a, b) at a grid index."""
    return float(a.Y[index] * b.dY[index] - b.Y[index] * a.dY[index])


def extend_full_line(
    j: JostSolution,
    companion: JostSolution,
    op: EigenProblem,
    *,
    wronskian_floor: float = 1e-10,
    companion_floor: float = 1e-8,
) -> JostSolution:
    """Recompute j on its far half-line by reduction of order against the
    companion solution from the opposite end, matching (Y, Y') at y = 0.

    Falls back to direct Runge-Kutta continuation from the matching point
    when the companion vanishes somewhere in the extension region (zeros of
    the companion make the reduction-of-order integrand singular).
    """
    if j.direction == companion.direction:
        raise ValueError("companion must decay at the opposite end")
    grid = j.grid
    i0 = grid.i_zero
    u0, du0 = j.at_zero()
    v0, dv0 = companion.at_zero()
    scale = abs(v0 * du0) + abs(u0 * dv0) + abs(u0 * v0) + abs(du0 * dv0)
    w0 = v0 * du0 - u0 * dv0
    if abs(w0) < wronskian_floor * max(scale, 1e-300):
        raise ParallelSolutions(
            f"companion is numerically proportional to the solution at y = 0 "
            f"(wronskian {w0:.3e}); the spectral parameter sits at an eigenvalue"
        )

    left = j.direction == PLUS_INFINITY  # extend toward -L for a +inf solution
    seg = slice(0, i0 + 1) if left else slice(i0, grid.n + 1)
    y_seg = grid.y[seg]
    v = companion.Y[seg]
    dv = companion.dY[seg]

    vscale = companion_floor * float(np.max(np.abs(v)))
    method = "reduction_of_order"
    # sign changes (or exact zeros) of the companion make 1/v^2 singular;
    # so would overflow of the exponentially growing integrand
    if (
        np.any(v[1:] * v[:-1] <= 0.0)
        or abs(v0) < vscale
        or 2.0 * j.k * grid.L > 700.0
    ):
        method = "ode_continuation"

    Ynew = j.Y.copy()
    dYnew = j.dY.copy()
    if method == "reduction_of_order":
        bvals = (
            np.asarray(op.b(y_seg), dtype=float) if op.b is not None else np.zeros_like(y_seg)
        )
        Bint = prefix_integral(bvals, grid.h)
        Bint -= Bint[-1] if left else Bint[0]  # antiderivative of b vanishing at y = 0
        integrand = np.exp(-Bint) / v**2
        # int_0^y, accumulated outward from y = 0 so that the exponentially
        # large far-end values cannot swamp the small near-zero ones
        if left:
            I = -suffix_integral(integrand, grid.h)
        else:
            I = prefix_integral(integrand, grid.h)
        c1 = u0 / v0
        c0 = (du0 - dv0 * c1) * v0
        Ynew[seg] = v * (c1 + c0 * I)
        dYnew[seg] = dv * (c1 + c0 * I) + c0 * np.exp(-Bint) / v
    else:
        k, ksq = j.k, j.k * j.k
        refine = 4
        sub = grid.refined(refine)
        mask = sub.y <= 0.0 if left else sub.y >= 0.0
        yf = sub.y[mask]
        Vf = np.asarray(op.V(yf), dtype=float)
        bf = np.asarray(op.b(yf), dtype=float) if op.b is not None else None
        if left:
            # integrate from 0 leftward == back-integration of the reflected problem
            Vr = Vf[::-1].copy()
            br = -bf[::-1] if bf is not None else None
        else:
            Vr = Vf
            br = bf
        hf = grid.h / refine
        m = Vr.shape[0]
        u1, u2 = (u0, -du0) if left else (u0, du0)
        V = Vr.tolist()
        bl = br.tolist() if br is not None else None
        s = 2.0 * hf
        vals1 = [u1]
        vals2 = [u2]
        for i in range(0, m - 2, 2):
            bi = bl[i] if bl is not None else 0.0
            bi1 = bl[i + 1] if bl is not None else 0.0
            bi2 = bl[i + 2] if bl is not None else 0.0
            a1 = u2
            a2 = (V[i] + ksq) * u1 - bi * u2
            p1 = u1 + 0.5 * s * a1
            p2 = u2 + 0.5 * s * a2
            b1 = p2
            b2 = (V[i + 1] + ksq) * p1 - bi1 * p2
            p1 = u1 + 0.5 * s * b1
            p2 = u2 + 0.5 * s * b2
            c1_ = p2
            c2_ = (V[i + 1] + ksq) * p1 - bi1 * p2
            p1 = u1 + s * c1_
            p2 = u2 + s * c2_
            d1 = p2
            d2 = (V[i + 2] + ksq) * p1 - bi2 * p2
            u1 = u1 + (s / 6.0) * (a1 + 2.0 * (b1 + c1_) + d1)
            u2 = u2 + (s / 6.0) * (a2 + 2.0 * (b2 + c2_) + d2)
            vals1.append(u1)
            vals2.append(u2)
        got1 = np.asarray(vals1)[:: refine // 2]
        got2 = np.asarray(vals2)[:: refine // 2]
        if left:
            Ynew[seg] = got1[::-1][: i0 + 1]
            dYnew[seg] = -got2[::-1][: i0 + 1]
        else:
            Ynew[seg] = got1
            dYnew[seg] = got2

    sgn = j.sign
    efac = np.exp(sgn * j.k * grid.y)
    out = JostSolution(
        lam=j.lam,
        k=j.k,
        direction=j.direction,
        grid=grid,
        Y=Ynew,
        dY=dYnew,
        Z1=efac * Ynew,
        Z2=efac * dYnew,
        normalized=j.normalized,
        iterations=j.iterations,
        mu_bound=j.mu_bound,
        cross_check_error=j.cross_check_error,
        extended_by=method,
    )
    return out


# --------------------------------------------------------------------------
# generic Volterra solver (the abstract contract behind the Jost machinery)


@dataclass(frozen=True)
class VolterraProblem:
    """Z = U + int K Z on a half line.

    kernel(y, w) -> 2x2 matrix (scalar args, or broadcastable arrays with a
    trailing (2, 2) block); inhomogeneity(y) -> 2-vector.  halfline is
    ("right", a): domain [a, inf), integrals from y upward, or ("left", a):
    domain (-inf, a], integrals from below up to y.
    """

    kernel: Callable
    inhomogeneity: Callable
    halfline: tuple[str, float]
    mu_bound: float | None = None


def _kernel_matrix(problem: VolterraProblem, y: np.ndarray) -> np.ndarray:
    n = y.shape[0]
    try:
        K = np.asarray(problem.kernel(y[:, None], y[None, :]), dtype=float)
        if K.shape != (n, n, 2, 2):
            raise ValueError
    except Exception:
        K = np.empty((n, n, 2, 2))
        for i in range(n):
            for jdx in range(n):
                K[i, jdx] = np.asarray(problem.kernel(y[i], y[jdx]), dtype=float)
    return K


def volterra_mu(problem: VolterraProblem, y: np.ndarray) -> float:
    """Numerical estimate of mu = int sup ||K(y, w)|| dw over the grid."""
    K = _kernel_matrix(problem, y)
    norms = np.linalg.norm(K, ord=2, axis=(2, 3))
    side, _ = problem.halfline
    n = y.shape[0]
    h = y[1] - y[0]
    if side == "right":
        sup = np.array([np.max(norms[: jdx + 1, jdx]) for jdx in range(n)])
    else:
        sup = np.array([np.max(norms[jdx:, jdx]) for jdx in range(n)])
    return float(np.trapezoid(sup, dx=h))


def solve_volterra(
    problem: VolterraProblem,
    tol: float,
    y: np.ndarray,
    *,
    cap: int = _DEFAULT_CAP,
) -> np.ndarray:
    """Fixed point of Z = U + int K Z by Picard iteration on the given grid.

    Trapezoid quadrature; meant for moderate grids and as the reference
    implementation of the contract (the Jost solvers specialize the same
    iteration to their exponential kernels).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    h = y[1] - y[0]
    side, _ = problem.halfline
    K = _kernel_matrix(problem, y)
    ii = np.arange(n)
    weights = np.zeros((n, n))
    if side == "right":
        # row i integrates over [y_i, y_{n-1}]
        weights[ii[:, None] <= ii[None, :]] = h
        weights[ii, ii] = 0.5 * h
        weights[: n - 1, n - 1] = 0.5 * h
        weights[n - 1, n - 1] = 0.0
    else:
        # row i integrates over [y_0, y_i]
        weights[ii[:, None] >= ii[None, :]] = h
        weights[ii, ii] = 0.5 * h
        weights[1:, 0] = 0.5 * h
        weights[0, 0] = 0.0
    M = K * weights[:, :, None, None]
    U = np.asarray([problem.inhomogeneity(yi) for yi in y], dtype=float)
    Z = U.copy()
    diff = math.inf
    for _ in range(cap):
        Zn = U + np.einsum("ijab,jb->ia", M, Z)
        diff = float(np.max(np.abs(Zn - Z)))
        Z = Zn
        if not math.isfinite(diff) or diff > 1e14:
            raise NoConvergence(f"Picard iterates blew up (update {diff:.3e})")
        if diff <= tol:
            return Z
    raise NoConvergence(f"Picard update still {diff:.3e} after {cap} iterations")
