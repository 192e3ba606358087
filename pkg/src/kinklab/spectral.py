"""Evans-function spectral analysis of the linearized operator.

The linearization around the corrected kink is
L = -d^2/dy^2 - b d/dy - c + F''(T), written here as the flat-kink operator
plus a perturbation:  L = L_S - b d/dy + d  with  d = -c + F''(T) - F''(S).
Discrete eigenvalues below the essential edge m^2 are the zeros of the
Evans function W(lam) = det(U_+, U_-)(0) built from the two one-sided
decaying solutions; exp(int b) W is constant in y, which every evaluation
records as a consistency residual.  The module also evaluates the
first-order eigenvalue-drift formula and the threshold-resonance emergence
criterion, both driven by the same perturbation data.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import BracketCollision, DegenerateResonance
from .grid import Grid
from .jost import (
    MINUS_INFINITY,
    PLUS_INFINITY,
    EigenProblem,
    JostSolution,
    jost,
    jost_threshold,
)
from .kink import KinkT
from .model import KinkS, Potential
from .quadrature import deriv1, integrate, norm_l1

RESONANT = "resonant"
NONRESONANT = "nonresonant"
EIGENVALUE_AT_THRESHOLD = "eigenvalue_at_threshold"

EMERGES = "eigenvalue_emerges"
NO_NEARBY = "no_nearby_eigenvalue"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class PerturbationData:
    """Drift b and potential perturbation d of the linearized operator,
    with the first-order (kink-correction-free) approximation of d."""

    b: Callable | None
    d: Callable
    d_first_order: Callable
    norms: tuple[float, float]  # (L1 of b, L1 of d)
    omega: Callable
    S: KinkS
    V0: Callable
    m_sq: float
    grid: Grid
    delta_nominal: float | None = None  # the configured smallness parameter

    @property
    def b_l1(self) -> float:
        return self.norms[0]

    @property
    def d_l1(self) -> float:
        return self.norms[1]

    @property
    def delta_size(self) -> float:
        """Operative smallness parameter: the configured delta when known,
        else the L1 mass of the perturbation."""
        if self.delta_nominal:
            return self.delta_nominal
        return self.norms[0] + self.norms[1]


def perturbation_free(pot: Potential, kink: KinkS, grid: Grid) -> PerturbationData:
    """Zero perturbation: the flat-kink operator itself."""
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    one = lambda y: np.ones_like(np.asarray(y, dtype=float))
    return PerturbationData(
        b=None,
        d=zero,
        d_first_order=zero,
        norms=(0.0, 0.0),
        omega=one,
        S=kink,
        V0=lambda y: np.asarray(pot.d2F(kink.profile(y)), dtype=float) - pot.m_sq,
        m_sq=pot.m_sq,
        grid=grid,
    )


def compute_d(pot: Potential, tc, kinkT: KinkT) -> PerturbationData:
    """Exact perturbation from the converged kink, plus its first-order
    approximation  -c + F'''(S) * (leading correction)."""
    S = kinkT.S
    grid = kinkT.grid
    g_spline = CubicSpline(grid.y, kinkT.first_order)

    def g_at(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        inside = np.abs(y) <= grid.L
        out[inside] = g_spline(y[inside])
        return out

    def d(y):
        y = np.asarray(y, dtype=float)
        return (
            -np.asarray(tc.c_y(y), dtype=float)
            + np.asarray(pot.d2F(kinkT.t_at(y)), dtype=float)
            - np.asarray(pot.d2F(S.profile(y)), dtype=float)
        )

    def d_fo(y):
        y = np.asarray(y, dtype=float)
        return -np.asarray(tc.c_y(y), dtype=float) + np.asarray(
            pot.d3F(S.profile(y)), dtype=float
        ) * g_at(y)

    b = None if tc.is_trivial or float(np.max(np.abs(tc.b_y(grid.y)))) == 0.0 else tc.b_y
    return PerturbationData(
        b=b,
        d=d,
        d_first_order=d_fo,
        norms=(
            norm_l1(np.asarray(tc.b_y(grid.y), dtype=float), grid.h),
            norm_l1(d(grid.y), grid.h),
        ),
        omega=tc.omega,
        S=S,
        V0=lambda y: np.asarray(pot.d2F(S.profile(y)), dtype=float) - pot.m_sq,
        m_sq=pot.m_sq,
        grid=grid,
        delta_nominal=tc.delta_report.delta or None,
    )


@dataclass
class EvansSample:
    """One Evans-function evaluation, with the weighted-Wronskian constancy
    residual along the grid."""

    lam: float
    k: float
    value: float
    abel_residual: float
    plus: JostSolution | None = None
    minus: JostSolution | None = None


@dataclass
class EigenvalueRecord:
    lam: float
    k: float
    Y: np.ndarray
    dY: np.ndarray
    norm_sq: float
    evans_value: float
    decay_rate: float
    nearest_known: float | None = None
    abel_residual: float = 0.0


@dataclass
class ThresholdReport:
    status: str
    wronskian: float
    scale: float
    profile: np.ndarray | None
    profile_deriv: np.ndarray | None


@dataclass
class DriftPrediction:
    lambda_star: float
    A: float
    norm_sq: float
    predicted_lambda: float
    first_order_variant: float

    @property
    def shift(self) -> float:
        return self.A / self.norm_sq


@dataclass
class CriterionResult:
    value: float
    first_order_value: float
    verdict: str
    margin: float
    delta_size: float


@dataclass
class SpectrumReport:
    essential_edge: float
    eigenvalues: list[EigenvalueRecord]
    threshold: ThresholdReport | None
    drift_predictions: list[DriftPrediction]
    scan: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def lams(self) -> list[float]:
        return [r.lam for r in self.eigenvalues]

    @property
    def threshold_status(self) -> str | None:
        return self.threshold.status if self.threshold else None


class EvansEngine:
    """Caches operator samples and warm-starts across nearby spectral
    parameters; distinct engines are independent and thread-safe."""

    def __init__(
        self,
        pd: PerturbationData,
        grid: Grid | None = None,
        refine: int = 4,
        tol: float = 1e-13,
        op: EigenProblem | None = None,
    ):
        self.pd = pd
        self.grid = grid or pd.grid
        self.refine = refine
        self.tol = tol
        self.op = op or EigenProblem(
            V=lambda y: np.asarray(pd.V0(y), dtype=float) + np.asarray(pd.d(y), dtype=float),
            b=pd.b,
            m_sq=pd.m_sq,
        )
        self._omega = np.asarray(pd.omega(self.grid.y), dtype=float)
        self._warm: dict[str, tuple] = {}

    def _solve(self, lam: float, direction: str, cross_check: bool) -> JostSolution:
        if lam >= self.pd.m_sq - 1e-14:
            return jost_threshold(
                self.op, direction, self.grid, refine=self.refine, cross_check=cross_check
            )
        j = jost(
            self.op,
            lam,
            direction,
            self.grid,
            refine=self.refine,
            tol=self.tol,
            cross_check=cross_check,
            z0=self._warm.get(direction),
        )
        self._warm[direction] = j.fine
        return j

    def sample(self, lam: float, cross_check: bool = False, keep: bool = True) -> EvansSample:
        jp = self._solve(lam, PLUS_INFINITY, cross_check)
        jm = self._solve(lam, MINUS_INFINITY, cross_check)
        i0 = self.grid.i_zero
        value = jp.Y[i0] * jm.dY[i0] - jm.Y[i0] * jp.dY[i0]
        W = jp.Y * jm.dY - jm.Y * jp.dY
        ow = self._omega * W
        scale = float(
            np.max(self._omega * (np.abs(jp.Y * jm.dY) + np.abs(jm.Y * jp.dY)))
        )
        residual = float((np.max(ow) - np.min(ow)) / scale)
        return EvansSample(
            lam=lam,
            k=math.sqrt(max(self.pd.m_sq - lam, 0.0)),
            value=float(value),
            abel_residual=residual,
            plus=jp if keep else None,
            minus=jm if keep else None,
        )

    def value(self, lam: float) -> float:
        return self.sample(lam, keep=False).value


def evans(pot: Potential, pd: PerturbationData, lam: float, *, grid: Grid | None = None,
          cross_check: bool = False, refine: int = 4) -> EvansSample:
    """Evans-function sample at one spectral parameter (lam <= m^2)."""
    if lam > pd.m_sq:
        from .errors import ThresholdParameter

        raise ThresholdParameter(f"lam = {lam} lies above the essential edge {pd.m_sq}")
    return EvansEngine(pd, grid, refine).sample(lam, cross_check=cross_check)


def _glue_eigenfunction(jp: JostSolution, jm: JostSolution, grid: Grid):
    """Match the one-sided solutions at y = 0 into one profile, normalized
    to unit value at 0, or unit derivative when the value vanishes there."""
    i0 = grid.i_zero
    if abs(jp.Y[i0]) >= abs(jp.dY[i0]):
        sigma = jp.Y[i0] / jm.Y[i0]
    else:
        sigma = jp.dY[i0] / jm.dY[i0]
    Y = np.concatenate((sigma * jm.Y[:i0], jp.Y[i0:]))
    dY = np.concatenate((sigma * jm.dY[:i0], jp.dY[i0:]))
    ymax = float(np.max(np.abs(Y)))
    if abs(Y[i0]) > 0.1 * ymax:
        c = 1.0 / Y[i0]
    else:
        c = 1.0 / dY[i0]
    return c * Y, c * dY


def _decay_rate(Y: np.ndarray, grid: Grid) -> float:
    """Log-slope of |Y| over the outer right quarter of the grid."""
    n = grid.n
    sel = slice(n - n // 4, n - n // 32)
    vals = np.abs(Y[sel])
    vals = np.where(vals > 0, vals, 1e-300)
    return float(-np.polyfit(grid.y[sel], np.log(vals), 1)[0])


def find_eigenvalues(
    pot: Potential,
    pd: PerturbationData,
    search: tuple[float, float] | None = None,
    n_scan: int = 400,
    *,
    grid: Grid | None = None,
    refine: int = 4,
    root_xtol: float = 1e-12,
    collision_dip: float = 1e-6,
    include_threshold: bool = True,
    unperturbed: SpectrumReport | None = None,
    threads: int = 1,
    keep_scan: bool = False,
) -> SpectrumReport:
    """Scan the Evans function, bisect its sign changes, and classify the
    threshold.

    Raises BracketCollision when |W| dips below collision_dip (relative to
    the median scan magnitude) at an interior local minimum without a sign
    change: two roots in one cell; raise n_scan.
    """
    engine = EvansEngine(pd, grid, refine)
    g = engine.grid
    m_sq = pd.m_sq
    if search is None:
        lo = (min(pot.known_eigenvalues) if pot.known_eigenvalues else 0.0) - 0.5
        search = (lo, m_sq)
    lo, hi = search
    hi = min(hi if hi is not None else m_sq, m_sq)
    lams = np.linspace(lo, hi, n_scan)

    # the scan only needs signs: run it on a cheaper engine and polish the
    # bracketed roots on the accurate one
    scan_engine = EvansEngine(pd, g, refine=2, tol=1e-11, op=engine.op)
    if threads > 1:
        chunks = np.array_split(lams, threads)
        engines = [EvansEngine(pd, g, refine=2, tol=1e-11, op=engine.op) for _ in chunks]

        def run(args):
            eng, chunk = args
            return [eng.value(l) for l in chunk]

        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, zip(engines, chunks)))
        Wv = np.asarray([w for part in parts for w in part])
    else:
        Wv = np.asarray([scan_engine.value(l) for l in lams])

    w_scale = float(np.median(np.abs(Wv))) or 1.0

    roots: list[float] = []
    for j in range(n_scan - 1):
        a, b = Wv[j], Wv[j + 1]
        if a == 0.0:
            roots.append(float(lams[j]))
            continue
        if a * b < 0.0:
            roots.append(
                float(brentq(engine.value, lams[j], lams[j + 1], xtol=root_xtol))
            )
    if Wv[-1] == 0.0 and hi < m_sq:
        roots.append(float(lams[-1]))

    # interior dips without sign change: unresolved root pairs
    for j in range(1, n_scan - 1):
        if (
            abs(Wv[j]) < collision_dip * w_scale
            and abs(Wv[j]) < abs(Wv[j - 1])
            and abs(Wv[j]) < abs(Wv[j + 1])
            and Wv[j - 1] * Wv[j] > 0.0
            and Wv[j] * Wv[j + 1] > 0.0
        ):
            raise BracketCollision(
                f"|W| dips to {Wv[j]:.2e} near lam = {lams[j]:.6g} without a sign "
                f"change; two roots may share a scan cell (n_scan = {n_scan})"
            )

    roots = sorted(set(round(r, 14) for r in roots))
    merged: list[float] = []
    for r in roots:
        if not merged or abs(r - merged[-1]) > 100 * root_xtol:
            merged.append(r)

    records: list[EigenvalueRecord] = []
    for r in merged:
        s = engine.sample(r, cross_check=True)
        Y, dY = _glue_eigenfunction(s.plus, s.minus, g)
        nearest = None
        if pot.known_eigenvalues:
            nearest = float(min(abs(r - l0) for l0 in pot.known_eigenvalues))
        records.append(
            EigenvalueRecord(
                lam=r,
                k=s.k,
                Y=Y,
                dY=dY,
                norm_sq=integrate(Y * Y, g.h),
                evans_value=s.value,
                decay_rate=_decay_rate(Y, g),
                nearest_known=nearest,
                abel_residual=s.abel_residual,
            )
        )

    threshold = threshold_status_report(pot, pd, grid=g, refine=refine) if include_threshold else None

    drifts: list[DriftPrediction] = []
    if unperturbed is not None:
        for rec0 in unperturbed.eigenvalues:
            drifts.append(drift_predict((rec0.Y, rec0.dY), rec0.lam, pd, grid=g))

    return SpectrumReport(
        essential_edge=m_sq,
        eigenvalues=records,
        threshold=threshold,
        drift_predictions=drifts,
        scan=(lams, Wv) if keep_scan else None,
    )


def threshold_status_report(
    pot: Potential,
    pd: PerturbationData,
    *,
    grid: Grid | None = None,
    refine: int = 4,
    resonance_tol: float = 1e-6,
) -> ThresholdReport:
    """Classify the essential-spectrum edge.

    resonant: the two bounded edge solutions are proportional and have
    nonzero limits (a bounded, non-square-summable profile exists);
    eigenvalue_at_threshold: proportional with vanishing limits;
    nonresonant: the edge Wronskian is bounded away from zero.
    """
    g = grid or pd.grid
    op = EigenProblem(
        V=lambda y: np.asarray(pd.V0(y), dtype=float) + np.asarray(pd.d(y), dtype=float),
        b=pd.b,
        m_sq=pd.m_sq,
    )
    jp = jost_threshold(op, PLUS_INFINITY, g, refine=refine)
    jm = jost_threshold(op, MINUS_INFINITY, g, refine=refine)
    i0 = g.i_zero
    w0 = float(jp.Y[i0] * jm.dY[i0] - jm.Y[i0] * jp.dY[i0])
    scale = float(
        abs(jp.Y[i0] * jm.dY[i0])
        + abs(jm.Y[i0] * jp.dY[i0])
        + abs(jp.dY[i0] * jm.dY[i0])
        + 1e-300
    )
    # edge solutions are bounded with limit 1 at their own end; at an exact
    # resonance they are proportional, so scale degenerates to ~|Y Y'| which
    # can be small; compare against the profile size instead
    size = float(np.max(np.abs(jp.Y)) * np.max(np.abs(jm.Y)))
    if abs(w0) <= resonance_tol * max(scale, size):
        Y, dY = _glue_eigenfunction(jp, jm, g)
        edge = max(g.n // 50, 4)
        lim_r = float(np.mean(Y[-edge:]))
        lim_l = float(np.mean(Y[:edge]))
        # limit-normalize when possible
        ref = lim_r if abs(lim_r) > 1e-8 * np.max(np.abs(Y)) else None
        if ref is not None:
            Y, dY = Y / ref, dY / ref
            lim_l, lim_r = lim_l / ref, 1.0
        if max(abs(lim_l), abs(lim_r)) < 1e-3 * float(np.max(np.abs(Y))):
            status = EIGENVALUE_AT_THRESHOLD
        else:
            status = RESONANT
        return ThresholdReport(status, w0, scale, Y, dY)
    return ThresholdReport(NONRESONANT, w0, scale, None, None)


def threshold_status(pot: Potential, pd: PerturbationData, **kwargs) -> str:
    """Just the classification string."""
    return threshold_status_report(pot, pd, **kwargs).status


def drift_predict(
    Y_star,
    lambda_star: float,
    pd: PerturbationData,
    *,
    grid: Grid | None = None,
) -> DriftPrediction:
    """First-order eigenvalue shift of an unperturbed eigenpair.

    Y_star is (values, derivative values) on the grid, or an
    EigenvalueRecord.  The shift is the perturbation's diagonal matrix
    element over the eigenfunction's squared norm; its sign is the
    direction of the drift.
    """
    g = grid or pd.grid
    if isinstance(Y_star, EigenvalueRecord):
        Y, dY = Y_star.Y, Y_star.dY
    else:
        Y, dY = Y_star
    y = g.y
    dv = np.asarray(pd.d(y), dtype=float)
    dfov = np.asarray(pd.d_first_order(y), dtype=float)
    bv = np.asarray(pd.b(y), dtype=float) if pd.b is not None else 0.0
    A = integrate(Y * (dv * Y - bv * dY), g.h)
    A_fo = integrate(Y * (dfov * Y - bv * dY), g.h)
    norm_sq = integrate(Y * Y, g.h)
    return DriftPrediction(
        lambda_star=lambda_star,
        A=A,
        norm_sq=norm_sq,
        predicted_lambda=lambda_star + A / norm_sq,
        first_order_variant=A_fo,
    )


def resonance_criterion(
    R,
    pd: PerturbationData,
    *,
    r_deriv=None,
    margin: float | None = None,
    margin_factor: float = 10.0,
    grid: Grid | None = None,
) -> CriterionResult:
    """Emergence criterion at a simple threshold resonance.

    Negative values signal a discrete eigenvalue detaching just below the
    edge; positive values exclude one nearby.  |value| below the margin
    (default margin_factor * delta^2) is inconclusive, since the formula
    carries a quadratic remainder.
    """
    g = grid or pd.grid
    y = g.y
    Rv = np.asarray(R(y), dtype=float) if callable(R) else np.asarray(R, dtype=float)
    edge = max(g.n // 50, 4)
    lim_l = float(np.mean(Rv[:edge]))
    lim_r = float(np.mean(Rv[-edge:]))
    rmax = float(np.max(np.abs(Rv)))
    if min(abs(lim_l), abs(lim_r)) < 0.05 * rmax:
        raise DegenerateResonance(
            f"threshold profile limits ({lim_l:.2e}, {lim_r:.2e}) are not "
            "bounded away from zero"
        )
    scale = max(abs(lim_l), abs(lim_r))
    Rn = Rv / scale
    if r_deriv is not None:
        dR = (np.asarray(r_deriv(y), dtype=float) if callable(r_deriv) else np.asarray(r_deriv, dtype=float)) / scale
    else:
        dR = deriv1(Rn, g.h)
    dv = np.asarray(pd.d(y), dtype=float)
    dfov = np.asarray(pd.d_first_order(y), dtype=float)
    bv = np.asarray(pd.b(y), dtype=float) if pd.b is not None else 0.0
    value = integrate(Rn * (dv * Rn - bv * dR), g.h)
    value_fo = integrate(Rn * (dfov * Rn - bv * dR), g.h)
    if margin is None:
        margin = margin_factor * pd.delta_size**2
    if value < -margin:
        verdict = EMERGES
    elif value > margin:
        verdict = NO_NEARBY
    else:
        verdict = INCONCLUSIVE
    return CriterionResult(
        value=value,
        first_order_value=value_fo,
        verdict=verdict,
        margin=margin,
        delta_size=pd.delta_size,
    )


def eigenfunction_weighted_gap(
    rec_a: EigenvalueRecord, rec_b: EigenvalueRecord, grid: Grid
) -> float:
    """Sup-norm of e^{k|y|}-weighted difference of two matched-normalized
    eigenfunctions (closeness diagnostic for perturbed vs unperturbed)."""
    y = np.abs(grid.y)
    wa = np.exp(rec_a.k * y) * rec_a.Y
    wb = np.exp(rec_b.k * y) * rec_b.Y
    return float(np.max(np.abs(wa - wb)))
