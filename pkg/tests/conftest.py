"""Shared fixtures: the configuration matrices that several acceptance
criteria consume are computed once per session."""

from dataclasses import dataclass

import numpy as np
import pytest

from kinklab.coeffs import Bump, SumCoefficient, from_y_form
from kinklab.grid import Grid
from kinklab.kink import KinkT, build_kink
from kinklab.model import builtin_phi4, builtin_sine_gordon
from kinklab.spectral import (
    PerturbationData,
    compute_d,
    drift_predict,
    find_eigenvalues,
    perturbation_free,
    resonance_criterion,
)

STD_GRID = Grid(30.0, 4096)


def even_pair(amp, width, offset):
    """Reflection-even coefficient built from a mirrored bump pair."""
    if offset == 0.0:
        return SumCoefficient([Bump("gaussian", amp, width, 0.0)])
    return SumCoefficient(
        [Bump("gaussian", amp, width, offset), Bump("gaussian", amp, width, -offset)]
    )


def odd_pair(amp, width, offset):
    """Reflection-odd coefficient from an antisymmetric bump pair."""
    return SumCoefficient(
        [Bump("gaussian", amp, width, offset), Bump("gaussian", -amp, width, -offset)]
    )


@dataclass
class DriftCase:
    label: str
    delta: float
    tc: object
    kinkT: KinkT
    pd: PerturbationData
    A: float
    norm_sq: float
    predicted: float
    lambda_star: float


@pytest.fixture(scope="session")
def phi4_bundle():
    pot, kink = builtin_phi4()
    return pot, kink


@pytest.fixture(scope="session")
def sg_bundle():
    pot, kink = builtin_sine_gordon()
    return pot, kink


@pytest.fixture(scope="session")
def phi4_internal_mode(phi4_bundle):
    """Unperturbed internal-mode record of the quartic model."""
    pot, kink = phi4_bundle
    pd0 = perturbation_free(pot, kink, STD_GRID)
    rep = find_eigenvalues(pot, pd0, (1.2, 1.8), 120, include_threshold=False)
    return rep.eigenvalues[0]


def _drift_case(pot, kink, rec0, label, delta, b_co, c_co) -> DriftCase:
    tc = from_y_form(b_co, c_co, STD_GRID, delta=delta)
    kt = build_kink(pot, kink, tc, STD_GRID)
    pd = compute_d(pot, tc, kt)
    dp = drift_predict(rec0, rec0.lam, pd)
    return DriftCase(
        label=label,
        delta=delta,
        tc=tc,
        kinkT=kt,
        pd=pd,
        A=dp.A,
        norm_sq=dp.norm_sq,
        predicted=dp.predicted_lambda,
        lambda_star=rec0.lam,
    )


def make_drift_configs(rng, delta):
    """Coefficient drawings that keep the kink pinned (reflection-even c,
    reflection-odd b) with enough variety for the sign study."""
    configs = []
    for i in range(40):
        mode = rng.integers(0, 3)
        width = float(rng.uniform(0.7, 2.5))
        offset = float(rng.uniform(0.0, 2.0))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        if mode == 0:
            b_co, c_co = None, even_pair(sign * delta, width, offset)
            label = f"c_even(w={width:.2f},o={offset:.2f},s={sign:+.0f})"
        elif mode == 1:
            b_co, c_co = odd_pair(sign * delta, width, max(offset, 0.4)), None
            label = f"b_odd(w={width:.2f},o={offset:.2f},s={sign:+.0f})"
        else:
            b_co = odd_pair(sign * delta, width, max(offset, 0.4))
            c_co = even_pair(-sign * delta, width, offset)
            label = f"mix(w={width:.2f},o={offset:.2f},s={sign:+.0f})"
        configs.append((label, b_co, c_co))
    return configs


@pytest.fixture(scope="session")
def drift_matrix(phi4_bundle, phi4_internal_mode):
    """>= 20 admissible drift configurations at delta = 1e-2 with
    |A| above the quadratic-remainder floor."""
    pot, kink = phi4_bundle
    rng = np.random.default_rng(2024)
    delta = 1e-2
    cases = []
    for label, b_co, c_co in make_drift_configs(rng, delta):
        case = _drift_case(pot, kink, phi4_internal_mode, label, delta, b_co, c_co)
        if abs(case.A) >= 10.0 * delta**2 * case.norm_sq:
            cases.append(case)
        if len(cases) >= 20:
            break
    assert len(cases) >= 20
    return cases


@dataclass
class ResonanceRow:
    model: str
    delta: float
    sign: int
    pot: object
    kinkT: KinkT
    tc: object
    pd: PerturbationData
    criterion: float
    verdict: str
    k_est: float


@pytest.fixture(scope="session")
def resonance_matrix(phi4_bundle, sg_bundle):
    """2 models x 3 deltas x 2 orientations = 12 rows."""
    rows = []
    for model, (pot, kink), r_inf_sq in (
        ("sine_gordon", sg_bundle, 1.0),
        ("phi4", phi4_bundle, 4.0),
    ):
        for sign in (+1, -1):
            for delta in (5e-3, 1e-2, 2e-2):
                if model == "sine_gordon":
                    tc = from_y_form(odd_pair(sign * delta, 1.0, 1.0), None, STD_GRID, delta=delta)
                else:
                    tc = from_y_form(None, even_pair(-sign * delta, 2.0, 0.0), STD_GRID, delta=delta)
                kt = build_kink(pot, kink, tc, STD_GRID)
                pd = compute_d(pot, tc, kt)
                cr = resonance_criterion(pot.resonance, pd, r_deriv=pot.resonance_deriv)
                rows.append(
                    ResonanceRow(
                        model=model,
                        delta=delta,
                        sign=sign,
                        pot=pot,
                        kinkT=kt,
                        tc=tc,
                        pd=pd,
                        criterion=cr.value,
                        verdict=cr.verdict,
                        k_est=max(abs(cr.value) / (2.0 * r_inf_sq), 2e-4),
                    )
                )
    return rows
