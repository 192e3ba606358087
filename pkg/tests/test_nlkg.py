import math
from types import SimpleNamespace

import numpy as np
import pytest

from kinklab.coeffs import Bump, from_y_form, trivial
from kinklab.errors import CFLViolation, NonFiniteField
from kinklab.grid import Grid
from kinklab.kink import build_kink
from kinklab.model import builtin_phi4, builtin_sine_gordon
from kinklab.nlkg import (
    FieldState,
    Stepper,
    band_limited_perturbation,
    discrete_kink_equilibrium,
    dq_distance,
    energy,
    h1_l2_norm,
    orbital_experiment,
    sech_bump_perturbation,
    step,
)

GRID = Grid(30.0, 4096)


@pytest.fixture(scope="module")
def phi4_flat():
    pot, kink = builtin_phi4()
    return pot, kink, build_kink(pot, kink, trivial(GRID), GRID)


@pytest.fixture(scope="module")
def phi4_perturbed():
    pot, kink = builtin_phi4()
    tc = from_y_form(None, Bump("gaussian", 1e-2, 1.0, 0.0), GRID, delta=1e-2)
    return pot, tc, build_kink(pot, kink, tc, GRID)


def test_cfl_violation_raised(phi4_flat):
    pot, kink, kt = phi4_flat
    state = FieldState(0.0, kink.profile(GRID.y), np.zeros(GRID.n + 1), GRID)
    with pytest.raises(CFLViolation):
        step(state, GRID.h, None, pot)


def test_nonfinite_field_detected(phi4_flat):
    pot, _, _ = phi4_flat
    u = np.full(GRID.n + 1, 1e200)
    state = FieldState(0.0, u, np.zeros_like(u), GRID)
    with pytest.raises(NonFiniteField):
        step(state, 0.5 * GRID.h, None, pot)


def test_stationary_kink_holds(phi4_perturbed):
    pot, tc, kt = phi4_perturbed
    grid = Grid(40.0, 8192)
    ueq = discrete_kink_equilibrium(kt, tc, pot, grid)
    stepper = Stepper(grid, tc, pot)
    state = FieldState(0.0, ueq.copy(), np.zeros_like(ueq), grid)
    dt = 0.45 * grid.h
    for _ in range(int(50.0 / dt)):
        state = stepper.step(state, dt)
    assert np.max(np.abs(state.u - ueq)) < 1e-6


def test_dispersion_relation_of_linearized_waves():
    # linear medium: force F'(u) = m^2 u; a wave packet at carrier k0 moves
    # with group velocity k0 / sqrt(k0^2 + m^2)
    m_sq = 1.0
    lin = SimpleNamespace(dF=lambda u: m_sq * u, F=lambda u: 0.5 * m_sq * u**2)
    grid = Grid(100.0, 8192)
    y = grid.y
    k0 = 1.2
    sigma = 6.0
    omega = math.sqrt(k0**2 + m_sq)
    envelope = np.exp(-(((y + 25.0) / sigma) ** 2))
    u = envelope * np.cos(k0 * (y + 25.0))
    # right-moving packet: u_t = -omega/k0 * u_y approximately; use exact
    # phase relation u_t = omega sin(...) * envelope
    u_t = envelope * omega * np.sin(k0 * (y + 25.0))
    stepper = Stepper(grid, None, lin)
    state = FieldState(0.0, u, u_t, grid)
    dt = 0.45 * grid.h

    def centroid(f):
        w = f**2
        return float(np.trapezoid(y * w, dx=grid.h) / np.trapezoid(w, dx=grid.h))

    c0 = centroid(state.u)
    t_end = 30.0
    for _ in range(int(t_end / dt)):
        state = stepper.step(state, dt)
    c1 = centroid(state.u)
    v_group = (c1 - c0) / state.t
    assert v_group == pytest.approx(k0 / omega, rel=0.02)


def test_energy_drift_quarters_under_dt_halving(phi4_flat):
    # halving the step on the same spatial system isolates the integrator's
    # O(dt^2) energy wobble; the small-dt run measures the dt-independent
    # floor of the energy functional, which is subtracted out
    pot, kink, _ = phi4_flat
    grid = Grid(30.0, 1024)
    kt = build_kink(pot, kink, trivial(grid), grid)
    ueq = discrete_kink_equilibrium(kt, None, pot, grid)
    stepper = Stepper(grid, None, pot)
    u0 = ueq + 0.8 / np.cosh(grid.y)
    u0[0], u0[-1] = ueq[0], ueq[-1]
    drifts = {}
    for frac in (0.8, 0.4, 0.05):
        state = FieldState(0.0, u0.copy(), np.zeros_like(u0), grid)
        e0 = stepper.energy(state).E
        dt = frac * grid.h
        acc = []
        for _ in range(int(10.0 / dt)):
            state = stepper.step(state, dt)
            acc.append(stepper.energy(state, e0).drift_rel)
        drifts[frac] = float(np.mean(acc))
    ratio = (drifts[0.8] - drifts[0.05]) / (drifts[0.4] - drifts[0.05])
    assert ratio == pytest.approx(4.0, rel=0.3)


def test_energy_exact_values(phi4_flat):
    pot, kink, kt = phi4_flat
    # stationary kink with no coefficients: the classical static energy
    state = FieldState(0.0, kink.profile(GRID.y), np.zeros(GRID.n + 1), GRID)
    rep = energy(state, None, pot)
    assert rep.E == pytest.approx(2.0 * math.sqrt(2.0) / 3.0, abs=1e-8)
    assert rep.E_p == pytest.approx(rep.E)
    # vacuum: zero energy
    vac = FieldState(0.0, np.full(GRID.n + 1, pot.a_plus), np.zeros(GRID.n + 1), GRID)
    assert abs(energy(vac, None, pot).E) < 1e-14


def test_dq_identities(phi4_flat):
    pot, kink, kt = phi4_flat
    val, xi = dq_distance(kt.t_at(GRID.y), kt, 1.0)
    assert val < 1e-8
    assert abs(xi) < 1e-4

    val, xi = dq_distance(kt.t_at(GRID.y + 0.3), kt, 1.0)
    assert val < 1e-8
    assert xi == pytest.approx(0.3, abs=1e-4)

    eps = 1e-2
    v1 = eps / np.cosh(GRID.y)
    val, _ = dq_distance(kt.t_at(GRID.y) + v1, kt, 1.0)
    dv1 = -eps * np.tanh(GRID.y) / np.cosh(GRID.y)
    bound = float(np.trapezoid(dv1**2 + v1**2, dx=GRID.h))
    assert val <= bound + 1e-12


def test_orbital_zero_perturbation(phi4_perturbed):
    # unperturbed evolution does not move: the distance stays at its
    # initial representation floor (O(h^2) between the discrete equilibrium
    # and the continuum profile) without growing
    pot, tc, kt = phi4_perturbed
    grid = Grid(50.0, 4096)
    zeros = (np.zeros(grid.n + 1), np.zeros(grid.n + 1))
    res = orbital_experiment(kt, zeros, 10.0, 1.0, tc=tc, pot=pot, grid=grid)
    floor = res.records[0].dq
    assert floor < 1e-4
    assert res.sup_dq <= max(1.5 * floor, 1e-6)


def test_orbital_bounded_for_small_perturbation(phi4_perturbed):
    pot, tc, kt = phi4_perturbed
    grid = Grid(80.0, 4096)
    pert = sech_bump_perturbation(grid, 1e-2)
    res = orbital_experiment(kt, pert, 60.0, 1.0, tc=tc, pot=pot, grid=grid)
    assert res.records[0].dq > 0
    assert res.sup_dq <= 8.0 * res.records[0].dq
    assert max(r.drift_rel for r in res.records) < 1e-4


def test_orbital_sine_gordon_flat(phi4_flat):
    pot, kink = builtin_sine_gordon()
    grid = Grid(80.0, 4096)
    kt = build_kink(pot, kink, trivial(grid), grid)
    pert = sech_bump_perturbation(grid, 1e-2, width=2.0)
    res = orbital_experiment(kt, pert, 60.0, 1.0, tc=None, pot=pot, grid=grid)
    assert res.sup_dq <= 8.0 * max(res.records[0].dq, 1e-12)


def test_finite_propagation_outside_light_cone(phi4_flat):
    pot, kink, _ = phi4_flat
    grid = Grid(60.0, 4096)
    kt = build_kink(pot, kink, trivial(grid), grid)
    ueq = discrete_kink_equilibrium(kt, None, pot, grid)
    y0 = 5.0
    v1 = np.where(np.abs(grid.y) <= y0, np.cos(math.pi * grid.y / (2 * y0)) ** 2, 0.0) * 1e-3
    u0 = ueq + v1
    u0[0], u0[-1] = ueq[0], ueq[-1]
    stepper = Stepper(grid, None, pot)
    state = FieldState(0.0, u0, np.zeros_like(u0), grid)
    dt = 0.45 * grid.h
    t_end = 20.0
    for _ in range(int(t_end / dt)):
        state = stepper.step(state, dt)
    outside = np.abs(grid.y) > y0 + state.t + 1.0
    assert np.max(np.abs((state.u - ueq)[outside])) < 1e-10


def test_perturbation_builders_normalize(phi4_flat):
    grid = Grid(40.0, 2048)
    v1, v2 = sech_bump_perturbation(grid, 3e-3)
    assert h1_l2_norm(v1, v2, grid.h) == pytest.approx(3e-3, rel=1e-10)
    rng = np.random.default_rng(5)
    w1, w2 = band_limited_perturbation(grid, 2e-3, rng)
    assert h1_l2_norm(w1, w2, grid.h) == pytest.approx(2e-3, rel=1e-10)
