import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sclhom.brownian import sample_path
from sclhom.errors import GridTooNarrow, MissingStepData
from sclhom.fv import SchemeConfig, advance, make_stepper
from sclhom.homog import YoungMeasureHistogram, weight_on_grid
from sclhom.kinetic import (chi_identity_check, chi_plus, entropy_production,
                            rigidity_defect, weighted_p_moment)
from sclhom.models import (Box, ConstantVelocity, InverseFluxFlow, ScalarFlux,
                           StiffSourceProblem, TransportProblem, burgers_flux,
                           cubic_flux, linear_flux, sin_potential, sinh_flow,
                           unit_flow)


def centered_grid(lo, hi, dxi):
    m = int(round((hi - lo) / dxi))
    return lo + (np.arange(m) + 0.5) * dxi


# -- chi identities -----------------------------------------------------------

def test_chi_identity_far_pair():
    xi = centered_grid(-3.0, 4.0, 1e-3)
    res = chi_identity_check(2.0, -1.0, xi)
    # |u-v| integral equals 3 up to the grid resolution
    assert res["absolute"] <= 2e-3
    assert res["positive_part"] <= 2e-3
    assert res["quarter"] <= 2e-3


def test_chi_identity_equal_values_exact():
    xi = centered_grid(-2.0, 2.0, 1e-3)
    res = chi_identity_check(0.4, 0.4, xi)
    assert res["positive_part"] == 0.0
    assert res["absolute"] == 0.0
    assert res["quarter"] == 0.0
    assert res["weighted"] == 0.0


def test_chi_identity_close_pair():
    xi = centered_grid(-1.5, 2.5, 1e-3)
    res = chi_identity_check(0.7, 0.2, xi)
    assert abs(0.5 - (0.5 - res["positive_part"])) <= 2e-3
    assert res["positive_part"] <= 2e-3


def test_chi_grid_too_narrow():
    with pytest.raises(GridTooNarrow):
        chi_identity_check(2.0, -1.0, centered_grid(-1.0, 2.5, 1e-3))


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_chi_identities_property(u, v):
    xi = centered_grid(-3.5, 3.5, 5e-4)
    res = chi_identity_check(u, v, xi)
    assert res["positive_part"] <= 1e-3
    assert res["absolute"] <= 1e-3
    assert res["quarter"] <= 1e-3


def test_chi_plus_shape():
    xi = np.linspace(-2, 2, 9)
    c = chi_plus(xi, 0.5)
    assert np.all(np.diff(c) <= 0)
    assert np.count_nonzero(np.diff(c)) == 1


# -- entropy production -------------------------------------------------------

def burgers_shock_problem(n=200, T=0.25):
    flux = ScalarFlux((burgers_flux(),), (-2.0, 2.0))
    flow = unit_flow(0.0, (-2.0, 2.0))
    box = Box(1, 1.0, n, "farfield", u_left=1.0, u_right=-1.0)
    return TransportProblem(flux, ConstantVelocity((1.0,)), flow, box, 0.25, T,
                            U0=lambda xs, ys: np.where(xs[0] < 0.0, 1.0, -1.0))


def test_production_constant_field_zero():
    flux = ScalarFlux((burgers_flux(),), (-2.0, 2.0))
    flow = unit_flow(0.0, (-2.0, 2.0))
    box = Box(1, 1.0, 64, "periodic")
    prob = TransportProblem(flux, ConstantVelocity((1.0,)), flow, box, 0.25, 0.25,
                            U0=lambda xs, ys: np.full_like(xs[0], 0.3))
    path = sample_path(1, 0, 0.25, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, 0.25, record_steps=True)
    field = entropy_production(traj, [0.0, 0.5])
    assert np.max(np.abs(field.production)) <= 1e-15


def test_production_requires_step_records():
    prob = burgers_shock_problem()
    path = sample_path(1, 0, 0.25, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, 0.25)
    with pytest.raises(MissingStepData):
        entropy_production(traj, [0.0])


def test_production_nonnegative_and_shock_oracle():
    # oracle: the stationary Burgers shock dissipates the Kruzkov entropy |u-k|
    # at rate q_k(1) - q_k(-1) = 1 - k^2 per unit time
    prob = burgers_shock_problem()
    T = 0.25
    path = sample_path(1, 0, T, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, T, record_steps=True)
    ks = [-0.5, 0.0, 0.5]
    field = entropy_production(traj, ks)
    assert field.min_entry() >= -1e-12
    totals = field.per_level_total()
    for k, tot in zip(ks, totals):
        assert tot == pytest.approx(T * (1 - k * k), rel=0.1)


def test_production_smooth_advection_small():
    # smooth linear advection: away from the u = k crossings the Kruzkov
    # entropy is smooth and the production is pure roundoff; at the finitely
    # many crossing cells it is O(dx) per step (Taylor oracle)
    flux = ScalarFlux((linear_flux(),), (-2.0, 2.0))
    flow = unit_flow(0.0, (-2.0, 2.0))
    box = Box(1, 1.0, 256, "periodic")
    prob = TransportProblem(flux, ConstantVelocity((1.0,)), flow, box, 0.25, 0.25,
                            U0=lambda xs, ys: 0.5 * np.sin(np.pi * xs[0]))
    path = sample_path(1, 0, 0.25, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, 0.25, record_steps=True)
    field = entropy_production(traj, [0.0])
    assert field.min_entry() >= -1e-12
    dx, dt = field.dx, field.dt
    prod = field.production[0]
    for n, rec in enumerate(traj.steps):
        smooth = np.abs(rec.u_before - 0.0) > 0.1
        assert float(np.max(prod[n][smooth], initial=0.0)) <= 1e-15
    # crossing cells: production per step bounded by dx |u_x| dt-scale
    assert float(prod.max()) <= 3.0 * dx * (0.5 * np.pi) * dt
    # and only a handful of cells per step produce anything
    assert np.count_nonzero(prod[0] > 1e-12) <= 8


def test_production_nonnegative_with_noise_p1():
    # levels transported by the exact flow keep the noise substep productionless
    flux = ScalarFlux((burgers_flux(),), (-4.0, 4.0))
    flow = sinh_flow(0.5, (-4.0, 4.0))
    box = Box(1, 1.0, 128, "periodic")
    prob = TransportProblem(flux, ConstantVelocity((1.0,)), flow, box, 0.25, 0.25,
                            U0=lambda xs, ys: 0.4 * np.sin(np.pi * xs[0]))
    path = sample_path(7, 0, 0.25, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, 0.25, record_steps=True)
    field = entropy_production(traj, [-0.3, 0.0, 0.4])
    assert field.min_entry() >= -1e-12


def test_production_nonnegative_p2_well_balanced():
    flux = ScalarFlux((cubic_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.5, flux.evaluation_range)
    box = Box(1, 1.0, 128, "periodic")
    prob = StiffSourceProblem(flux, sin_potential(), flow, box, 1 / 8, 0.25,
                              v0=lambda xs: 0.3 * np.sin(np.pi * xs[0]))
    path = sample_path(3, 0, 0.25, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, 0.25, record_steps=True)
    field = entropy_production(traj, [-0.2, 0.0, 0.2])   # equilibrium levels alpha
    assert field.min_entry() >= -1e-12


# -- weighted moments ---------------------------------------------------------

def test_weighted_moment_zero_field():
    prob = burgers_shock_problem(n=50, T=0.125)
    path = sample_path(1, 0, 0.125, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, 0.125, record_steps=True)
    field = entropy_production(traj, [0.0])
    field.production[:] = 0.0
    assert weighted_p_moment(field, 2, np.ones(prob.box.n)) == 0.0


def test_weighted_moment_p0_total_mass_and_shock_oracle():
    prob = burgers_shock_problem()
    T = 0.25
    path = sample_path(1, 0, T, 0)
    traj = advance(make_stepper(prob, SchemeConfig()), path, T, record_steps=True)
    ks = [-0.5, 0.0, 0.5]
    field = entropy_production(traj, ks)
    w1 = np.ones(prob.box.n)
    total = weighted_p_moment(field, 0, w1)
    assert total == pytest.approx(float(field.production.sum()), rel=1e-12)
    oracle = sum(T * (1 - k * k) for k in ks)
    assert total == pytest.approx(oracle, rel=0.1)


# -- rigidity defect ----------------------------------------------------------

def two_spike_hist(sep_bins=1024, dxi=2.0**-10):
    edges = -0.5 + np.arange(int(round(2.0 / dxi)) + 1) * dxi
    w = np.zeros((1, len(edges) - 1))
    i0 = int(round(0.5 / dxi))
    w[0, i0] = 0.5
    w[0, i0 + sep_bins] = 0.5
    return YoungMeasureHistogram(np.array([0.0, 1.0]), edges, w, 0.0)


def test_rigidity_point_mass_zero():
    h = two_spike_hist()
    h.weights[:] = 0.0
    h.weights[0, 100] = 1.0
    assert rigidity_defect(h) == 0.0


def test_rigidity_two_point_exact_quarter():
    assert rigidity_defect(two_spike_hist()) == 0.25


def test_rigidity_quarter_spread_scaling():
    # defect = separation / 4 for equal two-point bins
    for sep in (128, 256, 512):
        h = two_spike_hist(sep_bins=sep)
        assert rigidity_defect(h) == pytest.approx(sep * 2.0**-10 / 4.0, rel=1e-12)


def test_rigidity_nonnegative_random_hist():
    rng = np.random.default_rng(0)
    w = rng.random((4, 50))
    w /= w.sum(axis=1, keepdims=True)
    edges = np.linspace(-1, 1, 51)
    h = YoungMeasureHistogram(np.linspace(0, 1, 5), edges, w, 0.0)
    assert rigidity_defect(h) >= 0.0
