import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sclhom.errors import MalformedSpec, RangeExceeded
from sclhom.models import (Box, ConstantVelocity, InverseFluxFlow,
                           OscillatoryPotential, ScalarFlux, ShearVelocity,
                           StiffSourceProblem, TabulatedFlow, TransportProblem,
                           burgers_flux, cubic_flux, linear_flux, noise_flow,
                           sin_potential, sinh_flow, special_solution_p1,
                           special_solution_p2, unit_flow, validate_problem,
                           zero_potential)


def make_p1(flow=None, flux=None, n=64):
    flow = flow or sinh_flow(0.5)
    flux = flux or ScalarFlux((burgers_flux(),), (-4.0, 4.0))
    box = Box(1, 1.0, n, "periodic")
    return TransportProblem(flux, ConstantVelocity((1.0,)), flow, box, 0.25, 0.5,
                            U0=lambda xs, ys: 0.3 * np.sin(np.pi * xs[0]))


def make_p2(kappa0=0.5, n=64, alpha=0.25):
    flux = ScalarFlux((cubic_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, kappa0, flux.evaluation_range)
    box = Box(1, 1.0, n, "periodic")
    return StiffSourceProblem(flux, sin_potential(), flow, box, 1 / 8, 0.5,
                              v0=lambda xs: np.full_like(xs[0], alpha))


# -- validation ---------------------------------------------------------------

def test_validate_linear_model_all_zero_residuals():
    flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 1.0, flux.evaluation_range)
    prob = StiffSourceProblem(flux, zero_potential(), flow, Box(1, 1.0, 32, "periodic"),
                              0.125, 0.5, v0=lambda xs: np.zeros_like(xs[0]))
    rep = validate_problem(prob)
    assert rep.passed
    assert all(c.residual <= 1e-12 for c in rep.checks)


def test_validate_sinh_h_consistency_oracle():
    # oracle: symbolic differentiation of sigma = sqrt(1+u^2) gives sigma'sigma = u
    import sympy
    u = sympy.symbols("u")
    sp = sympy.sqrt(1 + u**2)
    assert sympy.simplify(sp.diff(u) * sp - u) == 0
    rep = validate_problem(make_p1())
    assert rep.passed


def test_validate_wrong_h_fails_with_extreme_residual():
    bad = TabulatedFlow(lambda u: np.sqrt(1.0 + np.asarray(u, dtype=float) ** 2),
                        lambda u: 2.0 * np.asarray(u, dtype=float),
                        0.5, (-2.0, 2.0))
    rep = validate_problem(make_p1(flow=bad, flux=ScalarFlux((burgers_flux(),), (-2.0, 2.0))))
    assert not rep.passed
    failing = [c for c in rep.checks if not c.passed]
    # |sigma'sigma - 2u| = |u|, maximal at the range ends
    assert any(abs(c.residual - 2.0) < 1e-3 for c in failing)


def test_validate_deterministic():
    r1 = validate_problem(make_p2())
    r2 = validate_problem(make_p2())
    assert [(c.name, c.passed, c.residual) for c in r1.checks] \
        == [(c.name, c.passed, c.residual) for c in r2.checks]


def test_empty_range_rejected():
    with pytest.raises(MalformedSpec):
        InverseFluxFlow(cubic_flux(), 0.5, (1.0, 1.0))


def test_missing_delta0_rejected():
    flux = ScalarFlux((cubic_flux(),), (-3.0, 3.0), delta0=None)
    flow = InverseFluxFlow(flux.f1, 0.5, flux.evaluation_range)
    prob = StiffSourceProblem(flux, sin_potential(), flow, Box(1, 1.0, 32, "periodic"),
                              0.125, 0.5, v0=lambda xs: np.zeros_like(xs[0]))
    with pytest.raises(MalformedSpec):
        validate_problem(prob)


# -- special solutions --------------------------------------------------------

def test_special_p1_identity_flow():
    flow = unit_flow(1.0)
    assert special_solution_p1(0.3, 1.0, 0.2, flow) == pytest.approx(0.5, abs=1e-12)


def test_special_p1_sinh_euler_maruyama_oracle():
    # oracle: deterministic-increment Euler-Maruyama on du = sigma(u) dxi
    h = 1e-5
    u = 0.0
    for _ in range(100_000):
        u += h * np.sqrt(1.0 + u * u)
    flow = sinh_flow(1.0)
    got = special_solution_p1(0.0, 1.0, 1.0, flow)
    assert abs(got - u) <= 5e-5
    assert abs(got - np.sinh(1.0)) <= 1e-10


def test_special_p1_no_noise_constant_in_time():
    flow = sinh_flow(0.0)
    vals = [special_solution_p1(0.4, t, 0.0, flow) for t in (0.0, 0.5, 1.0)]
    assert vals[0] == vals[1] == vals[2]


def test_special_p2_identity_flux():
    flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.5, flux.evaluation_range)
    prob = StiffSourceProblem(flux, sin_potential(), flow, Box(1, 1.0, 32, "periodic"),
                              0.125, 0.5, v0=lambda xs: np.zeros_like(xs[0]))
    assert special_solution_p2(0.0, 0.25, 0.0, 0.0, prob) == pytest.approx(1.0, abs=1e-14)


def test_special_p2_cubic_bisection_oracle():
    # oracle: bisection on the monotone map u + u^3/3 = 11/6
    lo, hi = 0.0, 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid + mid**3 / 3.0 < 11.0 / 6.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    prob = make_p2()
    got = special_solution_p2(11.0 / 6.0, 0.0, 0.3, 0.0, prob)
    assert abs(got - root) <= 1e-10
    assert got == pytest.approx(1.2234, abs=5e-4)


def test_special_p2_no_noise_steady():
    prob = make_p2(kappa0=0.0)
    y = np.linspace(0, 1, 7)
    a = special_solution_p2(0.25, y, 0.1, 0.0, prob)
    b = special_solution_p2(0.25, y, 0.9, 0.0, prob)
    assert np.array_equal(a, b)


# -- noise flow ---------------------------------------------------------------

def test_noise_flow_identity_at_zero():
    flow = sinh_flow(0.5)
    u = np.linspace(-2, 2, 41)
    out = noise_flow(u, 0.0, flow)
    assert np.max(np.abs(out - u)) <= 1e-13


def test_noise_flow_sinh_value():
    flow = sinh_flow(0.5)
    assert float(noise_flow(np.asarray(0.0), 1.0, flow)) == pytest.approx(
        1.1752011936438014, abs=1e-10)


def test_noise_flow_p2_additive_shift():
    prob = make_p2()
    flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.5, flux.evaluation_range)
    assert float(noise_flow(np.asarray(2.0), -0.5, flow)) == pytest.approx(1.5, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(-1.0, 1.0))
def test_noise_flow_monotone(u, v, delta):
    flow = sinh_flow(0.5)
    lo, hi = min(u, v), max(u, v)
    a = float(noise_flow(np.asarray(lo), delta, flow))
    b = float(noise_flow(np.asarray(hi), delta, flow))
    assert a <= b + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_noise_flow_semigroup(u, d1, d2):
    flow = sinh_flow(0.5)
    a = noise_flow(noise_flow(np.asarray(u), d1, flow), d2, flow)
    b = noise_flow(np.asarray(u), d1 + d2, flow)
    assert abs(float(a) - float(b)) <= 1e-12


def test_noise_flow_special_solution_consistency():
    flow = sinh_flow(0.5)
    psi_t = special_solution_p1(0.2, 0.5, 0.7, flow)
    stepped = float(noise_flow(np.asarray(psi_t), 0.5 * 0.3, flow))
    direct = special_solution_p1(0.2, 0.6, 1.0, flow)
    assert abs(stepped - direct) <= 1e-13


def test_range_exceeded():
    flow = sinh_flow(0.5, (-2.0, 2.0))
    with pytest.raises(RangeExceeded):
        noise_flow(np.asarray(1.0), 100.0, flow)
    flux = ScalarFlux((cubic_flux(),), (-2.0, 2.0), delta0=1.0)
    iff = InverseFluxFlow(flux.f1, 0.5, flux.evaluation_range)
    with pytest.raises(RangeExceeded):
        iff.g(np.asarray(100.0))


# -- oscillatory data ---------------------------------------------------------

def test_potential_periodicity_and_bound():
    V = OscillatoryPotential(((1.0, 1.0, 0.3), (0.5, 3.0, 0.0)), "periodic", offset=0.2)
    z = np.linspace(0, 5, 101)
    assert np.max(np.abs(V(z + V.period) - V(z))) <= 1e-12
    assert np.max(np.abs(V(z))) <= V.bound + 1e-12
    assert V.period == pytest.approx(1.0)


def test_potential_derivative_matches_fd():
    V = sin_potential(0.7)
    z = np.linspace(0, 1, 11)
    h = 1e-6
    fd = (V(z + h) - V(z - h)) / (2 * h)
    assert np.max(np.abs(fd - V.deriv(z))) <= 1e-6


def test_shear_velocity_divergence_free_by_construction():
    vel = ShearVelocity(0.5, sin_potential())
    y = np.linspace(0, 1, 9)
    assert np.all(vel.component(0, y) == 0.5)
    # component 0 constant in y1, component 1 independent of y2: div a = 0
    assert vel.max_abs(1) == pytest.approx(1.0)


def test_initial_data_structured_form_p2():
    prob = make_p2(alpha=0.3)
    x = prob.box.centers()
    expect = prob.flow.g(prob.V(x / prob.epsilon) + 0.3)
    assert np.max(np.abs(prob.initial_field() - expect)) == 0.0
    a1, a2 = prob.alpha_bounds()
    assert a1 == a2 == pytest.approx(0.3)
