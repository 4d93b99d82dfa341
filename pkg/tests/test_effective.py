import numpy as np
import pytest

from sclhom.effective import (MeanValueEngine, build_effective_flux,
                              check_miraculous, mean_value, solve_fbar1)
from sclhom.errors import NoConvergence, OutOfRange
from sclhom.models import (InverseFluxFlow, OscillatoryPotential, ScalarFlux,
                           burgers_flux, cubic_flux, linear_flux,
                           quasi_potential, sin_potential, zero_potential)


def cubic_setup(kappa0=0.5):
    flux = ScalarFlux((cubic_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, kappa0, flux.evaluation_range)
    return flux, flow


# -- mean values --------------------------------------------------------------

def test_mean_sin_squared():
    eng = MeanValueEngine(sin_potential())
    assert mean_value(lambda w: w * w, eng) == pytest.approx(0.5, abs=1e-12)


def test_mean_constant_exact():
    eng = MeanValueEngine(sin_potential())
    assert mean_value(lambda w: np.full_like(w, 3.25), eng) == 3.25


def test_mean_quasiperiodic_long_window_oracle():
    # oracle: the cross term of (sin z + sin sqrt2 z)^2 averages to zero over
    # long windows, leaving 1/2 + 1/2
    eng = MeanValueEngine(quasi_potential())
    val = mean_value(lambda w: w * w, eng)
    assert abs(val - 1.0) <= 1e-4


def test_mean_quasiperiodic_no_convergence():
    eng = MeanValueEngine(quasi_potential(), tolerance=1e-12)
    with pytest.raises(NoConvergence):
        mean_value(lambda w: w * w, eng)


# -- fbar1 fixed point --------------------------------------------------------

def test_fbar1_no_oscillation_recovers_f1():
    flux, flow = cubic_setup()
    eng = MeanValueEngine(zero_potential())
    for p in (-1.0, 0.0, 0.7):
        # V == 0: the averaged map is g itself, so its inverse is f1
        assert solve_fbar1(p, flux, zero_potential(), eng, flow) == pytest.approx(
            float(flux.f1.f(np.asarray(p))), abs=1e-12)


def test_fbar1_identity_flux_mean_zero_V():
    flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    eng = MeanValueEngine(sin_potential())
    for p in (-1.0, 0.2, 1.0):
        assert solve_fbar1(p, flux, sin_potential(), eng, flow) == pytest.approx(p, abs=1e-12)


def test_fbar1_odd_symmetry_at_zero():
    flux, flow = cubic_setup()
    eng = MeanValueEngine(sin_potential())
    assert solve_fbar1(0.0, flux, sin_potential(), eng, flow) == pytest.approx(0.0, abs=1e-12)


def test_fbar1_out_of_range():
    flux, flow = cubic_setup()
    eng = MeanValueEngine(sin_potential())
    with pytest.raises(OutOfRange):
        solve_fbar1(50.0, flux, sin_potential(), eng, flow)


# -- table construction -------------------------------------------------------

def test_fbar2_closed_form_against_quadrature_oracle():
    flux = ScalarFlux((linear_flux(), burgers_flux()), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    V = sin_potential()
    eng = MeanValueEngine(V)
    table = build_effective_flux(flux, V, eng, np.linspace(-1.5, 1.5, 101), flow=flow)
    z = np.linspace(0.0, 1.0, 20001)
    for p in (-1.0, 0.0, 0.5, 1.0):
        oracle = np.trapezoid(0.5 * (p + np.sin(2 * np.pi * z)) ** 2, z)
        assert table.fbar_k(2, p) == pytest.approx((p * p + 0.5) / 2, abs=1e-8)
        assert table.fbar_k(2, p) == pytest.approx(float(oracle), abs=1e-6)


def test_no_oscillation_tables_recover_plain_flux():
    flux = ScalarFlux((cubic_flux(), burgers_flux()), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    eng = MeanValueEngine(zero_potential())
    grid = np.linspace(-2.0, 2.0, 101)
    table = build_effective_flux(flux, zero_potential(), eng, grid, flow=flow)
    assert np.max(np.abs(table.fbar1_nodes - flux.f1.f(grid))) <= 1e-11
    assert np.max(np.abs(np.asarray([table.fbar_k(2, p) for p in (-1.0, 0.5)])
                         - [0.5, 0.125])) <= 1e-11


def test_fbar1_prime_identity_flux_is_one():
    flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    eng = MeanValueEngine(sin_potential())
    table = build_effective_flux(flux, sin_potential(), eng,
                                 np.linspace(-1.5, 1.5, 65), flow=flow)
    assert np.max(np.abs(table.fbar1p_nodes - 1.0)) <= 1e-12


def test_table_invariants_monotone_and_bounded():
    flux, flow = cubic_setup()
    V = sin_potential()
    eng = MeanValueEngine(V)
    grid = np.linspace(-2.2, 2.2, 257)
    table = build_effective_flux(flux, V, eng, grid, flow=flow)
    assert np.all(np.diff(table.fbar1_nodes) > 0)
    assert np.max(table.residuals) <= 1e-10
    assert np.max(np.abs(table.gbar(table.fbar1_nodes) - grid)) <= 1e-10
    # inherited bounds: 1/sup g' <= fbar1' <= 1/inf g' over the shifted range
    q = table.fbar1_nodes
    shifts = np.linspace(-1.0, 1.0, 41)
    gp = 1.0 / np.asarray(flux.f1.df(flow.g(q[:, None] + shifts)), dtype=float)
    assert np.all(table.fbar1p_nodes <= 1.0 / gp.min(axis=1) + 1e-10)
    assert np.all(table.fbar1p_nodes >= 1.0 / gp.max(axis=1) - 1e-10)


def test_initial_mean_consistency():
    # mean_z u0(x, z) = gbar(v0(x)) to 1e-8 for sampled x
    flux, flow = cubic_setup()
    V = sin_potential()
    eng = MeanValueEngine(V)
    table = build_effective_flux(flux, V, eng, np.linspace(-2.0, 2.0, 257), flow=flow)
    z = np.linspace(0.0, 1.0, 40001)
    for v0x in (-0.4, 0.1, 0.55):
        direct = np.trapezoid(flow.g(V(z) + v0x), z)
        assert table.gbar(v0x) == pytest.approx(float(direct), abs=1e-8)


def test_quasiperiodic_table_fixed_point():
    flux = ScalarFlux((linear_flux(),), (-4.0, 4.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    Vq = quasi_potential()
    eng = MeanValueEngine(Vq, windows=(50.0, 200.0, 800.0))
    grid = np.linspace(-1.0, 1.0, 17)
    table = build_effective_flux(flux, Vq, eng, grid, flow=flow)
    # identity flux: fbar1(p) = p - mean(V) with the window-estimated mean
    assert np.max(np.abs(table.residuals)) <= 1e-10
    assert np.max(np.abs(table.fbar1_nodes - grid)) <= 0.05


# -- miraculous identities ----------------------------------------------------

def test_miraculous_identity_linear_zero():
    flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.5, flux.evaluation_range)
    V = sin_potential()
    eng = MeanValueEngine(V)
    table = build_effective_flux(flux, V, eng, np.linspace(-1.5, 1.5, 257), flow=flow)
    rep = check_miraculous(table, flow, V, eng, np.linspace(-1.0, 1.0, 21))
    assert rep.max_sigma <= 1e-12
    assert rep.max_h <= 1e-12


def test_miraculous_identity_cubic():
    flux, flow = cubic_setup()
    V = sin_potential()
    eng = MeanValueEngine(V)
    table = build_effective_flux(flux, V, eng, np.linspace(-2.6, 2.6, 2049), flow=flow)
    rep = check_miraculous(table, flow, V, eng, np.linspace(-2.0, 2.0, 41))
    assert rep.max_sigma <= 1e-7
    assert rep.max_h <= 1e-7


def test_miraculous_no_oscillation_definitional():
    flux, flow = cubic_setup()
    eng = MeanValueEngine(zero_potential())
    table = build_effective_flux(flux, zero_potential(), eng,
                                 np.linspace(-2.5, 2.5, 513), flow=flow)
    rep = check_miraculous(table, flow, zero_potential(), eng,
                           np.linspace(-2.0, 2.0, 21))
    assert rep.max_sigma <= 1e-12
    assert rep.max_h <= 1e-12


def test_table_csv_round(tmp_path):
    flux, flow = cubic_setup()
    V = sin_potential()
    eng = MeanValueEngine(V)
    table = build_effective_flux(flux, V, eng, np.linspace(-2.0, 2.0, 33), flow=flow)
    f = tmp_path / "table.csv"
    with open(f, "w") as fh:
        table.to_csv(fh)
    lines = f.read_text().splitlines()
    assert lines[0].startswith("p,fbar1,fbar1p,fbar1pp,gbar")
    assert len(lines) == 34
