import os
import subprocess
import sys

import numpy as np
import pytest

from sclhom.brownian import sample_path
from sclhom.effective import MeanValueEngine, build_effective_flux
from sclhom.errors import UnsupportedVelocityFamily
from sclhom.fv import SchemeConfig, advance, make_stepper, solve_family_p1
from sclhom.homog import SweepPlan
from sclhom.models import (Box, ConstantVelocity, InverseFluxFlow, ScalarFlux,
                           StiffSourceProblem, TransportProblem, burgers_flux,
                           cubic_flux, linear_flux, sin_potential, unit_flow)


def test_p2_two_dimensional_steady_state_exact():
    flux = ScalarFlux((cubic_flux(), cubic_flux()), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    box = Box(2, 1.0, 64, "periodic")
    prob = StiffSourceProblem(flux, sin_potential(), flow, box, 0.25, 0.25,
                              v0=lambda xs: np.full_like(xs[0], 0.2))
    st = make_stepper(prob, SchemeConfig())
    u0 = st.u.copy()
    for _ in range(10):
        st.det_step(1e-3)
    assert np.max(np.abs(st.u - u0)) <= 1e-12


def test_unsupported_velocity_family_rejected():
    class Weird:
        dimension = 1

    flux = ScalarFlux((burgers_flux(),), (-3.0, 3.0))
    flow = unit_flow(0.0, (-3.0, 3.0))
    box = Box(1, 1.0, 32, "periodic")
    prob = TransportProblem(flux, Weird(), flow, box, 0.25, 0.25,
                            U0=lambda xs, ys: np.zeros_like(xs[0]))
    with pytest.raises(UnsupportedVelocityFamily):
        make_stepper(prob, SchemeConfig())
    path = sample_path(1, 0, 0.25, 0)
    with pytest.raises(UnsupportedVelocityFamily):
        solve_family_p1(prob, path, np.array([0.0]), np.array([1.0]),
                        SchemeConfig(), 0.25)


def test_fbar_k_monotone_for_admissible_component():
    # f2 with f2' >= 0 on the range: fbar2 inherits monotonicity
    flux = ScalarFlux((linear_flux(), cubic_flux()), (-3.0, 3.0), delta0=1.0)
    flow = InverseFluxFlow(flux.f1, 0.0, flux.evaluation_range)
    V = sin_potential()
    table = build_effective_flux(flux, V, MeanValueEngine(V),
                                 np.linspace(-1.8, 1.8, 65), flow=flow)
    assert np.all(np.diff(table.fbark_nodes[0]) >= 0)


def test_sweep_grid_rule_resolves_eps():
    plan = SweepPlan(None, None, (1 / 8, 1 / 64), (1,), (0.25,), (), L=1.0)
    for eps in plan.eps_list:
        n = plan.grid_n(eps)
        assert 2.0 * plan.L / n <= eps / 16 + 1e-15


def test_cli_env_output_root(tmp_path):
    env = dict(os.environ, SCLHOM_OUT_ROOT=str(tmp_path))
    proc = subprocess.run(
        [sys.executable, "-m", "sclhom.cli", "run", "kinetic-identities"],
        capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert (tmp_path / "out" / "kinetic-identities" / "manifest.json").exists()


def test_cli_exit_one_on_assertion_failure(tmp_path):
    # a shear sweep too coarse to beat its error floor fails its assertion
    cfg = tmp_path / "fail.cfg"
    cfg.write_text("""
[problem]
variant = p1
T = 0.125
kappa0 = 0.5

[flux]
f1 = linear
u_min = -3.0
u_max = 3.0

[noise]
sigma = unit

[grid]
n = 32
L = 0.25

[oscillation]
V = sin

[sweep]
eps_list = 0.25,0.125,0.0625
seeds = 1
""")
    proc = subprocess.run(
        [sys.executable, "-m", "sclhom.cli", "run", "eps-sweep-p1-shear",
         "--config", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True, text=True)
    assert proc.returncode == 1
    assert "FAIL" in proc.stdout
