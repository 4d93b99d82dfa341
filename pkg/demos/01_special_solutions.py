"""Exact stochastic special solutions and their discrete preservation.

Both problems admit solutions obtained by pushing a constant through the noise
flow primitive g. The solver preserves them to roundoff: the deterministic step
sees an exact fixed point and the noise step is the exact pathwise map.
"""

import numpy as np

from sclhom import (Box, ConstantVelocity, InverseFluxFlow, ScalarFlux,
                    SchemeConfig, StiffSourceProblem, TransportProblem, advance,
                    cubic_flux, linear_flux, make_stepper, sample_path,
                    sin_potential, sinh_flow, special_solution_p1,
                    special_solution_p2)

# --- problem 1: sinh flow (sigma = sqrt(1+u^2), h = u) -----------------------
flow = sinh_flow(kappa0=0.5)
alpha = 0.3
prob = TransportProblem(
    flux=ScalarFlux((linear_flux(),), (-5.0, 5.0)),
    velocity=ConstantVelocity((1.0,)),
    flow=flow,
    box=Box(1, 1.0, 256, "periodic"),
    epsilon=0.25, T=1.0,
    U0=lambda xs, ys: np.full_like(xs[0], float(flow.g(np.asarray(alpha)))))

path = sample_path(seed=42, stream_id=0, T=1.0, level=0)
traj = advance(make_stepper(prob, SchemeConfig()), path, 1.0)
W_T = float(path.at_level(traj.level).values[-1])
psi = special_solution_p1(alpha, 1.0, W_T, flow)
print("problem 1: psi_alpha(T) =", psi)
print("           max |u_num - psi| =", float(np.max(np.abs(traj.fields[-1].u - psi))))

# --- problem 2: cubic f1 with the derived noise and a stiff oscillatory force
flux = ScalarFlux((cubic_flux(),), (-3.0, 3.0), delta0=1.0)
flow2 = InverseFluxFlow(flux.f1, kappa0=0.5, u_range=flux.evaluation_range)
prob2 = StiffSourceProblem(flux, sin_potential(), flow2,
                           Box(1, 1.0, 512, "periodic"), epsilon=1 / 16, T=0.5,
                           v0=lambda xs: np.full_like(xs[0], 0.25))
path2 = sample_path(seed=7, stream_id=0, T=0.5, level=0)
traj2 = advance(make_stepper(prob2, SchemeConfig()), path2, 0.5)
x = prob2.box.centers()
W_T2 = float(path2.at_level(traj2.level).values[-1])
psi2 = special_solution_p2(0.25, x / prob2.epsilon, 0.5, W_T2, prob2)
print("problem 2: max |u_num - psi| =", float(np.max(np.abs(traj2.fields[-1].u - psi2))))
