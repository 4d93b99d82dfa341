"""A small epsilon sweep: weak-star pairing errors and the strong corrector.

Every epsilon level rides the same Brownian path; the homogenized equation is
solved once per seed on a coarse grid and prolonged for comparison. Pairing
errors halve with epsilon; the corrector error tracks the scheme resolution.
"""

import numpy as np

from sclhom import (Box, InverseFluxFlow, MeanValueEngine, ScalarFlux,
                    SchemeConfig, StiffSourceProblem, SweepPlan,
                    build_effective_flux, default_phi_set, eps_sweep,
                    linear_flux, sin_potential)

kappa0, L, T = 0.5, 1.0, 0.5
flux = ScalarFlux((linear_flux(),), (-3.0, 3.0), delta0=1.0)
V = sin_potential()


def v0(xs):
    return 0.5 * np.sin(np.pi * xs[0] / L)


def factory(eps, n):
    flow = InverseFluxFlow(flux.f1, kappa0, flux.evaluation_range)
    return StiffSourceProblem(flux, V, flow, Box(1, L, n, "periodic"), eps, T, v0)


table = build_effective_flux(flux, V, MeanValueEngine(V),
                             np.linspace(-1.9, 1.9, 513),
                             flow=InverseFluxFlow(flux.f1, kappa0,
                                                  flux.evaluation_range))
plan = SweepPlan(factory, table, (1 / 8, 1 / 16, 1 / 32), (1,), (T,),
                 default_phi_set(L), SchemeConfig(), L=L)
conv = eps_sweep(plan)

print(f"{'eps':>8} {'phi':>8} {'weak-star':>12} {'corrector':>12}")
for r in sorted(conv.rows, key=lambda r: (-r.eps, r.phi)):
    print(f"{r.eps:8.4f} {r.phi:>8} {r.weak_err:12.3e} {r.corrector_err:12.3e}")
for phi in default_phi_set(L):
    print(f"ratios per halving ({phi.name}):",
          [round(v, 3) for v in conv.weak_ratios(1, T, phi.name)])
