"""sclhom: a desk-scale laboratory for stochastic scalar conservation laws with
multiplicative noise, their homogenized limits, and the pathwise well-posedness
structure that connects them."""

from .brownian import BrownianPath, increment, refine, sample_path
from .effective import (EffectiveFluxTable, MeanValueEngine, build_effective_flux,
                        check_miraculous, mean_value, solve_fbar1)
from .fv import (GridField, SchemeConfig, Trajectory, advance, det_step_p1,
                 det_step_p2, make_stepper, noise_step, numerical_flux,
                 period_quadrature, solve_effective, solve_family_p1,
                 viscous_step)
from .homog import (ConvergenceTable, MonteCarloPlan, PhiFunction, SweepPlan,
                    YoungMeasureHistogram, corrector_error, default_phi_set,
                    eps_sweep, eps_sweep_p1, monte_carlo, per_bin_variance,
                    prolong, weak_star_error, weight_on_grid,
                    young_measure_estimate)
from .kinetic import (EntropyProductionField, KineticSample, chi_identity_check,
                      chi_plus, entropy_production, rigidity_defect,
                      weighted_p_moment)
from .models import (Box, ConstantVelocity, FluxComponent, InverseFluxFlow,
                     OscillatoryPotential, ScalarFlux, ShearVelocity,
                     StiffSourceProblem, TabulatedFlow, TransportProblem,
                     ValidationReport, burgers_flux, cubic_flux, linear_flux,
                     noise_flow, quasi_potential, sin_potential, sinh_flow,
                     special_solution_p1, special_solution_p2, unit_flow,
                     validate_problem, zero_potential)
from .verify import (WeightFunction, bump_phi, comparison_test,
                     contraction_constant, kruzkov_residual,
                     l1_contraction_test, sandwich_test)
from .config import parse_config, config_from_text
from .experiments import default_config, list_experiments, run_experiment

__version__ = "0.1.0"
