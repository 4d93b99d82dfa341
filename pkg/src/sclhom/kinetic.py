"""Kinetic functions, discrete entropy production, and the rigidity defect.

The level-set function chi_plus(xi, u) = 1_{xi < u} turns L1 geometry into
integrals; its identities are checked on a uniform xi grid. Entropy production is
measured for the monotone deterministic step only, against Kruzkov levels that
ride the exact noise flow (problem 1) or the equilibrium family (problem 2), so
the exact noise substep contributes nothing and nonnegativity is the provable
scheme property.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import GridTooNarrow, MissingStepData
from .fv import Trajectory, _face_diff, make_stepper
from .models import StiffSourceProblem, TransportProblem

Array = np.ndarray


def chi_plus(xi: Array, u: float) -> Array:
    return (np.asarray(xi, dtype=float) < u).astype(float)


@dataclass(frozen=True)
class KineticSample:
    """chi and chi_plus of a value on a uniform xi grid."""

    u: float
    xi: Array

    @property
    def chi_plus(self) -> Array:
        return chi_plus(self.xi, self.u)

    @property
    def chi(self) -> Array:
        return self.chi_plus - (self.xi < 0.0).astype(float)


def chi_identity_check(u: float, v: float, xi_grid: Array) -> dict:
    """Residuals of the four chi_plus identities on the given grid.

    (1) (u-v)_+ = int chi+(.,u)(1-chi+(.,v))
    (2) 1_{u>v}(S(u)-S(v)) = int S' chi+(.,u)(1-chi+(.,v)),  S = xi^2/2
    (3) |u-v| = int |chi+(.,u)-chi+(.,v)|
    (4) |u-v|/4 = int (g - g^2),  g = (chi+(.,u)+chi+(.,v))/2
    Each Riemann sum carries error at most 2*dxi (times max|xi| for (2))."""
    xi = np.asarray(xi_grid, dtype=float)
    if xi[0] > min(u, v) - 1.0 or xi[-1] < max(u, v) + 1.0:
        raise GridTooNarrow("xi grid must cover [min(u,v)-1, max(u,v)+1]")
    dxi = float(xi[1] - xi[0])
    cu = chi_plus(xi, u)
    cv = chi_plus(xi, v)
    r1 = abs(max(u - v, 0.0) - float(np.sum(cu * (1.0 - cv))) * dxi)
    S = 0.5 * (u * u - v * v) if u > v else 0.0
    r2 = abs(S - float(np.sum(xi * cu * (1.0 - cv))) * dxi)
    r3 = abs(abs(u - v) - float(np.sum(np.abs(cu - cv))) * dxi)
    g = 0.5 * (cu + cv)
    r4 = abs(0.25 * abs(u - v) - float(np.sum(g - g * g)) * dxi)
    return {"positive_part": r1, "weighted": r2, "absolute": r3, "quarter": r4,
            "dxi": dxi}


# ---------------------------------------------------------------------------
# entropy production along trajectories
# ---------------------------------------------------------------------------

@dataclass
class EntropyProductionField:
    """Cell-integrated production per (Kruzkov level, step); entries carry the
    dx^d measure so sums over cells approximate spatial integrals."""

    k_values: Array
    production: Array        # shape (n_k, n_steps, *grid)
    dx: float
    dt: float
    times: Array

    def per_level_total(self) -> Array:
        return self.production.reshape(len(self.k_values), -1).sum(axis=1)

    def min_entry(self) -> float:
        return float(self.production.min())


def _level_fields(problem, k: float, W_n: float, box):
    """The exactly preserved comparison state at Brownian value W_n."""
    if isinstance(problem, StiffSourceProblem):
        x1 = box.centers()
        v = np.asarray(problem.V(x1 / problem.epsilon), dtype=float)
        if box.d == 2:
            v = v[:, None]
        psi = problem.flow.g(v + problem.kappa0 * W_n + k)
        return np.broadcast_to(psi, (box.n,) * box.d).copy() if box.d == 2 else psi
    val = float(problem.flow.noise_flow(np.asarray(k, dtype=float),
                                        problem.kappa0 * W_n))
    return np.full((box.n,) * box.d, val)


def entropy_production(trajectory: Trajectory, k_values: Sequence[float]) -> EntropyProductionField:
    """Discrete Kruzkov production of the deterministic step along the path.

    For each level, production_i = -( |D(u)_i - D(psi)_i| - |u_i - psi_i|
    + lam * (Q_{i+1/2} - Q_{i-1/2}) ) * dx^d with the numerical Kato flux
    Q = H(u v psi) - H(u ^ psi); monotonicity of D makes every entry >= -eps.
    For problem 1 the levels are noise-transported constants, for problem 2 the
    equilibrium states g(V + k0 W + alpha) with alpha = k."""
    if trajectory.steps is None:
        raise MissingStepData("advance(..., record_steps=True) is required")
    if trajectory.problem is None or trajectory.scheme is None:
        raise MissingStepData("trajectory lacks problem/scheme metadata")
    problem = trajectory.problem
    box = trajectory.box
    st = make_stepper(problem, trajectory.scheme)
    dt = trajectory.dt
    lam = dt / box.dx
    meas = box.dx ** box.d
    k_values = np.asarray(k_values, dtype=float)
    n_steps = len(trajectory.steps)
    prod = np.empty((len(k_values), n_steps) + trajectory.steps[0].u_before.shape)
    W = 0.0
    times = []
    for n, rec in enumerate(trajectory.steps):
        times.append(rec.t)
        u = rec.u_before
        Du = st.det_apply(u, dt)
        for ik, k in enumerate(k_values):
            psi = _level_fields(problem, float(k), W, box)
            Dpsi = st.det_apply(psi, dt)
            Hi = st.det_faces(np.maximum(u, psi))
            Lo = st.det_faces(np.minimum(u, psi))
            flux_term = np.zeros_like(u)
            for ax in range(box.d):
                flux_term += lam * _face_diff(Hi[ax] - Lo[ax], ax)
            prod[ik, n] = -(np.abs(Du - Dpsi) - np.abs(u - psi) + flux_term) * meas
        W += rec.dW
    return EntropyProductionField(k_values, prod, box.dx, dt, np.asarray(times))


def weighted_p_moment(field: EntropyProductionField, p: float, w_N: Array) -> float:
    """sum over (k, steps, cells) of |k|^p w_N(x) * production."""
    kp = np.abs(field.k_values) ** p if p > 0 else np.ones_like(field.k_values)
    total = 0.0
    for ik in range(len(field.k_values)):
        total += kp[ik] * float(np.sum(field.production[ik] * w_N))
    return total


# ---------------------------------------------------------------------------
# rigidity defect
# ---------------------------------------------------------------------------

def rigidity_defect(histogram) -> float:
    """int (rho - rho^2) dxi summed over the fast bins, with rho the
    complementary CDF of each bin's histogram; zero iff every bin is a point
    mass. For a two-point bin this equals |separation|/4."""
    w = histogram.weights
    dxi = histogram.dxi
    # mass strictly above each xi bin: reversed cumulative sum shifted by one
    tail = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
    rho = tail - w          # exclude the bin's own mass
    return float(np.sum(rho - rho * rho) * dxi)
