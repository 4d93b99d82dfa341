"""Well-posedness diagnostics: comparison, weighted L1 contraction, the
stochastic Kruzkov functional, and sandwich bounds by the special solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import t as student_t

from .brownian import sample_path
from .errors import InsufficientPaths, UnsupportedTestFunction
from .fv import SchemeConfig, Trajectory, advance, make_stepper, _dyadic_level_for
from .homog import weight_on_grid
from .models import (StiffSourceProblem, TransportProblem, _grid_tuple,
                     special_solution_p1)

Array = np.ndarray


@dataclass(frozen=True)
class WeightFunction:
    """w_N(x) = (1+|x|^2)^(-N), integrable for N > d/2."""

    N: float
    d: int = 1

    def __post_init__(self):
        if self.N <= self.d / 2:
            raise ValueError("need N > d/2 for integrability")

    def __call__(self, xs):
        r2 = sum(np.asarray(x, dtype=float) ** 2 for x in (xs if isinstance(xs, tuple) else (xs,)))
        return (1.0 + r2) ** (-self.N)

    def grad_bound_ok(self, xs, tol: float = 1e-12) -> bool:
        """|grad w| <= (1+sqrt2) N w / (1+|x|) at the sample points.

        (1+sqrt2) is the sharp constant: |x|(1+|x|)/(1+|x|^2) peaks at
        x = 1+sqrt2 with value (1+sqrt2)/2."""
        xs = xs if isinstance(xs, tuple) else (xs,)
        r2 = sum(np.asarray(x, dtype=float) ** 2 for x in xs)
        w = (1.0 + r2) ** (-self.N)
        gradnorm = 2.0 * self.N * np.sqrt(r2) / (1.0 + r2) * w
        bound = (1.0 + np.sqrt(2.0)) * self.N * w / (1.0 + np.sqrt(r2))
        return bool(np.all(gradnorm <= bound + tol))


# ---------------------------------------------------------------------------
# pathwise comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    violations: int
    max_violation: float
    n_steps: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def comparison_test(problem, u0_low: Array, u0_high: Array, path,
                    scheme: Optional[SchemeConfig] = None,
                    t_target: Optional[float] = None) -> ComparisonReport:
    """Run both initial states on the same path in lockstep and count cells/steps
    where the ordering fails beyond 1e-12 (it never should: monotone scheme
    composed with a monotone noise map)."""
    scheme = scheme or SchemeConfig()
    t_target = problem.T if t_target is None else t_target
    lo = make_stepper(problem, scheme, u0_low)
    hi = make_stepper(problem, scheme, u0_high)
    dt_bound = scheme.cfl * problem.box.dx / lo.wave_speed_bound()
    if scheme.eps_visc > 0:
        dt_bound = min(dt_bound, problem.box.dx**2 / (2 * problem.box.d * scheme.eps_visc))
    level = _dyadic_level_for(path.T, dt_bound, [t_target])
    W = path.at_level(level)
    nsteps = int(round(t_target / W.dt))
    violations = 0
    worst = 0.0
    for j in range(nsteps):
        dW = W.increment(j)
        lo.step(W.dt, dW)
        hi.step(W.dt, dW)
        gap = lo.u - hi.u
        bad = gap > 1e-12
        if np.any(bad):
            violations += int(np.count_nonzero(bad))
            worst = max(worst, float(gap.max()))
    return ComparisonReport(violations, worst, nsteps)


# ---------------------------------------------------------------------------
# weighted L1 contraction
# ---------------------------------------------------------------------------

@dataclass
class ContractionRow:
    t: float
    estimate: float
    half_width: float
    bound: float
    passed: bool


@dataclass
class ContractionReport:
    rows: list
    C: float
    initial: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _lip(fn: Callable, lo: float, hi: float) -> float:
    u = np.linspace(lo, hi, 2001)
    vals = np.asarray(fn(u), dtype=float)
    return float(np.max(np.abs(np.diff(vals))) / (u[1] - u[0]))


def contraction_constant(problem) -> float:
    """C = kappa0^2/2 * Lip(h) + Lip_u(source); the stiff source is
    u-independent so only the noise drift contributes."""
    lo, hi = problem.flux.evaluation_range
    lip_h = _lip(problem.flow.h, lo, hi)
    return 0.5 * problem.kappa0**2 * lip_h


def l1_contraction_test(problem, u0_a: Array, u0_b: Array, n_paths: int,
                        N: Optional[float], observation_times: Sequence[float],
                        scheme: Optional[SchemeConfig] = None,
                        seed: int = 1, threads: int = 1) -> ContractionReport:
    """Monte Carlo check of
        E int |u1 - u2| w_N dx <= e^{Ct} * initial * 1.1 + 2 * half_width
    with the model-derived constant C (0.1 slack for discretization, the
    half-width for sampling error)."""
    if n_paths < 16:
        raise InsufficientPaths("contraction statistics need at least 16 paths")
    scheme = scheme or SchemeConfig()
    box = problem.box
    w = weight_on_grid(box, N if box.boundary == "farfield" else None)
    meas = box.dx ** box.d
    initial = float(np.sum(np.abs(u0_a - u0_b) * w) * meas)
    C = contraction_constant(problem)
    T = max(observation_times)

    def one(stream):
        path = sample_path(seed, stream, T, 0)
        sa = make_stepper(problem, scheme, u0_a)
        sb = make_stepper(problem, scheme, u0_b)
        ta = advance(sa, path, T, observation_times)
        tb = advance(sb, path, T, observation_times)
        return [float(np.sum(np.abs(ta.field_at(tt).u - tb.field_at(tt).u) * w) * meas)
                for tt in observation_times]

    from .homog import _pmap
    results = _pmap(one, range(n_paths), threads)
    dists = {tt: [r[i] for r in results] for i, tt in enumerate(observation_times)}
    tcrit = float(student_t.ppf(0.975, n_paths - 1))
    rows = []
    for tt in observation_times:
        arr = np.asarray(dists[tt])
        est = float(arr.mean())
        hw = tcrit * float(arr.std(ddof=1)) / np.sqrt(n_paths)
        bound = np.exp(C * tt) * initial * 1.1 + 2.0 * hw
        rows.append(ContractionRow(tt, est, hw, bound, est <= bound + 1e-14))
    return ContractionReport(rows, C, initial)


# ---------------------------------------------------------------------------
# stochastic Kruzkov functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimePhi:
    """Separable test function phi(t,x) = s(t) b(x) with closed-form derivatives,
    compactly supported in [0, T) x box."""

    s: Callable
    ds: Callable
    b: Callable            # b(x_tuple) -> array
    db: tuple              # per-axis derivative callables
    name: str = "phi"

    def value(self, t, xs):
        return self.s(t) * self.b(xs)

    def dt(self, t, xs):
        return self.ds(t) * self.b(xs)

    def dx(self, t, xs, axis):
        return self.s(t) * self.db[axis](xs)


def bump_phi(T: float, L: float, r_t: float = 0.9, r_x: float = 0.8) -> SpaceTimePhi:
    """C^infty bump: s supported in [0, r_t T), b in |x| < r_x L."""

    def s(t):
        tau = t / (r_t * T)
        return float(np.exp(1.0 - 1.0 / (1.0 - tau**2)) if 0 <= tau < 1 else 0.0)

    def ds(t):
        tau = t / (r_t * T)
        if not 0 <= tau < 1:
            return 0.0
        return float(s(t) * (-2.0 * tau / (1.0 - tau**2) ** 2) / (r_t * T))

    def b(xs):
        x = xs[0] / (r_x * L)
        out = np.zeros_like(x)
        m = np.abs(x) < 1.0
        out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
        return out

    def db0(xs):
        x = xs[0] / (r_x * L)
        out = np.zeros_like(x)
        m = np.abs(x) < 1.0
        out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2)) * (-2.0 * x[m] / (1.0 - x[m] ** 2) ** 2)
        return out / (r_x * L)

    return SpaceTimePhi(s, ds, b, (db0,), name="bump")


def kruzkov_residual(problem, path, alpha: float, phi: SpaceTimePhi,
                     scheme: Optional[SchemeConfig] = None,
                     u0: Optional[Array] = None) -> float:
    """Discrete left-hand side of the stochastic Kruzkov inequality with
    u1 = numerical solution, u2 = the exact special solution psi_alpha.

    Stochastic integral uses the left endpoint (Ito) per path increment. The
    V'(x/eps) source cancels in the difference, and the h-drift enters with the
    coefficient kappa0^2/2."""
    scheme = scheme or SchemeConfig()
    box = problem.box
    xs = _grid_tuple(box)
    # compact support check: vanish at the final time and at the box edge
    if abs(phi.s(problem.T * (1 - 1e-9))) > 1e-12 or abs(phi.s(problem.T)) > 1e-12:
        raise UnsupportedTestFunction("phi must vanish before t = T")
    edge = (np.asarray([-box.L, box.L - box.dx * 1e-6]),) + tuple(
        np.zeros(2) for _ in range(box.d - 1))
    if np.max(np.abs(phi.b(edge))) > 1e-10:
        raise UnsupportedTestFunction("phi must vanish at the box boundary")

    st = make_stepper(problem, scheme, u0)
    traj = advance(st, path, problem.T, (), record_steps=True)
    dt = traj.dt
    meas = box.dx ** box.d
    flow = problem.flow
    k0 = problem.kappa0
    is_p2 = isinstance(problem, StiffSourceProblem)
    if is_p2:
        vfast = np.asarray(problem.V(xs[0] / problem.epsilon), dtype=float)
        if box.d == 2:
            vfast = vfast[:, None]

    def psi_at(W_n):
        if is_p2:
            return flow.g(vfast + k0 * W_n + alpha)
        return np.full((box.n,) * box.d, special_solution_p1(alpha, 0.0, W_n, flow))

    total = 0.0
    W = 0.0
    for rec in traj.steps:
        u = rec.u_before
        psi = psi_at(W)
        diff = u - psi
        sgn = np.sign(diff)
        phi_v = phi.value(rec.t, xs)
        # time derivative term
        total += float(np.sum(np.abs(diff) * phi.dt(rec.t, xs))) * meas * dt
        # flux term: sgn (A(u)-A(psi)) . grad phi
        for ax in range(box.d):
            comp = problem.flux.components[ax]
            fdiff = np.asarray(comp.f(u), dtype=float) - np.asarray(comp.f(psi), dtype=float)
            if isinstance(problem, TransportProblem):
                vel = problem.velocity
                if hasattr(vel, "b") and ax == 1:
                    coeff = np.asarray(vel.b(box.centers() / problem.epsilon), dtype=float)[:, None]
                else:
                    coeff = vel.c1 if hasattr(vel, "c1") and ax == 0 else (
                        vel.c[ax] if hasattr(vel, "c") else 1.0)
            else:
                coeff = 1.0
            total += float(np.sum(sgn * coeff * fdiff * phi.dx(rec.t, xs, ax))) * meas * dt
        # drift term: sgn (R(u)-R(psi)) phi, R = kappa0^2/2 h (V' cancels)
        hdiff = np.asarray(flow.h(u), dtype=float) - np.asarray(flow.h(psi), dtype=float)
        total += 0.5 * k0**2 * float(np.sum(sgn * hdiff * phi_v)) * meas * dt
        # stochastic term, left endpoint
        sdiff = np.asarray(flow.sigma(u), dtype=float) - np.asarray(flow.sigma(psi), dtype=float)
        total += k0 * float(np.sum(sgn * sdiff * phi_v)) * meas * rec.dW
        W += rec.dW
    # initial term
    u0f = traj.steps[0].u_before
    psi0 = psi_at(0.0)
    total += float(np.sum(np.abs(u0f - psi0) * phi.value(0.0, xs))) * meas
    return total


# ---------------------------------------------------------------------------
# sandwich bounds
# ---------------------------------------------------------------------------

@dataclass
class SandwichReport:
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def sandwich_test(trajectory: Trajectory, alpha1: float, alpha2: float,
                  path) -> SandwichReport:
    """psi_{alpha1} <= u <= psi_{alpha2} cellwise at every snapshot, tol 1e-10."""
    problem = trajectory.problem
    box = trajectory.box
    flow = problem.flow
    is_p2 = isinstance(problem, StiffSourceProblem)
    if is_p2:
        x1 = box.centers()
        vfast = np.asarray(problem.V(x1 / problem.epsilon), dtype=float)
        if box.d == 2:
            vfast = vfast[:, None]
    W_path = path.at_level(max(trajectory.level, path.level))
    violations = 0
    worst = 0.0
    for tt, f in zip(trajectory.times, trajectory.fields):
        j = int(round(tt / W_path.dt))
        W_t = float(W_path.values[j])
        if is_p2:
            lo = flow.g(vfast + problem.kappa0 * W_t + alpha1)
            hi = flow.g(vfast + problem.kappa0 * W_t + alpha2)
        else:
            lo = special_solution_p1(alpha1, tt, W_t, flow)
            hi = special_solution_p1(alpha2, tt, W_t, flow)
        below = np.maximum(lo - f.u, 0.0)
        above = np.maximum(f.u - hi, 0.0)
        bad = (below > 1e-10) | (above > 1e-10)
        violations += int(np.count_nonzero(bad))
        worst = max(worst, float(below.max(initial=0.0)), float(above.max(initial=0.0)))
    return SandwichReport(violations, worst)
