"""Finite-volume time stepping for both stochastic problems and the effective equation.

Splitting is Lie: a monotone deterministic step, an optional explicit viscous step,
then the exact pathwise noise map applied cellwise. Because the noise map and the
well-balanced reconstruction share the same Newton-inverted flow primitive, the
special solutions are exact fixed points of the full discrete evolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (CFLViolation, GridMismatch, StabilityViolation, UnknownKind,
                     UnsupportedVelocityFamily)
from .models import (Box, ConstantVelocity, FluxComponent, ShearVelocity,
                     StiffSourceProblem, TransportProblem, require_supported_velocity)

Array = np.ndarray

FLUX_KINDS = ("godunov", "engquist_osher", "rusanov")


@dataclass(frozen=True)
class SchemeConfig:
    flux_kind: str = "godunov"
    cfl: float = 0.9
    eps_visc: float = 0.0
    well_balanced: bool = True

    def __post_init__(self):
        if self.flux_kind not in FLUX_KINDS:
            raise UnknownKind(f"flux kind {self.flux_kind!r}; choose from {FLUX_KINDS}")
        if not 0.0 < self.cfl < 1.0:
            raise CFLViolation("CFL number must lie in (0,1)")


@dataclass
class GridField:
    box: Box
    u: Array
    t: float = 0.0

    def copy(self) -> "GridField":
        return GridField(self.box, self.u.copy(), self.t)

    def total_mass(self) -> float:
        return float(np.sum(self.u)) * self.box.dx ** self.box.d


# ---------------------------------------------------------------------------
# monotone numerical fluxes
# ---------------------------------------------------------------------------

def numerical_flux(uL: Array, uR: Array, comp: FluxComponent, kind: str,
                   crit: Optional[Array] = None) -> Array:
    """Consistent monotone two-point flux for the scalar component `comp`."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    if kind == "godunov":
        return _godunov(uL, uR, comp, crit)
    if kind == "engquist_osher":
        return _engquist_osher(uL, uR, comp, crit)
    if kind == "rusanov":
        lam = np.maximum(np.abs(comp.df(uL)), np.abs(comp.df(uR)))
        return 0.5 * (comp.f(uL) + comp.f(uR)) - 0.5 * lam * (uR - uL)
    raise UnknownKind(f"flux kind {kind!r}; choose from {FLUX_KINDS}")


def _godunov(uL, uR, comp, crit):
    fl = comp.f(uL)
    fr = comp.f(uR)
    fmin = np.minimum(fl, fr)
    fmax = np.maximum(fl, fr)
    if crit is not None and len(crit):
        lo = np.minimum(uL, uR)
        hi = np.maximum(uL, uR)
        for c in crit:
            inside = (lo < c) & (c < hi)
            if np.any(inside):
                fc = float(comp.f(np.asarray(c)))
                fmin = np.where(inside, np.minimum(fmin, fc), fmin)
                fmax = np.where(inside, np.maximum(fmax, fc), fmax)
    return np.where(uL <= uR, fmin, fmax)


def _engquist_osher(uL, uR, comp, crit):
    # F(a,b) = f(0) + int_0^a (f')_+ + int_0^b (f')_-
    f0 = float(comp.f(np.asarray(0.0)))
    return f0 + _eo_integral(uL, comp, crit, positive=True) \
              + _eo_integral(uR, comp, crit, positive=False)


def _eo_integral(u, comp, crit, positive: bool):
    """int_0^u (f')_± dv. Orientation: for u < 0 the integral flips sign."""
    cuts = sorted(float(c) for c in (crit if crit is not None else []))
    lo0 = np.minimum(u, 0.0)
    hi0 = np.maximum(u, 0.0)
    total = np.zeros_like(u)
    seg_edges = [-np.inf] + cuts + [np.inf]
    for a, b in zip(seg_edges[:-1], seg_edges[1:]):
        aa = np.clip(lo0, a, b)
        bb = np.clip(hi0, a, b)
        df_seg = comp.f(bb) - comp.f(aa)        # f monotone on [a,b]
        part = np.maximum(df_seg, 0.0) if positive else np.minimum(df_seg, 0.0)
        total = total + part
    return np.where(u >= 0.0, total, -total)


# ---------------------------------------------------------------------------
# ghost-cell extension
# ---------------------------------------------------------------------------

def _extend(u: Array, box: Box, axis: int) -> Array:
    """One ghost cell on each side along `axis`."""
    if box.boundary == "periodic":
        left = np.take(u, [-1], axis=axis)
        right = np.take(u, [0], axis=axis)
    else:
        if axis == 0:
            left = np.full_like(np.take(u, [0], axis=axis), box.u_left)
            right = np.full_like(np.take(u, [-1], axis=axis), box.u_right)
        else:
            left = np.take(u, [0], axis=axis)     # transverse: copy (outflow)
            right = np.take(u, [-1], axis=axis)
    return np.concatenate([left, u, right], axis=axis)


def _face_pair(ue: Array, axis: int):
    """(uL, uR) on the n+1 faces along `axis` given the ghost-extended array."""
    n = ue.shape[axis] - 2
    uL = np.take(ue, range(0, n + 1), axis=axis)
    uR = np.take(ue, range(1, n + 2), axis=axis)
    return uL, uR


def _face_diff(H: Array, axis: int) -> Array:
    upper = np.take(H, range(1, H.shape[axis]), axis=axis)
    lower = np.take(H, range(0, H.shape[axis] - 1), axis=axis)
    return upper - lower


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------

class _StepperBase:
    """Holds the state and applies det / viscous / noise substeps in place."""

    def __init__(self, box: Box, scheme: SchemeConfig, u0: Array, flow, d: int):
        self.box = box
        self.scheme = scheme
        self.u = np.array(u0, dtype=float, copy=True)
        self.t = 0.0
        self.flow = flow
        self.d = d

    # wave_speed_bound() -> sum over axes of max|coefficient * f'| (per unit dx)
    def wave_speed_bound(self) -> float:
        raise NotImplementedError

    def det_step(self, dt: float) -> None:
        raise NotImplementedError

    def _check_cfl(self, dt: float) -> None:
        s = self.wave_speed_bound()
        if dt * s / self.box.dx > 1.0 + 1e-12:
            raise CFLViolation(f"dt={dt:g} exceeds stability bound {self.box.dx / s:g}")

    def viscous_step(self, dt: float) -> None:
        nu = self.scheme.eps_visc
        if nu == 0.0:
            return
        dx = self.box.dx
        if dt > dx * dx / (2.0 * self.d * nu) * (1.0 + 1e-9):
            raise StabilityViolation(
                f"dt={dt:g} exceeds diffusion bound {dx*dx/(2*self.d*nu):g}")
        lap = np.zeros_like(self.u)
        for ax in range(self.d):
            ue = _extend(self.u, self.box, ax)
            upper = np.take(ue, range(2, ue.shape[ax]), axis=ax)
            lower = np.take(ue, range(0, ue.shape[ax] - 2), axis=ax)
            lap += (upper - 2.0 * self.u + lower) / dx**2
        self.u = self.u + dt * nu * lap

    def noise_step(self, dW: float) -> None:
        if dW == 0.0 and self.flow.kappa0 == 0.0:
            return
        self.u = self.flow.noise_flow(self.u, self.flow.kappa0 * dW)

    def step(self, dt: float, dW: float) -> None:
        self.det_step(dt)
        self.viscous_step(dt)
        self.noise_step(dW)
        self.t += dt


class TransportStepper(_StepperBase):
    """Problem 1 in conservative form: du + div_x( a(x/eps) f(u) ) dt = noise.

    div a = 0 makes the conservative and nonconservative forms agree, and gives
    exact constants, mass conservation, and monotonicity under CFL.
    """

    def __init__(self, problem: TransportProblem, scheme: SchemeConfig,
                 u0: Optional[Array] = None):
        require_supported_velocity(problem.velocity)
        u0 = problem.initial_field() if u0 is None else u0
        super().__init__(problem.box, scheme, u0, problem.flow, problem.box.d)
        self.problem = problem
        lo, hi = problem.flux.evaluation_range
        self._crit = [problem.flux.components[k].critical_points(lo, hi)
                      for k in range(problem.flux.d)]
        self._Lf = [problem.flux.components[k].max_abs_df(lo, hi)
                    for k in range(problem.flux.d)]
        self._cmax = [problem.velocity.max_abs(ax) for ax in range(self.d)]
        self._face_coeff = self._build_face_coeff()

    def _build_face_coeff(self):
        box, prob = self.box, self.problem
        coeffs = []
        for ax in range(self.d):
            if isinstance(prob.velocity, ConstantVelocity):
                coeffs.append(float(prob.velocity.c[ax]))
            else:  # shear: (c1, b(y1)); coefficient varies only along x1
                if ax == 0:
                    coeffs.append(float(prob.velocity.c1))
                else:
                    y1 = box.centers() / prob.epsilon
                    c = np.asarray(prob.velocity.b(y1), dtype=float)
                    coeffs.append(c[:, None])   # broadcast over axis-1 faces
        return coeffs

    def wave_speed_bound(self) -> float:
        return sum(self._cmax[ax] * self._Lf[ax] for ax in range(self.d))

    def det_faces(self, u: Array) -> list:
        """Total face fluxes (coefficient included) per axis."""
        out = []
        for ax in range(self.d):
            ue = _extend(u, self.box, ax)
            uL, uR = _face_pair(ue, ax)
            comp = self.problem.flux.components[ax]
            c = self._face_coeff[ax]
            Ffwd = numerical_flux(uL, uR, comp, self.scheme.flux_kind, self._crit[ax])
            if np.ndim(c) == 0:
                if c >= 0:
                    H = c * Ffwd
                else:
                    H = c * numerical_flux(uR, uL, comp, self.scheme.flux_kind, self._crit[ax])
            else:
                Fbwd = numerical_flux(uR, uL, comp, self.scheme.flux_kind, self._crit[ax])
                H = np.where(c >= 0, c * Ffwd, c * Fbwd)
            out.append(H)
        return out

    def det_apply(self, u: Array, dt: float) -> Array:
        div = np.zeros_like(u)
        for ax, H in enumerate(self.det_faces(u)):
            div += _face_diff(H, ax) / self.box.dx
        return u - dt * div

    def det_step(self, dt: float) -> None:
        self._check_cfl(dt)
        self.u = self.det_apply(self.u, dt)


class StiffSourceStepper(_StepperBase):
    """Problem 2 with well-balanced equilibrium-variable reconstruction along x1.

    Equilibrium variable w = f1(u) - V(x/eps); interface states g(w + V(face));
    source as the face difference of V. Discrete steady states w = const are
    exact fixed points (for the Godunov/upwind path, to the last bit)."""

    def __init__(self, problem: StiffSourceProblem, scheme: SchemeConfig,
                 u0: Optional[Array] = None):
        u0 = problem.initial_field() if u0 is None else u0
        super().__init__(problem.box, scheme, u0, problem.flow, problem.box.d)
        self.problem = problem
        lo, hi = problem.flux.evaluation_range
        self._crit = [problem.flux.components[k].critical_points(lo, hi)
                      for k in range(problem.flux.d)]
        self._Lf = [problem.flux.components[k].max_abs_df(lo, hi)
                    for k in range(problem.flux.d)]
        box = problem.box
        x_faces = box.faces()
        x_cells = box.centers()
        self._v_face = np.asarray(problem.V(x_faces / problem.epsilon), dtype=float)
        self._v_cell = np.asarray(problem.V(x_cells / problem.epsilon), dtype=float)
        # ghost-cell equilibrium potentials for farfield boundaries
        self._v_ghost_l = float(problem.V((x_cells[0] - box.dx) / problem.epsilon))
        self._v_ghost_r = float(problem.V((x_cells[-1] + box.dx) / problem.epsilon))

    def wave_speed_bound(self) -> float:
        return sum(self._Lf[ax] for ax in range(self.d))

    def _w_extended(self, u: Array):
        f1 = self.problem.flux.f1
        v_cell = self._v_cell if self.d == 1 else self._v_cell[:, None]
        w = np.asarray(f1.f(u), dtype=float) - v_cell
        if self.box.boundary == "periodic":
            wl = np.take(w, [-1], axis=0)
            wr = np.take(w, [0], axis=0)
        else:
            shape = list(w.shape)
            shape[0] = 1
            wl = np.full(shape, float(self.problem.flux.f1.f(np.asarray(self.box.u_left))) - self._v_ghost_l)
            wr = np.full(shape, float(self.problem.flux.f1.f(np.asarray(self.box.u_right))) - self._v_ghost_r)
        return np.concatenate([wl, w, wr], axis=0)

    def _axis0_faces(self, u: Array) -> Array:
        prob = self.problem
        f1 = prob.flux.f1
        v_face = self._v_face if self.d == 1 else self._v_face[:, None]
        if not prob.V.is_zero and self.scheme.well_balanced:
            we = self._w_extended(u)
            wL = np.take(we, range(0, self.box.n + 1), axis=0)
            if self.scheme.flux_kind == "godunov":
                # f1 strictly increasing => Godunov on the reconstructed states
                # is upwind: F = f1(u^-) = w_L + V(face)
                return wL + v_face
            wR = np.take(we, range(1, self.box.n + 2), axis=0)
            um = prob.flow.g(wL + v_face)
            up = prob.flow.g(wR + v_face)
            return numerical_flux(um, up, f1, self.scheme.flux_kind, self._crit[0])
        ue = _extend(u, self.box, 0)
        uL, uR = _face_pair(ue, 0)
        return numerical_flux(uL, uR, f1, self.scheme.flux_kind, self._crit[0])

    def det_faces(self, u: Array) -> list:
        out = [self._axis0_faces(u)]
        for ax in range(1, self.d):
            ue = _extend(u, self.box, ax)
            uL, uR = _face_pair(ue, ax)
            comp = self.problem.flux.components[ax]
            out.append(numerical_flux(uL, uR, comp, self.scheme.flux_kind, self._crit[ax]))
        return out

    def det_apply(self, u: Array, dt: float) -> Array:
        """Unsplit forward-Euler update; all face fluxes taken from the same u."""
        prob = self.problem
        lam = dt / self.box.dx
        v_face = self._v_face if self.d == 1 else self._v_face[:, None]
        wb = not prob.V.is_zero and self.scheme.well_balanced
        upd = np.zeros_like(u)
        if wb and self.scheme.flux_kind == "godunov":
            # flux difference minus source telescopes to the pure w-difference,
            # which keeps discrete steady states fixed to the last bit
            we = self._w_extended(u)
            wL = np.take(we, range(0, self.box.n + 1), axis=0)
            upd += lam * _face_diff(wL, 0)
        else:
            upd += lam * _face_diff(self._axis0_faces(u), 0)
            if not prob.V.is_zero:
                if wb:
                    upd -= lam * _face_diff(v_face, 0)
                else:
                    x_cells = self.box.centers()
                    src = np.asarray(prob.V.deriv(x_cells / prob.epsilon),
                                     dtype=float) / prob.epsilon
                    upd -= dt * (src if self.d == 1 else src[:, None])
        for ax in range(1, self.d):
            ue = _extend(u, self.box, ax)
            uL, uR = _face_pair(ue, ax)
            comp = prob.flux.components[ax]
            F = numerical_flux(uL, uR, comp, self.scheme.flux_kind, self._crit[ax])
            upd += lam * _face_diff(F, ax)
        return u - upd

    def det_step(self, dt: float) -> None:
        self._check_cfl(dt)
        self.u = self.det_apply(self.u, dt)


class EffectiveStepper(_StepperBase):
    """Homogenized equation: flux fbar, noise flow u -> gbar(fbar1(u) + delta)."""

    def __init__(self, table, box: Box, scheme: SchemeConfig, u0: Array,
                 kappa0: float = 0.0):
        flow = table.make_flow(kappa0)
        super().__init__(box, scheme, u0, flow, box.d)
        self.table = table
        self._comps = table.flux_components()
        lo, hi = table.p_range
        self._crit = [c.critical_points(lo, hi) for c in self._comps[:box.d]]
        self._Lf = [c.max_abs_df(lo, hi) for c in self._comps[:box.d]]

    def wave_speed_bound(self) -> float:
        return sum(self._Lf[ax] for ax in range(self.d))

    def det_faces(self, u: Array) -> list:
        out = []
        for ax in range(self.d):
            ue = _extend(u, self.box, ax)
            uL, uR = _face_pair(ue, ax)
            out.append(numerical_flux(uL, uR, self._comps[ax],
                                      self.scheme.flux_kind, self._crit[ax]))
        return out

    def det_apply(self, u: Array, dt: float) -> Array:
        for ax, H in enumerate(self.det_faces(u)):
            u = u - (dt / self.box.dx) * _face_diff(H, ax)
        return u

    def det_step(self, dt: float) -> None:
        self._check_cfl(dt)
        self.u = self.det_apply(self.u, dt)


# ---------------------------------------------------------------------------
# time integration driver
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    t: float
    u_before: Array
    dW: float


@dataclass
class Trajectory:
    box: Box
    times: list
    fields: list                      # GridField snapshots at `times`
    dt: float
    level: int
    problem: object = None
    scheme: Optional[SchemeConfig] = None
    steps: Optional[list] = None      # StepRecord per step when recorded
    seed: Optional[int] = None
    stream_id: Optional[int] = None

    def field_at(self, t: float) -> GridField:
        for tt, f in zip(self.times, self.fields):
            if abs(tt - t) <= 1e-12 * max(1.0, abs(t)):
                return f
        raise GridMismatch(f"no snapshot at t={t}")


def _dyadic_level_for(path_T: float, dt_bound: float, times: Sequence[float]) -> int:
    from .brownian import MAX_LEVEL
    level = 0
    while path_T / 2**level > dt_bound:
        level += 1
        if level > MAX_LEVEL:
            raise CFLViolation("stability bound requires a dyadic level deeper than 30")
    # all requested times must sit on the dyadic grid
    ok = False
    while not ok:
        dt = path_T / 2**level
        ok = all(abs(t / dt - round(t / dt)) < 1e-9 for t in times)
        if not ok:
            level += 1
            if level > MAX_LEVEL:
                raise CFLViolation("requested times are not dyadic fractions of the path horizon")
    return level


def make_stepper(problem, scheme: SchemeConfig, u0: Optional[Array] = None):
    if isinstance(problem, TransportProblem):
        return TransportStepper(problem, scheme, u0)
    if isinstance(problem, StiffSourceProblem):
        return StiffSourceStepper(problem, scheme, u0)
    raise UnsupportedVelocityFamily(f"no stepper for {type(problem).__name__}")


def advance(stepper, path, t_target: float, snapshot_times: Sequence[float] = (),
            record_steps: bool = False, min_level: int = 0) -> Trajectory:
    """March to t_target with uniform dyadic steps, one path increment per step.

    The level is the smallest one whose step satisfies the CFL (and viscous)
    bound; snapshots are emitted at the requested dyadic times. Fully
    deterministic given (stepper inputs, path seed).
    """
    if t_target > path.T + 1e-12:
        raise CFLViolation(f"t_target {t_target} beyond path horizon {path.T}")
    dx = stepper.box.dx
    dt_bound = stepper.scheme.cfl * dx / stepper.wave_speed_bound()
    nu = stepper.scheme.eps_visc
    if nu > 0:
        dt_bound = min(dt_bound, dx * dx / (2.0 * stepper.d * nu))
    times = sorted(set(list(snapshot_times) + [t_target]))
    level = max(min_level,
                _dyadic_level_for(path.T, dt_bound, [t for t in times if t > 0]))
    W = path.at_level(level)
    dt = W.dt
    nsteps = int(round(t_target / dt))
    want = {int(round(t / dt)): t for t in times}
    traj = Trajectory(stepper.box, [], [], dt, level,
                      problem=getattr(stepper, "problem", None), scheme=stepper.scheme,
                      steps=[] if record_steps else None,
                      seed=path.seed, stream_id=path.stream_id)
    if any(t == 0.0 for t in times):
        traj.times.append(0.0)
        traj.fields.append(GridField(stepper.box, stepper.u.copy(), 0.0))
    for j in range(nsteps):
        if record_steps:
            traj.steps.append(StepRecord(j * dt, stepper.u.copy(), W.increment(j)))
        stepper.step(dt, W.increment(j))
        if (j + 1) in want:
            traj.times.append(want[j + 1])
            traj.fields.append(GridField(stepper.box, stepper.u.copy(), want[j + 1]))
    return traj


def det_step_p1(field: GridField, problem: TransportProblem, scheme: SchemeConfig,
                dt: float) -> GridField:
    st = TransportStepper(problem, scheme, field.u)
    st.det_step(dt)
    return GridField(field.box, st.u, field.t + dt)


def det_step_p2(field: GridField, problem: StiffSourceProblem, scheme: SchemeConfig,
                dt: float) -> GridField:
    st = StiffSourceStepper(problem, scheme, field.u)
    st.det_step(dt)
    return GridField(field.box, st.u, field.t + dt)


def noise_step(field: GridField, dW: float, flow) -> GridField:
    u = flow.noise_flow(field.u, flow.kappa0 * dW)
    return GridField(field.box, u, field.t)


def viscous_step(field: GridField, eps_visc: float, dt: float, d: int = 1,
                 boundary_box: Optional[Box] = None) -> GridField:
    box = boundary_box or field.box

    class _Tmp(_StepperBase):
        def wave_speed_bound(self):
            return 1.0

        def det_step(self, dt):
            pass

    st = _Tmp(box, SchemeConfig(eps_visc=eps_visc), field.u, None, box.d)
    st.viscous_step(dt)
    return GridField(field.box, st.u, field.t + dt)


def solve_effective(table, box: Box, scheme: SchemeConfig, v0: Callable, path,
                    t_target: float, snapshot_times: Sequence[float] = (),
                    kappa0: float = 0.0, record_steps: bool = False) -> Trajectory:
    """Solve the homogenized equation with ubar0 = gbar(v0(x))."""
    from .models import _grid_tuple
    xs = _grid_tuple(box)
    u0 = np.asarray(table.gbar(np.asarray(v0(xs), dtype=float)), dtype=float)
    st = EffectiveStepper(table, box, scheme, u0, kappa0)
    return advance(st, path, t_target, snapshot_times, record_steps)


def solve_family_p1(problem: TransportProblem, path, y_nodes: Array, weights: Array,
                    scheme: SchemeConfig, t_target: float,
                    snapshot_times: Sequence[float] = ()):
    """Solve the y-parameterized frozen-coefficient problems on the shared path
    and return their quadrature average, approximating int_K U dm(y).

    Admits constant fields (all members identical) and shear fields, whose mean
    reduces to the period cell of the shear profile. U0 may depend on y only
    through its first component."""
    require_supported_velocity(problem.velocity)
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("quadrature weights must sum to 1")
    vel = problem.velocity
    avg_fields = None
    times_out = None
    for y, w in zip(np.asarray(y_nodes, dtype=float), weights):
        if isinstance(vel, ConstantVelocity):
            member_vel = vel
        else:
            member_vel = ConstantVelocity((vel.c1, float(vel.b(y))))
        member = TransportProblem(problem.flux, member_vel, problem.flow, problem.box,
                                  problem.epsilon, problem.T,
                                  U0=lambda xs, ys, y=y: problem.U0(xs, tuple(np.full_like(x, y) for x in xs)))
        st = TransportStepper(member, scheme)
        traj = advance(st, path, t_target, snapshot_times)
        if avg_fields is None:
            times_out = traj.times
            avg_fields = [w * f.u for f in traj.fields]
        else:
            for acc, f in zip(avg_fields, traj.fields):
                acc += w * f.u
    fields = [GridField(problem.box, u, t) for u, t in zip(avg_fields, times_out)]
    return Trajectory(problem.box, times_out, fields, dt=np.nan, level=-1,
                      problem=problem, scheme=scheme,
                      seed=path.seed, stream_id=path.stream_id)


def period_quadrature(potential, m: int):
    """m equally weighted nodes over one period: the trapezoid rule on a
    periodic cell."""
    P = potential.period
    nodes = (np.arange(m) + 0.5) * P / m
    return nodes, np.full(m, 1.0 / m)
