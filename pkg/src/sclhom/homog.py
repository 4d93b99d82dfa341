"""Epsilon sweeps, weak-star and corrector diagnostics, two-scale histograms,
and Monte Carlo ensembles.

The sweep couples every epsilon level to the same Brownian realization per seed,
so convergence is tested pathwise. The effective equation is solved on a coarser
grid (default n/4) and prolonged to the fine grid: the homogenized problem has no
fast scale to resolve, and an independent discretization keeps the corrector
error an honest first-order quantity instead of letting the two upwind errors
cancel structurally in well-balanced linear cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import t as student_t

from .brownian import sample_path
from .errors import (GridMismatch, InsufficientPaths, ResolutionTooCoarse)
from .fv import (GridField, SchemeConfig, Trajectory, advance, make_stepper,
                 solve_effective, solve_family_p1, period_quadrature)
from .models import Box, StiffSourceProblem, TransportProblem, _grid_tuple

Array = np.ndarray


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhiFunction:
    """Named spatial test function phi(x) on the box."""

    name: str
    fn: Callable

    def on_grid(self, box: Box) -> Array:
        return np.asarray(self.fn(_grid_tuple(box)), dtype=float)


def default_phi_set(L: float) -> tuple:
    """Smooth compactly supported bump, an asymmetric smooth window, and a
    cosine window, as 1-D test functions on [-L, L)."""

    def bump(xs):
        x = xs[0] / (0.7 * L)
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return out

    def expwin(xs):
        return np.exp(0.5 * xs[0] / L)

    def coswin(xs):
        return np.cos(np.pi * xs[0] / (2.0 * L)) ** 2

    return (PhiFunction("bump", bump), PhiFunction("expwin", expwin),
            PhiFunction("coswin", coswin))


# ---------------------------------------------------------------------------
# pairing and corrector errors
# ---------------------------------------------------------------------------

def _check_same_grid(a: GridField, b: GridField) -> None:
    if a.box.n != b.box.n or a.box.d != b.box.d or abs(a.box.L - b.box.L) > 1e-14:
        raise GridMismatch("fields live on different grids")
    if abs(a.t - b.t) > 1e-10 * max(1.0, abs(a.t)):
        raise GridMismatch(f"fields at different times {a.t} vs {b.t}")


def weak_star_error(u_eps: GridField, u_bar: GridField, phis: Sequence[PhiFunction]) -> list:
    """|sum_i (u^eps_i - ubar_i) phi(x_i) dx^d| for each phi."""
    _check_same_grid(u_eps, u_bar)
    diff = u_eps.u - u_bar.u
    meas = u_eps.box.dx ** u_eps.box.d
    return [float(abs(np.sum(diff * phi.on_grid(u_eps.box)) * meas)) for phi in phis]


def corrector_error(u_eps: GridField, u_bar: GridField, table, V, eps: float) -> float:
    """L1 norm of u^eps - g(fbar1(ubar) + V(x1/eps)) over the box."""
    _check_same_grid(u_eps, u_bar)
    box = u_eps.box
    x1 = box.centers()
    vfast = np.asarray(V(x1 / eps), dtype=float)
    if box.d == 2:
        vfast = vfast[:, None]
    q = table.fbar1(u_bar.u)
    corr = table.equilibrium.flow.g(q + vfast)
    return float(np.sum(np.abs(u_eps.u - corr)) * box.dx ** box.d)


def prolong(coarse: GridField, fine_box: Box) -> GridField:
    """Linear interpolation of a coarse 1-D field onto a finer grid (same box)."""
    if coarse.box.d != 1 or fine_box.d != 1:
        raise GridMismatch("prolongation implemented for 1-D fields")
    xc = coarse.box.centers()
    xf = fine_box.centers()
    if coarse.box.boundary == "periodic":
        xp = np.concatenate([[xc[0] - coarse.box.dx], xc, [xc[-1] + coarse.box.dx]])
        up = np.concatenate([[coarse.u[-1]], coarse.u, [coarse.u[0]]])
    else:
        xp, up = xc, coarse.u
    return GridField(fine_box, np.interp(xf, xp, up), coarse.t)


# ---------------------------------------------------------------------------
# sweep plan and runner
# ---------------------------------------------------------------------------

@dataclass
class SweepPlan:
    """epsilon sweep for the stiff-source problem (variant p2)."""

    problem_factory: Callable      # (eps, n) -> StiffSourceProblem
    table: object                  # EffectiveFluxTable
    eps_list: tuple
    seeds: tuple
    observation_times: tuple
    phis: tuple
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    L: float = 1.0
    resolve_factor: int = 16       # dx <= eps / resolve_factor
    coarse_factor: int = 4         # effective grid n/coarse_factor
    refine: int = 1                # extra grid refinement (dx halving studies)

    def grid_n(self, eps: float) -> int:
        need = 2.0 * self.L * self.resolve_factor / eps
        return int(2 ** np.ceil(np.log2(need))) * self.refine


@dataclass
class SweepRow:
    seed: int
    eps: float
    time: float
    phi: str
    weak_err: float
    corrector_err: Optional[float]
    n: int
    dx: float


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)

    def weak_ratios(self, seed: int, time: float, phi: str) -> list:
        vals = sorted(((r.eps, r.weak_err) for r in self.rows
                       if r.seed == seed and abs(r.time - time) < 1e-12 and r.phi == phi),
                      reverse=True)
        return [b / a for (_, a), (_, b) in zip(vals[:-1], vals[1:])]

    def corrector_by_eps(self, seed: int, time: float) -> dict:
        out = {}
        for r in self.rows:
            if r.seed == seed and abs(r.time - time) < 1e-12 and r.corrector_err is not None:
                out[r.eps] = r.corrector_err
        return out

    def to_csv(self, fileobj) -> None:
        fileobj.write("seed,eps,time,phi,weak_err,corrector_err,n,dx\n")
        for r in self.rows:
            ce = "" if r.corrector_err is None else f"{r.corrector_err:.17g}"
            fileobj.write(f"{r.seed},{r.eps:.17g},{r.time:.17g},{r.phi},"
                          f"{r.weak_err:.17g},{ce},{r.n},{r.dx:.17g}\n")


def _pmap(fn, items, threads: int = 1):
    """Order-preserving map, optionally over a thread pool (results are
    assembled by index, so scheduling cannot change any output)."""
    if threads <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def eps_sweep(plan: SweepPlan, threads: int = 1) -> ConvergenceTable:
    """Run the coupled eps/effective solves and collect pairing and corrector errors."""
    T = max(plan.observation_times)

    def one(job):
        seed, eps = job
        path = sample_path(seed, 0, T, 0)
        n = plan.grid_n(eps)
        problem = plan.problem_factory(eps, n)
        st = make_stepper(problem, plan.scheme)
        traj = advance(st, path, T, plan.observation_times)
        nc = max(8, n // plan.coarse_factor)
        coarse_box = Box(1, problem.box.L, nc, problem.box.boundary,
                         problem.box.u_left, problem.box.u_right)
        bar = solve_effective(plan.table, coarse_box, plan.scheme, problem.v0,
                              path, T, plan.observation_times, kappa0=problem.kappa0)
        rows = []
        for tt in plan.observation_times:
            ue = traj.field_at(tt)
            ub = prolong(bar.field_at(tt), problem.box)
            werrs = weak_star_error(ue, ub, plan.phis)
            cerr = corrector_error(ue, ub, plan.table, problem.V, eps)
            for phi, we in zip(plan.phis, werrs):
                rows.append(SweepRow(seed, eps, tt, phi.name, we, cerr,
                                     n, problem.box.dx))
        return rows

    jobs = [(seed, eps) for seed in plan.seeds for eps in plan.eps_list]
    table = ConvergenceTable()
    for rows in _pmap(one, jobs, threads):
        table.rows.extend(rows)
    return table


@dataclass
class ShearSweepPlan:
    """epsilon sweep for the transport problem with a shear (or constant) field."""

    problem_factory: Callable      # (eps, n) -> TransportProblem
    eps_list: tuple
    seeds: tuple
    observation_times: tuple
    phis: tuple
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    n: int = 128
    y_quadrature: int = 16


def eps_sweep_p1(plan: ShearSweepPlan, threads: int = 1) -> ConvergenceTable:
    T = max(plan.observation_times)

    def one(job):
        seed, eps = job
        path = sample_path(seed, 0, T, 0)
        problem = plan.problem_factory(eps, plan.n)
        st = make_stepper(problem, plan.scheme)
        traj = advance(st, path, T, plan.observation_times)
        vel = problem.velocity
        if hasattr(vel, "b"):
            y_nodes, wts = period_quadrature(vel.b, plan.y_quadrature)
        else:
            y_nodes, wts = np.array([0.0]), np.array([1.0])
        fam = solve_family_p1(problem, path, y_nodes, wts, plan.scheme, T,
                              plan.observation_times)
        rows = []
        for tt in plan.observation_times:
            ue = traj.field_at(tt)
            ub = fam.field_at(tt)
            for phi, we in zip(plan.phis, weak_star_error(ue, ub, plan.phis)):
                rows.append(SweepRow(seed, eps, tt, phi.name, we, None,
                                     plan.n, problem.box.dx))
        return rows

    jobs = [(seed, eps) for seed in plan.seeds for eps in plan.eps_list]
    table = ConvergenceTable()
    for rows in _pmap(one, jobs, threads):
        table.rows.extend(rows)
    return table


# ---------------------------------------------------------------------------
# two-scale Young measure histogram
# ---------------------------------------------------------------------------

@dataclass
class YoungMeasureHistogram:
    """Per-fast-cell histogram of solution values: weights[y_bin, xi_bin]."""

    y_edges: Array
    xi_edges: Array
    weights: Array
    t: float

    @property
    def dxi(self) -> float:
        return float(self.xi_edges[1] - self.xi_edges[0])

    def per_bin_mean_variance(self):
        mids = 0.5 * (self.xi_edges[1:] + self.xi_edges[:-1])
        mean = self.weights @ mids
        second = self.weights @ mids**2
        return mean, second - mean**2


def young_measure_estimate(u_eps: GridField, eps: float, period: float,
                           n_y: int, xi_edges: Array,
                           values: Optional[Array] = None) -> YoungMeasureHistogram:
    """Histogram of cell values grouped by the fast coordinate y = (x1/eps) mod P.

    `values` defaults to the field itself; diagnostics may pass a derived field
    (e.g. the corrector difference) binned by the same fast coordinate."""
    box = u_eps.box
    samples_per_bin = (eps * period / box.dx) / n_y
    if samples_per_bin < 1.0:
        raise ResolutionTooCoarse(
            f"{n_y} fast bins need dx <= eps*P/{n_y}; have dx={box.dx:g}")
    x1 = box.centers()
    y = np.mod(x1 / eps, period) / period      # in [0,1)
    ybin = np.minimum((y * n_y).astype(int), n_y - 1)
    vals = u_eps.u if values is None else values
    if box.d == 2:
        ybin = np.broadcast_to(ybin[:, None], vals.shape).ravel()
        vals = vals.ravel()
    weights = np.zeros((n_y, len(xi_edges) - 1))
    for b in range(n_y):
        sel = vals[ybin == b]
        if len(sel):
            hist, _ = np.histogram(sel, bins=xi_edges)
            weights[b] = hist / len(sel)
    y_edges = np.linspace(0.0, period, n_y + 1)
    return YoungMeasureHistogram(y_edges, np.asarray(xi_edges, dtype=float),
                                 weights, u_eps.t)


def per_bin_variance(u_eps: GridField, eps: float, period: float, n_y: int,
                     values: Optional[Array] = None) -> Array:
    """Variance of raw (unbinned) values within each fast-coordinate bin."""
    box = u_eps.box
    if (eps * period / box.dx) / n_y < 1.0:
        raise ResolutionTooCoarse("grid does not resolve the requested fast bins")
    x1 = box.centers()
    y = np.mod(x1 / eps, period) / period
    ybin = np.minimum((y * n_y).astype(int), n_y - 1)
    vals = u_eps.u if values is None else values
    if box.d == 2:
        ybin = np.broadcast_to(ybin[:, None], vals.shape).ravel()
        vals = vals.ravel()
    out = np.zeros(n_y)
    for b in range(n_y):
        sel = vals[ybin == b]
        out[b] = np.var(sel) if len(sel) else 0.0
    return out


# ---------------------------------------------------------------------------
# Monte Carlo ensembles
# ---------------------------------------------------------------------------

@dataclass
class MonteCarloPlan:
    problem: object
    scheme: SchemeConfig
    observation_times: tuple
    seed: int = 1
    weight_N: Optional[float] = None    # None => w == 1 (periodic/compact setting)


@dataclass
class EnsembleStats:
    times: tuple
    mean_fields: list                  # mean field per time
    moments: dict                      # (time, p) -> (mean, half_width)
    n_paths: int

    def to_csv(self, fileobj) -> None:
        fileobj.write("time,p,moment,half_width\n")
        for (tt, p), (m, hw) in sorted(self.moments.items()):
            fileobj.write(f"{tt:.17g},{p},{m:.17g},{hw:.17g}\n")


def weight_on_grid(box: Box, N: Optional[float]):
    """w_N on cell centers; identically 1 when N is None (compact setting)."""
    if N is None:
        return np.ones(box.n) if box.d == 1 else np.ones((box.n, box.n))
    if N <= box.d / 2:
        raise ValueError("weight exponent must exceed d/2")
    xs = _grid_tuple(box)
    r2 = sum(x**2 for x in xs)
    return (1.0 + r2) ** (-N)


def monte_carlo(plan: MonteCarloPlan, n_paths: int, threads: int = 1) -> EnsembleStats:
    """Sample statistics over independent path streams: mean fields and weighted
    L^p moments with t-statistic confidence half-widths, p in {1, 2, 4}."""
    if n_paths < 2:
        raise InsufficientPaths("need at least 2 paths")
    box = plan.problem.box
    w = weight_on_grid(box, plan.weight_N)
    meas = box.dx ** box.d
    T = max(plan.observation_times)

    def one(stream):
        path = sample_path(plan.seed, stream, T, 0)
        st = make_stepper(plan.problem, plan.scheme)
        traj = advance(st, path, T, plan.observation_times)
        return {tt: traj.field_at(tt).u for tt in plan.observation_times}

    results = _pmap(one, range(n_paths), threads)
    sums = {tt: None for tt in plan.observation_times}
    samples = {(tt, p): [] for tt in plan.observation_times for p in (1, 2, 4)}
    for res in results:
        for tt in plan.observation_times:
            u = res[tt]
            sums[tt] = u.copy() if sums[tt] is None else sums[tt] + u
            for p in (1, 2, 4):
                samples[(tt, p)].append(float(np.sum(np.abs(u)**p * w) * meas))
    tcrit = float(student_t.ppf(0.975, n_paths - 1))
    moments = {}
    for key, vals in samples.items():
        arr = np.asarray(vals)
        moments[key] = (float(arr.mean()),
                        tcrit * float(arr.std(ddof=1)) / np.sqrt(n_paths))
    mean_fields = [GridField(box, sums[tt] / n_paths, tt) for tt in plan.observation_times]
    return EnsembleStats(tuple(plan.observation_times), mean_fields, moments, n_paths)
