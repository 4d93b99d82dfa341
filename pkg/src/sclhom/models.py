"""Problem definitions: fluxes, noise models, oscillatory data, exact special solutions.

The two problem families share one structural idea: the noise enters through a
strictly increasing flow primitive g, and the exact pathwise solution map over a
noise increment D is

    problem 1:  u -> g(g^{-1}(u) + D),   g' = sigma(g)
    problem 2:  u -> g(f1(u) + D),       g = f1^{-1}

Both maps are monotone and form an exact semigroup, which is what every scheme
invariant downstream (sandwich bounds, comparison, special-solution preservation)
leans on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import MalformedSpec, RangeExceeded, UnsupportedVelocityFamily

Array = np.ndarray


# ---------------------------------------------------------------------------
# fluxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxComponent:
    """One scalar flux component with its derivatives."""

    name: str
    f: Callable[[Array], Array]
    df: Callable[[Array], Array]
    d2f: Callable[[Array], Array]
    d3f: Optional[Callable[[Array], Array]] = None

    def critical_points(self, lo: float, hi: float, samples: int = 2048) -> np.ndarray:
        """Zeros of f' in [lo, hi], located by sign changes + brentq."""
        u = np.linspace(lo, hi, samples + 1)
        d = np.asarray(self.df(u), dtype=float)
        roots = []
        for i in range(samples):
            a, b = d[i], d[i + 1]
            if a == 0.0:
                roots.append(u[i])
            elif a * b < 0.0:
                roots.append(brentq(lambda x: float(self.df(np.asarray(x))), u[i], u[i + 1],
                                    xtol=1e-14))
        if d[-1] == 0.0:
            roots.append(u[-1])
        return np.array(sorted(set(np.round(roots, 12))))

    def max_abs_df(self, lo: float, hi: float) -> float:
        u = np.linspace(lo, hi, 4097)
        return float(np.max(np.abs(self.df(u))))


@dataclass(frozen=True)
class ScalarFlux:
    """Vector flux f = (f_1, ..., f_d) acting on a scalar unknown."""

    components: tuple
    evaluation_range: tuple
    delta0: Optional[float] = None

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def f1(self) -> FluxComponent:
        return self.components[0]


def linear_flux() -> FluxComponent:
    return FluxComponent("linear", lambda u: np.asarray(u, dtype=float),
                         lambda u: np.ones_like(np.asarray(u, dtype=float)),
                         lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                         lambda u: np.zeros_like(np.asarray(u, dtype=float)))


def _burgers_f(u):
    u = np.asarray(u, dtype=float)
    return 0.5 * u * u


def burgers_flux() -> FluxComponent:
    return FluxComponent("burgers", _burgers_f,
                         lambda u: np.asarray(u, dtype=float),
                         lambda u: np.ones_like(np.asarray(u, dtype=float)),
                         lambda u: np.zeros_like(np.asarray(u, dtype=float)))


def _cubic_f(u):
    u = np.asarray(u, dtype=float)
    return u + u * u * u * (1.0 / 3.0)


def _cubic_df(u):
    u = np.asarray(u, dtype=float)
    return 1.0 + u * u


def cubic_flux() -> FluxComponent:
    """u + u^3/3; strictly increasing with f' = 1 + u^2 >= 1."""
    return FluxComponent("cubic", _cubic_f, _cubic_df,
                         lambda u: 2.0 * np.asarray(u, dtype=float),
                         lambda u: np.full_like(np.asarray(u, dtype=float), 2.0))


FLUX_REGISTRY = {
    "linear": linear_flux,
    "burgers": burgers_flux,
    "cubic": cubic_flux,
    "square_half": burgers_flux,
}


# ---------------------------------------------------------------------------
# oscillatory data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillatoryPotential:
    """V(z) = offset + sum_j A_j sin(2 pi lambda_j z + phi_j)."""

    modes: tuple          # tuple of (amplitude, frequency, phase)
    kind: str = "periodic"              # periodic | quasiperiodic
    offset: float = 0.0                 # the mean value M(V)

    def __post_init__(self):
        if self.kind not in ("periodic", "quasiperiodic"):
            raise MalformedSpec(f"unknown potential kind {self.kind!r}")
        if self.kind == "periodic":
            _ = self.period  # raises if frequencies are not commensurate

    @property
    def period(self) -> float:
        """Fundamental period for the periodic kind (frequencies rationally related)."""
        if not self.modes:
            return 1.0
        fracs = [Fraction(lam).limit_denominator(10**9) for (_, lam, _) in self.modes]
        if any(f == 0 for f in fracs):
            raise MalformedSpec("zero frequency mode; fold it into the offset")
        g = fracs[0]
        for f in fracs[1:]:
            g = Fraction(np.gcd(g.numerator * f.denominator, f.numerator * g.denominator),
                         g.denominator * f.denominator)
        return float(1 / g)

    @property
    def bound(self) -> float:
        return abs(self.offset) + sum(abs(a) for (a, _, _) in self.modes)

    @property
    def is_zero(self) -> bool:
        return not self.modes and self.offset == 0.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.full_like(z, self.offset)
        for a, lam, phi in self.modes:
            out = out + a * np.sin(2.0 * np.pi * lam * z + phi)
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for a, lam, phi in self.modes:
            out = out + a * 2.0 * np.pi * lam * np.cos(2.0 * np.pi * lam * z + phi)
        return out


def sin_potential(amplitude: float = 1.0) -> OscillatoryPotential:
    return OscillatoryPotential(((amplitude, 1.0, 0.0),), "periodic")


def zero_potential() -> OscillatoryPotential:
    return OscillatoryPotential((), "periodic")


def quasi_potential() -> OscillatoryPotential:
    """sin(z) + sin(sqrt(2) z): two incommensurate frequencies."""
    return OscillatoryPotential(((1.0, 1.0 / (2 * np.pi), 0.0),
                                 (1.0, np.sqrt(2.0) / (2 * np.pi), 0.0)),
                                "quasiperiodic")


POTENTIAL_REGISTRY = {
    "sin": sin_potential,
    "zero": zero_potential,
    "quasi": quasi_potential,
}


# ---------------------------------------------------------------------------
# velocity fields (problem 1) -- constant and shear families only
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantVelocity:
    """a(y) = c, trivially divergence-free; the flow projection is a itself."""

    c: tuple

    @property
    def dimension(self) -> int:
        return len(self.c)

    def component(self, axis: int, y1):
        return np.full_like(np.asarray(y1, dtype=float), self.c[axis])

    def max_abs(self, axis: int) -> float:
        return abs(self.c[axis])


@dataclass(frozen=True)
class ShearVelocity:
    """a(y) = (c1, b(y1)) in d=2; div a = 0 since each component is constant
    along its own direction, and again the projection equals a."""

    c1: float
    b: OscillatoryPotential

    dimension = 2

    def component(self, axis: int, y1):
        y1 = np.asarray(y1, dtype=float)
        if axis == 0:
            return np.full_like(y1, self.c1)
        return self.b(y1)

    def max_abs(self, axis: int) -> float:
        return abs(self.c1) if axis == 0 else self.b.bound


def require_supported_velocity(a) -> None:
    if not isinstance(a, (ConstantVelocity, ShearVelocity)):
        raise UnsupportedVelocityFamily(
            "only constant and shear velocity fields are admitted; the flow "
            "projection of a general divergence-free field has no closed form here")


# ---------------------------------------------------------------------------
# noise flow models
# ---------------------------------------------------------------------------

class _QuinticTable:
    """Two-point quintic Hermite interpolant of g with exact nodal g', g''."""

    def __init__(self, xi: Array, g: Array, d1: Array, d2: Array):
        self.xi = xi
        self.g = g
        h = np.diff(xi)
        self.h = h
        g0, g1 = g[:-1], g[1:]
        D0, D1 = d1[:-1] * h, d1[1:] * h
        S0, S1 = d2[:-1] * h**2, d2[1:] * h**2
        c0, c1, c2 = g0, D0, 0.5 * S0
        A = g1 - c0 - c1 - c2
        B = D1 - c1 - 2.0 * c2
        C = S1 - 2.0 * c2
        self.coef = np.stack([c0, c1, c2,
                              10.0 * A - 4.0 * B + 0.5 * C,
                              -15.0 * A + 7.0 * B - C,
                              6.0 * A - 3.0 * B + 0.5 * C])

    def _locate(self, x: Array):
        idx = np.clip(np.searchsorted(self.xi, x, side="right") - 1, 0, len(self.h) - 1)
        s = (x - self.xi[idx]) / self.h[idx]
        return idx, s

    def __call__(self, x: Array) -> Array:
        idx, s = self._locate(x)
        c = self.coef[:, idx]
        return ((((c[5] * s + c[4]) * s + c[3]) * s + c[2]) * s + c[1]) * s + c[0]

    def deriv(self, x: Array) -> Array:
        idx, s = self._locate(x)
        c = self.coef[:, idx]
        return (((5.0 * c[5] * s + 4.0 * c[4]) * s + 3.0 * c[3]) * s + 2.0 * c[2]) * s * 1.0 / self.h[idx] + c[1] / self.h[idx]


class TabulatedFlow:
    """Problem-1 noise model: g built by integrating g' = sigma(g), g(0) = anchor.

    g'' = h(g) exactly (h = sigma' sigma), so the table carries exact first and
    second derivatives at the nodes and the quintic interpolant keeps roundtrip
    g(g^{-1}(u)) at machine precision via Newton on the interpolant itself.
    """

    def __init__(self, sigma: Callable, h: Callable, kappa0: float,
                 u_range: tuple, anchor: float = 0.0,
                 xi_pad: float = 5.0, nodes_per_unit: int = 256, name: str = "flow"):
        self.sigma = sigma
        self.h = h
        self.kappa0 = float(kappa0)
        self.name = name
        self.u_range = (float(u_range[0]), float(u_range[1]))
        if not self.u_range[0] < self.u_range[1]:
            raise MalformedSpec("empty evaluation range")
        # xi extent: xi(u) = int du/sigma(u) from the anchor, sigma > 0
        uu = np.linspace(self.u_range[0], self.u_range[1], 20001)
        s = np.asarray(sigma(uu), dtype=float)
        if np.min(s) <= 0.0:
            raise MalformedSpec("sigma must be strictly positive for problem 1")
        inv = 1.0 / s
        xi_of_u = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(uu))])
        xi_of_u -= np.interp(anchor, uu, xi_of_u)
        xi_lo = float(xi_of_u[0]) - xi_pad
        xi_hi = float(xi_of_u[-1]) + xi_pad
        n_nodes = max(64, int(np.ceil((xi_hi - xi_lo) * nodes_per_unit))) + 1
        xi = np.linspace(xi_lo, xi_hi, n_nodes)
        self._table = self._integrate(xi, float(anchor))
        self.xi_range = (xi_lo, xi_hi)

    def _integrate(self, xi: Array, anchor: float) -> _QuinticTable:
        # classic RK4 with 4 fixed substeps per node interval; deterministic
        def sweep(y0, xs):
            out = np.empty(len(xs))
            y = y0
            for j in range(len(xs)):
                out[j] = y
                if j + 1 < len(xs):
                    hstep = (xs[j + 1] - xs[j]) / 4.0
                    for _ in range(4):
                        k1 = self.sigma(y)
                        k2 = self.sigma(y + 0.5 * hstep * k1)
                        k3 = self.sigma(y + 0.5 * hstep * k2)
                        k4 = self.sigma(y + hstep * k3)
                        y = y + hstep / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            return out

        # sweep from xi=0 (where g = anchor exactly) out to both ends
        xr = xi[xi >= 0.0]
        xl = xi[xi < 0.0][::-1]
        gr = sweep(anchor, np.concatenate([[0.0], xr])) if len(xr) else np.empty(1)
        gl = sweep(anchor, np.concatenate([[0.0], xl])) if len(xl) else np.empty(1)
        g = np.concatenate([gl[1:][::-1], gr[1:]])
        d1 = np.asarray(self.sigma(g), dtype=float)
        d2 = np.asarray(self.h(g), dtype=float)
        return _QuinticTable(xi, g, d1, d2)

    # -- flow interface ----------------------------------------------------

    def g(self, xi):
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < self.xi_range[0]) or np.any(xi > self.xi_range[1]):
            raise RangeExceeded(f"xi outside tabulated range {self.xi_range}")
        return self._table(xi)

    def g_inv(self, u):
        u = np.asarray(u, dtype=float)
        tab = self._table
        if np.any(u < tab.g[0]) or np.any(u > tab.g[-1]):
            raise RangeExceeded("u outside the image of the tabulated flow")
        xi = np.interp(u, tab.g, tab.xi)
        lo = np.full_like(xi, tab.xi[0])
        hi = np.full_like(xi, tab.xi[-1])
        tol = 1e-15 * np.maximum(1.0, np.abs(u))
        prev = None
        for _ in range(100):
            res = tab(xi) - u
            done = np.abs(res) <= tol
            if np.all(done):
                break
            if prev is not None and np.array_equal(xi, prev):
                break   # iterate pinned at the last representable float
            prev = xi
            hi = np.where(~done & (res > 0), xi, hi)
            lo = np.where(~done & (res <= 0), xi, lo)
            cand = xi - res / tab.deriv(xi)
            bad = (cand < lo) | (cand > hi) | ~np.isfinite(cand)
            xi = np.where(done, xi, np.where(bad, 0.5 * (lo + hi), cand))
        return xi

    def noise_flow(self, u, delta):
        return self.g(self.g_inv(u) + delta)


class InverseFluxFlow:
    """Problem-2 noise model derived from f1: g = f1^{-1}, shifts act on f1(u)."""

    def __init__(self, f1: FluxComponent, kappa0: float, u_range: tuple,
                 name: str = "inverse-flux flow"):
        self.f1 = f1
        self.kappa0 = float(kappa0)
        self.name = name
        self.u_range = (float(u_range[0]), float(u_range[1]))
        if not self.u_range[0] < self.u_range[1]:
            raise MalformedSpec("empty evaluation range")
        self.w_range = (float(f1.f(np.asarray(self.u_range[0]))),
                        float(f1.f(np.asarray(self.u_range[1]))))

    def sigma(self, u):
        return 1.0 / np.asarray(self.f1.df(u), dtype=float)

    def h(self, u):
        dfv = np.asarray(self.f1.df(u), dtype=float)
        return -np.asarray(self.f1.d2f(u), dtype=float) / dfv**3

    def g(self, w):
        """f1^{-1}(w) by safeguarded Newton; roundtrip f1(g(w)) = w to ~1e-15."""
        w = np.asarray(w, dtype=float)
        lo_w, hi_w = self.w_range
        if np.any(w < lo_w - 1e-12) or np.any(w > hi_w + 1e-12):
            raise RangeExceeded(f"w outside invertible range {self.w_range}")
        lo = np.full(w.shape, self.u_range[0], dtype=float)
        hi = np.full(w.shape, self.u_range[1], dtype=float)
        u = lo + (hi - lo) * (w - lo_w) / (hi_w - lo_w)
        tol = 1e-15 * np.maximum(1.0, np.abs(w))
        prev = None
        for _ in range(100):
            res = np.asarray(self.f1.f(u), dtype=float) - w
            done = np.abs(res) <= tol
            if np.all(done):
                break
            if prev is not None and np.array_equal(u, prev):
                break
            prev = u
            hi = np.where(~done & (res > 0), u, hi)
            lo = np.where(~done & (res <= 0), u, lo)
            cand = u - res / np.asarray(self.f1.df(u), dtype=float)
            bad = (cand < lo) | (cand > hi) | ~np.isfinite(cand)
            u = np.where(done, u, np.where(bad, 0.5 * (lo + hi), cand))
        return u

    def g_inv(self, u):
        return np.asarray(self.f1.f(u), dtype=float)

    def noise_flow(self, u, delta):
        return self.g(self.g_inv(u) + delta)


def unit_flow(kappa0: float, u_range=(-5.0, 5.0)) -> TabulatedFlow:
    """sigma = 1, h = 0: additive noise, g = identity."""
    return TabulatedFlow(lambda u: np.ones_like(np.asarray(u, dtype=float)),
                         lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                         kappa0, u_range, name="unit")


def sinh_flow(kappa0: float, u_range=(-5.0, 5.0)) -> TabulatedFlow:
    """sigma = sqrt(1+u^2), h = u: the flow primitive is sinh."""
    return TabulatedFlow(lambda u: np.sqrt(1.0 + np.asarray(u, dtype=float) ** 2),
                         lambda u: np.asarray(u, dtype=float),
                         kappa0, u_range, name="sinh")


SIGMA_REGISTRY = {
    "unit": unit_flow,
    "sinh": sinh_flow,
}


# ---------------------------------------------------------------------------
# problem specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Uniform grid on [-L, L)^d."""

    d: int
    L: float
    n: int
    boundary: str = "periodic"          # periodic | farfield
    u_left: Optional[float] = None
    u_right: Optional[float] = None

    def __post_init__(self):
        if self.d not in (1, 2):
            raise MalformedSpec("dimension must be 1 or 2")
        if self.boundary not in ("periodic", "farfield"):
            raise MalformedSpec(f"unknown boundary mode {self.boundary!r}")
        if self.boundary == "farfield" and (self.u_left is None or self.u_right is None):
            raise MalformedSpec("farfield boundary needs u_left and u_right")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    def centers(self) -> Array:
        return -self.L + (np.arange(self.n) + 0.5) * self.dx

    def faces(self) -> Array:
        return -self.L + np.arange(self.n + 1) * self.dx


@dataclass(frozen=True)
class TransportProblem:
    """Problem 1: du + a(x/eps) . grad f(u) dt = k0 sigma(u) dW + k0^2/2 h(u) dt."""

    flux: ScalarFlux
    velocity: object
    flow: TabulatedFlow
    box: Box
    epsilon: float
    T: float
    U0: Callable        # U0(x_tuple, y_tuple) -> array
    variant: str = "p1"

    @property
    def kappa0(self) -> float:
        return self.flow.kappa0

    def initial_field(self) -> Array:
        xs = _grid_tuple(self.box)
        ys = tuple(x / self.epsilon for x in xs)
        return np.asarray(self.U0(xs, ys), dtype=float)

    def alpha_bounds(self):
        u0 = self.initial_field()
        return (float(self.flow.g_inv(np.min(u0))), float(self.flow.g_inv(np.max(u0))))


@dataclass(frozen=True)
class StiffSourceProblem:
    """Problem 2: du + div f(u) dt = (1/eps) V'(x1/eps) dt + noise from f1."""

    flux: ScalarFlux
    V: OscillatoryPotential
    flow: InverseFluxFlow
    box: Box
    epsilon: float
    T: float
    v0: Callable        # v0(x_tuple) -> array
    variant: str = "p2"

    @property
    def kappa0(self) -> float:
        return self.flow.kappa0

    def initial_field(self) -> Array:
        xs = _grid_tuple(self.box)
        return np.asarray(self.flow.g(self.V(xs[0] / self.epsilon) + self.v0(xs)), dtype=float)

    def alpha_bounds(self):
        xs = _grid_tuple(self.box)
        v = np.asarray(self.v0(xs), dtype=float)
        return (float(np.min(v)), float(np.max(v)))


def _grid_tuple(box: Box):
    x = box.centers()
    if box.d == 1:
        return (x,)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    return (x1, x2)


# ---------------------------------------------------------------------------
# special solutions and the exact noise map
# ---------------------------------------------------------------------------

def special_solution_p1(alpha: float, t: float, W_t: float, model) -> float:
    """psi_alpha(t) = g(alpha + kappa0 W(t)); spatially constant."""
    return float(model.g(np.asarray(alpha + model.kappa0 * W_t)))


def special_solution_p2(alpha: float, y, t: float, W_t: float, spec: StiffSourceProblem):
    """g(V(y) + kappa0 W(t) + alpha) for the stiff-source problem."""
    out = spec.flow.g(spec.V(y) + spec.kappa0 * W_t + alpha)
    return float(out) if np.ndim(y) == 0 else out


def noise_flow(u, delta, model):
    """Exact solution map over noise increment delta = kappa0 * dW."""
    return model.noise_flow(u, delta)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, residual, detail=""):
        self.checks.append(CheckResult(name, bool(passed), float(residual), detail))

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: residual={c.residual:.3e} {c.detail}")
        return "\n".join(lines)


def _sigma_prime_fd(sigma, u, h=1e-4):
    # 4th-order central difference; coefficients (1, -8, 8, -1)/12h
    return (sigma(u - 2 * h) - 8 * sigma(u - h) + 8 * sigma(u + h) - sigma(u + 2 * h)) / (12 * h)


def validate_problem(spec) -> ValidationReport:
    """Sampled verification of every model invariant; deterministic."""
    rep = ValidationReport()
    flux = spec.flux
    lo, hi = flux.evaluation_range
    if not lo < hi:
        raise MalformedSpec("empty evaluation range")
    u = np.linspace(lo, hi, 1001)

    if spec.variant == "p2":
        if flux.delta0 is None or flux.delta0 <= 0:
            raise MalformedSpec("problem 2 requires delta0 > 0")
        df1 = np.asarray(flux.f1.df(u), dtype=float)
        rep.add("f1' >= delta0", np.min(df1) >= flux.delta0 - 1e-12,
                max(0.0, flux.delta0 - float(np.min(df1))))
        for k, comp in enumerate(flux.components[1:], start=2):
            dk = np.asarray(comp.df(u), dtype=float)
            rep.add(f"f{k}' >= 0", np.min(dk) >= -1e-12, max(0.0, -float(np.min(dk))))
        sig = spec.flow.sigma(u)
        res_s = np.max(np.abs(sig * df1 - 1.0))
        rep.add("sigma = 1/f1'", res_s <= 1e-8, res_s)
        hh = spec.flow.h(u)
        res_h = np.max(np.abs(hh * df1**3 + np.asarray(flux.f1.d2f(u), dtype=float)))
        rep.add("h = -f1''/f1'^3", res_h <= 1e-8 * max(1.0, np.max(np.abs(df1))**3), res_h)
        # flow roundtrip on the shift range
        w = np.linspace(spec.flow.w_range[0], spec.flow.w_range[1], 501)
        gw = spec.flow.g(w)
        res_rt = np.max(np.abs(spec.flow.g_inv(gw) - w))
        rep.add("f1(g(w)) = w", res_rt <= 1e-10 * max(1.0, np.max(np.abs(w))), res_rt)
    else:
        sig = np.asarray(spec.flow.sigma(u), dtype=float)
        rep.add("sigma > 0", np.min(sig) > 0.0, max(0.0, -float(np.min(sig))))
        hh = np.asarray(spec.flow.h(u), dtype=float)
        res_h = float(np.max(np.abs(_sigma_prime_fd(spec.flow.sigma, u) * sig - hh)))
        rep.add("h = sigma' sigma", res_h <= 1e-8 * max(1.0, float(np.max(np.abs(hh)))) + 1e-7,
                res_h, "(sigma' by finite differences)")
        crit = flux.f1.critical_points(lo, hi)
        rep.add("zero set of f' finite", len(crit) <= 16, float(len(crit)),
                f"critical points: {np.round(crit, 6).tolist()}")
        xi = np.linspace(spec.flow.xi_range[0] + 0.1, spec.flow.xi_range[1] - 0.1, 501)
        gxi = spec.flow.g(xi)
        res_g = np.max(np.abs(spec.flow._table.deriv(xi) - spec.flow.sigma(gxi)))
        rep.add("g' = sigma(g)", res_g <= 1e-6 * max(1.0, float(np.max(np.abs(spec.flow.sigma(gxi))))),
                float(res_g))
        res_rt = np.max(np.abs(spec.flow.g_inv(gxi) - xi))
        rep.add("g_inv(g(xi)) = xi", res_rt <= 1e-10 * max(1.0, float(np.max(np.abs(xi)))), float(res_rt))
        require_supported_velocity(spec.velocity)
        rep.add("velocity family supported (div a = 0, projection = a)", True, 0.0)

    V = getattr(spec, "V", None)
    if V is None and spec.variant == "p1" and isinstance(spec.velocity, ShearVelocity):
        V = spec.velocity.b
    if V is not None:
        z = np.linspace(0.0, 3.0, 301)
        rep.add("|V| bounded by sum of amplitudes",
                np.max(np.abs(V(z))) <= V.bound + 1e-12,
                max(0.0, float(np.max(np.abs(V(z))) - V.bound)))
        if V.kind == "periodic":
            P = V.period
            res_p = float(np.max(np.abs(V(z + P) - V(z))))
            rep.add("V periodic", res_p <= 1e-12 * max(1.0, V.bound), res_p)

    a1, a2 = spec.alpha_bounds()
    rep.add("initial data sandwiched by special solutions",
            np.isfinite(a1) and np.isfinite(a2) and a1 <= a2, 0.0,
            f"alpha in [{a1:.6g}, {a2:.6g}]")
    return rep
