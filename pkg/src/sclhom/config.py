"""Config parsing: sectioned key-value text (or JSON with the same schema).

Sections: [problem], [flux], [noise], [oscillation], [grid], [scheme], [sweep],
[output]. Values are scalars only; no nesting. Parse errors carry line numbers;
a parsed config is validated through validate_problem before use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError, ValidationError
from .fv import SchemeConfig
from .models import (Box, FLUX_REGISTRY, POTENTIAL_REGISTRY, SIGMA_REGISTRY,
                     ConstantVelocity, InverseFluxFlow, OscillatoryPotential,
                     ScalarFlux, ShearVelocity, StiffSourceProblem,
                     TransportProblem, validate_problem)

KNOWN_SECTIONS = ("problem", "flux", "noise", "oscillation", "grid", "scheme",
                  "sweep", "output")


def _parse_sectioned(text: str) -> dict:
    sections: dict = {}
    lines_of: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in KNOWN_SECTIONS:
                raise ParseError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            lines_of.setdefault(current, {})
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ParseError(f"line {lineno}: key outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in sections[current]:
            raise ParseError(
                f"duplicate key '{key}' in [{current}]: lines "
                f"{lines_of[current][key]} and {lineno}")
        sections[current][key] = value
        lines_of[current][key] = lineno
    return sections


def _parse_json(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}: {e.msg}") from e
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object of sections")
    out = {}
    for sec, body in obj.items():
        if sec not in KNOWN_SECTIONS:
            raise ParseError(f"unknown section {sec!r}")
        if not isinstance(body, dict):
            raise ParseError(f"section {sec!r} must be an object")
        out[sec] = {str(k): str(v) for k, v in body.items()}
    return out


@dataclass
class RunConfig:
    """Typed view of a parsed config plus the canonical echo used in manifests."""

    sections: dict
    problem: object
    scheme: SchemeConfig
    eps_list: tuple
    seeds: tuple
    observation_times: tuple
    n_paths: int
    out_dir: Optional[str]

    def canonical(self) -> str:
        lines = []
        for sec in sorted(self.sections):
            for key in sorted(self.sections[sec]):
                lines.append(f"{sec}.{key} = {self.sections[sec][key]}")
        return "\n".join(lines) + "\n"


def _get(sections, sec, key, default=None, required=False):
    val = sections.get(sec, {}).get(key)
    if val is None:
        if required:
            raise ValidationError(f"missing required key [{sec}] {key}")
        return default
    return val


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _build_v0(name: str, amplitude: float, alpha: float, L: float):
    if name == "constant":
        return lambda xs: np.full_like(xs[0], alpha)
    if name == "sine":
        return lambda xs: alpha + amplitude * np.sin(np.pi * xs[0] / L)
    if name == "bump":
        def v0(xs):
            x = xs[0] / (0.6 * L)
            out = np.full_like(x, alpha)
            m = np.abs(x) < 1.0
            out[m] += amplitude * np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
            return out
        return v0
    raise ValidationError(f"unknown initial profile {name!r}; "
                          "choose constant | sine | bump")


def build_problem(sections: dict):
    """Construct and validate the problem described by the config sections."""
    variant = _get(sections, "problem", "variant", required=True)
    if variant not in ("p1", "p2"):
        raise ValidationError(f"variant must be p1 or p2, got {variant!r}")
    d = int(_get(sections, "problem", "dimension", "1"))
    eps = float(_get(sections, "problem", "epsilon", "0.125"))
    kappa0 = float(_get(sections, "problem", "kappa0", "0.5"))
    T = float(_get(sections, "problem", "T", "0.5"))
    alpha = float(_get(sections, "problem", "alpha", "0.0"))
    L = float(_get(sections, "grid", "L", "1.0"))
    n = int(_get(sections, "grid", "n", "256"))
    boundary = _get(sections, "grid", "boundary", "periodic")
    u_left = _get(sections, "grid", "u_left")
    u_right = _get(sections, "grid", "u_right")
    box = Box(d, L, n, boundary,
              None if u_left is None else float(u_left),
              None if u_right is None else float(u_right))

    f1_name = _get(sections, "flux", "f1", "linear")
    if f1_name not in FLUX_REGISTRY:
        raise ValidationError(f"unknown flux {f1_name!r}")
    comps = [FLUX_REGISTRY[f1_name]()]
    if d == 2:
        f2_name = _get(sections, "flux", "f2", "linear")
        if f2_name not in FLUX_REGISTRY:
            raise ValidationError(f"unknown flux {f2_name!r}")
        comps.append(FLUX_REGISTRY[f2_name]())
    u_min = float(_get(sections, "flux", "u_min", "-3.0"))
    u_max = float(_get(sections, "flux", "u_max", "3.0"))
    if not u_min < u_max:
        raise ValidationError("empty evaluation range: need u_min < u_max")
    delta0_raw = _get(sections, "flux", "delta0")
    delta0 = None if delta0_raw is None else float(delta0_raw)

    v_name = _get(sections, "oscillation", "V", "sin")
    if v_name not in POTENTIAL_REGISTRY:
        raise ValidationError(f"unknown potential {v_name!r}")
    amp = float(_get(sections, "oscillation", "amplitude", "1.0"))
    V = POTENTIAL_REGISTRY[v_name]() if v_name != "sin" else POTENTIAL_REGISTRY[v_name](amp)

    profile = _get(sections, "problem", "v0", "constant")
    profile_amp = float(_get(sections, "problem", "v0_amplitude", "0.25"))
    v0 = _build_v0(profile, profile_amp, alpha, L)

    if variant == "p2":
        if delta0 is None:
            raise ValidationError(
                "problem 2 requires the lower bound delta0 for f1' in [flux]")
        flux = ScalarFlux(tuple(comps), (u_min, u_max), delta0)
        flow = InverseFluxFlow(flux.f1, kappa0, flux.evaluation_range)
        problem = StiffSourceProblem(flux, V, flow, box, eps, T, v0)
    else:
        flux = ScalarFlux(tuple(comps), (u_min, u_max), delta0)
        sigma_name = _get(sections, "noise", "sigma", "unit")
        if sigma_name not in SIGMA_REGISTRY:
            raise ValidationError(f"unknown noise model {sigma_name!r}")
        flow = SIGMA_REGISTRY[sigma_name](kappa0, (u_min, u_max))
        family = _get(sections, "problem", "velocity", "constant")
        if family == "constant":
            cvals = _floats(_get(sections, "problem", "velocity_c", "1.0"))
            velocity = ConstantVelocity(tuple(cvals[:d]) if len(cvals) >= d
                                        else tuple(cvals) + (0.0,) * (d - len(cvals)))
        elif family == "shear":
            velocity = ShearVelocity(float(_get(sections, "problem", "velocity_c1", "0.0")), V)
        else:
            raise ValidationError(f"unknown velocity family {family!r}")

        def U0(xs, ys, a=alpha, pa=profile_amp, prof=profile):
            base = _build_v0(prof, pa, 0.0, L)(xs)
            return flow.g(np.asarray(a + base))

        problem = TransportProblem(flux, velocity, flow, box, eps, T, U0)
    return problem


def config_from_text(text: str) -> RunConfig:
    """Parse a config from an in-memory string (same format as files)."""
    if text.lstrip().startswith("{"):
        sections = _parse_json(text)
    else:
        sections = _parse_sectioned(text)
    problem = build_problem(sections)
    report = validate_problem(problem)
    if not report.passed:
        raise ValidationError("problem validation failed:\n" + report.summary())
    scheme = SchemeConfig(
        flux_kind=_get(sections, "scheme", "flux_kind", "godunov"),
        cfl=float(_get(sections, "scheme", "cfl", "0.9")),
        eps_visc=float(_get(sections, "scheme", "eps_visc", "0.0")),
        well_balanced=_get(sections, "scheme", "well_balanced", "on") in ("on", "true", "1"),
    )
    eps_list = _floats(_get(sections, "sweep", "eps_list", "0.125,0.0625,0.03125"))
    seeds = _ints(_get(sections, "sweep", "seeds", "1,2,3"))
    times = _floats(_get(sections, "sweep", "times", f"{problem.T/2},{problem.T}"))
    n_paths = int(_get(sections, "sweep", "paths", "16"))
    return RunConfig(sections, problem, scheme, eps_list, seeds, times, n_paths,
                     _get(sections, "output", "out_dir"))


def parse_config(path) -> RunConfig:
    """Parse, build, and validate; raises ParseError / ValidationError."""
    return config_from_text(Path(path).read_text())
