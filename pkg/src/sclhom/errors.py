"""Exception types shared across the package."""


class SclhomError(Exception):
    """Base class for all package errors."""


class MalformedSpec(SclhomError):
    """Problem specification is structurally invalid (empty range, bad delta0, ...)."""


class RangeExceeded(SclhomError):
    """An argument left the tabulated/invertible range of a flow map."""


class LevelTooDeep(SclhomError):
    """Requested dyadic level exceeds the supported maximum."""


class IndexOutOfRange(SclhomError):
    """Dyadic increment index outside [0, 2^level)."""


class NoConvergence(SclhomError):
    """Quasi-periodic mean value bracket failed to shrink below tolerance."""


class OutOfRange(SclhomError):
    """Target value not in the image of the averaged equilibrium map."""


class UnknownKind(SclhomError):
    """Unknown numerical flux kind."""


class CFLViolation(SclhomError):
    """Time step violates the CFL stability bound."""


class StabilityViolation(SclhomError):
    """Time step violates the explicit diffusion stability bound."""


class UnsupportedVelocityFamily(SclhomError):
    """Velocity field outside the constant/shear families."""


class GridMismatch(SclhomError):
    """Two fields do not share box, resolution, or time."""


class ResolutionTooCoarse(SclhomError):
    """Grid does not resolve the fast scale well enough for two-scale binning."""


class MissingStepData(SclhomError):
    """Trajectory lacks the per-step records needed by a diagnostic."""


class InsufficientPaths(SclhomError):
    """Monte Carlo statistic requested with too few sample paths."""


class UnsupportedTestFunction(SclhomError):
    """Test function is not compactly supported in [0, T) x box."""


class GridTooNarrow(SclhomError):
    """xi-grid does not cover the values being compared."""


class ParseError(SclhomError):
    """Config file could not be parsed; message carries line numbers."""


class ValidationError(SclhomError):
    """Config parsed but the resulting problem failed validation."""


class UnknownExperiment(SclhomError):
    """Experiment name not in the registry."""
