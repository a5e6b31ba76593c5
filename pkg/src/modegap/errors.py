"""Exception hierarchy shared by every module.

Exit-code mapping in the CLI: ConfigError/ParameterError/ResolutionError are
input problems (exit 2), everything else derived from ModelError is a
numeric/model failure (exit 1).
"""


class WorkbenchError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(WorkbenchError, ValueError):
    """An input value violates a documented invariant."""


class ConfigError(WorkbenchError, ValueError):
    """A config document is malformed (unknown key, bad type, bad JSON)."""


class ResolutionError(ParameterError):
    """Grid pitch too coarse for the requested geometry."""


class ModelError(WorkbenchError):
    """Base class for numeric/model failures (CLI exit code 1)."""


class InstabilityError(ModelError):
    """Field blow-up detected during time stepping."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"field instability detected at step {step}")


class NoResonanceError(ModelError):
    """Spectral scan found no peak above the noise floor."""


class MultimodeError(ModelError):
    """Ringdown envelope is non-monotone (beating between modes)."""


class DecayFitError(ModelError):
    """Ringdown envelope fit quality below threshold."""


class FluxSignError(ModelError):
    """Net outward flux is non-positive (box too small or inside the PML)."""


class DegenerateFitError(ModelError):
    """Spectrum carries no usable structure (flat data)."""


class UnidentifiableError(ModelError):
    """Anticrossing fit cannot be identified (detuning never changes sign)."""
