"""Semantic exception hierarchy for the cdfdr package."""

from __future__ import annotations


class CdfdrError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CdfdrError, ValueError):
    """Input outside the mathematical domain of a function."""


class InsufficientDataError(CdfdrError, ValueError):
    """Sample too small for the requested estimator."""


class DegenerateSampleError(CdfdrError, ValueError):
    """Sample carries no usable variation (e.g. all values identical)."""


class EstimationError(CdfdrError, RuntimeError):
    """A numerical estimation step could not produce a result."""


class ConfigError(CdfdrError, ValueError):
    """Invalid configuration: null specification, CLI flags, design parameters."""


class InputError(CdfdrError, ValueError):
    """Malformed input data (CSV parsing, out-of-range values)."""


class PipelineError(CdfdrError, RuntimeError):
    """Failure inside the fitting pipeline, labeled with the step that failed."""

    def __init__(self, step: str, message: str):
        self.step = step
        super().__init__(f"{step}: {message}")


class SimulationError(CdfdrError, RuntimeError):
    """Simulation harness failure (e.g. too many replicate fits failed)."""
