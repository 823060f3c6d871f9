"""Exception types shared across the package.

The CLI maps these onto exit codes, so they are grouped by the stage that
raises them (configuration, ingestion, physics/synthesis).
"""


class WidescanError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(WidescanError, ValueError):
    """Invalid run configuration or invalid parameter combination."""


class IngestError(WidescanError, ValueError):
    """Malformed Touchstone or pattern-grid input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(WidescanError, ValueError):
    """Array sizes do not agree (excitations vs. scattering matrix vs. geometry)."""


class SingularExcitationError(WidescanError, ZeroDivisionError):
    """Active reflection coefficient requested for an element with zero incident wave."""


class ZeroInputPowerError(WidescanError, ZeroDivisionError):
    """Reflected power fraction requested for an all-zero excitation."""


class ZeroPowerDensityError(WidescanError, ZeroDivisionError):
    """The array radiates no power towards the scan direction."""


class CoverageError(WidescanError, ValueError):
    """A direction falls outside the tabulated element-pattern grid."""


class EmptyArchiveError(WidescanError, ValueError):
    pass


class SweepError(WidescanError, RuntimeError):
    """One or more scan angles failed during a sweep.

    ``failures`` maps the 0-based scan index to the exception raised there.
    """

    def __init__(self, failures):
        self.failures = dict(failures)
        listed = ", ".join(f"q={q}: {exc!r}" for q, exc in sorted(self.failures.items()))
        super().__init__(f"{len(self.failures)} scan angle(s) failed: {listed}")
