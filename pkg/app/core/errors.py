"""Exception hierarchy shared by every module of the laboratory.

Each class carries the process exit code used by the CLI.
"""


class LabError(Exception):
    """Base class for all laboratory errors"""

    exit_code = 3


class ConfigError(LabError):
    """Invalid run configuration or environment"""

    exit_code = 2


class NumericalError(LabError):
    """A numerical stage could not produce a trustworthy result"""

    exit_code = 3


class DomainError(NumericalError):
    """Argument outside the domain where the object is defined"""


class StabilityError(NumericalError):
    """Solver blew up, produced NaN or underflowed its step size"""


class OutOfSlabError(NumericalError):
    """Query outside the stored space-time slab of a field"""


class RootError(NumericalError):
    """The eikonal root near -1 could not be isolated"""


class CrossingError(NumericalError):
    """Two characteristics crossed: seed ordering lost at some time"""


class DegenerateError(NumericalError):
    """Null generator has non-positive time component"""


class FrameDriftError(NumericalError):
    """Transported frame violates the null-frame products beyond tolerance"""


class StencilError(NumericalError):
    """Neighbouring geodesics or samples needed by a stencil are missing"""


class CoverageError(NumericalError):
    """A table, sheet or profile does not cover the requested point"""


class FitError(NumericalError):
    """Limit fit failed or showed no convergence"""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance"""


class ArtifactError(LabError):
    """Reading or writing an artifact failed"""

    exit_code = 3


class AcceptanceError(LabError):
    """A hard acceptance invariant failed"""

    exit_code = 4


class BlowupDetected(LabError):
    """Finite-time blowup of a comparison model.

    Expected for the Burgers and Riccati models; carries the estimated time.
    """

    exit_code = 3

    def __init__(self, model: str, s_star: float, message: str | None = None):
        self.model = model
        self.s_star = s_star
        super().__init__(message or f"{model} blowup at s* = {s_star:.6g}")


class StageError(LabError):
    """Wraps an error with the pipeline stage it happened in"""

    def __init__(self, stage: str, error: Exception):
        self.stage = stage
        self.error = error
        self.exit_code = getattr(error, "exit_code", 3)
        super().__init__(f"[{stage}] {type(error).__name__}: {error}")
