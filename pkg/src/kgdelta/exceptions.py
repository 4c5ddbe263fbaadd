"""Exception hierarchy shared by every kgdelta module."""


class KGDeltaError(Exception):
    """Base class for all library errors."""


class DomainError(KGDeltaError, ValueError):
    """A parameter lies outside its admissible domain.

    ``field`` names the offending parameter so callers (and the CLI) can
    report which flag was wrong.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NotAdmissible(KGDeltaError, ValueError):
    """No localized standing wave exists for this frequency."""


class StencilOutOfRange(KGDeltaError, ValueError):
    """A finite-difference stencil would leave the admissible frequency set."""


class NoSignChange(KGDeltaError, ValueError):
    """A root bracket does not straddle a sign change."""


class BadGrid(KGDeltaError, ValueError):
    pass


class MuTooSmall(KGDeltaError, ValueError):
    pass


class PoleAtOne(KGDeltaError, ZeroDivisionError):
    pass


class SingularSystem(KGDeltaError, ArithmeticError):
    pass


class SolverFailed(KGDeltaError, RuntimeError):
    pass


class NoContraction(KGDeltaError, RuntimeError):
    """Picard iterates failed to contract; ``norms`` holds the trajectory."""

    def __init__(self, message, norms=()):
        self.norms = list(norms)
        super().__init__(message)
