"""Standing waves of the 1D nonlinear Klein-Gordon equation with delta potentials.

Closed-form wave construction, slope-based stability classification,
finite-difference spectra of the linearization and time integration of the
full nonlinear flow.
"""

from .exceptions import (
    BadGrid,
    DomainError,
    KGDeltaError,
    MuTooSmall,
    NoContraction,
    NoSignChange,
    NotAdmissible,
    PoleAtOne,
    SingularSystem,
    SolverFailed,
    StencilOutOfRange,
)
from .model import ModelParams, Verdict, WaveSpec, classify

__version__ = "0.1.0"

__all__ = [
    "BadGrid",
    "DomainError",
    "KGDeltaError",
    "ModelParams",
    "MuTooSmall",
    "NoContraction",
    "NoSignChange",
    "NotAdmissible",
    "PoleAtOne",
    "SingularSystem",
    "SolverFailed",
    "StencilOutOfRange",
    "Verdict",
    "WaveSpec",
    "classify",
]
