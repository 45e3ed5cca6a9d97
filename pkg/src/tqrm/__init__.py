"""Tripartite quantum Rabi model: two spins and one boson coupled through g(a + a^+) sz1 sz2.

Submodules: ``model`` (parameters and Hamiltonians), ``spectra`` (exact
diagonalization), ``gfunction`` (analytic spectrum from displaced-basis
recursions), ``meanfield``, ``phonon`` (reduced phonon states and measures),
``physparams`` (trapped-ion mapping) and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    NonConvergence,
    NonConvergentSeries,
    NotAState,
    ParameterError,
    PoleProximity,
    ResonantCase,
    SectorUnavailable,
    SeedUnderflow,
    SweepError,
    TQRMError,
    TruncationCeiling,
    TruncationWarning,
    ZeroCoupling,
)
from .model import FockTruncation, Frame, ModelParams, Sector  # noqa: E402

__all__ = [
    "FockTruncation",
    "Frame",
    "ModelParams",
    "NonConvergence",
    "NonConvergentSeries",
    "NotAState",
    "ParameterError",
    "PoleProximity",
    "ResonantCase",
    "Sector",
    "SectorUnavailable",
    "SeedUnderflow",
    "SweepError",
    "TQRMError",
    "TruncationCeiling",
    "TruncationWarning",
    "ZeroCoupling",
    "__version__",
]
