"""Exception and warning types shared across the package."""


class TQRMError(Exception):
    """Base class for numerical and domain failures raised by tqrm."""


class ParameterError(TQRMError, ValueError):
    pass


class SectorUnavailable(TQRMError):
    """A resonant-only sector was requested with nonzero detuning."""


class NonConvergence(TQRMError):
    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class TruncationCeiling(TQRMError):
    """Fock cutoff doubling hit the hard cap before the energy settled."""


class PoleProximity(TQRMError):
    def __init__(self, message, m=None, E=None):
        super().__init__(message)
        self.m = m
        self.E = E


class ZeroCoupling(TQRMError):
    """The Bogoliubov recursions divide by g; use exact diagonalization."""


class ResonantCase(TQRMError):
    """At zero detuning the G-function vanishes identically."""


class SeedUnderflow(TQRMError):
    pass


class NonConvergentSeries(TQRMError):
    def __init__(self, message, E=None, M=None):
        super().__init__(message)
        self.E = E
        self.M = M


class NotAState(TQRMError, ValueError):
    """Input is not a trace-one positive semidefinite matrix."""


class SweepError(TQRMError):
    def __init__(self, g, cause):
        super().__init__(f"g={g!r}: {cause}")
        self.g = g
        self.cause = cause


class TruncationWarning(UserWarning):
    pass
