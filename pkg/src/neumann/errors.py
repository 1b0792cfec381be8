"""Exception hierarchy shared across the package."""


class NeumannError(Exception):
    """Base class for all package errors."""


class ConfigError(NeumannError):
    """Invalid user configuration (bad spectrum, malformed file, ...)."""


class OffManifoldError(NeumannError):
    """Phase point violates the sphere/tangency constraints beyond tolerance."""


class SingularStratumError(NeumannError):
    """Operation requested on a singular stratum where regular coordinates fail."""


class NumericalFailure(NeumannError):
    """A numerical procedure did not converge or detected an ill-posed input."""


class BlowUpDetected(NumericalFailure):
    """Reduced motion with negative coupling escaped to infinity in finite time."""

    def __init__(self, time, message=""):
        self.time = time
        super().__init__(message or f"solution blow-up detected at t={time:.6g}")
