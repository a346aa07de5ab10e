"""Exception hierarchy shared by all modules."""


class LindsectorError(Exception):
    """Base class for all package errors."""


class ParameterError(LindsectorError, ValueError):
    """A physical parameter or grid is outside its allowed range."""


class SectorError(LindsectorError, ValueError):
    """A requested symmetry sector does not exist for the cutoff."""


class OracleGuardError(LindsectorError):
    """The dense full-superoperator oracle was requested above its size guard."""


class EigensolverError(LindsectorError):
    """Dense eigendecomposition failed to converge."""

    def __init__(self, message, k=None, params=None):
        super().__init__(message)
        self.k = k
        self.params = params


class TruncationError(LindsectorError):
    """Steady state or initial state has too much weight at the Fock cutoff."""

    def __init__(self, message, tail_weight=None, n_max=None):
        super().__init__(message)
        self.tail_weight = tail_weight
        self.n_max = n_max


class PropagationError(LindsectorError):
    """Sector time evolution produced non-finite values."""


class FrequencyError(LindsectorError):
    """Too few zero crossings to estimate an oscillation frequency."""
