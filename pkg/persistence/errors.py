"""
Error types shared by the samplers, kernels, oracles and the experiment runner
"""


class PersistenceError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(PersistenceError, ValueError):
    """Invalid or incompatible experiment / process / functional configuration"""


class DegeneratePathError(PersistenceError, ValueError):
    """Empty grids, zero-step walks, duplicate or decreasing times"""


class FactorizationError(PersistenceError, RuntimeError):
    """Covariance matrix is not positive semidefinite even after clipping"""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(f"{message} (offending eigenvalue {eigenvalue:.3e})")
        self.eigenvalue = eigenvalue


class KernelDomainError(PersistenceError, ValueError):
    """Kernel evaluated outside (0, inf) or a convolution outside the path support"""


class ContractViolation(PersistenceError, RuntimeError):
    """A declared bound (kernel envelope, monotonicity audit) does not hold"""


class UnknownExponentError(PersistenceError, LookupError):
    """No reference value is known for the requested exponent"""


class InsufficientDataError(PersistenceError, ValueError):
    """Too few points or zero survival counts; increase trials"""


class StoreError(PersistenceError, OSError):
    """Results store missing or not writable"""


class DegenerateBarrierWarning(UserWarning):
    """Barrier starts at or below the process start; probability is trivially zero"""
