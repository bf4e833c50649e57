"""Exception and warning types shared across the package."""


class KposimError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(KposimError, ValueError):
    """Fock truncation is too small or otherwise unusable."""


class ContractViolationError(KposimError, ValueError):
    """An input failed a numerical precondition (Hermiticity, unitarity, ...)."""


class UnsupportedRegimeError(KposimError, ValueError):
    """Parameters fall outside the regime the model supports (e.g. K <= 0)."""


class NoSolutionError(KposimError, ValueError):
    """A parameter inversion has no solution (e.g. g3 = 0)."""


class ConvergenceError(KposimError, RuntimeError):
    """An iterative procedure failed to converge."""


class IntegratorFailureError(KposimError, RuntimeError):
    """Propagator lost unitarity beyond the allowed residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ReferenceUndefinedError(KposimError, RuntimeError):
    """No Floquet mode qualifies as the quasienergy reference."""


class DomainTooSmallError(KposimError, ValueError):
    """Phase-space grid does not capture enough of the state's mass."""


class ParamFileError(KposimError, ValueError):
    """Parameter file is malformed or contains unknown keys."""


class TruncationWarning(UserWarning):
    """State or operator is not safely representable at the current truncation."""
