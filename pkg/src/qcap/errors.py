"""Exception types raised by the solvers and loaders."""


class QcapError(Exception):
    """Base class for library errors."""


class NotHermitianError(QcapError, ValueError):
    """A matrix deviates from Hermitian symmetry beyond tolerance."""


class InvalidDensityMatrix(QcapError, ValueError):
    """A matrix fails the trace or positivity checks of a density matrix."""


class EigenDecompositionError(QcapError, ArithmeticError):
    """The Hermitian eigensolver failed to converge."""


class ExponentOverflow(QcapError, OverflowError):
    """A base-2 matrix exponential was requested with an exponent too large."""


class RegularityViolation(QcapError, ValueError):
    """Some channel output has a (numerically) vanishing eigenvalue.

    The dual ball radius depends on ``log(1/gamma)``, so the solvers refuse
    such channels. Mix in a little white noise first (``perturb``).
    """

    def __init__(self, gamma: float, floor: float):
        self.gamma = gamma
        self.floor = floor
        super().__init__(
            f"minimum output eigenvalue gamma={gamma:.3e} is below the regularity "
            f"floor {floor:.0e}; perturb the channel towards the maximally mixed "
            f"state (e.g. --perturb 1e-10) and account for the capacity shift"
        )


class ConstraintSolveFailure(QcapError, ArithmeticError):
    """The one-dimensional multiplier search for the cost constraint failed."""


class InvalidChoi(QcapError, ValueError):
    """A Choi matrix is not a valid channel representation.

    ``checks`` maps each check name to a ``(passed, detail)`` pair.
    """

    def __init__(self, message: str, checks: dict | None = None):
        self.checks = dict(checks or {})
        super().__init__(message)


class InfeasibleConstraint(QcapError, ValueError):
    """No input distribution satisfies the cost budget."""
