"""Exception types raised by the library."""


class KreinError(Exception):
    """Base class for all library errors."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class SymmetryViolation(KreinError, ValueError):
    def __init__(self, message, deviations=None):
        super().__init__(message)
        self.deviations = dict(deviations or {})

    def to_dict(self):
        out = super().to_dict()
        out["deviations"] = {str(k): v for k, v in self.deviations.items()}
        return out


class SingularLeadingCoefficient(KreinError, ValueError):
    pass


class LinearizationFailure(KreinError, RuntimeError):
    pass


class NotImaginary(KreinError, ValueError):
    pass


class NotSemiSimple(KreinError, ValueError):
    pass


class EmptySubspace(KreinError, ValueError):
    pass


class ProjectedSingular(KreinError, ArithmeticError):
    pass


class ComplementSingular(KreinError, ArithmeticError):
    pass


class SingularConstraint(KreinError, ArithmeticError):
    pass


class KernelMapViolation(KreinError, ValueError):
    pass


class NewtonDivergence(KreinError, RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual

    def to_dict(self):
        out = super().to_dict()
        out["residual"] = self.residual
        return out


class ResonanceDetected(KreinError, ValueError):
    pass


class WrongBranch(KreinError, RuntimeError):
    pass


class PulseCollapse(KreinError, RuntimeError):
    pass


class OutOfRange(KreinError, ValueError):
    pass


class NegativeD2(KreinError, ValueError):
    pass


class ConfigInvalid(KreinError, ValueError):
    pass


class NearZeroEigenvalue(UserWarning):
    """Some eigenvalue sits inside the zero window, so a count is ambiguous."""


class SolverError(KreinError, RuntimeError):
    """Wraps a library error raised while running a CLI scenario."""

    def __init__(self, cause: KreinError):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause

    def to_dict(self):
        out = super().to_dict()
        out["cause"] = self.cause.to_dict()
        return out
