"""Exception hierarchy shared by every module."""


class OneVsTwoError(Exception):
    """Base class for all library errors."""


class DomainError(OneVsTwoError, ValueError):
    """An argument lies outside the domain where the model is defined."""


class QuadratureFailure(OneVsTwoError, ArithmeticError):
    """Adaptive quadrature did not reach its tolerance within the panel budget."""


class OptimizationFailure(OneVsTwoError, ArithmeticError):
    """Scalar minimization failed or its objective was inconsistent."""


class InvalidPsf(DomainError):
    """Base class for point-spread-function validation failures."""


class AsymmetricPsf(InvalidPsf):
    pass


class NotNormalized(InvalidPsf):
    pass


class ComplexAmplitude(InvalidPsf):
    pass
