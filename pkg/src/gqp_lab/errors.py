"""Exception types; each maps to one CLI exit code."""


class GqpError(Exception):
    exit_code = 1


class InvalidInputError(GqpError, ValueError):
    exit_code = 1


class OutOfDomainError(InvalidInputError):
    pass


class IrregularPointError(InvalidInputError):
    pass


class DiscretizationError(InvalidInputError):
    """Grid too coarse for the features it has to resolve."""


class DegreeIndeterminateError(GqpError):
    """Integer rounding of a degree is ambiguous (truncation or resolution too small)."""

    exit_code = 2


class NonConvergedError(GqpError):
    exit_code = 2


class InvariantViolation(GqpError):
    """A mathematically guaranteed relation failed beyond tolerance: a bug, not bad luck."""

    exit_code = 3
