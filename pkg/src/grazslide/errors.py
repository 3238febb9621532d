"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without
string matching: 1 for numeric failures, 2 for domain/validation failures.
"""


class GrazslideError(Exception):
    exit_code = 1


class NumericError(GrazslideError):
    exit_code = 1


class DomainError(GrazslideError):
    exit_code = 2


class SingularCycleError(NumericError):
    """``I - M_X`` is (numerically) singular, so the cycle is not unique or absent."""

    def __init__(self, word, det, cond):
        self.word = word
        self.det = det
        self.cond = cond
        super().__init__(
            f"cycle not unique/existent for word {word}: "
            f"det(I - M_X) = {det:.3e}, cond = {cond:.3e}"
        )


class EigenConditionError(DomainError):
    """The spectrum of ``M_X`` violates a required inequality."""

    def __init__(self, failed, eigenvalues):
        self.failed = failed
        self.eigenvalues = eigenvalues
        super().__init__(f"eigenvalue condition failed: {failed} (eigenvalues {eigenvalues})")


class DegenerateError(NumericError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message, last=None, residual=None):
        self.last = last
        self.residual = residual
        super().__init__(message)


class SlidingError(NumericError):
    pass


class EscapeError(NumericError):
    pass


class MisidentifiedOrbitError(NumericError):
    def __init__(self, message, observed=None, expected=None):
        self.observed = observed
        self.expected = expected
        super().__init__(message)


class NotFittableError(DomainError):
    pass


class GenericityError(NumericError):
    pass
