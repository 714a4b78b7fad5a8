"""Exception hierarchy.

The CLI maps these onto exit codes: usage/parse problems give 2, numerical
non-convergence gives 3.
"""


class QMeasureError(Exception):
    """Base class for all errors raised by qmeasure."""


class UsageError(QMeasureError, ValueError):
    """Inputs are inconsistent with each other (mismatched spaces, bad times...)."""


class ValidationError(QMeasureError, ValueError):
    """An input object violates its declared invariants."""


class AxiomViolationError(QMeasureError):
    """A decoherence Gram matrix is not positive semidefinite within slack."""


class InvalidWitnessError(QMeasureError):
    """An onto-witness contains a vanishing amplitude."""


class NumericalError(QMeasureError):
    """A quadrature or extrapolation did not reach its tolerance.

    ``diagnostics`` carries whatever the failing routine knew at the time.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class CausticError(NumericalError):
    """A propagator was requested too close to a harmonic-oscillator caustic."""


class HypothesisFailure(QMeasureError):
    """The propagator/initial state cannot reach a requested final point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
