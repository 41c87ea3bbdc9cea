"""Exception types shared across powerlab.

Validation problems subclass :class:`ValueError`; numerical or sampling
failures subclass :class:`RuntimeError`. The CLI maps the first family to
exit code 2 and the second to exit code 3.
"""


class GraphError(ValueError):
    """Malformed graph input (bad endpoint, duplicate edge, bad label)."""


class DisconnectedGraphError(GraphError):
    """A metric operation was asked for on a disconnected graph."""

    def __init__(self, message, representatives=()):
        super().__init__(message)
        self.representatives = tuple(representatives)


class HypothesisError(ValueError):
    """A precondition of an exact identity (regularity, girth) does not hold."""


class SizeGuardError(ValueError):
    """The requested enumeration or construction exceeds its size guard."""


class GenerationError(RuntimeError):
    """A random generator exhausted its restart budget."""


class ConvergenceError(RuntimeError):
    """An iterative eigensolver failed to meet its residual contract."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = tuple(residuals)
