"""Exception types raised by the solvers."""


class NehariLabError(Exception):
    """Base class for all library errors."""


class InvalidExponent(NehariLabError, ValueError):
    """An exponent violated r > 1 (or p > q > 1)."""


class MeshMismatch(NehariLabError, ValueError):
    """Two fields live on different meshes, or a value array has the wrong length."""


class ZeroFieldError(NehariLabError, ValueError):
    """A nonzero field was required."""


class SignError(NehariLabError, ArithmeticError):
    """H_alpha(u) * G_beta(u) is not strictly negative, so the ray projection is undefined."""


class Infeasible(NehariLabError):
    """No admissible point exists for a constrained problem."""


class NonConvergence(NehariLabError):
    """An iterative solver hit its iteration cap.

    The best iterate found so far is kept on ``best`` together with its
    objective value, so callers can still inspect or reuse it.
    """

    def __init__(self, message, best=None, value=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.value = value
        self.iterations = iterations
