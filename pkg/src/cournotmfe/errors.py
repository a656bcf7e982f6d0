"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed or incomplete parameter configuration input."""


class InvalidParamsError(ValueError):
    """Model parameters violate a hard admissibility constraint."""


class HeavyTailError(ArithmeticError):
    """Stationary first moment diverges (tail exponent >= -1)."""


class DivergentMomentError(ArithmeticError):
    """A requested higher moment diverges under the stationary law."""


class BracketError(RuntimeError):
    """A root bracket that should exist by construction could not be found."""


class ThresholdSolveError(RuntimeError):
    """Free-boundary system did not converge; carries solver diagnostics."""

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


class FixedPointError(RuntimeError):
    """Equilibrium fixed-point iteration failed; carries the iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []
