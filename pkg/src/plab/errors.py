"""Shared exception types."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """Evaluation at a point where the map is singular (e.g. DA at 0 for p < 2)."""


class ResolutionError(RuntimeError):
    """Too few grid nodes to evaluate a ball average / dyadic scale reliably."""


class DegenerateZeroError(RuntimeError):
    """A field vanishes identically on the ball, so degeneracy ratios are 0/0."""


class ParameterError(ValueError):
    """Smoothness parameters violate the admissibility conditions."""


class SolverFailure(RuntimeError):
    """Nonlinear solve did not reach the requested residual."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history


class NumericalBreakdown(SolverFailure):
    """NaN or Inf detected during a solve."""


class InconsistencyError(RuntimeError):
    """Rotated flux field is not curl-free enough to admit a stream function."""


class SkippedBall(RuntimeError):
    """Ball excluded from a comparison check (degenerate local state)."""


class ConfigError(ValueError):
    """Experiment configuration is malformed; message names the offending field."""
