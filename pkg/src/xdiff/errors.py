"""Exception types shared across the package."""

from __future__ import annotations


class NonConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget.

    Carries the last iterate and residual so callers can decide whether
    to shrink the time step and retry.
    """

    def __init__(self, message: str, residual: float, last_iterate=None, iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.last_iterate = last_iterate
        self.iterations = iterations


class NewtonNonConvergenceError(NonConvergenceError):
    """The outer Newton solve of an implicit step failed to converge."""


class NumericalError(RuntimeError):
    """A numerical operation broke down (singular matrix, solver failure)."""


class EntropyViolationError(RuntimeError):
    """A certified structural inequality failed beyond its slack.

    Distinguished from :class:`NumericalError` so batch drivers can map
    it to the "scientific assertion failed" exit code.
    """
