"""Exception types raised by the ionscope library.

The CLI maps these onto exit codes (see ``entry.py``): validation problems
exit with 2, numerical convergence failures with 3.
"""
from __future__ import annotations


class IonscopeError(Exception):
    """Base class for every error raised by ionscope."""


class ConfigError(IonscopeError, ValueError):
    """A configuration or physical parameter is outside its accepted range."""


class DimensionError(IonscopeError, ValueError):
    """Two vectors or a vector and an operator have incompatible dimensions."""


class EmptyBranchError(IonscopeError, ValueError):
    """A projection has (numerically) zero probability, so it cannot be normalized."""

    def __init__(self, message: str, probability: float):
        super().__init__(message)
        self.probability = probability


class TruncationError(IonscopeError, ValueError):
    """A state recipe loses too much weight above the Fock-space cutoff."""


class CompileError(IonscopeError, ValueError):
    """A target cannot be compiled into a pulse schedule."""


class PropagationError(IonscopeError, RuntimeError):
    """Time integration failed to reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate
