"""Exception hierarchy for plpcontrol.

Errors with custom constructors define ``__reduce__`` and pickle with their
attributes.
"""
from __future__ import annotations

from typing import Optional


class PlpError(RuntimeError):
    """Base class for domain failures."""


class ConfigError(PlpError, ValueError):
    """Invalid experiment configuration."""


class NonStochasticMatrixError(PlpError, ValueError):
    """A transition matrix is not row-stochastic."""


class ReducibleChainError(PlpError, ValueError):
    """The pattern engine needs an irreducible chain."""


class DivergenceError(PlpError):
    def __init__(self, step: int, message: Optional[str] = None) -> None:
        self.step = step
        super().__init__(message or f"State became non-finite at step {step}")

    def __reduce__(self):
        return self.__class__, (self.step, str(self))


class ModelMismatchError(PlpError):
    def __init__(self, step: Optional[int] = None, message: Optional[str] = None) -> None:
        self.step = step
        super().__init__(message or f"No mode explains the transition observed at step {step}")

    def __reduce__(self):
        return self.__class__, (self.step, str(self))


class DegenerateCollectionError(PlpError):
    def __init__(self, message: str, condition: float = float("inf")) -> None:
        self.reason = message
        self.condition = condition
        super().__init__(f"{message} (condition number {condition:.3e})")

    def __reduce__(self):
        return self.__class__, (self.reason, self.condition)


class NumericalFailureError(PlpError):
    """A solve produced values outside their admissible range."""


class InfeasibleLocalityError(PlpError):
    def __init__(self, column: int, residual: float) -> None:
        self.column = column
        self.residual = residual
        super().__init__(f"Locality constraints are infeasible for disturbance column {column} (residual {residual:.3e})")

    def __reduce__(self):
        return self.__class__, (self.column, self.residual)


class NotPersistentlyExcitingError(PlpError):
    def __init__(self, order: int, rank: int, required: int) -> None:
        self.order = order
        self.rank = rank
        self.required = required
        super().__init__(f"Data is not persistently exciting of order {order}: rank {rank} < {required}")

    def __reduce__(self):
        return self.__class__, (self.order, self.rank, self.required)


class UncontrollableModeError(PlpError):
    def __init__(self, mode: int) -> None:
        self.mode = mode
        super().__init__(f"Mode {mode} has neither stored data nor a model to synthesize from")

    def __reduce__(self):
        return self.__class__, (self.mode,)
