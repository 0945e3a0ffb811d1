"""Global deviation measures over an interval of distances (discretised)."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import NumericalError, ValidationError
from .pattern import FunctionEstimate, RGrid

__all__ = ["DeviationKind", "deviation_measure", "deviations"]


class DeviationKind(str, Enum):
    SUPREMUM = "sup"
    INTEGRAL = "int"

    @classmethod
    def parse(cls, name) -> DeviationKind:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"supremum": "sup", "max": "sup", "integral": "int", "integral-l2": "int", "l2": "int"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown deviation measure {name!r}") from None


def deviations(residuals, index, mask, kind, step: float) -> np.ndarray:
    """Deviation of every row of a ``(k, G)`` residual stack.

    ``index`` selects the interval's grid columns; masked columns are dropped.
    Supremum: max |d|. Integral: sum d^2 * step.
    """
    kind = DeviationKind.parse(kind)
    D = np.atleast_2d(residuals)
    index = np.asarray(index)
    if mask is not None:
        index = index[~np.asarray(mask)[index]]
    if index.size == 0:
        raise NumericalError("empty interval: no unmasked grid points")
    sub = D[:, index]
    if kind is DeviationKind.SUPREMUM:
        return np.abs(sub).max(axis=1)
    return np.einsum("ij,ij->i", sub, sub) * step


def deviation_measure(residuals: FunctionEstimate, interval: RGrid, kind) -> float:
    """Scalar deviation of one residual function over ``interval``."""
    idx = residuals.grid.indices_of(interval)
    return float(deviations(residuals.values[None, :], idx, residuals.mask, kind, residuals.grid.step)[0])
