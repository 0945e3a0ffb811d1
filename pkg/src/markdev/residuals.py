"""
Pointwise null summaries and scaled residuals.

Array-level functions work on a stack of functions, shape ``(k, G)``,
so a whole permutation set is scaled in one call; the
:class:`FunctionEstimate` wrappers are thin layers over them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NumericalError, ValidationError
from .pattern import FunctionEstimate, RGrid

__all__ = [
    "EPS_DENOM",
    "ScalingKind",
    "NullDistribution",
    "build_null_distribution",
    "null_from_array",
    "compute_residuals",
    "scale_residuals",
]

EPS_DENOM = 1e-12
QUANTILE_LEVEL = 0.025


class ScalingKind(str, Enum):
    RAW = "raw"
    STUDENTISED = "st"
    QUANTILE = "q"
    DIRECTIONAL_QUANTILE = "qdir"

    @classmethod
    def parse(cls, name) -> ScalingKind:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {
            "studentised": "st", "studentized": "st",
            "quantile": "q",
            "directional-quantile": "qdir", "directional_quantile": "qdir",
        }
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown scaling {name!r}") from None


@dataclass(frozen=True)
class NullDistribution:
    """Pointwise mean, variance and 2.5% quantiles of T(r) under the null.

    ``mean`` holds T0 (analytic, or whatever was supplied); ``variance`` and
    the quantiles come from the simulated functions.
    """

    grid: RGrid
    mean: np.ndarray
    variance: np.ndarray
    q_lower: np.ndarray
    q_upper: np.ndarray
    count: int
    source: str = "simulated"


def _order_k(count: int) -> int:
    return max(1, math.ceil(QUANTILE_LEVEL * count - 1e-9))


def null_from_array(values, t0, grid: RGrid, source: str = "simulated") -> NullDistribution:
    """Null summary from a ``(count, G)`` stack of function values.

    Quantiles are order statistics: the k-th smallest and k-th largest
    value with ``k = ceil(0.025 * count)``; no interpolation.
    """
    T = np.asarray(values, dtype=float)
    if T.ndim != 2 or T.shape[1] != len(grid):
        raise ValidationError(f"incompatible grids: values of shape {T.shape} for {len(grid)} grid points")
    t0 = np.asarray(t0, dtype=float)
    if t0.shape[-1] != len(grid):
        raise ValidationError("incompatible grids: t0 does not match the grid")
    count = T.shape[0]
    if count < 2:
        raise ValidationError("need at least 2 functions for a null distribution")
    if count < 40:
        warnings.warn(f"quantiles unreliable with only {count} functions", stacklevel=2)
    k = _order_k(count)
    part = np.partition(T, (k - 1, count - k), axis=0)
    return NullDistribution(
        grid=grid,
        mean=t0,
        variance=T.var(axis=0, ddof=1),
        q_lower=part[k - 1],
        q_upper=part[count - k],
        count=count,
        source=source,
    )


def build_null_distribution(functions, t0: FunctionEstimate) -> NullDistribution:
    functions = list(functions)
    if not functions:
        raise ValidationError("no functions supplied")
    grid = t0.grid
    for fe in functions:
        if fe.grid != grid:
            raise ValidationError("incompatible grids")
    return null_from_array(np.stack([fe.values for fe in functions]), t0.values, grid)


def scale_residuals(T, t0, null: NullDistribution, scaling, eps: float = EPS_DENOM):
    """Scaled residuals for a stack of functions.

    Parameters
    ----------
    T : array_like, shape (k, G)
    t0 : array_like, shape (G,) or (k, G)
        Null expectation; a per-row version is used for leave-one-out means.
    null : NullDistribution
    scaling : ScalingKind or str

    Returns
    -------
    residuals : ndarray, shape (k, G)
        Masked entries are set to 0.
    mask : ndarray of bool, shape (G,)
        True where the scaling denominator falls below ``eps``.
    """
    scaling = ScalingKind.parse(scaling)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    t0 = np.asarray(t0, dtype=float)
    d = T - t0
    G = T.shape[1]
    if scaling is ScalingKind.RAW:
        return d, np.zeros(G, dtype=bool)
    if scaling is ScalingKind.STUDENTISED:
        denom = np.sqrt(null.variance)
        mask = denom < eps
        out = d / np.where(mask, 1.0, denom)
    elif scaling is ScalingKind.QUANTILE:
        denom = null.q_upper - null.q_lower
        mask = denom < eps
        out = d / np.where(mask, 1.0, denom)
    else:
        up = np.abs(null.q_upper - t0)
        lo = np.abs(null.q_lower - t0)
        small = (up < eps) | (lo < eps)
        mask = small.any(axis=0) if small.ndim == 2 else small
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(d >= 0, d / up, d / lo)
        out = np.where(np.isfinite(out), out, 0.0)
    out[:, mask] = 0.0
    return out, mask


def compute_residuals(t: FunctionEstimate, null: NullDistribution, scaling, eps: float = EPS_DENOM) -> FunctionEstimate:
    """Scaled residual function of ``t`` against ``null``.

    Raises :class:`NumericalError` if every grid point is masked.
    """
    if t.grid != null.grid:
        raise ValidationError("incompatible grids")
    vals, mask = scale_residuals(t.values[None, :], null.mean, null, scaling, eps)
    if mask.all():
        raise NumericalError("degenerate scaling: every grid point has a vanishing denominator")
    return FunctionEstimate(t.grid, vals[0], mask)
